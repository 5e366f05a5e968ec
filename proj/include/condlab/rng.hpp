#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace condlab::rng {

// Counter-based pseudo-random streams. Every value is a pure function of
// (key, counter), so any work item can own an independent stream derived from
// a master seed and its indices; results never depend on scheduling or on how
// work is split across threads.

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// i-th output of the stream with the given key.
constexpr std::uint64_t at(std::uint64_t key, std::uint64_t i) {
  return mix(key + (i + 1) * kGamma);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

// Zig-zag encoding so signed indices can enter key derivation.
constexpr std::uint64_t zz(long long v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

// Labeled sub-stream keys; the chain is order-sensitive in the label and
// indices, so distinct components and work items get unrelated streams.
constexpr std::uint64_t derive(std::uint64_t master, std::string_view label) {
  return mix(master ^ (fnv1a(label) + kGamma));
}
constexpr std::uint64_t derive(std::uint64_t master, std::string_view label, std::uint64_t i0) {
  return mix(derive(master, label) + mix(i0 + kGamma));
}
constexpr std::uint64_t derive(std::uint64_t master, std::string_view label, std::uint64_t i0,
                               std::uint64_t i1) {
  return mix(derive(master, label, i0) + mix(i1 + 2 * kGamma));
}
constexpr std::uint64_t derive(std::uint64_t master, std::string_view label, std::uint64_t i0,
                               std::uint64_t i1, std::uint64_t i2) {
  return mix(derive(master, label, i0, i1) + mix(i2 + 3 * kGamma));
}

class Stream {
 public:
  explicit Stream(std::uint64_t key, std::uint64_t start = 0) : key_(key), i_(start) {}

  std::uint64_t next_u64() { return at(key_, i_++); }

  // Uniform on [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); safe as a log argument.
  double next_unit_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit_open();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.28318530717958647692528676655900577 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(next_unit() * static_cast<double>(n)) % n;
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t position() const { return i_; }

 private:
  std::uint64_t key_;
  std::uint64_t i_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace condlab::rng
