#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "condlab/environment.hpp"
#include "condlab/rng.hpp"

namespace condlab {

// An integer trajectory X_0, X_1, ..., X_n under the quenched law of the
// environment it was produced from.
struct Path {
  long start = 0;
  std::vector<long> sites;  // sites[0] == start, size == n()+1
  std::string env_id;
  std::uint64_t seed = 0;
  long n() const { return static_cast<long>(sites.size()) - 1; }
};

struct RangeStats {
  long r_plus = 0;   // max_{s<=m} (X_{base+s} - X_base) >= 0
  long r_minus = 0;  // min_{s<=m} (X_{base+s} - X_base) <= 0
  long r = 0;        // r_plus - r_minus
  long base = 0;
  long horizon = 0;
};

// Thrown when a trajectory reaches the environment's safety margin; carries
// the partial path so the caller can widen the window and retry.
class MarginAbort : public std::runtime_error {
 public:
  explicit MarginAbort(Path partial)
      : std::runtime_error("walk reached the window safety margin at step " +
                           std::to_string(partial.n())),
        partial_path(std::move(partial)) {}
  Path partial_path;
};

// p(x, y) = omega_{x,y} / C_x; zero beyond the truncation radius.
double transition_probability(const Environment& env, long x, long y);

// Constant-time jump sampling: one alias table per visited site, built lazily
// and cached (walks revisit sites heavily). Correctness does not depend on
// cache hits; the cache is cleared when it outgrows its bound.
class JumpSampler {
 public:
  explicit JumpSampler(const Environment& env, std::size_t max_cached_sites = 1 << 16);

  long step(long x, rng::Stream& rs);

  const Environment& environment() const { return *env_; }

 private:
  struct Table {
    std::vector<double> accept;  // acceptance threshold per slot
    std::vector<int> alias;      // fallback slot
  };
  const Table& table_for(long x);

  const Environment* env_;
  std::size_t cache_bound_;
  std::unordered_map<long, Table> cache_;
};

struct SimulateOptions {
  // Entry requirement: distance from start to the nearest interior edge must
  // be at least margin_c * sqrt(n) * log(n). Zero disables the check; the
  // hard abort at the interior boundary always stands.
  double margin_c = 6.0;
};

// The entry requirement above, exposed for drivers that run their own walk
// loops; throws std::invalid_argument when the window is too tight.
void require_entry_margin(const Environment& env, long start, long n_steps, double margin_c);

Path simulate(const Environment& env, long start, long n_steps, std::uint64_t seed,
              const SimulateOptions& opts = {});
Path simulate(JumpSampler& sampler, long start, long n_steps, std::uint64_t seed,
              const SimulateOptions& opts = {});

RangeStats range_stats(const Path& path, long base, long horizon);

// Diffusively rescaled piecewise-linear path:
//   Z(k/n) = X_k / (sigma sqrt(n)), linear between knots.
class RescaledPath {
 public:
  RescaledPath(const Path& path, long n, double sigma);
  double operator()(double t) const;
  long n() const { return n_; }
  double sigma() const { return sigma_; }
  double t_max() const { return static_cast<double>(path_->n()) / static_cast<double>(n_); }

 private:
  const Path* path_;
  long n_;
  double sigma_;
  double scale_;  // 1 / (sigma sqrt(n))
};

RescaledPath rescale(const Path& path, long n, double sigma);

// Monte Carlo estimate of P[some jump within the first ceil(h_frac*n) steps
// has |X_{k+1}-X_k| >= n^nu].
double long_jump_frequency(const Environment& env, long start, long n, double nu,
                           double h_frac, long mc_samples, std::uint64_t seed,
                           int workers = 1);

}  // namespace condlab
