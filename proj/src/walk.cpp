#include "condlab/walk.hpp"

#include <algorithm>
#include <cmath>

#include "condlab/parallel.hpp"

namespace condlab {

double transition_probability(const Environment& env, long x, long y) {
  const long d = (y > x) ? y - x : x - y;
  if (d > env.radius() || d == 0) return 0.0;
  return env.conductance(x, y) / env.total_conductance(x);
}

JumpSampler::JumpSampler(const Environment& env, std::size_t max_cached_sites)
    : env_(&env), cache_bound_(max_cached_sites) {}

const JumpSampler::Table& JumpSampler::table_for(long x) {
  auto it = cache_.find(x);
  if (it != cache_.end()) return it->second;
  if (cache_.size() >= cache_bound_) cache_.clear();

  const int R = env_->radius();
  const int K = 2 * R;  // slots: displacements -R..-1, 1..R
  std::vector<double> p(static_cast<std::size_t>(K), 0.0);
  double total = 0.0;
  for (int d = 1; d <= R; ++d) {
    const double cl = env_->conductance(x, x - d);
    const double cr = env_->conductance(x, x + d);
    p[static_cast<std::size_t>(R - d)] = cl;
    p[static_cast<std::size_t>(R + d - 1)] = cr;
    total += cl + cr;
  }
  if (total <= 0) throw std::runtime_error("jump sampler: zero total conductance at site " + std::to_string(x));

  // Walker alias construction on K slots.
  Table t;
  t.accept.assign(static_cast<std::size_t>(K), 1.0);
  t.alias.assign(static_cast<std::size_t>(K), 0);
  std::vector<double> scaled(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) scaled[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i)] * K / total;
  std::vector<int> small, large;
  small.reserve(static_cast<std::size_t>(K));
  large.reserve(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) (scaled[static_cast<std::size_t>(i)] < 1.0 ? small : large).push_back(i);
  while (!small.empty() && !large.empty()) {
    const int s = small.back();
    small.pop_back();
    const int l = large.back();
    t.accept[static_cast<std::size_t>(s)] = scaled[static_cast<std::size_t>(s)];
    t.alias[static_cast<std::size_t>(s)] = l;
    scaled[static_cast<std::size_t>(l)] -= 1.0 - scaled[static_cast<std::size_t>(s)];
    if (scaled[static_cast<std::size_t>(l)] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (int s : small) t.accept[static_cast<std::size_t>(s)] = 1.0;
  for (int l : large) t.accept[static_cast<std::size_t>(l)] = 1.0;

  return cache_.emplace(x, std::move(t)).first->second;
}

long JumpSampler::step(long x, rng::Stream& rs) {
  const Table& t = table_for(x);
  const int K = static_cast<int>(t.accept.size());
  const double v = rs.next_unit() * K;
  int slot = static_cast<int>(v);
  if (slot >= K) slot = K - 1;
  const double frac = v - slot;
  if (frac >= t.accept[static_cast<std::size_t>(slot)]) slot = t.alias[static_cast<std::size_t>(slot)];
  const int R = env_->radius();
  const int d = (slot < R) ? slot - R : slot - R + 1;
  return x + d;
}

void require_entry_margin(const Environment& env, long start, long n_steps, double margin_c) {
  const long int_lo = env.x_min() + env.radius();
  const long int_hi = env.x_max() - env.radius();
  if (start < int_lo || start > int_hi)
    throw std::invalid_argument("simulate: start is not interior to the window");
  if (margin_c > 0 && n_steps >= 2) {
    const double need =
        margin_c * std::sqrt(static_cast<double>(n_steps)) * std::log(static_cast<double>(n_steps));
    const double have = static_cast<double>(std::min(start - int_lo, int_hi - start));
    if (have < need)
      throw std::invalid_argument(
          "simulate: window margin " + std::to_string(static_cast<long>(have)) +
          " below the policy requirement " + std::to_string(static_cast<long>(need)) +
          " (margin_c * sqrt(n) * log n)");
  }
}

Path simulate(JumpSampler& sampler, long start, long n_steps, std::uint64_t seed,
              const SimulateOptions& opts) {
  const Environment& env = sampler.environment();
  require_entry_margin(env, start, n_steps, opts.margin_c);
  const long int_lo = env.x_min() + env.radius();
  const long int_hi = env.x_max() - env.radius();

  Path p;
  p.start = start;
  p.seed = seed;
  p.env_id = env.id();
  p.sites.reserve(static_cast<std::size_t>(n_steps) + 1);
  p.sites.push_back(start);
  rng::Stream rs(seed);
  long x = start;
  for (long k = 0; k < n_steps; ++k) {
    x = sampler.step(x, rs);
    if (x < int_lo || x > int_hi) throw MarginAbort(std::move(p));
    p.sites.push_back(x);
  }
  return p;
}

Path simulate(const Environment& env, long start, long n_steps, std::uint64_t seed,
              const SimulateOptions& opts) {
  JumpSampler sampler(env);
  return simulate(sampler, start, n_steps, seed, opts);
}

RangeStats range_stats(const Path& path, long base, long horizon) {
  if (base < 0 || base + horizon > path.n())
    throw std::out_of_range("range_stats: base + horizon exceeds the path length");
  const long x0 = path.sites[static_cast<std::size_t>(base)];
  RangeStats rs;
  rs.base = base;
  rs.horizon = horizon;
  for (long s = 0; s <= horizon; ++s) {
    const long d = path.sites[static_cast<std::size_t>(base + s)] - x0;
    rs.r_plus = std::max(rs.r_plus, d);
    rs.r_minus = std::min(rs.r_minus, d);
  }
  rs.r = rs.r_plus - rs.r_minus;
  return rs;
}

RescaledPath::RescaledPath(const Path& path, long n, double sigma)
    : path_(&path), n_(n), sigma_(sigma) {
  if (sigma <= 0) throw std::invalid_argument("rescale: sigma must be positive");
  if (n < 1) throw std::invalid_argument("rescale: n must be >= 1");
  scale_ = 1.0 / (sigma * std::sqrt(static_cast<double>(n)));
}

double RescaledPath::operator()(double t) const {
  if (t < 0) throw std::out_of_range("rescaled path evaluated at negative time");
  const double nt = static_cast<double>(n_) * t;
  const long len = path_->n();
  long k = static_cast<long>(std::floor(nt));
  if (k >= len) {
    if (nt > static_cast<double>(len) + 1e-9)
      throw std::out_of_range("rescaled path evaluated beyond the recorded horizon");
    return static_cast<double>(path_->sites[static_cast<std::size_t>(len)]) * scale_;
  }
  const double frac = nt - static_cast<double>(k);
  const double xk = static_cast<double>(path_->sites[static_cast<std::size_t>(k)]);
  const double xk1 = static_cast<double>(path_->sites[static_cast<std::size_t>(k + 1)]);
  return (xk + frac * (xk1 - xk)) * scale_;
}

RescaledPath rescale(const Path& path, long n, double sigma) {
  return RescaledPath(path, n, sigma);
}

double long_jump_frequency(const Environment& env, long start, long n, double nu,
                           double h_frac, long mc_samples, std::uint64_t seed, int workers) {
  if (nu <= 0 || nu >= 0.5) throw std::invalid_argument("long_jump_frequency: nu must lie in (0, 1/2)");
  const double cut = std::pow(static_cast<double>(n), nu);
  const long horizon = static_cast<long>(std::ceil(h_frac * static_cast<double>(n)));
  std::vector<unsigned char> hit(static_cast<std::size_t>(mc_samples), 0);
  parallel_for(static_cast<std::size_t>(mc_samples), workers, [&](std::size_t i) {
    JumpSampler sampler(env);
    rng::Stream rs(rng::derive(seed, "walk.longjump", i));
    long x = start;
    const long int_lo = env.x_min() + env.radius();
    const long int_hi = env.x_max() - env.radius();
    for (long k = 0; k < horizon; ++k) {
      const long y = sampler.step(x, rs);
      const long jump = (y > x) ? y - x : x - y;
      if (static_cast<double>(jump) >= cut) {
        hit[i] = 1;
        return;
      }
      if (y < int_lo || y > int_hi) {
        Path partial;
        partial.start = start;
        throw MarginAbort(std::move(partial));
      }
      x = y;
    }
  });
  long count = 0;
  for (unsigned char h : hit) count += h;
  return static_cast<double>(count) / static_cast<double>(mc_samples);
}

}  // namespace condlab
