#include "condlab/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "condlab/parallel.hpp"

namespace condlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Grid points per unit time, snapping dt to 1/M so that windows of the path
// metric and the range statistics end exactly on knots.
long grid_per_unit(double dt) {
  require(dt > 0, "grid step must be positive");
  const long M = std::lround(1.0 / dt);
  require(M >= 1, "grid step must be at most 1");
  return M;
}

double term_weight(int n) { return std::ldexp(1.0, -n + 1); }  // 2^{-n+1}

// Remaining weight of metric terms n..kMetricTerms: 2^{-n+2} - 2^{-kMetricTerms+1}.
double remaining_weight(int n) { return std::ldexp(1.0, -n + 2) - term_weight(kMetricTerms); }

}  // namespace

double BrownianSample::at(double t) const {
  require(t >= 0 && t <= horizon() + 1e-12, "evaluation time outside the sampled horizon");
  const double u = t / dt;
  const auto k = static_cast<std::size_t>(u);
  if (k + 1 >= values.size()) return values.back();
  const double frac = u - static_cast<double>(k);
  return values[k] + frac * (values[k + 1] - values[k]);
}

void fill_brownian(std::vector<double>& values, double dt, std::size_t steps, rng::Stream& g) {
  values.resize(steps + 1);
  values[0] = 0.0;
  const double sd = std::sqrt(dt);
  for (std::size_t k = 0; k < steps; ++k) values[k + 1] = values[k] + sd * g.next_gaussian();
}

BrownianSample sample_brownian(double t_max, double dt, std::uint64_t seed) {
  require(t_max > 0, "horizon must be positive");
  const long M = grid_per_unit(dt);
  BrownianSample s;
  s.dt = 1.0 / static_cast<double>(M);
  s.seed = seed;
  const auto steps = static_cast<std::size_t>(std::ceil(t_max * static_cast<double>(M) - 1e-9));
  rng::Stream g(rng::derive(seed, "brownian"));
  fill_brownian(s.values, s.dt, steps, g);
  return s;
}

namespace {

// Shared metric evaluation: |diff(k)| over grid indices, windows ending at
// n*M for n = 1..kMetricTerms.
template <typename Diff>
double metric_value(Diff&& diff, long M, std::size_t limit) {
  require(static_cast<std::size_t>(kMetricTerms) * static_cast<std::size_t>(M) < limit,
          "paths too short for the metric horizon");
  double total = 0.0, run = 0.0;
  std::size_t k = 0;
  for (int n = 1; n <= kMetricTerms; ++n) {
    const auto end = static_cast<std::size_t>(n) * static_cast<std::size_t>(M);
    for (; k <= end; ++k) run = std::max(run, std::abs(diff(k)));
    total += term_weight(n) * std::min(1.0, run);
  }
  return total;
}

// Early-exit decision for metric_value(...) > eps.
template <typename Diff>
bool metric_exceeds(Diff&& diff, long M, std::size_t limit, double eps) {
  require(static_cast<std::size_t>(kMetricTerms) * static_cast<std::size_t>(M) < limit,
          "paths too short for the metric horizon");
  double fixed = 0.0, run = 0.0;
  std::size_t k = 0;
  for (int n = 1; n <= kMetricTerms; ++n) {
    const auto end = static_cast<std::size_t>(n) * static_cast<std::size_t>(M);
    for (; k <= end; ++k) {
      const double d = std::abs(diff(k));
      if (d > run) {
        run = d;
        if (run >= 1.0) return fixed + remaining_weight(n) > eps;  // all later terms saturate
      }
    }
    // Every later window's sup is at least `run`.
    if (fixed + std::min(1.0, run) * remaining_weight(n) > eps) return true;
    fixed += term_weight(n) * std::min(1.0, run);
    // Later terms can add at most remaining_weight(n + 1).
    if (n < kMetricTerms && fixed + remaining_weight(n + 1) <= eps) return false;
  }
  return fixed > eps;
}

}  // namespace

double path_distance(const std::vector<double>& f, const std::vector<double>& g, double dt) {
  require(f.size() == g.size(), "paths must share one grid");
  const long M = grid_per_unit(dt);
  return metric_value([&](std::size_t k) { return f[k] - g[k]; }, M, f.size());
}

double path_distance(const BrownianSample& f, const BrownianSample& g) {
  require(f.dt == g.dt, "paths must share one grid");
  require(f.values.size() == g.values.size(), "paths must share one grid");
  return path_distance(f.values, g.values, f.dt);
}

double shifted_distance(const std::vector<double>& f, double dt, std::size_t shift) {
  const long M = grid_per_unit(dt);
  require(shift < f.size(), "shift outside the sampled horizon");
  return metric_value([&](std::size_t k) { return f[k + shift] - f[k]; }, M, f.size() - shift);
}

bool shifted_distance_exceeds(const std::vector<double>& f, double dt, std::size_t shift,
                              double eps) {
  const long M = grid_per_unit(dt);
  require(shift < f.size(), "shift outside the sampled horizon");
  return metric_exceeds([&](std::size_t k) { return f[k + shift] - f[k]; }, M, f.size() - shift,
                        eps);
}

namespace {

// Shared grid-search core for both thresholds. `counts(x)` returns the sum of
// empirical probabilities at grid point x, nondecreasing in x; `se(x)` its
// binomial standard error. Finds the largest grid point with counts <= target.
struct GridPick {
  double value = 0;
  double confidence = 0;
  bool bottomed = false;
};

template <typename Sum, typename Se>
GridPick grid_search(double target, Sum&& sum, Se&& se) {
  constexpr double kFloor = 1e-9;
  GridPick out;
  double best = -1.0;
  for (double x = 1.0; x >= kFloor; x *= kThresholdGridRatio) {
    if (sum(x) <= target) {
      best = x;
      break;
    }
  }
  if (best < 0) {
    out.bottomed = true;
    best = kFloor;
  }
  out.value = best;

  const double band = 2.0 * se(best);
  auto largest_with = [&](double t) {
    for (double x = 1.0; x >= kFloor; x *= kThresholdGridRatio)
      if (sum(x) <= t) return x;
    return kFloor;
  };
  const double hi = largest_with(target + band);
  const double lo = largest_with(std::max(0.0, target - band));
  const double half_gap = best * (1.0 / kThresholdGridRatio - 1.0) / 2.0;
  out.confidence = half_gap + std::max(hi - best, best - lo);
  return out;
}

double sorted_fraction_below(const std::vector<double>& sorted, double x) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

double sorted_fraction_at_most(const std::vector<double>& sorted, double x) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

double binom_var(double p, double n) { return p * (1.0 - p) / n; }

}  // namespace

ThresholdEstimate estimate_delta_eps(double epsilon, long mc_samples, double dt,
                                     std::uint64_t seed) {
  require(epsilon > 0, "epsilon must be positive");
  require(mc_samples >= 100, "too few Monte Carlo samples");
  const long H = std::max<long>(1, std::lround(0.5 / dt));  // knots per half unit
  const double step = 0.5 / static_cast<double>(H);

  const auto N = static_cast<std::size_t>(mc_samples);
  // Per-sample statistics: ranges over [0,1/2], [1/2,1], [1,3/2]; max and
  // |min| over [0,1].
  std::vector<std::vector<double>> stat(5, std::vector<double>(N));
  const int workers = static_cast<int>(std::thread::hardware_concurrency());
  parallel_for(N, workers, [&](std::size_t i) {
    thread_local std::vector<double> w;
    rng::Stream g(rng::derive(seed, "ref.delta", i));
    fill_brownian(w, step, static_cast<std::size_t>(3 * H), g);
    for (int block = 0; block < 3; ++block) {
      double mx = -kInf, mn = kInf;
      for (long k = block * H; k <= (block + 1) * H; ++k) {
        mx = std::max(mx, w[static_cast<std::size_t>(k)]);
        mn = std::min(mn, w[static_cast<std::size_t>(k)]);
      }
      stat[static_cast<std::size_t>(block)][i] = mx - mn;
    }
    double mx = 0, mn = 0;
    for (long k = 0; k <= 2 * H; ++k) {
      mx = std::max(mx, w[static_cast<std::size_t>(k)]);
      mn = std::min(mn, w[static_cast<std::size_t>(k)]);
    }
    stat[3][i] = mx;
    stat[4][i] = -mn;
  });
  for (auto& s : stat) std::sort(s.begin(), s.end());

  const double nn = static_cast<double>(N);
  auto sum5 = [&](double x) {
    double s = 0;
    for (const auto& arr : stat) s += sorted_fraction_below(arr, x);
    return s;
  };
  auto se5 = [&](double x) {
    double v = 0;
    for (const auto& arr : stat) v += binom_var(sorted_fraction_below(arr, x), nn);
    return std::sqrt(v);
  };
  const GridPick pick = grid_search(epsilon / 2.0, sum5, se5);

  ThresholdEstimate est;
  est.epsilon = epsilon;
  est.value = pick.value;
  est.confidence = pick.confidence;
  est.bottomed = pick.bottomed;
  est.mc_samples = mc_samples;
  est.dt = step;
  return est;
}

ThresholdEstimate estimate_h_eps(double epsilon, long mc_samples, double dt, std::uint64_t seed) {
  require(epsilon > 0, "epsilon must be positive");
  require(mc_samples >= 100, "too few Monte Carlo samples");
  const long M = grid_per_unit(dt);
  const double step = 1.0 / static_cast<double>(M);
  const auto steps = static_cast<std::size_t>(M) * static_cast<std::size_t>(kMetricTerms + 1);

  const auto N = static_cast<std::size_t>(mc_samples);
  // Per-sample first-exceedance epochs: of |W(s)| > eps for s <= 1, and of
  // d(theta_s W, W) > eps along the shift lattice s = k*step <= 1.
  std::vector<double> t_first(N), s_first(N);
  const int workers = static_cast<int>(std::thread::hardware_concurrency());
  parallel_for(N, workers, [&](std::size_t i) {
    thread_local std::vector<double> w;
    rng::Stream g(rng::derive(seed, "ref.h", i));
    fill_brownian(w, step, steps, g);
    double tf = kInf;
    for (long k = 1; k <= M; ++k)
      if (std::abs(w[static_cast<std::size_t>(k)]) > epsilon) {
        tf = static_cast<double>(k) * step;
        break;
      }
    double sf = kInf;
    for (long k = 1; k <= M; ++k)
      if (shifted_distance_exceeds(w, step, static_cast<std::size_t>(k), epsilon)) {
        sf = static_cast<double>(k) * step;
        break;
      }
    t_first[i] = tf;
    s_first[i] = sf;
  });
  std::sort(t_first.begin(), t_first.end());
  std::sort(s_first.begin(), s_first.end());

  const double nn = static_cast<double>(N);
  auto sum2 = [&](double h) {
    return sorted_fraction_at_most(t_first, h) + sorted_fraction_at_most(s_first, h);
  };
  auto se2 = [&](double h) {
    return std::sqrt(binom_var(sorted_fraction_at_most(t_first, h), nn) +
                     binom_var(sorted_fraction_at_most(s_first, h), nn));
  };
  const GridPick pick = grid_search(epsilon / 2.0, sum2, se2);

  ThresholdEstimate est;
  est.epsilon = epsilon;
  est.value = pick.value;
  est.confidence = pick.confidence;
  // A pick below the first lattice shift means even the smallest observable
  // shift exceeds too often: the scan carries no shift evidence at this dt.
  est.bottomed = pick.bottomed || pick.value < step;
  est.mc_samples = mc_samples;
  est.dt = step;
  return est;
}

EpsilonThresholds estimate_thresholds(double epsilon, long mc_samples, double dt,
                                      std::uint64_t seed) {
  const ThresholdEstimate d = estimate_delta_eps(epsilon, mc_samples, dt, seed);
  const ThresholdEstimate h = estimate_h_eps(epsilon, mc_samples, dt, seed);
  EpsilonThresholds out;
  out.epsilon = epsilon;
  out.delta_eps = d.value;
  out.delta_confidence = d.confidence;
  out.delta_bottomed = d.bottomed;
  out.h_eps = h.value;
  out.h_confidence = h.confidence;
  out.h_bottomed = h.bottomed;
  out.mc_samples = mc_samples;
  out.dt = dt;
  return out;
}

void save_thresholds(const std::vector<EpsilonThresholds>& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open threshold table for writing: " + path);
  out << "# epsilon delta_eps delta_conf delta_bottomed h_eps h_conf h_bottomed mc_samples dt\n";
  char line[512];
  for (const auto& t : table) {
    std::snprintf(line, sizeof line, "%.17g %.17g %.17g %d %.17g %.17g %d %ld %.17g\n", t.epsilon,
                  t.delta_eps, t.delta_confidence, t.delta_bottomed ? 1 : 0, t.h_eps,
                  t.h_confidence, t.h_bottomed ? 1 : 0, t.mc_samples, t.dt);
    out << line;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<EpsilonThresholds> load_thresholds(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open threshold table: " + path);
  std::vector<EpsilonThresholds> table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    EpsilonThresholds t;
    int db = 0, hb = 0;
    if (!(row >> t.epsilon >> t.delta_eps >> t.delta_confidence >> db >> t.h_eps >>
          t.h_confidence >> hb >> t.mc_samples >> t.dt))
      throw std::runtime_error("malformed threshold table row: " + line);
    t.delta_bottomed = db != 0;
    t.h_bottomed = hb != 0;
    table.push_back(t);
  }
  return table;
}

PathSummary summarize(const std::vector<double>& w, double dt) {
  const long M = grid_per_unit(dt);
  require(w.size() > static_cast<std::size_t>(M), "path does not cover [0, 1]");
  PathSummary s;
  s.end = w[static_cast<std::size_t>(M)];
  for (long k = 0; k <= M; ++k) {
    const double v = w[static_cast<std::size_t>(k)];
    s.sup_pos = std::max(s.sup_pos, v);
    s.inf_neg = std::min(s.inf_neg, v);
    const double trap = (k == 0 || k == M) ? 0.5 : 1.0;
    s.int_sq += trap * v * v * dt;
  }
  s.sup_abs = std::max(s.sup_pos, -s.inf_neg);
  return s;
}

double functional_value(int id, const PathSummary& s) {
  switch (id) {
    case 0:
      return 1.0;
    case 1:
      return std::min(1.0, s.sup_abs);
    case 2:
      return std::cos(s.end);
    case 3:
      return std::min(1.0, std::max(0.0, s.end));
    case 4:
      return std::exp(-s.int_sq);
    default:
      throw std::invalid_argument("unknown functional id");
  }
}

std::string functional_name(int id) {
  switch (id) {
    case 0:
      return "const";
    case 1:
      return "clipped-sup-abs";
    case 2:
      return "cos-endpoint";
    case 3:
      return "clipped-endpoint";
    case 4:
      return "exp-neg-energy";
    default:
      throw std::invalid_argument("unknown functional id");
  }
}

int functional_id(const std::string& name) {
  for (int id = 0; id < kFunctionalCount; ++id)
    if (functional_name(id) == name) return id;
  return -1;
}

bool set_indicator(int id, const PathSummary& s, const SetParams& p) {
  switch (id) {
    case 0:
      return s.sup_abs <= p.r;
    case 1:
      return !(s.sup_abs <= p.r);
    case 2:
      return s.end <= p.q;
    default:
      throw std::invalid_argument("unknown set id");
  }
}

std::string set_name(int id) {
  switch (id) {
    case 0:
      return "ball-closed";
    case 1:
      return "ball-complement-open";
    case 2:
      return "endpoint-halfline";
    default:
      throw std::invalid_argument("unknown set id");
  }
}

namespace {

// Brownian-bridge extremum over one increment [a, b] of length dt: the
// maximum has law (a + b + sqrt((b-a)^2 - 2 dt log U)) / 2, U uniform(0,1);
// the minimum follows by symmetry with an independent draw.
double bridge_max(double a, double b, double dt, rng::Stream& g) {
  const double d = b - a;
  return 0.5 * (a + b + std::sqrt(d * d - 2.0 * dt * std::log(g.next_unit_open())));
}

double bridge_min(double a, double b, double dt, rng::Stream& g) {
  const double d = b - a;
  return 0.5 * (a + b - std::sqrt(d * d - 2.0 * dt * std::log(g.next_unit_open())));
}

PathSummary summarize_bridged(const std::vector<double>& w, double dt, rng::Stream& g) {
  const long M = grid_per_unit(dt);
  PathSummary s;
  s.end = w[static_cast<std::size_t>(M)];
  for (long k = 0; k <= M; ++k) {
    const double v = w[static_cast<std::size_t>(k)];
    const double trap = (k == 0 || k == M) ? 0.5 : 1.0;
    s.int_sq += trap * v * v * dt;
    if (k < M) {
      const double nxt = w[static_cast<std::size_t>(k + 1)];
      s.sup_pos = std::max(s.sup_pos, bridge_max(v, nxt, dt, g));
      s.inf_neg = std::min(s.inf_neg, bridge_min(v, nxt, dt, g));
    }
  }
  s.sup_abs = std::max(s.sup_pos, -s.inf_neg);
  return s;
}

}  // namespace

CatalogueMeans brownian_catalogue_means(long mc_samples, double dt, std::uint64_t seed,
                                        const SetParams& params, bool bridge_correction) {
  require(mc_samples >= 100, "too few Monte Carlo samples");
  const long M = grid_per_unit(dt);
  const double step = 1.0 / static_cast<double>(M);
  const auto N = static_cast<std::size_t>(mc_samples);

  std::vector<std::vector<double>> fv(kFunctionalCount, std::vector<double>(N));
  std::vector<std::vector<std::uint8_t>> sv(kSetCount, std::vector<std::uint8_t>(N));
  const int workers = static_cast<int>(std::thread::hardware_concurrency());
  parallel_for(N, workers, [&](std::size_t i) {
    thread_local std::vector<double> w;
    rng::Stream g(rng::derive(seed, "ref.catalogue", i));
    fill_brownian(w, step, static_cast<std::size_t>(M), g);
    const PathSummary s = bridge_correction ? summarize_bridged(w, step, g) : summarize(w, step);
    for (int f = 0; f < kFunctionalCount; ++f)
      fv[static_cast<std::size_t>(f)][i] = functional_value(f, s);
    for (int b = 0; b < kSetCount; ++b)
      sv[static_cast<std::size_t>(b)][i] = set_indicator(b, s, params) ? 1 : 0;
  });

  CatalogueMeans out;
  out.mc_samples = mc_samples;
  out.dt = step;
  const double nn = static_cast<double>(N);
  for (int f = 0; f < kFunctionalCount; ++f) {
    double sum = 0, sumsq = 0;
    for (double v : fv[static_cast<std::size_t>(f)]) {
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / nn;
    const double var = std::max(0.0, sumsq / nn - mean * mean);
    out.f_mean.push_back(mean);
    out.f_se.push_back(std::sqrt(var / nn));
  }
  for (int b = 0; b < kSetCount; ++b) {
    long c = 0;
    for (std::uint8_t v : sv[static_cast<std::size_t>(b)]) c += v;
    const double p = static_cast<double>(c) / nn;
    out.set_mean.push_back(p);
    out.set_se.push_back(std::sqrt(binom_var(p, nn)));
  }
  return out;
}

double sup_crossing_probability(double level, double t, long mc_samples, double dt,
                                std::uint64_t seed, bool bridge_correction) {
  require(t > 0, "horizon must be positive");
  require(mc_samples >= 100, "too few Monte Carlo samples");
  const long M = grid_per_unit(dt);
  const double step = 1.0 / static_cast<double>(M);
  const auto steps = static_cast<std::size_t>(std::ceil(t * static_cast<double>(M) - 1e-9));
  const auto N = static_cast<std::size_t>(mc_samples);

  std::vector<std::uint8_t> crossed(N);
  const int workers = static_cast<int>(std::thread::hardware_concurrency());
  parallel_for(N, workers, [&](std::size_t i) {
    rng::Stream g(rng::derive(seed, "ref.supcross", i));
    const double sd = std::sqrt(step);
    double v = 0.0;
    std::uint8_t hit = 0;
    for (std::size_t k = 0; k < steps; ++k) {
      const double nxt = v + sd * g.next_gaussian();
      const double peak = bridge_correction ? bridge_max(v, nxt, step, g) : std::max(v, nxt);
      if (peak > level) {
        hit = 1;
        break;
      }
      v = nxt;
    }
    crossed[i] = hit;
  });
  long c = 0;
  for (std::uint8_t v : crossed) c += v;
  return static_cast<double>(c) / static_cast<double>(N);
}

}  // namespace condlab
