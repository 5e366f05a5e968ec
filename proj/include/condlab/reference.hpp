#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "condlab/rng.hpp"

namespace condlab {

// ---------------------------------------------------------------------------
// Brownian-motion reference suite: sampled paths, the locally-uniform path
// metric, range statistics, the epsilon-thresholds (delta_eps, h_eps), and
// the shared functional/set catalogue evaluated on path summaries.
// ---------------------------------------------------------------------------

// The path metric
//   d(x, y) = sum_{n>=1} 2^{-n+1} min{1, sup_{[0,n]} |x - y|}
// is evaluated as the partial sum over n = 1..kMetricTerms; the discarded
// tail is at most kMetricTail = 2^{-kMetricTerms+1} < 1e-9.
inline constexpr int kMetricTerms = 31;
inline constexpr double kMetricTail = 1.0 / (1024.0 * 1024.0 * 1024.0);  // 2^-30
// Comparing a path against its own time-shift by up to 1 needs values on
// [0, kMetricTerms + 1].
inline constexpr double kMetricHorizon = kMetricTerms + 1;

struct BrownianSample {
  double dt = 0;
  std::vector<double> values;  // values[k] = W(k dt); values[0] = 0
  std::uint64_t seed = 0;

  double horizon() const { return dt * static_cast<double>(values.size() - 1); }
  // Linear interpolation between grid points.
  double at(double t) const;
};

// Standard Gaussian increments on a dt-grid covering [0, t_max].
BrownianSample sample_brownian(double t_max, double dt, std::uint64_t seed);
// In-place variant for tight Monte Carlo loops (grid size = steps + 1).
void fill_brownian(std::vector<double>& values, double dt, std::size_t steps, rng::Stream& g);

// ---------------------------------------------------------------------------
// Path metric on a common grid. Both paths are piecewise linear with knots
// at multiples of dt, so window suprema are attained at grid points and the
// evaluation below is exact for such paths. Requires both paths to cover
// [0, kMetricTerms].
// ---------------------------------------------------------------------------
double path_distance(const std::vector<double>& f, const std::vector<double>& g, double dt);
double path_distance(const BrownianSample& f, const BrownianSample& g);

// Decision procedures with early exit, for d(theta_s f, f) where s = shift*dt:
// compares f(t + s) against f(t). Requires f to cover [0, kMetricTerms + s].
double shifted_distance(const std::vector<double>& f, double dt, std::size_t shift);
bool shifted_distance_exceeds(const std::vector<double>& f, double dt, std::size_t shift,
                              double eps);

// ---------------------------------------------------------------------------
// Epsilon-thresholds. Search grids are geometric with ratio kThresholdGridRatio
// starting at 1; all grid points share one set of Monte Carlo samples (common
// random numbers), which makes both scans exactly monotone.
// ---------------------------------------------------------------------------
inline constexpr double kThresholdGridRatio = 0.9;

struct ThresholdEstimate {
  double epsilon = 0;
  double value = 0;       // selected grid point
  double confidence = 0;  // half grid gap + Monte Carlo band width (same units)
  bool bottomed = false;  // grid exhausted without meeting the target sum
  long mc_samples = 0;
  double dt = 0;
};

// Largest delta in (0,1] on the grid with
//   P[range(W on [0,1/2]) < delta] + P[range(W on [1/2,1]) < delta]
//   + P[range(W on [1,3/2]) < delta] + P[sup_{[0,1]} W < delta]
//   + P[|inf_{[0,1]} W| < delta]  <=  eps / 2.
ThresholdEstimate estimate_delta_eps(double epsilon, long mc_samples, double dt,
                                     std::uint64_t seed);

// Largest h in (0,1] on the grid with
//   P[sup_{s<=h} |W(s)| > eps] + P[sup_{s<=h} d(theta_s W, W) > eps]  <=  eps / 2,
// the shift s ranging over the lattice {k*dt}. The pair (value, dt) is the
// calibrated object: consumers must probe shifts on the same lattice, and a
// pick below the first lattice shift is reported as bottomed (the scan holds
// no shift evidence at that dt; refine dt).
ThresholdEstimate estimate_h_eps(double epsilon, long mc_samples, double dt, std::uint64_t seed);

struct EpsilonThresholds {
  double epsilon = 0;
  double delta_eps = 0;
  double h_eps = 0;
  double delta_confidence = 0, h_confidence = 0;
  bool delta_bottomed = false, h_bottomed = false;
  long mc_samples = 0;
  double dt = 0;
};

EpsilonThresholds estimate_thresholds(double epsilon, long mc_samples, double dt,
                                      std::uint64_t seed);

// Structured-text persistence (one row per epsilon).
void save_thresholds(const std::vector<EpsilonThresholds>& table, const std::string& path);
std::vector<EpsilonThresholds> load_thresholds(const std::string& path);

// ---------------------------------------------------------------------------
// Functional / set catalogue over paths restricted to [0, 1]. Both the walk
// side and the Brownian side reduce a path to the same summary statistics;
// the integral uses the trapezoid rule on the path's own knots.
// ---------------------------------------------------------------------------
struct PathSummary {
  double sup_abs = 0;  // sup_{t<=1} |w(t)|
  double sup_pos = 0;  // sup_{t<=1} w(t)   (>= 0 because w(0) = 0)
  double inf_neg = 0;  // inf_{t<=1} w(t)   (<= 0)
  double end = 0;      // w(1)
  double int_sq = 0;   // trapezoid of w(t)^2 over [0,1] on the knots
};

PathSummary summarize(const std::vector<double>& w, double dt);

// Functionals, all bounded and uniformly continuous:
//   0: constant 1
//   1: min(1, sup_{t<=1} |w|)
//   2: cos(w(1))
//   3: min(1, max(0, w(1)))
//   4: exp(-int_0^1 w(t)^2 dt)
inline constexpr int kFunctionalCount = 5;
double functional_value(int id, const PathSummary& s);
std::string functional_name(int id);
int functional_id(const std::string& name);  // -1 if unknown

// Sets of paths, via their indicators:
//   0: closed  {sup_{t<=1} |w| <= r}
//   1: open    {sup_{t<=1} |w| >  r}   (complement of 0, per sample)
//   2: closed  {w(1) <= q}             (Brownian-continuity set)
inline constexpr int kSetCount = 3;
struct SetParams {
  double r = 1.0;
  double q = 0.2533471031357997;  // 60% point of the standard normal law
};
bool set_indicator(int id, const PathSummary& s, const SetParams& p);
std::string set_name(int id);

// Monte Carlo catalogue means on the Brownian side. bridge_correction
// replaces each grid increment's contribution to running extrema by a sampled
// Brownian-bridge extremum, removing the O(sqrt(dt)) bias of grid suprema;
// off by default so that plain runs are reproducible without auxiliary draws.
struct CatalogueMeans {
  std::vector<double> f_mean, f_se;      // indexed by functional id
  std::vector<double> set_mean, set_se;  // indexed by set id
  long mc_samples = 0;
  double dt = 0;
};
CatalogueMeans brownian_catalogue_means(long mc_samples, double dt, std::uint64_t seed,
                                        const SetParams& params, bool bridge_correction = false);

// P[sup_{s<=t} W(s) > level], Monte Carlo; same bridge toggle.
double sup_crossing_probability(double level, double t, long mc_samples, double dt,
                                std::uint64_t seed, bool bridge_correction = false);

}  // namespace condlab
