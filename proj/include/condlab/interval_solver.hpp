#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "condlab/environment.hpp"

namespace condlab {

// Exact finite-interval quantities for the walk on an interval (a, b), built
// on a collapsed-boundary chain: every boundary half-line is merged into a
// single state whose entry law weighs boundary sites by their conductance
// into the interior.
//
// Geometry:
//   kTwoSided       left half-line and right half-line collapse to two
//                   distinct states (no transitions between them)
//   kPuncturedLine  the whole exterior collapses to one state; interior
//                   sites keep their identity
enum class Geometry { kTwoSided, kPuncturedLine };

struct IntervalProblem {
  Environment env;
  long a = 0, b = 0;
  Geometry geometry = Geometry::kTwoSided;

  std::vector<long> interior;              // a+1 .. b-1
  std::vector<long> left_sites;            // a-R+1 .. a (reachable part of the left exterior)
  std::vector<long> right_sites;           // b .. b+R-1
  std::vector<double> Cprime_left, Cprime_right;  // conductance into the interior, per site
  std::vector<double> C_interior;          // full site conductance C_x, interior sites
  double CB = 0, CE = 0;                   // collapsed masses (kPuncturedLine: CE only)

  // Collapsed transition matrix; interior states first, then the collapsed
  // state(s): [interior..., Delta_B, Delta_E] or [interior..., Delta_E].
  Eigen::MatrixXd P;

  int m() const { return static_cast<int>(interior.size()); }
  int idx(long x) const;         // interior state index
  int delta_B() const { return m(); }  // kTwoSided only
  int delta_E() const { return geometry == Geometry::kTwoSided ? m() + 1 : m(); }
  int states() const { return geometry == Geometry::kTwoSided ? m() + 2 : m() + 1; }

  // Entry laws of the collapsed states over their materialized sites.
  std::vector<double> pi_B() const;
  std::vector<double> pi_E() const;

  // max |C'_x P_{x,y} - C'_y P_{y,x}| over collapsed-state pairs.
  double detailed_balance_residual() const;
};

IntervalProblem build_collapsed_chain(const Environment& env, long a, long b, Geometry geometry);

// P[walk from 0 leaves (-L, L) before returning to 0]; exact linear solve.
double escape_probability(const Environment& env, long L);

// The escape probability together with the harmonic function realizing it:
// f(0) = 0, f = 1 outside (-L, L), harmonic in between. f is tabulated on
// [-L-R, L+R].
struct EscapeSolution {
  double probability = 0;
  long lo = 0;
  std::vector<double> f;  // f[x - lo]
  double at(long x) const { return f[static_cast<std::size_t>(x - lo)]; }
};
EscapeSolution escape_solution(const Environment& env, long L);

// Quadratic energy sum_{x,y in [lo,hi]} omega_{x,y} (f(x)-f(y))^2 over ordered pairs.
double dirichlet_form(const Environment& env, const std::function<double(long)>& f, long lo,
                      long hi);

// log P[walk from x stays strictly inside (a, b) for n steps]; exact iterated
// products with periodic renormalization, so arbitrarily small tails are fine.
double confinement_log_tail(const IntervalProblem& problem, long x, long n);
double confinement_tail(const IntervalProblem& problem, long x, long n);
// One sweep for many horizons (ns ascending).
std::vector<double> confinement_log_curve(const IntervalProblem& problem, long x,
                                          const std::vector<long>& ns);

// E[steps until the walk from x leaves (a, b)].
double expected_exit_time(const IntervalProblem& problem, long x);

struct ExitDistribution {
  long start = 0;
  long a = 0, b = 0;
  std::vector<std::pair<long, double>> probabilities;  // exit site, ascending
  double mass_inside(long M) const;  // mass on [a-M, b+M]
  double total() const;
};
// Exact law of the exit position (kPuncturedLine geometry).
ExitDistribution exit_distribution(const IntervalProblem& problem, long x);

// Effective conductance between the collapsed exterior and interior site x
// (kPuncturedLine): C_eff = C'_E * P[from the exterior entry law, hit x
// before returning to the exterior].
double effective_conductance(const IntervalProblem& problem, long x);

// Series (nearest-neighbor path) lower bound for the same quantity.
double effective_conductance_series_bound(const IntervalProblem& problem, long x);

// lhs = E^x[time to hit Delta_B] + E^{Delta_B}[time to hit x],
// rhs = (sum of C' over all states) / C_eff(Delta_B, x).   (kTwoSided)
std::pair<double, double> commute_time_check(const IntervalProblem& problem, long x);

// lhs = C'_x P^x[exit hits y and precedes any return to x],
// rhs = C'_y P^y[hit x before returning to the exterior].   (kPuncturedLine)
std::pair<double, double> reversal_identity_check(const IntervalProblem& problem, long x, long y);

struct FieldConstants {
  double gamma1 = 0;     // max_x sum_y omega_{x,y} (y-x)^2
  double kappa_hat = 0;  // tightest bound with kappa_hat <= C_x <= 1/kappa_hat
  double c_min = 0, c_max = 0;
};
FieldConstants field_constants(const Environment& env, long lo, long hi);

// Least-squares decay rate of -log_tail vs n over the last third of the
// samples, with the relative spread of the pointwise slopes in that region.
struct RateFit {
  double lambda = 0;
  double rel_variation = 0;
};
RateFit fit_tail_rate(const std::vector<long>& ns, const std::vector<double>& log_tails);

}  // namespace condlab
