#include "condlab/interval_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace condlab {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

int IntervalProblem::idx(long x) const {
  if (x <= a || x >= b) throw std::out_of_range("interior index requested for a boundary site");
  return static_cast<int>(x - a - 1);
}

std::vector<double> IntervalProblem::pi_B() const {
  std::vector<double> pi(left_sites.size());
  for (std::size_t i = 0; i < pi.size(); ++i) pi[i] = Cprime_left[i] / CB;
  return pi;
}

std::vector<double> IntervalProblem::pi_E() const {
  std::vector<double> pi;
  double total = CE;
  if (geometry == Geometry::kTwoSided) {
    pi.resize(right_sites.size());
    for (std::size_t i = 0; i < pi.size(); ++i) pi[i] = Cprime_right[i] / total;
  } else {
    pi.resize(left_sites.size() + right_sites.size());
    for (std::size_t i = 0; i < left_sites.size(); ++i) pi[i] = Cprime_left[i] / total;
    for (std::size_t i = 0; i < right_sites.size(); ++i)
      pi[left_sites.size() + i] = Cprime_right[i] / total;
  }
  return pi;
}

double IntervalProblem::detailed_balance_residual() const {
  const int S = states();
  Eigen::VectorXd Cp(S);
  for (int i = 0; i < m(); ++i) Cp(i) = C_interior[static_cast<std::size_t>(i)];
  if (geometry == Geometry::kTwoSided) {
    Cp(delta_B()) = CB;
    Cp(delta_E()) = CE;
  } else {
    Cp(delta_E()) = CE;
  }
  double worst = 0.0;
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j)
      worst = std::max(worst, std::abs(Cp(i) * P(i, j) - Cp(j) * P(j, i)));
  return worst;
}

IntervalProblem build_collapsed_chain(const Environment& env, long a, long b, Geometry geometry) {
  require(b - a >= 2, "interval must contain at least one interior site");
  const int R = env.radius();
  require(a - R + 1 >= env.x_min() && b + R - 1 <= env.x_max(),
          "window margin insufficient for the boundary collapse");

  IntervalProblem pr;
  pr.env = env;
  pr.a = a;
  pr.b = b;
  pr.geometry = geometry;
  for (long x = a + 1; x <= b - 1; ++x) pr.interior.push_back(x);
  for (long y = a - R + 1; y <= a; ++y) pr.left_sites.push_back(y);
  for (long y = b; y <= b + R - 1; ++y) pr.right_sites.push_back(y);

  auto into_interior = [&](long y) {
    double c = 0.0;
    for (long x = a + 1; x <= b - 1; ++x) c += env.conductance(y, x);
    return c;
  };
  for (long y : pr.left_sites) pr.Cprime_left.push_back(into_interior(y));
  for (long y : pr.right_sites) pr.Cprime_right.push_back(into_interior(y));
  for (long x : pr.interior) pr.C_interior.push_back(env.total_conductance(x));

  double CL = 0, CR = 0;
  for (double c : pr.Cprime_left) CL += c;
  for (double c : pr.Cprime_right) CR += c;
  require(CL > 0 && CR > 0, "boundary carries no conductance into the interior");
  if (geometry == Geometry::kTwoSided) {
    pr.CB = CL;
    pr.CE = CR;
  } else {
    pr.CB = 0;
    pr.CE = CL + CR;
  }

  const int m = pr.m();
  const int S = pr.states();
  pr.P = Eigen::MatrixXd::Zero(S, S);

  for (int i = 0; i < m; ++i) {
    const long x = pr.interior[static_cast<std::size_t>(i)];
    const double Cx = pr.C_interior[static_cast<std::size_t>(i)];
    double to_left = 0, to_right = 0;
    for (long d = 1; d <= R; ++d) {
      for (long y : {x - d, x + d}) {
        const double w = env.conductance(x, y);
        if (w == 0) continue;
        if (y > a && y < b) {
          pr.P(i, pr.idx(y)) += w / Cx;
        } else if (y <= a) {
          to_left += w / Cx;
        } else {
          to_right += w / Cx;
        }
      }
    }
    if (geometry == Geometry::kTwoSided) {
      pr.P(i, pr.delta_B()) = to_left;
      pr.P(i, pr.delta_E()) = to_right;
    } else {
      pr.P(i, pr.delta_E()) = to_left + to_right;
    }
  }

  auto fill_delta_row = [&](int row, const std::vector<long>& sites,
                            const std::vector<double>& Cp, double mass) {
    for (std::size_t k = 0; k < sites.size(); ++k) {
      if (Cp[k] == 0) continue;
      const long y = sites[k];
      const double piy = Cp[k] / mass;
      for (long x = a + 1; x <= b - 1; ++x) {
        const double w = env.conductance(y, x);
        if (w != 0) pr.P(row, pr.idx(x)) += piy * w / Cp[k];
      }
    }
  };
  if (geometry == Geometry::kTwoSided) {
    fill_delta_row(pr.delta_B(), pr.left_sites, pr.Cprime_left, pr.CB);
    fill_delta_row(pr.delta_E(), pr.right_sites, pr.Cprime_right, pr.CE);
  } else {
    fill_delta_row(pr.delta_E(), pr.left_sites, pr.Cprime_left, pr.CE);
    fill_delta_row(pr.delta_E(), pr.right_sites, pr.Cprime_right, pr.CE);
  }
  return pr;
}

namespace {

// Solve the absorbing-chain system over the transient states `keep`:
// value(i) = sum_j Q_{ij} value(j) + rhs(i), i.e. (I - Q) value = rhs.
Eigen::VectorXd absorbing_solve(const Eigen::MatrixXd& P, const std::vector<int>& keep,
                                const Eigen::VectorXd& rhs) {
  const int k = static_cast<int>(keep.size());
  Eigen::MatrixXd A(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) A(i, j) = (i == j ? 1.0 : 0.0) - P(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  return lu.solve(rhs);
}

}  // namespace

double escape_probability(const Environment& env, long L) {
  return escape_solution(env, L).probability;
}

EscapeSolution escape_solution(const Environment& env, long L) {
  require(L >= 1, "escape: L must be >= 1");
  const int R = env.radius();
  require(-(L - 1) - R >= env.x_min() && (L - 1) + R <= env.x_max(),
          "escape: window margin insufficient");

  // transient states: z in (-L, L) \ {0}
  std::vector<long> sites;
  for (long z = -(L - 1); z <= L - 1; ++z)
    if (z != 0) sites.push_back(z);
  const int k = static_cast<int>(sites.size());
  auto index_of = [&](long z) -> int {
    if (z < 0) return static_cast<int>(z + L - 1);
    return static_cast<int>(L - 1 + z - 1);
  };

  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(k, k);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < k; ++i) {
    const long z = sites[static_cast<std::size_t>(i)];
    const double Cz = env.total_conductance(z);
    for (long d = 1; d <= R; ++d) {
      for (long w : {z - d, z + d}) {
        const double c = env.conductance(z, w);
        if (c == 0) continue;
        const double p = c / Cz;
        if (w == 0) continue;  // absorbed at the origin, contributes 0
        if (w <= -L || w >= L) {
          r(i) += p;
        } else {
          A(i, index_of(w)) -= p;
        }
      }
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd u = lu.solve(r);

  EscapeSolution sol;
  const double C0 = env.total_conductance(0);
  double esc = 0.0;
  for (long d = 1; d <= R; ++d) {
    for (long w : {-d, d}) {
      const double c = env.conductance(0, w);
      if (c == 0) continue;
      const double p = c / C0;
      if (w <= -L || w >= L)
        esc += p;
      else
        esc += p * u(index_of(w));
    }
  }
  sol.probability = esc;
  sol.lo = -L - R;
  sol.f.assign(static_cast<std::size_t>(2 * (L + R) + 1), 1.0);
  sol.f[static_cast<std::size_t>(0 - sol.lo)] = 0.0;
  for (int i = 0; i < k; ++i)
    sol.f[static_cast<std::size_t>(sites[static_cast<std::size_t>(i)] - sol.lo)] = u(i);
  return sol;
}

double dirichlet_form(const Environment& env, const std::function<double(long)>& f, long lo,
                      long hi) {
  require(lo <= hi, "dirichlet_form: empty range");
  const int R = env.radius();
  double phi = 0.0;
  for (long x = lo; x <= hi; ++x)
    for (long d = 1; d <= R && x + d <= hi; ++d) {
      const double w = env.conductance(x, x + d);
      if (w == 0) continue;
      const double diff = f(x) - f(x + d);
      phi += w * diff * diff;
    }
  return 2.0 * phi;  // ordered pairs
}

namespace {

Eigen::MatrixXd interior_block(const IntervalProblem& pr) {
  return pr.P.topLeftCorner(pr.m(), pr.m());
}

}  // namespace

std::vector<double> confinement_log_curve(const IntervalProblem& pr, long x,
                                          const std::vector<long>& ns) {
  const int m = pr.m();
  const int i0 = pr.idx(x);
  const Eigen::MatrixXd Q = interior_block(pr);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(m);  // w_k(z) = P_z[stay k steps]
  double logacc = 0.0;
  std::vector<double> out;
  out.reserve(ns.size());
  long step = 0;
  for (long n : ns) {
    require(n >= step, "confinement_log_curve: horizons must be ascending");
    for (; step < n; ++step) {
      w = Q * w;
      const double mx = w.maxCoeff();
      if (mx < 1e-250) {
        if (mx <= 0.0) {
          // all mass gone (numerically); report -inf downstream
          w.setZero();
          break;
        }
        w /= mx;
        logacc += std::log(mx);
      }
    }
    const double v = w(i0);
    out.push_back(v > 0 ? logacc + std::log(v) : -std::numeric_limits<double>::infinity());
  }
  return out;
}

double confinement_log_tail(const IntervalProblem& pr, long x, long n) {
  return confinement_log_curve(pr, x, {n}).front();
}

double confinement_tail(const IntervalProblem& pr, long x, long n) {
  return std::exp(confinement_log_tail(pr, x, n));
}

double expected_exit_time(const IntervalProblem& pr, long x) {
  const int m = pr.m();
  std::vector<int> keep(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) keep[static_cast<std::size_t>(i)] = i;
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd t = absorbing_solve(pr.P, keep, ones);
  return t(pr.idx(x));
}

ExitDistribution exit_distribution(const IntervalProblem& pr, long x) {
  require(pr.geometry == Geometry::kPuncturedLine, "exit_distribution needs the punctured-line geometry");
  const Environment& env = pr.env;
  const int m = pr.m();
  const int R = env.radius();

  // hitting probabilities per boundary site: (I-Q) U = Rmat, stay on raw
  // interior transitions (identical to the collapsed interior block).
  std::vector<long> targets = pr.left_sites;
  targets.insert(targets.end(), pr.right_sites.begin(), pr.right_sites.end());
  const int nt = static_cast<int>(targets.size());

  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m) - interior_block(pr);
  Eigen::MatrixXd Rmat = Eigen::MatrixXd::Zero(m, nt);
  for (int i = 0; i < m; ++i) {
    const long z = pr.interior[static_cast<std::size_t>(i)];
    const double Cz = pr.C_interior[static_cast<std::size_t>(i)];
    for (int j = 0; j < nt; ++j) {
      const double w = env.conductance(z, targets[static_cast<std::size_t>(j)]);
      if (w != 0) Rmat(i, j) = w / Cz;
    }
  }
  (void)R;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::MatrixXd U = lu.solve(Rmat);

  ExitDistribution d;
  d.start = x;
  d.a = pr.a;
  d.b = pr.b;
  const int i0 = pr.idx(x);
  for (int j = 0; j < nt; ++j)
    d.probabilities.emplace_back(targets[static_cast<std::size_t>(j)], U(i0, j));
  std::sort(d.probabilities.begin(), d.probabilities.end());
  return d;
}

double ExitDistribution::mass_inside(long M) const {
  double s = 0.0;
  for (const auto& [site, p] : probabilities)
    if (site >= a - M && site <= b + M) s += p;
  return s;
}

double ExitDistribution::total() const {
  double s = 0.0;
  for (const auto& [site, p] : probabilities) s += p;
  return s;
}

namespace {

// P[from the collapsed-state entry law, hit interior site x before returning
// to the collapsed state `delta_row`], on the collapsed chain `pr.P` with the
// other collapsed state (if any) kept transient.
double hit_before_return(const IntervalProblem& pr, int delta_row, long x) {
  const int i0 = pr.idx(x);
  std::vector<int> keep;
  for (int i = 0; i < pr.m(); ++i)
    if (i != i0) keep.push_back(i);
  if (pr.geometry == Geometry::kTwoSided) {
    // the other collapsed state stays transient
    const int other = (delta_row == pr.delta_B()) ? pr.delta_E() : pr.delta_B();
    keep.push_back(other);
  }
  const int k = static_cast<int>(keep.size());
  Eigen::VectorXd rhs(k);
  for (int i = 0; i < k; ++i) rhs(i) = pr.P(keep[static_cast<std::size_t>(i)], i0);
  Eigen::VectorXd v = absorbing_solve(pr.P, keep, rhs);

  double hit = pr.P(delta_row, i0);
  for (int i = 0; i < k; ++i) hit += pr.P(delta_row, keep[static_cast<std::size_t>(i)]) * v(i);
  return hit;
}

}  // namespace

double effective_conductance(const IntervalProblem& pr, long x) {
  require(pr.geometry == Geometry::kPuncturedLine, "effective_conductance needs the punctured-line geometry");
  return pr.CE * hit_before_return(pr, pr.delta_E(), x);
}

double effective_conductance_series_bound(const IntervalProblem& pr, long x) {
  double left = 0, right = 0;
  for (long i = pr.a; i <= x - 1; ++i) left += 1.0 / pr.env.conductance(i, i + 1);
  for (long i = x; i <= pr.b - 1; ++i) right += 1.0 / pr.env.conductance(i, i + 1);
  return 1.0 / left + 1.0 / right;
}

std::pair<double, double> commute_time_check(const IntervalProblem& pr, long x) {
  require(pr.geometry == Geometry::kTwoSided, "commute_time_check needs the two-sided geometry");
  const int i0 = pr.idx(x);

  // E^x[tau_{Delta_B}]: everything except Delta_B is transient.
  std::vector<int> keep1;
  for (int i = 0; i < pr.m(); ++i) keep1.push_back(i);
  keep1.push_back(pr.delta_E());
  Eigen::VectorXd t1 = absorbing_solve(pr.P, keep1, Eigen::VectorXd::Ones(static_cast<int>(keep1.size())));
  const double e_x_to_B = t1(i0);

  // E^{Delta_B}[tau_x]: everything except x is transient.
  std::vector<int> keep2;
  for (int i = 0; i < pr.m(); ++i)
    if (i != i0) keep2.push_back(i);
  const int pos_delta_B = static_cast<int>(keep2.size());
  keep2.push_back(pr.delta_B());
  keep2.push_back(pr.delta_E());
  Eigen::VectorXd t2 = absorbing_solve(pr.P, keep2, Eigen::VectorXd::Ones(static_cast<int>(keep2.size())));
  const double e_B_to_x = t2(pos_delta_B);

  const double lhs = e_x_to_B + e_B_to_x;

  double total_mass = pr.CB + pr.CE;
  for (double c : pr.C_interior) total_mass += c;
  const double ceff = pr.CB * hit_before_return(pr, pr.delta_B(), x);
  const double rhs = total_mass / ceff;
  return {lhs, rhs};
}

std::pair<double, double> reversal_identity_check(const IntervalProblem& pr, long x, long y) {
  require(pr.geometry == Geometry::kPuncturedLine, "reversal_identity_check needs the punctured-line geometry");
  const Environment& env = pr.env;
  const int i0 = pr.idx(x);
  const double Cx = pr.C_interior[static_cast<std::size_t>(i0)];

  double Cy = 0.0;
  bool found = false;
  for (std::size_t i = 0; i < pr.left_sites.size(); ++i)
    if (pr.left_sites[i] == y) {
      Cy = pr.Cprime_left[i];
      found = true;
    }
  for (std::size_t i = 0; i < pr.right_sites.size(); ++i)
    if (pr.right_sites[i] == y) {
      Cy = pr.Cprime_right[i];
      found = true;
    }
  require(found, "reversal_identity_check: y is not a materialized exterior site");
  require(Cy > 0, "reversal_identity_check: y carries no conductance into the interior");

  std::vector<int> keep;
  for (int i = 0; i < pr.m(); ++i)
    if (i != i0) keep.push_back(i);
  const int k = static_cast<int>(keep.size());

  // w(z) = P_z[exit hits y, before hitting x]
  Eigen::VectorXd ry(k), rx(k);
  for (int i = 0; i < k; ++i) {
    const long z = pr.interior[static_cast<std::size_t>(keep[static_cast<std::size_t>(i)])];
    const double Cz = pr.C_interior[static_cast<std::size_t>(keep[static_cast<std::size_t>(i)])];
    ry(i) = env.conductance(z, y) / Cz;
    rx(i) = env.conductance(z, x) / Cz;
  }
  Eigen::MatrixXd A(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      A(i, j) = (i == j ? 1.0 : 0.0) - pr.P(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd w = lu.solve(ry);
  Eigen::VectorXd v = lu.solve(rx);

  // lhs: from x, first step then absorb
  double p_exit_at_y = env.conductance(x, y) / Cx;
  for (int i = 0; i < k; ++i) {
    const long z = pr.interior[static_cast<std::size_t>(keep[static_cast<std::size_t>(i)])];
    p_exit_at_y += (env.conductance(x, z) / Cx) * w(i);
  }
  const double lhs = Cx * p_exit_at_y;

  // rhs: from y under the trimmed field, only edges into the interior remain
  double p_hit_x = env.conductance(y, x) / Cy;
  for (int i = 0; i < k; ++i) {
    const long z = pr.interior[static_cast<std::size_t>(keep[static_cast<std::size_t>(i)])];
    p_hit_x += (env.conductance(y, z) / Cy) * v(i);
  }
  const double rhs = Cy * p_hit_x;
  return {lhs, rhs};
}

FieldConstants field_constants(const Environment& env, long lo, long hi) {
  FieldConstants fc;
  fc.c_min = 1e300;
  const int R = env.radius();
  for (long x = lo; x <= hi; ++x) {
    double c = 0, g = 0;
    for (long d = 1; d <= R; ++d) {
      const double w = env.conductance(x, x - d) + env.conductance(x, x + d);
      c += w;
      g += w * static_cast<double>(d) * static_cast<double>(d);
    }
    fc.c_min = std::min(fc.c_min, c);
    fc.c_max = std::max(fc.c_max, c);
    fc.gamma1 = std::max(fc.gamma1, g);
  }
  fc.kappa_hat = std::min(fc.c_min, 1.0 / fc.c_max);
  return fc;
}

RateFit fit_tail_rate(const std::vector<long>& ns, const std::vector<double>& log_tails) {
  require(ns.size() == log_tails.size() && ns.size() >= 6, "fit_tail_rate: need at least 6 samples");
  const std::size_t k = ns.size();
  const std::size_t from = k - k / 3;

  // least squares of -log_tail against n on the tail segment
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double npts = static_cast<double>(k - from);
  for (std::size_t i = from; i < k; ++i) {
    const double X = static_cast<double>(ns[i]);
    const double Y = -log_tails[i];
    sx += X;
    sy += Y;
    sxx += X * X;
    sxy += X * Y;
  }
  const double slope = (npts * sxy - sx * sy) / (npts * sxx - sx * sx);

  double worst = 0;
  for (std::size_t i = from + 1; i < k; ++i) {
    const double local = -(log_tails[i] - log_tails[i - 1]) /
                         static_cast<double>(ns[i] - ns[i - 1]);
    worst = std::max(worst, std::abs(local - slope) / std::abs(slope));
  }
  return {slope, worst};
}

}  // namespace condlab
