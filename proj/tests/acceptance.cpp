// Acceptance gate: ten end-to-end checks, one per criterion, each printing a
// single PASS/FAIL line with the measured numbers and its elapsed time. The
// binary exits 0 iff every selected criterion passes. Tolerances are pinned
// here, next to the checks that use them.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "condlab/environment.hpp"
#include "condlab/harness.hpp"
#include "condlab/interval_solver.hpp"
#include "condlab/reference.hpp"
#include "condlab/rng.hpp"
#include "condlab/walk.hpp"

using namespace condlab;
namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

Environment make_flat(long half, std::vector<double> profile = {1.0}) {
  EnvironmentSpec s;
  s.model_tag = "homogeneous";
  s.x_min = -half;
  s.x_max = half;
  s.kappa = 0.01;
  s.profile = std::move(profile);
  return generate(s);
}

Environment make_tworange(long half, std::uint64_t seed) {
  EnvironmentSpec s;
  s.model_tag = "iid-tworange";
  s.x_min = -half;
  s.x_max = half;
  s.kappa = 0.5;
  s.seed = seed;
  return generate(s);
}

Environment make_polynomial(long half, std::uint64_t seed) {
  EnvironmentSpec s;
  s.model_tag = "iid-polynomial";
  s.x_min = -half;
  s.x_max = half;
  s.kappa = 0.5;
  s.tail_K = 4.0;
  s.tail_beta = 2.0;
  s.seed = seed;
  return generate(s);
}

Environment make_block(long half, std::uint64_t seed) {
  EnvironmentSpec s;
  s.model_tag = "block-counterexample";
  s.x_min = -half;
  s.x_max = half;
  s.kappa = 0.5;
  s.block_eps = 0.4;
  s.seed = seed;
  return generate(s);
}

// --------------------------------------------------------------------------
// 1. Reversibility identities on random two-range fields: detailed balance,
//    commute time, time reversal, and the energy identity for the escape
//    probability, each at solver precision, 50 random interval/site draws.
// --------------------------------------------------------------------------
bool criterion1(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const Environment env = make_tworange(60, 1001);
  rng::Stream rs(rng::derive(11, "acc.c1"));
  double worst_db = 0, worst_commute = 0, worst_reversal = 0, worst_energy = 0;
  for (int t = 0; t < 50; ++t) {
    const long a = -3 - static_cast<long>(rs.next_below(20));
    const long b = 3 + static_cast<long>(rs.next_below(20));
    const long span = b - a - 1;
    const long x = a + 1 + static_cast<long>(rs.next_below(static_cast<std::uint64_t>(span)));
    // y: one of the materialized exit sites of the radius-2 field.
    const std::array<long, 4> exits{a - 1, a, b, b + 1};
    const long y = exits[static_cast<std::size_t>(rs.next_below(4))];

    const IntervalProblem two = build_collapsed_chain(env, a, b, Geometry::kTwoSided);
    worst_db = std::max(worst_db, two.detailed_balance_residual());
    const auto [clhs, crhs] = commute_time_check(two, x);
    worst_commute = std::max(worst_commute, std::abs(clhs - crhs) / std::abs(crhs));

    const IntervalProblem punct = build_collapsed_chain(env, a, b, Geometry::kPuncturedLine);
    worst_db = std::max(worst_db, punct.detailed_balance_residual());
    const auto [rlhs, rrhs] = reversal_identity_check(punct, x, y);
    worst_reversal = std::max(worst_reversal,
                              std::abs(rlhs - rrhs) / std::max(std::abs(rlhs), std::abs(rrhs)));

    const long L = 3 + static_cast<long>(rs.next_below(20));
    const EscapeSolution sol = escape_solution(env, L);
    const double phi = dirichlet_form(env, [&](long z) { return sol.at(z); }, sol.lo, -sol.lo);
    worst_energy = std::max(worst_energy,
                            std::abs(sol.probability - phi / (2.0 * env.total_conductance(0))));
  }
  const double el = seconds_since(t0);
  const bool ok = worst_db <= 1e-12 && worst_commute <= 1e-8 && worst_reversal <= 1e-10 &&
                  worst_energy <= 1e-10 && el < 60.0;
  detail = "50 draws: max residuals balance " + fmt(worst_db) + ", commute " + fmt(worst_commute) +
           ", reversal " + fmt(worst_reversal) + ", energy " + fmt(worst_energy) + " [" + fmt(el) +
           "s]";
  return ok;
}

// --------------------------------------------------------------------------
// 2. Closed forms on the flat nearest-neighbor medium: ruin probabilities
//    x/N, midpoint exit time m^2, escape probability 1/L.
// --------------------------------------------------------------------------
bool criterion2(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const Environment env = make_flat(150);
  double worst_ruin = 0, worst_exit = 0, worst_escape = 0;
  for (const long N : {10L, 25L}) {
    const IntervalProblem pr = build_collapsed_chain(env, 0, N, Geometry::kPuncturedLine);
    for (long x = 1; x < N; ++x) {
      const ExitDistribution dist = exit_distribution(pr, x);
      const double up = dist.probabilities.back().second;
      worst_ruin = std::max(worst_ruin,
                            std::abs(up - static_cast<double>(x) / static_cast<double>(N)));
    }
  }
  for (const long m : {5L, 10L, 20L}) {
    const IntervalProblem pr = build_collapsed_chain(env, 0, 2 * m, Geometry::kPuncturedLine);
    worst_exit = std::max(worst_exit,
                          std::abs(expected_exit_time(pr, m) - static_cast<double>(m * m)));
  }
  for (const long L : {10L, 100L})
    worst_escape = std::max(worst_escape,
                            std::abs(escape_probability(env, L) - 1.0 / static_cast<double>(L)));
  const double el = seconds_since(t0);
  const bool ok = worst_ruin <= 1e-12 && worst_exit <= 1e-10 && worst_escape <= 1e-12;
  detail = "max |ruin - x/N| " + fmt(worst_ruin) + ", |exit time - m^2| " + fmt(worst_exit) +
           ", |escape - 1/L| " + fmt(worst_escape) + " [" + fmt(el) + "s]";
  return ok;
}

// --------------------------------------------------------------------------
// 3. Escape-probability upper bound 4 gamma1 / (kappa_hat L) on ten
//    heavy-tail fields at L in {10, 50, 250}; zero violations allowed.
// --------------------------------------------------------------------------
bool criterion3(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  int violations = 0;
  double worst_ratio = 0;
  for (std::uint64_t seed = 2001; seed <= 2010; ++seed) {
    const Environment env = make_polynomial(480, seed);
    for (const long L : {10L, 50L, 250L}) {
      const double esc = escape_probability(env, L);
      const FieldConstants fc = field_constants(env, -L, L);
      const double bound = 4.0 * fc.gamma1 / (fc.kappa_hat * static_cast<double>(L));
      worst_ratio = std::max(worst_ratio, esc / bound);
      if (esc > bound) ++violations;
    }
  }
  const double el = seconds_since(t0);
  detail = "30 field/L combinations, worst escape/bound " + fmt(worst_ratio) + ", violations " +
           std::to_string(violations) + " [" + fmt(el) + "s]";
  return violations == 0;
}

// --------------------------------------------------------------------------
// 4. Confinement decay rate scales like the inverse squared gap: the product
//    lambda (b-a)^2 stays within a factor 4 across gaps {10, 20, 40} on five
//    random fields, with < 10% slope spread over the last third of each fit.
// --------------------------------------------------------------------------
bool criterion4(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_spread = 0, worst_var = 0;
  bool ok = true;
  for (std::uint64_t seed = 3001; seed <= 3005; ++seed) {
    const Environment env = make_tworange(60, seed);
    double pmin = 1e300, pmax = 0;
    for (const long g : {10L, 20L, 40L}) {
      const IntervalProblem pr = build_collapsed_chain(env, -g / 2, g / 2, Geometry::kTwoSided);
      std::vector<long> ns;
      const long unit = (g * g + 1) / 2;
      for (long k = 2; k <= 12; k += 2) ns.push_back(k * unit);
      const std::vector<double> curve = confinement_log_curve(pr, 0, ns);
      const RateFit fit = fit_tail_rate(ns, curve);
      worst_var = std::max(worst_var, fit.rel_variation);
      const double product = fit.lambda * static_cast<double>(g * g);
      pmin = std::min(pmin, product);
      pmax = std::max(pmax, product);
    }
    worst_spread = std::max(worst_spread, pmax / pmin);
    if (pmax / pmin > 4.0) ok = false;
  }
  if (worst_var >= 0.10) ok = false;
  const double el = seconds_since(t0);
  detail = "5 fields x gaps {10,20,40}: worst product spread " + fmt(worst_spread) +
           " (allowed 4), worst tail-slope variation " + fmt(worst_var) + " (allowed 0.1) [" +
           fmt(el) + "s]";
  return ok;
}

// --------------------------------------------------------------------------
// 5. Exit-overshoot concentration: for eta in {0.1, 0.05, 0.01} there is a
//    finite M with min over starts of the exit mass on [a-M, b+M] >= 1-eta,
//    nondecreasing as eta shrinks.
// --------------------------------------------------------------------------
bool criterion5(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const Environment env = make_polynomial(400, 4001);
  const IntervalProblem pr = build_collapsed_chain(env, -15, 15, Geometry::kPuncturedLine);
  std::vector<ExitDistribution> dists;
  for (long x = -14; x <= 14; ++x) dists.push_back(exit_distribution(pr, x));
  auto worst_mass = [&](long M) {
    double w = 1.0;
    for (const ExitDistribution& d : dists) w = std::min(w, d.mass_inside(M));
    return w;
  };
  const long m_cap = 350;
  std::vector<long> found;
  bool ok = true;
  for (const double eta : {0.1, 0.05, 0.01}) {
    long got = -1;
    for (long M = 0; M <= m_cap; ++M)
      if (worst_mass(M) >= 1.0 - eta) {
        got = M;
        break;
      }
    if (got < 0) ok = false;
    found.push_back(got);
  }
  for (std::size_t i = 1; i < found.size(); ++i)
    if (found[i] < found[i - 1]) ok = false;
  const double el = seconds_since(t0);
  detail = "29 starts in (-15,15): M(0.1)=" + std::to_string(found[0]) +
           ", M(0.05)=" + std::to_string(found[1]) + ", M(0.01)=" + std::to_string(found[2]) +
           " [" + fmt(el) + "s]";
  return ok;
}

// --------------------------------------------------------------------------
// 6. Sampler against solver: 1e5 simulated walks reproduce the exact exit
//    law within total variation 0.02 and the exact confinement probability
//    at n = (b-a)^2 within 3 binomial standard errors.
// --------------------------------------------------------------------------
bool criterion6(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const Environment env = make_tworange(80, 5001);
  const long a = -8, b = 8, start = 1;
  const long n_conf = (b - a) * (b - a);
  const IntervalProblem pr = build_collapsed_chain(env, a, b, Geometry::kPuncturedLine);
  const ExitDistribution exact = exit_distribution(pr, start);
  const double exact_tail = confinement_tail(pr, start, n_conf);

  const long walks = 100000;
  JumpSampler sampler(env);
  std::map<long, long> hits;
  long survived = 0;
  for (long i = 0; i < walks; ++i) {
    rng::Stream rs(rng::derive(17, "acc.c6", static_cast<std::uint64_t>(i)));
    long x = start;
    long steps = 0;
    while (x > a && x < b && steps < 1000000) {
      x = sampler.step(x, rs);
      ++steps;
    }
    ++hits[x];
    if (steps > n_conf) ++survived;
  }

  double tv = 0;
  std::map<long, double> exact_map;
  for (const auto& [site, p] : exact.probabilities) exact_map[site] = p;
  std::map<long, double> emp;
  for (const auto& [site, c] : hits) emp[site] = static_cast<double>(c) / walks;
  for (const auto& [site, p] : exact_map) tv += std::abs(p - (emp.count(site) ? emp[site] : 0.0));
  for (const auto& [site, p] : emp)
    if (!exact_map.count(site)) tv += p;
  tv *= 0.5;

  const double p_surv = static_cast<double>(survived) / walks;
  const double se = std::sqrt(exact_tail * (1.0 - exact_tail) / walks);
  const double el = seconds_since(t0);
  const bool ok = tv <= 0.02 && std::abs(p_surv - exact_tail) <= 3.0 * se;
  detail = "exit-law TV " + fmt(tv) + " (allowed 0.02); survival " + fmt(p_surv) + " vs exact " +
           fmt(exact_tail) + " (3se = " + fmt(3.0 * se) + ") [" + fmt(el) + "s]";
  return ok;
}

// --------------------------------------------------------------------------
// 7. Diffusivity fits at 1e4 paths x horizons {1e2,1e3,1e4}: sigma = 1 on
//    the flat medium and slope 2.4/2.1 on the deterministic two-range
//    profile, each within 3 standard errors.
// --------------------------------------------------------------------------
bool criterion7(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<long> ns = {100, 1000, 10000};
  const SigmaEstimate nn = estimate_sigma(make_flat(5700), 0, ns, 10000, 71);
  const bool ok_nn = std::abs(nn.sigma - 1.0) <= 3.0 * nn.sigma_se;
  const SigmaEstimate two = estimate_sigma(make_flat(5700, {1.0, 0.05}), 0, ns, 10000, 72);
  const double oracle = 2.4 / 2.1;
  const bool ok_two = std::abs(two.slope - oracle) <= 3.0 * two.slope_se;
  const double el = seconds_since(t0);
  detail = "flat sigma " + fmt(nn.sigma) + " +- " + fmt(nn.sigma_se) + " (target 1); two-range slope " +
           fmt(two.slope) + " +- " + fmt(two.slope_se) + " (target " + fmt(oracle) + ") [" +
           fmt(el) + "s]";
  return ok_nn && ok_two;
}

// --------------------------------------------------------------------------
// 8. Uniform-CLT sweep on a heavy-tail field over the diffusive window
//    |x| <= sqrt(n), n in {1e3, 4e3, 1.6e4}: the sup discrepancy for the
//    clipped-sup and cos-endpoint functionals is nonincreasing within joint
//    confidence radii and ends below 0.05 + conf. Wall-clock budget: 10
//    minutes at 8-way parallelism (scaled for the workers actually used).
// --------------------------------------------------------------------------
bool criterion8(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const Environment env = make_polynomial(8000, 8001);
  const SigmaEstimate sig = estimate_sigma(env, 0, {100, 1000, 10000}, 4000, 81);

  UcltConfig cfg;
  cfg.H = 1.0;
  cfg.alpha = 0.5;
  cfg.n_list = {1000, 4000, 16000};
  cfg.functionals = {1, 2};
  cfg.paths_per_start = 6000;
  cfg.brownian_mc = 100000;
  cfg.brownian_dt = 1.0 / 4096.0;
  cfg.brownian_bridge = true;
  cfg.workers = 1;
  const UcltReport rep = uclt_experiment(env, sig.sigma, cfg, 82);

  const TrendCheck t1 = uclt_trend(rep, 1, 0.05);
  const TrendCheck t2 = uclt_trend(rep, 2, 0.05);
  const double el = seconds_since(t0);
  const double scaled = el * static_cast<double>(cfg.workers) / 8.0;
  const bool ok = t1.nonincreasing && t1.final_within && t2.nonincreasing && t2.final_within &&
                  scaled <= 600.0;
  detail = "sigma " + fmt(sig.sigma) + "; clipped-sup final " + fmt(t1.final_value) + " (conf " +
           fmt(t1.final_conf) + ", worst increase " + fmt(t1.worst_increase) +
           "); cos-endpoint final " + fmt(t2.final_value) + " (conf " + fmt(t2.final_conf) +
           ", worst increase " + fmt(t2.worst_increase) + ") [" + fmt(el) +
           "s, 8-way-scaled " + fmt(scaled) + "s]";
  return ok;
}

// --------------------------------------------------------------------------
// 9. Blocked medium probed beyond the diffusive window (|x| <= n^{3/4}):
//    requires a persistent sup discrepancy above 0.1 at three confidence
//    radii at the largest n, while the diffusive-window sweep still passes
//    the criterion-8 trend. The wide-window gap of this field measures a few
//    hundredths at these scales, so the 0.1 bar is expected to stay red; the
//    check is reported honestly rather than weakened.
// --------------------------------------------------------------------------
bool criterion9(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const Environment env = make_block(8900, 9001);
  const SigmaEstimate sig = estimate_sigma(env, 0, {100, 1000, 10000}, 4000, 91);

  UcltConfig wide;
  wide.H = 1.0;
  wide.alpha = 0.75;
  wide.n_list = {1000, 4000, 16000};
  wide.functionals = {1, 2};
  wide.paths_per_start = 2000;
  wide.brownian_mc = 100000;
  wide.brownian_dt = 1.0 / 4096.0;
  wide.brownian_bridge = true;
  wide.workers = 1;
  const UcltReport rep_wide = uclt_experiment(env, sig.sigma, wide, 92);

  UcltConfig diff = wide;
  diff.alpha = 0.5;
  const UcltReport rep_diff = uclt_experiment(env, sig.sigma, diff, 93);

  bool exceeds = false;
  double best_sup = 0, best_conf = 0;
  for (const int f : {1, 2}) {
    const UcltFunctionalRow& row = rep_wide.row(16000, f);
    if (row.sup_disc - row.conf > best_sup - best_conf) {
      best_sup = row.sup_disc;
      best_conf = row.conf;
    }
    if (row.sup_disc - row.conf > 0.1) exceeds = true;
  }
  const TrendCheck t1 = uclt_trend(rep_diff, 1, 0.05);
  const TrendCheck t2 = uclt_trend(rep_diff, 2, 0.05);
  const bool diff_ok = t1.nonincreasing && t1.final_within && t2.nonincreasing && t2.final_within;
  const double el = seconds_since(t0);
  const bool ok = exceeds && diff_ok;
  detail = "wide-window sup discrepancy " + fmt(best_sup) + " (conf " + fmt(best_conf) + ") " +
           (exceeds ? "exceeds" : "does not exceed") + " 0.1; diffusive-window trend check " +
           (diff_ok ? "passed" : "failed") + "; counterexample-consistent " +
           (counterexample_consistent(rep_wide) ? "yes" : "no") + " [" + fmt(el) + "s]";
  return ok;
}

// --------------------------------------------------------------------------
// 10. Determinism: every pipeline command, replayed from its manifest with a
//     different worker count, reproduces its output directory byte for byte.
// --------------------------------------------------------------------------
int run_cli(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(CONDLAB_CLI_PATH) + " " + args + " >> " + log + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

bool dirs_identical(const fs::path& a, const fs::path& b, std::string& why) {
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::size_t count_a = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    ++count_a;
    const fs::path other = b / entry.path().filename();
    if (!fs::exists(other)) {
      why = entry.path().filename().string() + " missing in replay";
      return false;
    }
    if (slurp(entry.path()) != slurp(other)) {
      why = entry.path().filename().string() + " differs";
      return false;
    }
  }
  std::size_t count_b = 0;
  for (const auto& entry : fs::directory_iterator(b))
    if (entry.is_regular_file()) ++count_b;
  if (count_a != count_b) {
    why = "file counts differ";
    return false;
  }
  return true;
}

bool criterion10(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  unsetenv("CONDUCTANCE_LAB_OUT");
  const fs::path base = fs::temp_directory_path() / "condlab_acceptance10";
  fs::remove_all(base);
  fs::create_directories(base);
  const std::string log = (base / "cli.log").string();

  const fs::path env_dir = base / "env";
  if (run_cli("gen-env --model iid-tworange --window=-1200 --window=1200 --kappa 0.5 --seed 11"
              " --outdir " +
                  env_dir.string(),
              log) != 0) {
    detail = "environment generation failed (see " + log + ")";
    return false;
  }
  const std::string env_file = (env_dir / "environment.txt").string();

  const std::vector<std::string> runs = {
      "validate --env " + env_file,
      "simulate --env " + env_file + " --start 0 --steps 500 --paths 64 --seed 3 --margin-c 1",
      "exact --env " + env_file + " --op escape --L 50",
      "exact --env " + env_file + " --op exit-dist --a=-10 --b 10 --x 1 --mass-radii 0 1 2 5 10",
      "estimate-sigma --env " + env_file +
          " --start 0 --n 100 300 1000 --paths 200 --seed 7 --margin-c 1",
      "verify-uclt --env " + env_file +
          " --n 200 400 --functional clipped-sup-abs --paths-per-start 128 --grid-divisor 1"
          " --grid-extras 2 --classify-sample 1 --sigma 1.0 --threshold-mc 2000"
          " --threshold-dt 0.00390625 --brownian-mc 4096 --brownian-dt 0.0078125 --margin-c 1"
          " --seed 5 --epsilon 0.75",
  };

  int checked = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const fs::path dir_a = base / ("run" + std::to_string(i));
    const fs::path dir_b = base / ("replay" + std::to_string(i));
    if (run_cli(runs[i] + " --workers 1 --outdir " + dir_a.string(), log) != 0) {
      detail = "command " + std::to_string(i) + " failed (see " + log + ")";
      return false;
    }
    if (run_cli("rerun --manifest " + (dir_a / "manifest.json").string() + " --workers 4 --outdir " +
                    dir_b.string(),
                log) != 0) {
      detail = "replay " + std::to_string(i) + " failed (see " + log + ")";
      return false;
    }
    std::string why;
    if (!dirs_identical(dir_a, dir_b, why)) {
      detail = "command " + std::to_string(i) + ": " + why;
      return false;
    }
    ++checked;
  }

  // The generator itself replays too.
  const fs::path regen = base / "env_replay";
  if (run_cli("rerun --manifest " + (env_dir / "manifest.json").string() +
                  " --workers 4 --outdir " + regen.string(),
              log) != 0) {
    detail = "generator replay failed (see " + log + ")";
    return false;
  }
  std::string why;
  if (!dirs_identical(env_dir, regen, why)) {
    detail = "generator replay: " + why;
    return false;
  }
  const double el = seconds_since(t0);
  detail = std::to_string(checked + 1) +
           " command replays byte-identical across worker counts [" + fmt(el) + "s]";
  fs::remove_all(base);
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int selected = 0;  // 0 = all
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      selected = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
      return 1;
    }
  }

  using Fn = bool (*)(std::string&);
  const Fn criteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                         criterion6, criterion7, criterion8, criterion9, criterion10};
  bool all_ok = true;
  for (int k = 1; k <= 10; ++k) {
    if (selected != 0 && selected != k) continue;
    std::string detail;
    const bool ok = criteria[k - 1](detail);
    std::printf("CRITERION %d: %s - %s\n", k, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) all_ok = false;
  }
  return all_ok ? 0 : 1;
}
