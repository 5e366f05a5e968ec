// Command-line front end: configuration, orchestration, persistence, and
// report/plot emission. Every run resolves its configuration into a manifest
// (manifest.json, also echoed as a '#' line in each table); `rerun --manifest`
// replays it byte-for-byte. Worker count and output directory are execution
// details and stay out of the manifest, so reruns are byte-identical for any
// worker count.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "condlab/environment.hpp"
#include "condlab/harness.hpp"
#include "condlab/interval_solver.hpp"
#include "condlab/parallel.hpp"
#include "condlab/reference.hpp"
#include "condlab/rng.hpp"
#include "condlab/walk.hpp"

namespace {

using nlohmann::json;  // std::map-backed: sorted keys, deterministic dumps

constexpr const char* kArtifact = "condlab";
constexpr const char* kArtifactVersion = "0.1.0";

std::string resolve_outdir(std::string dir) {
  if (const char* e = std::getenv("CONDUCTANCE_LAB_OUT"); e != nullptr && *e != '\0') dir = e;
  std::filesystem::create_directories(dir);
  return dir;
}

std::string num(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  return f;
}

// Writes manifest.json and returns the single-line echo used in tables.
std::string write_manifest(json cfg, const std::string& dir) {
  cfg["artifact"] = kArtifact;
  cfg["artifact_version"] = kArtifactVersion;
  auto f = open_out(dir + "/manifest.json");
  f << cfg.dump(2) << "\n";
  return cfg.dump();
}

condlab::Environment load_env(const json& cfg) {
  return condlab::load_environment(cfg.at("env_file").get<std::string>());
}

// Defect syntax: edge:X:VAL plants omega_{X,X+1} = VAL.
condlab::Environment apply_defect(const condlab::Environment& env, const std::string& spec) {
  std::istringstream in(spec);
  std::string kind, xs, vs;
  if (!std::getline(in, kind, ':') || !std::getline(in, xs, ':') || !std::getline(in, vs) ||
      kind != "edge")
    throw std::invalid_argument("defect must look like edge:X:VAL, got '" + spec + "'");
  return env.with_conductance(std::stol(xs), std::stol(xs) + 1, std::stod(vs));
}

int run_gen_env(const json& cfg, const std::string& dir) {
  const std::string echo = write_manifest(cfg, dir);
  condlab::EnvironmentSpec s;
  s.model_tag = cfg.at("model").get<std::string>();
  s.x_min = cfg.at("x_min").get<long>();
  s.x_max = cfg.at("x_max").get<long>();
  s.truncation_radius = cfg.at("radius").get<int>();
  s.kappa = cfg.at("kappa").get<double>();
  s.tail_K = cfg.at("tail_K").get<double>();
  s.tail_beta = cfg.at("tail_beta").get<double>();
  s.block_eps = cfg.at("block_eps").get<double>();
  s.c1_lo = cfg.at("c1_lo").get<double>();
  s.c1_hi = cfg.at("c1_hi").get<double>();
  s.c2_hi = cfg.at("c2_hi").get<double>();
  s.profile = cfg.at("profile").get<std::vector<double>>();
  s.seed = cfg.at("env_seed").get<std::uint64_t>();
  condlab::Environment env = condlab::generate(s);
  for (const auto& d : cfg.at("defects").get<std::vector<std::string>>())
    env = apply_defect(env, d);
  condlab::save_environment(env, dir + "/environment.txt");
  const condlab::ValidationReport report = condlab::validate(env);
  {
    auto f = open_out(dir + "/validation.txt");
    f << "# " << echo << "\n" << report.to_text();
  }
  std::cout << (report.pass ? "valid" : "INVALID") << " environment " << env.id() << " -> " << dir
            << "/environment.txt\n";
  if (!report.pass) std::cout << report.to_text();
  return report.pass ? 0 : 2;
}

int run_validate(const json& cfg, const std::string& dir) {
  const std::string echo = write_manifest(cfg, dir);
  const condlab::Environment env = load_env(cfg);
  const condlab::ValidationReport report = condlab::validate(env);
  {
    auto f = open_out(dir + "/validation.txt");
    f << "# " << echo << "\n" << report.to_text();
  }
  std::cout << report.to_text();
  return report.pass ? 0 : 2;
}

int run_simulate(const json& cfg, int workers, const std::string& dir) {
  const std::string echo = write_manifest(cfg, dir);
  const condlab::Environment env = load_env(cfg);
  const long start = cfg.at("start").get<long>();
  const long steps = cfg.at("steps").get<long>();
  const long paths = cfg.at("paths").get<long>();
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  condlab::SimulateOptions opts;
  opts.margin_c = cfg.at("margin_c").get<double>();

  std::vector<condlab::Path> out(static_cast<std::size_t>(paths));
  condlab::parallel_for(out.size(), workers, [&](std::size_t i) {
    out[i] = condlab::simulate(env, start, steps, condlab::rng::derive(seed, "cli.walk", i), opts);
  });
  auto f = open_out(dir + "/walks.csv");
  f << "# " << echo << "\n";
  f << "path,step,site\n";
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t k = 0; k < out[i].sites.size(); ++k)
      f << i << ',' << k << ',' << out[i].sites[k] << "\n";
  std::cout << "wrote " << paths << " walk(s) of " << steps << " steps to " << dir
            << "/walks.csv\n";
  return 0;
}

int run_exact(const json& cfg, const std::string& dir) {
  const std::string echo = write_manifest(cfg, dir);
  const condlab::Environment env = load_env(cfg);
  const std::string op = cfg.at("op").get<std::string>();

  auto f = open_out(dir + "/exact.csv");
  f << "# " << echo << "\n";
  f << "op,key,value\n";
  auto row = [&](const std::string& key, const std::string& value) {
    f << op << ',' << key << ',' << value << "\n";
  };

  if (op == "escape" || op == "dirichlet") {
    const long L = cfg.at("L").get<long>();
    const condlab::EscapeSolution sol = condlab::escape_solution(env, L);
    row("L", std::to_string(L));
    row("probability", num(sol.probability));
    if (op == "escape") {
      const auto fc = condlab::field_constants(env, -L, L);
      const double bound = 4.0 * fc.gamma1 / (fc.kappa_hat * static_cast<double>(L));
      row("gamma1", num(fc.gamma1));
      row("kappa_hat", num(fc.kappa_hat));
      row("bound", num(bound));
      row("bound_satisfied", sol.probability <= bound ? "1" : "0");
    } else {
      const long hi = -sol.lo;
      const double phi = condlab::dirichlet_form(
          env, [&](long x) { return sol.at(x); }, sol.lo, hi);
      const double via_energy = phi / (2.0 * env.total_conductance(0));
      row("energy", num(phi));
      row("probability_via_energy", num(via_energy));
      row("residual", num(std::abs(sol.probability - via_energy)));
    }
  } else if (op == "exit-dist") {
    const long a = cfg.at("a").get<long>();
    const long b = cfg.at("b").get<long>();
    const long x = cfg.at("x").get<long>();
    const auto problem =
        condlab::build_collapsed_chain(env, a, b, condlab::Geometry::kPuncturedLine);
    const condlab::ExitDistribution dist = condlab::exit_distribution(problem, x);
    row("a", std::to_string(a));
    row("b", std::to_string(b));
    row("x", std::to_string(x));
    row("total", num(dist.total()));
    row("expected_exit_time", num(condlab::expected_exit_time(problem, x)));
    for (const long M : cfg.at("mass_radii").get<std::vector<long>>())
      row("mass_inside_" + std::to_string(M), num(dist.mass_inside(M)));
    auto g = open_out(dir + "/exit_distribution.csv");
    g << "# " << echo << "\n";
    g << "site,probability\n";
    for (const auto& [site, p] : dist.probabilities) g << site << ',' << num(p) << "\n";
  } else if (op == "confinement") {
    const long a = cfg.at("a").get<long>();
    const long b = cfg.at("b").get<long>();
    const long x = cfg.at("x").get<long>();
    const auto ns = cfg.at("n_list").get<std::vector<long>>();
    const auto problem = condlab::build_collapsed_chain(env, a, b, condlab::Geometry::kTwoSided);
    const std::vector<double> curve = condlab::confinement_log_curve(problem, x, ns);
    const condlab::RateFit fit = condlab::fit_tail_rate(ns, curve);
    row("a", std::to_string(a));
    row("b", std::to_string(b));
    row("x", std::to_string(x));
    row("lambda", num(fit.lambda));
    row("rel_variation", num(fit.rel_variation));
    row("lambda_gap_squared", num(fit.lambda * static_cast<double>((b - a) * (b - a))));
    auto g = open_out(dir + "/confinement.csv");
    g << "# " << echo << "\n";
    g << "n,log_tail\n";
    for (std::size_t i = 0; i < ns.size(); ++i) g << ns[i] << ',' << num(curve[i]) << "\n";
  } else if (op == "commute-check") {
    const long a = cfg.at("a").get<long>();
    const long b = cfg.at("b").get<long>();
    const long x = cfg.at("x").get<long>();
    const auto problem = condlab::build_collapsed_chain(env, a, b, condlab::Geometry::kTwoSided);
    const auto [lhs, rhs] = condlab::commute_time_check(problem, x);
    row("lhs", num(lhs));
    row("rhs", num(rhs));
    row("relative_residual", num(std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs))));
    row("detailed_balance_residual", num(problem.detailed_balance_residual()));
  } else if (op == "reversal-check") {
    const long a = cfg.at("a").get<long>();
    const long b = cfg.at("b").get<long>();
    const long x = cfg.at("x").get<long>();
    const long y = cfg.at("y").get<long>();
    const auto problem =
        condlab::build_collapsed_chain(env, a, b, condlab::Geometry::kPuncturedLine);
    const auto [lhs, rhs] = condlab::reversal_identity_check(problem, x, y);
    row("lhs", num(lhs));
    row("rhs", num(rhs));
    row("relative_residual", num(std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs))));
  } else {
    throw std::invalid_argument("unknown exact op '" + op +
                                "' (escape, dirichlet, exit-dist, confinement, commute-check, "
                                "reversal-check)");
  }
  std::cout << "wrote " << dir << "/exact.csv (op " << op << ")\n";
  return 0;
}

int run_estimate_sigma(const json& cfg, int workers, const std::string& dir) {
  const std::string echo = write_manifest(cfg, dir);
  const condlab::Environment env = load_env(cfg);
  condlab::SigmaOptions opts;
  opts.margin_c = cfg.at("margin_c").get<double>();
  opts.workers = workers;
  const condlab::SigmaEstimate est = condlab::estimate_sigma(
      env, cfg.at("start").get<long>(), cfg.at("n_list").get<std::vector<long>>(),
      cfg.at("paths").get<long>(), cfg.at("seed").get<std::uint64_t>(), opts);
  condlab::write_sigma_table(est, dir + "/sigma.csv", echo);
  std::cout << "sigma " << num(est.sigma) << " se " << num(est.sigma_se) << " -> " << dir
            << "/sigma.csv\n";
  return 0;
}

// Shared by classify-sites and verify-uclt: sigma (estimated unless given)
// and the epsilon-threshold table (loaded unless estimated here).
double resolve_sigma(const json& cfg, const condlab::Environment& env, int workers,
                     const std::string& dir, const std::string& echo, std::uint64_t seed) {
  const double given = cfg.at("sigma").get<double>();
  if (given > 0) return given;
  condlab::SigmaOptions opts;
  opts.margin_c = cfg.at("margin_c").get<double>();
  opts.workers = workers;
  const condlab::SigmaEstimate est = condlab::estimate_sigma(
      env, 0, cfg.at("sigma_n_list").get<std::vector<long>>(), cfg.at("sigma_paths").get<long>(),
      condlab::rng::derive(seed, "cli.sigma"), opts);
  condlab::write_sigma_table(est, dir + "/sigma.csv", echo);
  std::cout << "estimated sigma " << num(est.sigma) << " se " << num(est.sigma_se) << "\n";
  return est.sigma;
}

condlab::EpsilonThresholds resolve_thresholds(const json& cfg, const std::string& dir,
                                              std::uint64_t seed) {
  const double epsilon = cfg.at("epsilon").get<double>();
  const std::string file = cfg.at("thresholds_file").get<std::string>();
  if (!file.empty()) {
    const auto table = condlab::load_thresholds(file);
    for (const auto& row : table)
      if (std::abs(row.epsilon - epsilon) < 1e-12) return row;
    throw std::runtime_error("thresholds file has no row for epsilon " + num(epsilon));
  }
  const condlab::EpsilonThresholds th = condlab::estimate_thresholds(
      epsilon, cfg.at("threshold_mc").get<long>(), cfg.at("threshold_dt").get<double>(),
      condlab::rng::derive(seed, "cli.thresholds"));
  condlab::save_thresholds({th}, dir + "/thresholds.txt");
  std::cout << "thresholds: delta " << num(th.delta_eps) << " h " << num(th.h_eps) << "\n";
  if (th.delta_bottomed || th.h_bottomed)
    std::cout << "warning: threshold scan bottomed out at dt " << num(th.dt)
              << "; refine --threshold-dt\n";
  return th;
}

int run_classify_sites(const json& cfg, int workers, const std::string& dir) {
  const std::string echo = write_manifest(cfg, dir);
  const condlab::Environment env = load_env(cfg);
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  const double epsilon = cfg.at("epsilon").get<double>();
  const long n = cfg.at("n").get<long>();

  const double sigma = resolve_sigma(cfg, env, workers, dir, echo, seed);
  const condlab::EpsilonThresholds th = resolve_thresholds(cfg, dir, seed);
  const condlab::CatalogueMeans bm = condlab::brownian_catalogue_means(
      cfg.at("brownian_mc").get<long>(), cfg.at("brownian_dt").get<double>(),
      condlab::rng::derive(seed, "cli.brownian"), condlab::SetParams{});

  condlab::ClassifyOptions opts;
  opts.mc_ranges = cfg.at("mc_ranges").get<long>();
  opts.mc_modulus = cfg.at("mc_modulus").get<long>();
  opts.mc_paths = cfg.at("mc_paths").get<long>();
  opts.margin_c = std::min(opts.margin_c, cfg.at("margin_c").get<double>());
  opts.workers = workers;
  std::vector<condlab::SiteClassification> rows;
  for (const long x : cfg.at("sites").get<std::vector<long>>()) {
    rows.push_back(condlab::classify_site(env, x, epsilon, n, th, sigma, bm,
                                          condlab::rng::derive(seed, "cli.classify",
                                                               condlab::rng::zz(x)),
                                          opts));
    const auto& r = rows.back();
    std::cout << "site " << r.site << ": " << (r.is_good ? "good" : "not-good") << " "
              << (r.is_nice ? "nice" : "not-nice") << " (gap " << num(r.worst_expectation_gap)
              << ", p_ranges " << num(r.p_ranges) << ", p_modulus " << num(r.p_modulus)
              << ", p_nice " << num(r.p_nice) << ")\n";
  }
  condlab::write_classification_table(rows, dir + "/classification.csv", echo);
  return 0;
}

int run_verify_uclt(const json& cfg, int workers, const std::string& dir) {
  const std::string echo = write_manifest(cfg, dir);
  const condlab::Environment env = load_env(cfg);
  const auto seed = cfg.at("seed").get<std::uint64_t>();

  condlab::UcltConfig uc;
  uc.H = cfg.at("H").get<double>();
  uc.alpha = cfg.at("alpha").get<double>();
  uc.n_list = cfg.at("n_list").get<std::vector<long>>();
  uc.paths_per_start = cfg.at("paths_per_start").get<long>();
  uc.brownian_mc = cfg.at("brownian_mc").get<long>();
  uc.brownian_dt = cfg.at("brownian_dt").get<double>();
  uc.grid_divisor = cfg.at("grid_divisor").get<int>();
  uc.grid_extras = cfg.at("grid_extras").get<int>();
  uc.margin_c = cfg.at("margin_c").get<double>();
  uc.workers = workers;
  uc.functionals.clear();
  for (const auto& name : cfg.at("functionals").get<std::vector<std::string>>()) {
    const int id = condlab::functional_id(name);
    if (id < 0) throw std::invalid_argument("unknown functional '" + name + "'");
    uc.functionals.push_back(id);
  }

  const double sigma = resolve_sigma(cfg, env, workers, dir, echo, seed);
  const condlab::EpsilonThresholds th = resolve_thresholds(cfg, dir, seed);

  // Classification sample: the origin plus starts pushed out to the window
  // scale of the smallest n.
  const int sample = cfg.at("classify_sample").get<int>();
  if (sample > 0) {
    const long n0 = uc.n_list.front();
    const long w = static_cast<long>(
        std::ceil(uc.H * std::sqrt(static_cast<double>(n0))));
    const condlab::CatalogueMeans bm = condlab::brownian_catalogue_means(
        uc.brownian_mc, uc.brownian_dt, condlab::rng::derive(seed, "cli.brownian"),
        uc.set_params);
    condlab::ClassifyOptions copt;
    copt.margin_c = std::min(copt.margin_c, uc.margin_c);
    copt.workers = workers;
    std::vector<condlab::SiteClassification> rows;
    for (int j = 0; j < sample; ++j) {
      const long m = (j + 1) / 2;
      const long x = (j == 0) ? 0 : (j % 2 == 1 ? m * w : -m * w);
      rows.push_back(condlab::classify_site(env, x, cfg.at("epsilon").get<double>(), n0, th,
                                            sigma, bm,
                                            condlab::rng::derive(seed, "cli.classify",
                                                                 condlab::rng::zz(x)),
                                            copt));
      const auto& r = rows.back();
      std::cout << "classified site " << r.site << ": " << (r.is_good ? "good" : "not-good")
                << " " << (r.is_nice ? "nice" : "not-nice") << "\n";
    }
    condlab::write_classification_table(rows, dir + "/classification.csv", echo);
  }

  const condlab::UcltReport rep =
      condlab::uclt_experiment(env, sigma, uc, condlab::rng::derive(seed, "cli.uclt"));
  condlab::write_uclt_tables(rep, dir, echo);
  condlab::write_uclt_plot_script(rep, dir);

  const double budget = cfg.at("trend_budget").get<double>();
  std::ostringstream summary;
  summary << "sigma," << num(sigma) << "\n";
  for (const int fid : uc.functionals) {
    const condlab::TrendCheck t = condlab::uclt_trend(rep, fid, budget);
    summary << "trend," << condlab::functional_name(fid) << ",nonincreasing,"
            << (t.nonincreasing ? 1 : 0) << ",worst_increase," << num(t.worst_increase)
            << ",final," << num(t.final_value) << ",conf," << num(t.final_conf)
            << ",final_within_budget," << (t.final_within ? 1 : 0) << "\n";
  }
  const bool counter = condlab::counterexample_consistent(rep);
  summary << "counterexample_consistent," << (counter ? 1 : 0) << "\n";
  if (counter) summary << "COUNTEREXAMPLE-CONSISTENT\n";
  {
    auto f = open_out(dir + "/summary.txt");
    f << "# " << echo << "\n" << summary.str();
  }
  std::cout << summary.str();
  std::cout << "wrote uclt tables and plot script to " << dir << "\n";
  return 0;
}

int dispatch(const json& cfg, int workers, const std::string& dir) {
  const std::string cmd = cfg.at("command").get<std::string>();
  if (cmd == "gen-env") return run_gen_env(cfg, dir);
  if (cmd == "validate") return run_validate(cfg, dir);
  if (cmd == "simulate") return run_simulate(cfg, workers, dir);
  if (cmd == "exact") return run_exact(cfg, dir);
  if (cmd == "estimate-sigma") return run_estimate_sigma(cfg, workers, dir);
  if (cmd == "classify-sites") return run_classify_sites(cfg, workers, dir);
  if (cmd == "verify-uclt") return run_verify_uclt(cfg, workers, dir);
  throw std::runtime_error("unknown command in manifest: " + cmd);
}

int run_rerun(const std::string& manifest_path, int workers, const std::string& dir) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
  json cfg = json::parse(in);
  cfg.erase("artifact");
  cfg.erase("artifact_version");
  return dispatch(cfg, workers, dir);
}

// Attaches sigma/threshold pipeline flags shared by classify-sites and
// verify-uclt. Values land directly in the json config.
struct PipelineFlags {
  double sigma = 0.0;  // 0 = estimate
  std::vector<long> sigma_n_list = {100, 1000, 10000};
  long sigma_paths = 4000;
  std::string thresholds_file;
  long threshold_mc = 20000;
  double threshold_dt = 1.0 / 512;
  double epsilon = 0.2;
  long brownian_mc = 100000;
  double brownian_dt = 1.0 / 4096;
  double margin_c = 6.0;
  std::uint64_t seed = 1;
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& p) {
  cmd->add_option("--sigma", p.sigma, "diffusivity; 0 estimates it first");
  cmd->add_option("--sigma-n", p.sigma_n_list, "horizons for the sigma fit");
  cmd->add_option("--sigma-paths", p.sigma_paths, "paths per horizon for the sigma fit");
  cmd->add_option("--thresholds", p.thresholds_file, "threshold table to load (else estimated)");
  cmd->add_option("--threshold-mc", p.threshold_mc, "Monte Carlo samples per threshold scan");
  cmd->add_option("--threshold-dt", p.threshold_dt, "Brownian grid step for threshold scans");
  cmd->add_option("--epsilon", p.epsilon, "closeness parameter");
  cmd->add_option("--brownian-mc", p.brownian_mc, "Brownian-side catalogue samples");
  cmd->add_option("--brownian-dt", p.brownian_dt, "Brownian-side grid step");
  cmd->add_option("--margin-c", p.margin_c, "entry margin factor for walk windows");
  cmd->add_option("--seed", p.seed, "master seed");
}

void put_pipeline(json& cfg, const PipelineFlags& p) {
  cfg["sigma"] = p.sigma;
  cfg["sigma_n_list"] = p.sigma_n_list;
  cfg["sigma_paths"] = p.sigma_paths;
  cfg["thresholds_file"] = p.thresholds_file;
  cfg["threshold_mc"] = p.threshold_mc;
  cfg["threshold_dt"] = p.threshold_dt;
  cfg["epsilon"] = p.epsilon;
  cfg["brownian_mc"] = p.brownian_mc;
  cfg["brownian_dt"] = p.brownian_dt;
  cfg["margin_c"] = p.margin_c;
  cfg["seed"] = p.seed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"laboratory for one-dimensional random walks among random conductances"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string outdir = "out";
  int workers = 1;
  app.add_option("--outdir", outdir, "output directory (CONDUCTANCE_LAB_OUT overrides)");
  app.add_option("--workers", workers, "worker threads (never affects output bytes)");

  int rc = 0;

  // gen-env -------------------------------------------------------------
  auto* ge = app.add_subcommand("gen-env", "generate a conductance field and validate it");
  struct {
    std::string model = "homogeneous";
    std::vector<long> window = {-1000, 1000};
    int radius = 0;
    double kappa = 1.0, tail_K = 2.0, tail_beta = 1.0, block_eps = 0.5;
    double c1_lo = 0.5, c1_hi = 2.0, c2_hi = 0.3;
    double c1 = 1.0, c2 = 0.0;
    std::vector<double> profile;
    std::uint64_t seed = 1;
    std::vector<std::string> defects;
  } g;
  ge->add_option("--model", g.model,
                 "homogeneous | iid-polynomial | iid-tworange | block-counterexample");
  ge->add_option("--window", g.window, "site window lo hi")->expected(2);
  ge->add_option("--radius", g.radius, "truncation radius (0 = derive)");
  ge->add_option("--kappa", g.kappa, "nearest-neighbor conductance floor");
  ge->add_option("--tail-K", g.tail_K, "jump-envelope scale");
  ge->add_option("--tail-beta", g.tail_beta, "jump-envelope decay exponent");
  ge->add_option("--block-eps", g.block_eps, "block-size tail exponent");
  ge->add_option("--c1-lo", g.c1_lo, "two-range nearest-neighbor lower bound");
  ge->add_option("--c1-hi", g.c1_hi, "two-range nearest-neighbor upper bound");
  ge->add_option("--c2-hi", g.c2_hi, "two-range second-neighbor upper bound");
  auto* c1opt = ge->add_option("--c1", g.c1, "homogeneous nearest-neighbor conductance");
  auto* c2opt = ge->add_option("--c2", g.c2, "homogeneous second-neighbor conductance");
  ge->add_option("--profile", g.profile, "homogeneous conductance profile c_1..c_R");
  ge->add_option("--seed", g.seed, "generation seed");
  ge->add_option("--defect", g.defects, "plant edge:X:VAL before validation");
  ge->callback([&] {
    json cfg;
    cfg["command"] = "gen-env";
    cfg["model"] = g.model;
    cfg["x_min"] = g.window[0];
    cfg["x_max"] = g.window[1];
    cfg["radius"] = g.radius;
    cfg["kappa"] = g.kappa;
    cfg["tail_K"] = g.tail_K;
    cfg["tail_beta"] = g.tail_beta;
    cfg["block_eps"] = g.block_eps;
    cfg["c1_lo"] = g.c1_lo;
    cfg["c1_hi"] = g.c1_hi;
    cfg["c2_hi"] = g.c2_hi;
    std::vector<double> profile = g.profile;
    if (profile.empty()) {
      profile = {g.c1};
      if (c2opt->count() > 0) profile.push_back(g.c2);
    } else if (c1opt->count() > 0 || c2opt->count() > 0) {
      throw CLI::ValidationError("--profile conflicts with --c1/--c2");
    }
    cfg["profile"] = profile;
    cfg["env_seed"] = g.seed;
    cfg["defects"] = g.defects;
    rc = run_gen_env(cfg, resolve_outdir(outdir));
  });

  // validate ------------------------------------------------------------
  auto* va = app.add_subcommand("validate", "validate a stored conductance field");
  std::string va_env;
  va->add_option("--env", va_env, "environment file")->required();
  va->callback([&] {
    json cfg;
    cfg["command"] = "validate";
    cfg["env_file"] = va_env;
    rc = run_validate(cfg, resolve_outdir(outdir));
  });

  // simulate ------------------------------------------------------------
  auto* si = app.add_subcommand("simulate", "sample quenched walk trajectories");
  struct {
    std::string env;
    long start = 0, steps = 1000, paths = 1;
    std::uint64_t seed = 1;
    double margin_c = 6.0;
  } s;
  si->add_option("--env", s.env, "environment file")->required();
  si->add_option("--start", s.start, "starting site");
  si->add_option("--steps", s.steps, "steps per walk");
  si->add_option("--paths", s.paths, "number of walks");
  si->add_option("--seed", s.seed, "master seed");
  si->add_option("--margin-c", s.margin_c, "entry margin factor (0 disables)");
  si->callback([&] {
    json cfg;
    cfg["command"] = "simulate";
    cfg["env_file"] = s.env;
    cfg["start"] = s.start;
    cfg["steps"] = s.steps;
    cfg["paths"] = s.paths;
    cfg["seed"] = s.seed;
    cfg["margin_c"] = s.margin_c;
    rc = run_simulate(cfg, workers, resolve_outdir(outdir));
  });

  // exact ---------------------------------------------------------------
  auto* ex = app.add_subcommand("exact", "exact finite-interval computations");
  struct {
    std::string env, op = "exit-dist";
    long a = -10, b = 10, x = 1, y = 10, L = 10;
    std::vector<long> n_list = {100, 200, 400, 800, 1600};
    std::vector<long> mass_radii = {0, 1, 2, 5, 10, 20, 50};
  } e;
  ex->add_option("--env", e.env, "environment file")->required();
  ex->add_option("--op", e.op,
                 "escape | dirichlet | exit-dist | confinement | commute-check | reversal-check");
  ex->add_option("--a", e.a, "interval left endpoint");
  ex->add_option("--b", e.b, "interval right endpoint");
  ex->add_option("--x", e.x, "interior site");
  ex->add_option("--y", e.y, "exit-side site (reversal-check)");
  ex->add_option("--L", e.L, "halfwidth for escape/dirichlet");
  ex->add_option("--n", e.n_list, "horizons for confinement");
  ex->add_option("--mass-radii", e.mass_radii, "radii for exit-mass concentration");
  ex->callback([&] {
    json cfg;
    cfg["command"] = "exact";
    cfg["env_file"] = e.env;
    cfg["op"] = e.op;
    cfg["a"] = e.a;
    cfg["b"] = e.b;
    cfg["x"] = e.x;
    cfg["y"] = e.y;
    cfg["L"] = e.L;
    cfg["n_list"] = e.n_list;
    cfg["mass_radii"] = e.mass_radii;
    rc = run_exact(cfg, resolve_outdir(outdir));
  });

  // estimate-sigma --------------------------------------------------------
  auto* es = app.add_subcommand("estimate-sigma", "fit the diffusivity from endpoint variances");
  struct {
    std::string env;
    long start = 0, paths = 4000;
    std::vector<long> n_list = {100, 1000, 10000};
    std::uint64_t seed = 1;
    double margin_c = 6.0;
  } m;
  es->add_option("--env", m.env, "environment file")->required();
  es->add_option("--start", m.start, "starting site");
  es->add_option("--n", m.n_list, "horizons (>= 3, spanning a decade)");
  es->add_option("--paths", m.paths, "paths per horizon");
  es->add_option("--seed", m.seed, "master seed");
  es->add_option("--margin-c", m.margin_c, "entry margin factor");
  es->callback([&] {
    json cfg;
    cfg["command"] = "estimate-sigma";
    cfg["env_file"] = m.env;
    cfg["start"] = m.start;
    cfg["n_list"] = m.n_list;
    cfg["paths"] = m.paths;
    cfg["seed"] = m.seed;
    cfg["margin_c"] = m.margin_c;
    rc = run_estimate_sigma(cfg, workers, resolve_outdir(outdir));
  });

  // classify-sites --------------------------------------------------------
  auto* cs = app.add_subcommand("classify-sites", "good/nice classification at chosen sites");
  struct {
    std::string env;
    std::vector<long> sites = {0};
    long n = 1000;
    long mc_ranges = 400, mc_modulus = 200, mc_paths = 400;
  } c;
  PipelineFlags cp;
  cs->add_option("--env", c.env, "environment file")->required();
  cs->add_option("--sites", c.sites, "sites to classify");
  cs->add_option("--n", c.n, "scale n");
  cs->add_option("--mc-ranges", c.mc_ranges, "walks for the range item");
  cs->add_option("--mc-modulus", c.mc_modulus, "walks for the modulus item");
  cs->add_option("--mc-paths", c.mc_paths, "walks per m for the expectation item");
  add_pipeline_flags(cs, cp);
  cs->callback([&] {
    json cfg;
    cfg["command"] = "classify-sites";
    cfg["env_file"] = c.env;
    cfg["sites"] = c.sites;
    cfg["n"] = c.n;
    cfg["mc_ranges"] = c.mc_ranges;
    cfg["mc_modulus"] = c.mc_modulus;
    cfg["mc_paths"] = c.mc_paths;
    put_pipeline(cfg, cp);
    rc = run_classify_sites(cfg, workers, resolve_outdir(outdir));
  });

  // verify-uclt -----------------------------------------------------------
  auto* vu = app.add_subcommand(
      "verify-uclt", "full pipeline: sigma, thresholds, classification sample, start-grid sweep");
  struct {
    std::string env;
    double H = 1.0, alpha = 0.5, trend_budget = 0.05;
    std::vector<long> n_list = {1000, 4000, 16000};
    std::vector<std::string> functionals = {"clipped-sup-abs", "cos-endpoint", "clipped-endpoint",
                                            "exp-neg-energy"};
    long paths_per_start = 10000;
    int grid_divisor = 10, grid_extras = 32, classify_sample = 3;
  } v;
  PipelineFlags vp;
  vu->add_option("--env", v.env, "environment file")->required();
  vu->add_option("--H", v.H, "window scale");
  vu->add_option("--alpha", v.alpha, "window exponent (0.5 = diffusive window)");
  vu->add_option("--n", v.n_list, "scales n");
  vu->add_option("--functional", v.functionals, "catalogue functionals to sweep");
  vu->add_option("--paths-per-start", v.paths_per_start, "walks per start point");
  vu->add_option("--grid-divisor", v.grid_divisor, "start stride = ceil(sqrt(n)/divisor)");
  vu->add_option("--grid-extras", v.grid_extras, "extra seeded start points");
  vu->add_option("--classify-sample", v.classify_sample, "classification sample size (0 skips)");
  vu->add_option("--trend-budget", v.trend_budget, "final sup-discrepancy budget");
  add_pipeline_flags(vu, vp);
  vu->callback([&] {
    json cfg;
    cfg["command"] = "verify-uclt";
    cfg["env_file"] = v.env;
    cfg["H"] = v.H;
    cfg["alpha"] = v.alpha;
    cfg["n_list"] = v.n_list;
    cfg["functionals"] = v.functionals;
    cfg["paths_per_start"] = v.paths_per_start;
    cfg["grid_divisor"] = v.grid_divisor;
    cfg["grid_extras"] = v.grid_extras;
    cfg["classify_sample"] = v.classify_sample;
    cfg["trend_budget"] = v.trend_budget;
    put_pipeline(cfg, vp);
    rc = run_verify_uclt(cfg, workers, resolve_outdir(outdir));
  });

  // rerun -----------------------------------------------------------------
  auto* rr = app.add_subcommand("rerun", "replay a manifest byte-for-byte");
  std::string rr_manifest;
  rr->add_option("--manifest", rr_manifest, "manifest.json from a previous run")->required();
  rr->callback([&] { rc = run_rerun(rr_manifest, workers, resolve_outdir(outdir)); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return rc;
}
