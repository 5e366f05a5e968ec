#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "condlab/environment.hpp"
#include "condlab/reference.hpp"
#include "condlab/walk.hpp"

namespace condlab {

// ---------------------------------------------------------------------------
// Experiment drivers: diffusivity estimation, good/nice site classification,
// the uniform-CLT sweep over starting points, and the nice-site density scan.
// All Monte Carlo work draws from counter-based streams keyed by the master
// seed and work-item indices, so reports are identical for any worker count.
// ---------------------------------------------------------------------------

struct SigmaEstimate {
  double sigma = 0;
  double sigma_se = 0;
  double slope = 0;     // Var(X_n) ~ slope * n, weighted least squares through 0
  double slope_se = 0;
  std::vector<long> n_values;
  std::vector<double> variances;  // sample variance of X_n per n
  long paths_per_n = 0;
  std::string env_id;
};

struct SigmaOptions {
  double margin_c = 6.0;
  int workers = 1;
};

SigmaEstimate estimate_sigma(const Environment& env, long start, const std::vector<long>& n_list,
                             long paths_per_n, std::uint64_t seed, const SigmaOptions& opts = {});

// ---------------------------------------------------------------------------
// Site classification.
//
// A site is "good" at scale n when
//   (i)   the walk's rescaled law matches the Brownian reference on the
//         functional catalogue within epsilon — evaluated as a statistical
//         surrogate on the finite grid m in {n/4, n/2, n} (the defining
//         property quantifies over all m >= some threshold, which no finite
//         run can certify; reports carry the surrogate note);
//   (ii)  with probability >= 1 - epsilon, every range over the sliding
//         windows [k, k + u], k <= u := floor(h_eps n), and both one-sided
//         ranges over [0, u], reach delta_eps h_eps^{1/2} sigma sqrt(n);
//   (iii) with probability >= 1 - epsilon, the rescaled path stays within
//         epsilon of the origin up to time h_eps and within metric distance
//         epsilon of its time-shifts by s <= h_eps, s ranging over the shift
//         lattice the h threshold was calibrated on (thresholds.dt).
// "Nice" asks only for the single range over [0, u] to reach the same bar
// with probability >= 1 - 3 epsilon. Items (ii) and the nice probe share
// samples, so a good site is nice sample-by-sample, not just in expectation.
// ---------------------------------------------------------------------------
struct SiteClassification {
  long site = 0;
  double epsilon = 0;
  long n = 0;

  bool good_expectations = false;  // item (i), surrogate
  std::vector<long> m_grid;
  double worst_expectation_gap = 0;

  bool good_ranges = false;  // item (ii)
  double p_ranges = 0, p_ranges_se = 0;

  bool good_modulus = false;  // item (iii)
  double p_modulus = 0, p_modulus_se = 0;

  bool is_good = false;

  bool is_nice = false;
  double p_nice = 0, p_nice_se = 0;

  long mc_ranges = 0, mc_modulus = 0, mc_paths = 0;
  std::string note;
};

struct ClassifyOptions {
  long mc_ranges = 400;   // walks for item (ii) + nice (shared samples)
  long mc_modulus = 200;  // walks for item (iii) (each runs 32 n steps)
  long mc_paths = 400;    // walk paths per m-grid point for item (i)
  // Classification walks use a reduced entry margin: the modulus item needs
  // 32n-step trajectories and the default policy would demand impractically
  // wide windows; the hard abort at the window edge still stands.
  double margin_c = 1.0;
  int workers = 1;
};

// Window halfwidth (beyond |x| and the truncation radius) that classification
// walks need under the reduced margin policy.
long classify_required_margin(long n, double margin_c = 1.0);

SiteClassification classify_site(const Environment& env, long x, double epsilon, long n,
                                 const EpsilonThresholds& thresholds, double sigma,
                                 const CatalogueMeans& brownian, std::uint64_t seed,
                                 const ClassifyOptions& opts = {});

// (p, se) of the nice-site probability alone (cheap probe for scans).
std::pair<double, double> nice_probability(const Environment& env, long x, long n,
                                           const EpsilonThresholds& thresholds, double sigma,
                                           long mc_samples, std::uint64_t seed,
                                           double margin_c = 1.0, int workers = 1);

// ---------------------------------------------------------------------------
// Uniform-CLT sweep: sup over starting points x with |x| <= H * n^alpha of
// the discrepancy between walk-side and Brownian-side catalogue statistics.
// alpha = 1/2 probes the window of the uniform CLT; larger alpha widens the
// window beyond it (used to exhibit environments where uniformity fails).
// ---------------------------------------------------------------------------
struct UcltConfig {
  double H = 1.0;
  std::vector<long> n_list = {1000, 4000, 16000};
  double alpha = 0.5;
  std::vector<int> functionals = {1, 2, 3, 4};  // catalogue ids
  SetParams set_params;
  long paths_per_start = 10000;
  long brownian_mc = 100000;
  double brownian_dt = 1.0 / 4096;
  bool brownian_bridge = false;
  int grid_divisor = 10;  // start-point stride = ceil(sqrt(n) / grid_divisor)
  int grid_extras = 32;   // extra seeded start points per n
  double margin_c = 6.0;
  int workers = 1;
};

struct UcltFunctionalRow {
  long n = 0;
  int functional = 0;
  double brownian_mean = 0, brownian_se = 0;
  double sup_disc = 0;  // max over the grid of |walk mean - brownian mean|
  long argmax_x = 0;
  double conf = 0;  // 3 * rms of the two standard errors at the argmax
};

struct UcltSetRow {
  long n = 0;
  int set = 0;
  double brownian_p = 0, brownian_se = 0;
  double sup_p = 0, inf_p = 0;
  long sup_x = 0, inf_x = 0;
  double max_abs_disc = 0;
  double conf = 0;
};

struct UcltPointRow {
  long n = 0;
  int functional = 0;
  long x = 0;
  double mean = 0, se = 0;
};

struct UcltSetPointRow {
  long n = 0;
  int set = 0;
  long x = 0;
  double p = 0, se = 0;
};

struct UcltReport {
  std::string env_id;
  double H = 0, alpha = 0, sigma = 0;
  std::vector<long> n_list;
  std::vector<int> functionals;
  SetParams set_params;
  long paths_per_start = 0;
  long brownian_mc = 0;
  double brownian_dt = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<long>> grids;  // start points per n
  std::vector<UcltFunctionalRow> f_rows;
  std::vector<UcltSetRow> set_rows;
  std::vector<UcltPointRow> point_rows;
  std::vector<UcltSetPointRow> set_point_rows;

  const UcltFunctionalRow& row(long n, int functional) const;
};

UcltReport uclt_experiment(const Environment& env, double sigma, const UcltConfig& config,
                           std::uint64_t seed);

// Trend analysis over the n sweep for one functional.
struct TrendCheck {
  bool nonincreasing = false;   // within joint confidence radii
  bool final_within = false;    // sup disc at largest n <= budget + conf
  double final_value = 0;
  double final_conf = 0;
  double worst_increase = 0;    // max over steps of disc_{i+1} - disc_i - conf_i - conf_{i+1}
};
TrendCheck uclt_trend(const UcltReport& report, int functional, double final_budget);

// True when the sweep shows a statistically significant discrepancy that does
// not vanish along n: evidence against uniformity on the probed window.
bool counterexample_consistent(const UcltReport& report);

// ---------------------------------------------------------------------------
// Nice-site density scan: partition [-2 H sqrt(n), 2 H sqrt(n)] into
// intervals of length ceil(n^nu) and look for a nice site in each, spending
// at most sites_per_interval probes (deterministic site sequence, so larger
// budgets extend smaller ones).
// ---------------------------------------------------------------------------
struct DensityScanOptions {
  double H = 1.0;
  int sites_per_interval = 3;
  long mc_samples = 200;
  double margin_c = 1.0;
  int workers = 1;
};

struct DensityIntervalResult {
  long lo = 0, hi = 0;  // interval [lo, hi)
  int sites_checked = 0;
  bool found = false;
  long nice_site = 0;  // valid when found
};

struct DensityScanReport {
  long n = 0;
  double nu = 0, epsilon = 0;
  long interval_length = 0;
  std::vector<DensityIntervalResult> intervals;
  long intervals_with_nice = 0;
  double fraction = 0;
};

DensityScanReport nice_site_density_scan(const Environment& env, double epsilon, long n, double nu,
                                         const EpsilonThresholds& thresholds, double sigma,
                                         std::uint64_t seed, const DensityScanOptions& opts = {});

// ---------------------------------------------------------------------------
// Report emission: comma-separated tables with a '#'-prefixed manifest echo,
// and a gnuplot script referencing them.
// ---------------------------------------------------------------------------
void write_uclt_tables(const UcltReport& report, const std::string& dir,
                       const std::string& manifest_echo);
void write_uclt_plot_script(const UcltReport& report, const std::string& dir);
void write_sigma_table(const SigmaEstimate& estimate, const std::string& path,
                       const std::string& manifest_echo);
void write_classification_table(const std::vector<SiteClassification>& rows,
                                const std::string& path, const std::string& manifest_echo);
void write_density_table(const DensityScanReport& report, const std::string& path,
                         const std::string& manifest_echo);

}  // namespace condlab
