#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "condlab/environment.hpp"

using namespace condlab;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("environment") {

TEST_CASE("homogeneous nearest-neighbor field") {
  EnvironmentSpec s;
  s.model_tag = "homogeneous";
  s.x_min = -50;
  s.x_max = 50;
  s.profile = {1.0};
  s.seed = 7;
  const Environment env = generate(s);
  CHECK(env.radius() == 1);
  CHECK(env.x_min() == -50);
  CHECK(env.x_max() == 50);
  for (long x = -50; x < 50; ++x) {
    CHECK(env.conductance(x, x + 1) == 1.0);
    CHECK(env.conductance(x + 1, x) == 1.0);  // symmetric by construction
  }
  CHECK(env.conductance(0, 2) == 0.0);   // beyond the truncation radius
  CHECK(env.conductance(60, 61) == 0.0);  // beyond the window
  CHECK(env.total_conductance(0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(env.total_conductance(50), std::out_of_range);

  const ValidationReport report = validate(env);
  CHECK(report.pass);
  CHECK(report.c_min == doctest::Approx(2.0));
  CHECK(report.c_max == doctest::Approx(2.0));
  CHECK(report.kappa_hat == doctest::Approx(0.5));
}

TEST_CASE("generation is deterministic and save/load round-trips") {
  EnvironmentSpec s;
  s.model_tag = "iid-tworange";
  s.x_min = -60;
  s.x_max = 60;
  s.kappa = 0.5;
  s.seed = 11;
  const Environment a = generate(s);
  const Environment b = generate(s);
  CHECK(a.id() == b.id());
  for (long x = -20; x < 20; ++x) {
    CHECK(a.conductance(x, x + 1) == b.conductance(x, x + 1));
    CHECK(a.conductance(x, x + 2) == b.conductance(x, x + 2));
  }

  const std::string p1 = temp_file("condlab_env_a.txt");
  const std::string p2 = temp_file("condlab_env_b.txt");
  save_environment(a, p1);
  save_environment(a, p2);
  CHECK(slurp(p1) == slurp(p2));  // byte-identical writes

  const Environment c = load_environment(p1);
  CHECK(c.id() == a.id());
  CHECK(c.x_min() == a.x_min());
  CHECK(c.radius() == a.radius());
  for (long x = -59; x < 58; ++x)
    for (long y = 1; y <= 2; ++y)
      CHECK(c.conductance(x, x + y) == a.conductance(x, x + y));
}

TEST_CASE("polynomial-tail field respects its envelope and derived radius") {
  CHECK(required_radius(4.0, 2.0, 0.5) == 212);
  CHECK(required_radius(4.0, 3.0, 0.5) < 212);  // faster decay, smaller radius

  EnvironmentSpec s;
  s.model_tag = "iid-polynomial";
  s.x_min = -300;
  s.x_max = 300;
  s.kappa = 0.5;
  s.tail_K = 4.0;
  s.tail_beta = 2.0;
  s.seed = 3;
  const Environment env = generate(s);
  CHECK(env.radius() == 212);
  CHECK(env.tail_bound() <= 1e-9 * 0.5);
  for (long x = -5; x <= 5; ++x) {
    const double c1 = env.conductance(x, x + 1);
    CHECK(c1 >= 0.5);
    CHECK(c1 <= 2.0);
    for (long y = 2; y <= env.radius(); y += 17) {
      const double cy = env.conductance(x, x + y);
      CHECK(cy >= 0.0);
      CHECK(cy <= 4.0 / (1.0 + std::pow(static_cast<double>(y), 5.0)));
    }
  }
  CHECK(validate(env).pass);
}

TEST_CASE("validation catches a planted ellipticity defect") {
  EnvironmentSpec s;
  s.model_tag = "homogeneous";
  s.x_min = -30;
  s.x_max = 30;
  s.profile = {1.0};
  const Environment good = generate(s);
  REQUIRE(validate(good).pass);

  const Environment bad = good.with_conductance(0, 1, 0.0);
  const ValidationReport report = validate(bad);
  CHECK_FALSE(report.pass);
  bool witnessed = false;
  for (const auto& item : report.items)
    if (!item.pass && !item.witness.empty()) witnessed = true;
  CHECK(witnessed);
  CHECK(report.to_text().find("FAIL") != std::string::npos);
}

TEST_CASE("shifted views translate the field") {
  EnvironmentSpec s;
  s.model_tag = "iid-tworange";
  s.x_min = -40;
  s.x_max = 40;
  s.kappa = 0.5;
  s.seed = 21;
  const Environment env = generate(s);
  const Environment sh = env.shifted(5);
  CHECK(sh.x_min() == env.x_min() - 5);
  for (long x = -30; x < 30; ++x)
    for (long y = 1; y <= 2; ++y)
      CHECK(sh.conductance(x - 5, x - 5 + y) == env.conductance(x, x + y));
}

TEST_CASE("block field uses unit and alternating stretches only") {
  EnvironmentSpec s;
  s.model_tag = "block-counterexample";
  s.x_min = -2000;
  s.x_max = 2000;
  s.kappa = 1.0;
  s.block_eps = 0.4;
  s.seed = 5;
  const Environment env = generate(s);
  CHECK(env.radius() == 1);
  long twos = 0, total = 0;
  for (long x = -2000; x < 2000; ++x) {
    const double c = env.conductance(x, x + 1);
    CHECK((c == 1.0 || c == 2.0));
    twos += (c == 2.0);
    ++total;
  }
  const double frac = static_cast<double>(twos) / static_cast<double>(total);
  CHECK(frac > 0.15);
  CHECK(frac < 0.40);
  CHECK(validate(env).pass);
}

}  // TEST_SUITE
