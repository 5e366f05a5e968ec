#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace condlab {

// A symmetric conductance field on a finite window of the integers.
// Conductances exist for unordered pairs {x, x+y} with 1 <= y <= R
// (R = truncation radius); longer jumps carry zero conductance.
//
// Model tags:
//   homogeneous          fixed profile c_y on every site
//   iid-polynomial       omega_{x,x+1} ~ U[kappa, K/2],
//                        omega_{x,x+y} ~ U[0, K/(1+y^(3+beta))] for y >= 2,
//                        independent across edges
//   iid-tworange         omega_{x,x+1} ~ U[c1_lo, c1_hi],
//                        omega_{x,x+2} ~ U[0, c2_hi], nothing beyond
//   block-counterexample nearest-neighbor; i.i.d. edge blocks with size tail
//                        P[V > s] = s^-(1+eps), each block all 1s or
//                        alternating 2,1,2,... by a fair coin
struct EnvironmentSpec {
  std::string model_tag = "homogeneous";
  long x_min = -100;
  long x_max = 100;
  int truncation_radius = 0;  // 0 = derive the smallest admissible radius
  double kappa = 1.0;         // nearest-neighbor floor
  double tail_K = 2.0;        // jump-envelope scale
  double tail_beta = 1.0;     // jump-envelope decay exponent
  double block_eps = 0.5;     // block-size tail exponent
  double c1_lo = 0.5, c1_hi = 2.0, c2_hi = 0.3;  // iid-tworange bounds
  std::vector<double> profile = {1.0};           // homogeneous profile c_1..c_R
  std::uint64_t seed = 0;
};

class Environment {
 public:
  Environment() = default;

  long x_min() const { return storage_->x_min - origin_; }
  long x_max() const { return storage_->x_max - origin_; }
  int radius() const { return storage_->radius; }
  const std::string& model_tag() const { return storage_->model_tag; }
  double kappa() const { return storage_->kappa; }
  double tail_K() const { return storage_->tail_K; }
  double tail_beta() const { return storage_->tail_beta; }
  std::uint64_t seed() const { return storage_->seed; }
  // Mass of the jump envelope beyond the truncation radius; the model error
  // made by materializing a finite-range field (0 for finite-range models).
  double tail_bound() const { return storage_->tail_bound; }

  // omega_{x,y}; zero when |x-y| > R or the pair leaves the window.
  double conductance(long x, long y) const;
  // C_x = sum_y omega_{x,y}. Requires x interior (window margin >= R).
  double total_conductance(long x) const;
  bool interior(long x) const {
    return x - x_min() >= radius() && x_max() - x >= radius();
  }

  // View of the same field with the origin moved to z: result(x, y) = (*this)(x+z, y+z).
  Environment shifted(long z) const;

  // Copy with a single pair overwritten (fixtures / defect planting).
  Environment with_conductance(long x, long y, double value) const;

  // Stable identifier of the materialized field (content hash).
  std::string id() const;

  bool valid_handle() const { return storage_ != nullptr; }

  struct Storage {
    std::string model_tag;
    long x_min = 0, x_max = 0;
    int radius = 1;
    double kappa = 0, tail_K = 0, tail_beta = 0, tail_bound = 0;
    std::uint64_t seed = 0;
    // by_offset[y-1][x - x_min] = omega_{x, x+y}, x in [x_min, x_max - y]
    std::vector<std::vector<double>> by_offset;
  };

 private:
  std::shared_ptr<const Storage> storage_;
  long origin_ = 0;

  friend Environment generate(const EnvironmentSpec&);
  friend Environment load_environment(const std::string&);
  friend void save_environment(const Environment&, const std::string&);
};

struct ValidationItem {
  std::string name;
  bool pass = true;
  std::string witness;  // failing site / pair, empty on pass
};

struct ValidationReport {
  bool pass = true;
  double kappa_hat = 0;  // tightest kappa_hat <= C_x <= 1/kappa_hat over interior sites
  double c_min = 0, c_max = 0;
  std::vector<ValidationItem> items;
  std::string to_text() const;
};

// Deterministic generation from the spec; same spec => bit-identical field.
Environment generate(const EnvironmentSpec& spec);

ValidationReport validate(const Environment& env);

// Smallest truncation radius whose envelope tail mass is below tol * kappa.
int required_radius(double tail_K, double tail_beta, double kappa, double tol = 1e-9);

void save_environment(const Environment& env, const std::string& path);
Environment load_environment(const std::string& path);

}  // namespace condlab
