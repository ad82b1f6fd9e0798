#pragma once

#include <array>
#include <string>
#include <vector>

#include "mpgo/initialdata.hpp"
#include "mpgo/modefit.hpp"
#include "mpgo/report.hpp"

namespace mpgo {

struct Thresholds {
  double order_min = 0.9;
  double ablation_tol = 0.1;     // relative match of ablated amplitudes
  double burnett_tol = 0.1;      // spread of |g - g0|/lambda over the ladder
  double leakage_max = 1e-3;     // constant word over leading amplitude
  double stationary_max = 0.7;   // order ceiling of the stationary control
};

struct Scenario {
  std::string name = "scenario";
  std::string background = "minkowski";  // or "perturbed"
  double perturbation = 0.0;             // amplitude of the perturbed test metric
  std::vector<std::array<int, 3>> directions{{1, 0, 0}};
  std::vector<double> thp{2.0}, thx{0.0};
  std::vector<double> amplitude{0.5};
  std::string envelope = "slab";  // slab: a exp(-((z - z0)/w)^2); ball: a (1 - |x|^2/R^2)^4 in B_R
  double width = 1.0, z0 = 0.0, R = 2.0;
  std::vector<double> lambdas{0.1, 0.05, 0.025};
  double eta = 20;      // sample spacing lambda / eta
  double eta_fd = 100;  // finite-difference step lambda / eta_fd
  Vec3 line_origin{0.0, 0.0, 0.3};
  Vec3 line_direction{1.0, 1.4142135623730951, 0.0};
  double line_beats = 1.5;  // sample line length in units of the slowest beat period
  Truncation use;
  ConformalFlags conformal;
  Thresholds thresholds;
  std::uint64_t rng_seed = 7;
  std::string output_dir = "out";

  void validate() const;  // ConfigError
  std::vector<std::string> labels() const;
  std::vector<Phase> phases() const;
};

TensorFn scenario_background(const Scenario& sc);
SliceBackground slice_background(const Scenario& sc);
Seed scenario_seed(const Scenario& sc);
// spacetime hierarchy from the slice data, advected along flat characteristics
AnsatzStack scenario_stack(const Scenario& sc, double lambda);

Mat4 assemble_metric(const AnsatzStack& stack, const TensorFn& g0, const Point& p);
TensorFn assembled_metric(const AnsatzStack& stack, const TensorFn& g0);

// sample line on the t = 0 slice and the mode dictionary (full W lattice plus the constant column)
struct SampleLine {
  std::vector<Vec3> x;
  std::vector<std::vector<int>> words;
  std::vector<std::string> names;
  std::vector<std::vector<double>> z;  // z[w][k]
};
SampleLine sample_line(const Scenario& sc, double lambda);

ScanReport ricci_scan(const Scenario& sc);
ScanReport constraint_scan(const Scenario& sc);
ScanReport burnett_scan(const Scenario& sc);

struct WeakLimitSpec {
  Scalar3Fn z;
  Scalar3Fn psi;        // default exp(-|x|^2)
  int cut_axis = 0;     // psi restricted to x[cut_axis] >= 0; -1 for no cut
  double box = 5.0;     // integrate over [-box, box]^3
  bool use_sin = true;  // T = sin, otherwise cos
  int nodes = 8;        // Gauss-Legendre nodes per panel
};
struct WeakLimitResult {
  std::vector<double> lambda, value;
  OrderFit fit;
  bool stationary = false;  // grad z vanishes on the support of psi
  double min_grad = 0;
};
WeakLimitResult weak_limit_decay(const WeakLimitSpec& spec, const std::vector<double>& lambdas);

// Gauss-Legendre nodes and weights on [-1, 1]
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

std::string scenario_hash(const Scenario& sc);

// pointwise property suites over random samples
struct IdentityCheck {
  std::string name;
  int samples = 0;
  double max_residual = 0;
  double tol = 0;
  bool pass() const { return max_residual <= tol; }
};
std::vector<IdentityCheck> verify_identities(int samples, std::uint64_t seed);

// seed invariants on random slice points and transport of the seed along flat characteristics
struct TransportAudit {
  double seed_defect = 0;   // max ||Fbar|^2 - 8F^2| on the slice
  double max_pol = 0, max_lLbar = 0, max_energy = 0;
  double geodesic = 0;      // max |D_L L| along the curves
  int curves = 0;
  int steps = 0;
};
TransportAudit transport_audit(const Scenario& sc, double dt, double t_end, int per_axis, std::uint64_t seed);

}  // namespace mpgo
