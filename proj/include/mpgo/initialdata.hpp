#pragma once

#include <memory>
#include <vector>

#include "mpgo/hierarchy.hpp"

namespace mpgo {

struct Seed {
  std::vector<double> thp, thx;   // th+^2 + thx^2 = 4 per phase
  std::vector<Scalar3Fn> F;       // densities, supported in the ball of radius R
  double R = 1.0;
  size_t size() const { return F.size(); }
  void validate() const;          // InvalidSeed
};

// background spacetime around the slice t = 0 and the optical phases
struct SliceBackground {
  TensorFn g0;
  std::vector<Phase> phases;
  double h = 1e-3;  // finite-difference step for slice derivatives
};

struct PhaseGeometry {
  Vec4 du4;
  Vec3 du;              // d_i u
  double a = 0;         // |grad u|
  Vec3 da;              // d_i |grad u|
  Vec3 N, Nup;          // unit normal one-form and vector
  Mat3 hess;            // d_i d_j u
  double box = 0;       // box_{g0} u
  NullFrame frame;
};

struct SliceGeometry {
  Vec3 x;
  Mat4 g4, gi4;
  Christoffel<4> G4;
  Mat3 g, gi, k0, k0up;
  std::array<Mat3, 3> dg, dgi;  // spatial derivatives of g_ij and g^ij
  Vec3 dtg0i;                   // d_t g_{0i}
  double lapse = 1;
  Vec3 shift;                   // g_{0i}
  std::vector<PhaseGeometry> ph;
};

SliceGeometry slice_geometry(const SliceBackground& bg, const Vec3& x);

// Fbar = F (th+ (e1 e1 - e2 e2) + thx (e1 e2 + e2 e1)) with the frame vectors lowered by g3
Mat3 seed_tensor(const Seed& s, int A, const NullFrame& f, const Mat3& g3, const Vec3& x);
Mat3 seed_field(const Seed& s, const SliceBackground& bg, int A, const Vec3& x);

struct Initials {
  Mat3 Fbar;
  std::array<Mat3, 3> dFbar;
  double F = 0;
  Mat4 F1, F21, F22, dtF1;
  Vec4 Q0;                 // slice form of Q^(0)
  double phi21hat = 0;
};
Initials spacetime_initials(const Seed& s, const SliceBackground& bg, int A, const Vec3& x);
Initials spacetime_initials(const Seed& s, const SliceBackground& bg, const SliceGeometry& geo, int A);

struct PhaseCorrector {
  Mat3 kappa11, kappa12;
  Vec3 X21hat, X21, X22;
  double phi21 = 0, phi22 = 0;
};
struct PairCorrector {
  int a = 0, b = 1, sign = 1;  // ordered
  Vec3 dv;                     // d_i (uA +- uB)
  double av = 0;               // |grad v|
  Vec3 Nv;
  double q = 0;                // g^{-1}(dv, dv) in spacetime
  Mat4 I, F2pm;
  Mat3 gamma2, kappa1;
  double phihat = 0, phi = 0;
  Vec3 Xhat, X;
};
struct SliceData {
  SliceGeometry geo;
  std::vector<Initials> init;
  std::vector<PhaseCorrector> ph;
  std::vector<PairCorrector> pairs;  // all ordered pairs A != B and both signs
};
SliceData correctors(const Seed& s, const SliceBackground& bg, const Vec3& x);

// residuals of the corrector fixed-point equations
struct FixedPointResiduals {
  double ka11 = 0, ka12 = 0, ka1pm = 0, ga2pm = 0;
  double range11 = 0, range12 = 0, range1pm = 0;  // |Pbar2(kappa) - kappa|
};
FixedPointResiduals fixed_point_residuals(const SliceData& d);

// max |V21|, |V22| built from the slice data extended linearly in t
double initial_polarization_defect(const Seed& s, const SliceBackground& bg, int A, const Vec3& x);

// inputs for the analytic leading constraint blocks
SliceInput slice_input(const SliceData& d);

struct ConformalFlags {
  bool phi2 = true;    // conformal factor corrections
  bool X2 = true;      // vector potential corrections
  bool kappa1 = true;  // order-lambda kappa terms
  bool gamma2 = true;  // order-lambda^2 gamma terms
};
struct AssembledSlice {
  Tensor3Fn gamma, kappa, g, k;
  Scalar3Fn phi;
  Covec3Fn X;  // one-form
};
// g = phi^4 gamma, k = phi^2 (kappa + conf(X))
AssembledSlice conformal_assemble(const Seed& s, const SliceBackground& bg, double lambda, ConformalFlags fl = {});

// conformal Killing type operator L_X g - 1/2 (div X) g at x, X a one-form
Mat3 conformal_lie(const Covec3Fn& X, const Tensor3Fn& g, const Vec3& x, double h);

struct ConstraintValues {
  double H = 0;
  Vec3 M = Vec3::Zero();
};
// H = R(g) - |k|^2 + (tr k)^2, M = div k - d tr k
ConstraintValues constraint_residual(const Tensor3Fn& g, const Tensor3Fn& k, const Vec3& x, double h);
// Delta X_i + R_ij X^j for a one-form X
Vec3 vector_laplacian(const Covec3Fn& X, const Tensor3Fn& g, const Vec3& x, double h);

// periodic-box Poisson surrogate: Delta phi = f on [0, L)^3 with n^3 samples (mean removed)
struct PoissonResult {
  std::vector<double> phi;
  bool projected = false;  // nonzero mean was removed
};
PoissonResult remainder_poisson(const std::vector<double>& f, int n, double L);

}  // namespace mpgo
