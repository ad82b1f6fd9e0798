#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "mpgo/harmonics.hpp"
#include "mpgo/polarization.hpp"

namespace mpgo {

struct PhaseSlot {
  Phase phase;
  TensorFn F1, F21, F22, Frak;  // empty closure means zero
  ScalarFn dust;                // background density F_A, zero when empty
};

// F2pm per unordered pair a < b; the metric sums over ordered pairs, so this enters twice
struct PairSlot {
  int a = 0, b = 1;
  int sign = 1;
  TensorFn F2pm;
};

// lambda^3 terms: tensor multiplying cos or sin of a word
struct WordSlot {
  std::vector<int> word;
  bool is_sin = false;
  TensorFn T;
};

struct Truncation {
  bool F1 = true, F21 = true, F22 = true, F2pm = true, Frak = true, g3h = true, g3e = true, h = true;
};

struct AnsatzStack {
  std::vector<PhaseSlot> phases;
  std::vector<PairSlot> pairs;
  std::vector<WordSlot> g3h, g3e;
  TensorFn h_rem;
  Truncation use;
  double lambda = 0.1;

  const PairSlot* pair(int a, int b, int sign) const;
  std::vector<Phase> phase_list() const;
  std::vector<std::string> labels() const;
};

// pointwise data realizing the polarization and backreaction assumptions
struct PhaseSample {
  Vec4 du;
  NullFrame frame;
  Mat4 F1;
  double F = 0;
};
struct AdmissibleSample {
  Point p = Point::Zero();
  Mat4 g, ginv;
  std::vector<PhaseSample> ph;
};

AdmissibleSample sample_admissible(std::uint64_t seed, int nphases, double eps = 0.05);
// max of |Pol(F1,u)|, |F1_{L Lbar}|, ||F1|^2 - 8F^2| over phases
double admissible_defect(const AdmissibleSample& s);

// frame-aligned TT tensor F (th+ (e1e1 - e2e2) + thx (e1e2 + e2e1)), lowered with g
Mat4 tt_tensor(const NullFrame& f, const Mat4& g, double F, double thp, double thx);

// bilinear order-0 pieces for the pair (A,B) and sign
std::array<Mat4, 5> p0pm_terms(const Mat4& FA, const Mat4& FB, const Vec4& duA, const Vec4& duB, int sign,
                               const Mat4& ginv);
Mat4 p0pm(const Mat4& FA, const Mat4& FB, const Vec4& duA, const Vec4& duB, int sign, const Mat4& ginv);
Mat4 i0pm(const Mat4& FA, const Mat4& FB, const Vec4& duA, const Vec4& duB, int sign, const Mat4& ginv);
// -I / g^{-1}(dv,dv); NullDirectionUnsolvable when the word is near-null
Mat4 f2pm(const Mat4& FA, const Mat4& FB, const Vec4& duA, const Vec4& duB, int sign, const Mat4& ginv);

// covariant Q_s = g^{mn}(D_m F_sn - 1/2 D_s F_mn)
Vec4 q0(const TensorFn& F1, const TensorFn& g0, const Point& p, double h);
// coordinate form with partial derivatives
Vec4 q0_coordinate(const TensorFn& F1, const TensorFn& g0, const Point& p, double h);

struct VTensors {
  Vec4 V21, V22;
};
VTensors v_tensors(const TensorFn& F21, const TensorFn& F22, const TensorFn& F1, const Phase& u, const TensorFn& g0,
                   const Point& p, double h);

// tensor with Pol(T, k u) = Rt, assigned through frame components
Mat4 g3h_assign(const Vec4& Rt, int k, const NullFrame& f, const Mat4& g);

// Fourier coefficients of R^(0) (the Ricci tensor at order lambda^0), per canonical word
HarmonicMap<Mat4> r0_analytic(const AnsatzStack& stack, const TensorFn& g0, const Point& p, double h);

// individual expansion pieces evaluated literally; keys like "W01[A]", "P0+[A,B]", "H11[A]"
struct Order0Pieces {
  std::map<std::string, Mat4> tensors;
  std::map<std::string, Vec4> vectors;
  // recombined 2R blocks: "sin[A]", "cos2[A]", "cos+[A,B]", "cos-[A,B]" (per ordered pair)
  std::map<std::string, Mat4> blocks;
};
Order0Pieces order0_pieces(const AnsatzStack& stack, const TensorFn& g0, const Point& p, double h);

// transport operator L T = -2 D_L T + (box u) T
Mat4 transport_operator(const TensorFn& T, const Phase& u, const TensorFn& g0, const Point& p, double h);

// slice inputs for the leading constraint blocks at one point
struct SlicePhaseInput {
  Vec3 du;                  // d_i u
  double a = 0;             // |grad u|
  Vec3 da = Vec3::Zero();   // d_i |grad u|
  Mat3 hess = Mat3::Zero(); // d_i d_j u
  Mat3 Fbar = Mat3::Zero();
  std::array<Mat3, 3> dFbar{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  double Fsq = 0;           // F^2
  Mat3 kappa11 = Mat3::Zero(), kappa12 = Mat3::Zero();
};
struct SlicePairInput {
  int a = 0, b = 1, sign = 1;   // ordered pair
  Mat3 gamma2 = Mat3::Zero();   // gamma^(2,+-)_{AB}
  Mat3 kappa1 = Mat3::Zero();   // kappa^(1,+-)_{AB}
};
struct SliceInput {
  Mat3 g, k0;
  std::array<Mat3, 3> dg;  // d_l g_ij
  std::vector<SlicePhaseInput> ph;
  std::vector<SlicePairInput> pairs;  // every ordered pair and sign that is present
};

struct ConstraintLeading {
  HarmonicMap<double> H;
  HarmonicMap<Vec3> M;
};
ConstraintLeading constraint_leading(const SliceInput& in);

}  // namespace mpgo
