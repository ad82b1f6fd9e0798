#include "mpgo/polarization.hpp"

#include <cmath>
#include <sstream>

namespace mpgo {

Vec4 pol(const Mat4& S, const Vec4& dv, const Mat4& ginv) {
  return S * (ginv * dv) - 0.5 * ttrace<4>(S, ginv) * dv;
}

Vec4 pol(const Mat4& S, const Phase& v, const TensorFn& g, const Point& p) {
  return pol(S, v.grad(p), inverse_checked<4>(g(p)));
}

Mat4 pv_apply(const Mat4& S, const Vec4& dv, const Mat4& ginv) {
  double q = dv.dot(ginv * dv);
  return symmetrized<Mat4>(-q * S + sym_prod(dv, pol(S, dv, ginv)));
}

Mat4 pv_solve(const Mat4& A, const Vec4& dv, const Mat4& ginv, double null_guard, double range_tol) {
  double q = dv.dot(ginv * dv);
  if (std::abs(q) < null_guard) throw NullDirectionUnsolvable("g^{-1}(dv,dv) below the near-null guard");
  double r = pol(A, dv, ginv).norm();
  double scale = A.norm() * std::max(1.0, dv.norm());
  if (r > range_tol * std::max(scale, 1e-300) && r > 0) {
    std::ostringstream os;
    os << "source not in the range of P_v, |Pol(A,v)| = " << r;
    throw NotInRange(os.str(), r);
  }
  return symmetrized<Mat4>(-A / q);
}

Vec3 unit_normal_form(const Vec3& dv, const Mat3& g3inv) {
  double n2 = dv.dot(g3inv * dv);
  if (!(n2 > 1e-28)) throw DegeneratePhase("vanishing slice gradient");
  return dv / std::sqrt(n2);
}

Mat3 pbar1(const Mat3& S, const Vec3& dv, const Mat3& g3) {
  Mat3 gi = inverse_checked<3>(g3);
  Vec3 N = unit_normal_form(dv, gi);
  Vec3 Nu = gi * N;
  double tr = ttrace<3>(S, gi);
  double snn = Nu.dot(S * Nu);
  return symmetrized<Mat3>(S - 0.5 * (tr - snn) * g3);
}

Mat3 pbar2(const Mat3& S, const Vec3& dv, const Mat3& g3) {
  Mat3 gi = inverse_checked<3>(g3);
  Vec3 N = unit_normal_form(dv, gi);
  Vec3 Nu = gi * N;
  double tr = ttrace<3>(S, gi);
  double snn = Nu.dot(S * Nu);
  Vec3 SN = S * Nu;  // S_{N j}
  Vec3 w = N * tr - SN;
  return symmetrized<Mat3>(S + sym_prod(N, w) - 0.5 * (tr - snn) * g3);
}

Mat3 ntilde_otimes(const Vec3& N, const Vec3& X, const Mat3& g3) {
  Mat3 gi = inverse_checked<3>(g3);
  double xn = X.dot(gi * N);
  return symmetrized<Mat3>(sym_prod(N, X) - 0.5 * xn * g3);
}

}  // namespace mpgo
