#pragma once

#include "mpgo/phases.hpp"

namespace mpgo {

// Pol(S,v)_a = g^{mn} S_am d_n v - 1/2 tr S d_a v
Vec4 pol(const Mat4& S, const Vec4& dv, const Mat4& ginv);
Vec4 pol(const Mat4& S, const Phase& v, const TensorFn& g, const Point& p);

// P_v(S) = -g^{-1}(dv,dv) S + d_(a v Pol(S,v)_b)
Mat4 pv_apply(const Mat4& S, const Vec4& dv, const Mat4& ginv);

// inverse of P_v on the kernel of Pol: S = -A / g^{-1}(dv,dv)
// throws NullDirectionUnsolvable when |g^{-1}(dv,dv)| < null_guard, NotInRange when Pol(A,v) != 0
Mat4 pv_solve(const Mat4& A, const Vec4& dv, const Mat4& ginv, double null_guard = 1e-10, double range_tol = 1e-10);

// slice operators; dv holds the spatial derivatives d_i v, g3 the slice metric
Mat3 pbar1(const Mat3& S, const Vec3& dv, const Mat3& g3);
Mat3 pbar2(const Mat3& S, const Vec3& dv, const Mat3& g3);

// unit one-form N_i = d_i v / |grad v|
Vec3 unit_normal_form(const Vec3& dv, const Mat3& g3inv);

// (N ~x X)_ij = N_(i X_j) - 1/2 X_N g_ij; N and X are given index-lowered
Mat3 ntilde_otimes(const Vec3& N, const Vec3& X, const Mat3& g3);

}  // namespace mpgo
