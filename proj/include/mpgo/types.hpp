#pragma once

#include <Eigen/Dense>
#include <functional>

namespace mpgo {

template <int D> using VecN = Eigen::Matrix<double, D, 1>;
template <int D> using MatN = Eigen::Matrix<double, D, D>;

using Vec3 = VecN<3>;
using Vec4 = VecN<4>;
using Mat3 = MatN<3>;
using Mat4 = MatN<4>;

// spacetime points are (t, x1, x2, x3)
using Point = Vec4;

using ScalarFn = std::function<double(const Vec4&)>;
using CovecFn = std::function<Vec4(const Vec4&)>;
using TensorFn = std::function<Mat4(const Vec4&)>;

using Scalar3Fn = std::function<double(const Vec3&)>;
using Covec3Fn = std::function<Vec3(const Vec3&)>;
using Tensor3Fn = std::function<Mat3(const Vec3&)>;

inline Point make_point(double t, double x, double y, double z) { return Point(t, x, y, z); }
inline Vec3 spatial(const Vec4& p) { return p.tail<3>(); }
inline Vec4 on_slice(const Vec3& x, double t = 0.0) { return Vec4(t, x(0), x(1), x(2)); }

// exact symmetric copy: both triangles from the upper one
template <class M> M symmetrized(const M& a) {
  M s = a;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i + 1; j < a.cols(); ++j) s(j, i) = s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

// un-normalized symmetrization a_(i b_j) = a_i b_j + a_j b_i
template <class V> auto sym_prod(const V& a, const V& b) {
  return (a * b.transpose() + b * a.transpose()).eval();
}

// un-normalized symmetrization of a rank-2 array: T_(ij) = T_ij + T_ji
template <class M> M sym2(const M& t) { return t + t.transpose(); }

}  // namespace mpgo
