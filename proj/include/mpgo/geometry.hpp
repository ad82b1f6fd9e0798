#pragma once

#include <array>
#include <vector>

#include "mpgo/errors.hpp"
#include "mpgo/types.hpp"

namespace mpgo {

template <int D> using MetricFnN = std::function<MatN<D>(const VecN<D>&)>;

Mat4 minkowski();

// throws SingularMetric when |det g| < 1e-12
template <int D> MatN<D> inverse_checked(const MatN<D>& g);

// one negative and three positive eigenvalues
bool has_lorentz_signature(const Mat4& g);
void check_lorentz(const Mat4& g);

Vec4 raise(const Vec4& w, const Mat4& g);
Vec4 lower(const Vec4& v, const Mat4& g);

enum class Slot { First, Second, Both };
// raise (up = true) or lower the chosen slots of a rank-2 array
Mat4 raise_lower(const Mat4& S, const Mat4& g, Slot slots, bool up);

struct TensorNorms {
  double dot;
  double norm;  // sqrt(|T|^2) when nonnegative, otherwise -sqrt(-|T|^2)
  double trace;
};
TensorNorms tensor_norms(const Mat4& S, const Mat4& T, const Mat4& g);

// g^{ab} g^{mn} T_am S_bn with a given inverse metric
template <int D> double tdot(const MatN<D>& T, const MatN<D>& S, const MatN<D>& ginv) {
  return (ginv * T * ginv).cwiseProduct(S).sum();
}
template <int D> double ttrace(const MatN<D>& T, const MatN<D>& ginv) {
  return ginv.cwiseProduct(T).sum();
}

template <int D> using Christoffel = std::array<MatN<D>, D>;  // G[r](m,n)

// metric, inverse, first and second derivatives, Christoffels and their derivatives at one point
template <int D> struct MetricJet {
  MatN<D> g, ginv;
  std::array<MatN<D>, D> dg;                    // dg[l] = d_l g
  std::array<std::array<MatN<D>, D>, D> ddg;    // ddg[l][m] = d_l d_m g
  std::array<MatN<D>, D> dginv;                 // d_l g^{-1}
  Christoffel<D> gamma;                         // gamma[r](m,n)
  std::array<Christoffel<D>, D> dgamma;         // dgamma[s][r](m,n) = d_s Gamma^r_mn
  bool has_second = false;
};

// fourth-order central differences, stencil width 5
template <int D> MetricJet<D> metric_jet(const MetricFnN<D>& g, const VecN<D>& p, double h, bool second = true);

template <int D> MatN<D> ricci_from_jet(const MetricJet<D>& j);

template <int D> double scalar_curvature_from_jet(const MetricJet<D>& j) {
  return ttrace<D>(ricci_from_jet<D>(j), j.ginv);
}

struct RicciBreakdown {
  Mat4 wave_part, p_part, gauge_part, total;
  Vec4 H;  // H^r = g^{mn} Gamma^r_mn
};
RicciBreakdown ricci_gwc_from_jet(const MetricJet<4>& j);

// the quadratic term P(dg,dg) of the wave-gauge decomposition
Mat4 p_quadratic(const Mat4& ginv, const std::array<Mat4, 4>& dg);

Christoffel<4> christoffels_fd(const TensorFn& g, const Point& p, double h);
Mat4 ricci_direct(const TensorFn& g, const Point& p, double h);
RicciBreakdown ricci_gwc(const TensorFn& g, const Point& p, double h);
double wave_operator(const TensorFn& g, const ScalarFn& f, const Point& p, double h);

// stencil helpers on scalar and tensor closures
template <int D, class F> auto fd_gradient(const F& f, const VecN<D>& p, double h) {
  using R = decltype(f(p));
  std::array<R, D> out;
  for (int a = 0; a < D; ++a) {
    VecN<D> e = VecN<D>::Zero();
    e(a) = h;
    R v = (f(p - 2 * e) - 8.0 * f(p - e) + 8.0 * f(p + e) - f(p + 2 * e)) / (12.0 * h);
    out[a] = v;
  }
  return out;
}

Vec4 fd_covector(const ScalarFn& f, const Point& p, double h);
Mat4 fd_hessian(const ScalarFn& f, const Point& p, double h);

// uniform 4D grid holding a symmetric tensor field, cubic Lagrange interpolation per axis
class GridTensorField {
 public:
  GridTensorField(const TensorFn& f, const Vec4& lo, const Vec4& hi, const std::array<int, 4>& n);
  Mat4 operator()(const Point& p) const;
  const Vec4& spacing() const { return h_; }
  const Vec4& lo() const { return lo_; }
  const Vec4& hi() const { return hi_; }
  // true when a width-w FD stencil of step hs at p stays in the interpolable region
  bool stencil_inside(const Point& p, double hs, int w = 2) const;
  TensorFn as_fn() const;

 private:
  Vec4 lo_, hi_, h_;
  std::array<int, 4> n_;
  std::vector<std::array<double, 10>> data_;
  size_t index(const std::array<int, 4>& i) const;
};

Christoffel<4> christoffels_fd(const GridTensorField& g, const Point& p, double h);
Mat4 ricci_direct(const GridTensorField& g, const Point& p, double h);

}  // namespace mpgo
