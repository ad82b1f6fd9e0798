#include "mpgo/geometry.hpp"

#include <cmath>
#include <sstream>

namespace mpgo {

Mat4 minkowski() { return Vec4(-1.0, 1.0, 1.0, 1.0).asDiagonal(); }

template <int D> MatN<D> inverse_checked(const MatN<D>& g) {
  double det = g.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-12) {
    std::ostringstream os;
    os << "degenerate metric, det = " << det;
    throw SingularMetric(os.str());
  }
  MatN<D> inv = g.inverse();
  return symmetrized(inv);
}
template Mat3 inverse_checked<3>(const Mat3&);
template Mat4 inverse_checked<4>(const Mat4&);

bool has_lorentz_signature(const Mat4& g) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(symmetrized(g), Eigen::EigenvaluesOnly);
  const Vec4& ev = es.eigenvalues();
  return ev(0) < 0 && ev(1) > 0 && ev(2) > 0 && ev(3) > 0;
}

void check_lorentz(const Mat4& g) {
  inverse_checked<4>(g);
  if (!has_lorentz_signature(g)) throw SingularMetric("metric is not of signature (-,+,+,+)");
}

Vec4 raise(const Vec4& w, const Mat4& g) { return inverse_checked<4>(g) * w; }
Vec4 lower(const Vec4& v, const Mat4& g) { return g * v; }

Mat4 raise_lower(const Mat4& S, const Mat4& g, Slot slots, bool up) {
  Mat4 m = up ? inverse_checked<4>(g) : g;
  switch (slots) {
    case Slot::First: return m * S;
    case Slot::Second: return S * m;
    case Slot::Both: return m * S * m;
  }
  return S;
}

TensorNorms tensor_norms(const Mat4& S, const Mat4& T, const Mat4& g) {
  Mat4 gi = inverse_checked<4>(g);
  TensorNorms r;
  r.dot = tdot<4>(T, S, gi);
  double sq = tdot<4>(T, T, gi);
  r.norm = sq >= 0 ? std::sqrt(sq) : -std::sqrt(-sq);
  r.trace = ttrace<4>(T, gi);
  return r;
}

namespace {
constexpr double c1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
constexpr double c2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};

// paired differences so constant fields give exact zeros
template <class M> M d1(const M& m2, const M& m1, const M& p1, const M& p2) {
  return ((m2 - p2) + 8.0 * (p1 - m1)) / 12.0;
}
template <class M> M d2(const M& m2, const M& m1, const M& c, const M& p1, const M& p2) {
  return (16.0 * (m1 + p1) - (m2 + p2) - 30.0 * c) / 12.0;
}
}  // namespace

template <int D> MetricJet<D> metric_jet(const MetricFnN<D>& gf, const VecN<D>& p, double h, bool second) {
  MetricJet<D> j;
  j.has_second = second;
  j.g = symmetrized<MatN<D>>(gf(p));
  j.ginv = inverse_checked<D>(j.g);
  std::array<std::array<MatN<D>, 5>, D> axis;
  for (int a = 0; a < D; ++a) {
    for (int k = 0; k < 5; ++k) {
      if (k == 2) {
        axis[a][k] = j.g;
        continue;
      }
      VecN<D> q = p;
      q(a) += (k - 2) * h;
      axis[a][k] = gf(q);
    }
    const auto& x = axis[a];
    j.dg[a] = symmetrized<MatN<D>>(d1<MatN<D>>(x[0], x[1], x[3], x[4]) / h);
  }
  for (int a = 0; a < D; ++a) j.dginv[a] = -j.ginv * j.dg[a] * j.ginv;

  std::array<MatN<D>, D> low;
  for (int s = 0; s < D; ++s)
    for (int m = 0; m < D; ++m)
      for (int n = 0; n < D; ++n) low[s](m, n) = 0.5 * (j.dg[m](s, n) + j.dg[n](s, m) - j.dg[s](m, n));
  for (int r = 0; r < D; ++r) {
    j.gamma[r].setZero();
    for (int s = 0; s < D; ++s) j.gamma[r] += j.ginv(r, s) * low[s];
  }
  if (!second) return j;

  for (int a = 0; a < D; ++a) {
    const auto& x = axis[a];
    j.ddg[a][a] = symmetrized<MatN<D>>(d2<MatN<D>>(x[0], x[1], x[2], x[3], x[4]) / (h * h));
    for (int b = a + 1; b < D; ++b) {
      std::array<MatN<D>, 5> inner;
      for (int k = 0; k < 5; ++k) {
        if (k == 2) continue;
        std::array<MatN<D>, 5> v;
        for (int l = 0; l < 5; ++l) {
          if (l == 2) continue;
          VecN<D> q = p;
          q(a) += (k - 2) * h;
          q(b) += (l - 2) * h;
          v[l] = gf(q);
        }
        inner[k] = d1<MatN<D>>(v[0], v[1], v[3], v[4]);
      }
      MatN<D> m = d1<MatN<D>>(inner[0], inner[1], inner[3], inner[4]);
      j.ddg[a][b] = j.ddg[b][a] = symmetrized<MatN<D>>(m / (h * h));
    }
  }
  for (int l = 0; l < D; ++l) {
    std::array<MatN<D>, D> dlow;
    for (int s = 0; s < D; ++s)
      for (int m = 0; m < D; ++m)
        for (int n = 0; n < D; ++n)
          dlow[s](m, n) = 0.5 * (j.ddg[l][m](s, n) + j.ddg[l][n](s, m) - j.ddg[l][s](m, n));
    for (int r = 0; r < D; ++r) {
      j.dgamma[l][r].setZero();
      for (int s = 0; s < D; ++s) j.dgamma[l][r] += j.dginv[l](r, s) * low[s] + j.ginv(r, s) * dlow[s];
    }
  }
  return j;
}
template MetricJet<3> metric_jet<3>(const MetricFnN<3>&, const Vec3&, double, bool);
template MetricJet<4> metric_jet<4>(const MetricFnN<4>&, const Vec4&, double, bool);

template <int D> MatN<D> ricci_from_jet(const MetricJet<D>& j) {
  MatN<D> R = MatN<D>::Zero();
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) {
      double s = 0;
      for (int r = 0; r < D; ++r) {
        s += j.dgamma[r][r](a, b) - j.dgamma[a][r](r, b);
        for (int q = 0; q < D; ++q) s += j.gamma[r](r, q) * j.gamma[q](a, b) - j.gamma[r](a, q) * j.gamma[q](r, b);
      }
      R(a, b) = s;
    }
  return symmetrized<MatN<D>>(R);
}
template Mat3 ricci_from_jet<3>(const MetricJet<3>&);
template Mat4 ricci_from_jet<4>(const MetricJet<4>&);

Mat4 p_quadratic(const Mat4& gi, const std::array<Mat4, 4>& dg) {
  // up[l](m,n): both slots raised
  std::array<Mat4, 4> up, mixed;
  for (int l = 0; l < 4; ++l) {
    up[l] = gi * dg[l] * gi;
    mixed[l] = gi * dg[l];  // (gi dg_l)(m, n) = g^{m r} d_l g_{r n}
  }
  Mat4 P = Mat4::Zero();
  for (int a = 0; a < 4; ++a)
    for (int b = a; b < 4; ++b) {
      double s = 0;
      for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) {
          // g^{mr} g^{ns} d_a g_rs d_m g_bn and the a<->b partner
          s += up[a](m, n) * dg[m](b, n) + up[b](m, n) * dg[m](a, n);
          // -1/2 g^{mr} g^{ns} d_a g_rs d_b g_mn
          s -= 0.5 * up[a](m, n) * dg[b](m, n);
        }
      for (int r = 0; r < 4; ++r)
        for (int sg = 0; sg < 4; ++sg) {
          // -g^{mr} g^{ns} d_r g_an d_s g_bm  and  g^{mr} g^{ns} d_r g_sa d_m g_nb
          double t4 = 0, t5 = 0;
          for (int m = 0; m < 4; ++m)
            for (int n = 0; n < 4; ++n) {
              double c = gi(m, r) * gi(n, sg);
              t4 += c * dg[r](a, n) * dg[sg](b, m);
              t5 += c * dg[r](sg, a) * dg[m](n, b);
            }
          s += -t4 + t5;
        }
      P(a, b) = P(b, a) = s;
    }
  return P;
}

RicciBreakdown ricci_gwc_from_jet(const MetricJet<4>& j) {
  RicciBreakdown rb;
  rb.wave_part.setZero();
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) rb.wave_part += j.ginv(m, n) * j.ddg[m][n];
  for (int r = 0; r < 4; ++r) rb.H(r) = j.ginv.cwiseProduct(j.gamma[r]).sum();
  Mat4 dH;  // dH(s, r) = d_s H^r
  for (int s = 0; s < 4; ++s)
    for (int r = 0; r < 4; ++r)
      dH(s, r) = j.dginv[s].cwiseProduct(j.gamma[r]).sum() + j.ginv.cwiseProduct(j.dgamma[s][r]).sum();
  Mat4 gdH = j.g * dH.transpose();  // gdH(a, b) = g_{a r} d_b H^r
  rb.gauge_part = gdH + gdH.transpose();
  for (int r = 0; r < 4; ++r) rb.gauge_part += rb.H(r) * j.dg[r];
  rb.gauge_part = symmetrized(rb.gauge_part);
  rb.wave_part = symmetrized(rb.wave_part);
  rb.p_part = p_quadratic(j.ginv, j.dg);
  rb.total = 0.5 * (-rb.wave_part + rb.p_part + rb.gauge_part);
  return rb;
}

Christoffel<4> christoffels_fd(const TensorFn& g, const Point& p, double h) {
  return metric_jet<4>(g, p, h, false).gamma;
}

Mat4 ricci_direct(const TensorFn& g, const Point& p, double h) { return ricci_from_jet<4>(metric_jet<4>(g, p, h)); }

RicciBreakdown ricci_gwc(const TensorFn& g, const Point& p, double h) {
  return ricci_gwc_from_jet(metric_jet<4>(g, p, h));
}

Vec4 fd_covector(const ScalarFn& f, const Point& p, double h) {
  auto d = fd_gradient<4>(f, p, h);
  return Vec4(d[0], d[1], d[2], d[3]);
}

Mat4 fd_hessian(const ScalarFn& f, const Point& p, double h) {
  Mat4 H;
  double f0 = f(p);
  for (int a = 0; a < 4; ++a) {
    double s = c2[2] * f0;
    for (int k = 0; k < 5; ++k) {
      if (k == 2) continue;
      Point q = p;
      q(a) += (k - 2) * h;
      s += c2[k] * f(q);
    }
    H(a, a) = s / (h * h);
    for (int b = a + 1; b < 4; ++b) {
      double m = 0;
      for (int k = 0; k < 5; ++k) {
        if (k == 2) continue;
        for (int l = 0; l < 5; ++l) {
          if (l == 2) continue;
          Point q = p;
          q(a) += (k - 2) * h;
          q(b) += (l - 2) * h;
          m += c1[k] * c1[l] * f(q);
        }
      }
      H(a, b) = H(b, a) = m / (h * h);
    }
  }
  return H;
}

double wave_operator(const TensorFn& g, const ScalarFn& f, const Point& p, double h) {
  MetricJet<4> j = metric_jet<4>(g, p, h, false);
  Mat4 hess = fd_hessian(f, p, h);
  Vec4 df = fd_covector(f, p, h);
  double s = j.ginv.cwiseProduct(hess).sum();
  for (int r = 0; r < 4; ++r) s -= j.ginv.cwiseProduct(j.gamma[r]).sum() * df(r);
  return s;
}

// grid backend

namespace {
constexpr int kIdx[10][2] = {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 1}, {1, 2}, {1, 3}, {2, 2}, {2, 3}, {3, 3}};
}

GridTensorField::GridTensorField(const TensorFn& f, const Vec4& lo, const Vec4& hi, const std::array<int, 4>& n)
    : lo_(lo), hi_(hi), n_(n) {
  size_t total = 1;
  for (int a = 0; a < 4; ++a) {
    if (n[a] < 4) throw ConfigError("grid needs at least 4 nodes per axis");
    h_(a) = (hi(a) - lo(a)) / (n[a] - 1);
    total *= n[a];
  }
  data_.resize(total);
  std::array<int, 4> i;
  for (i[0] = 0; i[0] < n[0]; ++i[0])
    for (i[1] = 0; i[1] < n[1]; ++i[1])
      for (i[2] = 0; i[2] < n[2]; ++i[2])
        for (i[3] = 0; i[3] < n[3]; ++i[3]) {
          Vec4 x;
          for (int a = 0; a < 4; ++a) x(a) = lo(a) + i[a] * h_(a);
          Mat4 v = f(x);
          auto& d = data_[index(i)];
          for (int c = 0; c < 10; ++c) d[c] = 0.5 * (v(kIdx[c][0], kIdx[c][1]) + v(kIdx[c][1], kIdx[c][0]));
        }
}

size_t GridTensorField::index(const std::array<int, 4>& i) const {
  return ((size_t(i[0]) * n_[1] + i[1]) * n_[2] + i[2]) * n_[3] + i[3];
}

bool GridTensorField::stencil_inside(const Point& p, double hs, int w) const {
  for (int a = 0; a < 4; ++a) {
    double lo = lo_(a) + h_(a), hi = hi_(a) - h_(a);
    if (p(a) - w * hs < lo - 1e-12 || p(a) + w * hs > hi + 1e-12) return false;
  }
  return true;
}

Mat4 GridTensorField::operator()(const Point& p) const {
  std::array<int, 4> base;
  std::array<std::array<double, 4>, 4> wts;
  for (int a = 0; a < 4; ++a) {
    double s = (p(a) - lo_(a)) / h_(a);
    int i0 = int(std::floor(s));
    if (i0 - 1 < 0 || i0 + 2 > n_[a] - 1) {
      std::ostringstream os;
      os << "interpolation stencil leaves grid on axis " << a << " at " << p(a);
      throw StencilOutOfDomain(os.str());
    }
    base[a] = i0 - 1;
    double x = s - i0;  // nodes at -1, 0, 1, 2
    wts[a][0] = -x * (x - 1) * (x - 2) / 6.0;
    wts[a][1] = (x + 1) * (x - 1) * (x - 2) / 2.0;
    wts[a][2] = -(x + 1) * x * (x - 2) / 2.0;
    wts[a][3] = (x + 1) * x * (x - 1) / 6.0;
  }
  std::array<double, 10> acc{};
  std::array<int, 4> i;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double w = wts[0][a] * wts[1][b] * wts[2][c] * wts[3][d];
          i = {base[0] + a, base[1] + b, base[2] + c, base[3] + d};
          const auto& v = data_[index(i)];
          for (int k = 0; k < 10; ++k) acc[k] += w * v[k];
        }
  Mat4 out;
  for (int k = 0; k < 10; ++k) out(kIdx[k][0], kIdx[k][1]) = out(kIdx[k][1], kIdx[k][0]) = acc[k];
  return out;
}

TensorFn GridTensorField::as_fn() const {
  return [this](const Point& p) { return (*this)(p); };
}

Christoffel<4> christoffels_fd(const GridTensorField& g, const Point& p, double h) {
  if (!g.stencil_inside(p, h)) throw StencilOutOfDomain("point too close to grid boundary for the FD stencil");
  return christoffels_fd(g.as_fn(), p, h);
}

Mat4 ricci_direct(const GridTensorField& g, const Point& p, double h) {
  if (!g.stencil_inside(p, h)) throw StencilOutOfDomain("point too close to grid boundary for the FD stencil");
  return ricci_direct(g.as_fn(), p, h);
}

}  // namespace mpgo
