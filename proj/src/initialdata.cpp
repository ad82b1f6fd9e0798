#include "mpgo/initialdata.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <sstream>

#include "mpgo/transport.hpp"

namespace mpgo {

namespace {

// 4th-order central difference of a field on the slice
template <class F> auto slice_gradient(const F& f, const Vec3& x, double h) { return fd_gradient<3>(f, x, h); }

Mat3 outer(const Vec3& a, const Vec3& b) { return a * b.transpose(); }

}  // namespace

void Seed::validate() const {
  if (thp.size() != F.size() || thx.size() != F.size()) throw InvalidSeed("seed arrays have different lengths");
  for (size_t A = 0; A < F.size(); ++A) {
    double s = thp[A] * thp[A] + thx[A] * thx[A];
    if (std::abs(s - 4.0) > 1e-13) {
      std::ostringstream os;
      os << "seed polarization angles violate th+^2 + thx^2 = 4 for phase " << A << " (got " << s << ")";
      throw InvalidSeed(os.str());
    }
    if (!F[A]) throw InvalidSeed("missing density");
  }
  if (!(R > 0)) throw InvalidSeed("support radius must be positive");
}

SliceGeometry slice_geometry(const SliceBackground& bg, const Vec3& x) {
  SliceGeometry s;
  s.x = x;
  const double h = bg.h;
  Point p = on_slice(x);
  MetricJet<4> j = metric_jet<4>(bg.g0, p, h, false);
  s.g4 = j.g;
  s.gi4 = j.ginv;
  s.G4 = j.gamma;
  s.g = j.g.block<3, 3>(1, 1);
  s.gi = inverse_checked<3>(s.g);
  for (int l = 0; l < 3; ++l) {
    s.dg[l] = j.dg[l + 1].block<3, 3>(1, 1);
    s.dgi[l] = -s.gi * s.dg[l] * s.gi;
  }
  s.shift = j.g.block<1, 3>(0, 1).transpose();
  s.lapse = 1.0 / std::sqrt(-j.ginv(0, 0));
  s.dtg0i = j.dg[0].block<1, 3>(0, 1).transpose();
  // k_ij = -(d_t g_ij - D_i b_j - D_j b_i) / (2 lapse)
  Mat3 Db;
  for (int i = 0; i < 3; ++i)
    for (int jj = 0; jj < 3; ++jj) {
      double v = j.dg[i + 1](0, jj + 1);
      for (int k = 0; k < 3; ++k) {
        double G = 0;  // 3-Christoffel Gamma^k_ij
        for (int m = 0; m < 3; ++m)
          G += 0.5 * s.gi(k, m) * (s.dg[i](m, jj) + s.dg[jj](m, i) - s.dg[m](i, jj));
        v -= G * s.shift(k);
      }
      Db(i, jj) = v;
    }
  s.k0 = symmetrized<Mat3>(-(j.dg[0].block<3, 3>(1, 1) - Db - Db.transpose()) / (2.0 * s.lapse));
  s.k0up = s.gi * s.k0 * s.gi;

  for (const auto& u : bg.phases) {
    PhaseGeometry g;
    g.du4 = u.grad(p, h);
    g.du = g.du4.tail<3>();
    auto grad_norm = [&](const Vec3& y) {
      Point q = on_slice(y);
      Mat3 gg = bg.g0(q).block<3, 3>(1, 1);
      Vec3 d = u.grad(q, h).tail<3>();
      return std::sqrt(d.dot(inverse_checked<3>(gg) * d));
    };
    g.a = std::sqrt(g.du.dot(s.gi * g.du));
    if (!(g.a > 1e-14)) throw DegeneratePhase("vanishing slice gradient");
    auto da = slice_gradient(grad_norm, x, h);
    g.da = Vec3(da[0], da[1], da[2]);
    g.N = g.du / g.a;
    g.Nup = s.gi * g.N;
    Mat4 H4 = u.hessian(p, h);
    g.hess = H4.block<3, 3>(1, 1);
    g.box = j.ginv.cwiseProduct(H4).sum();
    for (int r = 0; r < 4; ++r) g.box -= j.ginv.cwiseProduct(j.gamma[r]).sum() * g.du4(r);
    g.frame = null_frame_at(g.du4, s.g4, 1e-8);
    s.ph.push_back(g);
  }
  return s;
}

Mat3 seed_tensor(const Seed& s, int A, const NullFrame& f, const Mat3& g3, const Vec3& x) {
  double thp = s.thp[A], thx = s.thx[A];
  if (std::abs(thp * thp + thx * thx - 4.0) > 1e-13) throw InvalidSeed("th+^2 + thx^2 must equal 4");
  Vec3 e1 = g3 * f.e1.tail<3>(), e2 = g3 * f.e2.tail<3>();
  double F = s.F[A](x);
  return symmetrized<Mat3>(F * (thp * (outer(e1, e1) - outer(e2, e2)) + thx * (outer(e1, e2) + outer(e2, e1))));
}

Mat3 seed_field(const Seed& s, const SliceBackground& bg, int A, const Vec3& x) {
  Point p = on_slice(x);
  Mat4 g4 = bg.g0(p);
  NullFrame f = null_frame_at(bg.phases[A].grad(p, bg.h), g4, 1e-8);
  return seed_tensor(s, A, f, g4.block<3, 3>(1, 1), x);
}

Initials spacetime_initials(const Seed& s, const SliceBackground& bg, int A, const Vec3& x) {
  return spacetime_initials(s, bg, slice_geometry(bg, x), A);
}

Initials spacetime_initials(const Seed& s, const SliceBackground& bg, const SliceGeometry& geo, int A) {
  const auto& P = geo.ph[A];
  const Mat3& gi = geo.gi;
  const double a = P.a;
  Initials in;
  in.Fbar = seed_tensor(s, A, P.frame, geo.g, geo.x);
  in.dFbar = slice_gradient([&](const Vec3& y) { return seed_field(s, bg, A, y); }, geo.x, bg.h);
  in.F = s.F[A](geo.x);

  Vec3 w = geo.dtg0i + geo.k0 * P.Nup;
  Vec3 Ql = -in.Fbar * gi * w;
  for (int l = 0; l < 3; ++l) {
    double d = 0;
    for (int i = 0; i < 3; ++i)
      for (int jj = 0; jj < 3; ++jj) d += gi(i, jj) * in.dFbar[i](l, jj);
    Ql(l) += d + 0.5 * in.Fbar.cwiseProduct(geo.dgi[l]).sum();
  }
  in.Q0 << in.Fbar.cwiseProduct(geo.k0up).sum(), Ql;

  Mat3 dgu = Mat3::Zero();  // d^l u d_l g^{ij}
  Vec3 up = gi * P.du;
  for (int l = 0; l < 3; ++l) dgu += up(l) * geo.dgi[l];
  in.phi21hat = in.Fbar.cwiseProduct(-gi * P.hess * gi + a * geo.k0up + 0.5 * dgu).sum() / (8.0 * a * a);

  in.F1.setZero();
  in.F1.block<3, 3>(1, 1) = in.Fbar;

  const NullFrame& f = P.frame;
  double QL = in.Q0.dot(f.L);
  Vec3 e1 = geo.g * f.e1.tail<3>(), e2 = geo.g * f.e2.tail<3>();
  Vec3 f21 = (2.0 * in.phi21hat - QL / (2.0 * a * a)) * P.N + (in.Q0.dot(f.e1) / a) * e1 +
             (in.Q0.dot(f.e2) / a) * e2;
  in.F21.setZero();
  in.F21.block<3, 3>(1, 1) = 4.0 * in.phi21hat * geo.g;
  in.F21.block<1, 3>(0, 1) = f21.transpose();
  in.F21.block<3, 1>(1, 0) = f21;

  double F2 = in.F * in.F;
  in.F22.setZero();
  in.F22.block<3, 3>(1, 1) = 0.75 * F2 * geo.g;
  in.F22.block<1, 3>(0, 1) = (0.375 * F2 * P.N).transpose();
  in.F22.block<3, 1>(1, 0) = 0.375 * F2 * P.N;

  // time derivative of F1 on the slice
  in.dtF1.setZero();
  Vec3 d0i = in.Fbar * gi * w;
  in.dtF1.block<1, 3>(0, 1) = d0i.transpose();
  in.dtF1.block<3, 1>(1, 0) = d0i;
  Mat3 dij = Mat3::Zero();
  for (int l = 0; l < 3; ++l) dij += P.Nup(l) * in.dFbar[l];
  Vec4 tm(1.0, -P.Nup(0), -P.Nup(1), -P.Nup(2));
  Mat3 C = Mat3::Zero();  // C(k, i) = (d_t - N)^r Gamma^k_{r i}
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i) {
      double c = 0;
      for (int r = 0; r < 4; ++r) c += tm(r) * geo.G4[k + 1](r, i + 1);
      C(k, i) = c;
    }
  dij += C.transpose() * in.Fbar + in.Fbar * C;
  dij += P.box / (2.0 * a) * in.Fbar;
  in.dtF1.block<3, 3>(1, 1) = symmetrized<Mat3>(dij);
  return in;
}

SliceData correctors(const Seed& s, const SliceBackground& bg, const Vec3& x) {
  SliceData d;
  d.geo = slice_geometry(bg, x);
  const auto& geo = d.geo;
  const Mat3& g = geo.g;
  const Mat3& gi = geo.gi;
  const size_t n = bg.phases.size();
  for (size_t A = 0; A < n; ++A) d.init.push_back(spacetime_initials(s, bg, geo, int(A)));

  Vec3 gv;  // d_a g^{ca} + 1/2 g^{ab} g^{cd} d_d g_ab
  for (int c = 0; c < 3; ++c) {
    double v = 0;
    for (int a = 0; a < 3; ++a) v += geo.dgi[a](c, a);
    for (int dd = 0; dd < 3; ++dd) v += 0.5 * gi(c, dd) * ttrace<3>(geo.dg[dd], gi);
    gv(c) = v;
  }

  for (size_t A = 0; A < n; ++A) {
    const auto& P = geo.ph[A];
    const auto& in = d.init[A];
    const double a = P.a;
    PhaseCorrector c;
    for (int i = 0; i < 3; ++i) {
      double div = 0;
      for (int b = 0; b < 3; ++b)
        for (int e = 0; e < 3; ++e) div += gi(b, e) * (P.da(e) * in.Fbar(b, i) + a * in.dFbar[e](b, i));
      c.X21hat(i) = 0.5 * div + 0.25 * a * in.Fbar.cwiseProduct(geo.dgi[i]).sum() +
                    0.5 * a * gv.dot(in.Fbar.col(i)) - 0.5 * P.du(i) * in.Fbar.cwiseProduct(geo.k0up).sum();
    }
    Vec3 f21 = in.F21.block<3, 1>(1, 0);
    c.kappa11 = -ntilde_otimes(P.N, c.X21hat, g) / a - 0.5 * Mat3(in.dtF1.block<3, 3>(1, 1)) -
                0.5 * a * (4.0 * in.phi21hat * g - sym_prod(P.N, f21));
    c.kappa11 = symmetrized<Mat3>(c.kappa11);
    double F2 = in.F * in.F;
    // 9/4 is the coefficient for which the second-harmonic fixed-point equation holds with F22_{0N} = 3F^2/8
    c.kappa12 = 2.25 * a * F2 * outer(P.N, P.N);
    Vec3 up = gi * P.du;
    c.X21 = (P.du * ttrace<3>(c.kappa11, gi) - c.kappa11 * up + c.X21hat) / (a * a);
    c.X22 = (2.0 * c.kappa12 * up - 2.0 * P.du * ttrace<3>(c.kappa12, gi) + 3.0 * a * P.du * F2) / (4.0 * a * a);
    c.phi21 = in.phi21hat;
    c.phi22 = 3.0 * F2 / 16.0;
    d.ph.push_back(c);
  }

  for (size_t A = 0; A < n; ++A)
    for (size_t B = 0; B < n; ++B) {
      if (A == B) continue;
      for (int sg : {1, -1}) {
        const double sd = sg;
        const auto& PA = geo.ph[A];
        const auto& PB = geo.ph[B];
        const auto& iA = d.init[A];
        const auto& iB = d.init[B];
        PairCorrector c;
        c.a = int(A);
        c.b = int(B);
        c.sign = sg;
        c.dv = PA.du + sd * PB.du;
        c.av = std::sqrt(c.dv.dot(gi * c.dv));
        if (!(c.av > 1e-12)) throw DegeneratePhase("mixed word has vanishing slice gradient");
        c.Nv = c.dv / c.av;
        Vec4 dv4 = PA.du4 + sd * PB.du4;
        c.q = dv4.dot(geo.gi4 * dv4);
        c.I = i0pm(iA.F1, iB.F1, PA.du4, PB.du4, sg, geo.gi4);
        c.F2pm = f2pm(iA.F1, iB.F1, PA.du4, PB.du4, sg, geo.gi4);

        Vec3 uA = gi * PA.du, uB = gi * PB.du;
        double ab = tdot<3>(iA.Fbar, iB.Fbar, gi);
        double xs = (iA.Fbar * uB).dot(gi * (iB.Fbar * uA));
        double dotAB = PA.du.dot(uB);
        double av2 = c.av * c.av;
        c.phihat = ab / (64.0 * av2) *
                       (2.0 * PA.a * PA.a + 2.0 * PB.a * PB.a + 3.0 * sd * dotAB - sd * PA.a * PB.a) -
                   sd * xs / (32.0 * av2);
        Mat3 F2ij = c.F2pm.block<3, 3>(1, 1);
        c.gamma2 = symmetrized<Mat3>(F2ij - 4.0 * c.phihat * g);
        Vec3 Nvu = gi * c.Nv;
        c.phi = -0.125 * (ttrace<3>(c.gamma2, gi) - Nvu.dot(c.gamma2 * Nvu)) + c.phihat;

        c.Xhat = -0.125 * PB.a * (iB.Fbar * gi * iA.Fbar * uB) - 0.125 * PA.a * (iA.Fbar * gi * iB.Fbar * uA) +
                 (0.125 * (PA.a * PA.du + PB.a * PB.du) + sd / 16.0 * (PB.a * PA.du + PA.a * PB.du)) * ab;
        Vec3 I0 = c.I.block<3, 1>(1, 0);
        Mat3 Iij = c.I.block<3, 3>(1, 1);
        c.kappa1 = (-(PA.a + sd * PB.a) * Iij + sym_prod(c.dv, I0)) / (2.0 * c.q) +
                   ntilde_otimes(c.Nv, c.Xhat, g) / c.av;
        c.kappa1 = symmetrized<Mat3>(c.kappa1);
        Vec3 vu = gi * c.dv;
        c.X = (c.kappa1 * vu - c.dv * ttrace<3>(c.kappa1, gi) + c.Xhat) / av2;
        d.pairs.push_back(c);
      }
    }
  return d;
}

FixedPointResiduals fixed_point_residuals(const SliceData& d) {
  FixedPointResiduals r;
  const auto& geo = d.geo;
  const Mat3& g = geo.g;
  auto mx = [](const Mat3& m) { return m.cwiseAbs().maxCoeff(); };
  for (size_t A = 0; A < d.ph.size(); ++A) {
    const auto& P = geo.ph[A];
    const auto& in = d.init[A];
    const auto& c = d.ph[A];
    const double a = P.a;
    Vec3 f21 = in.F21.block<3, 1>(1, 0), f22 = in.F22.block<3, 1>(1, 0);
    Mat3 p11 = pbar2(c.kappa11, P.du, g);
    Mat3 e11 = p11 + ntilde_otimes(P.N, c.X21hat, g) / a +
               0.5 * (4.0 * a * in.phi21hat * g - sym_prod(Vec3(a * P.N), f21) + Mat3(in.dtF1.block<3, 3>(1, 1)));
    double F2 = in.F * in.F;
    Mat3 p12 = pbar2(c.kappa12, P.du, g);
    Mat3 e12 = p12 - 1.5 * a * F2 * ntilde_otimes(P.N, P.N, g) - 0.75 * a * F2 * g + sym_prod(Vec3(a * P.N), f22);
    r.ka11 = std::max(r.ka11, mx(e11));
    r.ka12 = std::max(r.ka12, mx(e12));
    r.range11 = std::max(r.range11, mx(p11 - c.kappa11));
    r.range12 = std::max(r.range12, mx(p12 - c.kappa12));
  }
  for (const auto& c : d.pairs) {
    const auto& PA = geo.ph[c.a];
    const auto& PB = geo.ph[c.b];
    Mat3 F2ij = c.F2pm.block<3, 3>(1, 1);
    Vec3 F20 = c.F2pm.block<3, 1>(1, 0);
    Mat3 p1 = pbar2(c.kappa1, c.dv, g);
    Mat3 e1 = p1 - ntilde_otimes(c.Nv, c.Xhat, g) / c.av -
              0.5 * ((PA.a + double(c.sign) * PB.a) * F2ij - sym_prod(c.dv, F20));
    Mat3 e2 = F2ij - pbar1(c.gamma2, c.dv, g) - 4.0 * c.phihat * g;
    r.ka1pm = std::max(r.ka1pm, mx(e1));
    r.ga2pm = std::max(r.ga2pm, mx(e2));
    r.range1pm = std::max(r.range1pm, mx(p1 - c.kappa1));
  }
  return r;
}

double initial_polarization_defect(const Seed& s, const SliceBackground& bg, int A, const Vec3& x) {
  const double h = bg.h;
  // F1 near the slice: slice value plus t times its time derivative
  TensorFn F1 = [&](const Point& p) {
    Initials in = spacetime_initials(s, bg, A, spatial(p));
    return Mat4(in.F1 + p(0) * in.dtF1);
  };
  Initials in = spacetime_initials(s, bg, A, x);
  TensorFn F21 = [&](const Point&) { return in.F21; };
  TensorFn F22 = [&](const Point&) { return in.F22; };
  VTensors v = v_tensors(F21, F22, F1, bg.phases[A], bg.g0, on_slice(x), h);
  return std::max(v.V21.cwiseAbs().maxCoeff(), v.V22.cwiseAbs().maxCoeff());
}

SliceInput slice_input(const SliceData& d) {
  SliceInput in;
  in.g = d.geo.g;
  in.k0 = d.geo.k0;
  in.dg = d.geo.dg;
  for (size_t A = 0; A < d.ph.size(); ++A) {
    const auto& P = d.geo.ph[A];
    SlicePhaseInput s;
    s.du = P.du;
    s.a = P.a;
    s.da = P.da;
    s.hess = P.hess;
    s.Fbar = d.init[A].Fbar;
    s.dFbar = d.init[A].dFbar;
    s.Fsq = d.init[A].F * d.init[A].F;
    s.kappa11 = d.ph[A].kappa11;
    s.kappa12 = d.ph[A].kappa12;
    in.ph.push_back(s);
  }
  for (const auto& c : d.pairs) in.pairs.push_back({c.a, c.b, c.sign, c.gamma2, c.kappa1});
  return in;
}

Mat3 conformal_lie(const Covec3Fn& X, const Tensor3Fn& g, const Vec3& x, double h) {
  auto vec = [&](const Vec3& y) { return Vec3(inverse_checked<3>(g(y)) * X(y)); };
  Vec3 V = vec(x);
  auto dV = fd_gradient<3>(vec, x, h);  // dV[i](k) = d_i X^k
  auto dg = fd_gradient<3>(g, x, h);
  Mat3 gx = g(x);
  Mat3 gi = inverse_checked<3>(gx);
  Mat3 L = Mat3::Zero();
  for (int k = 0; k < 3; ++k) L += V(k) * dg[k];
  Mat3 D;  // D(i, k) = d_i X^k
  for (int i = 0; i < 3; ++i) D.row(i) = dV[i].transpose();
  L += D * gx + (D * gx).transpose();
  double div = D.trace();
  for (int k = 0; k < 3; ++k) div += 0.5 * V(k) * ttrace<3>(dg[k], gi);
  return symmetrized<Mat3>(L - 0.5 * div * gx);
}

AssembledSlice conformal_assemble(const Seed& s, const SliceBackground& bg, double lambda, ConformalFlags fl) {
  if (!(lambda > 0)) throw InvalidScale("lambda must be positive");
  s.validate();
  auto S = std::make_shared<Seed>(s);
  auto B = std::make_shared<SliceBackground>(bg);
  const double lam = lambda;
  const size_t n = bg.phases.size();
  auto phase_values = [B, n](const Vec3& x) {
    std::vector<double> u(n);
    for (size_t A = 0; A < n; ++A) u[A] = B->phases[A].value(on_slice(x));
    return u;
  };

  AssembledSlice out;
  out.gamma = [S, B, lam, fl, phase_values, n](const Vec3& x) {
    SliceData d = correctors(*S, *B, x);
    auto u = phase_values(x);
    Mat3 g = d.geo.g;
    for (size_t A = 0; A < n; ++A) g += lam * std::cos(u[A] / lam) * d.init[A].Fbar;
    if (fl.gamma2)
      for (const auto& c : d.pairs)
        g += lam * lam * std::cos((u[c.a] + c.sign * u[c.b]) / lam) * c.gamma2;
    return g;
  };
  out.kappa = [S, B, lam, fl, phase_values, n](const Vec3& x) {
    SliceData d = correctors(*S, *B, x);
    auto u = phase_values(x);
    Mat3 k = d.geo.k0;
    for (size_t A = 0; A < n; ++A) {
      k += std::sin(u[A] / lam) * 0.5 * d.geo.ph[A].a * d.init[A].Fbar;
      if (fl.kappa1)
        k += lam * (std::cos(u[A] / lam) * d.ph[A].kappa11 + std::sin(2.0 * u[A] / lam) * d.ph[A].kappa12);
    }
    if (fl.kappa1)
      for (const auto& c : d.pairs) k += lam * std::sin((u[c.a] + c.sign * u[c.b]) / lam) * c.kappa1;
    return k;
  };
  out.phi = [S, B, lam, fl, phase_values, n](const Vec3& x) {
    if (!fl.phi2) return 1.0;
    SliceData d = correctors(*S, *B, x);
    auto u = phase_values(x);
    double p = 0;
    for (size_t A = 0; A < n; ++A)
      p += std::sin(u[A] / lam) * d.ph[A].phi21 + std::cos(2.0 * u[A] / lam) * d.ph[A].phi22;
    for (const auto& c : d.pairs) p += std::cos((u[c.a] + c.sign * u[c.b]) / lam) * c.phi;
    return 1.0 + lam * lam * p;
  };
  out.X = [S, B, lam, fl, phase_values, n](const Vec3& x) {
    if (!fl.X2) return Vec3::Zero().eval();
    SliceData d = correctors(*S, *B, x);
    auto u = phase_values(x);
    Vec3 X = Vec3::Zero();
    for (size_t A = 0; A < n; ++A)
      X += std::sin(u[A] / lam) * d.ph[A].X21 + std::cos(2.0 * u[A] / lam) * d.ph[A].X22;
    for (const auto& c : d.pairs) X += std::cos((u[c.a] + c.sign * u[c.b]) / lam) * c.X;
    return Vec3(lam * lam * X);
  };
  const double hfd = lam / 100.0;
  out.g = [G = out.gamma, P = out.phi](const Vec3& x) { return Mat3(std::pow(P(x), 4) * G(x)); };
  out.k = [G = out.gamma, K = out.kappa, P = out.phi, X = out.X, fl, hfd](const Vec3& x) {
    Mat3 k = K(x);
    if (fl.X2) k += conformal_lie(X, G, x, hfd);
    return Mat3(std::pow(P(x), 2) * k);
  };
  return out;
}

ConstraintValues constraint_residual(const Tensor3Fn& g, const Tensor3Fn& k, const Vec3& x, double h) {
  MetricJet<3> j = metric_jet<3>(g, x, h, true);
  ConstraintValues c;
  Mat3 kv = k(x);
  const Mat3& gi = j.ginv;
  double tr = ttrace<3>(kv, gi);
  c.H = scalar_curvature_from_jet<3>(j) - tdot<3>(kv, kv, gi) + tr * tr;
  auto dk = fd_gradient<3>(k, x, h);
  for (int i = 0; i < 3; ++i) {
    double div = 0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double t = dk[a](b, i);
        for (int cc = 0; cc < 3; ++cc) t -= j.gamma[cc](a, b) * kv(cc, i) + j.gamma[cc](a, i) * kv(b, cc);
        div += gi(a, b) * t;
      }
    double dtr = (-gi * j.dg[i] * gi).cwiseProduct(kv).sum() + gi.cwiseProduct(dk[i]).sum();
    c.M(i) = div - dtr;
  }
  return c;
}

Vec3 vector_laplacian(const Covec3Fn& X, const Tensor3Fn& g, const Vec3& x, double h) {
  // DX(a, i) = D_a X_i
  auto DX = [&](const Vec3& y) {
    auto G = metric_jet<3>(g, y, h, false).gamma;
    auto dX = fd_gradient<3>(X, y, h);
    Vec3 Xv = X(y);
    Mat3 D;
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < 3; ++i) {
        double v = dX[a](i);
        for (int c = 0; c < 3; ++c) v -= G[c](a, i) * Xv(c);
        D(a, i) = v;
      }
    return D;
  };
  MetricJet<3> j = metric_jet<3>(g, x, h, true);
  auto dD = fd_gradient<3>(DX, x, h);
  Mat3 D = DX(x);
  Vec3 out = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    double s = 0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double t = dD[a](b, i);
        for (int c = 0; c < 3; ++c) t -= j.gamma[c](a, b) * D(c, i) + j.gamma[c](a, i) * D(b, c);
        s += j.ginv(a, b) * t;
      }
    out(i) = s;
  }
  Mat3 Ric = ricci_from_jet<3>(j);
  out += Ric * j.ginv * X(x);
  return out;
}

PoissonResult remainder_poisson(const std::vector<double>& f, int n, double L) {
  if (n < 2 || int(f.size()) != n * n * n) throw ConfigError("Poisson source must have n^3 samples");
  PoissonResult r;
  const int nc = n / 2 + 1;
  std::vector<double> in(f);
  std::vector<std::complex<double>> spec(size_t(n) * n * nc);
  fftw_plan fw = fftw_plan_dft_r2c_3d(n, n, n, in.data(), reinterpret_cast<fftw_complex*>(spec.data()),
                                      FFTW_ESTIMATE);
  fftw_execute(fw);
  fftw_destroy_plan(fw);
  double fmax = 0;
  for (double v : f) fmax = std::max(fmax, std::abs(v));
  if (std::abs(spec[0].real()) / (double(n) * n * n) > 1e-14 * std::max(fmax, 1e-300)) r.projected = true;
  const double k0 = 2.0 * M_PI / L;
  auto wav = [n](int m) { return m <= n / 2 ? m : m - n; };
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < nc; ++c) {
        size_t idx = (size_t(a) * n + b) * nc + c;
        double k2 = k0 * k0 * (double(wav(a)) * wav(a) + double(wav(b)) * wav(b) + double(c) * c);
        spec[idx] = k2 > 0 ? -spec[idx] / k2 : 0.0;
      }
  r.phi.assign(f.size(), 0.0);
  fftw_plan bw = fftw_plan_dft_c2r_3d(n, n, n, reinterpret_cast<fftw_complex*>(spec.data()), r.phi.data(),
                                      FFTW_ESTIMATE);
  fftw_execute(bw);
  fftw_destroy_plan(bw);
  for (double& v : r.phi) v /= double(n) * n * n;
  return r;
}

}  // namespace mpgo
