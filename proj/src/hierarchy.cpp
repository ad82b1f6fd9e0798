#include "mpgo/hierarchy.hpp"

#include <cmath>
#include <random>

namespace mpgo {

namespace {

Mat4 eval_or_zero(const TensorFn& f, const Point& p) { return f ? symmetrized<Mat4>(f(p)) : Mat4::Zero().eval(); }

std::array<Mat4, 4> fd_tensor_grad(const TensorFn& f, const Point& p, double h) {
  if (!f) return {Mat4::Zero(), Mat4::Zero(), Mat4::Zero(), Mat4::Zero()};
  return fd_gradient<4>(f, p, h);
}

std::string tag(const std::vector<std::string>& lab, int a) { return "[" + lab[a] + "]"; }
std::string tag(const std::vector<std::string>& lab, int a, int b) { return "[" + lab[a] + "," + lab[b] + "]"; }

}  // namespace

const PairSlot* AnsatzStack::pair(int a, int b, int sign) const {
  if (a > b) std::swap(a, b);
  for (const auto& s : pairs)
    if (s.a == a && s.b == b && s.sign == sign) return &s;
  return nullptr;
}

std::vector<Phase> AnsatzStack::phase_list() const {
  std::vector<Phase> out;
  for (const auto& s : phases) out.push_back(s.phase);
  return out;
}

std::vector<std::string> AnsatzStack::labels() const {
  std::vector<std::string> out;
  for (const auto& s : phases) out.push_back(s.phase.label);
  return out;
}

Mat4 tt_tensor(const NullFrame& f, const Mat4& g, double F, double thp, double thx) {
  Vec4 a = g * f.e1, b = g * f.e2;
  Mat4 plus = a * a.transpose() - b * b.transpose();
  Mat4 cross = sym_prod(a, b);
  return symmetrized<Mat4>(F * (thp * plus + thx * cross));
}

AdmissibleSample sample_admissible(std::uint64_t seed, int nphases, double eps) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  AdmissibleSample s;
  for (int attempt = 0;; ++attempt) {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
      for (int j = i; j < 4; ++j) r(i, j) = r(j, i) = U(rng);
    s.g = symmetrized<Mat4>(minkowski() + eps * r);
    if (has_lorentz_signature(s.g) && inverse_checked<4>(s.g)(0, 0) < 0) break;
    if (attempt > 100) throw Error("could not draw a Lorentzian metric");
  }
  s.ginv = inverse_checked<4>(s.g);
  for (int i = 0; i < 4; ++i) s.p(i) = U(rng);
  const Mat4& gi = s.ginv;
  std::vector<Vec4> dus;
  for (int A = 0; A < nphases; ++A) {
    Vec4 du;
    for (int attempt = 0;; ++attempt) {
      Vec3 k(U(rng), U(rng), U(rng));
      if (k.norm() < 0.2) continue;
      k *= (0.5 + 0.5 * (U(rng) + 1.0)) / k.norm();
      double a = gi(0, 0);
      double b = gi.block<1, 3>(0, 1).dot(k.transpose());
      double c = k.dot(gi.block<3, 3>(1, 1) * k);
      double disc = b * b - a * c;
      du << (-b - std::sqrt(disc)) / a, k;
      bool ok = true;
      for (const auto& other : dus)
        for (int sg : {1, -1}) {
          Vec4 dv = du + sg * other;
          if (std::abs(dv.dot(gi * dv)) < 1e-2) ok = false;
        }
      if (ok) break;
      if (attempt > 1000) throw Error("could not draw coherent phases");
    }
    dus.push_back(du);
    PhaseSample ps;
    ps.du = du;
    ps.frame = null_frame_at(du, s.g);
    double ang = M_PI * U(rng);
    ps.F = 0.5 * (U(rng) + 1.0);
    ps.F1 = tt_tensor(ps.frame, s.g, ps.F, 2.0 * std::cos(ang), 2.0 * std::sin(ang));
    s.ph.push_back(ps);
  }
  return s;
}

double admissible_defect(const AdmissibleSample& s) {
  double d = 0;
  for (const auto& ph : s.ph) {
    d = std::max(d, pol(ph.F1, ph.du, s.ginv).cwiseAbs().maxCoeff());
    d = std::max(d, std::abs(ph.frame.L.dot(ph.F1 * ph.frame.Lbar)));
    d = std::max(d, std::abs(tdot<4>(ph.F1, ph.F1, s.ginv) - 8.0 * ph.F * ph.F));
  }
  return d;
}

std::array<Mat4, 5> p0pm_terms(const Mat4& FA, const Mat4& FB, const Vec4& duA, const Vec4& duB, int sign,
                               const Mat4& gi) {
  const double s = sign;
  Vec4 LA = -gi * duA, LB = -gi * duB;
  Vec4 FALB = FA * LB, FBLA = FB * LA;
  double ab = tdot<4>(FA, FB, gi);
  std::array<Mat4, 5> t;
  t[0] = 0.25 * s * sym_prod(duA, Vec4(FB * gi * FALB));
  t[1] = 0.25 * s * sym_prod(duB, Vec4(FA * gi * FBLA));
  t[2] = 0.25 * s * 0.5 * ab * sym_prod(duA, duB);
  t[3] = 0.25 * s * sym_prod(FALB, FBLA);
  t[4] = -0.25 * s * duA.dot(gi * duB) * sym2<Mat4>(FA * gi * FB);
  return t;
}

Mat4 p0pm(const Mat4& FA, const Mat4& FB, const Vec4& duA, const Vec4& duB, int sign, const Mat4& gi) {
  auto t = p0pm_terms(FA, FB, duA, duB, sign, gi);
  return symmetrized<Mat4>(t[0] + t[1] + t[2] + t[3] + t[4]);
}

Mat4 i0pm(const Mat4& FA, const Mat4& FB, const Vec4& duA, const Vec4& duB, int sign, const Mat4& gi) {
  const double s = sign;
  Vec4 LA = -gi * duA, LB = -gi * duB;
  Vec4 dv = duA + s * duB;
  double ab = tdot<4>(FA, FB, gi);
  Mat4 I = -0.25 * (LA.dot(FB * LA) * FA + LB.dot(FA * LB) * FB);
  I += p0pm(FA, FB, duA, duB, sign, gi);
  Vec4 Y = -0.125 * ab * dv - 0.25 * FA * gi * FB * LA - 0.25 * s * FB * gi * FA * LB;
  I += sym_prod(dv, Y);
  return symmetrized<Mat4>(I);
}

Mat4 f2pm(const Mat4& FA, const Mat4& FB, const Vec4& duA, const Vec4& duB, int sign, const Mat4& gi) {
  Vec4 dv = duA + double(sign) * duB;
  double q = dv.dot(gi * dv);
  if (std::abs(q) < 1e-10) throw NullDirectionUnsolvable("coherence violated: mixed word is null");
  return symmetrized<Mat4>(-i0pm(FA, FB, duA, duB, sign, gi) / q);
}

Vec4 q0_coordinate(const TensorFn& F1, const TensorFn& g0, const Point& p, double h) {
  Mat4 gi = inverse_checked<4>(g0(p));
  auto dF = fd_tensor_grad(F1, p, h);
  Vec4 Q;
  for (int s = 0; s < 4; ++s) {
    double a = 0;
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) a += gi(m, n) * (dF[m](s, n) - 0.5 * dF[s](m, n));
    Q(s) = a;
  }
  return Q;
}

Vec4 q0(const TensorFn& F1, const TensorFn& g0, const Point& p, double h) {
  MetricJet<4> j = metric_jet<4>(g0, p, h, false);
  const Mat4& gi = j.ginv;
  Mat4 F = eval_or_zero(F1, p);
  auto dF = fd_tensor_grad(F1, p, h);
  // DF[m](s,n) = D_m F_sn
  std::array<Mat4, 4> DF;
  for (int m = 0; m < 4; ++m) {
    Mat4 corr = Mat4::Zero();
    for (int s = 0; s < 4; ++s)
      for (int n = 0; n < 4; ++n) {
        double c = 0;
        for (int r = 0; r < 4; ++r) c += j.gamma[r](m, s) * F(r, n) + j.gamma[r](m, n) * F(s, r);
        corr(s, n) = c;
      }
    DF[m] = dF[m] - corr;
  }
  Vec4 Q;
  for (int s = 0; s < 4; ++s) {
    double a = 0;
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) a += gi(m, n) * (DF[m](s, n) - 0.5 * DF[s](m, n));
    Q(s) = a;
  }
  return Q;
}

VTensors v_tensors(const TensorFn& F21, const TensorFn& F22, const TensorFn& F1, const Phase& u, const TensorFn& g0,
                   const Point& p, double h) {
  Mat4 gi = inverse_checked<4>(g0(p));
  Vec4 du = u.grad(p, h);
  Mat4 F = eval_or_zero(F1, p);
  VTensors v;
  v.V21 = pol(eval_or_zero(F21, p), du, gi) + q0(F1, g0, p, h);
  v.V22 = pol(eval_or_zero(F22, p), du, gi) + (3.0 / 32.0) * tdot<4>(F, F, gi) * du;
  return v;
}

Mat4 g3h_assign(const Vec4& Rt, int k, const NullFrame& f, const Mat4& g) {
  if (k < 1 || k > 3) throw Error("g3h_assign expects k in {1,2,3}");
  double kk = k;
  double sLL = -Rt.dot(f.L) / kk;
  double sL1 = -Rt.dot(f.e1) / kk;
  double sL2 = -Rt.dot(f.e2) / kk;
  double s11 = -Rt.dot(f.Lbar) / kk;
  // dual coframe of (L, Lbar, e1, e2)
  Vec4 thL = -0.5 * (g * f.Lbar);
  Vec4 th1 = g * f.e1, th2 = g * f.e2;
  Mat4 S = sLL * thL * thL.transpose() + sL1 * sym_prod(thL, th1) + sL2 * sym_prod(thL, th2) +
           s11 * th1 * th1.transpose();
  return symmetrized<Mat4>(S);
}

Mat4 transport_operator(const TensorFn& T, const Phase& u, const TensorFn& g0, const Point& p, double h) {
  MetricJet<4> j = metric_jet<4>(g0, p, h, false);
  Vec4 du = u.grad(p, h);
  Vec4 L = -j.ginv * du;
  Mat4 Tv = eval_or_zero(T, p);
  auto dT = fd_tensor_grad(T, p, h);
  Mat4 DLT = Mat4::Zero();
  for (int a = 0; a < 4; ++a) DLT += L(a) * dT[a];
  // - L^a Gamma^r_{a m} T_{r n} - L^a Gamma^r_{a n} T_{m r}
  Mat4 C = Mat4::Zero();  // C(r, m) = L^a Gamma^r_{a m}
  for (int r = 0; r < 4; ++r) C.row(r) = (L.transpose() * j.gamma[r]);
  DLT -= C.transpose() * Tv + Tv * C;
  Mat4 hess = u.hessian(p, h);
  double box = j.ginv.cwiseProduct(hess).sum();
  for (int r = 0; r < 4; ++r) box -= j.ginv.cwiseProduct(j.gamma[r]).sum() * du(r);
  return symmetrized<Mat4>(-2.0 * DLT + box * Tv);
}

HarmonicMap<Mat4> r0_analytic(const AnsatzStack& st, const TensorFn& g0, const Point& p, double h) {
  HarmonicMap<Mat4> out;
  const size_t n = st.phases.size();
  Mat4 gi = inverse_checked<4>(g0(p));
  out.add_constant(n, Mat4::Zero());
  if (!st.use.F1) return out;
  std::vector<Vec4> du(n);
  std::vector<Mat4> F1(n);
  for (size_t A = 0; A < n; ++A) {
    const auto& s = st.phases[A];
    du[A] = s.phase.grad(p, h);
    F1[A] = eval_or_zero(s.F1, p);
    double F = s.dust ? s.dust(p) : 0.0;
    double f1sq = tdot<4>(F1[A], F1[A], gi);
    out.add_constant(n, (F * F - f1sq / 8.0) * du[A] * du[A].transpose());

    std::vector<int> w(n, 0);
    w[A] = 1;
    Vec4 polsum = q0(s.F1, g0, p, h);
    if (st.use.F21) polsum += pol(eval_or_zero(s.F21, p), du[A], gi);
    Mat4 sinb = transport_operator(s.F1, s.phase, g0, p, h) - sym_prod(du[A], polsum);
    if (st.use.Frak) sinb -= sym_prod(du[A], pol(eval_or_zero(s.Frak, p), du[A], gi));
    out.add(w, true, 0.5 * sinb);

    w[A] = 2;
    Vec4 v22 = (3.0 / 32.0) * f1sq * du[A];
    if (st.use.F22) v22 += pol(eval_or_zero(s.F22, p), du[A], gi);
    out.add(w, false, -2.0 * sym_prod(du[A], v22));
  }
  for (size_t A = 0; A < n; ++A)
    for (size_t B = A + 1; B < n; ++B)
      for (int sg : {1, -1}) {
        Vec4 dv = du[A] + double(sg) * du[B];
        Mat4 c = i0pm(F1[A], F1[B], du[A], du[B], sg, gi);
        const PairSlot* ps = st.pair(int(A), int(B), sg);
        if (st.use.F2pm && ps && ps->F2pm) c -= pv_apply(symmetrized<Mat4>(ps->F2pm(p)), dv, gi);
        std::vector<int> w(n, 0);
        w[A] = 1;
        w[B] = sg;
        out.add(w, false, c);
      }
  return out;
}

Order0Pieces order0_pieces(const AnsatzStack& st, const TensorFn& g0, const Point& p, double h) {
  Order0Pieces out;
  const size_t n = st.phases.size();
  auto lab = st.labels();
  MetricJet<4> j = metric_jet<4>(g0, p, h, false);
  const Mat4& g = j.g;
  const Mat4& gi = j.ginv;
  std::vector<Vec4> du(n);
  std::vector<Mat4> F1(n);
  for (size_t A = 0; A < n; ++A) {
    const auto& s = st.phases[A];
    du[A] = s.phase.grad(p, h);
    F1[A] = eval_or_zero(s.F1, p);
    Vec4 L = -gi * du[A];
    Vec4 dup = gi * du[A];
    auto dF = fd_tensor_grad(s.F1, p, h);
    Mat4 LF = Mat4::Zero();
    for (int a = 0; a < 4; ++a) LF += L(a) * dF[a];
    double boxt = gi.cwiseProduct(s.phase.hessian(p, h)).sum();
    Mat4 W01 = 2.0 * LF - boxt * F1[A];

    Mat4 X;  // X(a,b) = Gamma^m_{a r} d^r u F_{b m}
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        double x = 0;
        for (int m = 0; m < 4; ++m)
          for (int r = 0; r < 4; ++r) x += j.gamma[m](a, r) * dup(r) * F1[A](b, m);
        X(a, b) = x;
      }
    Mat4 Fup = gi * F1[A] * gi;
    Vec4 Y;  // Y_b = F^{mn}(d_m g_bn - 1/2 d_b g_mn)
    for (int b = 0; b < 4; ++b) {
      double y = 0;
      for (int m = 0; m < 4; ++m)
        for (int nn = 0; nn < 4; ++nn) y += Fup(m, nn) * (j.dg[m](b, nn) - 0.5 * j.dg[b](m, nn));
      Y(b) = y;
    }
    Mat4 P01 = -2.0 * sym2<Mat4>(X) - sym_prod(du[A], Y);
    double f1sq = tdot<4>(F1[A], F1[A], gi);
    Mat4 P02 = 0.25 * f1sq * du[A] * du[A].transpose();

    Mat4 S = Mat4::Zero();
    if (st.use.Frak) S += eval_or_zero(s.Frak, p);
    if (st.use.F21) S += eval_or_zero(s.F21, p);
    Vec4 H11 = gi * pol(S, du[A], gi) + gi * q0_coordinate(s.F1, g0, p, h) - gi * Y;
    Mat4 F22 = st.use.F22 ? eval_or_zero(s.F22, p) : Mat4::Zero().eval();
    Vec4 H12 = -2.0 * gi * pol(F22, du[A], gi) - 0.25 * f1sq * dup;

    std::string t = tag(lab, int(A));
    out.tensors["W01" + t] = symmetrized<Mat4>(W01);
    out.tensors["P01" + t] = symmetrized<Mat4>(P01);
    out.tensors["P02" + t] = P02;
    out.vectors["H11" + t] = H11;
    out.vectors["H12" + t] = H12;
    out.blocks["sin" + t] = symmetrized<Mat4>(-W01 + P01 - sym_prod(du[A], Vec4(g * H11)));
    out.blocks["cos2" + t] = symmetrized<Mat4>(P02 + 2.0 * sym_prod(du[A], Vec4(g * H12)));
  }
  for (size_t A = 0; A < n; ++A)
    for (size_t B = 0; B < n; ++B) {
      if (A == B) continue;
      for (int sg : {1, -1}) {
        const double s = sg;
        Vec4 dv = du[A] + s * du[B];
        Vec4 LA = -gi * du[A], LB = -gi * du[B];
        const PairSlot* ps = st.pair(int(A), int(B), sg);
        Mat4 F2 = (st.use.F2pm && ps && ps->F2pm) ? symmetrized<Mat4>(ps->F2pm(p)) : Mat4::Zero().eval();
        double q = dv.dot(gi * dv);
        Mat4 W0 = -q * F2 + 0.25 * (LA.dot(F1[B] * LA) * F1[A] + LB.dot(F1[A] * LB) * F1[B]);
        Mat4 P0 = p0pm(F1[A], F1[B], du[A], du[B], sg, gi);
        double ab = tdot<4>(F1[A], F1[B], gi);
        Vec4 H1 = -gi * pol(F2, dv, gi) - 0.125 * ab * (gi * dv) - 0.25 * gi * F1[A] * gi * F1[B] * LA -
                  0.25 * s * gi * F1[B] * gi * F1[A] * LB;
        std::string t = tag(lab, int(A), int(B));
        std::string sgn = sg > 0 ? "+" : "-";
        out.tensors["W0" + sgn + t] = W0;
        out.tensors["P0" + sgn + t] = P0;
        out.vectors["H1" + sgn + t] = H1;
        out.blocks["cos" + sgn + t] = symmetrized<Mat4>(-W0 + P0 + sym_prod(dv, Vec4(g * H1)));
      }
    }
  return out;
}

ConstraintLeading constraint_leading(const SliceInput& in) {
  ConstraintLeading out;
  const size_t n = in.ph.size();
  const Mat3& g = in.g;
  Mat3 gi = inverse_checked<3>(g);
  std::array<Mat3, 3> dgi;
  for (int l = 0; l < 3; ++l) dgi[l] = -gi * in.dg[l] * gi;
  Mat3 k0up = gi * in.k0 * gi;
  // d_a g^{ca} + 1/2 g^{ab} g^{cd} d_d g_ab
  Vec3 gv;
  for (int c = 0; c < 3; ++c) {
    double s = 0;
    for (int a = 0; a < 3; ++a) s += dgi[a](c, a);
    for (int d = 0; d < 3; ++d) s += 0.5 * gi(c, d) * ttrace<3>(in.dg[d], gi);
    gv(c) = s;
  }
  out.H.add_constant(n, 0.0);
  out.M.add_constant(n, Vec3::Zero());

  for (size_t A = 0; A < n; ++A) {
    const auto& P = in.ph[A];
    Vec3 up = gi * P.du;
    std::vector<int> w(n, 0);
    w[A] = 1;
    Mat3 hup = gi * P.hess * gi;
    Mat3 dgu = Mat3::Zero();
    for (int l = 0; l < 3; ++l) dgu += up(l) * dgi[l];
    out.H.add(w, true, P.Fbar.cwiseProduct(hup - 0.5 * dgu - P.a * k0up).sum());

    Vec3 m;
    for (int i = 0; i < 3; ++i) {
      double div = 0;  // d^b (a Fbar)_{bi}
      for (int b = 0; b < 3; ++b)
        for (int d = 0; d < 3; ++d) div += gi(b, d) * (P.da(d) * P.Fbar(b, i) + P.a * P.dFbar[d](b, i));
      double x = 0.5 * div + 0.25 * P.a * P.Fbar.cwiseProduct(dgi[i]).sum() + 0.5 * P.a * gv.dot(P.Fbar.col(i)) -
                 0.5 * P.du(i) * P.Fbar.cwiseProduct(k0up).sum();
      m(i) = P.du(i) * ttrace<3>(P.kappa11, gi) - (P.kappa11 * up)(i) + x;
    }
    out.M.add(w, true, m);

    w[A] = 2;
    out.H.add(w, false, -6.0 * P.a * P.a * P.Fsq);
    Vec3 m2 = 2.0 * P.kappa12 * up - 2.0 * P.du * ttrace<3>(P.kappa12, gi) + 3.0 * P.a * P.Fsq * P.du;
    out.M.add(w, false, m2);
  }

  // products of first-order oscillations, every ordered pair
  for (size_t A = 0; A < n; ++A)
    for (size_t B = 0; B < n; ++B) {
      if (A == B) continue;
      const auto& PA = in.ph[A];
      const auto& PB = in.ph[B];
      Vec3 uA = gi * PA.du, uB = gi * PB.du;
      double ab = tdot<3>(PA.Fbar, PB.Fbar, gi);
      double x = (PA.Fbar * uB).dot(gi * (PB.Fbar * uA));  // Fbar_A{}_{i grad uB} Fbar_B{}^i{}_{grad uA}
      double dot = PA.du.dot(uB);
      Vec3 Y = PB.a * (PB.Fbar * gi * PA.Fbar * uB - PB.du * ab);
      Vec3 Z = PB.a * ab * PA.du;
      for (int sg : {1, -1}) {
        const double s = sg;
        std::vector<int> w(n, 0);
        w[A] = 1;
        w[B] = sg;
        double h = 0.125 * (2.0 * s * x +
                            ab * (-2.0 * PA.a * PA.a - 2.0 * PB.a * PB.a - 3.0 * s * dot + s * PA.a * PB.a));
        out.H.add(w, false, h);
        // -1/2 cos cos Y and -1/4 sin sin Z
        out.M.add(w, false, Vec3(-0.25 * Y + 0.125 * s * Z));
      }
    }

  for (const auto& pr : in.pairs) {
    const auto& PA = in.ph[pr.a];
    const auto& PB = in.ph[pr.b];
    Vec3 dv = PA.du + double(pr.sign) * PB.du;
    Vec3 up = gi * dv;
    std::vector<int> w(n, 0);
    w[pr.a] = 1;
    w[pr.b] = pr.sign;
    out.H.add(w, false, dv.dot(up) * ttrace<3>(pr.gamma2, gi) - up.dot(pr.gamma2 * up));
    out.M.add(w, false, Vec3(pr.kappa1 * up - dv * ttrace<3>(pr.kappa1, gi)));
  }
  return out;
}

}  // namespace mpgo
