#include "mpgo/transport.hpp"

#include <cmath>
#include <exception>

#include "mpgo/polarization.hpp"

namespace mpgo {

namespace {

Vec4 null_generator(const Phase& u, const TensorFn& g0, const Point& p, double h) {
  Mat4 gi = inverse_checked<4>(g0(p));
  Vec4 L = -gi * u.grad(p, h);
  if (!(L(0) > 0)) throw DegeneratePhase("characteristic is not future directed");
  return L;
}

Vec3 velocity(const Phase& u, const TensorFn& g0, const Point& p, double h) {
  Vec4 L = null_generator(u, g0, p, h);
  return L.tail<3>() / L(0);
}

// dT/dt = (1/L^0)[L^a G^r_am T_rn + L^a G^r_an T_mr + (box u T - S)/2]
Mat4 tensor_rate(const Phase& u, const TensorFn& g0, const TensorFn& S, const Point& p, const Mat4& T, double h) {
  auto G = christoffels_fd(g0, p, h);
  Mat4 gi = inverse_checked<4>(g0(p));
  Vec4 du = u.grad(p, h);
  Vec4 L = -gi * du;
  Mat4 C;  // C(r, m) = L^a G^r_am
  for (int r = 0; r < 4; ++r) C.row(r) = L.transpose() * G[r];
  double box = gi.cwiseProduct(u.hessian(p, h)).sum();
  for (int r = 0; r < 4; ++r) box -= gi.cwiseProduct(G[r]).sum() * du(r);
  Mat4 src = S ? Mat4(S(p)) : Mat4::Zero().eval();
  Mat4 rate = C.transpose() * T + T * C + 0.5 * (box * T - src);
  return rate / L(0);
}

}  // namespace

double box_phase(const Phase& u, const TensorFn& g0, const Point& p, double h) {
  auto G = christoffels_fd(g0, p, h);
  Mat4 gi = inverse_checked<4>(g0(p));
  Vec4 du = u.grad(p, h);
  double box = gi.cwiseProduct(u.hessian(p, h)).sum();
  for (int r = 0; r < 4; ++r) box -= gi.cwiseProduct(G[r]).sum() * du(r);
  return box;
}

CharacteristicBundle solve_transport(const Phase& u, const TensorFn& g0, const TensorFn& S, const TensorFn& T0,
                                     const std::vector<Vec3>& footpoints, double dt, double t_end,
                                     const Box3& domain, double h) {
  if (!(dt > 0)) throw ConfigError("transport step must be positive");
  CharacteristicBundle b;
  b.footpoints = footpoints;
  b.dt = dt;
  int nsteps = int(std::ceil(t_end / dt - 1e-12));
  for (int n = 0; n <= nsteps; ++n) b.times.push_back(n * dt);
  const bool carry = bool(T0);
  b.curves.resize(footpoints.size());
  b.tensors.resize(footpoints.size());
  b.truncated.assign(footpoints.size(), false);

  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < long(footpoints.size()); ++c) {
    try {
    Vec3 x = footpoints[c];
    Mat4 T = carry ? symmetrized<Mat4>(T0(on_slice(x))) : Mat4::Zero().eval();
    auto& curve = b.curves[c];
    auto& tens = b.tensors[c];
    curve.push_back(on_slice(x));
    if (carry) tens.push_back(T);
    for (int n = 0; n < nsteps; ++n) {
      double t = n * dt;
      auto P = [](double tt, const Vec3& xx) { return on_slice(xx, tt); };
      Vec3 k1 = velocity(u, g0, P(t, x), h);
      Mat4 m1 = carry ? tensor_rate(u, g0, S, P(t, x), T, h) : Mat4::Zero().eval();
      Vec3 x2 = x + 0.5 * dt * k1;
      Vec3 k2 = velocity(u, g0, P(t + 0.5 * dt, x2), h);
      Mat4 m2 = carry ? tensor_rate(u, g0, S, P(t + 0.5 * dt, x2), T + 0.5 * dt * m1, h) : Mat4::Zero().eval();
      Vec3 x3 = x + 0.5 * dt * k2;
      Vec3 k3 = velocity(u, g0, P(t + 0.5 * dt, x3), h);
      Mat4 m3 = carry ? tensor_rate(u, g0, S, P(t + 0.5 * dt, x3), T + 0.5 * dt * m2, h) : Mat4::Zero().eval();
      Vec3 x4 = x + dt * k3;
      Vec3 k4 = velocity(u, g0, P(t + dt, x4), h);
      Mat4 m4 = carry ? tensor_rate(u, g0, S, P(t + dt, x4), T + dt * m3, h) : Mat4::Zero().eval();
      x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      if (carry) {
        T += dt / 6.0 * (m1 + 2 * m2 + 2 * m3 + m4);
        if (!(T.cwiseAbs().maxCoeff() < 1e12)) throw Diverged("transport solution exceeded 1e12");
      }
      if (!domain.contains(x)) {
        b.truncated[c] = true;
        break;
      }
      curve.push_back(P(t + dt, x));
      if (carry) tens.push_back(symmetrized<Mat4>(T));
    }
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return b;
}

CharacteristicBundle flow_characteristics(const Phase& u, const TensorFn& g0, const std::vector<Vec3>& footpoints,
                                          double dt, double t_end, const Box3& domain, double h) {
  return solve_transport(u, g0, TensorFn{}, TensorFn{}, footpoints, dt, t_end, domain, h);
}

std::vector<std::vector<double>> transport_density(const CharacteristicBundle& b, const Phase& u,
                                                   const TensorFn& g0, const ScalarFn& F0, double h) {
  // dF/dt = (box u) F / (2 L^0), RK4 between stored curve points
  std::vector<std::vector<double>> out(b.curves.size());
  auto rate = [&](const Point& p, double F) {
    Vec4 L = null_generator(u, g0, p, h);
    return 0.5 * box_phase(u, g0, p, h) * F / L(0);
  };
  for (size_t c = 0; c < b.curves.size(); ++c) {
    const auto& cv = b.curves[c];
    double F = F0(cv[0]);
    out[c].push_back(F);
    for (size_t n = 0; n + 1 < cv.size(); ++n) {
      Point a = cv[n], e = cv[n + 1], m = 0.5 * (a + e);
      double dt = e(0) - a(0);
      double k1 = rate(a, F), k2 = rate(m, F + 0.5 * dt * k1), k3 = rate(m, F + 0.5 * dt * k2),
             k4 = rate(e, F + dt * k3);
      F += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      out[c].push_back(F);
    }
  }
  return out;
}

std::vector<AuditRow> propagation_audit(const CharacteristicBundle& b, const Phase& u, const TensorFn& g0,
                                        const std::vector<std::vector<double>>& dust, double h) {
  std::vector<AuditRow> rows(b.times.size());
  for (size_t n = 0; n < rows.size(); ++n) rows[n].t = b.times[n];
  for (size_t c = 0; c < b.curves.size(); ++c)
    for (size_t n = 0; n < b.tensors[c].size(); ++n) {
      const Point& p = b.curves[c][n];
      const Mat4& F1 = b.tensors[c][n];
      Mat4 g = g0(p);
      Mat4 gi = inverse_checked<4>(g);
      Vec4 du = u.grad(p, h);
      NullFrame f = null_frame_at(du, g, 1e-8);
      double F = dust.empty() ? 0.0 : dust[c][n];
      auto& r = rows[n];
      r.pol = std::max(r.pol, pol(F1, du, gi).cwiseAbs().maxCoeff());
      r.lLbar = std::max(r.lLbar, std::abs(f.L.dot(F1 * f.Lbar)));
      r.energy = std::max(r.energy, std::abs(tdot<4>(F1, F1, gi) - 8.0 * F * F));
    }
  return rows;
}

Mat4 dt_from_transport(const TensorFn& T0, const TensorFn& S0, const Phase& u, const TensorFn& g0, const Point& p,
                       double h) {
  Mat4 gi = inverse_checked<4>(g0(p));
  Vec4 du = u.grad(p, h);
  if (du.tail<3>().norm() < 1e-14) throw DegeneratePhase("vanishing spatial gradient");
  Vec4 L = -gi * du;
  auto G = christoffels_fd(g0, p, h);
  Mat4 T = symmetrized<Mat4>(T0(p));
  // spatial derivatives only: T0 is slice data
  Mat4 adv = Mat4::Zero();
  for (int i = 1; i < 4; ++i) {
    Point a = p, b = p, a2 = p, b2 = p;
    a(i) += h;
    b(i) -= h;
    a2(i) += 2 * h;
    b2(i) -= 2 * h;
    Mat4 d = (8.0 * (T0(a) - T0(b)) - (T0(a2) - T0(b2))) / (12.0 * h);
    adv += L(i) * d;
  }
  Mat4 C;
  for (int r = 0; r < 4; ++r) C.row(r) = L.transpose() * G[r];
  double box = box_phase(u, g0, p, h);
  Mat4 src = S0 ? Mat4(S0(p)) : Mat4::Zero().eval();
  return symmetrized<Mat4>((C.transpose() * T + T * C + 0.5 * (box * T - src) - adv) / L(0));
}

}  // namespace mpgo
