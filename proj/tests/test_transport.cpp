#include "doctest.h"
#include "test_support.hpp"

#include <cmath>

#include "mpgo/polarization.hpp"
#include "mpgo/transport.hpp"

using namespace mpgo;
using namespace testsupport;

namespace {

TensorFn flat_fn() {
  return [](const Vec4&) { return minkowski(); };
}

// -dt^2 + a(t)^2 dx^2 + b(t)^2 dy^2 + dz^2 with a = 1 + c t, b = 1 + d t; u = log(a)/c - x is null
constexpr double kc = 0.3, kd = 0.2;
double scale(double t) { return 1 + kc * t; }
double yscale(double t) { return 1 + kd * t; }
TensorFn stretched() {
  return [](const Vec4& p) {
    Mat4 m = minkowski();
    m(1, 1) = scale(p(0)) * scale(p(0));
    m(2, 2) = yscale(p(0)) * yscale(p(0));
    return m;
  };
}
Phase stretched_phase() {
  Phase u = general_phase("A", [](const Vec4& p) { return std::log(scale(p(0))) / kc - p(1); }, Vec3(1, 0, 0));
  u.du = [](const Vec4& p) { return Vec4(1 / scale(p(0)), -1, 0, 0); };
  u.hess = [](const Vec4& p) {
    Mat4 h = Mat4::Zero();
    h(0, 0) = -kc / (scale(p(0)) * scale(p(0)));
    return h;
  };
  return u;
}

// exact Christoffels of the stretched metric
std::array<Mat4, 4> stretched_gamma(double t) {
  std::array<Mat4, 4> G;
  for (auto& m : G) m.setZero();
  double a = scale(t), b = yscale(t);
  G[0](1, 1) = a * kc;
  G[0](2, 2) = b * kd;
  G[1](0, 1) = G[1](1, 0) = kc / a;
  G[2](0, 2) = G[2](2, 0) = kd / b;
  return G;
}

// manufactured tensor and its exact derivatives
Mat4 coeff(int k) {
  Mat4 c;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) c(i, j) = std::cos(1.0 + i + j + 0.7 * k);
  return c;
}
Mat4 Tstar(const Vec4& p) { return coeff(0) * std::sin(p(0) + p(1)) + coeff(1) * p(0) * p(0) + coeff(2) * p(2); }
std::array<Mat4, 4> dTstar(const Vec4& p) {
  Mat4 c = std::cos(p(0) + p(1)) * coeff(0);
  return {Mat4(c + 2 * p(0) * coeff(1)), c, coeff(2), Mat4::Zero()};
}

// S = -2 D_L T + (box u) T with exact geometry
Mat4 manufactured_source(const Vec4& p) {
  double a = scale(p(0));
  Vec4 L(1 / a, 1 / (a * a), 0, 0);
  auto G = stretched_gamma(p(0));
  auto dT = dTstar(p);
  Mat4 T = Tstar(p);
  Mat4 DL = Mat4::Zero();
  for (int q = 0; q < 4; ++q) DL += L(q) * dT[q];
  Mat4 C;
  for (int r = 0; r < 4; ++r) C.row(r) = L.transpose() * G[r];
  DL -= C.transpose() * T + T * C;
  double box = -kd / (a * yscale(p(0)));  // (1/sqrt|g|) d_m (sqrt|g| g^mn d_n u)
  return -2 * DL + box * T;
}

double manufactured_error(double dt) {
  auto b = solve_transport(stretched_phase(), stretched(), manufactured_source, Tstar,
                           {Vec3(0, 0.1, 0), Vec3(0.3, -0.2, 0.4)}, dt, 1.0);
  double e = 0;
  for (size_t c = 0; c < b.curves.size(); ++c) e = std::max(e, maxabs(b.tensors[c].back() - Tstar(b.curves[c].back())));
  return e;
}

double bump(const Vec3& x) {
  double r2 = x.squaredNorm();
  return r2 < 1 ? std::exp(-1.0 / (1 - r2)) : 0.0;
}

}  // namespace

TEST_SUITE("transport") {
  TEST_CASE("straight rays on Minkowski") {
    auto b = flow_characteristics(plane_phase(Vec3(1, 0, 0)), flat_fn(), {Vec3::Zero(), Vec3(0, 1, 0)}, 0.1, 1.0);
    REQUIRE(b.curves.size() == 2);
    CHECK(b.times.size() == 11);
    CHECK((b.curves[0].back() - Vec4(1, 1, 0, 0)).norm() <= 1e-14);
    for (size_t n = 0; n < b.curves[0].size(); ++n)
      CHECK((b.curves[1][n] - b.curves[0][n] - Vec4(0, 0, 1, 0)).norm() <= 1e-14);
    CHECK_FALSE(b.truncated[0]);
  }

  TEST_CASE("curves leaving the domain are truncated") {
    Box3 box;
    box.lo = Vec3::Constant(-1);
    box.hi = Vec3(0.5, 1, 1);
    auto b = flow_characteristics(plane_phase(Vec3(1, 0, 0)), flat_fn(), {Vec3::Zero(), Vec3(-1, 0, 0)}, 0.1, 1.0, box);
    CHECK(b.truncated[0]);
    CHECK(b.curves[0].back()(1) <= 0.5);
    CHECK_FALSE(b.truncated[1]);
    CHECK_THROWS_AS(flow_characteristics(plane_phase(Vec3(1, 0, 0)), flat_fn(), {Vec3::Zero()}, 0.0, 1.0), ConfigError);
  }

  TEST_CASE("characteristics of a stretched metric converge at fourth order") {
    // exact ray: x(t) = log(1 + c t)/c
    auto err = [](double dt) {
      auto b = flow_characteristics(stretched_phase(), stretched(), {Vec3::Zero()}, dt, 1.0);
      return std::abs(b.curves[0].back()(1) - std::log(scale(1.0)) / kc);
    };
    double e1 = err(0.2), e2 = err(0.1);
    CHECK(e1 / e2 >= 14.0);
    CHECK(e2 <= 1e-5);
    // Richardson reference at dt/8
    auto b = flow_characteristics(stretched_phase(), stretched(), {Vec3::Zero()}, 0.1, 1.0);
    auto r = flow_characteristics(stretched_phase(), stretched(), {Vec3::Zero()}, 0.0125, 1.0);
    CHECK(std::abs(b.curves[0].back()(1) - r.curves[0].back()(1)) <= 2 * e2);
  }

  TEST_CASE("flat advection carries the initial tensor unchanged") {
    Gen g(31);
    Mat4 A = g.sym4();
    TensorFn T0 = [A](const Vec4& p) { return Mat4(A * (1 + p(1) * p(2))); };
    auto b = solve_transport(plane_phase(Vec3(0, 0.6, 0.8)), flat_fn(), TensorFn{}, T0,
                             {Vec3(0.1, 0.2, 0.3), Vec3(-0.5, 0, 0.2)}, 0.05, 1.0);
    for (size_t c = 0; c < b.curves.size(); ++c) {
      Mat4 T00 = T0(on_slice(b.footpoints[c]));
      for (size_t n = 0; n < b.tensors[c].size(); ++n) {
        CHECK(maxabs(b.tensors[c][n] - T00) <= 1e-13);
        // T(t, x) = T0(x - t z)
        Vec4 p = b.curves[c][n];
        Vec3 back = p.tail<3>() - p(0) * Vec3(0, 0.6, 0.8);
        CHECK(maxabs(b.tensors[c][n] - T0(on_slice(back))) <= 1e-12);
      }
    }
  }

  TEST_CASE("manufactured solution converges at fourth order") {
    double e1 = manufactured_error(0.1), e2 = manufactured_error(0.05);
    CHECK(e2 <= 1e-5);
    CHECK(e1 / e2 >= 14.0);
  }

  TEST_CASE("time derivative from the transport equation") {
    Vec4 p(0, 0.2, -0.1, 0.3);
    Mat4 d = dt_from_transport(Tstar, manufactured_source, stretched_phase(), stretched(), p);
    CHECK(maxabs(d - dTstar(p)[0]) <= 1e-8);
    Mat4 c = Mat4::Identity();
    TensorFn cst = [c](const Vec4&) { return c; };
    CHECK(maxabs(dt_from_transport(cst, TensorFn{}, plane_phase(Vec3(1, 0, 0)), flat_fn(), p)) <= 1e-13);
    Phase bad = general_phase("A", [](const Vec4& q) { return q(0); });
    CHECK_THROWS_AS(dt_from_transport(cst, TensorFn{}, bad, flat_fn(), p), DegeneratePhase);
    // solve_transport's slope at t = 0 agrees to O(dt^3)
    auto b = solve_transport(stretched_phase(), stretched(), manufactured_source, Tstar, {p.tail<3>()}, 1e-2, 1e-2);
    Vec4 q = b.curves[0][1];
    Mat4 fd = (b.tensors[0][1] - Tstar(p)) / 1e-2;
    // forward quotient along the ray versus the directional derivative along (1, dx/dt)
    Mat4 along = d + (q(1) - p(1)) / 1e-2 * dTstar(p)[1];
    CHECK(maxabs(fd - along) <= 5e-2);
  }

  TEST_CASE("propagation audit on admissible flat data") {
    Phase u = plane_phase(Vec3(1, 0, 0));
    TensorFn F1 = [](const Vec4& p) {
      Mat4 m = Mat4::Zero();
      double b = bump(p.tail<3>() - p(0) * Vec3(1, 0, 0));
      m(2, 2) = 2 * b;
      m(3, 3) = -2 * b;
      return m;
    };
    ScalarFn F = [](const Vec4& p) { return bump(p.tail<3>()); };  // |F1|^2 = 8 b^2
    std::vector<Vec3> feet;
    for (double x : {-0.5, 0.0, 0.5})
      for (double y : {-0.5, 0.0, 0.5}) feet.emplace_back(x, y, 0.1);
    auto b = solve_transport(u, flat_fn(), TensorFn{}, F1, feet, 0.05, 1.0);
    auto dust = transport_density(b, u, flat_fn(), F);
    auto rows = propagation_audit(b, u, flat_fn(), dust);
    REQUIRE(rows.size() == b.times.size());
    for (const auto& r : rows) {
      CHECK(r.pol <= 1e-12);
      CHECK(r.lLbar <= 1e-12);
      CHECK(r.energy <= 1e-11);
    }
  }

  TEST_CASE("energy identity on a curved background") {
    Phase u = stretched_phase();
    TensorFn g0 = stretched();
    TensorFn F1 = [u, g0](const Vec4& p) {
      Mat4 g = g0(p);
      auto f = null_frame_at(u.du(p), g);
      Vec4 a = g * f.e1, b = g * f.e2;
      return Mat4(2.0 * (a * a.transpose() - b * b.transpose()));
    };
    auto b = solve_transport(u, g0, TensorFn{}, F1, {Vec3(0, 0.2, 0), Vec3(0.4, 0, -0.3)}, 0.05, 1.0);
    auto dust = transport_density(b, u, g0, [](const Vec4&) { return 1.0; });
    auto rows = propagation_audit(b, u, g0, dust);
    CHECK(rows.back().energy <= 1e-9);
    CHECK(rows.back().pol <= 1e-9);
    CHECK(rows.back().lLbar <= 1e-9);
    // the density itself changes, so the identity is not trivially constant
    CHECK(std::abs(dust[0].back() - 1.0) > 0.05);
  }

  TEST_CASE("a polarization defect persists") {
    Phase u = plane_phase(Vec3(1, 0, 0));
    const double delta = 1e-3;
    TensorFn F1 = [delta](const Vec4& p) {
      Mat4 m = Mat4::Zero();
      double b = bump(p.tail<3>());
      m(2, 2) = 2 * b;
      m(3, 3) = -2 * b;
      m(0, 2) = m(2, 0) = delta * b;
      return m;
    };
    auto b = solve_transport(u, flat_fn(), TensorFn{}, F1, {Vec3(0, 0, 0)}, 0.1, 1.0);
    auto rows = propagation_audit(b, u, flat_fn(), {});
    double p0 = rows.front().pol;
    CHECK(p0 > 0.1 * delta * bump(Vec3::Zero()));
    for (const auto& r : rows) CHECK(r.pol == doctest::Approx(p0).epsilon(1e-10));
  }

  TEST_CASE("dust density under a focusing phase") {
    // box u = -d/(a b), L^0 = 1/a, so F = F0 / sqrt(b)
    auto b = flow_characteristics(stretched_phase(), stretched(), {Vec3::Zero()}, 0.05, 1.0);
    auto F = transport_density(b, stretched_phase(), stretched(), [](const Vec4&) { return 1.0; });
    CHECK(F[0].back() == doctest::Approx(1.0 / std::sqrt(yscale(1.0))).epsilon(1e-7));
  }

  TEST_CASE("blowup is reported") {
    TensorFn S = [](const Vec4&) { return Mat4(Mat4::Constant(-1e15)); };
    TensorFn T0 = [](const Vec4&) { return Mat4(Mat4::Zero()); };
    CHECK_THROWS_AS(solve_transport(plane_phase(Vec3(1, 0, 0)), flat_fn(), S, T0, {Vec3::Zero()}, 0.1, 1.0), Diverged);
  }
}
