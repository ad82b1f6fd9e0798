#include "doctest.h"
#include "test_support.hpp"

#include <cmath>

#include "mpgo/polarization.hpp"

using namespace mpgo;
using namespace testsupport;

namespace {

double rel(const Mat4& a, const Mat4& b) { return maxabs(a - b) / std::max(1.0, maxabs(b)); }
double maxabs3(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

// random timelike-or-spacelike covector with |g^{-1}(dv,dv)| bounded away from zero
Vec4 non_null(Gen& g, const Mat4& gi) {
  for (;;) {
    Vec4 v = g.vec4();
    if (std::abs(v.dot(gi * v)) > 0.1) return v;
  }
}

Vec4 null_for(const Mat4& g, const Vec3& xi) {
  Mat4 gi = inverse_checked<4>(g);
  double a = gi(0, 0), b = 2 * Vec3(gi(0, 1), gi(0, 2), gi(0, 3)).dot(xi), c = xi.dot(gi.block<3, 3>(1, 1) * xi);
  double w = (-b - std::sqrt(b * b - 4 * a * c)) / (2 * a);
  Vec4 du(w, xi(0), xi(1), xi(2));
  if ((-gi * du)(0) < 0) du(0) = (-b + std::sqrt(b * b - 4 * a * c)) / (2 * a);
  return du;
}

}  // namespace

TEST_SUITE("polarization") {
  TEST_CASE("Pol of a frame-transverse tensor vanishes") {
    Vec4 du(1, -1, 0, 0);
    Mat4 S = Mat4::Zero();
    S(2, 2) = 1;
    S(3, 3) = -1;
    CHECK(pol(S, du, minkowski()).norm() == 0.0);
    Mat4 X = Mat4::Zero();
    X(2, 3) = X(3, 2) = 1;
    CHECK(pol(X, plane_phase(Vec3(1, 0, 0)), [](const Vec4&) { return minkowski(); }, Vec4::Zero()).norm() == 0.0);
  }

  TEST_CASE("Pol of a symmetrized product with the gradient") {
    Vec4 dt(1, 0, 0, 0), Q(0, 1, 0, 0);
    Vec4 P = pol(sym_prod(dt, Q), dt, minkowski());
    CHECK((P - Vec4(0, -1, 0, 0)).norm() <= 1e-15);
    Gen g(2);
    for (int i = 0; i < 100; ++i) {
      Mat4 m = g.lorentz(0.1), gi = inverse_checked<4>(m);
      Vec4 v = g.vec4(), q = g.vec4();
      CHECK((pol(sym_prod(v, q), v, gi) - v.dot(gi * v) * q).norm() <= 1e-13);
    }
  }

  TEST_CASE("null-frame components of Pol") {
    Gen g(3);
    for (int i = 0; i < 200; ++i) {
      Mat4 m = g.lorentz(0.05), gi = inverse_checked<4>(m);
      Vec4 du = null_for(m, g.vec3() + Vec3(0.5, 0, 0));
      auto f = null_frame_at(du, m);
      Mat4 S = g.sym4();
      Vec4 P = pol(S, du, gi);
      CHECK(std::abs(P.dot(f.L) + f.L.dot(S * f.L)) <= 1e-12);
      CHECK(std::abs(P.dot(f.e1) + f.L.dot(S * f.e1)) <= 1e-12);
      CHECK(std::abs(P.dot(f.e2) + f.L.dot(S * f.e2)) <= 1e-12);
      CHECK(std::abs(P.dot(f.Lbar) + f.e1.dot(S * f.e1) + f.e2.dot(S * f.e2)) <= 1e-12);
    }
  }

  TEST_CASE("P_v on null and time directions") {
    Gen g(4);
    Vec4 du(1, -1, 0, 0);
    Mat4 S = g.sym4();
    CHECK(maxabs(pv_apply(S, du, minkowski()) - sym_prod(du, Vec4(pol(S, du, minkowski())))) <= 1e-15);

    Mat4 D = Vec4(0, 1, -1, 0).asDiagonal();
    CHECK(pol(D, Vec4(1, 0, 0, 0), minkowski()).norm() == 0.0);
    CHECK(maxabs(pv_apply(D, Vec4(1, 0, 0, 0), minkowski()) - D) == 0.0);
  }

  TEST_CASE("range of P_v lies in the kernel of Pol") {
    Gen g(5);
    for (int i = 0; i < 1000; ++i) {
      Mat4 m = g.lorentz(0.2), gi = inverse_checked<4>(m);
      Vec4 v = non_null(g, gi);
      Mat4 A = pv_apply(g.sym4(), v, gi);
      CHECK(pol(A, v, gi).norm() <= 1e-12 * (1 + maxabs(A)));
    }
  }

  TEST_CASE("solving P_v") {
    CHECK(maxabs(pv_solve(Mat4::Zero(), Vec4(1, 0, 0, 0), minkowski())) == 0.0);
    Mat4 D = Vec4(0, 1, -1, 0).asDiagonal();
    CHECK(maxabs(pv_solve(D, Vec4(1, 0, 0, 0), minkowski()) - D) == 0.0);
    CHECK_THROWS_AS(pv_solve(D, Vec4(1, -1, 0, 0), minkowski()), NullDirectionUnsolvable);
    Mat4 bad = Mat4::Zero();
    bad(0, 1) = bad(1, 0) = 1;
    try {
      pv_solve(bad, Vec4(1, 0, 0, 0), minkowski());
      FAIL("expected NotInRange");
    } catch (const NotInRange& e) {
      CHECK(e.residual > 0.5);
    }
  }

  TEST_CASE("P_v round trip on its range") {
    Gen g(6);
    for (int i = 0; i < 1000; ++i) {
      Mat4 m = g.lorentz(0.2), gi = inverse_checked<4>(m);
      Vec4 v = non_null(g, gi);
      Mat4 A = pv_apply(g.sym4(), v, gi);
      Mat4 S = pv_solve(A, v, gi);
      CHECK(rel(pv_apply(S, v, gi), A) <= 1e-12);
    }
  }

  TEST_CASE("slice operator P1") {
    Vec3 dv(0.3, -0.7, 0.2);
    CHECK(maxabs3(pbar1(Mat3::Identity(), dv, Mat3::Identity())) <= 1e-15);
    // tr S = S_NN: fixed point
    Vec3 N = dv.normalized();
    Mat3 S = 2.5 * N * N.transpose();
    CHECK(maxabs3(pbar1(S, dv, Mat3::Identity()) - S) <= 1e-15);
    CHECK_THROWS_AS(pbar1(S, Vec3::Zero(), Mat3::Identity()), DegeneratePhase);

    Gen g(7);
    for (int i = 0; i < 1000; ++i) {
      Mat3 g3 = g.spd3(0.3), gi = inverse_checked<3>(g3);
      Vec3 d = g.vec3() + Vec3(0, 0, 1.5);
      Mat3 X = g.sym3();
      Mat3 P = pbar1(X, d, g3);
      Vec3 Nu = gi * d / std::sqrt(d.dot(gi * d));
      CHECK(std::abs(ttrace<3>(P, gi) - Nu.dot(P * Nu)) <= 1e-13);
      CHECK(maxabs3(pbar1(P, d, g3) - P) <= 1e-12);
    }
  }

  TEST_CASE("slice operator P2") {
    Vec3 x(1, 0, 0);
    Mat3 P = pbar2(Mat3::Identity(), x, Mat3::Identity());
    CHECK(maxabs3(P - 4 * x * x.transpose()) <= 1e-15);
    Mat3 cNN = -0.7 * x * x.transpose();
    CHECK(maxabs3(pbar2(cNN, x, Mat3::Identity()) - cNN) <= 1e-15);

    Gen g(8);
    for (int i = 0; i < 1000; ++i) {
      Mat3 g3 = g.spd3(0.3), gi = inverse_checked<3>(g3);
      Vec3 d = g.vec3() + Vec3(1.5, 0, 0);
      Mat3 X = g.sym3();
      Mat3 Q = pbar2(X, d, g3);
      Vec3 N = d / std::sqrt(d.dot(gi * d));
      // (tr Q) N_i = Q_{i N}
      CHECK((ttrace<3>(Q, gi) * N - Q * (gi * N)).cwiseAbs().maxCoeff() <= 1e-13);
      CHECK(maxabs3(pbar2(Q, d, g3) - Q) <= 1e-12);
    }
  }

  TEST_CASE("N-tilde product") {
    Vec3 x(1, 0, 0);
    CHECK(maxabs3(ntilde_otimes(x, Vec3::Zero(), Mat3::Identity())) == 0.0);
    Mat3 r = ntilde_otimes(x, x, Mat3::Identity());
    CHECK(maxabs3(r - Vec3(1.5, -0.5, -0.5).asDiagonal().toDenseMatrix()) <= 1e-15);
    Mat3 o = ntilde_otimes(x, Vec3(0, 2, -1), Mat3::Identity());
    CHECK(std::abs(o.trace()) <= 1e-15);
    Gen g(9);
    for (int i = 0; i < 100; ++i) {
      Mat3 g3 = g.spd3(0.3), gi = inverse_checked<3>(g3);
      Vec3 N = g.vec3(), X = g.vec3();
      Mat3 t = ntilde_otimes(N, X, g3);
      // trace = 2 X.N - 3/2 X.N
      CHECK(std::abs(ttrace<3>(t, gi) - 0.5 * X.dot(gi * N)) <= 1e-13);
    }
  }

  TEST_CASE("outputs do not depend on the transverse frame gauge") {
    Gen g(10);
    for (int i = 0; i < 100; ++i) {
      Mat4 m = g.lorentz(0.05), gi = inverse_checked<4>(m);
      Vec4 du = null_for(m, g.vec3() + Vec3(0, 0.6, 0));
      auto f = null_frame_at(du, m);
      double th = g.uni(0, 3.0), a = g.uni(), b = g.uni();
      Vec4 r1 = std::cos(th) * f.e1 + std::sin(th) * f.e2, r2 = -std::sin(th) * f.e1 + std::cos(th) * f.e2;
      auto tt = [&](const Vec4& x, const Vec4& y, double p, double c) {
        Vec4 X = m * x, Y = m * y;
        return Mat4(p * (X * X.transpose() - Y * Y.transpose()) + c * sym_prod(X, Y));
      };
      // same tensor written in two gauges: amplitudes rotate by twice the angle
      Mat4 S1 = tt(f.e1, f.e2, a, b);
      double c2 = std::cos(2 * th), s2 = std::sin(2 * th);
      Mat4 S2 = tt(r1, r2, a * c2 + b * s2, -a * s2 + b * c2);
      REQUIRE(maxabs(S1 - S2) <= 1e-13);
      CHECK(pol(S1, du, gi).norm() <= 1e-13);
      CHECK(maxabs(pv_apply(S1, du, gi) - pv_apply(S2, du, gi)) <= 1e-13);
      Mat3 g3 = m.block<3, 3>(1, 1);
      Vec3 d = du.tail<3>();
      CHECK(maxabs3(pbar2(S1.block<3, 3>(1, 1), d, g3) - pbar2(S2.block<3, 3>(1, 1), d, g3)) <= 1e-13);
      CHECK(maxabs3(pbar1(S1.block<3, 3>(1, 1), d, g3) - pbar1(S2.block<3, 3>(1, 1), d, g3)) <= 1e-13);
    }
  }
}
