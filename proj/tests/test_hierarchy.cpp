#include "doctest.h"
#include "test_support.hpp"

#include "mpgo/hierarchy.hpp"

using namespace mpgo;
using namespace testsupport;

namespace {

Phase poly_phase(Gen& g, const std::string& label, double curv) {
  PolyScalar s;
  s.c0 = g.uni();
  s.c1 = Vec4(1.0, g.uni(), g.uni(), g.uni());
  s.c2 = g.sym4(curv);
  Phase ph = general_phase(label, s);
  ph.du = [s](const Point& p) { return Vec4(s.c1 + s.c2 * p); };
  ph.hess = [s](const Point&) { return s.c2; };
  return ph;
}

AnsatzStack random_stack(Gen& g, int n) {
  AnsatzStack st;
  for (int A = 0; A < n; ++A) {
    PhaseSlot s;
    s.phase = poly_phase(g, std::string(1, char('A' + A)), 0.2);
    s.F1 = poly_tensor(g);
    s.F21 = poly_tensor(g);
    s.F22 = poly_tensor(g);
    s.Frak = poly_tensor(g);
    st.phases.push_back(s);
  }
  for (int A = 0; A < n; ++A)
    for (int B = A + 1; B < n; ++B)
      for (int sg : {1, -1}) st.pairs.push_back({A, B, sg, poly_tensor(g)});
  return st;
}

}  // namespace

TEST_SUITE("hierarchy") {
  TEST_CASE("mixed source is transparent for admissible samples") {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      auto s = sample_admissible(seed, 2);
      REQUIRE(admissible_defect(s) < 1e-12);
      for (int sg : {1, -1}) {
        Mat4 I = i0pm(s.ph[0].F1, s.ph[1].F1, s.ph[0].du, s.ph[1].du, sg, s.ginv);
        Vec4 dv = s.ph[0].du + double(sg) * s.ph[1].du;
        CHECK(pol(I, dv, s.ginv).cwiseAbs().maxCoeff() <= 1e-12 * (1 + maxabs(I)));
      }
    }
  }

  TEST_CASE("mixed source is not transparent without polarization") {
    Gen g(3);
    auto s = sample_admissible(3, 2);
    Mat4 FA = g.sym4(), FB = g.sym4();
    Mat4 I = i0pm(FA, FB, s.ph[0].du, s.ph[1].du, 1, s.ginv);
    CHECK(pol(I, Vec4(s.ph[0].du + s.ph[1].du), s.ginv).norm() > 1e-3);
  }

  TEST_CASE("f2pm inverts the mixed wave operator") {
    for (std::uint64_t seed = 10; seed < 60; ++seed) {
      auto s = sample_admissible(seed, 2);
      for (int sg : {1, -1}) {
        Mat4 I = i0pm(s.ph[0].F1, s.ph[1].F1, s.ph[0].du, s.ph[1].du, sg, s.ginv);
        Mat4 F = f2pm(s.ph[0].F1, s.ph[1].F1, s.ph[0].du, s.ph[1].du, sg, s.ginv);
        Vec4 dv = s.ph[0].du + double(sg) * s.ph[1].du;
        CHECK(maxabs(pv_apply(F, dv, s.ginv) - I) <= 1e-12 * (1 + maxabs(I)));
      }
    }
  }

  TEST_CASE("f2pm refuses a null mixed word") {
    Mat4 g = minkowski();
    Vec4 du(1, -1, 0, 0);
    CHECK_THROWS_AS(f2pm(Mat4::Identity(), Mat4::Identity(), du, du, 1, g), NullDirectionUnsolvable);
  }

  TEST_CASE("p0pm pieces sum to p0pm and swap symmetrically") {
    auto s = sample_admissible(5, 2);
    for (int sg : {1, -1}) {
      auto t = p0pm_terms(s.ph[0].F1, s.ph[1].F1, s.ph[0].du, s.ph[1].du, sg, s.ginv);
      Mat4 sum = t[0] + t[1] + t[2] + t[3] + t[4];
      Mat4 P = p0pm(s.ph[0].F1, s.ph[1].F1, s.ph[0].du, s.ph[1].du, sg, s.ginv);
      CHECK(maxabs(sum - P) < 1e-14);
      // swapping A and B: the sign convention makes P(A,B,-) = -P(B,A,-)? check I-symmetry instead
      Mat4 IAB = i0pm(s.ph[0].F1, s.ph[1].F1, s.ph[0].du, s.ph[1].du, sg, s.ginv);
      Mat4 IBA = i0pm(s.ph[1].F1, s.ph[0].F1, s.ph[1].du, s.ph[0].du, sg, s.ginv);
      if (sg > 0) CHECK(maxabs(IAB - IBA) < 1e-12);
    }
  }

  TEST_CASE("tt tensor is polarized") {
    auto s = sample_admissible(8, 1);
    const auto& f = s.ph[0].frame;
    Mat4 T = tt_tensor(f, s.g, 1.3, 0.0, 2.0);
    CHECK(ttrace<4>(T, s.ginv) == doctest::Approx(0).epsilon(1e-12));
    CHECK(std::abs(f.L.dot(T * f.L)) < 1e-12);
    CHECK(pol(T, s.ph[0].du, s.ginv).norm() < 1e-12);
    CHECK(tdot<4>(T, T, s.ginv) == doctest::Approx(8 * 1.3 * 1.3));
  }

  TEST_CASE("g3h assignment hits the requested polarization") {
    for (std::uint64_t seed = 20; seed < 40; ++seed) {
      auto s = sample_admissible(seed, 1);
      Gen g(seed);
      Vec4 R = g.vec4();
      for (int k : {1, 2, 3}) {
        Mat4 S = g3h_assign(R, k, s.ph[0].frame, s.g);
        CHECK((pol(S, Vec4(k * s.ph[0].du), s.ginv) - R).norm() < 1e-12);
      }
    }
  }

  TEST_CASE("q0 covariant and coordinate forms agree on flat space") {
    Gen g(4);
    PolyTensor F = poly_tensor(g);
    TensorFn eta = [](const Point&) { return minkowski(); };
    Point p = g.vec4();
    CHECK((q0(F, eta, p, 1e-3) - q0_coordinate(F, eta, p, 1e-3)).norm() < 1e-9);
  }

  TEST_CASE("transport operator annihilates advected profiles on flat space") {
    Phase u = plane_phase(Vec3(1, 2, 0));
    Vec3 z = u.direction;
    Mat4 C = Gen(9).sym4();
    TensorFn T = [z, C](const Point& p) {
      double s = (p.tail<3>() - p(0) * z).dot(Vec3(0.3, -0.2, 0.5));
      return Mat4(std::sin(s) * C);
    };
    TensorFn eta = [](const Point&) { return minkowski(); };
    CHECK(maxabs(transport_operator(T, u, eta, Point(0.2, 0.1, -0.3, 0.4), 1e-3)) < 1e-9);
  }

  TEST_CASE("order-0 pieces recombine into the closed form on wave-gauge backgrounds") {
    for (std::uint64_t seed = 100; seed < 106; ++seed) {
      Gen g(seed);
      PPWave w = pp_wave(g, 0.1, seed % 2 ? 0.1 : 0.0);
      TensorFn g0 = w;
      AnsatzStack st = random_stack(g, 2);
      Point p = g.vec4(0.5);
      const double h = 1e-3;
      auto pieces = order0_pieces(st, g0, p, h);
      auto r0 = r0_analytic(st, g0, p, h);
      for (int A = 0; A < 2; ++A) {
        std::vector<int> w1(2, 0), w2(2, 0);
        w1[A] = 1;
        w2[A] = 2;
        std::string t = std::string("[") + char('A' + A) + "]";
        Mat4 s = pieces.blocks.at("sin" + t), c = pieces.blocks.at("cos2" + t);
        CHECK(maxabs(s - 2.0 * r0.get(w1, true)) < 1e-7 * (1 + maxabs(s)));
        CHECK(maxabs(c - 2.0 * r0.get(w2, false)) < 1e-9 * (1 + maxabs(c)));
      }
      for (int sg : {1, -1}) {
        std::string sgn = sg > 0 ? "+" : "-";
        Mat4 ab = pieces.blocks.at("cos" + sgn + "[A,B]");
        Mat4 ba = pieces.blocks.at("cos" + sgn + "[B,A]");
        Mat4 r = r0.get({1, sg}, false);
        CHECK(maxabs(ab - r) < 1e-9 * (1 + maxabs(r)));
        CHECK(maxabs(ba - r) < 1e-9 * (1 + maxabs(r)));
      }
    }
  }

  TEST_CASE("recombination away from wave gauge leaves the gauge term") {
    Gen g(77);
    PolyTensor d = poly_tensor(g, 0.05, 0.05, 0.05);
    TensorFn g0 = [d](const Point& p) { return Mat4(minkowski() + d(p)); };
    AnsatzStack st = random_stack(g, 1);
    Point p = g.vec4(0.5);
    const double h = 1e-3;
    auto pieces = order0_pieces(st, g0, p, h);
    auto r0 = r0_analytic(st, g0, p, h);
    Mat4 diff = pieces.blocks.at("sin[A]") - 2.0 * r0.get({1}, true);
    RicciBreakdown rb = ricci_gwc(g0, p, h);
    Vec4 du = st.phases[0].phase.grad(p);
    Mat4 F = st.phases[0].F1(p);
    Mat4 expect = rb.H.dot(du) * F - sym_prod(du, Vec4(F * rb.H));
    CHECK(maxabs(diff - expect) < 1e-6 * (1 + maxabs(expect)));
    CHECK(maxabs(expect) > 1e-3);
  }

  TEST_CASE("flat single phase: no constant word, 2u word is -3F^2 du du") {
    AnsatzStack st;
    PhaseSlot ps;
    ps.phase = plane_phase(Vec3(0, 0, 1));
    auto f = null_frame_at(ps.phase.grad(Point::Zero()), minkowski());
    Mat4 F1 = tt_tensor(f, minkowski(), 0.7, 2.0, 0.0);
    ps.F1 = [F1](const Point&) { return F1; };
    ps.dust = [](const Point&) { return 0.7; };
    st.phases.push_back(ps);
    TensorFn eta = [](const Point&) { return minkowski(); };
    auto r0 = r0_analytic(st, eta, Point::Zero(), 1e-3);
    Vec4 du = ps.phase.grad(Point::Zero());
    CHECK(maxabs(r0.get({0}, false)) < 1e-12);
    Mat4 c2 = r0.get({2}, false);
    CHECK(maxabs(c2 + 0.375 * 8 * 0.49 * du * du.transpose()) < 1e-12);
  }
}
