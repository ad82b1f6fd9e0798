#include "doctest.h"
#include "test_support.hpp"

#include <map>
#include <set>

#include "mpgo/phases.hpp"

using namespace mpgo;
using namespace testsupport;

namespace {

TensorFn flat_fn() {
  return [](const Vec4&) { return minkowski(); };
}

// null covector for g with spatial part xi, future-directed
Vec4 null_covector(const Mat4& g, const Vec3& xi) {
  Mat4 gi = inverse_checked<4>(g);
  // gi00 w^2 + 2 w gi0j xi_j + gi_jk xi_j xi_k = 0
  double a = gi(0, 0), b = 2 * gi.block<1, 3>(0, 1).dot(xi.transpose()), c = xi.dot(gi.block<3, 3>(1, 1) * xi);
  double d = std::sqrt(b * b - 4 * a * c);
  for (double w : {(-b + d) / (2 * a), (-b - d) / (2 * a)}) {
    Vec4 du(w, xi(0), xi(1), xi(2));
    if ((-gi * du)(0) > 0) return du;
  }
  return Vec4::Zero();
}

// brute-force class from the multiset of absolute coefficients
std::string pattern_class(const std::vector<int>& c) {
  std::multiset<int> m;
  for (int k : c)
    if (k) m.insert(std::abs(k));
  std::vector<int> v(m.begin(), m.end());
  static const std::map<std::vector<int>, std::string> table = {
      {{1}, "N1"},          {{2}, "N2"},          {{3}, "N3"},       {{1, 1}, "I2"},    {{1, 2}, "I3"},
      {{1, 1, 1}, "I3"},    {{1, 3}, "I4"},       {{1, 1, 2}, "I4"}, {{1, 1, 1, 1}, "I4"}, {{1, 4}, "I5"},
      {{2, 3}, "I5"},       {{1, 2, 2}, "I5"},    {{1, 1, 3}, "I5"}, {{1, 1, 1, 2}, "I5"}};
  auto it = table.find(v);
  return it == table.end() ? "" : it->second;
}

std::map<std::string, int> brute_counts(int n) {
  std::map<std::string, int> out;
  std::vector<int> c(n, -4);
  while (true) {
    int first = 0;
    for (int k : c)
      if (k) {
        first = k;
        break;
      }
    if (first > 0) {
      auto cl = pattern_class(c);
      if (!cl.empty()) out[cl]++;
    }
    int i = 0;
    while (i < n && ++c[i] > 4) c[i++] = -4;
    if (i == n) break;
  }
  return out;
}

}  // namespace

TEST_SUITE("phases") {
  TEST_CASE("plane phases on Minkowski") {
    Phase a = plane_phase(Vec3(1, 0, 0));
    Vec4 p(0.3, 0.1, -0.2, 0.5);
    CHECK(a.grad(p) == Vec4(1, -1, 0, 0));
    CHECK(a.grad(p).dot(minkowski() * a.grad(p)) == 0.0);
    Vec4 L = -minkowski() * a.grad(p);
    CHECK(L == Vec4(1, 1, 0, 0));
    CHECK(a.value(p) == doctest::Approx(0.2));

    Phase b = plane_phase(Vec3(0, 1, 0));
    CHECK(Vec4(-minkowski() * b.grad(p)) == Vec4(1, 0, 1, 0));

    Phase c = plane_phase(Vec3(1, 1, 0) / std::sqrt(2.0));
    Vec4 dc = c.grad(p);
    CHECK(dc.tail<3>().norm() == doctest::Approx(1));
    CHECK(dc(0) == doctest::Approx(1));

    CHECK_THROWS_AS(plane_phase(Vec3::Zero()), InvalidDirection);
  }

  TEST_CASE("general phase gradients by finite differences") {
    Phase g = general_phase("A", [](const Vec4& p) { return p(0) - std::sin(p(1)) + p(2) * p(3); });
    Vec4 p(0.1, 0.4, 0.2, -0.3);
    Vec4 ref(1, -std::cos(0.4), -0.3, 0.2);
    CHECK((g.grad(p) - ref).cwiseAbs().maxCoeff() <= 1e-10);
    Mat4 H = g.hessian(p);
    CHECK(H(1, 1) == doctest::Approx(std::sin(0.4)).epsilon(1e-7));
    CHECK(H(2, 3) == doctest::Approx(1).epsilon(1e-7));
  }

  TEST_CASE("null frames on Minkowski") {
    auto f = build_null_frame(plane_phase(Vec3(1, 0, 0)), flat_fn(), Vec4::Zero());
    CHECK((f.L - Vec4(1, 1, 0, 0)).norm() <= 1e-14);
    CHECK((f.Lbar - Vec4(1, -1, 0, 0)).norm() <= 1e-14);
    CHECK((f.e1 - Vec4(0, 0, 1, 0)).norm() <= 1e-14);
    CHECK((f.e2 - Vec4(0, 0, 0, 1)).norm() <= 1e-14);
    auto z = build_null_frame(plane_phase(Vec3(0, 0, 1)), flat_fn(), Vec4::Zero());
    CHECK((z.e1 - Vec4(0, 1, 0, 0)).norm() <= 1e-14);
    CHECK(frame_defect(z, minkowski()) <= 1e-14);
  }

  TEST_CASE("null frame errors") {
    CHECK_THROWS_AS(null_frame_at(Vec4(1, 0, 0, 0), minkowski()), DegeneratePhase);
    CHECK_THROWS_AS(null_frame_at(Vec4(2, 1, 0, 0), minkowski()), EikonalViolated);
    // past-directed gradient
    CHECK_THROWS_AS(null_frame_at(Vec4(-1, 1, 0, 0), minkowski()), DegeneratePhase);
  }

  TEST_CASE("frames on perturbed metrics satisfy the pairings and reconstruct g") {
    Gen g(5);
    for (int i = 0; i < 100; ++i) {
      Mat4 m = g.lorentz(0.05);
      Vec3 xi = g.vec3();
      if (xi.norm() < 0.1) continue;
      Vec4 du = null_covector(m, xi);
      auto f = null_frame_at(du, m);
      CHECK(frame_defect(f, m) <= 1e-12);
      CHECK(maxabs(frame_metric(f, m) - m) <= 1e-11);
      CHECK(f.L(0) > 0);
      // L = a (T - N) on the slice
      CHECK((f.L - f.a * (f.T - f.N)).norm() <= 1e-12);
    }
  }

  TEST_CASE("lattice for one phase") {
    auto lat = harmonic_lattice({"A"});
    auto N = lat.N();
    REQUIRE(N.size() == 3);
    CHECK(N[0].name(lat.labels) == "uA");
    CHECK(N[1].name(lat.labels) == "2uA");
    CHECK(N[2].name(lat.labels) == "3uA");
    CHECK(lat.I().empty());
  }

  TEST_CASE("lattice counts match brute-force enumeration") {
    for (int n = 1; n <= 4; ++n) {
      std::vector<std::string> labels;
      for (int i = 0; i < n; ++i) labels.push_back(std::string(1, char('A' + i)));
      auto lat = harmonic_lattice(labels);
      std::map<std::string, int> got;
      for (const auto& w : lat.words) {
        got[class_name(w.cls)]++;
        CHECK(class_name(w.cls) == pattern_class(w.c));
        std::vector<int> c = w.c;
        CHECK(canonicalize(c) == 1);
      }
      CHECK(got == brute_counts(n));
    }
    auto two = harmonic_lattice({"A", "B"});
    CHECK(two.select({WordClass::I2}).size() == 2);
    CHECK(two.N().size() == 6);
    auto three = harmonic_lattice({"A", "B", "C"});
    int triple = 0;
    for (const auto& w : three.select({WordClass::I3}))
      if (w.phase_count() == 3) ++triple;
    CHECK(triple == 4);
  }

  TEST_CASE("word parsing and lookup") {
    std::vector<std::string> labels{"A", "B"};
    auto lat = harmonic_lattice(labels);
    CHECK(parse_word("uA-uB", labels) == std::vector<int>{1, -1});
    CHECK(parse_word("2uB", labels) == std::vector<int>{0, 2});
    CHECK(lat.in_W({-1, 1}));
    CHECK(lat.in_W({1, 2}));
    CHECK_FALSE(lat.in_W({1, 3}));
    CHECK(lat.find({0, 0}) < 0);
    std::vector<Phase> ph{plane_phase(Vec3(1, 0, 0), "A"), plane_phase(Vec3(0, 1, 0), "B")};
    Vec4 p(0.5, 0.2, 0.1, 0);
    CHECK(word_value({1, -2}, ph, p) == doctest::Approx(0.3 - 2 * 0.4));
    CHECK((word_grad({1, -2}, ph, p) - Vec4(-1, -1, 2, 0)).norm() <= 1e-12);
  }

  TEST_CASE("coherence and spatial margins") {
    std::vector<Phase> ph{plane_phase(Vec3(1, 0, 0), "A"), plane_phase(Vec3(0, 1, 0), "B")};
    auto lat = harmonic_lattice({"A", "B"});
    std::vector<Point> pts{Vec4::Zero(), Vec4(0.3, 1, 2, 3)};
    auto m = coherence_margins(lat, ph, flat_fn(), pts);
    CHECK(m.c_coherence == doctest::Approx(2));
    CHECK(m.c_spatial == doctest::Approx(1));
    CHECK(word_grad({1, -1}, ph, pts[0]).tail<3>().norm() == doctest::Approx(std::sqrt(2.0)));

    std::vector<Phase> par{plane_phase(Vec3(1, 0, 0), "A"), plane_phase(Vec3(1, 0, 0), "B")};
    CHECK(coherence_margins(lat, par, flat_fn(), pts).c_coherence == 0.0);

    ph.push_back(plane_phase(Vec3(0, 0.6, 0.8), "C"));
    auto m3 = coherence_margins(harmonic_lattice({"A", "B", "C"}), ph, flat_fn(), pts);
    CHECK(m3.c_coherence <= m.c_coherence + 1e-14);
    CHECK(m3.c_spatial <= m.c_spatial + 1e-14);
  }

  TEST_CASE("geodesic residual") {
    Vec4 p(0.5, 0.1, 0.2, 0.3);
    CHECK(geodesic_residual(plane_phase(Vec3(1, 0, 0)), flat_fn(), p, 1e-2).norm() <= 1e-13);

    // g = -dt^2 + f(t) dx^2 + dy^2 + dz^2, u = t - x is not null; closed form D_L L = (f'/(2 f^2), 0, 0, 0)
    TensorFn g = [](const Vec4& q) {
      Mat4 m = minkowski();
      m(1, 1) = 1 + 0.2 * q(0) * q(0);
      return m;
    };
    Vec4 r = geodesic_residual(plane_phase(Vec3(1, 0, 0)), g, p, 1e-2);
    double f = 1 + 0.2 * 0.25, fp = 0.4 * 0.5;
    CHECK(r(0) == doctest::Approx(0.5 * fp / (f * f)).epsilon(1e-8));
    CHECK(std::abs(r(1)) + std::abs(r(2)) + std::abs(r(3)) <= 1e-9);

    PPWave w;
    w.c[5] = 1;
    w.c[6] = 1;
    TensorFn pp = w;
    CHECK(geodesic_residual(plane_phase(Vec3(1, 0, 0)), pp, Vec4(0.2, 0.3, 0.5, -0.6), 1e-2).norm() <= 1e-10);
  }
}
