#include "mpgo/phases.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

namespace mpgo {

Vec4 Phase::grad(const Point& p, double h) const {
  if (du) return du(p);
  return fd_covector(u, p, h);
}

Mat4 Phase::hessian(const Point& p, double h) const {
  if (hess) return hess(p);
  if (du) {
    auto d = fd_gradient<4>(du, p, h);
    Mat4 H;
    for (int a = 0; a < 4; ++a) H.row(a) = d[a].transpose();
    return symmetrized(H);
  }
  return fd_hessian(u, p, h);
}

Phase plane_phase(const Vec3& direction, const std::string& label) {
  double n = direction.norm();
  if (!(n > 1e-14) || !std::isfinite(n)) throw InvalidDirection("plane phase needs a nonzero direction");
  Vec3 z = direction / n;
  Phase ph;
  ph.label = label;
  ph.direction = z;
  ph.u = [z](const Point& p) { return p(0) - z.dot(p.tail<3>()); };
  Vec4 g(1.0, -z(0), -z(1), -z(2));
  ph.du = [g](const Point&) { return g; };
  ph.hess = [](const Point&) { return Mat4::Zero().eval(); };
  return ph;
}

Phase general_phase(const std::string& label, ScalarFn u, const Vec3& direction) {
  Phase ph;
  ph.label = label;
  ph.direction = direction;
  ph.u = std::move(u);
  return ph;
}

Vec4 flat(const Vec4& v, const Mat4& g) { return g * v; }

NullFrame null_frame_at(const Vec4& du, const Mat4& g, double eikonal_tol) {
  Mat4 gi = inverse_checked<4>(g);
  double scale = std::max(1.0, du.squaredNorm());
  if (du.tail<3>().norm() < 1e-14) throw DegeneratePhase("phase has vanishing spatial gradient");
  double eik = du.dot(gi * du);
  if (std::abs(eik) > eikonal_tol * scale) throw EikonalViolated("phase gradient is not null");
  if (gi(0, 0) >= 0) throw SingularMetric("t-slices are not spacelike");
  NullFrame f;
  f.L = -gi * du;
  f.T = -gi.col(0) / std::sqrt(-gi(0, 0));
  f.a = -f.L.dot(g * f.T);
  if (!(f.a > 0)) throw DegeneratePhase("phase gradient is not future-directed");
  f.N = f.T - f.L / f.a;
  f.Lbar = (f.T + f.N) / f.a;

  auto ip = [&](const Vec4& x, const Vec4& y) { return x.dot(g * y); };
  auto project = [&](Vec4 v, const std::vector<Vec4>& basis) {
    for (int pass = 0; pass < 2; ++pass) {
      v += ip(v, f.T) * f.T;
      for (const auto& b : basis) v -= ip(v, b) * b;
    }
    return v;
  };
  int used = -1;
  for (int i = 1; i < 4; ++i) {
    Vec4 v = project(Vec4::Unit(i), {f.N});
    double n2 = ip(v, v);
    if (n2 > 1e-16) {
      f.e1 = v / std::sqrt(n2);
      used = i;
      break;
    }
  }
  if (used < 0) throw DegeneratePhase("no spatial axis transverse to N");
  bool done = false;
  for (int i = 1; i < 4 && !done; ++i) {
    if (i == used) continue;
    Vec4 v = project(Vec4::Unit(i), {f.N, f.e1});
    double n2 = ip(v, v);
    if (n2 > 1e-16) {
      f.e2 = v / std::sqrt(n2);
      done = true;
    }
  }
  if (!done) throw DegeneratePhase("frame completion failed");
  return f;
}

NullFrame build_null_frame(const Phase& u, const TensorFn& g, const Point& p, double h) {
  return null_frame_at(u.grad(p, h), g(p));
}

double frame_defect(const NullFrame& f, const Mat4& g) {
  auto ip = [&](const Vec4& x, const Vec4& y) { return x.dot(g * y); };
  double d = 0;
  d = std::max(d, std::abs(ip(f.L, f.L)));
  d = std::max(d, std::abs(ip(f.Lbar, f.Lbar)));
  d = std::max(d, std::abs(ip(f.L, f.Lbar) + 2.0));
  for (const Vec4* e : {&f.e1, &f.e2}) {
    d = std::max(d, std::abs(ip(f.L, *e)));
    d = std::max(d, std::abs(ip(f.Lbar, *e)));
  }
  d = std::max(d, std::abs(ip(f.e1, f.e1) - 1.0));
  d = std::max(d, std::abs(ip(f.e2, f.e2) - 1.0));
  d = std::max(d, std::abs(ip(f.e1, f.e2)));
  return d;
}

Mat4 frame_metric(const NullFrame& f, const Mat4& g) {
  Vec4 L = g * f.L, Lb = g * f.Lbar, a = g * f.e1, b = g * f.e2;
  return -0.5 * sym_prod(L, Lb) + a * a.transpose() + b * b.transpose();
}

std::string class_name(WordClass c) {
  switch (c) {
    case WordClass::N1: return "N1";
    case WordClass::N2: return "N2";
    case WordClass::N3: return "N3";
    case WordClass::I2: return "I2";
    case WordClass::I3: return "I3";
    case WordClass::I4: return "I4";
    case WordClass::I5: return "I5";
  }
  return "?";
}

std::string HarmonicWord::name(const std::vector<std::string>& labels) const {
  std::string s;
  bool first = true;
  for (size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0) continue;
    int k = c[i];
    if (k < 0) s += "-";
    else if (!first) s += "+";
    if (std::abs(k) != 1) s += std::to_string(std::abs(k));
    s += "u" + (i < labels.size() ? labels[i] : std::to_string(i));
    first = false;
  }
  return s.empty() ? "1" : s;
}

int HarmonicWord::phase_count() const {
  return int(std::count_if(c.begin(), c.end(), [](int k) { return k != 0; }));
}

int canonicalize(std::vector<int>& c) {
  for (int k : c) {
    if (k == 0) continue;
    if (k < 0) {
      for (int& x : c) x = -x;
      return -1;
    }
    return 1;
  }
  return 1;
}

std::vector<HarmonicWord> HarmonicLattice::select(std::initializer_list<WordClass> cls) const {
  std::vector<HarmonicWord> out;
  for (const auto& w : words)
    if (std::find(cls.begin(), cls.end(), w.cls) != cls.end()) out.push_back(w);
  return out;
}

int HarmonicLattice::find(std::vector<int> c) const {
  canonicalize(c);
  for (size_t i = 0; i < words.size(); ++i)
    if (words[i].c == c) return int(i);
  return -1;
}

bool HarmonicLattice::in_W(std::vector<int> c) const {
  int i = find(std::move(c));
  if (i < 0) return false;
  WordClass k = words[i].cls;
  return k != WordClass::I4 && k != WordClass::I5;
}

HarmonicLattice harmonic_lattice(const std::vector<std::string>& labels) {
  HarmonicLattice lat;
  lat.labels = labels;
  const int n = int(labels.size());
  std::set<std::vector<int>> seen;
  auto add = [&](std::vector<int> c, WordClass cls) {
    if (std::all_of(c.begin(), c.end(), [](int k) { return k == 0; })) return;
    canonicalize(c);
    if (!seen.insert(c).second) return;
    lat.words.push_back({c, cls});
  };
  auto e = [&](std::initializer_list<std::pair<int, int>> terms) {
    std::vector<int> c(n, 0);
    for (auto [i, k] : terms) c[i] += k;
    return c;
  };
  const int sg[2] = {1, -1};

  for (int k = 1; k <= 3; ++k)
    for (int a = 0; a < n; ++a) add(e({{a, k}}), k == 1 ? WordClass::N1 : k == 2 ? WordClass::N2 : WordClass::N3);

  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int s : sg) add(e({{a, 1}, {b, s}}), WordClass::I2);

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b)
        for (int s : sg) add(e({{a, 1}, {b, 2 * s}}), WordClass::I3);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        for (int s1 : sg)
          for (int s2 : sg) add(e({{a, 1}, {b, s1}, {c, s2}}), WordClass::I3);

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b)
        for (int s : sg) add(e({{a, 1}, {b, 3 * s}}), WordClass::I4);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = 0; c < n; ++c)
        if (c != a && c != b)
          for (int s1 : sg)
            for (int s2 : sg) add(e({{a, 1}, {b, s1}, {c, 2 * s2}}), WordClass::I4);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        for (int d = c + 1; d < n; ++d)
          for (int s1 : sg)
            for (int s2 : sg)
              for (int s3 : sg) add(e({{a, 1}, {b, s1}, {c, s2}, {d, s3}}), WordClass::I4);

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b)
        for (int s : sg) {
          add(e({{a, 1}, {b, 4 * s}}), WordClass::I5);
          add(e({{a, 3}, {b, 2 * s}}), WordClass::I5);
        }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        if (a != b && a != c)
          for (int s1 : sg)
            for (int s2 : sg) add(e({{a, 1}, {b, 2 * s1}, {c, 2 * s2}}), WordClass::I5);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = 0; c < n; ++c)
        if (c != a && c != b)
          for (int s1 : sg)
            for (int s2 : sg) add(e({{a, 1}, {b, s1}, {c, 3 * s2}}), WordClass::I5);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        for (int d = 0; d < n; ++d)
          if (d != a && d != b && d != c)
            for (int s1 : sg)
              for (int s2 : sg)
                for (int s3 : sg) add(e({{a, 1}, {b, s1}, {c, s2}, {d, 2 * s3}}), WordClass::I5);
  return lat;
}

std::vector<int> parse_word(const std::string& s, const std::vector<std::string>& labels) {
  std::vector<int> c(labels.size(), 0);
  size_t i = 0;
  bool any = false;
  while (i < s.size()) {
    int sign = 1;
    if (s[i] == '+' || s[i] == '-') {
      sign = s[i] == '-' ? -1 : 1;
      ++i;
    }
    int k = 0;
    bool digits = false;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      k = 10 * k + (s[i] - '0');
      ++i;
      digits = true;
    }
    if (!digits) k = 1;
    if (i < s.size() && s[i] == 'u') {
      // a label may itself start with 'u'; prefer the longest match either way
      size_t best = std::string::npos, blen = 0;
      for (size_t l = 0; l < labels.size(); ++l) {
        const auto& lab = labels[l];
        if (s.compare(i + 1, lab.size(), lab) == 0 && lab.size() > blen) best = l, blen = lab.size();
      }
      size_t best2 = std::string::npos, blen2 = 0;
      for (size_t l = 0; l < labels.size(); ++l) {
        const auto& lab = labels[l];
        if (s.compare(i, lab.size(), lab) == 0 && lab.size() > blen2) best2 = l, blen2 = lab.size();
      }
      if (best != std::string::npos) {
        c[best] += sign * k;
        i += 1 + blen;
      } else if (best2 != std::string::npos) {
        c[best2] += sign * k;
        i += blen2;
      } else {
        throw ConfigError("unknown phase label in word '" + s + "'");
      }
    } else {
      size_t best = std::string::npos, blen = 0;
      for (size_t l = 0; l < labels.size(); ++l) {
        const auto& lab = labels[l];
        if (s.compare(i, lab.size(), lab) == 0 && lab.size() > blen) best = l, blen = lab.size();
      }
      if (best == std::string::npos) throw ConfigError("unknown phase label in word '" + s + "'");
      c[best] += sign * k;
      i += blen;
    }
    any = true;
  }
  if (!any || std::all_of(c.begin(), c.end(), [](int k) { return k == 0; }))
    throw ConfigError("empty harmonic word '" + s + "'");
  return c;
}

double word_value(const std::vector<int>& c, const std::vector<Phase>& ph, const Point& p) {
  double s = 0;
  for (size_t i = 0; i < c.size(); ++i)
    if (c[i]) s += c[i] * ph[i].value(p);
  return s;
}

Vec4 word_grad(const std::vector<int>& c, const std::vector<Phase>& ph, const Point& p, double h) {
  Vec4 s = Vec4::Zero();
  for (size_t i = 0; i < c.size(); ++i)
    if (c[i]) s += c[i] * ph[i].grad(p, h);
  return s;
}

Margins coherence_margins(const HarmonicLattice& lat, const std::vector<Phase>& ph, const TensorFn& g,
                          const std::vector<Point>& pts) {
  Margins m{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  auto I = lat.I();
  for (const auto& p : pts) {
    Mat4 gi = inverse_checked<4>(g(p));
    for (const auto& w : I) {
      Vec4 dv = word_grad(w.c, ph, p);
      m.c_coherence = std::min(m.c_coherence, std::abs(dv.dot(gi * dv)));
    }
    for (const auto& w : lat.Z()) {
      Vec4 dz = word_grad(w.c, ph, p);
      m.c_spatial = std::min(m.c_spatial, dz.tail<3>().norm());
    }
  }
  return m;
}

Vec4 geodesic_residual(const Phase& u, const TensorFn& g, const Point& p, double h) {
  auto Lf = [&](const Point& q) -> Vec4 { return -inverse_checked<4>(g(q)) * u.grad(q, h); };
  Vec4 L = Lf(p);
  auto dL = fd_gradient<4>(Lf, p, h);
  auto gam = christoffels_fd(g, p, h);
  Vec4 r = Vec4::Zero();
  for (int a = 0; a < 4; ++a) r += L(a) * dL[a];
  for (int q = 0; q < 4; ++q) r(q) += L.dot(gam[q] * L);
  return r;
}

}  // namespace mpgo
