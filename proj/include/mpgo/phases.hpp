#pragma once

#include <string>
#include <vector>

#include "mpgo/geometry.hpp"

namespace mpgo {

struct Phase {
  std::string label;
  Vec3 direction = Vec3::Zero();  // reference direction
  ScalarFn u;
  CovecFn du;     // exact gradient when available
  TensorFn hess;  // exact Hessian when available

  double value(const Point& p) const { return u(p); }
  Vec4 grad(const Point& p, double h = 1e-3) const;
  Mat4 hessian(const Point& p, double h = 1e-3) const;
};

// u = t - dir . x, dir normalized internally; zero direction -> InvalidDirection
Phase plane_phase(const Vec3& direction, const std::string& label = "A");
Phase general_phase(const std::string& label, ScalarFn u, const Vec3& direction = Vec3::Zero());

struct NullFrame {
  Vec4 L, Lbar, e1, e2;
  Vec4 T;        // future unit normal of the t-slice
  Vec4 N;        // unit spatial direction, L = a (T - N)
  double a = 0;  // |grad u| on the slice
};

// frame from a covector and the metric at one point
NullFrame null_frame_at(const Vec4& du, const Mat4& g, double eikonal_tol = 1e-10);
NullFrame build_null_frame(const Phase& u, const TensorFn& g, const Point& p, double h = 1e-3);

// largest violation of the null-frame pairings
double frame_defect(const NullFrame& f, const Mat4& g);
// -1/2 (L Lbar + Lbar L) + e1 e1 + e2 e2, all lowered with g
Mat4 frame_metric(const NullFrame& f, const Mat4& g);
// lowered frame one-forms
Vec4 flat(const Vec4& v, const Mat4& g);

enum class WordClass { N1, N2, N3, I2, I3, I4, I5 };
std::string class_name(WordClass c);

struct HarmonicWord {
  std::vector<int> c;  // coefficient per phase index
  WordClass cls = WordClass::N1;

  bool operator==(const HarmonicWord& o) const { return c == o.c; }
  bool operator<(const HarmonicWord& o) const { return c < o.c; }
  std::string name(const std::vector<std::string>& labels) const;
  int phase_count() const;
};

// overall sign fixed so the first nonzero coefficient is positive; returns the sign applied
int canonicalize(std::vector<int>& c);

struct HarmonicLattice {
  std::vector<std::string> labels;
  std::vector<HarmonicWord> words;  // all of Z, each once

  std::vector<HarmonicWord> select(std::initializer_list<WordClass> cls) const;
  std::vector<HarmonicWord> N() const { return select({WordClass::N1, WordClass::N2, WordClass::N3}); }
  std::vector<HarmonicWord> I() const { return select({WordClass::I2, WordClass::I3}); }
  std::vector<HarmonicWord> W() const {
    return select({WordClass::N1, WordClass::N2, WordClass::N3, WordClass::I2, WordClass::I3});
  }
  const std::vector<HarmonicWord>& Z() const { return words; }
  // membership up to overall sign; -1 when absent
  int find(std::vector<int> c) const;
  bool in_W(std::vector<int> c) const;
};

HarmonicLattice harmonic_lattice(const std::vector<std::string>& labels);

// parse "A-B", "2A+B", "uA-2uB" against the labels
std::vector<int> parse_word(const std::string& s, const std::vector<std::string>& labels);

double word_value(const std::vector<int>& c, const std::vector<Phase>& ph, const Point& p);
Vec4 word_grad(const std::vector<int>& c, const std::vector<Phase>& ph, const Point& p, double h = 1e-3);

struct Margins {
  double c_coherence;
  double c_spatial;
};
Margins coherence_margins(const HarmonicLattice& lat, const std::vector<Phase>& ph, const TensorFn& g,
                          const std::vector<Point>& pts);

// D_L L with L = -g^{-1} du
Vec4 geodesic_residual(const Phase& u, const TensorFn& g, const Point& p, double h);

}  // namespace mpgo
