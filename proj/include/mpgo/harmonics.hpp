#pragma once

#include <array>
#include <map>
#include <vector>

#include "mpgo/phases.hpp"

namespace mpgo {

inline void set_zero(double& x) { x = 0; }
template <class M> void set_zero(Eigen::MatrixBase<M>& x) { x.setZero(); }
inline double amp(double x) { return std::abs(x); }
template <class M> double amp(const Eigen::MatrixBase<M>& x) { return x.cwiseAbs().maxCoeff(); }

// coefficients of cos(w/lambda) and sin(w/lambda) per canonical word; the zero word holds the constant part
template <class T> struct HarmonicMap {
  std::map<std::vector<int>, std::array<T, 2>> m;

  static T zero() {
    T z;
    set_zero(z);
    return z;
  }

  // word in any sign; the sin coefficient flips with the canonical sign
  void add(std::vector<int> c, bool is_sin, const T& v) {
    int s = canonicalize(c);
    auto it = m.find(c);
    if (it == m.end()) it = m.emplace(c, std::array<T, 2>{zero(), zero()}).first;
    if (is_sin) it->second[1] += double(s) * v;
    else it->second[0] += v;
  }
  void add_constant(size_t n, const T& v) { add(std::vector<int>(n, 0), false, v); }

  T get(std::vector<int> c, bool is_sin) const {
    int s = canonicalize(c);
    auto it = m.find(c);
    if (it == m.end()) return zero();
    return is_sin ? T(double(s) * it->second[1]) : it->second[0];
  }
};

}  // namespace mpgo
