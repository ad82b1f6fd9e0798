#pragma once

#include <vector>

#include "mpgo/phases.hpp"

namespace mpgo {

struct CharacteristicBundle {
  std::vector<Vec3> footpoints;
  double dt = 0;
  std::vector<double> times;                // shared time grid
  std::vector<std::vector<Point>> curves;   // curves[c][n] = (t_n, x(t_n))
  std::vector<std::vector<Mat4>> tensors;   // carried tensors, same layout, empty if none
  std::vector<bool> truncated;
};

struct Box3 {
  Vec3 lo = Vec3::Constant(-1e300), hi = Vec3::Constant(1e300);
  bool contains(const Vec3& x) const { return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all(); }
};

// dx/dt = L^i / L^0 with L = -g^{-1} du
CharacteristicBundle flow_characteristics(const Phase& u, const TensorFn& g0, const std::vector<Vec3>& footpoints,
                                          double dt, double t_end, const Box3& domain = {}, double h = 1e-3);

// integrates -2 D_L T + (box u) T = S along characteristics from T0 at t = 0
CharacteristicBundle solve_transport(const Phase& u, const TensorFn& g0, const TensorFn& S, const TensorFn& T0,
                                     const std::vector<Vec3>& footpoints, double dt, double t_end,
                                     const Box3& domain = {}, double h = 1e-3);

// scalar background transport 2 L F + (box u) F = 0 along the same flow
std::vector<std::vector<double>> transport_density(const CharacteristicBundle& b, const Phase& u,
                                                   const TensorFn& g0, const ScalarFn& F0, double h = 1e-3);

struct AuditRow {
  double t = 0;
  double pol = 0;     // max |Pol(F1, u)|
  double lLbar = 0;   // max |F1(L, Lbar)|
  double energy = 0;  // max ||F1|^2 - 8 F^2|
};
// dust: F along each curve, same layout as the bundle (empty means zero)
std::vector<AuditRow> propagation_audit(const CharacteristicBundle& b, const Phase& u, const TensorFn& g0,
                                        const std::vector<std::vector<double>>& dust, double h = 1e-3);

// d_t T on the slice solved from the transport equation at p
Mat4 dt_from_transport(const TensorFn& T0, const TensorFn& S0, const Phase& u, const TensorFn& g0, const Point& p,
                       double h = 1e-3);

// box_{g0} u
double box_phase(const Phase& u, const TensorFn& g0, const Point& p, double h = 1e-3);

}  // namespace mpgo
