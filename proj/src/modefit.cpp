#include "mpgo/modefit.hpp"

#include <cmath>
#include <sstream>

#include "mpgo/errors.hpp"

namespace mpgo {

double ModeFitResult::amplitude(int w, int ch) const { return std::hypot(cos(w, ch), sin(w, ch)); }

double ModeFitResult::max_amplitude(int w) const {
  double m = 0;
  for (int c = 0; c < cos.cols(); ++c) m = std::max(m, amplitude(w, c));
  return m;
}

double ModeFitResult::max_constant() const { return constant.size() ? constant.cwiseAbs().maxCoeff() : 0.0; }

ModeFitResult mode_fit(const std::vector<std::vector<double>>& phases, const Eigen::MatrixXd& values, double lambda,
                       double max_condition) {
  if (!(lambda > 0)) throw InvalidScale("lambda must be positive");
  const int n = int(values.rows());
  const int W = int(phases.size());
  for (const auto& z : phases)
    if (int(z.size()) != n) throw ConfigError("word samples and values differ in length");
  const int m = 2 * W + 1;
  if (n < m) throw AliasedWords("fewer samples than unknowns");
  Eigen::MatrixXd D(n, m);
  for (int k = 0; k < n; ++k) {
    for (int w = 0; w < W; ++w) {
      D(k, 2 * w) = std::cos(phases[w][k] / lambda);
      D(k, 2 * w + 1) = std::sin(phases[w][k] / lambda);
    }
    D(k, m - 1) = 1.0;
  }
  Eigen::VectorXd scale = D.colwise().norm().transpose();
  for (int j = 0; j < m; ++j)
    if (scale(j) == 0) scale(j) = 1;  // a word constant at zero along the line
  Eigen::MatrixXd Dn = D * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Dn, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  ModeFitResult r;
  r.condition = s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : INFINITY;
  if (!(r.condition <= max_condition)) {
    std::ostringstream os;
    os << "mode dictionary is ill-conditioned along the sample line (condition " << r.condition << ")";
    throw AliasedWords(os.str());
  }
  Eigen::MatrixXd X = svd.solve(values);
  X = scale.cwiseInverse().asDiagonal() * X;
  r.cos.resize(W, values.cols());
  r.sin.resize(W, values.cols());
  for (int w = 0; w < W; ++w) {
    r.cos.row(w) = X.row(2 * w);
    r.sin.row(w) = X.row(2 * w + 1);
  }
  r.constant = X.row(m - 1).transpose();
  Eigen::MatrixXd res = D * X - values;
  r.residual_rms = std::sqrt(res.squaredNorm() / double(res.size()));
  return r;
}

OrderFit order_fit(const std::vector<double>& lambda, const std::vector<double>& r) {
  if (lambda.size() != r.size() || lambda.size() < 3) throw ConfigError("order fit needs at least 3 (lambda, r) pairs");
  OrderFit f;
  const size_t n = r.size();
  std::vector<double> x(n), y(n);
  for (size_t i = 0; i < n; ++i) {
    if (!(lambda[i] > 0)) throw InvalidScale("lambda must be positive");
    double v = r[i];
    if (!(v > 1e-16)) {
      v = 1e-16;
      f.clipped = true;
    }
    x[i] = std::log(lambda[i]);
    y[i] = std::log(v);
  }
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) mx += x[i] / n, my += y[i] / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw ConfigError("order fit needs distinct lambda values");
  f.order = sxy / sxx;
  f.intercept = my - f.order * mx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

}  // namespace mpgo
