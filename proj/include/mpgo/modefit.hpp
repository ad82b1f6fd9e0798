#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mpgo {

// least-squares fit of each column of `values` to sum_w [a_w cos(z_w/lambda) + b_w sin(z_w/lambda)] + c
// phases[w][k] is the word value at sample k
struct ModeFitResult {
  Eigen::MatrixXd cos, sin;    // words x channels
  Eigen::VectorXd constant;    // per channel
  double residual_rms = 0;
  double condition = 0;        // of the column-normalized design matrix
  double amplitude(int w, int ch) const;  // sqrt(a^2 + b^2)
  double max_amplitude(int w) const;      // over channels
  double max_constant() const;
};

// AliasedWords when the condition number exceeds max_condition
ModeFitResult mode_fit(const std::vector<std::vector<double>>& phases, const Eigen::MatrixXd& values, double lambda,
                       double max_condition = 1e8);

struct OrderFit {
  double order = 0;
  double r2 = 0;
  double intercept = 0;  // log r at log lambda = 0
  bool clipped = false;  // some value was nonpositive and replaced by 1e-16
};
// slope of log r against log lambda; needs at least 3 points
OrderFit order_fit(const std::vector<double>& lambda, const std::vector<double>& r);

}  // namespace mpgo
