#pragma once

#include <Eigen/Dense>

#include "potlab/common.hpp"

namespace potlab::bo {

// Squared-exponential kernel hyperparameters; length_scale is isotropic and
// expressed in normalized (unit cube) coordinates.
struct GpParams {
  double length_scale = 0.2;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

// Zero-mean GP regression with a squared-exponential kernel. Exact inference
// via Cholesky; ill-conditioned kernels get escalating diagonal jitter, and
// fitting fails only if the matrix stays non-PD at the jitter ceiling.
class GpModel {
public:
  // X: one row per observation. y: observed values (callers standardize).
  static GpModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpParams& params);

  Posterior posterior(const Eigen::VectorXd& x) const;
  double mean(const Eigen::VectorXd& x) const;
  // Analytic gradient of the posterior mean.
  Eigen::VectorXd mean_gradient(const Eigen::VectorXd& x) const;

  Eigen::Index size() const { return X_.rows(); }
  Eigen::Index dim() const { return X_.cols(); }
  const GpParams& params() const { return params_; }

private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd alpha_;        // K^{-1} y
  Eigen::MatrixXd chol_lower_;   // L with L L^T = K + (noise + jitter) I
  GpParams params_;

  Eigen::VectorXd kernel_vector(const Eigen::VectorXd& x) const;
};

double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpParams& params);

// Upper confidence bound acquisition: mean + beta * std.
double ucb(const GpModel& model, const Eigen::VectorXd& x, double beta);

}  // namespace potlab::bo
