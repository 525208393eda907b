#include "potlab/bayesopt/gp.hpp"

#include <cmath>

namespace potlab::bo {

double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpParams& params) {
  double sq = (a - b).squaredNorm();
  return params.signal_variance * std::exp(-sq / (2.0 * params.length_scale * params.length_scale));
}

GpModel GpModel::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpParams& params) {
  if (X.rows() != y.size()) throw Error(ErrorKind::internal, "gp fit: X rows != y size");
  if (X.rows() == 0) throw Error(ErrorKind::internal, "gp fit: no observations");
  if (!(params.length_scale > 0.0) || !(params.signal_variance > 0.0) ||
      params.noise_variance < 0.0)
    throw ConfigError("gp fit: bad kernel parameters");

  Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = params.signal_variance + params.noise_variance;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = kernel(X.row(i), X.row(j), params);
      K(i, j) = v;
      K(j, i) = v;
    }
  }

  GpModel model;
  model.X_ = X;
  model.params_ = params;
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::MatrixXd Kj = K;
    if (jitter > 0.0) Kj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) {
      model.chol_lower_ = llt.matrixL();
      model.alpha_ = llt.solve(y);
      return model;
    }
    jitter = jitter == 0.0 ? 1e-14 : jitter * 10.0;
  }
  throw Error(ErrorKind::internal, "gp fit: singular kernel matrix after jitter escalation");
}

Eigen::VectorXd GpModel::kernel_vector(const Eigen::VectorXd& x) const {
  Eigen::VectorXd k(X_.rows());
  for (Eigen::Index i = 0; i < X_.rows(); ++i) k(i) = kernel(X_.row(i), x, params_);
  return k;
}

Posterior GpModel::posterior(const Eigen::VectorXd& x) const {
  Eigen::VectorXd k = kernel_vector(x);
  Posterior p;
  p.mean = k.dot(alpha_);
  Eigen::VectorXd v = chol_lower_.triangularView<Eigen::Lower>().solve(k);
  double var = params_.signal_variance - v.squaredNorm();
  p.variance = var < 0.0 ? 0.0 : var;
  return p;
}

double GpModel::mean(const Eigen::VectorXd& x) const { return kernel_vector(x).dot(alpha_); }

Eigen::VectorXd GpModel::mean_gradient(const Eigen::VectorXd& x) const {
  double inv_l2 = 1.0 / (params_.length_scale * params_.length_scale);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
  for (Eigen::Index i = 0; i < X_.rows(); ++i) {
    double k = kernel(X_.row(i), x, params_);
    grad += alpha_(i) * k * inv_l2 * (X_.row(i).transpose() - x);
  }
  return grad;
}

double ucb(const GpModel& model, const Eigen::VectorXd& x, double beta) {
  Posterior p = model.posterior(x);
  return p.mean + beta * std::sqrt(p.variance);
}

}  // namespace potlab::bo
