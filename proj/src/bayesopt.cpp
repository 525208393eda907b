#include "potlab/bayesopt/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace potlab::bo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(int index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * (index % base);
    index /= base;
    f /= base;
  }
  return result;
}

struct UnitBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd span;

  Eigen::VectorXd to_raw(const Eigen::VectorXd& u) const {
    return lower + u.cwiseProduct(span);
  }
  Eigen::VectorXd to_unit(const Eigen::VectorXd& raw) const {
    return (raw - lower).cwiseQuotient(span);
  }
};

// Coordinate pattern search with halving steps; bounded probe count keeps the
// acquisition phase cheap and deterministic.
Eigen::VectorXd pattern_search(const GpModel& model, double beta, Eigen::VectorXd x,
                               double* best_val) {
  double fx = ucb(model, x, beta);
  double step = 0.25;
  int probes = 0;
  const int max_probes = 64 * static_cast<int>(x.size());
  while (step >= 1e-3 && probes < max_probes) {
    bool improved = false;
    for (Eigen::Index d = 0; d < x.size() && probes < max_probes; ++d) {
      for (double sign : {1.0, -1.0}) {
        double v = x(d) + sign * step;
        if (v < 0.0 || v > 1.0) continue;
        Eigen::VectorXd y = x;
        y(d) = v;
        ++probes;
        double fy = ucb(model, y, beta);
        if (fy > fx) {
          x = std::move(y);
          fx = fy;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  *best_val = fx;
  return x;
}

}  // namespace

Eigen::VectorXd halton_point(int index, int dim) {
  if (dim > static_cast<int>(sizeof(kPrimes) / sizeof(kPrimes[0])))
    throw ConfigError("halton: dimension too large");
  Eigen::VectorXd u(dim);
  for (int d = 0; d < dim; ++d) u(d) = radical_inverse(index, kPrimes[d]);
  return u;
}

BoResult optimize(const std::function<double(const Eigen::VectorXd&)>& objective,
                  const Eigen::VectorXd& warm_start, const BoConfig& config) {
  const Eigen::Index d = config.lower.size();
  if (d == 0) throw ConfigError("bo: empty bounds");
  if (config.upper.size() != d) throw ConfigError("bo: bound size mismatch");
  for (Eigen::Index i = 0; i < d; ++i)
    if (!(config.lower(i) < config.upper(i))) throw ConfigError("bo: need lower < upper");
  if (config.budget < 1) throw ConfigError("bo: budget must be >= 1");
  if (config.init_design < 1) throw ConfigError("bo: init_design must be >= 1");
  if (config.restarts < 1) throw ConfigError("bo: restarts must be >= 1");
  if (!(config.ucb_beta >= 0.0)) throw ConfigError("bo: ucb_beta must be >= 0");
  if (warm_start.size() != d) throw ConfigError("bo: warm start size mismatch");
  for (Eigen::Index i = 0; i < d; ++i)
    if (warm_start(i) < config.lower(i) || warm_start(i) > config.upper(i))
      throw ConfigError("bo: warm start outside bounds");

  UnitBox box{config.lower, config.upper - config.lower};
  RngStream rng(config.seed);
  const int init = std::min(config.init_design, config.budget);

  BoResult result;
  result.best_value = kNegInf;
  std::vector<Eigen::VectorXd> unit_points;
  std::vector<double> values;

  auto record = [&](const Eigen::VectorXd& u, const std::string& kind) {
    Eigen::VectorXd raw = box.to_raw(u);
    double v = objective(raw);
    if (std::isnan(v)) v = kNegInf;
    unit_points.push_back(u);
    values.push_back(v);
    if (v > result.best_value) {
      result.best_value = v;
      result.best_theta = raw;
    }
    BoObservation obs;
    obs.theta = raw;
    obs.value = v;
    obs.best_so_far = result.best_value;
    obs.kind = kind;
    result.history.push_back(std::move(obs));
  };

  record(box.to_unit(warm_start).cwiseMax(0.0).cwiseMin(1.0), "warm");
  for (int i = 1; i < init; ++i) record(halton_point(i, static_cast<int>(d)), "halton");

  while (static_cast<int>(result.history.size()) < config.budget) {
    std::vector<Eigen::Index> finite;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (std::isfinite(values[i])) finite.push_back(static_cast<Eigen::Index>(i));

    if (finite.empty()) {
      Eigen::VectorXd u(d);
      for (Eigen::Index i = 0; i < d; ++i) u(i) = rng.uniform01();
      record(u, "random");
      continue;
    }

    Eigen::MatrixXd X(finite.size(), d);
    Eigen::VectorXd y(finite.size());
    for (std::size_t i = 0; i < finite.size(); ++i) {
      X.row(static_cast<Eigen::Index>(i)) = unit_points[static_cast<std::size_t>(finite[i])];
      y(static_cast<Eigen::Index>(i)) = values[static_cast<std::size_t>(finite[i])];
    }
    // Standardize observations before fitting.
    double mean = y.mean();
    double sd = std::sqrt((y.array() - mean).square().sum() / static_cast<double>(y.size()));
    if (sd == 0.0) sd = 1.0;
    Eigen::VectorXd ys = (y.array() - mean) / sd;

    GpModel model = GpModel::fit(X, ys, config.gp);

    Eigen::VectorXd best_u;
    double best_acq = kNegInf;
    for (int r = 0; r < config.restarts; ++r) {
      Eigen::VectorXd u0(d);
      for (Eigen::Index i = 0; i < d; ++i) u0(i) = rng.uniform01();
      double val = 0.0;
      Eigen::VectorXd u = pattern_search(model, config.ucb_beta, std::move(u0), &val);
      if (val > best_acq) {
        best_acq = val;
        best_u = std::move(u);
      }
    }
    record(best_u, "ucb");
  }

  if (!std::isfinite(result.best_value)) result.best_theta = warm_start;
  return result;
}

std::string history_csv(const BoResult& result) {
  std::ostringstream os;
  Eigen::Index d = result.history.empty() ? 0 : result.history.front().theta.size();
  os << "iteration";
  for (Eigen::Index i = 0; i < d; ++i) os << ",theta_" << i;
  os << ",value,best_so_far,kind\n";
  for (std::size_t t = 0; t < result.history.size(); ++t) {
    const auto& obs = result.history[t];
    os << t;
    for (Eigen::Index i = 0; i < d; ++i) os << ',' << format_double(obs.theta(i));
    os << ',' << format_double(obs.value) << ',' << format_double(obs.best_so_far) << ','
       << obs.kind << '\n';
  }
  return os.str();
}

}  // namespace potlab::bo
