#include <limits>
#include "pce/glm.hpp"

#include <cmath>

#include "pce/errors.hpp"
#include "pce/stats.hpp"

namespace pce::glm {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic_deviance(const Eigen::VectorXd& eta, std::span<const int> a) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) dev += a[i] ? softplus(-eta(i)) : softplus(eta(i));
  return 2.0 * dev;
}

// Householder QR without pivoting; |R_jj| measures what column j adds to the
// span of the earlier columns.
void check_rank(const DesignMatrix& design, const Eigen::HouseholderQR<Eigen::MatrixXd>& qr) {
  const Eigen::MatrixXd& R = qr.matrixQR();
  for (std::size_t j = 0; j < design.cols(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double scale = design.values().col(jj).norm();
    if (std::fabs(R(jj, jj)) <= 1e-9 * scale || scale == 0.0) throw SingularDesignError(design.names()[j]);
  }
}

}  // namespace

DesignMatrix::DesignMatrix(std::size_t n_rows)
    : names_{kIntercept}, values_(Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n_rows), 1)) {}

DesignMatrix& DesignMatrix::add_column(const std::string& name, std::span<const double> values) {
  if (values.size() != rows())
    throw Error("design column '" + name + "' has " + std::to_string(values.size()) + " rows, expected " +
                std::to_string(rows()));
  for (const auto& n : names_)
    if (n == name) throw Error("duplicate design column '" + name + "'");
  for (double v : values)
    if (!std::isfinite(v)) throw Error("design column '" + name + "' contains a non-finite value");
  values_.conservativeResize(Eigen::NoChange, values_.cols() + 1);
  values_.col(values_.cols() - 1) = Eigen::Map<const Eigen::VectorXd>(values.data(), values_.rows());
  names_.push_back(name);
  return *this;
}

std::size_t DesignMatrix::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  throw Error("no design column named '" + name + "'");
}

std::size_t OlsFit::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw Error("no coefficient named '" + name + "'");
}

OlsFit fit_ols(const DesignMatrix& design, std::span<const double> y) {
  const auto n = static_cast<Eigen::Index>(design.rows());
  const auto q = static_cast<Eigen::Index>(design.cols());
  if (static_cast<std::size_t>(n) != y.size()) throw Error("response length does not match design rows");
  if (n <= q)
    throw InsufficientDataError("OLS needs more rows (" + std::to_string(n) + ") than columns (" +
                                std::to_string(q) + ")");
  for (double v : y)
    if (!std::isfinite(v)) throw Error("response contains a non-finite value");

  const Eigen::MatrixXd& X = design.values();
  const Eigen::Map<const Eigen::VectorXd> Y(y.data(), n);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  check_rank(design, qr);

  const Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
  const Eigen::VectorXd qty = (qr.householderQ().transpose() * Y).head(q);

  OlsFit fit;
  fit.names = design.names();
  fit.coefficients = R.triangularView<Eigen::Upper>().solve(qty);
  fit.residuals = Y - X * fit.coefficients;
  fit.dof = static_cast<int>(n - q);
  fit.sigma2 = fit.residuals.squaredNorm() / fit.dof;

  const Eigen::MatrixXd r_inv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(q, q));
  fit.covariance = fit.sigma2 * (r_inv * r_inv.transpose());
  fit.standard_errors = fit.covariance.diagonal().cwiseSqrt();
  fit.t_stats.resize(q);
  fit.p_values.resize(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const double b = fit.coefficients(j), se = fit.standard_errors(j);
    if (se > 0) {
      fit.t_stats(j) = b / se;
      fit.p_values(j) = stats::t_two_sided_p(fit.t_stats(j), fit.dof);
    } else {
      fit.t_stats(j) = b == 0 ? 0.0 : std::copysign(INFINITY, b);
      fit.p_values(j) = b == 0 ? 1.0 : 0.0;
    }
  }
  return fit;
}

LogisticFit fit_logistic(const DesignMatrix& design, std::span<const int> a, const LogisticOptions& options) {
  const auto n = static_cast<Eigen::Index>(design.rows());
  const auto q = static_cast<Eigen::Index>(design.cols());
  if (static_cast<std::size_t>(n) != a.size()) throw Error("response length does not match design rows");
  if (n < q)
    throw InsufficientDataError("logistic regression needs at least as many rows as columns");
  std::size_t ones = 0;
  for (int v : a) {
    if (v != 0 && v != 1) throw Error("logistic response must be 0/1");
    ones += static_cast<std::size_t>(v);
  }
  if (ones == 0 || ones == a.size())
    throw DegenerateResponseError("logistic response is constant (all " + std::string(ones ? "1" : "0") + ")");

  const Eigen::MatrixXd& X = design.values();
  check_rank(design, Eigen::HouseholderQR<Eigen::MatrixXd>(X));

  LogisticFit fit;
  fit.names = design.names();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd eta = X * beta;
  double dev = logistic_deviance(eta, a);
  fit.deviance_trace.push_back(dev);

  Eigen::VectorXd w(n), resid(n);
  bool last_step_small = false;
  bool stalled = false;
  for (;;) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = stats::expit(eta(i)), one_minus_p = stats::expit(-eta(i));
      w(i) = p * one_minus_p;
      resid(i) = a[i] ? one_minus_p : -p;
    }
    const Eigen::VectorXd grad = X.transpose() * resid;
    fit.final_gradient_norm = grad.cwiseAbs().maxCoeff();
    if (fit.final_gradient_norm <= options.gradient_tolerance && last_step_small) {
      fit.converged = true;
      break;
    }
    if (stalled || fit.iterations >= options.max_iterations) break;

    const Eigen::MatrixXd info = X.transpose() * w.asDiagonal() * X;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    const Eigen::VectorXd step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      fit.divergence = Divergence::Separation;
      break;
    }

    // Halve until the deviance does not increase. Differences at the level of
    // summation round-off are not increases; without this slack the iteration
    // stalls one Newton step short of the gradient tolerance.
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + dev);
    double t = 1.0;
    Eigen::VectorXd trial_beta, trial_eta;
    double trial_dev = dev;
    bool accepted = false;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      trial_beta = beta + t * step;
      trial_eta = X * trial_beta;
      trial_dev = logistic_deviance(trial_eta, a);
      if (trial_dev <= dev + slack) {
        accepted = true;
        break;
      }
    }
    ++fit.iterations;
    if (!accepted) {
      stalled = true;
      last_step_small = true;
      fit.deviance_trace.push_back(dev);
      continue;
    }
    last_step_small = (t * step).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + trial_beta.cwiseAbs().maxCoeff());
    beta = std::move(trial_beta);
    eta = std::move(trial_eta);
    dev = trial_dev;
    fit.deviance_trace.push_back(dev);
    if (beta.norm() > options.divergence_norm) {
      fit.divergence = Divergence::CoefficientNorm;
      break;
    }
  }
  if (!fit.converged && fit.divergence == Divergence::None && eta.cwiseAbs().maxCoeff() > 30.0)
    fit.divergence = Divergence::Separation;

  fit.coefficients = beta;
  fit.deviance = dev;
  return fit;
}

double predict_prob(const Eigen::VectorXd& coefficients, std::span<const double> x_row) {
  if (x_row.size() != static_cast<std::size_t>(coefficients.size()))
    throw Error("predict_prob: row has " + std::to_string(x_row.size()) + " entries, model has " +
                std::to_string(coefficients.size()) + " coefficients");
  double eta = 0.0;
  for (std::size_t j = 0; j < x_row.size(); ++j) eta += coefficients(static_cast<Eigen::Index>(j)) * x_row[j];
  return stats::expit(eta);
}

double predict_prob(const LogisticFit& fit, std::span<const double> x_row) {
  return predict_prob(fit.coefficients, x_row);
}

}  // namespace pce::glm
