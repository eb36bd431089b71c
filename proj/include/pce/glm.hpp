#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace pce::glm {

// Regression design with named columns. Column 0 is always the intercept.
class DesignMatrix {
 public:
  static constexpr const char* kIntercept = "(Intercept)";

  explicit DesignMatrix(std::size_t n_rows);

  // Throws pce::Error on length mismatch, duplicate name, or non-finite values.
  DesignMatrix& add_column(const std::string& name, std::span<const double> values);

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
  const std::vector<std::string>& names() const { return names_; }
  const Eigen::MatrixXd& values() const { return values_; }
  std::size_t index_of(const std::string& name) const;

 private:
  std::vector<std::string> names_;
  Eigen::MatrixXd values_;
};

struct OlsFit {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  Eigen::VectorXd t_stats;
  Eigen::VectorXd p_values;
  Eigen::MatrixXd covariance;  // sigma2 * (X'X)^-1
  Eigen::VectorXd residuals;
  double sigma2 = 0.0;
  int dof = 0;

  std::size_t index_of(const std::string& name) const;
};

// Least squares with classical t inference (dof = n - q).
// Throws InsufficientDataError when n <= q and SingularDesignError (naming the
// first column that is a linear combination of earlier ones) on rank deficiency.
OlsFit fit_ols(const DesignMatrix& design, std::span<const double> y);

enum class Divergence {
  None,
  CoefficientNorm,  // ||beta|| exceeded the divergence bound
  Separation,       // fitted probabilities pinned at 0/1 while still moving
};

struct LogisticOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 100;
  double divergence_norm = 1e6;
};

struct LogisticFit {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;  // max |score component| at the returned coefficients
  double deviance = 0.0;
  Divergence divergence = Divergence::None;
  std::vector<double> deviance_trace;  // deviance at the start and after every IRLS step
};

// Bernoulli maximum likelihood by IRLS (Newton) with step halving.
// Degenerate (constant) responses throw DegenerateResponseError. Separation is
// reported through converged = false and `divergence`, never penalised away.
LogisticFit fit_logistic(const DesignMatrix& design, std::span<const int> a, const LogisticOptions& options = {});

// expit(coefficients . x_row); x_row includes the leading 1 for the intercept.
double predict_prob(const LogisticFit& fit, std::span<const double> x_row);
double predict_prob(const Eigen::VectorXd& coefficients, std::span<const double> x_row);

}  // namespace pce::glm
