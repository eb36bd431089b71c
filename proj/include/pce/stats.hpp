#pragma once

#include <cstddef>
#include <span>

namespace pce::stats {

double mean(std::span<const double> v);
// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> v);

// Two-sided p-value of a t statistic with dof degrees of freedom.
double t_two_sided_p(double t, double dof);
double normal_cdf(double z);
double normal_quantile(double p);
// Logistic function, evaluated without overflow.
double expit(double eta);

struct TTestResult {
  double difference = 0.0;  // mean(a) - mean(b)
  double se = 0.0;
  double t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

// Pooled-variance two-sample t test. Requires at least two values per group.
TTestResult two_sample_t(std::span<const double> a, std::span<const double> b);

}  // namespace pce::stats
