#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pce/core.hpp"
#include "pce/estimators.hpp"

namespace pce::diag {

enum class MonotonicityDirection { IncreasingA1geA0, DecreasingA1leA0, Equality };
std::string to_string(MonotonicityDirection d);

struct MonotonicityReport {
  StratumTable table;
  MonotonicityDirection direction = MonotonicityDirection::IncreasingA1geA0;
  double violating_cell_proportion = 0.0;  // cells the direction forces to zero
  double conforming_proportion = 0.0;
  std::string verdict_note;
};

// Records must have a in both periods (see completer_filter).
MonotonicityReport monotonicity_report(const std::vector<SubjectRecord>& records, MonotonicityDirection direction);

// One regression of Y(outcome_arm) on A(stratum_arm) + X + period-2 indicator.
struct IgnorabilityRegression {
  int outcome_arm = 0;
  int stratum_arm = 0;
  double coefficient = 0.0;  // on A
  double se = 0.0;
  double p_value = 1.0;
  // E{Y | X = mean X, A = a}, period indicator held at 0.5.
  std::array<double, 2> adjusted_mean{};
  std::array<double, 2> adjusted_mean_se{};
  double period_coefficient = 0.0;
  double period_p_value = 1.0;
  std::size_t n = 0;

  bool own_arm() const { return outcome_arm == stratum_arm; }
};

struct IgnorabilityReport {
  // Order: Y(0)~A(0), Y(1)~A(1), Y(0)~A(1), Y(1)~A(0).
  std::array<IgnorabilityRegression, 4> regressions;
};

// Uses subjects with a and y in both periods.
IgnorabilityReport ignorability_regressions(const std::vector<SubjectRecord>& records,
                                            const std::optional<std::vector<std::string>>& covariates,
                                            const std::vector<std::string>& covariate_names);

struct IndependenceOptions {
  ProbMethod method = ProbMethod::CondIndep_A4p;
  std::optional<std::vector<std::string>> covariates;
  std::size_t n_bootstrap = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct IndependenceReport {
  StratumProbEstimate observed;
  StratumProbEstimate estimated;
  double discrepancy = 0.0;      // max_kl |observed - estimated|
  double discrepancy_ssq = 0.0;  // sum_kl (observed - estimated)^2
  double p_value = 1.0;
  double p_value_ssq = 1.0;
  std::size_t n_bootstrap = 0;
  std::size_t n_subjects = 0;
  std::size_t rejected_resamples = 0;  // redrawn because a principal-score fit failed
};

// Bootstrap test of observed stratum proportions against the A4'/A4'' model
// estimate. Each resample redraws subjects, recomputes both tables and the
// discrepancy of the difference vector centred at the original difference.
// Resamples whose fits fail are redrawn; more than 10% failures throw.
IndependenceReport independence_test(const std::vector<SubjectRecord>& records,
                                     const std::vector<std::string>& covariate_names,
                                     const IndependenceOptions& options);

struct EffectTest {
  double estimate = 0.0;
  double se = 0.0;
  double p_value = 1.0;
};

struct CrossoverEffectsReport {
  EffectTest treatment;  // Y(1) - Y(0)
  EffectTest period;     // period 2 - period 1
  EffectTest sequence;   // subject totals, EF - CF (carry-over proxy)
  double period_p = 1.0;
  double sequence_p = 1.0;
  double treatment_p = 1.0;
  std::array<std::size_t, 2> group_sizes{};  // CF, EF
};

// Two-stage 2x2 crossover analysis on subjects with y in both periods.
CrossoverEffectsReport crossover_effects_test(const std::vector<SubjectRecord>& records);

}  // namespace pce::diag
