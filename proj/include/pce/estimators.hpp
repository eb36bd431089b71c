#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pce/core.hpp"
#include "pce/glm.hpp"
#include "pce/resampling.hpp"

namespace pce {

// Observations of both arms plus, for crossover input, the subject records.
struct AnalysisData {
  std::vector<std::string> covariate_names;
  std::vector<ParallelObservation> observations;
  std::optional<std::vector<SubjectRecord>> crossover;

  static AnalysisData from_crossover(const CrossoverData& data);
  static AnalysisData from_parallel(const ParallelData& data);

  std::vector<ParallelObservation> arm(int t) const;
};

// Column indices of the selected covariates; all of them when selection is empty.
std::vector<std::size_t> select_covariates(const std::vector<std::string>& names,
                                           const std::optional<std::vector<std::string>>& selection);

// Scores are clipped to [kScoreClip, 1 - kScoreClip] before they are used as weights.
inline constexpr double kScoreClip = 1e-12;

// Logistic model for Pr(A(t) = 1 | X) fitted on arm-t data only.
class PrincipalScoreModel {
 public:
  // Throws NonConvergenceError unless fit.converged.
  PrincipalScoreModel(int arm, glm::LogisticFit fit, std::vector<std::string> covariate_names,
                      std::vector<std::size_t> covariate_columns);

  int arm() const { return arm_; }
  const glm::LogisticFit& fit() const { return fit_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

  // Clipped score for a subject's full covariate vector.
  double score(const std::vector<double>& covariates) const;
  double raw_score(const std::vector<double>& covariates) const;

 private:
  int arm_;
  glm::LogisticFit fit_;
  std::vector<std::string> covariate_names_;
  std::vector<std::size_t> covariate_columns_;
  std::vector<std::string> warnings_;
};

// obs must all come from arm t with non-missing a. Never looks at the other arm.
PrincipalScoreModel fit_principal_score(const std::vector<ParallelObservation>& obs,
                                        const std::vector<std::string>& covariate_names,
                                        const std::optional<std::vector<std::string>>& selection = std::nullopt);

// Bernoulli mass g^l (1 - g)^(1 - l) of the cross-world stratum index.
double hayden_weight(double g, int l);

// Weighted mean of Y over arm-t observations with A(t) equal to the stratum's
// own-arm index, each weighted by the other arm's principal-score mass of the
// stratum's cross-world index. obs must have a and y present.
double estimate_mu_hayden(const std::vector<ParallelObservation>& obs, const PrincipalScoreModel& other_arm_ps,
                          const StratumLabel& stratum);

// Mean of Y(t) over subjects whose observed (A(0), A(1)) puts them in the stratum.
double estimate_mu_direct(const std::vector<SubjectRecord>& records, const StratumLabel& stratum, int t);

enum class Contrast { Arm0, Arm1, Diff };
enum class Method { PS, DIRECT };

std::string to_string(Contrast c);
std::string to_string(Method m);

struct EstimateSummary {
  StratumLabel stratum;
  Contrast arm_or_contrast = Contrast::Arm0;
  Method method = Method::PS;
  std::optional<double> point;
  std::optional<double> se;
  std::optional<std::pair<double, double>> ci95;
  std::size_t n_effective = 0;  // bootstrap replicates that produced a value
  std::string note;             // reason when inestimable or when the interval is missing
};

struct PceConfig {
  bool ps = true;
  bool direct = false;
  std::optional<std::vector<std::string>> ps_covariates;
  std::optional<BootstrapSpec> bootstrap;
};

struct PceTable {
  std::vector<EstimateSummary> rows;     // per method: S00..S11, each Arm0, Arm1, Diff
  std::array<std::size_t, 4> direct_counts{};  // |S_kl| among crossover completers
  std::size_t n_completers = 0;
  std::vector<std::string> warnings;

  const EstimateSummary& find(Method m, const StratumLabel& s, Contrast c) const;
};

// Diff is always experimental minus control, Y(1) - Y(0).
// DIRECT requires crossover data. Inestimable cells are reported in-band.
PceTable estimate_pce_table(const AnalysisData& data, const PceConfig& config);

enum class ProbMethod { Observed, CondIndep_A4p, Indep_A4pp };
std::string to_string(ProbMethod m);

struct StratumProbEstimate {
  ProbMethod method = ProbMethod::Observed;
  std::array<double, 4> probs{};  // indexed by joint_index(k, l)
  std::optional<std::array<double, 4>> se;

  double prob(int k, int l) const { return probs[joint_index(k, l)]; }
};

// n^-1 sum_j Pr(A(0)=k | x_j) Pr(A(1)=l | x_j) over the given covariate rows.
std::array<double, 4> cond_indep_cell_probs(const PrincipalScoreModel& ps0, const PrincipalScoreModel& ps1,
                                           const std::vector<std::vector<double>>& covariates);

// Observed: stratum proportions among crossover subjects with both a values.
// CondIndep_A4p: n^-1 sum_j Pr(A(0)=k | X_j) Pr(A(1)=l | X_j) from arm-wise fits.
// Indep_A4pp: product of the two arms' marginal rates.
StratumProbEstimate estimate_stratum_probs(const AnalysisData& data, ProbMethod method,
                                           const std::optional<std::vector<std::string>>& ps_covariates = std::nullopt);

// Mean of a marginal stratum from its two joint cells, weighted by Pr(S_kl) / Pr(S_k*).
double combine_marginal(const std::map<StratumLabel, double>& mu_joint, const StratumProbEstimate& probs,
                        const StratumLabel& marginal);

}  // namespace pce
