#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pce {

// Which treatment a crossover subject received first.
enum class Sequence { ControlFirst, ExperimentalFirst };

struct Period {
  int treatment = 0;             // 0 = control, 1 = experimental
  std::optional<int> a;          // binary stratum variable
  std::optional<double> y;       // outcome
};

// One subject of a 2x2 crossover trial.
struct SubjectRecord {
  std::string subject_id;
  std::vector<double> covariates;
  Sequence sequence = Sequence::ControlFirst;
  std::array<Period, 2> periods;

  // Period (0-based) in which treatment t was given.
  std::size_t period_of(int t) const { return periods[0].treatment == t ? 0 : 1; }
  const Period& under(int t) const { return periods[period_of(t)]; }
  std::optional<int> a_under(int t) const { return under(t).a; }
  std::optional<double> y_under(int t) const { return under(t).y; }
};

// One (subject, arm) observation as a parallel trial would record it. No pairing.
struct ParallelObservation {
  std::string subject_id;
  std::vector<double> covariates;
  int treatment = 0;
  std::optional<int> a;
  std::optional<double> y;
  // Period the observation came from (0-based) when derived from crossover data.
  std::optional<int> period;

  int r() const { return y.has_value() ? 1 : 0; }
};

// Principal stratum label: joint S_kl, or marginal S_k* / S_*l.
struct StratumLabel {
  enum class Kind { Joint, MarginalControl, MarginalExperimental };
  Kind kind = Kind::Joint;
  int k = 0;  // A(0) index (unused for MarginalExperimental)
  int l = 0;  // A(1) index (unused for MarginalControl)

  static StratumLabel joint(int k, int l) { return {Kind::Joint, k, l}; }
  static StratumLabel marginal_control(int k) { return {Kind::MarginalControl, k, 0}; }
  static StratumLabel marginal_experimental(int l) { return {Kind::MarginalExperimental, 0, l}; }

  bool contains(int a0, int a1) const;
  // "S00", "S1*", "S*0", ...
  std::string name() const;

  friend bool operator==(const StratumLabel&, const StratumLabel&) = default;
  friend auto operator<=>(const StratumLabel&, const StratumLabel&) = default;
};

// The four joint strata in fixed order S00, S01, S10, S11.
const std::array<StratumLabel, 4>& joint_strata();
// Index 0..3 of a joint stratum within joint_strata().
std::size_t joint_index(int k, int l);

struct StratumTable {
  std::array<std::size_t, 4> counts{};   // indexed by joint_index(k, l)
  std::size_t n_total = 0;
  std::array<double, 4> proportions{};

  std::size_t count(int k, int l) const { return counts[joint_index(k, l)]; }
  double proportion(int k, int l) const { return proportions[joint_index(k, l)]; }
  // Proportion of a joint or marginal stratum.
  double proportion(const StratumLabel& s) const;
};

// A loaded dataset: crossover records when the file was in crossover form,
// plus its covariate names.
struct CrossoverData {
  std::vector<std::string> covariate_names;
  std::vector<SubjectRecord> records;
};

struct ParallelData {
  std::vector<std::string> covariate_names;
  std::vector<ParallelObservation> observations;
};

enum class CompleterRequirement { OutcomeBothArms, StratumVarBothArms, Both };

// Throws pce::Error if a record breaks the crossover invariants.
void validate_record(const SubjectRecord& r, std::size_t expected_covariates);

// Observations from the period where treatment == t, one per subject, in input order.
std::vector<ParallelObservation> as_parallel(const std::vector<SubjectRecord>& records, int t);

std::vector<SubjectRecord> completer_filter(const std::vector<SubjectRecord>& records,
                                            CompleterRequirement require);

// Joint stratum of each subject from (A(0), A(1)). Requires both a values.
StratumTable classify_strata(const std::vector<SubjectRecord>& records);

// a = 1 if y <op> threshold, applied to every period with a non-missing y.
enum class ThresholdOp { Greater, GreaterEqual, Less, LessEqual };
struct ThresholdRule {
  ThresholdOp op = ThresholdOp::Greater;
  double threshold = 0.0;
  bool apply(double y) const;
};
// Parses "y>0", "y >= -1.5", ... Throws ConfigError on anything else.
ThresholdRule parse_threshold_rule(const std::string& text);
std::vector<SubjectRecord> derive_stratum_variable(std::vector<SubjectRecord> records,
                                                   const ThresholdRule& rule);
std::vector<ParallelObservation> derive_stratum_variable(std::vector<ParallelObservation> obs,
                                                         const ThresholdRule& rule);

}  // namespace pce
