#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pce/diagnostics.hpp"
#include "pce/estimators.hpp"
#include "pce/simulator.hpp"

namespace pce::report {

enum class Format { Csv, Json, Md };
// Throws ConfigError for anything but csv/json/md.
Format parse_format(const std::string& name);

// Markdown table with padded, aligned columns.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> headers) : headers_(std::move(headers)) {}
  void add_row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }
  std::string markdown() const;

 private:
  std::vector<std::string> headers_;
  std::vector<std::vector<std::string>> rows_;
};

std::string fixed(double v, int decimals);

std::string render_pce_table(const PceTable& table, Format format);

struct DiagnosticsDocument {
  std::optional<diag::MonotonicityReport> monotonicity;
  std::optional<diag::IgnorabilityReport> ignorability;
  std::optional<diag::IndependenceReport> independence;
  std::optional<diag::CrossoverEffectsReport> crossover_effects;
  std::map<std::string, std::string> errors;  // check name -> message
};

std::string render_diagnostics(const DiagnosticsDocument& doc, Format format);

// Aggregated bias / coverage over simulate -> estimate replicates.
struct ReplicateCell {
  std::string method;
  std::string stratum;
  double truth = 0.0;
  double mean_estimate = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;  // fraction of CIs containing truth
  std::size_t n_estimated = 0;
  std::size_t n_with_ci = 0;
};

struct ReplicateSummary {
  std::string scenario;
  std::size_t n_subjects = 0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::vector<ReplicateCell> cells;
  double monotonicity_violation_mean = 0.0;
  double independence_rejection_rate = 0.0;  // NaN when not run
  double period_rejection_rate = 0.0;
  double sequence_rejection_rate = 0.0;
};

std::string render_replicate_summary(const ReplicateSummary& summary, Format format);

}  // namespace pce::report
