#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pce/errors.hpp"

namespace pce {

struct BootstrapSpec {
  std::size_t n_resamples = 1000;
  std::uint64_t seed = 0;
  double confidence = 0.95;
  bool keep_replicates = false;
  // Worker threads for replicates; 0 = hardware concurrency. Results do not depend on it.
  unsigned threads = 0;
};

struct BootstrapResult {
  double point = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t n_resamples = 0;
  std::size_t n_effective = 0;  // replicates where the statistic was estimable
  std::map<std::string, std::size_t> failures;
  std::vector<double> replicates;  // in replicate order, NaN where inestimable; only when kept
  std::vector<std::string> warnings;
};

// Indices of the units drawn (with replacement) for replicate b.
std::vector<std::size_t> resample_indices(std::size_t n_units, std::uint64_t seed, std::uint64_t replicate);

// Runs body(b) for b in [0, count) on `threads` workers. body must be reentrant.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

// Statistic over a resample given as unit indices. NaN components mark
// inestimable outputs; a throw marks the whole replicate as failed.
using IndexStatistic = std::function<std::vector<double>(std::span<const std::size_t>)>;

struct ReplicateMatrix {
  std::size_t n_resamples = 0;
  std::vector<std::vector<double>> values;    // [component][replicate]
  std::vector<std::string> failure_reasons;   // per replicate; empty when it succeeded
};

ReplicateMatrix run_replicates(std::size_t n_units, std::size_t n_outputs, const IndexStatistic& statistic,
                               const BootstrapSpec& spec);

// SE, percentile CI (nearest rank) and bookkeeping for one component.
// Throws InestimableError when more than 10% of replicates are inestimable.
BootstrapResult summarize_replicates(double point, std::span<const double> replicate_values,
                                     std::span<const std::string> failure_reasons, const BootstrapSpec& spec);

// Nearest-rank percentile of sorted values, level in (0, 1).
double nearest_rank(std::span<const double> sorted, double level);

// (#{v >= observed} + 1) / (B + 1).
double exceedance_p(std::span<const double> replicate_values, double observed);

// Audit dump: "replicate_index,value" with NA for inestimable replicates.
void write_replicates_csv(std::ostream& out, std::span<const double> replicate_values);

// Subject-level bootstrap of a scalar statistic over whole units (for
// crossover data a unit is a SubjectRecord, so both periods travel together).
template <class Unit>
BootstrapResult bootstrap(const std::vector<Unit>& units, const std::function<double(const std::vector<Unit>&)>& statistic,
                          const BootstrapSpec& spec) {
  double point = 0.0;
  try {
    point = statistic(units);
  } catch (const std::exception& e) {
    throw Error(std::string("statistic is undefined on the original data: ") + e.what());
  }
  const IndexStatistic by_index = [&](std::span<const std::size_t> idx) {
    std::vector<Unit> sample;
    sample.reserve(idx.size());
    for (std::size_t i : idx) sample.push_back(units[i]);
    return std::vector<double>{statistic(sample)};
  };
  const ReplicateMatrix reps = run_replicates(units.size(), 1, by_index, spec);
  return summarize_replicates(point, reps.values[0], reps.failure_reasons, spec);
}

}  // namespace pce
