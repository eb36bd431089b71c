#include "pce/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "pce/csv.hpp"
#include "pce/rng.hpp"
#include "pce/stats.hpp"

namespace pce {

std::vector<std::size_t> resample_indices(std::size_t n_units, std::uint64_t seed, std::uint64_t replicate) {
  Xoshiro256 rng(stream_seed(seed, replicate));
  std::vector<std::size_t> idx(n_units);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n_units));
  return idx;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t b = 0; b < count; ++b) body(b);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t b = w; b < count; b += threads) body(b);
    });
  for (auto& t : pool) t.join();
}

ReplicateMatrix run_replicates(std::size_t n_units, std::size_t n_outputs, const IndexStatistic& statistic,
                               const BootstrapSpec& spec) {
  if (spec.n_resamples < 1) throw Error("bootstrap needs at least one resample");
  if (!(spec.confidence > 0.0 && spec.confidence < 1.0)) throw Error("confidence must lie in (0, 1)");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ReplicateMatrix out;
  out.n_resamples = spec.n_resamples;
  out.values.assign(n_outputs, std::vector<double>(spec.n_resamples, nan));
  out.failure_reasons.assign(spec.n_resamples, {});
  parallel_for(spec.n_resamples, spec.threads, [&](std::size_t b) {
    const auto idx = resample_indices(n_units, spec.seed, b);
    try {
      const auto v = statistic(idx);
      if (v.size() != n_outputs) throw Error("statistic returned the wrong number of outputs");
      for (std::size_t c = 0; c < n_outputs; ++c) out.values[c][b] = v[c];
    } catch (const std::exception& e) {
      out.failure_reasons[b] = e.what();
      if (out.failure_reasons[b].empty()) out.failure_reasons[b] = "unknown failure";
    }
  });
  return out;
}

double nearest_rank(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw Error("nearest_rank of an empty sample");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(level * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

BootstrapResult summarize_replicates(double point, std::span<const double> replicate_values,
                                     std::span<const std::string> failure_reasons, const BootstrapSpec& spec) {
  BootstrapResult r;
  r.point = point;
  r.n_resamples = replicate_values.size();
  std::vector<double> ok;
  ok.reserve(replicate_values.size());
  for (std::size_t b = 0; b < replicate_values.size(); ++b) {
    if (std::isfinite(replicate_values[b])) {
      ok.push_back(replicate_values[b]);
    } else {
      const std::string reason =
          b < failure_reasons.size() && !failure_reasons[b].empty() ? failure_reasons[b] : "statistic inestimable";
      ++r.failures[reason];
    }
  }
  r.n_effective = ok.size();
  if (spec.keep_replicates) r.replicates.assign(replicate_values.begin(), replicate_values.end());

  const std::size_t failed = r.n_resamples - r.n_effective;
  if (failed * 10 > r.n_resamples) {
    auto dominant = std::max_element(r.failures.begin(), r.failures.end(),
                                     [](const auto& x, const auto& y) { return x.second < y.second; });
    throw InestimableError("statistic failed on " + std::to_string(failed) + " of " +
                           std::to_string(r.n_resamples) + " resamples; most common failure: " + dominant->first);
  }
  if (r.n_resamples < 20)
    r.warnings.push_back("fewer than 20 resamples: percentile interval is unreliable");

  r.se = stats::sample_sd(ok);
  std::sort(ok.begin(), ok.end());
  const double tail = (1.0 - spec.confidence) / 2.0;
  r.ci_lo = nearest_rank(ok, tail);
  r.ci_hi = nearest_rank(ok, 1.0 - tail);
  return r;
}

double exceedance_p(std::span<const double> replicate_values, double observed) {
  std::size_t hits = 0;
  for (double v : replicate_values)
    if (v >= observed) ++hits;
  return static_cast<double>(hits + 1) / static_cast<double>(replicate_values.size() + 1);
}

void write_replicates_csv(std::ostream& out, std::span<const double> replicate_values) {
  out << "replicate_index,value\n";
  for (std::size_t b = 0; b < replicate_values.size(); ++b)
    out << b << ',' << (std::isfinite(replicate_values[b]) ? format_real(replicate_values[b]) : "NA") << '\n';
}

}  // namespace pce
