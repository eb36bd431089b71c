#include "pce/diagnostics.hpp"

#include <cmath>
#include <cstdio>

#include "pce/errors.hpp"
#include "pce/glm.hpp"
#include "pce/resampling.hpp"
#include "pce/rng.hpp"
#include "pce/stats.hpp"

namespace pce::diag {

std::string to_string(MonotonicityDirection d) {
  switch (d) {
    case MonotonicityDirection::IncreasingA1geA0: return "increasing";
    case MonotonicityDirection::DecreasingA1leA0: return "decreasing";
    case MonotonicityDirection::Equality: return "equality";
  }
  return "?";
}

MonotonicityReport monotonicity_report(const std::vector<SubjectRecord>& records, MonotonicityDirection direction) {
  MonotonicityReport rep;
  rep.table = classify_strata(records);
  rep.direction = direction;
  std::string cells;
  switch (direction) {
    case MonotonicityDirection::IncreasingA1geA0:
      rep.violating_cell_proportion = rep.table.proportion(1, 0);
      cells = "S10";
      break;
    case MonotonicityDirection::DecreasingA1leA0:
      rep.violating_cell_proportion = rep.table.proportion(0, 1);
      cells = "S01";
      break;
    case MonotonicityDirection::Equality:
      rep.violating_cell_proportion = rep.table.proportion(0, 1) + rep.table.proportion(1, 0);
      cells = "S01+S10";
      break;
  }
  rep.conforming_proportion = 1.0 - rep.violating_cell_proportion;
  char buf[160];
  std::snprintf(buf, sizeof buf, "observed Pr(%s) = %.3f (%zu of %zu subjects); monotonicity requires 0",
                cells.c_str(), rep.violating_cell_proportion,
                static_cast<std::size_t>(std::lround(rep.violating_cell_proportion * rep.table.n_total)),
                rep.table.n_total);
  rep.verdict_note = buf;
  return rep;
}

IgnorabilityReport ignorability_regressions(const std::vector<SubjectRecord>& records,
                                            const std::optional<std::vector<std::string>>& covariates,
                                            const std::vector<std::string>& covariate_names) {
  const auto completers = completer_filter(records, CompleterRequirement::Both);
  const auto cols = select_covariates(covariate_names, covariates);
  const std::size_t n = completers.size();
  const std::array<std::pair<int, int>, 4> specs{{{0, 0}, {1, 1}, {0, 1}, {1, 0}}};

  IgnorabilityReport rep;
  for (std::size_t r = 0; r < 4; ++r) {
    const auto [y_arm, a_arm] = specs[r];
    std::vector<double> y(n), a(n), period(n);
    std::vector<std::vector<double>> x(cols.size(), std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = completers[i];
      y[i] = *s.y_under(y_arm);
      a[i] = *s.a_under(a_arm);
      period[i] = static_cast<double>(s.period_of(y_arm));
      for (std::size_t c = 0; c < cols.size(); ++c) x[c][i] = s.covariates[cols[c]];
    }
    glm::DesignMatrix design(n);
    design.add_column("A", a);
    for (std::size_t c = 0; c < cols.size(); ++c) design.add_column("x_" + covariate_names[cols[c]], x[c]);
    design.add_column("period2", period);
    const auto fit = glm::fit_ols(design, y);

    IgnorabilityRegression& out = rep.regressions[r];
    out.outcome_arm = y_arm;
    out.stratum_arm = a_arm;
    out.n = n;
    const std::size_t ja = fit.index_of("A"), jp = fit.index_of("period2");
    out.coefficient = fit.coefficients(ja);
    out.se = fit.standard_errors(ja);
    out.p_value = fit.p_values(ja);
    out.period_coefficient = fit.coefficients(jp);
    out.period_p_value = fit.p_values(jp);

    // Contrast row: intercept, A, covariate means, period 0.5.
    Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(design.cols()));
    row(0) = 1.0;
    for (std::size_t c = 0; c < cols.size(); ++c)
      row(static_cast<Eigen::Index>(design.index_of("x_" + covariate_names[cols[c]]))) = stats::mean(x[c]);
    row(static_cast<Eigen::Index>(jp)) = 0.5;
    for (int level = 0; level < 2; ++level) {
      row(static_cast<Eigen::Index>(ja)) = level;
      out.adjusted_mean[level] = row.dot(fit.coefficients);
      out.adjusted_mean_se[level] = std::sqrt(row.dot(fit.covariance * row));
    }
  }
  return rep;
}

namespace {

struct Discrepancy {
  std::array<double, 4> diff{};
  std::array<double, 4> observed{};
  std::array<double, 4> estimated{};
};

Discrepancy compare(const std::vector<SubjectRecord>& sample, const std::vector<std::string>& names,
                    const IndependenceOptions& o, StratumProbEstimate* observed, StratumProbEstimate* estimated) {
  CrossoverData cd{names, sample};
  const auto data = AnalysisData::from_crossover(cd);
  auto obs = estimate_stratum_probs(data, ProbMethod::Observed);
  auto est = estimate_stratum_probs(data, o.method, o.covariates);
  Discrepancy d;
  d.observed = obs.probs;
  d.estimated = est.probs;
  for (std::size_t i = 0; i < 4; ++i) d.diff[i] = obs.probs[i] - est.probs[i];
  if (observed) *observed = obs;
  if (estimated) *estimated = est;
  return d;
}

double max_abs(const std::array<double, 4>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

double ssq(const std::array<double, 4>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

IndependenceReport independence_test(const std::vector<SubjectRecord>& records,
                                     const std::vector<std::string>& covariate_names,
                                     const IndependenceOptions& o) {
  if (o.n_bootstrap < 1) throw Error("independence test needs at least one bootstrap resample");
  if (o.method == ProbMethod::Observed) throw Error("independence test compares against a model-based method");
  const auto completers = completer_filter(records, CompleterRequirement::StratumVarBothArms);
  const std::size_t n = completers.size();
  if (n < 2) throw InsufficientDataError("independence test needs at least two subjects");

  IndependenceReport rep;
  rep.n_bootstrap = o.n_bootstrap;
  rep.n_subjects = n;
  const Discrepancy base = compare(completers, covariate_names, o, &rep.observed, &rep.estimated);
  rep.discrepancy = max_abs(base.diff);
  rep.discrepancy_ssq = ssq(base.diff);

  // Attempt r of replicate b draws from stream (b, r); a bounded number of
  // redraws keeps degenerate data from looping forever.
  const std::size_t max_attempts = 20;
  std::vector<double> d_max(o.n_bootstrap), d_ssq(o.n_bootstrap);
  std::vector<std::array<double, 4>> boot_obs(o.n_bootstrap), boot_est(o.n_bootstrap);
  std::vector<std::size_t> rejected(o.n_bootstrap, 0);
  std::vector<std::string> last_error(o.n_bootstrap);
  std::vector<char> ok(o.n_bootstrap, 0);
  parallel_for(o.n_bootstrap, o.threads, [&](std::size_t b) {
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
      const auto idx = resample_indices(n, stream_seed(o.seed, b), attempt);
      std::vector<SubjectRecord> sample;
      sample.reserve(n);
      for (std::size_t i : idx) sample.push_back(completers[i]);
      try {
        const Discrepancy d = compare(sample, covariate_names, o, nullptr, nullptr);
        std::array<double, 4> centred{};
        for (std::size_t i = 0; i < 4; ++i) centred[i] = d.diff[i] - base.diff[i];
        d_max[b] = max_abs(centred);
        d_ssq[b] = ssq(centred);
        boot_obs[b] = d.observed;
        boot_est[b] = d.estimated;
        ok[b] = 1;
        return;
      } catch (const Error& e) {
        ++rejected[b];
        last_error[b] = e.what();
      }
    }
  });
  for (std::size_t b = 0; b < o.n_bootstrap; ++b) {
    rep.rejected_resamples += rejected[b];
    if (!ok[b]) throw Error("independence bootstrap: replicate " + std::to_string(b) + " failed " +
                            std::to_string(max_attempts) + " redraws: " + last_error[b]);
  }
  if (rep.rejected_resamples * 10 > o.n_bootstrap)
    throw Error("independence bootstrap: " + std::to_string(rep.rejected_resamples) +
                " resamples rejected for failed principal-score fits (more than 10%)");

  rep.p_value = exceedance_p(d_max, rep.discrepancy);
  rep.p_value_ssq = exceedance_p(d_ssq, rep.discrepancy_ssq);

  std::array<double, 4> se_obs{}, se_est{};
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<double> vo(o.n_bootstrap), ve(o.n_bootstrap);
    for (std::size_t b = 0; b < o.n_bootstrap; ++b) {
      vo[b] = boot_obs[b][i];
      ve[b] = boot_est[b][i];
    }
    se_obs[i] = stats::sample_sd(vo);
    se_est[i] = stats::sample_sd(ve);
  }
  rep.observed.se = se_obs;
  rep.estimated.se = se_est;
  return rep;
}

CrossoverEffectsReport crossover_effects_test(const std::vector<SubjectRecord>& records) {
  const auto completers = completer_filter(records, CompleterRequirement::OutcomeBothArms);
  // Period difference d = Y_p2 - Y_p1 and total s = Y_p1 + Y_p2, split by sequence.
  std::vector<double> d_cf, d_ef, s_cf, s_ef;
  for (const auto& r : completers) {
    const double y1 = *r.periods[0].y, y2 = *r.periods[1].y;
    if (r.sequence == Sequence::ControlFirst) {
      d_cf.push_back(y2 - y1);
      s_cf.push_back(y1 + y2);
    } else {
      d_ef.push_back(y2 - y1);
      s_ef.push_back(y1 + y2);
    }
  }
  if (d_cf.size() < 2 || d_ef.size() < 2)
    throw InsufficientDataError("crossover effects test needs at least two complete subjects per sequence");

  CrossoverEffectsReport rep;
  rep.group_sizes = {d_cf.size(), d_ef.size()};

  // CF: d = tau + pi; EF: d = -tau + pi.
  const auto treat = stats::two_sample_t(d_cf, d_ef);
  rep.treatment = {treat.difference / 2.0, treat.se / 2.0, treat.p_value};

  std::vector<double> neg_d_ef(d_ef.size());
  for (std::size_t i = 0; i < d_ef.size(); ++i) neg_d_ef[i] = -d_ef[i];
  const auto period = stats::two_sample_t(d_cf, neg_d_ef);
  rep.period = {period.difference / 2.0, period.se / 2.0, period.p_value};

  const auto seq = stats::two_sample_t(s_ef, s_cf);
  rep.sequence = {seq.difference, seq.se, seq.p_value};

  rep.treatment_p = rep.treatment.p_value;
  rep.period_p = rep.period.p_value;
  rep.sequence_p = rep.sequence.p_value;
  return rep;
}

}  // namespace pce::diag
