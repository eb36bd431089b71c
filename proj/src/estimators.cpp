#include "pce/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pce/errors.hpp"

namespace pce {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Own-arm and cross-world stratum indices for arm t.
int own_index(const StratumLabel& s, int t) { return t == 0 ? s.k : s.l; }
int cross_index(const StratumLabel& s, int t) { return t == 0 ? s.l : s.k; }

void require_joint(const StratumLabel& s) {
  if (s.kind != StratumLabel::Kind::Joint) throw Error("expected a joint stratum, got " + s.name());
}

// Estimates for one method, flattened as [stratum * 3 + contrast], NaN where inestimable.
struct PointSet {
  std::array<double, 12> values;
  std::array<std::string, 12> reasons;
  PointSet() { values.fill(kNaN); }

  void set(std::size_t stratum, double arm0, double arm1) {
    values[stratum * 3 + 0] = arm0;
    values[stratum * 3 + 1] = arm1;
    values[stratum * 3 + 2] = arm1 - arm0;
  }
  std::vector<double> vec() const { return {values.begin(), values.end()}; }
};

std::vector<ParallelObservation> complete_obs(const std::vector<ParallelObservation>& obs) {
  std::vector<ParallelObservation> out;
  for (const auto& o : obs)
    if (o.a && o.y) out.push_back(o);
  return out;
}

std::vector<ParallelObservation> with_a(const std::vector<ParallelObservation>& obs) {
  std::vector<ParallelObservation> out;
  for (const auto& o : obs)
    if (o.a) out.push_back(o);
  return out;
}

PointSet ps_points(const AnalysisData& data, const PceConfig& config, std::vector<std::string>* warnings) {
  const auto arm0 = data.arm(0), arm1 = data.arm(1);
  const auto ps0 = fit_principal_score(with_a(arm0), data.covariate_names, config.ps_covariates);
  const auto ps1 = fit_principal_score(with_a(arm1), data.covariate_names, config.ps_covariates);
  if (warnings) {
    for (const auto& w : ps0.warnings()) warnings->push_back(w);
    for (const auto& w : ps1.warnings()) warnings->push_back(w);
  }
  const auto obs0 = complete_obs(arm0), obs1 = complete_obs(arm1);
  PointSet out;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& s = joint_strata()[i];
    try {
      out.set(i, estimate_mu_hayden(obs0, ps1, s), estimate_mu_hayden(obs1, ps0, s));
    } catch (const InestimableError& e) {
      for (std::size_t c = 0; c < 3; ++c) out.reasons[i * 3 + c] = e.what();
    }
  }
  return out;
}

PointSet direct_points(const std::vector<SubjectRecord>& completers) {
  PointSet out;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& s = joint_strata()[i];
    try {
      out.set(i, estimate_mu_direct(completers, s, 0), estimate_mu_direct(completers, s, 1));
    } catch (const InestimableError& e) {
      for (std::size_t c = 0; c < 3; ++c) out.reasons[i * 3 + c] = e.what();
    }
  }
  return out;
}

AnalysisData resample(const AnalysisData& data, std::span<const std::size_t> idx) {
  AnalysisData out;
  out.covariate_names = data.covariate_names;
  if (data.crossover) {
    std::vector<SubjectRecord> records;
    records.reserve(idx.size());
    for (std::size_t i : idx) records.push_back((*data.crossover)[i]);
    out.observations = as_parallel(records, 0);
    auto arm1 = as_parallel(records, 1);
    out.observations.insert(out.observations.end(), arm1.begin(), arm1.end());
    out.crossover = std::move(records);
  } else {
    out.observations.reserve(idx.size());
    for (std::size_t i : idx) out.observations.push_back(data.observations[i]);
  }
  return out;
}

std::size_t n_units(const AnalysisData& data) {
  return data.crossover ? data.crossover->size() : data.observations.size();
}

void append_rows(PceTable& table, Method method, const PointSet& points, const ReplicateMatrix* reps,
                 const BootstrapSpec* spec) {
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t j = i * 3 + c;
      EstimateSummary row;
      row.stratum = joint_strata()[i];
      row.arm_or_contrast = static_cast<Contrast>(c);
      row.method = method;
      if (!std::isfinite(points.values[j])) {
        row.note = points.reasons[j].empty() ? "inestimable" : points.reasons[j];
        table.rows.push_back(std::move(row));
        continue;
      }
      row.point = points.values[j];
      if (reps) {
        try {
          const auto r = summarize_replicates(points.values[j], reps->values[j], reps->failure_reasons, *spec);
          row.se = r.se;
          row.ci95 = std::make_pair(r.ci_lo, r.ci_hi);
          row.n_effective = r.n_effective;
        } catch (const Error& e) {
          row.note = e.what();
        }
      }
      table.rows.push_back(std::move(row));
    }
  }
}

}  // namespace

AnalysisData AnalysisData::from_crossover(const CrossoverData& data) {
  AnalysisData out;
  out.covariate_names = data.covariate_names;
  out.observations = as_parallel(data.records, 0);
  auto arm1 = as_parallel(data.records, 1);
  out.observations.insert(out.observations.end(), arm1.begin(), arm1.end());
  out.crossover = data.records;
  return out;
}

AnalysisData AnalysisData::from_parallel(const ParallelData& data) {
  return {data.covariate_names, data.observations, std::nullopt};
}

std::vector<ParallelObservation> AnalysisData::arm(int t) const {
  std::vector<ParallelObservation> out;
  for (const auto& o : observations)
    if (o.treatment == t) out.push_back(o);
  return out;
}

std::vector<std::size_t> select_covariates(const std::vector<std::string>& names,
                                           const std::optional<std::vector<std::string>>& selection) {
  std::vector<std::size_t> cols;
  if (!selection) {
    for (std::size_t i = 0; i < names.size(); ++i) cols.push_back(i);
    return cols;
  }
  for (const auto& want : *selection) {
    std::size_t i = 0;
    while (i < names.size() && names[i] != want) ++i;
    if (i == names.size()) throw Error("unknown covariate '" + want + "'");
    cols.push_back(i);
  }
  return cols;
}

PrincipalScoreModel::PrincipalScoreModel(int arm, glm::LogisticFit fit, std::vector<std::string> covariate_names,
                                         std::vector<std::size_t> covariate_columns)
    : arm_(arm),
      fit_(std::move(fit)),
      covariate_names_(std::move(covariate_names)),
      covariate_columns_(std::move(covariate_columns)) {
  if (!fit_.converged) {
    std::string why = fit_.divergence == glm::Divergence::CoefficientNorm ? "coefficient norm diverged"
                      : fit_.divergence == glm::Divergence::Separation    ? "data are (quasi-)separated"
                                                                          : "iteration cap reached";
    throw NonConvergenceError("principal-score fit for arm " + std::to_string(arm_) + " did not converge: " + why);
  }
}

double PrincipalScoreModel::raw_score(const std::vector<double>& covariates) const {
  std::vector<double> row{1.0};
  for (std::size_t c : covariate_columns_) {
    if (c >= covariates.size()) throw Error("covariate vector too short for principal-score model");
    row.push_back(covariates[c]);
  }
  return glm::predict_prob(fit_, row);
}

double PrincipalScoreModel::score(const std::vector<double>& covariates) const {
  return std::clamp(raw_score(covariates), kScoreClip, 1.0 - kScoreClip);
}

PrincipalScoreModel fit_principal_score(const std::vector<ParallelObservation>& obs,
                                        const std::vector<std::string>& covariate_names,
                                        const std::optional<std::vector<std::string>>& selection) {
  if (obs.empty()) throw InsufficientDataError("no observations to fit a principal score");
  const int t = obs.front().treatment;
  const auto cols = select_covariates(covariate_names, selection);
  std::vector<int> a;
  a.reserve(obs.size());
  for (const auto& o : obs) {
    if (o.treatment != t) throw Error("principal-score fit mixes observations from both arms");
    if (!o.a) throw Error("subject '" + o.subject_id + "' has a missing stratum variable");
    a.push_back(*o.a);
  }
  glm::DesignMatrix design(obs.size());
  std::vector<std::string> names;
  for (std::size_t c : cols) {
    std::vector<double> column;
    column.reserve(obs.size());
    for (const auto& o : obs) column.push_back(o.covariates.at(c));
    design.add_column(covariate_names[c], column);
    names.push_back(covariate_names[c]);
  }
  PrincipalScoreModel model(t, glm::fit_logistic(design, a), names, cols);

  std::size_t extreme = 0;
  for (const auto& o : obs) {
    const double g = model.raw_score(o.covariates);
    if (g < 0.001 || g > 0.999) ++extreme;
  }
  if (2 * extreme > obs.size())
    model.add_warning("arm " + std::to_string(t) + ": " + std::to_string(extreme) + " of " +
                      std::to_string(obs.size()) + " principal scores lie outside [0.001, 0.999]");
  return model;
}

double hayden_weight(double g, int l) {
  if (!(g > 0.0 && g < 1.0)) throw Error("principal score must lie strictly inside (0, 1)");
  return l == 1 ? g : 1.0 - g;
}

double estimate_mu_hayden(const std::vector<ParallelObservation>& obs, const PrincipalScoreModel& other_arm_ps,
                          const StratumLabel& stratum) {
  require_joint(stratum);
  if (obs.empty()) throw InestimableError(stratum.name() + ": no observations");
  const int t = obs.front().treatment;
  if (other_arm_ps.arm() != 1 - t) throw Error("principal-score model must come from the other arm");
  const int own = own_index(stratum, t), cross = cross_index(stratum, t);
  std::vector<std::pair<double, double>> members;  // (weight, y)
  double w_max = 0.0;
  for (const auto& o : obs) {
    if (o.treatment != t) throw Error("observations mix both arms");
    if (!o.a || !o.y) throw Error("subject '" + o.subject_id + "' lacks a or y");
    if (*o.a != own) continue;
    const double w = hayden_weight(other_arm_ps.score(o.covariates), cross);
    members.emplace_back(w, *o.y);
    w_max = std::max(w_max, w);
  }
  if (members.empty())
    throw InestimableError(stratum.name() + ": no arm-" + std::to_string(t) + " observations with A(" +
                           std::to_string(t) + ")=" + std::to_string(own));
  if (!(w_max > 0.0)) throw InestimableError(stratum.name() + ": total weight is zero");
  // Relative weights are exactly 1 when the score is constant, so that case
  // reproduces the plain stratum mean bit for bit.
  double num = 0.0, den = 0.0;
  for (const auto& [w, y] : members) {
    const double r = w / w_max;
    num += r * y;
    den += r;
  }
  return num / den;
}

double estimate_mu_direct(const std::vector<SubjectRecord>& records, const StratumLabel& stratum, int t) {
  require_joint(stratum);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    const auto a0 = r.a_under(0), a1 = r.a_under(1);
    const auto y = r.y_under(t);
    if (!a0 || !a1 || !y) throw Error("subject '" + r.subject_id + "' is not a completer");
    if (*a0 == stratum.k && *a1 == stratum.l) {
      sum += *y;
      ++n;
    }
  }
  if (n == 0) throw InestimableError(stratum.name() + ": stratum is empty");
  return sum / static_cast<double>(n);
}

std::string to_string(Contrast c) {
  switch (c) {
    case Contrast::Arm0: return "arm0";
    case Contrast::Arm1: return "arm1";
    case Contrast::Diff: return "diff";
  }
  return "?";
}

std::string to_string(Method m) { return m == Method::PS ? "PS" : "DIRECT"; }

std::string to_string(ProbMethod m) {
  switch (m) {
    case ProbMethod::Observed: return "observed";
    case ProbMethod::CondIndep_A4p: return "cond_indep_a4p";
    case ProbMethod::Indep_A4pp: return "indep_a4pp";
  }
  return "?";
}

const EstimateSummary& PceTable::find(Method m, const StratumLabel& s, Contrast c) const {
  for (const auto& r : rows)
    if (r.method == m && r.stratum == s && r.arm_or_contrast == c) return r;
  throw Error("no " + to_string(m) + " row for " + s.name() + " " + to_string(c));
}

PceTable estimate_pce_table(const AnalysisData& data, const PceConfig& config) {
  if (config.direct && !data.crossover) throw Error("direct estimator requires crossover data");
  if (!config.ps && !config.direct) throw Error("no estimation method selected");

  PceTable table;
  std::vector<SubjectRecord> completers;
  if (data.crossover) {
    completers = completer_filter(*data.crossover, CompleterRequirement::Both);
    table.n_completers = completers.size();
    const auto strata = classify_strata(completers);
    table.direct_counts = strata.counts;
  }

  if (config.ps) {
    const PointSet points = ps_points(data, config, &table.warnings);
    if (config.bootstrap) {
      const IndexStatistic stat = [&](std::span<const std::size_t> idx) {
        return ps_points(resample(data, idx), config, nullptr).vec();
      };
      const auto reps = run_replicates(n_units(data), 12, stat, *config.bootstrap);
      append_rows(table, Method::PS, points, &reps, &*config.bootstrap);
    } else {
      append_rows(table, Method::PS, points, nullptr, nullptr);
    }
  }

  if (config.direct) {
    const PointSet points = direct_points(completers);
    if (config.bootstrap) {
      // Same seed as PS, so both methods see identical resamples.
      const IndexStatistic stat = [&](std::span<const std::size_t> idx) {
        std::vector<SubjectRecord> sample;
        sample.reserve(idx.size());
        for (std::size_t i : idx) sample.push_back((*data.crossover)[i]);
        return direct_points(completer_filter(sample, CompleterRequirement::Both)).vec();
      };
      const auto reps = run_replicates(data.crossover->size(), 12, stat, *config.bootstrap);
      append_rows(table, Method::DIRECT, points, &reps, &*config.bootstrap);
    } else {
      append_rows(table, Method::DIRECT, points, nullptr, nullptr);
    }
  }
  return table;
}

std::array<double, 4> cond_indep_cell_probs(const PrincipalScoreModel& ps0, const PrincipalScoreModel& ps1,
                                           const std::vector<std::vector<double>>& covariates) {
  if (ps0.arm() != 0 || ps1.arm() != 1) throw Error("cond_indep_cell_probs expects the arm-0 and arm-1 models");
  if (covariates.empty()) throw InestimableError("no subjects");
  std::array<double, 4> sums{};
  for (const auto& x : covariates) {
    const double g0 = ps0.score(x), g1 = ps1.score(x);
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) sums[joint_index(k, l)] += hayden_weight(g0, k) * hayden_weight(g1, l);
  }
  for (auto& v : sums) v /= static_cast<double>(covariates.size());
  return sums;
}

StratumProbEstimate estimate_stratum_probs(const AnalysisData& data, ProbMethod method,
                                           const std::optional<std::vector<std::string>>& ps_covariates) {
  StratumProbEstimate est;
  est.method = method;
  switch (method) {
    case ProbMethod::Observed: {
      if (!data.crossover) throw Error("observed stratum proportions require crossover data");
      const auto table = classify_strata(completer_filter(*data.crossover, CompleterRequirement::StratumVarBothArms));
      if (table.n_total == 0) throw InestimableError("no subjects with the stratum variable in both periods");
      est.probs = table.proportions;
      break;
    }
    case ProbMethod::CondIndep_A4p: {
      const auto arm0 = with_a(data.arm(0)), arm1 = with_a(data.arm(1));
      const auto ps0 = fit_principal_score(arm0, data.covariate_names, ps_covariates);
      const auto ps1 = fit_principal_score(arm1, data.covariate_names, ps_covariates);
      // Average over subjects: crossover records when present, otherwise every observation.
      std::vector<std::vector<double>> xs;
      if (data.crossover) {
        for (const auto& r : *data.crossover) xs.push_back(r.covariates);
      } else {
        for (const auto& o : data.observations) xs.push_back(o.covariates);
      }
      est.probs = cond_indep_cell_probs(ps0, ps1, xs);
      break;
    }
    case ProbMethod::Indep_A4pp: {
      double rate[2];
      for (int t = 0; t < 2; ++t) {
        const auto obs = with_a(data.arm(t));
        if (obs.empty()) throw InestimableError("arm " + std::to_string(t) + " has no stratum-variable values");
        double ones = 0;
        for (const auto& o : obs) ones += *o.a;
        rate[t] = ones / static_cast<double>(obs.size());
      }
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          est.probs[joint_index(k, l)] = (k ? rate[0] : 1.0 - rate[0]) * (l ? rate[1] : 1.0 - rate[1]);
      break;
    }
  }
  return est;
}

double combine_marginal(const std::map<StratumLabel, double>& mu_joint, const StratumProbEstimate& probs,
                        const StratumLabel& marginal) {
  if (marginal.kind == StratumLabel::Kind::Joint) throw Error("combine_marginal expects a marginal stratum");
  double num = 0.0, den = 0.0;
  for (const auto& s : joint_strata()) {
    if (!marginal.contains(s.k, s.l)) continue;
    const auto it = mu_joint.find(s);
    if (it == mu_joint.end() || !std::isfinite(it->second))
      throw InestimableError(marginal.name() + ": constituent cell " + s.name() + " is inestimable");
    const double p = probs.prob(s.k, s.l);
    num += p * it->second;
    den += p;
  }
  if (!(den > 0.0)) throw InestimableError(marginal.name() + ": marginal stratum has zero probability");
  return num / den;
}

}  // namespace pce
