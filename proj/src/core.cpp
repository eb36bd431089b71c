#include "pce/core.hpp"

#include <charconv>
#include <cctype>

#include "pce/errors.hpp"

namespace pce {

bool StratumLabel::contains(int a0, int a1) const {
  switch (kind) {
    case Kind::Joint: return a0 == k && a1 == l;
    case Kind::MarginalControl: return a0 == k;
    case Kind::MarginalExperimental: return a1 == l;
  }
  return false;
}

std::string StratumLabel::name() const {
  switch (kind) {
    case Kind::Joint: return "S" + std::to_string(k) + std::to_string(l);
    case Kind::MarginalControl: return "S" + std::to_string(k) + "*";
    case Kind::MarginalExperimental: return "S*" + std::to_string(l);
  }
  return "S??";
}

const std::array<StratumLabel, 4>& joint_strata() {
  static const std::array<StratumLabel, 4> strata{StratumLabel::joint(0, 0), StratumLabel::joint(0, 1),
                                                  StratumLabel::joint(1, 0), StratumLabel::joint(1, 1)};
  return strata;
}

std::size_t joint_index(int k, int l) { return static_cast<std::size_t>(2 * k + l); }

double StratumTable::proportion(const StratumLabel& s) const {
  double p = 0.0;
  for (const auto& j : joint_strata())
    if (s.contains(j.k, j.l)) p += proportions[joint_index(j.k, j.l)];
  return p;
}

void validate_record(const SubjectRecord& r, std::size_t expected_covariates) {
  const auto& p = r.periods;
  if (p[0].treatment == p[1].treatment)
    throw Error("subject '" + r.subject_id + "': both periods assign treatment " +
                std::to_string(p[0].treatment));
  for (const auto& per : p) {
    if (per.treatment != 0 && per.treatment != 1)
      throw Error("subject '" + r.subject_id + "': treatment must be 0 or 1");
    if (per.a && *per.a != 0 && *per.a != 1)
      throw Error("subject '" + r.subject_id + "': stratum variable must be 0 or 1");
  }
  const Sequence implied = p[0].treatment == 0 ? Sequence::ControlFirst : Sequence::ExperimentalFirst;
  if (implied != r.sequence)
    throw Error("subject '" + r.subject_id + "': sequence inconsistent with period treatments");
  if (r.covariates.size() != expected_covariates)
    throw Error("subject '" + r.subject_id + "': expected " + std::to_string(expected_covariates) +
                " covariates, got " + std::to_string(r.covariates.size()));
}

std::vector<ParallelObservation> as_parallel(const std::vector<SubjectRecord>& records, int t) {
  std::vector<ParallelObservation> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const std::size_t q = r.period_of(t);
    out.push_back({r.subject_id, r.covariates, t, r.periods[q].a, r.periods[q].y, static_cast<int>(q)});
  }
  return out;
}

std::vector<SubjectRecord> completer_filter(const std::vector<SubjectRecord>& records,
                                            CompleterRequirement require) {
  const bool need_y = require != CompleterRequirement::StratumVarBothArms;
  const bool need_a = require != CompleterRequirement::OutcomeBothArms;
  std::vector<SubjectRecord> out;
  for (const auto& r : records) {
    bool keep = true;
    for (const auto& p : r.periods) {
      if (need_y && !p.y) keep = false;
      if (need_a && !p.a) keep = false;
    }
    if (keep) out.push_back(r);
  }
  return out;
}

StratumTable classify_strata(const std::vector<SubjectRecord>& records) {
  StratumTable table;
  for (const auto& r : records) {
    const auto a0 = r.a_under(0);
    const auto a1 = r.a_under(1);
    if (!a0 || !a1)
      throw Error("subject '" + r.subject_id +
                  "' has a missing stratum variable; apply completer_filter(StratumVarBothArms) first");
    ++table.counts[joint_index(*a0, *a1)];
  }
  table.n_total = records.size();
  if (table.n_total > 0)
    for (std::size_t i = 0; i < 4; ++i)
      table.proportions[i] = static_cast<double>(table.counts[i]) / static_cast<double>(table.n_total);
  return table;
}

bool ThresholdRule::apply(double y) const {
  switch (op) {
    case ThresholdOp::Greater: return y > threshold;
    case ThresholdOp::GreaterEqual: return y >= threshold;
    case ThresholdOp::Less: return y < threshold;
    case ThresholdOp::LessEqual: return y <= threshold;
  }
  return false;
}

ThresholdRule parse_threshold_rule(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  const auto bad = [&] { return ConfigError("bad threshold rule '" + text + "' (expected e.g. \"y>0\")"); };
  if (s.size() < 3 || s[0] != 'y') throw bad();
  ThresholdRule rule;
  std::size_t pos = 1;
  if (s.compare(1, 2, ">=") == 0) { rule.op = ThresholdOp::GreaterEqual; pos = 3; }
  else if (s.compare(1, 2, "<=") == 0) { rule.op = ThresholdOp::LessEqual; pos = 3; }
  else if (s[1] == '>') { rule.op = ThresholdOp::Greater; pos = 2; }
  else if (s[1] == '<') { rule.op = ThresholdOp::Less; pos = 2; }
  else throw bad();
  const char* first = s.data() + pos;
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, rule.threshold);
  if (ec != std::errc() || ptr != last) throw bad();
  return rule;
}

std::vector<SubjectRecord> derive_stratum_variable(std::vector<SubjectRecord> records,
                                                   const ThresholdRule& rule) {
  for (auto& r : records)
    for (auto& p : r.periods) p.a = p.y ? std::optional<int>(rule.apply(*p.y) ? 1 : 0) : std::nullopt;
  return records;
}

std::vector<ParallelObservation> derive_stratum_variable(std::vector<ParallelObservation> obs,
                                                         const ThresholdRule& rule) {
  for (auto& o : obs) o.a = o.y ? std::optional<int>(rule.apply(*o.y) ? 1 : 0) : std::nullopt;
  return obs;
}

}  // namespace pce
