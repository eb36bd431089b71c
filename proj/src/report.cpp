#include "pce/report.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "pce/csv.hpp"
#include "pce/errors.hpp"

namespace pce::report {

using nlohmann::ordered_json;

namespace {

ordered_json opt_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::string opt_csv(const std::optional<double>& v) { return v ? format_real(*v) : "NA"; }

// Non-finite doubles become JSON null.
ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string prob_method_label(ProbMethod m) {
  switch (m) {
    case ProbMethod::Observed: return "Observed";
    case ProbMethod::CondIndep_A4p: return "Conditional independence given X";
    case ProbMethod::Indep_A4pp: return "Unconditional independence";
  }
  return "?";
}

std::string p_text(double p) { return p < 1e-4 ? "<.0001" : fixed(p, 4); }

}  // namespace

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  if (name == "md") return Format::Md;
  throw ConfigError("unknown output format '" + name + "' (expected csv, json or md)");
}

std::string fixed(double v, int decimals) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  // Avoid "-0.0".
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

std::string TextTable::markdown() const {
  std::vector<std::size_t> width(headers_.size());
  for (std::size_t c = 0; c < headers_.size(); ++c) width[c] = std::max<std::size_t>(3, headers_[c].size());
  for (const auto& r : rows_)
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    out << '|';
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < cells.size() ? cells[c] : "";
      out << ' ' << cell << std::string(width[c] - cell.size(), ' ') << " |";
    }
    out << '\n';
  };
  line(headers_);
  out << '|';
  for (std::size_t w : width) out << std::string(w + 2, '-') << '|';
  out << '\n';
  for (const auto& r : rows_) line(r);
  return out.str();
}

std::string render_pce_table(const PceTable& table, Format format) {
  switch (format) {
    case Format::Json: {
      ordered_json j;
      j["n_completers"] = table.n_completers;
      j["diff_orientation"] = "experimental minus control: Y(1) - Y(0)";
      auto& rows = j["estimates"] = ordered_json::array();
      for (const auto& r : table.rows) {
        ordered_json row;
        row["method"] = to_string(r.method);
        row["stratum"] = r.stratum.name();
        row["contrast"] = to_string(r.arm_or_contrast);
        row["point"] = opt_json(r.point);
        row["se"] = opt_json(r.se);
        row["ci95"] = r.ci95 ? ordered_json::array({r.ci95->first, r.ci95->second}) : ordered_json(nullptr);
        row["n_effective"] = r.n_effective;
        row["note"] = r.note;
        rows.push_back(row);
      }
      j["warnings"] = table.warnings;
      return j.dump(2) + "\n";
    }
    case Format::Csv: {
      std::ostringstream out;
      out << "method,stratum,contrast,point,se,ci_lo,ci_hi,n_effective,note\n";
      for (const auto& r : table.rows) {
        out << to_string(r.method) << ',' << r.stratum.name() << ',' << to_string(r.arm_or_contrast) << ','
            << opt_csv(r.point) << ',' << opt_csv(r.se) << ','
            << (r.ci95 ? format_real(r.ci95->first) : "NA") << ',' << (r.ci95 ? format_real(r.ci95->second) : "NA")
            << ',' << r.n_effective << ',' << csv_quote(r.note) << '\n';
      }
      return out.str();
    }
    case Format::Md: {
      TextTable t({"Stratum", "Method", "Control (T=0)", "Experimental (T=1)", "Experimental - Control"});
      auto cell = [](const EstimateSummary& e) -> std::string {
        if (!e.point) return "inestimable";
        std::string s = fixed(*e.point, 2);
        if (e.ci95) s += " (" + fixed(e.ci95->first, 2) + ", " + fixed(e.ci95->second, 2) + ")";
        return s;
      };
      for (const auto& s : joint_strata()) {
        for (Method m : {Method::DIRECT, Method::PS}) {
          bool present = false;
          for (const auto& r : table.rows) present |= r.method == m;
          if (!present) continue;
          std::string label = s.name();
          if (table.n_completers > 0) label += " (n=" + std::to_string(table.direct_counts[joint_index(s.k, s.l)]) + ")";
          t.add_row({label, to_string(m), cell(table.find(m, s, Contrast::Arm0)),
                     cell(table.find(m, s, Contrast::Arm1)), cell(table.find(m, s, Contrast::Diff))});
        }
      }
      std::string out = "## Principal stratum means, mean (95% CI)\n\n" + t.markdown();
      std::string notes;
      for (const auto& r : table.rows)
        if (!r.note.empty())
          notes += "- " + to_string(r.method) + " " + r.stratum.name() + " " + to_string(r.arm_or_contrast) + ": " +
                   r.note + "\n";
      for (const auto& w : table.warnings) notes += "- warning: " + w + "\n";
      if (!notes.empty()) out += "\nNotes:\n\n" + notes;
      return out;
    }
  }
  return {};
}

namespace {

ordered_json probs_json(const StratumProbEstimate& e) {
  ordered_json j;
  j["method"] = to_string(e.method);
  for (const auto& s : joint_strata()) {
    ordered_json cell;
    cell["prob"] = e.prob(s.k, s.l);
    cell["se"] = e.se ? ordered_json((*e.se)[joint_index(s.k, s.l)]) : ordered_json(nullptr);
    j[s.name()] = cell;
  }
  return j;
}

ordered_json effect_json(const diag::EffectTest& e) {
  return {{"estimate", num(e.estimate)}, {"se", num(e.se)}, {"p_value", num(e.p_value)}};
}

std::string regression_label(const diag::IgnorabilityRegression& r) {
  return "Y(" + std::to_string(r.outcome_arm) + ") on A(" + std::to_string(r.stratum_arm) + ") and X";
}

}  // namespace

std::string render_diagnostics(const DiagnosticsDocument& doc, Format format) {
  switch (format) {
    case Format::Json: {
      ordered_json j;
      if (doc.monotonicity) {
        const auto& m = *doc.monotonicity;
        ordered_json t;
        for (const auto& s : joint_strata())
          t[s.name()] = {{"count", m.table.count(s.k, s.l)}, {"proportion", m.table.proportion(s.k, s.l)}};
        j["monotonicity"] = {{"direction", diag::to_string(m.direction)},
                             {"n", m.table.n_total},
                             {"strata", t},
                             {"violating_cell_proportion", m.violating_cell_proportion},
                             {"conforming_proportion", m.conforming_proportion},
                             {"note", m.verdict_note}};
      }
      if (doc.ignorability) {
        auto arr = ordered_json::array();
        for (const auto& r : doc.ignorability->regressions)
          arr.push_back({{"outcome_arm", r.outcome_arm},
                         {"stratum_arm", r.stratum_arm},
                         {"n", r.n},
                         {"coefficient", r.coefficient},
                         {"se", r.se},
                         {"p_value", r.p_value},
                         {"adjusted_mean_a0", r.adjusted_mean[0]},
                         {"adjusted_mean_a0_se", r.adjusted_mean_se[0]},
                         {"adjusted_mean_a1", r.adjusted_mean[1]},
                         {"adjusted_mean_a1_se", r.adjusted_mean_se[1]},
                         {"period_coefficient", r.period_coefficient},
                         {"period_p_value", r.period_p_value}});
        j["ignorability"] = arr;
      }
      if (doc.independence) {
        const auto& r = *doc.independence;
        j["independence"] = {{"n_subjects", r.n_subjects},
                             {"observed", probs_json(r.observed)},
                             {"estimated", probs_json(r.estimated)},
                             {"discrepancy_max_abs", r.discrepancy},
                             {"discrepancy_ssq", r.discrepancy_ssq},
                             {"p_value", r.p_value},
                             {"p_value_ssq", r.p_value_ssq},
                             {"n_bootstrap", r.n_bootstrap},
                             {"rejected_resamples", r.rejected_resamples}};
      }
      if (doc.crossover_effects) {
        const auto& r = *doc.crossover_effects;
        j["crossover_effects"] = {{"n_control_first", r.group_sizes[0]},
                                  {"n_experimental_first", r.group_sizes[1]},
                                  {"treatment", effect_json(r.treatment)},
                                  {"period", effect_json(r.period)},
                                  {"sequence", effect_json(r.sequence)}};
      }
      if (!doc.errors.empty()) j["errors"] = doc.errors;
      return j.dump(2) + "\n";
    }
    case Format::Csv: {
      std::ostringstream out;
      out << "report,item,quantity,value\n";
      auto row = [&](const std::string& rep, const std::string& item, const std::string& q, const std::string& v) {
        out << rep << ',' << csv_quote(item) << ',' << q << ',' << csv_quote(v) << '\n';
      };
      if (doc.monotonicity) {
        const auto& m = *doc.monotonicity;
        for (const auto& s : joint_strata()) {
          row("monotonicity", s.name(), "count", std::to_string(m.table.count(s.k, s.l)));
          row("monotonicity", s.name(), "proportion", format_real(m.table.proportion(s.k, s.l)));
        }
        row("monotonicity", diag::to_string(m.direction), "violating_cell_proportion",
            format_real(m.violating_cell_proportion));
      }
      if (doc.ignorability)
        for (const auto& r : doc.ignorability->regressions) {
          const std::string item = regression_label(r);
          row("ignorability", item, "coefficient", format_real(r.coefficient));
          row("ignorability", item, "se", format_real(r.se));
          row("ignorability", item, "p_value", format_real(r.p_value));
          row("ignorability", item, "adjusted_mean_a0", format_real(r.adjusted_mean[0]));
          row("ignorability", item, "adjusted_mean_a1", format_real(r.adjusted_mean[1]));
        }
      if (doc.independence) {
        const auto& r = *doc.independence;
        for (const auto* e : {&r.observed, &r.estimated})
          for (const auto& s : joint_strata()) {
            row("independence", to_string(e->method) + " " + s.name(), "prob", format_real(e->prob(s.k, s.l)));
            if (e->se) row("independence", to_string(e->method) + " " + s.name(), "se",
                           format_real((*e->se)[joint_index(s.k, s.l)]));
          }
        row("independence", "discrepancy", "max_abs", format_real(r.discrepancy));
        row("independence", "discrepancy", "ssq", format_real(r.discrepancy_ssq));
        row("independence", "test", "p_value", format_real(r.p_value));
        row("independence", "test", "p_value_ssq", format_real(r.p_value_ssq));
        row("independence", "test", "n_bootstrap", std::to_string(r.n_bootstrap));
      }
      if (doc.crossover_effects) {
        const auto& r = *doc.crossover_effects;
        for (const auto& [name, e] : {std::pair{"treatment", r.treatment}, std::pair{"period", r.period},
                                      std::pair{"sequence", r.sequence}}) {
          row("crossover_effects", name, "estimate", format_real(e.estimate));
          row("crossover_effects", name, "se", format_real(e.se));
          row("crossover_effects", name, "p_value", format_real(e.p_value));
        }
      }
      for (const auto& [check, msg] : doc.errors) row("error", check, "message", msg);
      return out.str();
    }
    case Format::Md: {
      std::ostringstream out;
      if (doc.monotonicity) {
        const auto& m = *doc.monotonicity;
        const auto& t = m.table;
        auto cell = [&](std::size_t c, double p) { return std::to_string(c) + " (" + fixed(100 * p, 1) + ")"; };
        TextTable tab({"", "A(1) = 0", "A(1) = 1", "A(1) in {0,1}"});
        for (int k = 0; k < 2; ++k)
          tab.add_row({"A(0) = " + std::to_string(k), cell(t.count(k, 0), t.proportion(k, 0)),
                       cell(t.count(k, 1), t.proportion(k, 1)),
                       cell(t.count(k, 0) + t.count(k, 1), t.proportion(StratumLabel::marginal_control(k)))});
        tab.add_row({"A(0) in {0,1}", cell(t.count(0, 0) + t.count(1, 0), t.proportion(StratumLabel::marginal_experimental(0))),
                     cell(t.count(0, 1) + t.count(1, 1), t.proportion(StratumLabel::marginal_experimental(1))),
                     cell(t.n_total, t.n_total ? 1.0 : 0.0)});
        out << "## Monotonicity: subjects by principal stratum, n (%)\n\n" << tab.markdown() << "\nDirection "
            << diag::to_string(m.direction) << ": " << m.verdict_note << "\n\n";
      }
      if (doc.ignorability) {
        TextTable tab({"Regression", "Quantity", "Estimate (SE)", "p-value"});
        for (const auto& r : doc.ignorability->regressions) {
          const std::string a = "A(" + std::to_string(r.stratum_arm) + ")";
          const std::string y = "Y(" + std::to_string(r.outcome_arm) + ")";
          tab.add_row({regression_label(r), "Coefficient for " + a,
                       fixed(r.coefficient, 2) + " (" + fixed(r.se, 2) + ")", p_text(r.p_value)});
          for (int l = 0; l < 2; ++l)
            tab.add_row({"", "E{" + y + " | mean X, " + a + "=" + std::to_string(l) + "}",
                         fixed(r.adjusted_mean[l], 2) + " (" + fixed(r.adjusted_mean_se[l], 2) + ")", "-"});
        }
        out << "## Principal ignorability: Y regressed on A and X, adjusted for period\n\n" << tab.markdown() << "\n";
      }
      if (doc.independence) {
        const auto& r = *doc.independence;
        TextTable tab({"Pr(S_kl)", "S00", "S01", "S10", "S11"});
        for (const auto* e : {&r.observed, &r.estimated}) {
          std::vector<std::string> cells{prob_method_label(e->method)};
          for (const auto& s : joint_strata()) {
            std::string c = fixed(e->prob(s.k, s.l), 3);
            if (e->se) c += " (" + fixed((*e->se)[joint_index(s.k, s.l)], 3) + ")";
            cells.push_back(c);
          }
          tab.add_row(cells);
        }
        out << "## Cross-world stratum independence: estimated probability (SE)\n\n" << tab.markdown()
            << "\nmax |observed - estimated| = " << fixed(r.discrepancy, 4) << ", bootstrap p = " << fixed(r.p_value, 4)
            << " (B = " << r.n_bootstrap << ", n = " << r.n_subjects << ")\n\n";
      }
      if (doc.crossover_effects) {
        const auto& r = *doc.crossover_effects;
        TextTable tab({"Effect", "Estimate", "SE", "p-value"});
        for (const auto& [name, e] : {std::pair{"Treatment (T=1 minus T=0)", r.treatment},
                                      std::pair{"Period (2 minus 1)", r.period},
                                      std::pair{"Sequence / carry-over", r.sequence}})
          tab.add_row({name, fixed(e.estimate, 2), fixed(e.se, 2), p_text(e.p_value)});
        out << "## Crossover period and sequence effects (n = " << r.group_sizes[0] << " + " << r.group_sizes[1]
            << ")\n\n" << tab.markdown() << "\n";
      }
      for (const auto& [check, msg] : doc.errors) out << "**" << check << " failed:** " << msg << "\n\n";
      return out.str();
    }
  }
  return {};
}

std::string render_replicate_summary(const ReplicateSummary& s, Format format) {
  switch (format) {
    case Format::Json: {
      ordered_json j;
      j["scenario"] = s.scenario;
      j["n_subjects"] = s.n_subjects;
      j["replicates"] = s.replicates;
      j["seed"] = s.seed;
      auto& cells = j["estimates"] = ordered_json::array();
      for (const auto& c : s.cells)
        cells.push_back({{"method", c.method},
                         {"stratum", c.stratum},
                         {"truth", num(c.truth)},
                         {"mean_estimate", num(c.mean_estimate)},
                         {"bias", num(c.bias)},
                         {"rmse", num(c.rmse)},
                         {"coverage", num(c.coverage)},
                         {"n_estimated", c.n_estimated},
                         {"n_with_ci", c.n_with_ci}});
      j["monotonicity_violation_mean"] = num(s.monotonicity_violation_mean);
      j["independence_rejection_rate"] = num(s.independence_rejection_rate);
      j["period_rejection_rate"] = num(s.period_rejection_rate);
      j["sequence_rejection_rate"] = num(s.sequence_rejection_rate);
      return j.dump(2) + "\n";
    }
    case Format::Csv: {
      std::ostringstream out;
      out << "method,stratum,truth,mean_estimate,bias,rmse,coverage,n_estimated,n_with_ci\n";
      for (const auto& c : s.cells)
        out << c.method << ',' << c.stratum << ',' << format_real(c.truth) << ',' << format_real(c.mean_estimate)
            << ',' << format_real(c.bias) << ',' << format_real(c.rmse) << ',' << format_real(c.coverage) << ','
            << c.n_estimated << ',' << c.n_with_ci << '\n';
      return out.str();
    }
    case Format::Md: {
      TextTable tab({"Method", "Stratum", "True PCE", "Mean estimate", "Bias", "RMSE", "CI coverage", "Estimated"});
      for (const auto& c : s.cells)
        tab.add_row({c.method, c.stratum, fixed(c.truth, 3), fixed(c.mean_estimate, 3), fixed(c.bias, 3),
                     fixed(c.rmse, 3), c.n_with_ci ? fixed(c.coverage, 3) : "NA",
                     std::to_string(c.n_estimated) + "/" + std::to_string(s.replicates)});
      std::ostringstream out;
      out << "## Replication study: " << s.scenario << ", n = " << s.n_subjects << ", " << s.replicates
          << " replicates, seed " << s.seed << "\n\n"
          << tab.markdown() << "\nMean violating-cell proportion (A(1) >= A(0)): "
          << fixed(s.monotonicity_violation_mean, 4) << "\n"
          << "Independence test rejection rate (alpha = 0.05): " << fixed(s.independence_rejection_rate, 3) << "\n"
          << "Period effect rejection rate: " << fixed(s.period_rejection_rate, 3) << "\n"
          << "Sequence effect rejection rate: " << fixed(s.sequence_rejection_rate, 3) << "\n";
      return out.str();
    }
  }
  return {};
}

}  // namespace pce::report
