#include "pce/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "pce/csv.hpp"
#include "pce/diagnostics.hpp"
#include "pce/errors.hpp"
#include "pce/estimators.hpp"
#include "pce/report.hpp"
#include "pce/rng.hpp"
#include "pce/simulator.hpp"

namespace pce::cli {

namespace {

// Raised for bad flag combinations detected after parsing.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::filesystem::path resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative())
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) p = std::filesystem::path(dir) / p;
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
}

void emit(const std::string& output, const std::string& text, std::ostream& out) {
  if (output.empty() || output == "-") out << text;
  else write_text(resolve_output(output), text);
}

std::optional<std::vector<std::string>> covariate_selection(const std::vector<std::string>& given) {
  if (given.empty()) return std::nullopt;
  std::vector<std::string> names;
  for (auto n : given) {
    if (n.rfind("x_", 0) == 0) n.erase(0, 2);
    names.push_back(n);
  }
  return names;
}

struct InputData {
  std::optional<CrossoverData> crossover;
  std::optional<ParallelData> parallel;
  std::vector<std::string> covariate_names() const {
    return crossover ? crossover->covariate_names : parallel->covariate_names;
  }
};

InputData load_input(const std::string& path, const std::string& derive_a) {
  InputData in;
  std::optional<ThresholdRule> rule;
  if (!derive_a.empty()) rule = parse_threshold_rule(derive_a);
  if (detect_csv_kind(path) == CsvKind::Crossover) {
    in.crossover = load_crossover_csv(path);
    if (rule) in.crossover->records = derive_stratum_variable(std::move(in.crossover->records), *rule);
  } else {
    in.parallel = load_parallel_csv(path);
    if (rule) in.parallel->observations = derive_stratum_variable(std::move(in.parallel->observations), *rule);
  }
  return in;
}

AnalysisData analysis_data(const InputData& in) {
  return in.crossover ? AnalysisData::from_crossover(*in.crossover) : AnalysisData::from_parallel(*in.parallel);
}

struct SimulateArgs {
  std::string scenario = "paper_like";
  std::string config;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::string out = "trial.csv";
  std::string truth;
  std::string parallel_out;
  std::size_t oracle_n = 200000;
  unsigned threads = 0;
};

sim::DgpConfig build_config(const std::string& scenario_name, const std::string& config_path,
                            std::optional<std::size_t> n, std::optional<std::uint64_t> seed) {
  sim::DgpConfig c = config_path.empty() ? sim::scenario(scenario_name) : sim::load_config(config_path);
  if (n) c.n_subjects = *n;
  if (seed) c.seed = *seed;
  c.validate();
  return c;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const sim::DgpConfig c = build_config(a.scenario, a.config, a.n, a.seed);
  const CrossoverData data = sim::generate_trial(c);
  const auto out_path = resolve_output(a.out);
  if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
  save_crossover_csv(out_path, data);

  std::filesystem::path truth_path;
  if (a.truth.empty()) {
    truth_path = out_path;
    truth_path.replace_extension(".truth.json");
  } else {
    truth_path = resolve_output(a.truth);
  }
  const auto truth = sim::true_pce(c, a.oracle_n, a.threads, sim::EmptyCell::Report);
  for (const auto& s : joint_strata())
    if (truth.cell(s.k, s.l).count < 2)
      err << "warning: stratum " << s.name() << " is empty in the oracle; its effect is reported as missing\n";
  write_text(truth_path, truth_path.extension() == ".csv" ? sim::truth_to_csv(truth) : sim::truth_to_json(truth));
  if (!a.parallel_out.empty()) {
    ParallelData par{data.covariate_names, as_parallel(data.records, 0)};
    const auto arm1 = as_parallel(data.records, 1);
    par.observations.insert(par.observations.end(), arm1.begin(), arm1.end());
    const auto p = resolve_output(a.parallel_out);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    save_parallel_csv(p, par);
  }
  out << "wrote " << out_path.string() << " (" << data.records.size() << " subjects) and "
      << truth_path.string() << "\n";
  out << "seed=" << c.seed << " config_digest=" << sim::config_digest(c) << "\n";
  return kExitOk;
}

struct EstimateArgs {
  std::string input;
  std::string method = "ps";
  std::size_t bootstrap = 0;
  std::uint64_t seed = 1;
  double confidence = 0.95;
  std::vector<std::string> covariates;
  std::string derive_a;
  std::string format = "md";
  std::string output;
  unsigned threads = 0;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  const InputData in = load_input(a.input, a.derive_a);
  PceConfig config;
  config.ps = a.method == "ps" || a.method == "both";
  config.direct = a.method == "direct" || a.method == "both";
  if (config.direct && !in.crossover) throw UsageError("direct estimator requires crossover data");
  config.ps_covariates = covariate_selection(a.covariates);
  if (a.bootstrap > 0) {
    BootstrapSpec spec;
    spec.n_resamples = a.bootstrap;
    spec.seed = a.seed;
    spec.confidence = a.confidence;
    spec.threads = a.threads;
    config.bootstrap = spec;
  }
  const PceTable table = estimate_pce_table(analysis_data(in), config);
  for (const auto& w : table.warnings) err << "warning: " << w << "\n";
  emit(a.output, report::render_pce_table(table, report::parse_format(a.format)), out);
  for (const auto& r : table.rows)
    if (r.point) return kExitOk;
  err << "error: no stratum was estimable\n";
  return kExitError;
}

struct DiagnoseArgs {
  std::string input;
  std::vector<std::string> checks{"all"};
  std::string direction = "increasing";
  std::size_t bootstrap = 1000;
  std::uint64_t seed = 1;
  std::string independence_method = "a4p";
  std::vector<std::string> covariates;
  std::string derive_a;
  std::string format = "md";
  std::string output;
  unsigned threads = 0;
};

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out, std::ostream& err) {
  const InputData in = load_input(a.input, a.derive_a);
  if (!in.crossover) throw UsageError("diagnostics require crossover data");
  const auto& data = *in.crossover;

  std::vector<std::string> checks;
  for (const auto& c : a.checks) {
    if (c == "all") checks.insert(checks.end(), {"monotonicity", "ignorability", "independence", "crossover_effects"});
    else checks.push_back(c);
  }
  const auto covariates = covariate_selection(a.covariates);

  report::DiagnosticsDocument doc;
  std::size_t completed = 0;
  for (const auto& check : checks) {
    try {
      if (check == "monotonicity") {
        const auto dir = a.direction == "increasing"   ? diag::MonotonicityDirection::IncreasingA1geA0
                         : a.direction == "decreasing" ? diag::MonotonicityDirection::DecreasingA1leA0
                                                       : diag::MonotonicityDirection::Equality;
        doc.monotonicity =
            diag::monotonicity_report(completer_filter(data.records, CompleterRequirement::StratumVarBothArms), dir);
      } else if (check == "ignorability") {
        doc.ignorability = diag::ignorability_regressions(data.records, covariates, data.covariate_names);
      } else if (check == "independence") {
        diag::IndependenceOptions o;
        o.method = a.independence_method == "a4pp" ? ProbMethod::Indep_A4pp : ProbMethod::CondIndep_A4p;
        o.covariates = covariates;
        o.n_bootstrap = a.bootstrap;
        o.seed = a.seed;
        o.threads = a.threads;
        doc.independence = diag::independence_test(data.records, data.covariate_names, o);
      } else if (check == "crossover_effects") {
        doc.crossover_effects = diag::crossover_effects_test(data.records);
      }
      ++completed;
    } catch (const Error& e) {
      doc.errors[check] = e.what();
      err << "warning: " << check << " failed: " << e.what() << "\n";
    }
  }
  emit(a.output, report::render_diagnostics(doc, report::parse_format(a.format)), out);
  return completed > 0 ? kExitOk : kExitError;
}

struct ReplicateArgs {
  std::string scenario = "paper_like";
  std::string config;
  std::optional<std::size_t> n;
  std::size_t reps = 20;
  std::uint64_t seed = 1;
  std::string method = "both";
  std::size_t bootstrap = 0;
  std::size_t independence_bootstrap = 0;
  std::size_t oracle_n = 200000;
  std::string format = "md";
  std::string output;
  unsigned threads = 0;
};

int cmd_replicate(const ReplicateArgs& a, std::ostream& out) {
  sim::DgpConfig base = build_config(a.scenario, a.config, a.n, a.seed);
  const auto truth = sim::true_pce(base, a.oracle_n, a.threads, sim::EmptyCell::Report);

  PceConfig pce;
  pce.ps = a.method == "ps" || a.method == "both";
  pce.direct = a.method == "direct" || a.method == "both";

  struct Acc {
    double sum = 0, sum_sq_err = 0;
    std::size_t n = 0, with_ci = 0, covered = 0;
  };
  std::map<std::pair<Method, std::size_t>, Acc> acc;
  double mono_sum = 0;
  std::size_t indep_rejections = 0, period_rejections = 0, sequence_rejections = 0;

  for (std::size_t k = 0; k < a.reps; ++k) {
    // Replicate k: trial seed stream_seed(seed, k); its bootstrap and
    // independence test use substreams 1 and 2 of that seed.
    sim::DgpConfig c = base;
    c.seed = stream_seed(a.seed, k);
    const CrossoverData data = sim::generate_trial(c);
    if (a.bootstrap > 0) {
      BootstrapSpec spec;
      spec.n_resamples = a.bootstrap;
      spec.seed = stream_seed(c.seed, 1);
      spec.threads = a.threads;
      pce.bootstrap = spec;
    }
    const auto table = estimate_pce_table(AnalysisData::from_crossover(data), pce);
    for (const auto& r : table.rows) {
      if (r.arm_or_contrast != Contrast::Diff || !r.point) continue;
      const std::size_t i = joint_index(r.stratum.k, r.stratum.l);
      auto& s = acc[{r.method, i}];
      const double t = truth.cells[i].pce;
      s.sum += *r.point;
      s.sum_sq_err += (*r.point - t) * (*r.point - t);
      ++s.n;
      if (r.ci95) {
        ++s.with_ci;
        if (r.ci95->first <= t && t <= r.ci95->second) ++s.covered;
      }
    }
    const auto strata_records = completer_filter(data.records, CompleterRequirement::StratumVarBothArms);
    mono_sum +=
        diag::monotonicity_report(strata_records, diag::MonotonicityDirection::IncreasingA1geA0).violating_cell_proportion;
    const auto fx = diag::crossover_effects_test(data.records);
    period_rejections += fx.period_p < 0.05;
    sequence_rejections += fx.sequence_p < 0.05;
    if (a.independence_bootstrap > 0) {
      diag::IndependenceOptions o;
      o.n_bootstrap = a.independence_bootstrap;
      o.seed = stream_seed(c.seed, 2);
      o.threads = a.threads;
      indep_rejections += diag::independence_test(data.records, data.covariate_names, o).p_value < 0.05;
    }
  }

  report::ReplicateSummary s;
  s.scenario = a.config.empty() ? a.scenario : a.config;
  s.n_subjects = base.n_subjects;
  s.replicates = a.reps;
  s.seed = a.seed;
  for (Method m : {Method::DIRECT, Method::PS}) {
    if ((m == Method::PS && !pce.ps) || (m == Method::DIRECT && !pce.direct)) continue;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& x = acc[{m, i}];
      report::ReplicateCell cell;
      cell.method = to_string(m);
      cell.stratum = joint_strata()[i].name();
      cell.truth = truth.cells[i].pce;
      cell.n_estimated = x.n;
      cell.n_with_ci = x.with_ci;
      const double nan = std::nan("");
      cell.mean_estimate = x.n ? x.sum / static_cast<double>(x.n) : nan;
      cell.bias = cell.mean_estimate - cell.truth;
      cell.rmse = x.n ? std::sqrt(x.sum_sq_err / static_cast<double>(x.n)) : nan;
      cell.coverage = x.with_ci ? static_cast<double>(x.covered) / static_cast<double>(x.with_ci) : nan;
      s.cells.push_back(cell);
    }
  }
  const auto reps = static_cast<double>(std::max<std::size_t>(a.reps, 1));
  s.monotonicity_violation_mean = mono_sum / reps;
  s.independence_rejection_rate =
      a.independence_bootstrap > 0 ? static_cast<double>(indep_rejections) / reps : std::nan("");
  s.period_rejection_rate = static_cast<double>(period_rejections) / reps;
  s.sequence_rejection_rate = static_cast<double>(sequence_rejections) / reps;
  emit(a.output, report::render_replicate_summary(s, report::parse_format(a.format)), out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Principal causal effect estimation and assumption diagnostics for 2x2 crossover trials", "pce"};
  app.require_subcommand(1);
  const std::vector<std::string> formats{"csv", "json", "md"};
  const std::vector<std::string> methods{"ps", "direct", "both"};

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic crossover trial and its ground truth");
  simulate->add_option("--scenario", sa.scenario, "Preset name")->check(CLI::IsMember(sim::scenario_names()));
  simulate->add_option("--config", sa.config, "JSON config file (keys mirror the generator settings)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--n", sa.n, "Number of subjects");
  simulate->add_option("--seed", sa.seed, "Master seed");
  simulate->add_option("--out", sa.out, "Crossover CSV to write");
  simulate->add_option("--truth", sa.truth, "Truth table (.json or .csv); default <out>.truth.json");
  simulate->add_option("--parallel-out", sa.parallel_out, "Also write the unpaired parallel view");
  simulate->add_option("--oracle-n", sa.oracle_n, "Monte Carlo size of the truth oracle")->check(CLI::Range(10000ul, 1ul << 40));
  simulate->add_option("--threads", sa.threads, "Worker threads (0 = all cores)");

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "Estimate principal stratum means and effects");
  estimate->add_option("--input", ea.input, "Crossover or parallel CSV")->required()->check(CLI::ExistingFile);
  estimate->add_option("--method", ea.method, "ps, direct or both")->check(CLI::IsMember(methods));
  estimate->add_option("--bootstrap", ea.bootstrap, "Bootstrap resamples for SE/CI (0 = none)");
  estimate->add_option("--seed", ea.seed, "Bootstrap seed");
  estimate->add_option("--confidence", ea.confidence, "Interval level")->check(CLI::Range(0.5, 0.9999));
  estimate->add_option("--covariates", ea.covariates, "Principal-score covariates (default: all x_ columns)")
      ->delimiter(',');
  estimate->add_option("--derive-a", ea.derive_a, "Build A from the outcome, e.g. \"y>0\"");
  estimate->add_option("--format", ea.format, "csv, json or md")->check(CLI::IsMember(formats));
  estimate->add_option("--output", ea.output, "Output file (default stdout)");
  estimate->add_option("--threads", ea.threads, "Worker threads (0 = all cores)");

  DiagnoseArgs da;
  auto* diagnose = app.add_subcommand("diagnose", "Assess monotonicity, ignorability, independence and crossover effects");
  diagnose->add_option("--input", da.input, "Crossover CSV")->required()->check(CLI::ExistingFile);
  diagnose->add_option("--checks", da.checks, "monotonicity, ignorability, independence, crossover_effects or all")
      ->delimiter(',')
      ->check(CLI::IsMember({"monotonicity", "ignorability", "independence", "crossover_effects", "all"}));
  diagnose->add_option("--direction", da.direction, "Monotonicity direction")
      ->check(CLI::IsMember({"increasing", "decreasing", "equality"}));
  diagnose->add_option("--bootstrap", da.bootstrap, "Independence-test resamples")->check(CLI::PositiveNumber);
  diagnose->add_option("--seed", da.seed, "Bootstrap seed");
  diagnose->add_option("--independence-method", da.independence_method, "a4p (given X) or a4pp (unconditional)")
      ->check(CLI::IsMember({"a4p", "a4pp"}));
  diagnose->add_option("--covariates", da.covariates, "Covariates (default: all x_ columns)")->delimiter(',');
  diagnose->add_option("--derive-a", da.derive_a, "Build A from the outcome, e.g. \"y>0\"");
  diagnose->add_option("--format", da.format, "csv, json or md")->check(CLI::IsMember(formats));
  diagnose->add_option("--output", da.output, "Output file (default stdout)");
  diagnose->add_option("--threads", da.threads, "Worker threads (0 = all cores)");

  ReplicateArgs ra;
  auto* replicate = app.add_subcommand("replicate", "Run K simulate -> estimate -> diagnose pipelines and aggregate");
  replicate->add_option("--scenario", ra.scenario, "Preset name")->check(CLI::IsMember(sim::scenario_names()));
  replicate->add_option("--config", ra.config, "JSON config file")->check(CLI::ExistingFile);
  replicate->add_option("--n", ra.n, "Subjects per trial");
  replicate->add_option("--reps", ra.reps, "Number of replicates")->check(CLI::PositiveNumber);
  replicate->add_option("--seed", ra.seed, "Master seed");
  replicate->add_option("--method", ra.method, "ps, direct or both")->check(CLI::IsMember(methods));
  replicate->add_option("--bootstrap", ra.bootstrap, "Bootstrap resamples per replicate (0 = no CIs)");
  replicate->add_option("--independence-bootstrap", ra.independence_bootstrap,
                        "Resamples for the independence test per replicate (0 = skip)");
  replicate->add_option("--oracle-n", ra.oracle_n, "Monte Carlo size of the truth oracle")->check(CLI::Range(10000ul, 1ul << 40));
  replicate->add_option("--format", ra.format, "csv, json or md")->check(CLI::IsMember(formats));
  replicate->add_option("--output", ra.output, "Output file (default stdout)");
  replicate->add_option("--threads", ra.threads, "Worker threads (0 = all cores)");

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << (app.got_subcommand(simulate)    ? simulate->help()
            : app.got_subcommand(estimate)  ? estimate->help()
            : app.got_subcommand(diagnose)  ? diagnose->help()
            : app.got_subcommand(replicate) ? replicate->help()
                                            : app.help());
    return kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sa, out, err);
    if (*estimate) return cmd_estimate(ea, out, err);
    if (*diagnose) return cmd_diagnose(da, out, err);
    if (*replicate) return cmd_replicate(ra, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace pce::cli
