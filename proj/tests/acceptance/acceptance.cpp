// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "bootstrap_oracle.hpp"
#include "logistic_oracle.hpp"
#include "ols_oracle.hpp"
#include "pce/diagnostics.hpp"
#include "pce/estimators.hpp"
#include "pce/glm.hpp"
#include "pce/rng.hpp"
#include "pce/simulator.hpp"
#include "pce/stats.hpp"

using namespace pce;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

glm::DesignMatrix design_from(const std::vector<std::vector<double>>& cols) {
  glm::DesignMatrix d(cols.front().size());
  for (std::size_t j = 0; j < cols.size(); ++j) d.add_column("x" + std::to_string(j + 1), cols[j]);
  return d;
}

std::vector<std::vector<double>> rows_of(const glm::DesignMatrix& d) {
  std::vector<std::vector<double>> rows(d.rows(), std::vector<double>(d.cols()));
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j) rows[i][j] = d.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return rows;
}

CrossoverData trial(sim::DgpConfig c, std::size_t n, std::uint64_t seed) {
  c.n_subjects = n;
  c.seed = seed;
  return sim::generate_trial(c);
}

Outcome regression_oracles() {
  Timer timer;
  struct OlsCase {
    std::vector<std::vector<double>> cols;
    std::vector<double> y;
  };
  const std::vector<OlsCase> ols{
      {{{1, 2, 4, 7, 11}}, {2.3, 3.9, 8.4, 13.1, 22.0}},
      {{{1, 2, 4, 7, 11}, {0, 1, 0, 1, 1}}, {3.1, 4.9, 8.2, 12.8, 21.5}},
      {{{-3, -1, 0, 2, 5, 6}, {9, 1, 0, 4, 25, 36}}, {10.2, 1.7, 0.4, 5.1, 26.8, 38.3}},
      {{{41, 12, 77, 30, 55, 63, 8}, {1, 0, 1, 1, 0, 0, 1}, {0, 0, 1, 0, 1, 1, 0}},
       {-3.0, 11.5, -20.2, 0.4, -14.9, -16.3, 9.8}},
      {{{0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5}}, {1e3 + 0.1, 1e3 + 0.4, 1e3 - 0.2, 1e3 + 0.9, 1e3 + 0.3, 1e3 + 1.2, 1e3 + 0.8, 1e3 + 1.6}},
  };
  double worst_ols = 0.0;
  for (const auto& c : ols) {
    const auto d = design_from(c.cols);
    const auto f = glm::fit_ols(d, c.y);
    const auto b = oracle::ols_normal_equations(rows_of(d), c.y);
    for (std::size_t j = 0; j < b.size(); ++j)
      worst_ols = std::max(worst_ols, std::abs(f.coefficients(static_cast<Eigen::Index>(j)) - b[j]));
  }

  struct LogitCase {
    std::vector<int> x, a;
  };
  const std::vector<LogitCase> logit{
      {{0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 1, 0}},
      {{-2, -1, -1, 0, 0, 1, 1, 2, 2, 3}, {0, 0, 1, 0, 1, 0, 1, 1, 0, 1}},
      {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}, {0, 0, 1, 0, 0, 1, 0, 1, 1, 0, 1, 1}},
  };
  double worst_logit = 0.0;
  bool converged = true;
  for (const auto& c : logit) {
    const std::vector<double> x(c.x.begin(), c.x.end());
    const auto f = glm::fit_logistic(design_from({x}), c.a);
    converged = converged && f.converged;
    const auto g = oracle::logistic_grid_mle(c.x, c.a);
    worst_logit = std::max({worst_logit, std::abs(f.coefficients(0) - g.b0), std::abs(f.coefficients(1) - g.b1)});
  }
  const double secs = timer.seconds();
  return {worst_ols <= 1e-10 && converged && worst_logit <= 1e-3 && secs < 1.0,
          "max OLS deviation " + fmt("%.2e", worst_ols) + " (tol 1e-10), max logistic deviation " +
              fmt("%.2e", worst_logit) + " (tol 1e-3), " + fmt("%.3f", secs) + " s"};
}

Outcome estimator_identities() {
  Timer timer;
  const auto data = trial(sim::DgpConfig{}, 400, kSeed);
  const auto ad = AnalysisData::from_crossover(data);

  // (a) intercept-only conditional-independence probabilities equal the unconditional ones.
  const auto flat = estimate_stratum_probs(ad, ProbMethod::CondIndep_A4p, std::vector<std::string>{});
  const auto indep = estimate_stratum_probs(ad, ProbMethod::Indep_A4pp);
  double dev_a = 0.0;
  for (int i = 0; i < 4; ++i) dev_a = std::max(dev_a, std::abs(flat.probs[i] - indep.probs[i]));

  // (b) a constant score makes the weighted mean the plain stratified mean.
  glm::LogisticFit f;
  f.coefficients = Eigen::VectorXd::Constant(1, 0.7);
  f.converged = true;
  bool exact_b = true;
  for (int t = 0; t < 2; ++t) {
    const PrincipalScoreModel constant(1 - t, f, {}, {});
    const auto arm = ad.arm(t);
    for (const auto& s : joint_strata()) {
      const int own = t == 0 ? s.k : s.l;
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& o : arm)
        if (*o.a == own) {
          sum += *o.y;
          ++count;
        }
      exact_b = exact_b && estimate_mu_hayden(arm, constant, s) == sum / static_cast<double>(count);
    }
  }

  // (c) direct stratum means weighted by observed proportions give the arm mean.
  const auto st = classify_strata(data.records);
  double dev_c = 0.0;
  for (int t = 0; t < 2; ++t) {
    double mixture = 0.0, plain = 0.0;
    for (const auto& s : joint_strata())
      if (st.count(s.k, s.l)) mixture += st.proportion(s.k, s.l) * estimate_mu_direct(data.records, s, t);
    for (const auto& r : data.records) plain += *r.y_under(t);
    plain /= static_cast<double>(data.records.size());
    dev_c = std::max(dev_c, std::abs(mixture - plain));
  }
  const double secs = timer.seconds();
  return {dev_a <= 1e-10 && exact_b && dev_c <= 1e-10 && secs < 1.0,
          "(a) " + fmt("%.2e", dev_a) + ", (b) " + (exact_b ? "exact" : "NOT exact") + ", (c) " + fmt("%.2e", dev_c) +
              ", " + fmt("%.3f", secs) + " s"};
}

Outcome bootstrap_oracle() {
  Timer timer;
  const std::vector<double> data{1.0, 2.0, 4.0};
  const double exact = oracle::exhaustive_bootstrap_mean_sd(data);
  const double closed = std::sqrt(stats::sample_sd(data) * stats::sample_sd(data) * 2.0 / 3.0 / 3.0);
  BootstrapSpec spec;
  spec.n_resamples = 100000;
  spec.seed = kSeed;
  const auto r = bootstrap<double>(data, [](const std::vector<double>& v) { return stats::mean(v); }, spec);
  const double rel = std::abs(r.se - exact) / exact;
  const double secs = timer.seconds();
  return {std::abs(exact - closed) <= 1e-12 && rel <= 0.02 && secs < 5.0,
          "enumerated SD " + fmt("%.6f", exact) + ", engine SE " + fmt("%.6f", r.se) + " (rel. error " +
              fmt("%.4f", rel) + ", tol 0.02), " + fmt("%.2f", secs) + " s"};
}

double sd_y(const CrossoverData& d) {
  std::vector<double> y;
  for (const auto& r : d.records)
    for (const auto& p : r.periods)
      if (p.y) y.push_back(*p.y);
  return stats::sample_sd(y);
}

Outcome consistency() {
  Timer timer;
  sim::DgpConfig c;
  c.rho_within = 0.7;
  c.rho_cross = 0.0;
  c.rho_strata = 0.0;
  const auto truth = sim::true_pce(c, 1000000, 0);
  const std::size_t reps = 20;
  std::vector<std::array<double, 4>> ps(reps), direct(reps);
  std::vector<double> sdy(reps);
  for (std::size_t k = 0; k < reps; ++k) {
    const auto d = trial(c, 5000, stream_seed(kSeed, k));
    PceConfig cfg;
    cfg.direct = true;
    const auto t = estimate_pce_table(AnalysisData::from_crossover(d), cfg);
    for (const auto& s : joint_strata()) {
      ps[k][joint_index(s.k, s.l)] = *t.find(Method::PS, s, Contrast::Diff).point;
      direct[k][joint_index(s.k, s.l)] = *t.find(Method::DIRECT, s, Contrast::Diff).point;
    }
    sdy[k] = sd_y(d);
  }
  std::array<double, 4> tol{};
  for (const auto& s : joint_strata()) {
    const int i = joint_index(s.k, s.l);
    std::vector<double> v(reps);
    for (std::size_t k = 0; k < reps; ++k) v[k] = ps[k][i];
    tol[i] = 3.0 * std::hypot(truth.cells[i].pce_se, stats::sample_sd(v));
  }
  std::size_t passing = 0;
  double worst_agree = 0.0;
  for (std::size_t k = 0; k < reps; ++k) {
    bool ok = true;
    for (int i = 0; i < 4; ++i) {
      const double agree = std::abs(ps[k][i] - direct[k][i]) / sdy[k];
      worst_agree = std::max(worst_agree, agree);
      ok = ok && agree <= 0.1 && std::abs(ps[k][i] - truth.cells[i].pce) <= tol[i];
    }
    passing += ok;
  }
  return {passing >= 18, std::to_string(passing) + "/20 replicates pass (need 18); max |PS-DIRECT|/SD(Y) " +
                             fmt("%.3f", worst_agree) + ", " + fmt("%.1f", timer.seconds()) + " s"};
}

Outcome ignorability_pattern() {
  Timer timer;
  const auto c = sim::scenario("a3p_violated");
  std::size_t passing = 0, own_ok = 0, cross_ok = 0;
  for (std::size_t k = 0; k < 100; ++k) {
    const auto d = trial(c, 300, stream_seed(kSeed, k));
    const auto rep = diag::ignorability_regressions(d.records, std::nullopt, d.covariate_names);
    bool own = true, cross = true;
    for (const auto& r : rep.regressions) {
      if (r.outcome_arm == r.stratum_arm) own = own && r.p_value < 0.001;
      else cross = cross && r.p_value > 0.05;
    }
    own_ok += own;
    cross_ok += cross;
    passing += own && cross;
  }
  return {passing >= 90, std::to_string(passing) + "/100 replicates pass (need 90); own-arm p < 0.001 in " +
                             std::to_string(own_ok) + ", cross-arm p > 0.05 in " + std::to_string(cross_ok) + ", " +
                             fmt("%.1f", timer.seconds()) + " s"};
}

Outcome monotonicity_finding() {
  Timer timer;
  std::size_t in_band = 0, monotone_ok = 0;
  double monotone_max = 0.0;
  const auto paper = sim::scenario("paper_like");
  const auto mono = sim::scenario("monotone");
  for (std::size_t k = 0; k < 100; ++k) {
    const auto d = trial(paper, 163, stream_seed(kSeed, k));
    const double v =
        diag::monotonicity_report(d.records, diag::MonotonicityDirection::IncreasingA1geA0).violating_cell_proportion;
    in_band += v >= 0.10 && v <= 0.25;
    const auto m = trial(mono, 163, stream_seed(kSeed, k));
    const double w =
        diag::monotonicity_report(m.records, diag::MonotonicityDirection::IncreasingA1geA0).violating_cell_proportion;
    monotone_ok += w < 0.01;
    monotone_max = std::max(monotone_max, w);
  }
  return {in_band >= 90 && monotone_ok == 100,
          "paper_like in [0.10, 0.25] in " + std::to_string(in_band) + "/100 (need 90); monotone < 0.01 in " +
              std::to_string(monotone_ok) + "/100 (max " + fmt("%.3f", monotone_max) + "), " +
              fmt("%.1f", timer.seconds()) + " s"};
}

double independence_rejection(const sim::DgpConfig& c) {
  std::size_t rejected = 0;
  for (std::size_t k = 0; k < 100; ++k) {
    const auto d = trial(c, 500, stream_seed(kSeed, k));
    diag::IndependenceOptions o;
    o.n_bootstrap = 500;
    o.seed = stream_seed(stream_seed(kSeed, k), 2);
    rejected += diag::independence_test(d.records, d.covariate_names, o).p_value < 0.05;
  }
  return static_cast<double>(rejected) / 100.0;
}

Outcome independence_calibration() {
  Timer timer;
  const double null_rate = independence_rejection(sim::scenario("paper_like"));
  const double power = independence_rejection(sim::scenario("a4p_violated"));
  return {null_rate >= 0.01 && null_rate <= 0.12 && power > 0.60,
          "null rejection " + fmt("%.2f", null_rate) + " (need [0.01, 0.12]), rejection at rho_strata = 0.8 " +
              fmt("%.2f", power) + " (need > 0.60), " + fmt("%.1f", timer.seconds()) + " s"};
}

Outcome crossover_calibration() {
  Timer timer;
  sim::DgpConfig null_cfg;
  const double sd = std::sqrt(null_cfg.outcome_slope[0] * null_cfg.outcome_slope[0] * null_cfg.x_sd * null_cfg.x_sd +
                              null_cfg.outcome_sd[0] * null_cfg.outcome_sd[0]);
  sim::DgpConfig shifted = null_cfg;
  shifted.period_effect = sd;
  std::size_t period_null = 0, sequence_null = 0, period_power = 0;
  for (std::size_t k = 0; k < 100; ++k) {
    const auto n = diag::crossover_effects_test(trial(null_cfg, 200, stream_seed(kSeed, k)).records);
    period_null += n.period_p < 0.05;
    sequence_null += n.sequence_p < 0.05;
    const auto p = diag::crossover_effects_test(trial(shifted, 200, stream_seed(kSeed, k)).records);
    period_power += p.period_p < 0.05;
  }
  const auto in_band = [](std::size_t r) { return r >= 1 && r <= 12; };
  return {in_band(period_null) && in_band(sequence_null) && period_power >= 95,
          "null rejection period " + fmt("%.2f", period_null / 100.0) + ", sequence " +
              fmt("%.2f", sequence_null / 100.0) + " (need [0.01, 0.12]); power at 1 SD period effect " +
              fmt("%.2f", period_power / 100.0) + " (need >= 0.95), " + fmt("%.1f", timer.seconds()) + " s"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_determinism() {
  Timer timer;
  const fs::path root = fs::temp_directory_path() / ("pce_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string cli = PCE_CLI_PATH;
  const std::vector<std::pair<std::string, std::vector<std::string>>> steps{
      {"simulate --n 163 --seed 11 --oracle-n 50000 --out trial.csv --parallel-out parallel.csv",
       {"trial.csv", "trial.truth.json", "parallel.csv"}},
      {"estimate --input trial.csv --method both --bootstrap 200 --seed 3 --format csv --output estimate.csv",
       {"estimate.csv"}},
      {"estimate --input parallel.csv --bootstrap 200 --seed 3 --format json --output estimate_parallel.json",
       {"estimate_parallel.json"}},
      {"diagnose --input trial.csv --bootstrap 200 --seed 4 --format json --output diagnose.json", {"diagnose.json"}},
      {"replicate --n 163 --reps 3 --bootstrap 50 --independence-bootstrap 50 --oracle-n 20000 --format json "
       "--output replicate.json",
       {"replicate.json"}},
  };
  std::vector<std::string> runs[2];
  std::string failure;
  for (int pass = 0; pass < 2 && failure.empty(); ++pass) {
    const fs::path dir = root / ("run" + std::to_string(pass));
    fs::create_directories(dir);
    for (const auto& [args, files] : steps) {
      const std::string cmd =
          "cd '" + dir.string() + "' && '" + cli + "' " + args + " --threads " + std::to_string(pass + 1) + " >/dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) {
        failure = "command failed: pce " + args;
        break;
      }
      for (const auto& f : files) runs[pass].push_back(slurp(dir / f));
    }
  }
  fs::remove_all(root);
  if (!failure.empty()) return {false, failure};
  std::size_t identical = 0;
  for (std::size_t i = 0; i < runs[0].size(); ++i) identical += !runs[0][i].empty() && runs[0][i] == runs[1][i];
  const double secs = timer.seconds();
  return {identical == runs[0].size() && secs < 10.0,
          std::to_string(identical) + "/" + std::to_string(runs[0].size()) +
              " output files byte-identical across reruns (thread counts 1 and 2), " + fmt("%.2f", secs) + " s"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"regression oracles", regression_oracles},
      {"estimator identities", estimator_identities},
      {"bootstrap oracle", bootstrap_oracle},
      {"PS/DIRECT consistency under conditional independence", consistency},
      {"ignorability diagnostics pattern", ignorability_pattern},
      {"monotonicity finding", monotonicity_finding},
      {"independence-test calibration", independence_calibration},
      {"crossover effects test calibration", crossover_calibration},
      {"CLI determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
