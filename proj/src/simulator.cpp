#include "pce/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "pce/csv.hpp"
#include "pce/errors.hpp"
#include "pce/resampling.hpp"
#include "pce/rng.hpp"
#include "pce/stats.hpp"

namespace pce::sim {

using Factor = std::array<std::array<double, 4>, 4>;

namespace {

constexpr std::uint64_t kOracleStream = 0x6f7261636c65ULL;  // "oracle"
constexpr std::size_t kShardSize = 1 << 16;

PotentialOutcomes draw_subject(Xoshiro256& rng, const DgpConfig& c, const Factor& L) {
  PotentialOutcomes po;
  po.x = c.x_mean + c.x_sd * rng.normal();
  std::array<double, 4> z{};
  for (auto& v : z) v = rng.normal();
  std::array<double, 4> e{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j <= i; ++j) e[i] += L[i][j] * z[j];
  for (int t = 0; t < 2; ++t) {
    const double g = stats::expit(c.stratum_intercept[t] + c.stratum_slope[t] * po.x);
    po.a[t] = stats::normal_cdf(e[t]) < g ? 1 : 0;
    po.y[t] = c.outcome_intercept[t] + c.outcome_slope[t] * po.x + c.outcome_sd[t] * e[2 + t];
  }
  return po;
}

std::string subject_id(std::size_t i, std::size_t n) {
  const int width = static_cast<int>(std::to_string(n).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%0*zu", width, i + 1);
  return buf;
}

struct CellAccumulator {
  std::size_t count = 0;
  double sum_d = 0, sum_d2 = 0, sum_y0 = 0, sum_y1 = 0;
};

}  // namespace

void DgpConfig::validate() const {
  if (n_subjects < 1) throw ConfigError("n_subjects must be positive");
  if (!(x_sd > 0)) throw ConfigError("x_sd must be positive");
  for (int t = 0; t < 2; ++t) {
    if (!(outcome_sd[t] > 0)) throw ConfigError("outcome_sd must be positive");
    if (!(missing_y_prob[t] >= 0 && missing_y_prob[t] <= 1)) throw ConfigError("missing_y_prob must lie in [0, 1]");
  }
  for (double r : {rho_within, rho_cross, rho_strata, rho_outcome})
    if (!(r >= -1 && r <= 1)) throw ConfigError("correlations must lie in [-1, 1]");
  const std::array<double, 14> finite{x_mean, stratum_intercept[0], stratum_intercept[1], stratum_slope[0],
                                      stratum_slope[1], outcome_intercept[0], outcome_intercept[1],
                                      outcome_slope[0], outcome_slope[1], period_effect, carryover, x_sd,
                                      outcome_sd[0], outcome_sd[1]};
  for (double v : finite)
    if (!std::isfinite(v)) throw ConfigError("configuration contains a non-finite value");
  noise_factor(*this);
}

Factor noise_factor(const DgpConfig& c) {
  // Order: A0, A1, Y0, Y1.
  const double C[4][4] = {{1, c.rho_strata, c.rho_within, c.rho_cross},
                          {c.rho_strata, 1, c.rho_cross, c.rho_within},
                          {c.rho_within, c.rho_cross, 1, c.rho_outcome},
                          {c.rho_cross, c.rho_within, c.rho_outcome, 1}};
  constexpr double tol = 1e-10;
  Factor L{};
  for (int j = 0; j < 4; ++j) {
    double d = C[j][j];
    for (int k = 0; k < j; ++k) d -= L[j][k] * L[j][k];
    if (d < -tol) throw ConfigError("noise correlation matrix is not positive semi-definite");
    if (d <= tol) {
      for (int i = j + 1; i < 4; ++i) {
        double r = C[i][j];
        for (int k = 0; k < j; ++k) r -= L[i][k] * L[j][k];
        if (std::fabs(r) > 1e-8) throw ConfigError("noise correlation matrix is not positive semi-definite");
      }
      continue;
    }
    L[j][j] = std::sqrt(d);
    for (int i = j + 1; i < 4; ++i) {
      double r = C[i][j];
      for (int k = 0; k < j; ++k) r -= L[i][k] * L[j][k];
      L[i][j] = r / L[j][j];
    }
  }
  return L;
}

SimulatedTrial simulate_trial(const DgpConfig& c) {
  c.validate();
  const Factor L = noise_factor(c);
  Xoshiro256 rng(c.seed);
  SimulatedTrial out;
  out.data.covariate_names = {c.covariate_name};
  out.data.records.reserve(c.n_subjects);
  out.potential.reserve(c.n_subjects);
  for (std::size_t i = 0; i < c.n_subjects; ++i) {
    const PotentialOutcomes po = draw_subject(rng, c, L);
    const bool control_first = rng.uniform() < 0.5;
    const std::array<double, 2> u_missing{rng.uniform(), rng.uniform()};

    SubjectRecord r;
    r.subject_id = subject_id(i, c.n_subjects);
    r.covariates = {po.x};
    r.sequence = control_first ? Sequence::ControlFirst : Sequence::ExperimentalFirst;
    const int first = control_first ? 0 : 1;
    const int second = 1 - first;
    const double y1 = po.y[first];
    const double y2 = po.y[second] + c.period_effect + c.carryover * y1;
    r.periods[0] = {first, po.a[first], y1};
    r.periods[1] = {second, po.a[second], y2};
    for (int q = 0; q < 2; ++q) {
      const int t = r.periods[q].treatment;
      if (u_missing[t] < c.missing_y_prob[t]) r.periods[q].y.reset();
    }
    out.data.records.push_back(std::move(r));
    out.potential.push_back(po);
  }
  return out;
}

CrossoverData generate_trial(const DgpConfig& config) { return simulate_trial(config).data; }

TruthTable true_pce(const DgpConfig& c, std::size_t oracle_n, unsigned threads, EmptyCell empty) {
  if (oracle_n < 10000) throw ConfigError("oracle_n must be at least 10000");
  c.validate();
  const Factor L = noise_factor(c);
  const std::size_t shards = (oracle_n + kShardSize - 1) / kShardSize;
  std::vector<std::array<CellAccumulator, 4>> partial(shards);
  parallel_for(shards, threads, [&](std::size_t s) {
    Xoshiro256 rng(stream_seed(c.seed ^ kOracleStream, s));
    const std::size_t begin = s * kShardSize, end = std::min(oracle_n, begin + kShardSize);
    auto& acc = partial[s];
    for (std::size_t i = begin; i < end; ++i) {
      const auto po = draw_subject(rng, c, L);
      auto& cell = acc[joint_index(po.a[0], po.a[1])];
      const double d = po.y[1] - po.y[0];
      ++cell.count;
      cell.sum_d += d;
      cell.sum_d2 += d * d;
      cell.sum_y0 += po.y[0];
      cell.sum_y1 += po.y[1];
    }
  });
  std::array<CellAccumulator, 4> total{};
  for (const auto& acc : partial)
    for (std::size_t i = 0; i < 4; ++i) {
      total[i].count += acc[i].count;
      total[i].sum_d += acc[i].sum_d;
      total[i].sum_d2 += acc[i].sum_d2;
      total[i].sum_y0 += acc[i].sum_y0;
      total[i].sum_y1 += acc[i].sum_y1;
    }
  TruthTable truth;
  truth.oracle_n = oracle_n;
  const auto N = static_cast<double>(oracle_n);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& a = total[i];
    const auto n = static_cast<double>(a.count);
    auto& cell = truth.cells[i];
    cell.count = a.count;
    cell.prob = n / N;
    cell.prob_se = std::sqrt(cell.prob * (1 - cell.prob) / N);
    if (a.count < 2 && empty == EmptyCell::Report) {
      cell.pce = cell.pce_se = cell.mean_y0 = cell.mean_y1 = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    if (a.count < 2)
      throw ConfigError("stratum " + joint_strata()[i].name() + " is (nearly) empty at oracle_n=" +
                        std::to_string(oracle_n) + "; increase oracle_n or check for a degenerate config");
    cell.pce = a.sum_d / n;
    const double var = std::max(0.0, (a.sum_d2 - n * cell.pce * cell.pce) / (n - 1));
    cell.pce_se = std::sqrt(var / n);
    cell.mean_y0 = a.sum_y0 / n;
    cell.mean_y1 = a.sum_y1 / n;
  }
  return truth;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"paper_like",    "monotone",      "a3p_violated",
                                              "a3pp_violated", "a4p_violated",  "carryover_heavy"};
  return names;
}

DgpConfig scenario(const std::string& name) {
  DgpConfig c;  // defaults are the paper_like preset
  if (name == "paper_like") return c;
  if (name == "monotone") {
    // Shared stratum noise and ordered thresholds: A(1) >= A(0) for everyone.
    c.stratum_slope = {-0.08, -0.08};
    c.stratum_intercept = {2.35, 3.615};
    c.rho_strata = 1.0;
    c.rho_within = 0.0;
    c.rho_cross = 0.0;
    return c;
  }
  if (name == "a3p_violated") {
    c.rho_within = 0.9;
    c.rho_cross = 0.0;
    return c;
  }
  if (name == "a3pp_violated") {
    c.rho_cross = 0.4;
    c.rho_outcome = 0.64;
    return c;
  }
  if (name == "a4p_violated") {
    c.rho_strata = 0.8;
    c.rho_within = 0.0;
    return c;
  }
  if (name == "carryover_heavy") {
    c.carryover = 0.5;
    return c;
  }
  std::string known;
  for (const auto& n : scenario_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown scenario '" + name + "' (known: " + known + ")");
}

namespace {

nlohmann::ordered_json to_json(const DgpConfig& c) {
  nlohmann::ordered_json j;
  j["n_subjects"] = c.n_subjects;
  j["x_mean"] = c.x_mean;
  j["x_sd"] = c.x_sd;
  j["stratum_intercept"] = c.stratum_intercept;
  j["stratum_slope"] = c.stratum_slope;
  j["outcome_intercept"] = c.outcome_intercept;
  j["outcome_slope"] = c.outcome_slope;
  j["outcome_sd"] = c.outcome_sd;
  j["rho_within"] = c.rho_within;
  j["rho_cross"] = c.rho_cross;
  j["rho_strata"] = c.rho_strata;
  j["rho_outcome"] = c.rho_outcome;
  j["period_effect"] = c.period_effect;
  j["carryover"] = c.carryover;
  j["missing_y_prob"] = c.missing_y_prob;
  j["seed"] = c.seed;
  j["covariate_name"] = c.covariate_name;
  return j;
}

template <class T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

std::string config_to_json(const DgpConfig& c) { return to_json(c).dump(2); }

DgpConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  DgpConfig c;
  if (j.contains("scenario")) {
    if (!j["scenario"].is_string()) throw ConfigError("config key 'scenario' must be a string");
    c = scenario(j["scenario"].get<std::string>());
  }
  const auto known = to_json(c);
  for (const auto& [key, value] : j.items())
    if (key != "scenario" && !known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  read_key(j, "n_subjects", c.n_subjects);
  read_key(j, "x_mean", c.x_mean);
  read_key(j, "x_sd", c.x_sd);
  read_key(j, "stratum_intercept", c.stratum_intercept);
  read_key(j, "stratum_slope", c.stratum_slope);
  read_key(j, "outcome_intercept", c.outcome_intercept);
  read_key(j, "outcome_slope", c.outcome_slope);
  read_key(j, "outcome_sd", c.outcome_sd);
  read_key(j, "rho_within", c.rho_within);
  read_key(j, "rho_cross", c.rho_cross);
  read_key(j, "rho_strata", c.rho_strata);
  read_key(j, "rho_outcome", c.rho_outcome);
  read_key(j, "period_effect", c.period_effect);
  read_key(j, "carryover", c.carryover);
  read_key(j, "missing_y_prob", c.missing_y_prob);
  read_key(j, "seed", c.seed);
  read_key(j, "covariate_name", c.covariate_name);
  c.validate();
  return c;
}

DgpConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_digest(const DgpConfig& c) {
  const std::string text = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string truth_to_json(const TruthTable& truth) {
  nlohmann::ordered_json j;
  j["oracle_n"] = truth.oracle_n;
  auto& strata = j["strata"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& c = truth.cells[i];
    strata.push_back({{"stratum", joint_strata()[i].name()},
                      {"prob", c.prob},
                      {"prob_se", c.prob_se},
                      {"pce", c.pce},
                      {"pce_se", c.pce_se},
                      {"mean_y0", c.mean_y0},
                      {"mean_y1", c.mean_y1},
                      {"count", c.count}});
  }
  return j.dump(2) + "\n";
}

namespace {
std::string real_or_na(double v) { return std::isfinite(v) ? format_real(v) : "NA"; }
}  // namespace

std::string truth_to_csv(const TruthTable& truth) {
  std::ostringstream out;
  out << "stratum,prob,prob_se,pce,pce_se,mean_y0,mean_y1,count\n";
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& c = truth.cells[i];
    out << joint_strata()[i].name() << ',' << format_real(c.prob) << ',' << format_real(c.prob_se) << ','
        << real_or_na(c.pce) << ',' << real_or_na(c.pce_se) << ',' << real_or_na(c.mean_y0) << ','
        << real_or_na(c.mean_y1) << ',' << c.count << '\n';
  }
  return out.str();
}

}  // namespace pce::sim
