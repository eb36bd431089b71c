#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pce/core.hpp"

namespace pce::sim {

// Synthetic 2x2 crossover trial.
//
// Per subject: X ~ N(x_mean, x_sd^2) and a Gaussian noise vector
// (e_A0, e_A1, e_Y0, e_Y1) with unit variances and correlations
//   corr(e_At, e_Yt)     = rho_within   (A3' violation)
//   corr(e_At, e_Y(1-t)) = rho_cross    (A3'' violation)
//   corr(e_A0, e_A1)     = rho_strata   (A4' violation)
//   corr(e_Y0, e_Y1)     = rho_outcome
// Then A(t) = 1{Phi(e_At) < expit(stratum_intercept[t] + stratum_slope[t] X)},
// so Pr(A(t) = 1 | X) is exactly logistic, and
// Y(t) = outcome_intercept[t] + outcome_slope[t] X + outcome_sd[t] e_Yt.
// Observed period 2 outcome = potential outcome + period_effect + carryover * (period 1 outcome).
struct DgpConfig {
  std::size_t n_subjects = 163;
  double x_mean = 41.3;
  double x_sd = 22.4;
  std::array<double, 2> stratum_intercept{1.317, 1.610};
  std::array<double, 2> stratum_slope{-0.04, -0.04};
  std::array<double, 2> outcome_intercept{8.99, 10.69};
  std::array<double, 2> outcome_slope{-0.3, -0.3};
  std::array<double, 2> outcome_sd{24.49, 23.87};
  double rho_within = 0.8;
  double rho_cross = 0.0;
  double rho_strata = 0.0;
  double rho_outcome = 0.0;
  double period_effect = 0.0;
  double carryover = 0.0;
  std::array<double, 2> missing_y_prob{0.0, 0.0};
  std::uint64_t seed = 1;
  std::string covariate_name = "baseline";

  // Throws ConfigError (including when the noise correlation matrix is not PSD).
  void validate() const;
};

// Lower-triangular factor L with L L' = noise correlation matrix, order (A0, A1, Y0, Y1).
// Semidefinite matrices are allowed (zero columns). Throws ConfigError if not PSD.
std::array<std::array<double, 4>, 4> noise_factor(const DgpConfig& config);

struct PotentialOutcomes {
  double x = 0.0;
  std::array<int, 2> a{};
  std::array<double, 2> y{};
};

struct SimulatedTrial {
  CrossoverData data;
  std::vector<PotentialOutcomes> potential;  // aligned with data.records
};

SimulatedTrial simulate_trial(const DgpConfig& config);
CrossoverData generate_trial(const DgpConfig& config);

struct TruthCell {
  double prob = 0.0;
  double prob_se = 0.0;
  double pce = 0.0;     // E[Y(1) - Y(0) | S_kl]
  double pce_se = 0.0;
  double mean_y0 = 0.0;
  double mean_y1 = 0.0;
  std::size_t count = 0;
};

struct TruthTable {
  std::array<TruthCell, 4> cells;  // indexed by joint_index(k, l)
  std::size_t oracle_n = 0;

  const TruthCell& cell(int k, int l) const { return cells[joint_index(k, l)]; }
};

// Monte Carlo over oracle_n fresh subjects drawn from the potential-outcome
// law (no period effect, carry-over, or missingness). Shards use independent
// substreams and are merged in shard order.
// A cell with fewer than two oracle subjects throws ConfigError unless
// empty == Report, in which case its conditional quantities are NaN.
enum class EmptyCell { Throw, Report };
TruthTable true_pce(const DgpConfig& config, std::size_t oracle_n, unsigned threads = 0,
                    EmptyCell empty = EmptyCell::Throw);

const std::vector<std::string>& scenario_names();
// Throws ConfigError for an unknown name.
DgpConfig scenario(const std::string& name);

std::string config_to_json(const DgpConfig& config);
// Keys mirror DgpConfig fields; an optional "scenario" key selects the base preset.
DgpConfig config_from_json(const std::string& text);
DgpConfig load_config(const std::filesystem::path& path);
// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
std::string config_digest(const DgpConfig& config);

std::string truth_to_json(const TruthTable& truth);
std::string truth_to_csv(const TruthTable& truth);

}  // namespace pce::sim
