#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "bootstrap_oracle.hpp"
#include "pce/errors.hpp"
#include "pce/resampling.hpp"
#include "pce/rng.hpp"

using namespace pce;

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

BootstrapSpec spec_of(std::size_t b, std::uint64_t seed, unsigned threads = 1) {
  BootstrapSpec s;
  s.n_resamples = b;
  s.seed = seed;
  s.threads = threads;
  return s;
}

}  // namespace

TEST_CASE("resample indices are in range and reproducible") {
  const auto a = resample_indices(50, 3, 7), b = resample_indices(50, 3, 7), c = resample_indices(50, 3, 8);
  CHECK(a == b);
  CHECK(a != c);
  for (auto i : a) CHECK(i < 50);
}

TEST_CASE("constant statistic") {
  std::vector<double> data{1, 2, 3, 4};
  const auto r = bootstrap<double>(data, [](const std::vector<double>&) { return 5.0; }, spec_of(200, 1));
  CHECK(r.se == 0.0);
  CHECK(r.ci_lo == 5.0);
  CHECK(r.ci_hi == 5.0);
  CHECK(r.n_effective == 200);
}

TEST_CASE("exhaustive 27-resample oracle for the mean of {1,2,3}") {
  const std::vector<double> data{1, 2, 3};
  CHECK(oracle::exhaustive_resample_count(3) == 27);
  const double exact = oracle::exhaustive_bootstrap_mean_sd(data);
  CHECK(exact == doctest::Approx(std::sqrt(2.0 / 9.0)).epsilon(1e-12));
  const auto r = bootstrap<double>(data, mean_of, spec_of(100000, 2026, 0));
  CHECK(std::abs(r.se / exact - 1.0) < 0.02);
}

TEST_CASE("determinism across runs and thread counts") {
  Xoshiro256 g(4);
  std::vector<double> data(80);
  for (auto& v : data) v = g.normal();
  auto s1 = spec_of(500, 9, 1);
  s1.keep_replicates = true;
  auto s4 = s1;
  s4.threads = 4;
  const auto a = bootstrap<double>(data, mean_of, s1);
  const auto b = bootstrap<double>(data, mean_of, s1);
  const auto c = bootstrap<double>(data, mean_of, s4);
  for (const auto* r : {&b, &c}) {
    CHECK(a.se == r->se);
    CHECK(a.ci_lo == r->ci_lo);
    CHECK(a.ci_hi == r->ci_hi);
    CHECK(a.replicates.size() == r->replicates.size());
    CHECK(std::equal(a.replicates.begin(), a.replicates.end(), r->replicates.begin()));
  }
}

TEST_CASE("location shift moves the percentile interval by the same constant") {
  Xoshiro256 g(6);
  std::vector<double> data(40);
  for (auto& v : data) v = g.normal();
  const auto a = bootstrap<double>(data, mean_of, spec_of(400, 3));
  const auto b = bootstrap<double>(
      data, [](const std::vector<double>& v) { return mean_of(v) + 10.0; }, spec_of(400, 3));
  CHECK(b.ci_lo - a.ci_lo == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(b.ci_hi - a.ci_hi == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(b.se == doctest::Approx(a.se).epsilon(1e-10));
  CHECK(a.ci_lo <= a.ci_hi);
}

TEST_CASE("standard error of a normal mean") {
  Xoshiro256 g(12345);
  std::vector<double> data(200);
  for (auto& v : data) v = g.normal();
  const auto r = bootstrap<double>(data, mean_of, spec_of(2000, 77, 0));
  CHECK(std::abs(r.se * std::sqrt(200.0) - 1.0) < 0.15);
}

TEST_CASE("inestimable replicates") {
  std::vector<double> data(30);
  std::iota(data.begin(), data.end(), 0.0);
  SUBCASE("a few failures are excluded and counted") {
    const auto r = bootstrap<double>(
        data,
        [](const std::vector<double>& v) {
          // Resamples that miss all of {0, 1, 2} fail: about 4% of them.
          const bool has_low = std::find_if(v.begin(), v.end(), [](double x) { return x < 3; }) != v.end();
          if (!has_low) throw InestimableError("no low values");
          return mean_of(v);
        },
        spec_of(1000, 5));
    CHECK(r.n_effective < 1000);
    CHECK(r.n_effective + r.failures.at("no low values") == 1000);
  }
  SUBCASE("more than 10% failures names the dominant reason") {
    try {
      bootstrap<double>(
          data,
          [](const std::vector<double>& v) {
            if (v[0] != 0.0) throw InestimableError("first draw too small");
            return mean_of(v);
          },
          spec_of(200, 5));
      FAIL("expected InestimableError");
    } catch (const InestimableError& e) {
      CHECK(std::string(e.what()).find("first draw too small") != std::string::npos);
    }
  }
  SUBCASE("statistic undefined on the original data") {
    CHECK_THROWS_AS(bootstrap<double>(
                        data, [](const std::vector<double>&) -> double { throw Error("never"); }, spec_of(50, 1)),
                    Error);
  }
  SUBCASE("fewer than 20 resamples warns") {
    const auto r = bootstrap<double>(data, mean_of, spec_of(10, 1));
    CHECK_FALSE(r.warnings.empty());
  }
}

TEST_CASE("nearest rank percentiles") {
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(nearest_rank(v, 0.025) == 1);
  CHECK(nearest_rank(v, 0.5) == 5);
  CHECK(nearest_rank(v, 0.975) == 10);
  CHECK(nearest_rank(v, 0.3) == 3);
  CHECK_THROWS_AS(nearest_rank(std::vector<double>{}, 0.5), Error);
}

TEST_CASE("exceedance p-values") {
  std::vector<double> low(99, 0.0);
  CHECK(exceedance_p(low, 1.0) == doctest::Approx(0.01));
  std::vector<double> high(50, 2.0);
  CHECK(exceedance_p(high, 1.0) == 1.0);
  CHECK(exceedance_p(std::vector<double>{0.1, 0.2, 0.3}, 0.2) == 0.75);
}

TEST_CASE("replicate audit csv") {
  std::ostringstream out;
  write_replicates_csv(out, std::vector<double>{1.5, std::nan(""), -2});
  CHECK(out.str() == "replicate_index,value\n0,1.5\n1,NA\n2,-2\n");
}

TEST_CASE("invalid specs") {
  std::vector<double> data{1, 2};
  CHECK_THROWS_AS(bootstrap<double>(data, mean_of, spec_of(0, 1)), Error);
  auto s = spec_of(10, 1);
  s.confidence = 1.0;
  CHECK_THROWS_AS(bootstrap<double>(data, mean_of, s), Error);
}
