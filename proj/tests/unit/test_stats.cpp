#include <doctest.h>

#include <cmath>
#include <vector>

#include "pce/errors.hpp"
#include "pce/stats.hpp"

using namespace pce;
using namespace pce::stats;

TEST_CASE("mean and sample sd") {
  std::vector<double> v{1, 2, 3, 4};
  CHECK(mean(v) == 2.5);
  CHECK(sample_sd(v) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-14));
  CHECK(sample_sd(std::vector<double>{3.0}) == 0.0);
}

TEST_CASE("t distribution tail probabilities") {
  // t = 2.228138852 is the 97.5% quantile with 10 dof.
  CHECK(t_two_sided_p(2.2281388519649385, 10) == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(t_two_sided_p(-2.2281388519649385, 10) == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(t_two_sided_p(0.0, 5) == 1.0);
  // dof 1 is Cauchy: P(|T| > 1) = 1/2.
  CHECK(t_two_sided_p(1.0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("normal helpers and expit") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(expit(0.0) == 0.5);
  CHECK(expit(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(expit(-800.0) >= 0.0);
  CHECK(expit(800.0) == 1.0);
  CHECK(std::isfinite(expit(-800.0)));
}

TEST_CASE("pooled two-sample t test") {
  std::vector<double> a{1, 2, 3, 4, 5}, b{2, 4, 6};
  const auto r = two_sample_t(a, b);
  // Hand computation: means 3 and 4; pooled var = (10 + 8) / 6 = 3; se = sqrt(3 (1/5 + 1/3)).
  CHECK(r.difference == -1.0);
  CHECK(r.dof == 6.0);
  CHECK(r.se == doctest::Approx(std::sqrt(3.0 * (1.0 / 5 + 1.0 / 3))).epsilon(1e-14));
  CHECK(r.t == doctest::Approx(-1.0 / r.se).epsilon(1e-14));
  CHECK(r.p_value == doctest::Approx(t_two_sided_p(r.t, 6)).epsilon(1e-14));
  CHECK_THROWS_AS(two_sample_t(std::vector<double>{1}, b), InsufficientDataError);
}
