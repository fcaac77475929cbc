#include "doctest.h"

#include <cmath>
#include <numbers>

#include "ibug/distribution.hpp"
#include "ibug/error.hpp"
#include "ibug/posterior.hpp"
#include "test_support.hpp"

using namespace ibug;

TEST_CASE("family tags") {
  CHECK(all_families().size() == 9);
  CHECK(all_families().front() == DistributionFamily::kNormal);
  for (auto f : all_families()) CHECK(parse_family(to_string(f)) == f);
  CHECK_THROWS_AS(parse_family("cauchy"), InvalidInput);
}

TEST_CASE("closed-form values") {
  const auto n = FittedDistribution::normal(0.0, 1.0);
  CHECK(n.pdf(0.0) == doctest::Approx(0.3989).epsilon(1e-4));
  CHECK(n.cdf(0.0) == 0.5);
  const auto g = FittedDistribution::gumbel(1.5, 2.0);
  CHECK(g.cdf(1.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  const auto k = FittedDistribution::kde({-1.0, 1.0}, 0.7);
  for (double y : {0.1, 0.5, 1.3, 2.9}) CHECK(std::abs(k.pdf(y) - k.pdf(-y)) <= 1e-12);
  CHECK(k.mean() == 0.0);
  CHECK(k.variance() == doctest::Approx(1.0 + 0.49));
  const FittedDistribution def;
  CHECK(def.family() == DistributionFamily::kNormal);
  CHECK(def.quantile(0.0) == -INFINITY);
  CHECK(def.quantile(1.0) == INFINITY);
}

TEST_CASE("normalization, monotone cdf and quantile inversion for every family") {
  for (const auto& d : testing::sample_fits()) {
    CAPTURE(to_string(d.family()));
    CHECK(std::abs(testing::pdf_mass(d) - 1.0) <= 1e-6);
    CHECK(testing::worst_inversion(d) <= 1e-8);
    double prev = 0.0;
    const double lo = d.quantile(1e-6);
    const double hi = d.quantile(1.0 - 1e-6);
    for (int i = 0; i <= 200; ++i) {
      const double y = lo + (hi - lo) * i / 200.0;
      const double c = d.cdf(y);
      CHECK(c >= prev);
      CHECK(d.pdf(y) >= 0.0);
      prev = c;
    }
    CHECK(d.cdf(lo - 1e6) == doctest::Approx(0.0));
    CHECK(d.cdf(hi + 1e6) == doctest::Approx(1.0));
  }
}

TEST_CASE("fit policies") {
  NeighborSet nb{{0, 1, 2, 3}, {-1.0, 0.5, 0.7, 2.0}};
  const auto lap = fit_distribution(DistributionFamily::kLaplace, nb, 0.0, 2.0);
  CHECK(lap.params()[1].second == doctest::Approx(1.0));
  for (auto f : all_families()) {
    const auto d = fit_distribution(f, nb, 0.3, 0.8);
    CAPTURE(to_string(f));
    if (f == DistributionFamily::kWeibull || f == DistributionFamily::kLogNormal) continue;
    CHECK(std::abs(d.mean() - 0.3) <= 1e-6);
    if (f != DistributionFamily::kKde) CHECK(d.variance() == doctest::Approx(0.8).epsilon(1e-6));
  }
  CHECK_THROWS_AS(fit_distribution(DistributionFamily::kNormal, nb, 0.0, 0.0), InvalidInput);
}

TEST_CASE("weibull MLE recovers known parameters") {
  std::mt19937_64 rng(77);
  std::weibull_distribution<double> w(1.5, 2.0);
  NeighborSet nb;
  for (std::uint32_t i = 0; i < 10000; ++i) {
    nb.ids.push_back(i);
    nb.targets.push_back(w(rng));
  }
  const auto d = fit_distribution(DistributionFamily::kWeibull, nb, 0.0, 1.0);
  const auto p = d.params();
  CHECK(p[0].second == doctest::Approx(1.5).epsilon(0.05));
  CHECK(p[1].second == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("lognormal and weibull shift non-positive samples") {
  NeighborSet nb{{0, 1, 2, 3, 4}, {-3.0, -1.0, 0.0, 0.5, 2.0}};
  for (auto f : {DistributionFamily::kLogNormal, DistributionFamily::kWeibull}) {
    const auto d = fit_distribution(f, nb, 0.0, 1.0);
    CHECK(d.support().first < -3.0);
    CHECK(std::isfinite(d.pdf(-3.0)));
    CHECK(d.pdf(-3.0) > 0.0);
  }
}

TEST_CASE("student-t heavy tails and degenerate samples") {
  std::mt19937_64 rng(3);
  std::student_t_distribution<double> t(3.0);
  NeighborSet nb;
  for (std::uint32_t i = 0; i < 2000; ++i) {
    nb.ids.push_back(i);
    nb.targets.push_back(t(rng));
  }
  const auto d = fit_distribution(DistributionFamily::kStudentT, nb, 0.0, 3.0);
  CHECK(d.params()[2].second < 10.0);

  NeighborSet flat{{0, 1, 2}, {1.0, 1.0, 1.0}};
  for (auto f : all_families()) {
    CAPTURE(to_string(f));
    if (f == DistributionFamily::kLogNormal || f == DistributionFamily::kWeibull) {
      CHECK_THROWS_AS(fit_distribution(f, flat, 1.0, 1e-15), FitError);
    } else {
      CHECK(std::isfinite(fit_distribution(f, flat, 1.0, 1e-15).pdf(1.0)));
    }
  }
}
