#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cbm/case_config.hpp"
#include "cbm/errors.hpp"
#include "cbm/evaluation.hpp"
#include "cbm/gamma_process.hpp"

using namespace cbm;

TEST(GammaProcess, IncrementShapeFromInspectionInterval) {
  EXPECT_NEAR(increment_shape({0.0115, 4.63, 100.0}), 1.15, 1e-12);
  EXPECT_NEAR(increment_shape({0.0115, 4.63, 150.0}), 1.725, 1e-12);
  EXPECT_THROW(increment_shape({0.0115, 4.63, 0.0}), ParameterError);
  EXPECT_THROW(increment_shape({0.0115, -1.0, 100.0}), ParameterError);
}

TEST(GammaProcess, IncompleteGammaAgreesWithBoost) {
  for (double a : {0.05, 0.5, 1.0, 1.15, 1.725, 3.0, 12.5, 80.0}) {
    for (double x : {1e-6, 0.01, 0.3, 1.0, 2.0, 5.0, 20.0, 100.0}) {
      const double p = boost::math::gamma_p(a, x);
      const double q = boost::math::gamma_q(a, x);
      EXPECT_NEAR(regularized_gamma_p(a, x), p, 1e-13 + 1e-12 * p) << "a=" << a << " x=" << x;
      EXPECT_NEAR(regularized_gamma_q(a, x), q, 1e-13 + 1e-12 * q) << "a=" << a << " x=" << x;
    }
  }
}

TEST(GammaProcess, CdfBoundaryValues) {
  const GammaProcessParams p{};
  EXPECT_EQ(increment_cdf(p, 0.0), 0.0);
  EXPECT_EQ(increment_survival(p, 0.0), 1.0);
  EXPECT_NEAR(increment_cdf(p, 1e3), 1.0, 1e-9);
  for (double x : {0.01, 0.2, 0.5, 1.0, 3.0, 8.0}) {
    EXPECT_NEAR(increment_cdf(p, x) + increment_survival(p, x), 1.0, 1e-12);
  }
}

TEST(GammaProcess, PdfIntegratesToCdf) {
  const GammaProcessParams p{};
  // Composite Simpson on [0.5, 2]; the density is smooth there.
  const double a = 0.5, b = 2.0;
  const int n = 2000;
  const double h = (b - a) / n;
  double s = increment_pdf(p, a) + increment_pdf(p, b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * increment_pdf(p, a + i * h);
  EXPECT_NEAR(s * h / 3.0, increment_cdf(p, b) - increment_cdf(p, a), 1e-10);
}

TEST(GammaProcess, SampledIncrementMeansForCases) {
  for (int id : {2, 6}) {
    const auto c = builtin_case(id);
    const GammaProcessParams p{c.v_coeff, c.beta, c.delta_t};
    RngStream rng(21, static_cast<std::uint64_t>(id));
    double sum = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const double x = sample_increment(p, rng);
      ASSERT_GE(x, 0.0);
      sum += x;
    }
    EXPECT_NEAR(sum / n, 1.15 / c.beta, 0.01 * 1.15 / c.beta) << "case " << id;
  }
}

TEST(GammaProcess, EmpiricalMedianHitsHalf) {
  const GammaProcessParams p{};
  RngStream rng(8, 8);
  std::vector<double> v(1000000);
  for (auto& x : v) x = sample_increment(p, rng);
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  EXPECT_NEAR(increment_cdf(p, v[v.size() / 2]), 0.5, 0.01);
}

TEST(GammaProcess, SamplerPassesKsAgainstAnalyticCdf) {
  const GammaProcessParams p{};
  RngStream rng(13, 1);
  std::vector<double> v(100000);
  for (auto& x : v) x = sample_increment(p, rng);
  const double d = ks_statistic(v, [&](double x) { return increment_cdf(p, x); });
  EXPECT_LT(d, ks_critical_value(v.size(), 0.01));
}

TEST(GammaProcess, FailureSizedTailMatchesMonteCarlo) {
  // Single-increment exceedance of a smaller level; a jump of 8 has
  // probability ~1e-14 and is checked against boost instead.
  const GammaProcessParams p{};
  EXPECT_NEAR(increment_survival(p, 8.0), boost::math::gamma_q(1.15, 8.0 * 4.63), 1e-25);
  EXPECT_GT(increment_survival(p, 8.0), 0.0);
  RngStream rng(17, 4);
  int exceed = 0;
  const int n = 2000000;
  for (int i = 0; i < n; ++i) exceed += sample_increment(p, rng) > 1.0;
  const double s = increment_survival(p, 1.0);
  EXPECT_NEAR(exceed / static_cast<double>(n), s, 4.0 * std::sqrt(s * (1 - s) / n));
}
