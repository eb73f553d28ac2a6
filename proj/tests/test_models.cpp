#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "prescreen/models.hpp"
#include "prescreen/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace prescreen;

TEST(IndexOfDifficulty, MatchesShannonForm) {
  EXPECT_DOUBLE_EQ(models::index_of_difficulty(30.0, 10.0), 2.0);
  EXPECT_DOUBLE_EQ(models::index_of_difficulty(0.0, 4.0), 0.0);
  EXPECT_THROW(models::index_of_difficulty(30.0, 0.0), Error);
  EXPECT_THROW(models::index_of_difficulty(-1.0, 2.0), Error);
}

TEST(FitLinear, AgreesWithCramerAndGridSearch) {
  Rng rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> xs, ys;
    const int n = 3 + rep % 12;
    for (int i = 0; i < n; ++i) {
      xs.push_back(rng.uniform(0.5, 6.0));
      ys.push_back(120.0 + 150.0 * xs.back() + rng.normal(0, 25));
    }
    const auto fit = models::fit_linear(xs, ys);
    const auto ref = oracle::ols_cramer(xs, ys);
    EXPECT_NEAR(fit.intercept, static_cast<double>(ref.intercept), 1e-8 * (1 + std::abs((double)ref.intercept)));
    EXPECT_NEAR(fit.slope, static_cast<double>(ref.slope), 1e-8 * (1 + std::abs((double)ref.slope)));

    const auto gs = oracle::grid_search(xs, ys, 0.0, 0.0, 1000.0, 1000.0);
    EXPECT_NEAR(fit.intercept, static_cast<double>(gs.intercept), 1e-6);
    EXPECT_NEAR(fit.slope, static_cast<double>(gs.slope), 1e-6);
  }
}

TEST(FitLinear, RejectsDegenerateInput) {
  EXPECT_THROW(models::fit_linear(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), Error);
  EXPECT_THROW(models::fit_linear(std::vector<double>{1}, std::vector<double>{1}), Error);
  EXPECT_THROW(models::fit_linear(std::vector<double>{1, 2}, std::vector<double>{1}), Error);
}

TEST(RSquared, EdgeCases) {
  const std::vector<double> flat{2, 2, 2};
  EXPECT_EQ(models::r_squared(flat, flat), 1.0);
  EXPECT_EQ(models::r_squared(flat, std::vector<double>{2, 2, 3}), models::kUndefinedR2);
  const std::vector<double> obs{1, 2, 3};
  EXPECT_DOUBLE_EQ(models::r_squared(obs, obs), 1.0);
  EXPECT_DOUBLE_EQ(models::r_squared(obs, std::vector<double>{2, 2, 2}), 0.0);
  EXPECT_LT(models::r_squared(obs, std::vector<double>{3, 2, 1}), 0.0);
  EXPECT_NEAR(models::r_squared(obs, std::vector<double>{1.1, 2.2, 2.7}),
              oracle::r_squared(obs, {1.1, 2.2, 2.7}), 1e-14);
}

TEST(Moments, MergeMatchesSinglePass) {
  Rng rng(3);
  std::vector<double> v(1000);
  for (auto& x : v) x = rng.normal(5, 3);
  models::Moments all, left, right;
  for (std::size_t i = 0; i < v.size(); ++i) {
    all.add(v[i]);
    (i < 337 ? left : right).add(v[i]);
  }
  left.merge(right);
  EXPECT_DOUBLE_EQ(left.n, all.n);
  EXPECT_NEAR(left.mean, all.mean, 1e-12);
  EXPECT_NEAR(left.variance(), all.variance(), 1e-10);
}

TEST(FitFitts, RecoversExactCoefficients) {
  const auto table = fixture::exact_table(180.0, 95.0, 0.3, 0.02, 30.0, fixture::phone_widths());
  const auto fit = models::fit_fitts(table);
  EXPECT_NEAR(fit.a, 180.0, 1e-9 * 180.0);
  EXPECT_NEAR(fit.b, 95.0, 1e-9 * 95.0);
  EXPECT_NEAR(fit.r2, 1.0, 1e-12);
  EXPECT_FALSE(fit.saturated);
  EXPECT_EQ(fit.points.size(), fixture::phone_widths().size());
}

TEST(FitFitts, TwoIdsAreSaturated) {
  const auto table = fixture::exact_table(100.0, 50.0, 0.1, 0.01, 30.0, {3.0, 6.0});
  const auto fit = models::fit_fitts(table);
  EXPECT_TRUE(fit.saturated);
  EXPECT_NEAR(fit.r2, 1.0, 1e-12);
}

TEST(FitVariance1D, RecoversExactCoefficients) {
  const auto table = fixture::exact_table(180.0, 95.0, 0.3, 0.02, 30.0, fixture::phone_widths());
  const auto fit = models::fit_variance_1d(table);
  EXPECT_NEAR(fit.g, 0.3, 1e-9 * 0.3);
  EXPECT_NEAR(fit.h, 0.02, 1e-9 * 0.02);
}

TEST(FitSigma2D, RecoversLinearSpread) {
  models::StatsTable table;
  for (double w : {4.0, 8.0, 16.0, 32.0}) {
    auto& c = models::find_or_add(table, 200.0, w);
    const double sx = 1.0 + 0.1 * w, sy = 0.5 + 0.05 * w;
    for (double s : {-1.0, 1.0}) {
      c.mt.add(500.0);
      c.along.add(s * sx * std::sqrt(0.5));
      c.ortho.add(s * sy * std::sqrt(0.5));
    }
  }
  const auto fit = models::fit_sigma_2d(table);
  EXPECT_NEAR(fit.c, 1.0, 1e-12);
  EXPECT_NEAR(fit.d, 0.1, 1e-12);
  EXPECT_NEAR(fit.e, 0.5, 1e-12);
  EXPECT_NEAR(fit.f, 0.05, 1e-12);
}

TEST(SpreadFits, NeedTwoWidthsAndTwoTrials) {
  auto one_w = fixture::exact_table(1, 1, 1, 1, 30.0, {4.0});
  EXPECT_THROW(models::fit_variance_1d(one_w), Error);
  models::StatsTable thin;
  models::find_or_add(thin, 30.0, 2.0).axis.add(0.0);
  models::find_or_add(thin, 30.0, 2.0).mt.add(1.0);
  auto& c = models::find_or_add(thin, 30.0, 4.0);
  c.axis.add(0.0);
  c.axis.add(1.0);
  c.mt.add(1.0);
  c.mt.add(1.0);
  try {
    models::fit_variance_1d(thin);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "models.InsufficientTrials");
  }
}

TEST(Erf, MatchesSeriesOracle) {
  for (int i = -600; i <= 600; ++i) {
    const double x = i / 100.0;
    EXPECT_NEAR(models::erf(x), static_cast<double>(oracle::erf_series(x)), 1e-12) << x;
  }
}

TEST(Erf, TailMatchesContinuedFraction) {
  for (double x : {2.0, 3.0, 4.5, 6.0}) {
    const double lib = 1.0 - models::erf(x);
    const double ref = static_cast<double>(oracle::erfc_continued_fraction(x));
    EXPECT_NEAR(lib, ref, 1e-15) << x;
  }
}

TEST(DiskProbability, IsotropicClosedForm) {
  for (double s : {0.2, 0.5, 1.0, 2.0, 5.0})
    for (double w : {0.5, 1.0, 3.0, 8.0, 20.0})
      EXPECT_NEAR(models::success_prob_disk(s, s, w), oracle::disk_isotropic(s, w), 1e-10) << s << " " << w;
}

TEST(DiskProbability, AnisotropicMonteCarlo) {
  const double cases[][3] = {{1.0, 2.0, 3.0}, {0.5, 3.0, 4.0}, {2.5, 0.7, 5.0}};
  std::uint64_t seed = 101;
  for (const auto& c : cases) {
    const double mc = oracle::disk_monte_carlo(c[0], c[1], c[2], 2'000'000, seed++);
    EXPECT_NEAR(models::success_prob_disk(c[0], c[1], c[2]), mc, 2e-3);
  }
}

TEST(DiskProbability, SymmetricInAxesAndBoundedByBand) {
  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    const double sx = rng.uniform(0.1, 5), sy = rng.uniform(0.1, 5), w = rng.uniform(0.1, 20);
    const double p = models::success_prob_disk(sx, sy, w);
    EXPECT_NEAR(p, models::success_prob_disk(sy, sx, w), 1e-12);
    // The disk lies inside either band through it.
    EXPECT_LE(p, models::success_prob_band(sx, w) + 1e-12);
    EXPECT_LE(p, models::success_prob_band(sy, w) + 1e-12);
  }
}

TEST(DiskProbability, EdgeCases) {
  EXPECT_EQ(models::success_prob_disk(0.0, 0.0, 1.0), 1.0);
  EXPECT_THROW(models::success_prob_disk(1.0, 1.0, 0.0), Error);
  EXPECT_THROW(models::success_prob_disk(-1.0, 1.0, 1.0), Error);
  EXPECT_NEAR(models::success_prob_disk(1e-3, 1e-3, 1.0), 1.0, 1e-12);
}

TEST(BandProbability, MatchesNormalCdf) {
  for (double s : {0.3, 1.0, 2.0})
    for (double w : {0.5, 2.0, 6.0}) {
      const auto ref = oracle::normal_cdf(w / (2 * s)) - oracle::normal_cdf(-w / (2 * s));
      EXPECT_NEAR(models::success_prob_band(s, w), static_cast<double>(ref), 1e-12);
    }
  EXPECT_EQ(models::success_prob_band(0.0, 1.0), 1.0);
  EXPECT_THROW(models::success_prob_band(1.0, -1.0), Error);
}

TEST(SuccessProbability, MonotoneInWidthAndSpread) {
  Rng rng(99);
  for (int i = 0; i < 300; ++i) {
    const double sx = rng.uniform(0.1, 4), sy = rng.uniform(0.1, 4);
    const double w1 = rng.uniform(0.1, 10), w2 = w1 + rng.uniform(0.01, 5);
    EXPECT_LE(models::success_prob_disk(sx, sy, w1), models::success_prob_disk(sx, sy, w2) + 1e-12);
    EXPECT_LE(models::success_prob_band(sy, w1), models::success_prob_band(sy, w2) + 1e-15);
    const double k = 1.0 + rng.uniform(0.01, 2);
    EXPECT_GE(models::success_prob_disk(sx, sy, w1) + 1e-12, models::success_prob_disk(sx * k, sy * k, w1));
    EXPECT_GE(models::success_prob_band(sy, w1) + 1e-15, models::success_prob_band(sy * k, w1));
    const double pd = models::success_prob_disk(sx, sy, w1);
    EXPECT_GE(pd, 0.0);
    EXPECT_LE(pd, 1.0);
  }
}

TEST(PredictEr, ClampsNonpositiveVariance) {
  models::VarianceFit1D fit;
  fit.g = -5.0;
  fit.h = 0.01;
  const std::vector<double> ws{2.0, 4.0}, er{0.1, 0.05};
  const auto pred = models::predict_er(fit, ws, er);
  EXPECT_TRUE(pred.clamped);
  EXPECT_NEAR(pred.points[0].predicted_er, 0.0, 1e-12);
}

TEST(PredictEr, BandModelReproducesItsOwnRates) {
  models::VarianceFit1D fit;
  fit.g = 0.4;
  fit.h = 0.03;
  std::vector<double> ws, er;
  for (double w : fixture::phone_widths()) {
    ws.push_back(w);
    er.push_back(1.0 - models::success_prob_band(std::sqrt(0.4 + 0.03 * w * w), w));
  }
  const auto pred = models::predict_er(fit, ws, er);
  EXPECT_FALSE(pred.clamped);
  EXPECT_NEAR(pred.r2, 1.0, 1e-12);
}
