#pragma once

// Reference implementations used only by tests. None of these share code
// with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

inline constexpr long double kPi = 3.141592653589793238462643383279502884L;

/// erf via the all-positive series
///   erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n 2^n x^(2n+1) / (1*3*...*(2n+1)),
/// summed in long double. No cancellation, so it stays accurate out to |x| = 6.
inline long double erf_series(long double x) {
  if (x < 0) return -erf_series(-x);
  if (x == 0) return 0;
  const long double x2 = x * x;
  long double term = x, sum = x;
  for (int n = 1; n < 2000; ++n) {
    term *= 2.0L * x2 / (2.0L * n + 1.0L);
    sum += term;
    if (term < sum * 1e-22L) break;
  }
  return 2.0L / std::sqrt(kPi) * std::exp(-x2) * sum;
}

/// erfc for x > 0 by the Laplace continued fraction, modified Lentz.
inline long double erfc_continued_fraction(long double x) {
  constexpr long double tiny = 1e-300L;
  long double f = x, c = x, d = 0;
  for (int k = 1; k < 5000; ++k) {
    const long double a = k / 2.0L;
    d = x + a * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = x + a / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1 / d;
    const long double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1) < 1e-21L) break;
  }
  return std::exp(-x * x) / std::sqrt(kPi) / f;
}

inline long double normal_cdf(long double z) { return 0.5L * (1.0L + erf_series(z / std::sqrt(2.0L))); }

/// 1 - exp(-W^2 / (8 sigma^2)): Rayleigh CDF at radius W/2.
inline double disk_isotropic(double sigma, double width) {
  return -std::expm1(-width * width / (8.0 * sigma * sigma));
}

/// Monte Carlo disk hit rate with its own generator.
inline double disk_monte_carlo(double sx, double sy, double width, std::uint64_t samples, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  const double r2 = width * width / 4.0;
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const double x = sx * nd(gen), y = sy * nd(gen);
    hits += (x * x + y * y <= r2) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

struct Line {
  long double intercept, slope;
};

/// OLS by Cramer's rule on the raw normal equations, long double.
inline Line ols_cramer(const std::vector<double>& xs, const std::vector<double>& ys) {
  long double n = xs.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += (long double)xs[i] * xs[i];
    sxy += (long double)xs[i] * ys[i];
  }
  const long double det = n * sxx - sx * sx;
  return {(sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det};
}

inline long double sse(const std::vector<double>& xs, const std::vector<double>& ys, long double a, long double b) {
  long double s = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const long double r = ys[i] - (a + b * xs[i]);
    s += r * r;
  }
  return s;
}

/// Coarse-to-fine grid search for the SSE minimizer around (a0, b0).
inline Line grid_search(const std::vector<double>& xs, const std::vector<double>& ys, long double a0, long double b0,
                        long double span_a, long double span_b) {
  long double best_a = a0, best_b = b0, best = sse(xs, ys, a0, b0);
  for (int level = 0; level < 40; ++level) {
    const long double ca = best_a, cb = best_b;
    for (int i = -10; i <= 10; ++i)
      for (int j = -10; j <= 10; ++j) {
        const long double a = ca + span_a * i / 10, b = cb + span_b * j / 10;
        const long double v = sse(xs, ys, a, b);
        if (v < best) {
          best = v;
          best_a = a;
          best_b = b;
        }
      }
    span_a /= 4;
    span_b /= 4;
  }
  return {best_a, best_b};
}

inline double r_squared(const std::vector<double>& obs, const std::vector<double>& pred) {
  long double mean = 0;
  for (double o : obs) mean += o;
  mean /= obs.size();
  long double res = 0, tot = 0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    res += (long double)(obs[i] - pred[i]) * (obs[i] - pred[i]);
    tot += (obs[i] - mean) * (obs[i] - mean);
  }
  return static_cast<double>(1 - res / tot);
}

/// Average ranks (ties share the mean rank).
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (i + j) / 2.0 + 1.0;
    i = j + 1;
  }
  return r;
}

/// Spearman rank correlation; NaN when either side is constant.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0 || sbb == 0) return std::nan("");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle
