#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "prescreen/core/types.hpp"
#include "prescreen/error.hpp"
#include "prescreen/preprocess.hpp"

namespace prescreen::models {

using core::Instruction;
using core::SessionKind;

/// Marker returned by r_squared when the observed values are constant but
/// the predictions do not match them.
inline constexpr double kUndefinedR2 = -std::numeric_limits<double>::infinity();

/// Lower bound applied to a predicted variance before it feeds a success
/// probability; the linear spread models can go nonpositive at small W.
inline constexpr double kVarianceFloor = 1e-9;
inline const double kSigmaFloor = std::sqrt(kVarianceFloor);

inline double index_of_difficulty(double amplitude, double width) {
  if (!(width > 0.0)) throw Error("models.NonpositiveWidth", "W must be > 0");
  if (!(amplitude >= 0.0)) throw Error("models.NegativeAmplitude", "A must be >= 0");
  return std::log2(amplitude / width + 1.0);
}

/// 1 - SSres/SStot. Can be negative. When SStot = 0 the result is 1 if the
/// residuals are also 0 and kUndefinedR2 otherwise.
inline double r_squared(std::span<const double> observed, std::span<const double> predicted) {
  if (observed.size() != predicted.size())
    throw Error("models.LengthMismatch", "observed and predicted differ in length");
  if (observed.empty()) throw Error("models.LengthMismatch", "r_squared requires nonempty input");
  double mean = 0.0;
  for (double o : observed) mean += o;
  mean /= static_cast<double>(observed.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    ss_tot += (observed[i] - mean) * (observed[i] - mean);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : kUndefinedR2;
  return 1.0 - ss_res / ss_tot;
}

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit fit_linear(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error("models.LengthMismatch", "xs and ys differ in length");
  if (xs.size() < 2) throw Error("models.DegenerateX", "need at least two points");
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw Error("models.DegenerateX", "all x values are equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  std::vector<double> pred(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) pred[i] = f.intercept + f.slope * xs[i];
  f.r2 = r_squared(ys, pred);
  return f;
}

/// Running count/mean/M2 with exact pairwise merge (Chan et al.).
struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }

  void merge(const Moments& o) noexcept {
    if (o.n == 0.0) return;
    if (n == 0.0) {
      *this = o;
      return;
    }
    const double total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    n = total;
  }

  double variance() const noexcept { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
  double sd() const noexcept { return std::sqrt(variance()); }
};

/// Sufficient statistics of the retained trials of one (A, W) condition.
struct ConditionStats {
  double amplitude = 0.0;
  double width = 0.0;
  Moments mt;
  Moments along;  // x_along
  Moments ortho;  // y_ortho
  Moments axis;   // analysis coordinate (x_along on PC, band_y on phone)
  double errors = 0.0;

  double count() const noexcept { return mt.n; }
  double error_rate() const noexcept { return mt.n > 0.0 ? errors / mt.n : 0.0; }

  void merge(const ConditionStats& o) noexcept {
    mt.merge(o.mt);
    along.merge(o.along);
    ortho.merge(o.ortho);
    axis.merge(o.axis);
    errors += o.errors;
  }
};

/// Per-condition table for one instruction, sorted by (W, A).
using StatsTable = std::vector<ConditionStats>;

inline ConditionStats& find_or_add(StatsTable& table, double amplitude, double width) {
  auto it = std::lower_bound(table.begin(), table.end(), std::pair{width, amplitude},
                             [](const ConditionStats& c, const std::pair<double, double>& key) {
                               return std::pair{c.width, c.amplitude} < key;
                             });
  if (it != table.end() && it->width == width && it->amplitude == amplitude) return *it;
  ConditionStats c;
  c.amplitude = amplitude;
  c.width = width;
  return *table.insert(it, c);
}

/// Adds `from` into `into` condition by condition.
inline void pool_into(StatsTable& into, const StatsTable& from) {
  for (const auto& c : from) find_or_add(into, c.amplitude, c.width).merge(c);
}

inline StatsTable session_stats(const preprocess::CleanSession& cs, Instruction instruction, SessionKind kind) {
  StatsTable table;
  for (std::size_t i = 0; i < cs.session.trials.size(); ++i) {
    const auto& t = cs.session.trials[i];
    if (t.condition.instruction != instruction) continue;
    const auto& p = cs.projections[i];
    auto& c = find_or_add(table, t.condition.amplitude_A, t.condition.width_W);
    c.mt.add(t.movement_time_MT);
    c.along.add(p.x_along);
    c.ortho.add(p.y_ortho);
    c.axis.add(preprocess::analysis_coordinate(p, kind));
    if (t.first_attempt_missed()) c.errors += 1.0;
  }
  return table;
}

/// Pools all retained trials of every participant in the dataset.
inline StatsTable pooled_stats(const preprocess::CleanDataset& clean, Instruction instruction) {
  StatsTable table;
  for (const auto& cs : clean.sessions) pool_into(table, session_stats(cs, instruction, clean.kind));
  return table;
}

/// Collapses conditions sharing a width (spread and ER models are per W).
inline StatsTable by_width(const StatsTable& table) {
  StatsTable out;
  for (const auto& c : table) find_or_add(out, 0.0, c.width).merge(c);
  return out;
}

// ---------------------------------------------------------------------------
// Movement time

struct FittsPoint {
  double amplitude = 0.0;
  double width = 0.0;
  double id = 0.0;
  double mean_mt = 0.0;
};

struct FittsFit {
  double a = 0.0;  // ms
  double b = 0.0;  // ms/bit
  std::vector<FittsPoint> points;
  double r2 = 0.0;
  bool saturated = false;  // exactly two distinct ID values

  double predict(double amplitude, double width) const { return a + b * index_of_difficulty(amplitude, width); }
};

inline FittsFit fit_fitts(const StatsTable& table) {
  FittsFit fit;
  std::vector<double> ids, mts;
  for (const auto& c : table) {
    if (c.count() == 0.0) continue;
    const double id = index_of_difficulty(c.amplitude, c.width);
    fit.points.push_back({c.amplitude, c.width, id, c.mt.mean});
    ids.push_back(id);
    mts.push_back(c.mt.mean);
  }
  const auto lf = fit_linear(ids, mts);
  fit.a = lf.intercept;
  fit.b = lf.slope;
  fit.r2 = lf.r2;
  std::vector<double> distinct = ids;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  fit.saturated = distinct.size() == 2;
  return fit;
}

inline FittsFit fit_fitts(const preprocess::CleanDataset& clean, Instruction instruction) {
  return fit_fitts(pooled_stats(clean, instruction));
}

// ---------------------------------------------------------------------------
// Endpoint spread

struct SpreadPoint {
  double width = 0.0;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
};

/// sigma_x = c + d W, sigma_y = e + f W.
struct SigmaFit2D {
  double c = 0.0, d = 0.0, e = 0.0, f = 0.0;
  std::vector<SpreadPoint> observed;

  double sigma_x(double w) const { return c + d * w; }
  double sigma_y(double w) const { return e + f * w; }
};

namespace detail {
inline void require_spread_data(const StatsTable& per_w) {
  if (per_w.size() < 2) throw Error("models.DegenerateX", "need at least two W levels");
  for (const auto& c : per_w)
    if (c.count() < 2.0)
      throw Error("models.InsufficientTrials", "W=" + std::to_string(c.width) + " has fewer than 2 trials");
}
}  // namespace detail

inline SigmaFit2D fit_sigma_2d(const StatsTable& table) {
  const auto per_w = by_width(table);
  detail::require_spread_data(per_w);
  SigmaFit2D fit;
  std::vector<double> ws, sx, sy;
  for (const auto& c : per_w) {
    fit.observed.push_back({c.width, c.along.sd(), c.ortho.sd()});
    ws.push_back(c.width);
    sx.push_back(c.along.sd());
    sy.push_back(c.ortho.sd());
  }
  const auto fx = fit_linear(ws, sx);
  const auto fy = fit_linear(ws, sy);
  fit.c = fx.intercept;
  fit.d = fx.slope;
  fit.e = fy.intercept;
  fit.f = fy.slope;
  return fit;
}

inline SigmaFit2D fit_sigma_2d(const preprocess::CleanDataset& clean, Instruction instruction) {
  return fit_sigma_2d(pooled_stats(clean, instruction));
}

struct VariancePoint {
  double width = 0.0;
  double variance = 0.0;
};

/// sigma_y^2 = g + h W^2 on the analysis coordinate.
struct VarianceFit1D {
  double g = 0.0, h = 0.0;
  std::vector<VariancePoint> observed;

  double variance(double w) const { return g + h * w * w; }
};

inline VarianceFit1D fit_variance_1d(const StatsTable& table) {
  const auto per_w = by_width(table);
  detail::require_spread_data(per_w);
  VarianceFit1D fit;
  std::vector<double> w2, var;
  for (const auto& c : per_w) {
    fit.observed.push_back({c.width, c.axis.variance()});
    w2.push_back(c.width * c.width);
    var.push_back(c.axis.variance());
  }
  const auto lf = fit_linear(w2, var);
  fit.g = lf.intercept;
  fit.h = lf.slope;
  return fit;
}

inline VarianceFit1D fit_variance_1d(const preprocess::CleanDataset& clean, Instruction instruction) {
  return fit_variance_1d(pooled_stats(clean, instruction));
}

// ---------------------------------------------------------------------------
// Success probabilities

inline double erf(double x) { return std::erf(x); }

/// Probability that a centered axis-aligned bivariate normal endpoint lands
/// in the disk of diameter W.
///
/// In standardized coordinates the disk is an ellipse, and the radial part
/// integrates in closed form, leaving
///   P = (1/pi) * integral_0^pi [1 - exp(-R^2 / (2 s(phi)))] dphi,
///   s(phi) = sx^2 cos^2(phi) + sy^2 sin^2(phi),  R = W/2.
/// The integrand is pi-periodic and smooth, so the midpoint rule converges
/// geometrically; the panel count is doubled until successive estimates
/// agree to 1e-12.
inline double success_prob_disk(double sigma_x, double sigma_y, double width) {
  if (!(width > 0.0)) throw Error("models.NonpositiveWidth", "W must be > 0");
  if (!(sigma_x >= 0.0) || !(sigma_y >= 0.0)) throw Error("models.NegativeSigma", "sigma must be >= 0");
  if (sigma_x == 0.0 && sigma_y == 0.0) return 1.0;
  const double r2 = width * width / 4.0;
  const double vx = sigma_x * sigma_x, vy = sigma_y * sigma_y;
  auto integrand = [&](double phi) {
    const double c = std::cos(phi), s = std::sin(phi);
    const double var = vx * c * c + vy * s * s;
    return var > 0.0 ? -std::expm1(-r2 / (2.0 * var)) : 1.0;
  };
  auto midpoint = [&](std::size_t n) {
    double sum = 0.0;
    const double h = std::numbers::pi / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) sum += integrand((static_cast<double>(i) + 0.5) * h);
    return sum / static_cast<double>(n);
  };
  std::size_t n = 16;
  double prev = midpoint(n);
  constexpr std::size_t kMaxPanels = std::size_t{1} << 22;
  while (n < kMaxPanels) {
    n *= 2;
    const double next = midpoint(n);
    if (std::abs(next - prev) <= 1e-12) return std::clamp(next, 0.0, 1.0);
    prev = next;
  }
  return std::clamp(prev, 0.0, 1.0);
}

/// P(-W/2 <= Y <= W/2) for Y ~ N(0, sigma_y^2).
inline double success_prob_band(double sigma_y, double width) {
  if (!(width > 0.0)) throw Error("models.NonpositiveWidth", "W must be > 0");
  if (!(sigma_y >= 0.0)) throw Error("models.NegativeSigma", "sigma must be >= 0");
  if (sigma_y == 0.0) return 1.0;
  return erf(width / (2.0 * std::numbers::sqrt2 * sigma_y));
}

// ---------------------------------------------------------------------------
// Error-rate prediction

struct ErPoint {
  double width = 0.0;
  double observed_er = 0.0;
  double predicted_er = 0.0;
};

struct ErPrediction {
  std::vector<ErPoint> points;
  double r2 = 0.0;
  bool clamped = false;  // a predicted sigma or variance hit its floor
};

namespace detail {
inline ErPrediction finish(ErPrediction pred) {
  std::vector<double> obs, est;
  for (const auto& p : pred.points) {
    obs.push_back(p.observed_er);
    est.push_back(p.predicted_er);
  }
  pred.r2 = r_squared(obs, est);
  return pred;
}

inline void check_er_inputs(std::span<const double> widths, std::span<const double> observed) {
  if (widths.size() != observed.size()) throw Error("models.LengthMismatch", "widths and observed ER differ");
  if (widths.empty()) throw Error("models.LengthMismatch", "no W levels");
}
}  // namespace detail

inline double predicted_er(const SigmaFit2D& model, double width, bool* clamped = nullptr) {
  double sx = model.sigma_x(width), sy = model.sigma_y(width);
  if (sx < kSigmaFloor || sy < kSigmaFloor) {
    if (clamped) *clamped = true;
    sx = std::max(sx, kSigmaFloor);
    sy = std::max(sy, kSigmaFloor);
  }
  return 1.0 - success_prob_disk(sx, sy, width);
}

inline double predicted_er(const VarianceFit1D& model, double width, bool* clamped = nullptr) {
  double var = model.variance(width);
  if (var < kVarianceFloor) {
    if (clamped) *clamped = true;
    var = kVarianceFloor;
  }
  return 1.0 - success_prob_band(std::sqrt(var), width);
}

template <typename Model>
ErPrediction predict_er(const Model& model, std::span<const double> widths, std::span<const double> observed_er) {
  detail::check_er_inputs(widths, observed_er);
  ErPrediction pred;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    bool clamped = false;
    const double est = predicted_er(model, widths[i], &clamped);
    pred.clamped = pred.clamped || clamped;
    pred.points.push_back({widths[i], observed_er[i], est});
  }
  return detail::finish(std::move(pred));
}

/// Observed ER per W from the same statistics the model was fitted on.
template <typename Model>
ErPrediction predict_er(const Model& model, const StatsTable& table) {
  std::vector<double> ws, er;
  for (const auto& c : by_width(table)) {
    ws.push_back(c.width);
    er.push_back(c.error_rate());
  }
  return predict_er(model, ws, er);
}

}  // namespace prescreen::models
