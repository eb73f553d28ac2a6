#pragma once

#include <cmath>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prescreen/error.hpp"

namespace prescreen::core {

enum class Instruction { Fast, Accurate, Practice };
enum class SessionKind { PcTwoTrial, PhoneSingleTrial };
enum class ReaimPolicy { ReaimUntilSuccess, NoReaim };

inline std::string_view to_string(Instruction i) {
  switch (i) {
    case Instruction::Fast: return "Fast";
    case Instruction::Accurate: return "Accurate";
    case Instruction::Practice: return "Practice";
  }
  return "?";
}

inline std::string_view to_string(SessionKind k) {
  return k == SessionKind::PcTwoTrial ? "PcTwoTrial" : "PhoneSingleTrial";
}

inline std::string_view to_string(ReaimPolicy p) {
  return p == ReaimPolicy::ReaimUntilSuccess ? "ReaimUntilSuccess" : "NoReaim";
}

inline Instruction parse_instruction(std::string_view s) {
  if (s == "Fast" || s == "fast") return Instruction::Fast;
  if (s == "Accurate" || s == "accurate") return Instruction::Accurate;
  if (s == "Practice" || s == "practice") return Instruction::Practice;
  throw Error("core.BadEnum", "unknown instruction '" + std::string(s) + "'");
}

inline SessionKind parse_session_kind(std::string_view s) {
  if (s == "PcTwoTrial") return SessionKind::PcTwoTrial;
  if (s == "PhoneSingleTrial") return SessionKind::PhoneSingleTrial;
  throw Error("core.BadEnum", "unknown session_kind '" + std::string(s) + "'");
}

inline ReaimPolicy parse_reaim_policy(std::string_view s) {
  if (s == "ReaimUntilSuccess") return ReaimPolicy::ReaimUntilSuccess;
  if (s == "NoReaim") return ReaimPolicy::NoReaim;
  throw Error("core.BadEnum", "unknown reaim_policy '" + std::string(s) + "'");
}

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(b.x - a.x, b.y - a.y); }

/// Task condition. Lengths are px for PC sessions and mm for phone sessions,
/// where targets are laid out in physical units.
struct ConditionKey {
  Instruction instruction = Instruction::Fast;
  double amplitude_A = 0.0;
  double width_W = 0.0;

  friend bool operator==(const ConditionKey&, const ConditionKey&) = default;
  friend auto operator<=>(const ConditionKey&, const ConditionKey&) = default;
};

struct PointingTrial {
  std::string participant_id;
  int block_index = 0;
  int trial_index = 0;
  ConditionKey condition;
  Point prev_center;
  Point target_center;
  Point endpoint;  // first tap/click of the trial
  double movement_time_MT = 0.0;  // ms
  bool success = true;
  int reaim_count = 0;

  /// Error in the ER sense: the first attempt missed. Under re-aiming the
  /// trial ends in success, so a miss shows up as reaim_count > 0.
  bool first_attempt_missed() const noexcept { return !success || reaim_count > 0; }

  friend bool operator==(const PointingTrial&, const PointingTrial&) = default;
};

struct Adjustment {
  double final_size = 0.0;    // px
  double op_time = 0.0;       // s
  double initial_size = 0.0;  // px

  friend bool operator==(const Adjustment&, const Adjustment&) = default;
};

struct PreTaskOutcome {
  std::string participant_id;
  std::vector<Adjustment> adjustments;
  SessionKind session_kind = SessionKind::PhoneSingleTrial;

  friend bool operator==(const PreTaskOutcome&, const PreTaskOutcome&) = default;
};

struct Resolution {
  int width_px = 0;
  int height_px = 0;

  friend bool operator==(const Resolution&, const Resolution&) = default;
};

struct DeviceProfile {
  Resolution logical_resolution;
  double ppi = 0.0;
  int scale_factor = 1;

  double mm_per_logical_px() const noexcept { return 25.4 * scale_factor / ppi; }

  friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

struct SessionLog {
  std::string participant_id;
  std::optional<Resolution> device;
  PreTaskOutcome pretask;
  std::vector<PointingTrial> trials;
  ReaimPolicy reaim_policy = ReaimPolicy::ReaimUntilSuccess;

  friend bool operator==(const SessionLog&, const SessionLog&) = default;
};

/// Amplitude tolerance between the recorded A and the recomputed
/// center-to-center distance (browser layout rounding).
inline constexpr double kAmplitudeTolerance = 0.5;

/// Returns an empty string when the outcome is valid, else the reason.
inline std::string check_pretask(const PreTaskOutcome& p) {
  const std::size_t expected = p.session_kind == SessionKind::PcTwoTrial ? 2 : 1;
  if (p.adjustments.size() != expected)
    return "expected " + std::to_string(expected) + " adjustments for " +
           std::string(to_string(p.session_kind)) + ", got " + std::to_string(p.adjustments.size());
  for (const auto& a : p.adjustments) {
    if (!(a.final_size > 0.0)) return "nonpositive final_size";
    if (!(a.op_time >= 0.0)) return "negative op_time";
    if (!(a.initial_size > 0.0)) return "nonpositive initial_size";
  }
  return {};
}

/// Checks every SessionLog invariant. Returns an empty string when valid.
inline std::string check_session(const SessionLog& s) {
  if (s.participant_id.empty()) return "empty participant_id";
  if (s.pretask.participant_id != s.participant_id) return "pretask participant_id mismatch";
  if (auto why = check_pretask(s.pretask); !why.empty()) return why;

  const PointingTrial* prev = nullptr;
  for (const auto& t : s.trials) {
    const std::string where = " (block " + std::to_string(t.block_index) + ", trial " +
                              std::to_string(t.trial_index) + ")";
    if (t.participant_id != s.participant_id) return "trial participant_id mismatch" + where;
    if (!(t.movement_time_MT > 0.0)) return "nonpositive MT" + where;
    if (!(t.condition.width_W > 0.0)) return "nonpositive W" + where;
    if (!(t.condition.amplitude_A > 0.0)) return "nonpositive A" + where;
    if (t.reaim_count < 0) return "negative reaim_count" + where;
    if (std::abs(distance(t.prev_center, t.target_center) - t.condition.amplitude_A) > kAmplitudeTolerance)
      return "center distance differs from A" + where;
    if (s.reaim_policy == ReaimPolicy::ReaimUntilSuccess && !t.success)
      return "unsuccessful trial under ReaimUntilSuccess" + where;
    if (s.reaim_policy == ReaimPolicy::NoReaim && t.reaim_count != 0)
      return "reaim_count must be 0 under NoReaim" + where;
    if (prev != nullptr && prev->block_index == t.block_index && t.trial_index <= prev->trial_index)
      return "trial ordering not increasing" + where;
    if (prev != nullptr && t.block_index < prev->block_index) return "block ordering decreasing" + where;
    prev = &t;
  }
  return {};
}

}  // namespace prescreen::core
