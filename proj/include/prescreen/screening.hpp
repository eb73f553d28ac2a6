#pragma once

#include <cmath>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "prescreen/core/device.hpp"
#include "prescreen/core/types.hpp"
#include "prescreen/error.hpp"

namespace prescreen::screening {

using core::PreTaskOutcome;
using core::SessionKind;

/// Card short side of an ISO/IEC 7810 ID-1 card, mm.
inline constexpr double kCardShortSideMm = 53.98;

/// Two PC adjustments (px): both inside [range_min, range_max] and differing by less than T.
struct PcRangeAndDiscrepancy {
  double range_min = 200.0;
  double range_max = 600.0;
  double T = 20.0;

  friend bool operator==(const PcRangeAndDiscrepancy&, const PcRangeAndDiscrepancy&) = default;
};

/// One phone adjustment converted to mm: |size - card| < T.
struct PhoneAbsError {
  double T = 3.0;
  double card_short_side = kCardShortSideMm;

  friend bool operator==(const PhoneAbsError&, const PhoneAbsError&) = default;
};

using ScreeningRule = std::variant<PcRangeAndDiscrepancy, PhoneAbsError>;

inline void validate(const ScreeningRule& rule) {
  std::visit(
      [](const auto& r) {
        if (!(r.T > 0.0)) throw Error("screening.InvalidRule", "T must be > 0");
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, PcRangeAndDiscrepancy>) {
          if (!(r.range_min < r.range_max)) throw Error("screening.InvalidRule", "range_min must be < range_max");
        } else {
          if (!(r.card_short_side > 0.0)) throw Error("screening.InvalidRule", "card size must be > 0");
        }
      },
      rule);
}

inline double threshold(const ScreeningRule& rule) {
  return std::visit([](const auto& r) { return r.T; }, rule);
}

inline ScreeningRule with_threshold(ScreeningRule rule, double t) {
  std::visit([t](auto& r) { r.T = t; }, rule);
  return rule;
}

inline SessionKind session_kind_of(const ScreeningRule& rule) {
  return std::holds_alternative<PcRangeAndDiscrepancy>(rule) ? SessionKind::PcTwoTrial
                                                             : SessionKind::PhoneSingleTrial;
}

inline nlohmann::json to_json(const ScreeningRule& rule) {
  if (const auto* pc = std::get_if<PcRangeAndDiscrepancy>(&rule))
    return {{"kind", "PcRangeAndDiscrepancy"}, {"range_min", pc->range_min}, {"range_max", pc->range_max}, {"T", pc->T}};
  const auto& ph = std::get<PhoneAbsError>(rule);
  return {{"kind", "PhoneAbsError"}, {"T", ph.T}, {"card_short_side", ph.card_short_side}};
}

/// Compact single-line description used in artifact headers.
inline std::string describe(const ScreeningRule& rule) { return to_json(rule).dump(); }

struct ScreeningVerdict {
  std::string participant_id;
  bool passed = false;
  double metric = 0.0;  // px discrepancy (PC) or mm absolute error (phone)
  ScreeningRule rule_used;
};

inline ScreeningVerdict classify_pc(const PreTaskOutcome& outcome, const PcRangeAndDiscrepancy& rule) {
  if (outcome.session_kind != SessionKind::PcTwoTrial || outcome.adjustments.size() != 2)
    throw Error("screening.WrongSessionKind", "classify_pc needs a PcTwoTrial outcome");
  const double s1 = outcome.adjustments[0].final_size;
  const double s2 = outcome.adjustments[1].final_size;
  auto in_range = [&](double s) { return s >= rule.range_min && s <= rule.range_max; };
  ScreeningVerdict v;
  v.participant_id = outcome.participant_id;
  v.metric = std::abs(s1 - s2);
  v.passed = in_range(s1) && in_range(s2) && v.metric < rule.T;
  v.rule_used = rule;
  return v;
}

inline ScreeningVerdict classify_phone(const PreTaskOutcome& outcome, const core::DeviceProfile& profile,
                                       const PhoneAbsError& rule) {
  if (outcome.session_kind != SessionKind::PhoneSingleTrial || outcome.adjustments.size() != 1)
    throw Error("screening.WrongSessionKind", "classify_phone needs a PhoneSingleTrial outcome");
  ScreeningVerdict v;
  v.participant_id = outcome.participant_id;
  v.metric = std::abs(core::px_to_mm(outcome.adjustments[0].final_size, profile) - rule.card_short_side);
  v.passed = v.metric < rule.T;
  v.rule_used = rule;
  return v;
}

/// Dispatches on the rule kind. Phone rules need `profile`.
inline ScreeningVerdict classify(const PreTaskOutcome& outcome, const ScreeningRule& rule,
                                 const core::DeviceProfile* profile) {
  if (const auto* pc = std::get_if<PcRangeAndDiscrepancy>(&rule)) return classify_pc(outcome, *pc);
  if (profile == nullptr) throw Error("screening.UnresolvableDevice", "phone rule needs a device profile");
  return classify_phone(outcome, *profile, std::get<PhoneAbsError>(rule));
}

struct Partition {
  std::vector<std::string> passing;
  std::vector<std::string> non_passing;
};

inline Partition partition(const std::vector<ScreeningVerdict>& verdicts) {
  Partition p;
  std::set<std::string> seen;
  for (const auto& v : verdicts) {
    if (!seen.insert(v.participant_id).second)
      throw Error("screening.DuplicateParticipant", "verdict for '" + v.participant_id + "' appears twice");
    (v.passed ? p.passing : p.non_passing).push_back(v.participant_id);
  }
  return p;
}

}  // namespace prescreen::screening
