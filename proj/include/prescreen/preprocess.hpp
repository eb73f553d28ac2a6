#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prescreen/core/types.hpp"
#include "prescreen/error.hpp"

namespace prescreen::preprocess {

using core::Instruction;
using core::PointingTrial;
using core::SessionKind;
using core::SessionLog;

struct TrialRef {
  std::string participant_id;
  int block_index = 0;
  int trial_index = 0;

  friend bool operator==(const TrialRef&, const TrialRef&) = default;
};

/// Endpoint expressed in the task frame with the target center as origin.
///
/// `x_along` and `y_ortho` are the rotated coordinates: the prev->target
/// direction is +x, and +y is that direction turned a quarter turn
/// clockwise on screen (for rightward movement, +y points down).
/// `band_y` is the unrotated screen-vertical offset (positive below the
/// target center), which is the coordinate that matters for full-width band
/// targets.
struct SignedProjection {
  TrialRef trial_ref;
  double x_along = 0.0;
  double y_ortho = 0.0;
  double band_y = 0.0;
};

inline SignedProjection project_endpoint(const PointingTrial& t) {
  const double dx = t.target_center.x - t.prev_center.x;
  const double dy = t.target_center.y - t.prev_center.y;
  const double len = std::hypot(dx, dy);
  if (!(len > 0.0))
    throw Error("preprocess.DegenerateAxis", "prev_center equals target_center for participant " + t.participant_id);
  const double ux = dx / len, uy = dy / len;
  const double ex = t.endpoint.x - t.target_center.x;
  const double ey = t.endpoint.y - t.target_center.y;
  SignedProjection p;
  p.trial_ref = {t.participant_id, t.block_index, t.trial_index};
  p.x_along = ex * ux + ey * uy;
  p.y_ortho = -ex * uy + ey * ux;
  p.band_y = ey;
  return p;
}

/// The coordinate that is clipped at the trial level and that the 1D spread
/// model uses: along-axis for circular PC targets, screen-vertical for bands.
inline double analysis_coordinate(const SignedProjection& p, SessionKind kind) {
  return kind == SessionKind::PcTwoTrial ? p.x_along : p.band_y;
}

inline double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n-1); 0 for fewer than two values.
inline double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// Single-pass k-sigma clip. Returns the ascending indices of values within
/// k sample standard deviations of the mean of the full input.
inline std::vector<std::size_t> sigma_clip(std::span<const double> values, double k = 3.0) {
  if (values.empty()) throw Error("preprocess.Empty", "sigma_clip requires nonempty input");
  const double m = mean_of(values);
  const double sd = sample_sd(values);
  std::vector<std::size_t> kept;
  kept.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (sd == 0.0 || std::abs(values[i] - m) <= k * sd) kept.push_back(i);
  return kept;
}

struct ParticipantExclusion {
  std::string participant_id;
  std::size_t input_trials = 0;
  std::size_t coord_flagged = 0;
  std::size_t mt_flagged = 0;
  std::size_t retained_trials = 0;  // after trial stages; 0 if the participant was excluded
  double mean_mt = 0.0;             // over trials surviving the trial stages
  bool excluded = false;
};

struct ExclusionReport {
  std::size_t input_trials = 0;  // main-block trials only
  std::size_t practice_trials_dropped = 0;
  std::size_t excluded_coord_trials = 0;
  std::size_t excluded_mt_trials = 0;
  std::size_t excluded_participants = 0;
  std::size_t retained_trials = 0;
  std::vector<ParticipantExclusion> participants;

  std::string to_text() const {
    std::ostringstream out;
    out << "input_trials " << input_trials << "\n"
        << "practice_trials_dropped " << practice_trials_dropped << "\n"
        << "excluded_coord_trials " << excluded_coord_trials << "\n"
        << "excluded_mt_trials " << excluded_mt_trials << "\n"
        << "excluded_participants " << excluded_participants << "\n"
        << "retained_trials " << retained_trials << "\n";
    for (const auto& p : participants)
      if (p.excluded || p.coord_flagged > 0 || p.mt_flagged > 0)
        out << "participant " << p.participant_id << " coord_flagged=" << p.coord_flagged
            << " mt_flagged=" << p.mt_flagged << (p.excluded ? " excluded" : "") << "\n";
    return out.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json detail = nlohmann::json::array();
    for (const auto& p : participants)
      detail.push_back({{"participant_id", p.participant_id},
                        {"input_trials", p.input_trials},
                        {"coord_flagged", p.coord_flagged},
                        {"mt_flagged", p.mt_flagged},
                        {"retained_trials", p.retained_trials},
                        {"mean_mt", p.mean_mt},
                        {"excluded", p.excluded}});
    return {{"input_trials", input_trials},
            {"practice_trials_dropped", practice_trials_dropped},
            {"excluded_coord_trials", excluded_coord_trials},
            {"excluded_mt_trials", excluded_mt_trials},
            {"excluded_participants", excluded_participants},
            {"retained_trials", retained_trials},
            {"participants", std::move(detail)}};
  }
};

/// A session reduced to its retained main-block trials, with the projection
/// of each retained trial at the same index.
struct CleanSession {
  SessionLog session;
  std::vector<SignedProjection> projections;
};

struct CleanDataset {
  SessionKind kind = SessionKind::PhoneSingleTrial;
  std::vector<CleanSession> sessions;
  ExclusionReport report;
};

namespace detail {

struct CondKey {
  Instruction instruction;
  double width;
  friend auto operator<=>(const CondKey&, const CondKey&) = default;
};

}  // namespace detail

/// Outlier pipeline, run once:
///   1. per participant x (instruction, W): clip the analysis coordinate;
///   2. per participant x (instruction, W): clip MT;
///   3. across participants: clip each participant's mean MT over the trials
///      that survived 1-2, dropping flagged participants entirely.
/// Stages 1 and 2 are evaluated on the same trial set, so a trial can count
/// toward both. Practice blocks are dropped before any stage.
inline CleanDataset clean_dataset(const std::vector<SessionLog>& sessions, SessionKind kind, double k = 3.0) {
  using detail::CondKey;
  CleanDataset out;
  out.kind = kind;

  std::set<CondKey> declared;
  for (const auto& s : sessions)
    for (const auto& t : s.trials)
      if (t.condition.instruction != Instruction::Practice)
        declared.insert({t.condition.instruction, t.condition.width_W});

  struct Survivor {
    std::vector<std::size_t> trial_idx;  // into the session's trial list
    std::vector<SignedProjection> proj;
  };
  std::vector<Survivor> survivors(sessions.size());
  std::vector<double> participant_means(sessions.size(), 0.0);

  for (std::size_t si = 0; si < sessions.size(); ++si) {
    const auto& s = sessions[si];
    if (s.pretask.session_kind != kind)
      throw Error("preprocess.KindMismatch", "session " + s.participant_id + " is not " +
                                                 std::string(core::to_string(kind)));
    ParticipantExclusion pe;
    pe.participant_id = s.participant_id;

    std::map<CondKey, std::vector<std::size_t>> groups;
    std::vector<SignedProjection> proj(s.trials.size());
    for (std::size_t i = 0; i < s.trials.size(); ++i) {
      const auto& t = s.trials[i];
      if (t.condition.instruction == Instruction::Practice) {
        ++out.report.practice_trials_dropped;
        continue;
      }
      groups[{t.condition.instruction, t.condition.width_W}].push_back(i);
      proj[i] = project_endpoint(t);
      ++pe.input_trials;
    }
    for (const auto& c : declared)
      if (!groups.contains(c))
        throw Error("preprocess.EmptyCondition",
                    "participant " + s.participant_id + " has no trials for " +
                        std::string(core::to_string(c.instruction)) + " W=" + std::to_string(c.width));

    std::vector<bool> flagged(s.trials.size(), false);
    for (const auto& [cond, idx] : groups) {
      std::vector<double> coord, mt;
      for (std::size_t i : idx) {
        coord.push_back(analysis_coordinate(proj[i], kind));
        mt.push_back(s.trials[i].movement_time_MT);
      }
      std::vector<bool> keep_coord(idx.size(), false), keep_mt(idx.size(), false);
      for (std::size_t j : sigma_clip(coord, k)) keep_coord[j] = true;
      for (std::size_t j : sigma_clip(mt, k)) keep_mt[j] = true;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        if (!keep_coord[j]) ++pe.coord_flagged;
        if (!keep_mt[j]) ++pe.mt_flagged;
        if (!keep_coord[j] || !keep_mt[j]) flagged[idx[j]] = true;
      }
    }

    double mt_sum = 0.0;
    for (std::size_t i = 0; i < s.trials.size(); ++i) {
      if (s.trials[i].condition.instruction == Instruction::Practice || flagged[i]) continue;
      survivors[si].trial_idx.push_back(i);
      survivors[si].proj.push_back(proj[i]);
      mt_sum += s.trials[i].movement_time_MT;
    }
    pe.retained_trials = survivors[si].trial_idx.size();
    pe.mean_mt = pe.retained_trials > 0 ? mt_sum / static_cast<double>(pe.retained_trials) : 0.0;
    participant_means[si] = pe.mean_mt;

    out.report.input_trials += pe.input_trials;
    out.report.excluded_coord_trials += pe.coord_flagged;
    out.report.excluded_mt_trials += pe.mt_flagged;
    out.report.participants.push_back(std::move(pe));
  }

  std::vector<bool> keep_participant(sessions.size(), sessions.size() < 2);
  if (sessions.size() >= 2)
    for (std::size_t i : sigma_clip(participant_means, k)) keep_participant[i] = true;

  for (std::size_t si = 0; si < sessions.size(); ++si) {
    auto& pe = out.report.participants[si];
    if (!keep_participant[si]) {
      pe.excluded = true;
      pe.retained_trials = 0;
      ++out.report.excluded_participants;
      continue;
    }
    CleanSession cs;
    cs.session = sessions[si];
    cs.session.trials.clear();
    for (std::size_t i : survivors[si].trial_idx) cs.session.trials.push_back(sessions[si].trials[i]);
    cs.projections = std::move(survivors[si].proj);
    out.report.retained_trials += cs.session.trials.size();
    out.sessions.push_back(std::move(cs));
  }
  return out;
}

/// Restricts a cleaned dataset to the given participants, keeping order.
inline CleanDataset subset(const CleanDataset& clean, const std::set<std::string>& ids) {
  CleanDataset out;
  out.kind = clean.kind;
  out.report = clean.report;
  for (const auto& cs : clean.sessions)
    if (ids.contains(cs.session.participant_id)) out.sessions.push_back(cs);
  return out;
}

}  // namespace prescreen::preprocess
