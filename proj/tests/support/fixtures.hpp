#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "prescreen/core/types.hpp"
#include "prescreen/models.hpp"
#include "prescreen/synth.hpp"

namespace fixture {

using namespace prescreen;
using core::Instruction;

inline constexpr double kBandA = 30.0;
inline constexpr double kBandX = 30.0;
inline constexpr double kTopY = 25.0;

inline const std::vector<double>& phone_widths() {
  static const std::vector<double> w{2.0, 2.8, 3.6, 4.4, 5.2, 6.0, 6.8, 7.6, 8.4};
  return w;
}

/// Trial between the two bands; even indices move down, odd ones up.
/// `offset` is the screen-vertical endpoint offset from the target center.
inline core::PointingTrial band_trial(const std::string& id, int block, int index, Instruction instr, double w,
                                      double offset, double mt, bool missed) {
  core::PointingTrial t;
  t.participant_id = id;
  t.block_index = block;
  t.trial_index = index;
  t.condition = {instr, kBandA, w};
  const core::Point top{kBandX, kTopY}, bottom{kBandX, kTopY + kBandA};
  t.prev_center = index % 2 == 0 ? top : bottom;
  t.target_center = index % 2 == 0 ? bottom : top;
  t.endpoint = {t.target_center.x, t.target_center.y + offset};
  t.movement_time_MT = mt;
  t.success = true;
  t.reaim_count = missed ? 1 : 0;
  return t;
}

inline core::SessionLog phone_session(const std::string& id, double final_px = 326.0,
                                      core::Resolution res = {390, 844}) {
  core::SessionLog s;
  s.participant_id = id;
  s.device = res;
  s.pretask = {id, {{final_px, 6.0, 50.0}}, core::SessionKind::PhoneSingleTrial};
  return s;
}

inline core::SessionLog pc_session(const std::string& id, double s1 = 350.0, double s2 = 355.0) {
  core::SessionLog s;
  s.participant_id = id;
  s.pretask = {id, {{s1, 4.0, 100.0}, {s2, 5.0, 900.0}}, core::SessionKind::PcTwoTrial};
  return s;
}

/// Evenly spaced values on [-1, 1]: sd about 0.6, no value beyond 2 sd.
inline double spread_pattern(int k, int n) { return -1.0 + 2.0 * k / (n - 1); }

/// Population spec with the given share of nonconforming participants,
/// split evenly across the five nonconforming profiles.
inline synth::PopulationSpec mixture_spec(synth::PopulationSpec base, int n, double nonconforming, std::uint64_t seed) {
  base.n_participants = n;
  base.seed = seed;
  const double each = nonconforming / 5.0;
  base.profiles = {{synth::Profile::Conforming, 1.0 - nonconforming},
                   {synth::Profile::NoResize, each},
                   {synth::Profile::RandomResize, each},
                   {synth::Profile::IgnoreWidth, each},
                   {synth::Profile::ConstantMT, each},
                   {synth::Profile::IgnoreInstruction, each}};
  return base;
}

inline synth::PopulationSpec noiseless(synth::PopulationSpec s) {
  s.conforming.mt_noise_cv = 0.0;
  s.conforming.speed_sd = 0.0;
  s.profiles = {{synth::Profile::Conforming, 1.0}};
  return s;
}

/// Table whose per-W MT lies exactly on a + b ID and whose per-W axis
/// variance is exactly g + h W^2 (two symmetric endpoints per W).
inline models::StatsTable exact_table(double a, double b, double g, double h, double amplitude,
                                      const std::vector<double>& widths) {
  models::StatsTable table;
  for (double w : widths) {
    auto& c = models::find_or_add(table, amplitude, w);
    const double mt = a + b * models::index_of_difficulty(amplitude, w);
    const double s = std::sqrt((g + h * w * w) / 2.0);
    for (double v : {-s, s}) {
      c.mt.add(mt);
      c.axis.add(v);
      c.along.add(v);
      c.ortho.add(v);
    }
  }
  return table;
}

/// Outlier fixture: 20 phone participants, 2 widths x 2 instructions x 20
/// trials each, with exactly three planted outliers.
struct PlantedOutliers {
  std::vector<core::SessionLog> sessions;
  std::string coord_participant = "p01";  // one band_y outlier
  std::string mt_participant = "p02";     // one MT outlier, another trial
  std::string slow_participant = "p19";   // whole participant far slower
  core::PointingTrial coord_trial;
  core::PointingTrial mt_trial;
};

inline PlantedOutliers planted_outliers() {
  PlantedOutliers f;
  constexpr int kTrials = 20;
  for (int p = 0; p < 20; ++p) {
    char id[8];
    std::snprintf(id, sizeof id, "p%02d", p);
    auto s = phone_session(id);
    const double base = id == f.slow_participant ? 1500.0 : 300.0 + 2.0 * p;
    int block = 0;
    for (Instruction instr : {Instruction::Fast, Instruction::Accurate}) {
      int index = 0;
      for (double w : {3.0, 6.0})
        for (int k = 0; k < kTrials; ++k) {
          double offset = 0.4 * spread_pattern(k, kTrials);
          double mt = base + 10.0 * spread_pattern((k * 7) % kTrials, kTrials);
          if (id == f.coord_participant && instr == Instruction::Fast && w == 3.0 && k == 5) offset = 12.0;
          if (id == f.mt_participant && instr == Instruction::Accurate && w == 6.0 && k == 9) mt = 4000.0;
          auto t = band_trial(id, block, index++, instr, w, offset, mt, std::abs(offset) > w / 2.0);
          if (offset == 12.0) f.coord_trial = t;
          if (mt == 4000.0) f.mt_trial = t;
          s.trials.push_back(t);
        }
      ++block;
    }
    f.sessions.push_back(std::move(s));
  }
  return f;
}

}  // namespace fixture
