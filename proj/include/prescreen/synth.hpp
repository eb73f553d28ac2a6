#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "prescreen/core/device.hpp"
#include "prescreen/core/types.hpp"
#include "prescreen/models.hpp"
#include "prescreen/rng.hpp"
#include "prescreen/screening.hpp"

// Synthetic participant populations with known behavior labels. All
// parameter defaults are generator conventions chosen to give realistic
// shapes; none of them are measurements.

namespace prescreen::synth {

using core::Instruction;
using core::ReaimPolicy;
using core::SessionKind;

enum class Profile { Conforming, NoResize, RandomResize, IgnoreWidth, ConstantMT, IgnoreInstruction };

inline constexpr std::array kAllProfiles{Profile::Conforming, Profile::NoResize,   Profile::RandomResize,
                                         Profile::IgnoreWidth, Profile::ConstantMT, Profile::IgnoreInstruction};

inline const char* to_string(Profile p) {
  switch (p) {
    case Profile::Conforming: return "Conforming";
    case Profile::NoResize: return "NoResize";
    case Profile::RandomResize: return "RandomResize";
    case Profile::IgnoreWidth: return "IgnoreWidth";
    case Profile::ConstantMT: return "ConstantMT";
    case Profile::IgnoreInstruction: return "IgnoreInstruction";
  }
  return "?";
}

inline Profile parse_profile(const std::string& s) {
  for (auto p : kAllProfiles)
    if (s == to_string(p)) return p;
  throw Error("synth.InvalidSpec", "unknown profile '" + s + "'");
}

struct BehaviorProfile {
  Profile kind = Profile::Conforming;
  double mixture_weight = 1.0;
};

struct ConformingParams {
  double a = 220.0;  // ms
  double b = 60.0;   // ms/bit
  double g = 0.9;    // squared length units
  double h = 0.0225;
  double ortho_ratio = 0.8;   // PC only: sigma_y / sigma_x
  double mt_noise_cv = 0.15;  // per-trial multiplicative noise
  double speed_sd = 0.15;     // between-participant speed factor sd
  double pretask_error_scale = 1.5;  // mm (phone) or px (PC)
  double fast_mt_multiplier = 0.9;
  double fast_sigma_multiplier = 1.2;
  double accurate_mt_multiplier = 1.1;
  double accurate_sigma_multiplier = 0.8;
};

struct NonconformingParams {
  double pretask_error_scale = 15.0;  // sloppy adjustment by main-task nonconformers
  double constant_mt_mean = 350.0;    // ms
  double constant_mt_between_sd = 60.0;
  double constant_mt_cv = 0.3;
  // Width-ignoring taps land at a participant-fixed offset drawn from
  // U(-range, range) plus jitter whose sd is log-uniform on
  // [sigma_min, sigma_max]. A per-participant share drawn from
  // U(0, stray_max) of taps are stray, uniform on +-stray_range. None of it
  // depends on W.
  double ignore_width_offset_range = 1.0;
  double ignore_width_sigma_min = 0.5;
  double ignore_width_sigma_max = 1.5;
  double ignore_width_stray_max = 0.3;
  double ignore_width_stray_range = 10.0;
};

struct Geometry {
  double amplitude = 30.0;
  std::vector<double> widths{2.0, 2.8, 3.6, 4.4, 5.2, 6.0, 6.8, 7.6, 8.4};
  int trials_per_width_per_block = 10;
  int main_blocks = 4;
  bool practice_block = true;
  double region_width = 1280.0;  // PC layout region, px
  double region_height = 720.0;
};

struct PopulationSpec {
  int n_participants = 400;
  SessionKind session_kind = SessionKind::PhoneSingleTrial;
  ReaimPolicy reaim_policy = ReaimPolicy::ReaimUntilSuccess;
  Geometry geometry;
  std::vector<BehaviorProfile> profiles{{Profile::Conforming, 1.0}};
  ConformingParams conforming;
  NonconformingParams nonconforming;
  /// When true a nonconforming profile is nonconforming in both tasks; when
  /// false, pre-task profiles (NoResize, RandomResize) behave normally in the
  /// main task and main-task profiles adjust the card normally.
  bool coupled = true;
  double unknown_device_fraction = 0.0;  // phone: share of sessions reporting an unlisted resolution
  std::vector<core::DeviceProfile> devices;  // phone devices to draw from; empty = unambiguous built-in rows
  std::string id_prefix = "p";
  std::uint64_t seed = 7;

  /// Mouse-on-PC shape: A = 510 px, W in {8, 38, 78} px, 5 trials per W per block.
  static PopulationSpec pc() {
    PopulationSpec s;
    s.session_kind = SessionKind::PcTwoTrial;
    s.geometry.amplitude = 510.0;
    s.geometry.widths = {8.0, 38.0, 78.0};
    s.geometry.trials_per_width_per_block = 5;
    s.conforming.a = 150.0;
    s.conforming.b = 140.0;
    s.conforming.g = 2.0;
    s.conforming.h = 0.03;
    s.conforming.pretask_error_scale = 6.0;
    s.nonconforming.pretask_error_scale = 80.0;
    s.nonconforming.constant_mt_mean = 500.0;
    s.nonconforming.constant_mt_between_sd = 80.0;
    s.nonconforming.ignore_width_offset_range = 8.0;
    s.nonconforming.ignore_width_sigma_min = 4.0;
    s.nonconforming.ignore_width_sigma_max = 12.0;
    s.nonconforming.ignore_width_stray_max = 0.2;
    s.nonconforming.ignore_width_stray_range = 60.0;
    return s;
  }

  /// Phone shape with re-aiming: A = 30 mm, nine W levels, 10 trials per W per block.
  static PopulationSpec phone() { return PopulationSpec{}; }

  /// Phone shape where a miss ends the trial.
  static PopulationSpec phone_no_reaim() {
    PopulationSpec s;
    s.reaim_policy = ReaimPolicy::NoReaim;
    return s;
  }

  int main_trials_per_participant() const {
    return static_cast<int>(geometry.widths.size()) * geometry.trials_per_width_per_block * geometry.main_blocks;
  }

  void validate() const {
    if (n_participants <= 0) throw Error("synth.InvalidSpec", "n_participants must be > 0");
    if (geometry.widths.empty() || geometry.trials_per_width_per_block <= 0 || geometry.main_blocks <= 0)
      throw Error("synth.InvalidSpec", "geometry counts must be positive");
    if (!(geometry.amplitude > 0.0)) throw Error("synth.InvalidSpec", "amplitude must be > 0");
    for (double w : geometry.widths) {
      if (!(w > 0.0)) throw Error("synth.InvalidSpec", "widths must be > 0");
      if (!(conforming.g + conforming.h * w * w > 0.0))
        throw Error("synth.InvalidSpec", "conforming variance g + h W^2 must be > 0 for every W");
    }
    if (!(conforming.mt_noise_cv >= 0.0) || !(nonconforming.constant_mt_cv >= 0.0) || !(conforming.speed_sd >= 0.0))
      throw Error("synth.InvalidSpec", "noise parameters must be >= 0");
    if (profiles.empty()) throw Error("synth.InvalidSpec", "no behavior profiles");
    double total = 0.0;
    for (const auto& p : profiles) {
      if (!(p.mixture_weight >= 0.0)) throw Error("synth.InvalidSpec", "negative mixture weight");
      total += p.mixture_weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error("synth.InvalidSpec", "mixture weights must sum to 1");
    if (!(unknown_device_fraction >= 0.0 && unknown_device_fraction <= 1.0))
      throw Error("synth.InvalidSpec", "unknown_device_fraction must lie in [0, 1]");
  }
};

struct Label {
  std::string participant_id;
  Profile profile = Profile::Conforming;
};

struct Population {
  std::vector<core::SessionLog> sessions;
  std::vector<Label> labels;
};

inline std::string labels_csv(const std::vector<Label>& labels) {
  std::string out = "participant_id,profile\n";
  for (const auto& l : labels) out += l.participant_id + "," + to_string(l.profile) + "\n";
  return out;
}

/// Unambiguous built-in device rows; phone sessions draw from these by default.
inline std::vector<core::DeviceProfile> default_phone_devices() {
  const auto table = core::builtin_iphone_table();
  std::vector<core::DeviceProfile> out;
  for (const auto& row : table.rows()) {
    try {
      table.lookup(row.logical_resolution);
      out.push_back(row);
    } catch (const Error&) {
    }
  }
  return out;
}

/// Resolution absent from every device table shipped with the toolkit.
inline constexpr core::Resolution kUnlistedResolution{123, 456};

namespace detail {

struct Behavior {
  bool follows_width = true;  // endpoint spread grows with W
  bool fitts_mt = true;       // MT grows with ID
  bool follows_instruction = true;
};

inline Behavior main_task_behavior(Profile p, bool coupled) {
  switch (p) {
    case Profile::Conforming: return {};
    case Profile::NoResize:
    case Profile::RandomResize:
      if (!coupled) return {};
      return {false, false, false};
    case Profile::IgnoreWidth: return {false, true, true};
    case Profile::ConstantMT: return {true, false, true};
    case Profile::IgnoreInstruction: return {true, true, false};
  }
  return {};
}

class ParticipantGenerator {
public:
  ParticipantGenerator(const PopulationSpec& spec, const std::vector<core::DeviceProfile>& devices, int index)
      : spec_(spec), devices_(devices), rng_(derive_seed(spec.seed, {static_cast<std::uint64_t>(index)})) {
    char id[32];
    std::snprintf(id, sizeof id, "%s%04d", spec.id_prefix.c_str(), index + 1);
    id_ = id;
  }

  std::pair<core::SessionLog, Label> run() {
    const Profile profile = draw_profile();
    behavior_ = main_task_behavior(profile, spec_.coupled);
    speed_ = std::max(0.3, 1.0 + spec_.conforming.speed_sd * rng_.normal());
    constant_mt_ = std::max(100.0, rng_.normal(spec_.nonconforming.constant_mt_mean,
                                               spec_.nonconforming.constant_mt_between_sd));
    const double range = spec_.nonconforming.ignore_width_offset_range;
    fixed_offset_ = rng_.uniform(-range, range);
    careless_sigma_ = std::exp(rng_.uniform(std::log(spec_.nonconforming.ignore_width_sigma_min),
                                            std::log(spec_.nonconforming.ignore_width_sigma_max)));
    stray_share_ = rng_.uniform(0.0, spec_.nonconforming.ignore_width_stray_max);

    core::SessionLog s;
    s.participant_id = id_;
    s.reaim_policy = spec_.reaim_policy;
    s.pretask.participant_id = id_;
    s.pretask.session_kind = spec_.session_kind;
    if (spec_.session_kind == SessionKind::PhoneSingleTrial) {
      device_ = devices_[rng_.below(devices_.size())];
      s.device = rng_.uniform() < spec_.unknown_device_fraction ? kUnlistedResolution : device_.logical_resolution;
      s.pretask.adjustments = {phone_adjustment(profile)};
    } else {
      s.pretask.adjustments = pc_adjustments(profile);
    }
    pointing_blocks(s);
    return {std::move(s), Label{id_, profile}};
  }

private:
  Profile draw_profile() {
    double u = rng_.uniform(), acc = 0.0;
    for (const auto& p : spec_.profiles) {
      acc += p.mixture_weight;
      if (u < acc) return p.kind;
    }
    return spec_.profiles.back().kind;
  }

  bool sloppy_pretask(Profile p) const {
    return spec_.coupled && p != Profile::Conforming && p != Profile::NoResize && p != Profile::RandomResize;
  }

  double pretask_error(Profile p) {
    const double scale = sloppy_pretask(p) ? spec_.nonconforming.pretask_error_scale : spec_.conforming.pretask_error_scale;
    const double magnitude = std::abs(rng_.normal()) * scale;
    return rng_.uniform() < 0.5 ? -magnitude : magnitude;
  }

  core::Adjustment phone_adjustment(Profile p) {
    constexpr double kInitialPx = 50.0;
    core::Adjustment a;
    a.initial_size = kInitialPx;
    if (p == Profile::NoResize) {
      a.final_size = kInitialPx;
      a.op_time = 0.0;
    } else if (p == Profile::RandomResize) {
      a.final_size = rng_.uniform(kInitialPx, static_cast<double>(device_.logical_resolution.width_px));
      a.op_time = rng_.uniform(0.3, 2.0);
    } else {
      const double mm = std::max(3.0, screening::kCardShortSideMm + pretask_error(p));
      a.final_size = core::mm_to_px(mm, device_);
      a.op_time = 2.0 + std::abs(rng_.normal(0.0, 5.0));
    }
    return a;
  }

  std::vector<core::Adjustment> pc_adjustments(Profile p) {
    std::array<double, 2> initial{100.0, 900.0};
    if (rng_.uniform() < 0.5) std::swap(initial[0], initial[1]);
    std::vector<core::Adjustment> out(2);
    for (int i = 0; i < 2; ++i) out[i].initial_size = initial[i];
    if (p == Profile::NoResize) {
      for (auto& a : out) {
        a.final_size = a.initial_size;
        a.op_time = 0.0;
      }
    } else if (p == Profile::RandomResize) {
      for (auto& a : out) {
        a.final_size = rng_.uniform(100.0, 900.0);
        a.op_time = rng_.uniform(0.3, 2.0);
      }
    } else {
      const double card_px = rng_.uniform(250.0, 500.0);  // card long side on this display
      out[0].final_size = card_px;
      out[1].final_size = std::max(1.0, card_px + pretask_error(p));
      for (auto& a : out) a.op_time = 2.0 + std::abs(rng_.normal(0.0, 6.0));
    }
    return out;
  }

  double mt_multiplier(Instruction i) const {
    if (!behavior_.follows_instruction || i == Instruction::Practice) return 1.0;
    return i == Instruction::Fast ? spec_.conforming.fast_mt_multiplier : spec_.conforming.accurate_mt_multiplier;
  }

  double sigma_multiplier(Instruction i) const {
    if (!behavior_.follows_instruction || i == Instruction::Practice) return 1.0;
    return i == Instruction::Fast ? spec_.conforming.fast_sigma_multiplier : spec_.conforming.accurate_sigma_multiplier;
  }

  double spread(double w, Instruction i) const {
    const double base = behavior_.follows_width ? std::sqrt(spec_.conforming.g + spec_.conforming.h * w * w)
                                                : careless_sigma_;
    return base * sigma_multiplier(i);
  }

  double bias() const { return behavior_.follows_width ? 0.0 : fixed_offset_; }

  double movement_time(double a, double w, Instruction i) {
    double mt;
    if (behavior_.fitts_mt) {
      const double nominal = spec_.conforming.a + spec_.conforming.b * models::index_of_difficulty(a, w);
      mt = nominal * speed_ * mt_multiplier(i) * (1.0 + spec_.conforming.mt_noise_cv * rng_.normal());
    } else {
      mt = constant_mt_ * (1.0 + spec_.nonconforming.constant_mt_cv * rng_.normal());
    }
    return std::max(30.0, mt);
  }

  /// Offsets (along, ortho) of one attempt in the task frame.
  std::pair<double, double> attempt(double w, Instruction i) {
    const double sd = spread(w, i);
    if (!behavior_.follows_width && rng_.uniform() < stray_share_) {
      const double r = spec_.nonconforming.ignore_width_stray_range;
      const double ortho = spec_.session_kind == SessionKind::PcTwoTrial ? rng_.uniform(-r, r) : rng_.normal(0.0, 1.5);
      return {rng_.uniform(-r, r), ortho};
    }
    if (spec_.session_kind == SessionKind::PcTwoTrial)
      return {rng_.normal(bias(), sd), rng_.normal(0.0, sd * spec_.conforming.ortho_ratio)};
    return {rng_.normal(bias(), sd), rng_.normal(0.0, 1.5)};
  }

  bool hit(double along, double ortho, double w) const {
    if (spec_.session_kind == SessionKind::PcTwoTrial) return std::hypot(along, ortho) <= w / 2.0;
    return std::abs(along) <= w / 2.0;
  }

  core::Point pc_next_target(core::Point prev, double amplitude, double w) {
    const auto& g = spec_.geometry;
    const double margin = w / 2.0;
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const double angle = rng_.uniform(0.0, 2.0 * std::numbers::pi);
      const core::Point p{prev.x + amplitude * std::cos(angle), prev.y + amplitude * std::sin(angle)};
      if (p.x >= margin && p.x <= g.region_width - margin && p.y >= margin && p.y <= g.region_height - margin) return p;
    }
    throw Error("synth.InvalidSpec", "no target position at distance A fits in the layout region");
  }

  void pointing_blocks(core::SessionLog& s) {
    const auto& g = spec_.geometry;
    std::vector<Instruction> schedule;
    for (int b = 0; b < g.main_blocks; ++b) schedule.push_back(b % 2 == 0 ? Instruction::Fast : Instruction::Accurate);
    std::shuffle(schedule.begin(), schedule.end(), rng_.engine());
    if (g.practice_block) schedule.insert(schedule.begin(), Instruction::Practice);

    // Phone bands: centered horizontally, top band center 25 mm from the top.
    const double screen_w_mm =
        spec_.session_kind == SessionKind::PhoneSingleTrial
            ? core::px_to_mm(static_cast<double>(device_.logical_resolution.width_px), device_)
            : 0.0;
    const core::Point top{screen_w_mm / 2.0, 25.0};
    const core::Point bottom{screen_w_mm / 2.0, 25.0 + g.amplitude};

    for (std::size_t block = 0; block < schedule.size(); ++block) {
      const Instruction instruction = schedule[block];
      std::vector<double> widths;
      for (double w : g.widths)
        for (int k = 0; k < g.trials_per_width_per_block; ++k) widths.push_back(w);
      std::shuffle(widths.begin(), widths.end(), rng_.engine());

      core::Point prev = spec_.session_kind == SessionKind::PcTwoTrial
                             ? core::Point{g.region_width / 2.0, g.region_height / 2.0}  // Start button
                             : top;
      for (std::size_t k = 0; k < widths.size(); ++k) {
        const double w = widths[k];
        core::PointingTrial t;
        t.participant_id = s.participant_id;
        t.block_index = static_cast<int>(block);
        t.trial_index = static_cast<int>(k);
        t.condition = {instruction, g.amplitude, w};
        t.prev_center = prev;
        t.target_center = spec_.session_kind == SessionKind::PcTwoTrial ? pc_next_target(prev, g.amplitude, w)
                                                                        : (prev == top ? bottom : top);
        auto [along, ortho] = attempt(w, instruction);
        if (spec_.session_kind == SessionKind::PcTwoTrial) {
          const double dx = t.target_center.x - prev.x, dy = t.target_center.y - prev.y;
          const double len = std::hypot(dx, dy);
          const double ux = dx / len, uy = dy / len;
          t.endpoint = {t.target_center.x + along * ux - ortho * uy, t.target_center.y + along * uy + ortho * ux};
        } else {
          // along is the vertical offset, positive below the target center
          t.endpoint = {t.target_center.x + ortho, t.target_center.y + along};
        }
        t.movement_time_MT = movement_time(g.amplitude, w, instruction);
        const bool first_hit = hit(along, ortho, w);
        if (spec_.reaim_policy == ReaimPolicy::NoReaim) {
          t.success = first_hit;
        } else {
          t.success = true;
          if (!first_hit) {
            t.reaim_count = 1;
            while (t.reaim_count < 20) {
              auto [a2, o2] = attempt(w, instruction);
              if (hit(a2, o2, w)) break;
              ++t.reaim_count;
            }
          }
        }
        s.trials.push_back(t);
        prev = t.target_center;
      }
    }
  }

  const PopulationSpec& spec_;
  const std::vector<core::DeviceProfile>& devices_;
  Rng rng_;
  std::string id_;
  Behavior behavior_;
  double speed_ = 1.0;
  double constant_mt_ = 350.0;
  double fixed_offset_ = 0.0;
  double careless_sigma_ = 1.0;
  double stray_share_ = 0.0;
  core::DeviceProfile device_{{390, 844}, 460, 3};
};

}  // namespace detail

/// Draws each participant's profile by weight and simulates their pre-task
/// and pointing blocks. Participant i uses its own substream, so output is a
/// pure function of the spec.
inline Population generate_population(const PopulationSpec& spec) {
  spec.validate();
  const auto devices = spec.devices.empty() ? default_phone_devices() : spec.devices;
  if (spec.session_kind == SessionKind::PhoneSingleTrial && devices.empty())
    throw Error("synth.InvalidSpec", "phone sessions need at least one device");
  Population pop;
  for (int i = 0; i < spec.n_participants; ++i) {
    auto [session, label] = detail::ParticipantGenerator(spec, devices, i).run();
    pop.sessions.push_back(std::move(session));
    pop.labels.push_back(std::move(label));
  }
  return pop;
}

// ---------------------------------------------------------------------------
// Flat key=value spec files

/// Parses a spec file. `preset` (pc | phone | phone-noreaim) is applied
/// first; every other key overrides one field. Lines starting with '#' are
/// comments. Weights are given as `weight.<Profile> = value`.
inline PopulationSpec parse_spec(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("synth.InvalidSpec", "line " + std::to_string(line_no) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  PopulationSpec spec;
  if (auto it = kv.find("preset"); it != kv.end()) {
    if (it->second == "pc") spec = PopulationSpec::pc();
    else if (it->second == "phone") spec = PopulationSpec::phone();
    else if (it->second == "phone-noreaim") spec = PopulationSpec::phone_no_reaim();
    else throw Error("synth.InvalidSpec", "unknown preset '" + it->second + "'");
    kv.erase(it);
  }

  auto number = [](const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::logic_error&) {
      throw Error("synth.InvalidSpec", "key '" + key + "': not a number");
    }
  };
  std::vector<BehaviorProfile> weights;
  const std::map<std::string, double*> numeric{
      {"a", &spec.conforming.a},
      {"b", &spec.conforming.b},
      {"g", &spec.conforming.g},
      {"h", &spec.conforming.h},
      {"ortho_ratio", &spec.conforming.ortho_ratio},
      {"mt_noise_cv", &spec.conforming.mt_noise_cv},
      {"speed_sd", &spec.conforming.speed_sd},
      {"pretask_error_scale", &spec.conforming.pretask_error_scale},
      {"fast_mt_multiplier", &spec.conforming.fast_mt_multiplier},
      {"fast_sigma_multiplier", &spec.conforming.fast_sigma_multiplier},
      {"accurate_mt_multiplier", &spec.conforming.accurate_mt_multiplier},
      {"accurate_sigma_multiplier", &spec.conforming.accurate_sigma_multiplier},
      {"nonconforming_pretask_error_scale", &spec.nonconforming.pretask_error_scale},
      {"constant_mt_mean", &spec.nonconforming.constant_mt_mean},
      {"constant_mt_between_sd", &spec.nonconforming.constant_mt_between_sd},
      {"constant_mt_cv", &spec.nonconforming.constant_mt_cv},
      {"ignore_width_sigma_min", &spec.nonconforming.ignore_width_sigma_min},
      {"ignore_width_sigma_max", &spec.nonconforming.ignore_width_sigma_max},
      {"ignore_width_offset_range", &spec.nonconforming.ignore_width_offset_range},
      {"ignore_width_stray_max", &spec.nonconforming.ignore_width_stray_max},
      {"ignore_width_stray_range", &spec.nonconforming.ignore_width_stray_range},
      {"amplitude", &spec.geometry.amplitude},
      {"unknown_device_fraction", &spec.unknown_device_fraction},
  };
  for (const auto& [key, value] : kv) {
    if (auto it = numeric.find(key); it != numeric.end()) {
      *it->second = number(key, value);
    } else if (key.rfind("weight.", 0) == 0) {
      weights.push_back({parse_profile(key.substr(7)), number(key, value)});
    } else if (key == "n_participants") {
      spec.n_participants = static_cast<int>(number(key, value));
    } else if (key == "trials_per_width_per_block") {
      spec.geometry.trials_per_width_per_block = static_cast<int>(number(key, value));
    } else if (key == "main_blocks") {
      spec.geometry.main_blocks = static_cast<int>(number(key, value));
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(std::stoull(value));
    } else if (key == "reaim_policy") {
      spec.reaim_policy = core::parse_reaim_policy(value);
    } else if (key == "coupled") {
      spec.coupled = value == "true" || value == "1";
    } else if (key == "id_prefix") {
      spec.id_prefix = value;
    } else if (key == "widths") {
      spec.geometry.widths.clear();
      std::istringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) spec.geometry.widths.push_back(number(key, item));
    } else {
      throw Error("synth.InvalidSpec", "unknown key '" + key + "'");
    }
  }
  if (!weights.empty()) spec.profiles = weights;
  spec.validate();
  return spec;
}

}  // namespace prescreen::synth
