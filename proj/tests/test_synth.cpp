#include <cmath>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "prescreen/core/session_io.hpp"
#include "prescreen/preprocess.hpp"
#include "prescreen/screening.hpp"
#include "prescreen/synth.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace prescreen;
using core::Instruction;
using core::SessionKind;
using synth::Profile;

namespace {

std::vector<screening::ScreeningVerdict> phone_verdicts(const synth::Population& pop, double t) {
  const auto table = core::builtin_iphone_table();
  std::vector<screening::ScreeningVerdict> out;
  for (const auto& s : pop.sessions) {
    const auto profile = table.lookup(*s.device);
    out.push_back(screening::classify_phone(s.pretask, profile, screening::PhoneAbsError{t}));
  }
  return out;
}

}  // namespace

TEST(Generator, PhoneDefaultsGiveThreeHundredSixtyMainTrials) {
  auto spec = synth::PopulationSpec::phone();
  spec.n_participants = 5;
  EXPECT_EQ(spec.main_trials_per_participant(), 360);
  EXPECT_EQ(spec.geometry.widths, fixture::phone_widths());
  const auto pop = synth::generate_population(spec);
  for (const auto& s : pop.sessions) {
    int main = 0, fast = 0;
    for (const auto& t : s.trials) {
      if (t.condition.instruction == Instruction::Practice) continue;
      ++main;
      if (t.condition.instruction == Instruction::Fast) ++fast;
    }
    EXPECT_EQ(main, 360);
    EXPECT_EQ(fast, 180);
    EXPECT_EQ(core::check_session(s), "");
  }
}

TEST(Generator, NoiselessConformingDataRecoversFittsExactly) {
  auto spec = fixture::noiseless(synth::PopulationSpec::phone());
  spec.n_participants = 6;
  spec.geometry.trials_per_width_per_block = 2;
  const auto clean = preprocess::clean_dataset(synth::generate_population(spec).sessions, SessionKind::PhoneSingleTrial);
  EXPECT_EQ(clean.report.excluded_participants, 0u);
  const std::map<Instruction, double> mult{{Instruction::Fast, spec.conforming.fast_mt_multiplier},
                                           {Instruction::Accurate, spec.conforming.accurate_mt_multiplier}};
  for (const auto& [instr, m] : mult) {
    const auto fit = models::fit_fitts(clean, instr);
    EXPECT_NEAR(fit.a, spec.conforming.a * m, 1e-9 * spec.conforming.a * m);
    EXPECT_NEAR(fit.b, spec.conforming.b * m, 1e-9 * spec.conforming.b * m);
  }
}

TEST(Generator, NoiselessPretaskMetricsAreSmall) {
  auto spec = fixture::noiseless(synth::PopulationSpec::phone());
  spec.n_participants = 200;
  spec.geometry.trials_per_width_per_block = 1;
  spec.geometry.main_blocks = 2;
  for (const auto& v : phone_verdicts(synth::generate_population(spec), 10.0)) EXPECT_LT(v.metric, 10.0);
}

TEST(Generator, HalfNoResizeFailsHalfAtTenMillimetres) {
  auto spec = synth::PopulationSpec::phone();
  spec.n_participants = 1000;
  spec.geometry.trials_per_width_per_block = 1;
  spec.geometry.main_blocks = 2;
  spec.devices = {{{390, 844}, 460.0, 3}};
  spec.profiles = {{Profile::Conforming, 0.5}, {Profile::NoResize, 0.5}};
  const auto pop = synth::generate_population(spec);
  const auto verdicts = phone_verdicts(pop, 10.0);
  int failed = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (!verdicts[i].passed) ++failed;
    if (pop.labels[i].profile == Profile::NoResize) {
      EXPECT_NEAR(verdicts[i].metric, 45.70, 0.01);
      EXPECT_FALSE(verdicts[i].passed);
    }
  }
  EXPECT_NEAR(failed / 1000.0, 0.5, 0.05);
}

TEST(Generator, ConformingSpreadFollowsWidthSquared) {
  auto spec = synth::PopulationSpec::phone();
  spec.n_participants = 100;  // 100 x 40 = 4000 trials per W
  spec.profiles = {{Profile::Conforming, 1.0}};
  spec.seed = 7;
  const auto clean = preprocess::clean_dataset(synth::generate_population(spec).sessions, SessionKind::PhoneSingleTrial);
  for (Instruction instr : {Instruction::Fast, Instruction::Accurate}) {
    const auto fit = models::fit_variance_1d(clean, instr);
    std::vector<double> obs, pred;
    for (const auto& p : fit.observed) {
      obs.push_back(p.variance);
      pred.push_back(fit.g + fit.h * p.width * p.width);
    }
    EXPECT_GE(oracle::r_squared(obs, pred), 0.9);
  }
}

TEST(Generator, ModerateThresholdSeparatesConformingFromNonResizers) {
  auto spec = synth::PopulationSpec::phone();
  spec.n_participants = 2000;
  spec.geometry.trials_per_width_per_block = 1;
  spec.geometry.main_blocks = 2;
  spec.profiles = {{Profile::Conforming, 0.7}, {Profile::NoResize, 0.15}, {Profile::RandomResize, 0.15}};
  const auto pop = synth::generate_population(spec);
  const auto verdicts = phone_verdicts(pop, 5.0);
  int correct = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i)
    if (verdicts[i].passed == (pop.labels[i].profile == Profile::Conforming)) ++correct;
  EXPECT_GE(correct / 2000.0, 0.95);
}

TEST(Generator, ProfileSharesFollowWeights) {
  auto spec = fixture::mixture_spec(synth::PopulationSpec::phone(), 3000, 0.5, 9);
  spec.geometry.trials_per_width_per_block = 1;
  spec.geometry.main_blocks = 2;
  const auto pop = synth::generate_population(spec);
  std::map<Profile, int> counts;
  for (const auto& l : pop.labels) ++counts[l.profile];
  EXPECT_NEAR(counts[Profile::Conforming] / 3000.0, 0.5, 0.03);
  for (Profile p : {Profile::NoResize, Profile::RandomResize, Profile::IgnoreWidth, Profile::ConstantMT,
                    Profile::IgnoreInstruction})
    EXPECT_NEAR(counts[p] / 3000.0, 0.1, 0.02);
}

TEST(Generator, ConstantMtIgnoresDifficulty) {
  auto spec = synth::PopulationSpec::phone();
  spec.n_participants = 40;
  spec.profiles = {{Profile::ConstantMT, 1.0}};
  const auto clean = preprocess::clean_dataset(synth::generate_population(spec).sessions, SessionKind::PhoneSingleTrial);
  EXPECT_LT(models::fit_fitts(clean, Instruction::Fast).r2, 0.5);
}

TEST(Generator, NoReaimSessionsRecordFailures) {
  auto spec = synth::PopulationSpec::phone_no_reaim();
  spec.n_participants = 10;
  const auto pop = synth::generate_population(spec);
  int misses = 0;
  for (const auto& s : pop.sessions) {
    EXPECT_EQ(core::check_session(s), "");
    for (const auto& t : s.trials) {
      EXPECT_EQ(t.reaim_count, 0);
      misses += t.success ? 0 : 1;
    }
  }
  EXPECT_GT(misses, 0);
}

TEST(Generator, PcSessionsAreValid) {
  auto spec = fixture::mixture_spec(synth::PopulationSpec::pc(), 20, 0.3, 5);
  const auto pop = synth::generate_population(spec);
  for (const auto& s : pop.sessions) {
    EXPECT_EQ(core::check_session(s), "");
    EXPECT_FALSE(s.device.has_value());
    EXPECT_EQ(s.pretask.adjustments.size(), 2u);
  }
}

TEST(Generator, SameSeedSameBytes) {
  auto spec = fixture::mixture_spec(synth::PopulationSpec::phone(), 30, 0.3, 123);
  std::ostringstream a, b, c;
  core::write_sessions(a, synth::generate_population(spec).sessions);
  core::write_sessions(b, synth::generate_population(spec).sessions);
  spec.seed = 124;
  core::write_sessions(c, synth::generate_population(spec).sessions);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(SpecFile, ParsesKeysAndRejectsBadInput) {
  std::istringstream in(
      "preset = phone\nn_participants = 12\nseed = 5\nweight.Conforming = 0.6\nweight.NoResize = 0.4\n"
      "widths = 2, 4, 8\nmt_noise_cv = 0.05\n");
  const auto spec = synth::parse_spec(in);
  EXPECT_EQ(spec.n_participants, 12);
  EXPECT_EQ(spec.seed, 5u);
  EXPECT_EQ(spec.profiles.size(), 2u);
  EXPECT_EQ(spec.geometry.widths, (std::vector<double>{2, 4, 8}));
  EXPECT_DOUBLE_EQ(spec.conforming.mt_noise_cv, 0.05);

  for (const char* bad : {"preset = tablet\n", "colour = red\n", "weight.Conforming = 0.5\n", "n_participants = 0\n",
                          "mt_noise_cv = -1\n", "g = x\n", "no equals sign\n", "weight.Sleepy = 1\n"}) {
    std::istringstream b(bad);
    EXPECT_THROW(synth::parse_spec(b), Error) << bad;
  }
}

TEST(SpecFile, ShippedSpecsParse) {
  for (const char* name : {"spec.cfg", "spec_small.cfg"}) {
    std::ifstream in(std::string(PRESCREEN_DATA_DIR) + "/" + name);
    ASSERT_TRUE(in) << name;
    EXPECT_NO_THROW(synth::parse_spec(in)) << name;
  }
}
