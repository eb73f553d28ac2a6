#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "prescreen/core/device.hpp"
#include "prescreen/models.hpp"
#include "prescreen/preprocess.hpp"
#include "prescreen/rng.hpp"
#include "prescreen/screening.hpp"
#include "prescreen/version.hpp"

namespace prescreen::sim {

using core::Instruction;
using core::SessionKind;

enum class Model { FittsMT, ErDisk, ErBand };

inline const char* to_string(Model m) {
  switch (m) {
    case Model::FittsMT: return "fitts";
    case Model::ErDisk: return "er-disk";
    case Model::ErBand: return "er-band";
  }
  return "?";
}

inline Model parse_model(const std::string& s) {
  if (s == "fitts") return Model::FittsMT;
  if (s == "er-disk") return Model::ErDisk;
  if (s == "er-band") return Model::ErBand;
  throw Error("sim.BadModel", "unknown model '" + s + "'");
}

/// The ER model matching a session kind: disk targets on PC, bands on phone.
inline Model er_model_for(SessionKind kind) {
  return kind == SessionKind::PcTwoTrial ? Model::ErDisk : Model::ErBand;
}

inline std::string instruction_name(Instruction i) { return i == Instruction::Fast ? "fast" : "accurate"; }

struct SimGrid {
  std::vector<int> N_values{10, 20, 40, 80};
  std::vector<double> T_values;
  std::vector<double> X_values{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  int repetitions = 1000;
  std::uint64_t seed = 0;

  static SimGrid pc_default(std::uint64_t seed = 0) {
    SimGrid g;
    for (int t = 5; t <= 50; t += 5) g.T_values.push_back(t);
    g.seed = seed;
    return g;
  }

  static SimGrid phone_default(std::uint64_t seed = 0) {
    SimGrid g;
    for (int t = 1; t <= 10; ++t) g.T_values.push_back(t);
    g.seed = seed;
    return g;
  }

  void validate() const {
    if (N_values.empty() || T_values.empty() || X_values.empty())
      throw Error("sim.InvalidGrid", "grid axes must be nonempty");
    if (repetitions < 1) throw Error("sim.InvalidGrid", "repetitions must be >= 1");
    for (int n : N_values)
      if (n < 1) throw Error("sim.InvalidGrid", "N must be >= 1");
    for (double t : T_values)
      if (!(t > 0.0)) throw Error("sim.InvalidGrid", "T must be > 0");
    for (double x : X_values)
      if (!(x >= 0.0 && x <= 100.0)) throw Error("sim.InvalidGrid", "X must lie in [0, 100]");
  }
};

/// Reads a flat key=value grid file. Keys: preset (pc | phone), N, T, X
/// (comma-separated lists, or lo:step:hi ranges for T and X), repetitions,
/// seed. '#' starts a comment.
inline SimGrid parse_grid(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  auto trim = [](const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("sim.InvalidGrid", "line " + std::to_string(line_no) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  auto number = [](const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::logic_error&) {
    }
    throw Error("sim.InvalidGrid", "key '" + key + "': bad number '" + v + "'");
  };
  auto list = [&](const std::string& key, const std::string& v) {
    std::vector<double> out;
    if (std::count(v.begin(), v.end(), ':') == 2) {
      const auto c1 = v.find(':'), c2 = v.rfind(':');
      const double lo = number(key, trim(v.substr(0, c1)));
      const double step = number(key, trim(v.substr(c1 + 1, c2 - c1 - 1)));
      const double hi = number(key, trim(v.substr(c2 + 1)));
      if (!(step > 0.0) || hi < lo) throw Error("sim.InvalidGrid", "key '" + key + "': bad range");
      for (int k = 0; lo + k * step <= hi + 1e-9 * step; ++k) out.push_back(lo + k * step);
      return out;
    }
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(number(key, trim(item)));
    return out;
  };

  SimGrid g;
  if (auto it = kv.find("preset"); it != kv.end()) {
    if (it->second == "pc") g = SimGrid::pc_default();
    else if (it->second == "phone") g = SimGrid::phone_default();
    else throw Error("sim.InvalidGrid", "unknown preset '" + it->second + "'");
    kv.erase(it);
  }
  for (const auto& [key, value] : kv) {
    if (key == "N") {
      g.N_values.clear();
      for (double n : list(key, value)) {
        if (n != std::floor(n)) throw Error("sim.InvalidGrid", "N must be an integer");
        g.N_values.push_back(static_cast<int>(n));
      }
    } else if (key == "T") {
      g.T_values = list(key, value);
    } else if (key == "X") {
      g.X_values = list(key, value);
    } else if (key == "repetitions") {
      const double r = number(key, value);
      if (r != std::floor(r)) throw Error("sim.InvalidGrid", "repetitions must be an integer");
      g.repetitions = static_cast<int>(r);
    } else if (key == "seed") {
      std::uint64_t seed = 0;
      const auto res = std::from_chars(value.data(), value.data() + value.size(), seed);
      if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
        throw Error("sim.InvalidGrid", "key 'seed': bad integer '" + value + "'");
      g.seed = seed;
    } else {
      throw Error("sim.InvalidGrid", "unknown key '" + key + "'");
    }
  }
  g.validate();
  return g;
}

/// Number of cohort members drawn from the non-passing group:
/// round(N * X / 100), halves away from zero.
inline int nonpassing_count(int n, double x_percent) {
  return static_cast<int>(std::round(static_cast<double>(n) * x_percent / 100.0));
}

struct CohortSample {
  int repetition_index = 0;
  std::vector<std::size_t> members;  // participant indices, non-passing first
  int n_nonpassing = 0;
  int n_passing = 0;
};

namespace detail {
/// k distinct elements, uniformly, by a partial Fisher-Yates shuffle of a copy.
inline void draw_without_replacement(const std::vector<std::size_t>& pool, int k, Rng& rng,
                                     std::vector<std::size_t>& out) {
  std::vector<std::size_t> work = pool;
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(work.size() - static_cast<std::size_t>(i));
    std::swap(work[static_cast<std::size_t>(i)], work[j]);
    out.push_back(work[static_cast<std::size_t>(i)]);
  }
}
}  // namespace detail

inline CohortSample sample_mixture(const std::vector<std::size_t>& passing, const std::vector<std::size_t>& non_passing,
                                   int n, double x_percent, Rng& rng, int repetition_index = 0) {
  CohortSample s;
  s.repetition_index = repetition_index;
  s.n_nonpassing = nonpassing_count(n, x_percent);
  s.n_passing = n - s.n_nonpassing;
  if (static_cast<std::size_t>(s.n_nonpassing) > non_passing.size())
    throw Error("sim.InsufficientGroup", "non-passing group: needed " + std::to_string(s.n_nonpassing) +
                                             ", available " + std::to_string(non_passing.size()));
  if (static_cast<std::size_t>(s.n_passing) > passing.size())
    throw Error("sim.InsufficientGroup", "passing group: needed " + std::to_string(s.n_passing) + ", available " +
                                             std::to_string(passing.size()));
  s.members.reserve(static_cast<std::size_t>(n));
  if (s.n_nonpassing > 0) detail::draw_without_replacement(non_passing, s.n_nonpassing, rng, s.members);
  if (s.n_passing > 0) detail::draw_without_replacement(passing, s.n_passing, rng, s.members);
  return s;
}

/// Per-participant sufficient statistics, so that a cohort fit costs a merge
/// of N small tables rather than a pass over raw trials.
class StatsIndex {
public:
  explicit StatsIndex(const preprocess::CleanDataset& clean) : kind_(clean.kind) {
    for (const auto& cs : clean.sessions) {
      index_of_[cs.session.participant_id] = ids_.size();
      ids_.push_back(cs.session.participant_id);
      fast_.push_back(models::session_stats(cs, Instruction::Fast, kind_));
      accurate_.push_back(models::session_stats(cs, Instruction::Accurate, kind_));
    }
  }

  SessionKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  const models::StatsTable& table(std::size_t participant, Instruction instruction) const {
    return instruction == Instruction::Fast ? fast_[participant] : accurate_[participant];
  }

  std::optional<std::size_t> find(const std::string& id) const {
    auto it = index_of_.find(id);
    if (it == index_of_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::size_t> indices(const std::vector<std::string>& ids) const {
    std::vector<std::size_t> out;
    for (const auto& id : ids)
      if (auto i = find(id)) out.push_back(*i);
    return out;
  }

  models::StatsTable pooled(const std::vector<std::size_t>& members, Instruction instruction) const {
    models::StatsTable table;
    for (std::size_t m : members) models::pool_into(table, this->table(m, instruction));
    return table;
  }

private:
  SessionKind kind_;
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> index_of_;
  std::vector<models::StatsTable> fast_;
  std::vector<models::StatsTable> accurate_;
};

/// Partition as participant indices into a StatsIndex.
struct IndexPartition {
  std::vector<std::size_t> passing;
  std::vector<std::size_t> non_passing;
};

inline IndexPartition to_indices(const StatsIndex& index, const screening::Partition& p) {
  return {index.indices(p.passing), index.indices(p.non_passing)};
}

/// Fit R^2 of one model on one pooled cohort.
inline double fit_r2(Model model, const models::StatsTable& pooled) {
  switch (model) {
    case Model::FittsMT: return models::fit_fitts(pooled).r2;
    case Model::ErDisk: return models::predict_er(models::fit_sigma_2d(pooled), pooled).r2;
    case Model::ErBand: return models::predict_er(models::fit_variance_1d(pooled), pooled).r2;
  }
  return models::kUndefinedR2;
}

inline std::vector<double> distinct_widths(const models::StatsTable& pooled) {
  std::vector<double> ws;
  for (const auto& c : pooled) ws.push_back(c.width);
  std::sort(ws.begin(), ws.end());
  ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
  return ws;
}

/// Leave-one-W-out predictive R^2: each width is held out in turn, the model
/// is fitted on the remaining widths, and the held-out observations are
/// predicted. All folds are pooled before computing R^2.
inline double loocv_r2(Model model, const models::StatsTable& pooled) {
  const auto widths = distinct_widths(pooled);
  if (widths.size() < 3) throw Error("sim.TooFewWidths", "LOOCV needs at least 3 W levels");
  std::vector<double> observed, predicted;
  for (double held : widths) {
    models::StatsTable train, test;
    for (const auto& c : pooled) (c.width == held ? test : train).push_back(c);
    switch (model) {
      case Model::FittsMT: {
        const auto fit = models::fit_fitts(train);
        for (const auto& c : test) {
          observed.push_back(c.mt.mean);
          predicted.push_back(fit.predict(c.amplitude, c.width));
        }
        break;
      }
      case Model::ErDisk: {
        const auto fit = models::fit_sigma_2d(train);
        for (const auto& c : models::by_width(test)) {
          observed.push_back(c.error_rate());
          predicted.push_back(models::predicted_er(fit, c.width));
        }
        break;
      }
      case Model::ErBand: {
        const auto fit = models::fit_variance_1d(train);
        for (const auto& c : models::by_width(test)) {
          observed.push_back(c.error_rate());
          predicted.push_back(models::predicted_er(fit, c.width));
        }
        break;
      }
    }
  }
  return models::r_squared(observed, predicted);
}

enum class Mode { Fit, Loocv };

inline const char* to_string(Mode m) { return m == Mode::Fit ? "fit" : "loocv"; }

struct CellResult {
  double mean_r2 = std::numeric_limits<double>::quiet_NaN();
  double min_r2 = std::numeric_limits<double>::quiet_NaN();
  double max_r2 = std::numeric_limits<double>::quiet_NaN();
  int reps_ok = 0;
  int reps_failed = 0;
  bool empty = true;  // sampling infeasible or every repetition failed
};

struct CellSpec {
  int n = 10;
  double t = 1.0;
  double x = 0.0;
  Model model = Model::FittsMT;
  Instruction instruction = Instruction::Fast;
  int repetitions = 1;
  std::uint64_t seed = 0;
  Mode mode = Mode::Fit;
};

/// Seed of one repetition. T is not part of the key, so cells that differ
/// only in T draw from identical streams and differ only through their
/// partitions. Fit and LOOCV share streams and hence cohorts.
inline std::uint64_t repetition_seed(const CellSpec& c, int repetition) {
  return derive_seed(c.seed, {static_cast<std::uint64_t>(c.n), key_of(c.x), static_cast<std::uint64_t>(c.model),
                              static_cast<std::uint64_t>(c.instruction), static_cast<std::uint64_t>(repetition)});
}

/// Monte Carlo estimate for one (N, T, X, model, instruction) cell: the
/// arithmetic mean of R^2 over repetitions whose fit succeeded. Throws
/// sim.InsufficientGroup when the cohort cannot be drawn and
/// sim.AllRepetitionsFailed when no repetition produced a finite R^2.
inline CellResult evaluate_cell(const StatsIndex& index, const IndexPartition& partition, const CellSpec& spec) {
  CellResult r;
  double sum = 0.0;
  for (int rep = 0; rep < spec.repetitions; ++rep) {
    Rng rng(repetition_seed(spec, rep));
    const auto cohort = sample_mixture(partition.passing, partition.non_passing, spec.n, spec.x, rng, rep);
    double r2 = models::kUndefinedR2;
    try {
      const auto pooled = index.pooled(cohort.members, spec.instruction);
      r2 = spec.mode == Mode::Fit ? fit_r2(spec.model, pooled) : loocv_r2(spec.model, pooled);
    } catch (const Error& e) {
      if (e.code() == "sim.TooFewWidths") throw;
      r2 = models::kUndefinedR2;
    }
    if (!std::isfinite(r2)) {
      ++r.reps_failed;
      continue;
    }
    ++r.reps_ok;
    sum += r2;
    r.min_r2 = r.reps_ok == 1 ? r2 : std::min(r.min_r2, r2);
    r.max_r2 = r.reps_ok == 1 ? r2 : std::max(r.max_r2, r2);
  }
  if (r.reps_ok == 0)
    throw Error("sim.AllRepetitionsFailed", std::to_string(r.reps_failed) + " repetitions failed");
  r.mean_r2 = sum / r.reps_ok;
  r.empty = false;
  return r;
}

inline CellResult loocv_cell(const StatsIndex& index, const IndexPartition& partition, CellSpec spec) {
  spec.mode = Mode::Loocv;
  return evaluate_cell(index, partition, spec);
}

// ---------------------------------------------------------------------------
// Partitions per threshold

/// Pre-task inputs of the participants that survived cleaning. Phone
/// participants whose device cannot be resolved are left out of both groups.
struct ScreeningPopulation {
  std::vector<core::PreTaskOutcome> outcomes;
  std::vector<std::optional<core::DeviceProfile>> profiles;
  std::vector<std::string> unresolved;

  static ScreeningPopulation from(const preprocess::CleanDataset& clean, const core::DeviceTable* devices) {
    ScreeningPopulation pop;
    for (const auto& cs : clean.sessions) {
      std::optional<core::DeviceProfile> profile;
      if (clean.kind == SessionKind::PhoneSingleTrial) {
        try {
          if (!cs.session.device || devices == nullptr) throw Error("core.NoMatch", "no device");
          profile = devices->lookup(*cs.session.device);
        } catch (const Error&) {
          pop.unresolved.push_back(cs.session.participant_id);
          continue;
        }
      }
      pop.outcomes.push_back(cs.session.pretask);
      pop.profiles.push_back(profile);
    }
    return pop;
  }

  std::vector<screening::ScreeningVerdict> verdicts(const screening::ScreeningRule& rule) const {
    std::vector<screening::ScreeningVerdict> out;
    for (std::size_t i = 0; i < outcomes.size(); ++i)
      out.push_back(screening::classify(outcomes[i], rule, profiles[i] ? &*profiles[i] : nullptr));
    return out;
  }

  screening::Partition partition_at(const screening::ScreeningRule& family, double t) const {
    return screening::partition(verdicts(screening::with_threshold(family, t)));
  }
};

struct GroupSize {
  double t = 0.0;
  std::size_t passing = 0;
  std::size_t non_passing = 0;
};

// ---------------------------------------------------------------------------
// Grid sweep

struct HeatmapGrid {
  SimGrid grid;
  std::vector<Model> models;
  std::vector<Instruction> instructions;
  Mode mode = Mode::Fit;
  std::string rule;  // family description, embedded in exports
  std::vector<GroupSize> group_sizes;
  std::vector<CellResult> cells;  // [model][instruction][N][T][X]

  std::size_t cell_index(std::size_t m, std::size_t i, std::size_t n, std::size_t t, std::size_t x) const {
    const std::size_t nn = grid.N_values.size(), nt = grid.T_values.size(), nx = grid.X_values.size();
    return (((m * instructions.size() + i) * nn + n) * nt + t) * nx + x;
  }

  const CellResult& at(std::size_t m, std::size_t i, std::size_t n, std::size_t t, std::size_t x) const {
    return cells[cell_index(m, i, n, t, x)];
  }

  std::size_t populated() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const CellResult& c) { return !c.empty; }));
  }
};

struct SweepOptions {
  Mode mode = Mode::Fit;
  unsigned workers = 0;  // 0: hardware concurrency
};

/// Runs every (model, instruction, N, T, X) cell. The partition is
/// recomputed for each T; infeasible or wholly failed cells are left empty.
/// Output is identical for any worker count.
inline HeatmapGrid sweep_grid(const preprocess::CleanDataset& clean, const screening::ScreeningRule& family,
                              const core::DeviceTable* devices, const SimGrid& grid, const std::vector<Model>& models,
                              const std::vector<Instruction>& instructions, const SweepOptions& options = {}) {
  grid.validate();
  if (screening::session_kind_of(family) != clean.kind)
    throw Error("sim.KindMismatch", "screening rule does not match the session kind");
  HeatmapGrid out;
  out.grid = grid;
  out.models = models;
  out.instructions = instructions;
  out.mode = options.mode;
  auto family_json = screening::to_json(family);
  family_json.erase("T");
  out.rule = family_json.dump();

  const StatsIndex index(clean);
  const auto population = ScreeningPopulation::from(clean, devices);
  std::vector<IndexPartition> partitions;
  for (double t : grid.T_values) {
    const auto p = population.partition_at(family, t);
    out.group_sizes.push_back({t, p.passing.size(), p.non_passing.size()});
    partitions.push_back(to_indices(index, p));
  }

  out.cells.resize(models.size() * instructions.size() * grid.N_values.size() * grid.T_values.size() *
                   grid.X_values.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < out.cells.size(); k = next++) {
      std::size_t rest = k;
      const std::size_t xi = rest % grid.X_values.size();
      rest /= grid.X_values.size();
      const std::size_t ti = rest % grid.T_values.size();
      rest /= grid.T_values.size();
      const std::size_t ni = rest % grid.N_values.size();
      rest /= grid.N_values.size();
      const std::size_t ii = rest % instructions.size();
      const std::size_t mi = rest / instructions.size();
      CellSpec spec{grid.N_values[ni], grid.T_values[ti], grid.X_values[xi], models[mi], instructions[ii],
                    grid.repetitions, grid.seed, options.mode};
      try {
        out.cells[k] = evaluate_cell(index, partitions[ti], spec);
      } catch (const Error& e) {
        if (e.code() == "sim.TooFewWidths") throw;
        out.cells[k] = CellResult{};
      }
    }
  };
  unsigned workers = options.workers != 0 ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, out.cells.size())));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        try {
          work();
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = out.cells.size();
        }
      });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Artifact header: toolkit version, seed ("none" for unseeded outputs) and rule.
inline std::string provenance_line(std::optional<std::uint64_t> seed, const std::string& rule,
                                   const std::string& extra = "") {
  std::string line = "# prescreen " + std::string(kVersion) + " seed=" + (seed ? std::to_string(*seed) : "none") +
                     " rule=" + rule;
  if (!extra.empty()) line += " " + extra;
  return line + "\n";
}

inline std::string to_csv(const HeatmapGrid& h) {
  std::ostringstream out;
  out << provenance_line(h.grid.seed, h.rule,
                         "mode=" + std::string(to_string(h.mode)) + " repetitions=" + std::to_string(h.grid.repetitions));
  out << "model,instruction,N,T,X,mean_r2,reps_ok,reps_failed\n";
  char r2[32];
  for (std::size_t m = 0; m < h.models.size(); ++m)
    for (std::size_t i = 0; i < h.instructions.size(); ++i)
      for (std::size_t n = 0; n < h.grid.N_values.size(); ++n)
        for (std::size_t t = 0; t < h.grid.T_values.size(); ++t)
          for (std::size_t x = 0; x < h.grid.X_values.size(); ++x) {
            const auto& c = h.at(m, i, n, t, x);
            if (c.empty)
              r2[0] = '\0';
            else
              std::snprintf(r2, sizeof r2, "%.6f", c.mean_r2);
            out << to_string(h.models[m]) << ',' << instruction_name(h.instructions[i]) << ','
                << h.grid.N_values[n] << ',' << format_number(h.grid.T_values[t]) << ','
                << format_number(h.grid.X_values[x]) << ',' << r2 << ',' << c.reps_ok << ',' << c.reps_failed << '\n';
          }
  return out.str();
}

inline std::string group_sizes_csv(const HeatmapGrid& h) {
  std::ostringstream out;
  out << provenance_line(h.grid.seed, h.rule);
  out << "T,passing,non_passing\n";
  for (const auto& g : h.group_sizes) out << format_number(g.t) << ',' << g.passing << ',' << g.non_passing << '\n';
  return out.str();
}

}  // namespace prescreen::sim
