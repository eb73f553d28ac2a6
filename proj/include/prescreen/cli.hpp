#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "prescreen/core/device.hpp"
#include "prescreen/core/session_io.hpp"
#include "prescreen/error.hpp"
#include "prescreen/gate.hpp"
#include "prescreen/gate_server.hpp"
#include "prescreen/io.hpp"
#include "prescreen/models.hpp"
#include "prescreen/preprocess.hpp"
#include "prescreen/render.hpp"
#include "prescreen/screening.hpp"
#include "prescreen/simulation.hpp"
#include "prescreen/synth.hpp"
#include "prescreen/version.hpp"

// Command-line front end: ingest, screen, fit, simulate, loocv, generate,
// serve, render. Every artifact is written atomically and starts with a
// provenance header (version, seed, rule).

namespace prescreen::cli {

/// Exit status per error module. Usage errors exit 2; anything unexpected 1.
inline int exit_code_for(const std::string& code) {
  static const std::map<std::string, int> codes{
      {"core", 10},   {"preprocess", 11}, {"models", 12}, {"screening", 13}, {"gate", 14},
      {"sim", 15},    {"synth", 16},      {"render", 17}, {"io", 18},        {"cli", 19},
  };
  const auto module = code.substr(0, code.find('.'));
  auto it = codes.find(module);
  return it == codes.end() ? 1 : it->second;
}

/// One-line JSON error record for stderr.
inline std::string error_summary(const std::string& code, std::string message) {
  if (message.starts_with(code + ": ")) message.erase(0, code.size() + 2);
  return nlohmann::json{{"error", code}, {"module", code.substr(0, code.find('.'))}, {"message", message}}.dump();
}

struct RuleOptions {
  std::string kind;  // pc | phone | "" (follow the sessions)
  double t = 0.0;
  double range_min = 200.0;
  double range_max = 600.0;
  double card = screening::kCardShortSideMm;
};

inline screening::ScreeningRule make_rule(const RuleOptions& o, core::SessionKind fallback) {
  std::string kind = o.kind;
  if (kind.empty()) kind = fallback == core::SessionKind::PcTwoTrial ? "pc" : "phone";
  screening::ScreeningRule rule;
  if (kind == "pc") {
    rule = screening::PcRangeAndDiscrepancy{o.range_min, o.range_max, o.t};
  } else if (kind == "phone") {
    rule = screening::PhoneAbsError{o.t, o.card};
  } else {
    throw Error("cli.BadRule", "rule must be pc or phone, got '" + kind + "'");
  }
  return rule;
}

namespace detail {

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string out_dir;

  std::filesystem::path write(const std::string& path, const std::string& content) const {
    const auto p = io::resolve_output(path, out_dir);
    io::atomic_write(p, content);
    out << "wrote " << p.string() << "\n";
    return p;
  }
};

inline std::vector<core::SessionLog> load_sessions(const std::string& path, const Context& ctx) {
  auto result = core::ingest_sessions(path);
  for (const auto& r : result.rejects) ctx.err << "warning: " << path << ":" << r.line << ": " << r.reason << "\n";
  if (result.sessions.empty()) throw Error("cli.EmptyInput", "no valid sessions in " + path);
  return std::move(result.sessions);
}

inline core::SessionKind kind_of(const std::vector<core::SessionLog>& sessions) {
  return sessions.front().pretask.session_kind;
}

inline core::DeviceTable load_devices(const std::string& path) {
  return path.empty() ? core::builtin_iphone_table() : core::DeviceTable::load(path);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

inline std::vector<sim::Model> parse_models(const std::string& s, core::SessionKind kind) {
  std::vector<sim::Model> out;
  for (const auto& m : split_list(s)) out.push_back(m == "er" ? sim::er_model_for(kind) : sim::parse_model(m));
  if (out.empty()) throw Error("cli.BadArgument", "no models given");
  return out;
}

inline std::vector<core::Instruction> parse_instructions(const std::string& s) {
  std::vector<core::Instruction> out;
  for (const auto& i : split_list(s)) {
    const auto instr = core::parse_instruction(i);
    if (instr == core::Instruction::Practice) throw Error("cli.BadArgument", "practice blocks are not analysed");
    out.push_back(instr);
  }
  if (out.empty()) throw Error("cli.BadArgument", "no instructions given");
  return out;
}

inline std::string csv_number(double v) { return sim::format_number(v); }

// ---------------------------------------------------------------------------
// Subcommands

struct IngestArgs {
  std::string sessions, schema = core::kSchemaVersion, out, rejects, report;
};

inline int ingest(const IngestArgs& a, const Context& ctx) {
  auto result = core::ingest_sessions(a.sessions, a.schema);
  ctx.out << "accepted " << result.sessions.size() << " rejected " << result.rejects.size() << "\n";
  if (!a.rejects.empty()) {
    std::string csv = sim::provenance_line(std::nullopt, "none") + "line,reason\n";
    for (const auto& r : result.rejects) csv += std::to_string(r.line) + "," + nlohmann::json(r.reason).dump() + "\n";
    ctx.write(a.rejects, csv);
  }
  if (!a.out.empty()) {
    std::ostringstream log;
    log << sim::provenance_line(std::nullopt, "none", "source=" + std::filesystem::path(a.sessions).filename().string());
    core::write_sessions(log, result.sessions);
    ctx.write(a.out, log.str());
  }
  if (!a.report.empty()) {
    if (result.sessions.empty()) throw Error("cli.EmptyInput", "no valid sessions in " + a.sessions);
    const auto clean = preprocess::clean_dataset(result.sessions, kind_of(result.sessions));
    nlohmann::json j = clean.report.to_json();
    j["provenance"] = {{"version", kVersion}, {"seed", nullptr}, {"rule", nullptr}};
    ctx.write(a.report, j.dump(2) + "\n");
    ctx.out << clean.report.to_text();
  }
  return 0;
}

struct ScreenArgs {
  std::string sessions, devices, out = "verdicts.csv";
  RuleOptions rule;
};

inline int screen(const ScreenArgs& a, const Context& ctx) {
  const auto sessions = load_sessions(a.sessions, ctx);
  const auto rule = make_rule(a.rule, kind_of(sessions));
  screening::validate(rule);
  const auto devices = load_devices(a.devices);
  std::string csv = sim::provenance_line(std::nullopt, screening::describe(rule));
  csv += "participant_id,passed,metric\n";
  std::size_t passed = 0, unresolved = 0;
  for (const auto& s : sessions) {
    std::optional<core::DeviceProfile> profile;
    if (std::holds_alternative<screening::PhoneAbsError>(rule)) {
      try {
        if (!s.device) throw Error("core.NoMatch", "session has no device resolution");
        profile = devices.lookup(*s.device);
      } catch (const Error& e) {
        ctx.err << "warning: " << s.participant_id << ": " << e.what() << "\n";
        csv += s.participant_id + ",false,\n";
        ++unresolved;
        continue;
      }
    }
    const auto v = screening::classify(s.pretask, rule, profile ? &*profile : nullptr);
    passed += v.passed ? 1 : 0;
    csv += v.participant_id + (v.passed ? ",true," : ",false,") + csv_number(v.metric) + "\n";
  }
  ctx.write(a.out, csv);
  ctx.out << "passing " << passed << " non_passing " << sessions.size() - passed << " unresolved " << unresolved
          << "\n";
  return 0;
}

struct FitArgs {
  std::string sessions, devices, out = "fit.csv", points;
  RuleOptions rule;
  bool screened = false;
};

inline int fit(const FitArgs& a, const Context& ctx) {
  const auto sessions = load_sessions(a.sessions, ctx);
  const auto kind = kind_of(sessions);
  auto clean = preprocess::clean_dataset(sessions, kind);
  std::string rule_text = "none";
  if (a.screened) {
    const auto rule = make_rule(a.rule, kind);
    screening::validate(rule);
    const auto devices = load_devices(a.devices);
    const auto pop = sim::ScreeningPopulation::from(clean, &devices);
    const auto part = screening::partition(pop.verdicts(rule));
    clean = preprocess::subset(clean, {part.passing.begin(), part.passing.end()});
    rule_text = screening::describe(rule);
    ctx.out << "fitting " << clean.sessions.size() << " passing participants\n";
  }
  if (clean.sessions.empty()) throw Error("cli.EmptyInput", "no participants left to fit");

  const auto head = sim::provenance_line(std::nullopt, rule_text);
  std::string csv = head + "model,instruction,term,value\n";
  std::string pts = head + "model,instruction,A,W,observed,predicted\n";
  auto row = [&](const char* model, const std::string& instr, const char* term, double v) {
    csv += std::string(model) + "," + instr + "," + term + "," + csv_number(v) + "\n";
  };
  const auto er_model = sim::er_model_for(kind);
  for (auto instruction : {core::Instruction::Fast, core::Instruction::Accurate}) {
    const auto name = sim::instruction_name(instruction);
    const auto table = models::pooled_stats(clean, instruction);
    if (table.empty()) continue;
    const auto f = models::fit_fitts(table);
    row("fitts", name, "a", f.a);
    row("fitts", name, "b", f.b);
    row("fitts", name, "r2", f.r2);
    for (const auto& p : f.points)
      pts += "fitts," + name + "," + csv_number(p.amplitude) + "," + csv_number(p.width) + "," +
             csv_number(p.mean_mt) + "," + csv_number(f.predict(p.amplitude, p.width)) + "\n";
    models::ErPrediction er;
    if (er_model == sim::Model::ErDisk) {
      const auto s = models::fit_sigma_2d(table);
      row("er-disk", name, "c", s.c);
      row("er-disk", name, "d", s.d);
      row("er-disk", name, "e", s.e);
      row("er-disk", name, "f", s.f);
      er = models::predict_er(s, table);
    } else {
      const auto v = models::fit_variance_1d(table);
      row("er-band", name, "g", v.g);
      row("er-band", name, "h", v.h);
      er = models::predict_er(v, table);
    }
    const char* er_name = sim::to_string(er_model);
    row(er_name, name, "r2", er.r2);
    for (const auto& p : er.points)
      pts += std::string(er_name) + "," + name + ",," + csv_number(p.width) + "," + csv_number(p.observed_er) + "," +
             csv_number(p.predicted_er) + "\n";
  }
  ctx.write(a.out, csv);
  if (!a.points.empty()) ctx.write(a.points, pts);
  return 0;
}

struct SimulateArgs {
  std::string sessions, grid, devices, models = "fitts,er", instructions = "fast,accurate", out = "heatmap.csv",
                                        group_sizes;
  std::optional<std::uint64_t> seed;
  std::optional<int> repetitions;
  RuleOptions rule;
  unsigned workers = 0;
  bool loocv = false;
};

inline int simulate(const SimulateArgs& a, const Context& ctx) {
  const auto sessions = load_sessions(a.sessions, ctx);
  const auto kind = kind_of(sessions);
  sim::SimGrid grid = kind == core::SessionKind::PcTwoTrial ? sim::SimGrid::pc_default() : sim::SimGrid::phone_default();
  if (!a.grid.empty()) {
    std::ifstream in(a.grid);
    if (!in) throw Error("io.Unreadable", "cannot open grid file " + a.grid);
    grid = sim::parse_grid(in);
  }
  if (a.seed) grid.seed = *a.seed;
  if (a.repetitions) grid.repetitions = *a.repetitions;
  grid.validate();

  RuleOptions family = a.rule;
  family.t = 1.0;  // placeholder; the sweep sets T per row
  const auto rule = make_rule(family, kind);
  screening::validate(rule);
  const auto devices = load_devices(a.devices);
  const auto clean = preprocess::clean_dataset(sessions, kind);
  const auto heatmap = sim::sweep_grid(clean, rule, &devices, grid, parse_models(a.models, kind),
                                       parse_instructions(a.instructions),
                                       {a.loocv ? sim::Mode::Loocv : sim::Mode::Fit, a.workers});
  if (heatmap.populated() == 0) ctx.err << "warning: every cell is empty\n";
  ctx.write(a.out, sim::to_csv(heatmap));
  if (!a.group_sizes.empty()) ctx.write(a.group_sizes, sim::group_sizes_csv(heatmap));
  return 0;
}

struct GenerateArgs {
  std::string spec, out = "sessions.log", labels;
  std::optional<std::uint64_t> seed;
};

inline int generate(const GenerateArgs& a, const Context& ctx) {
  synth::PopulationSpec spec;
  std::string spec_name = "default";
  if (!a.spec.empty()) {
    std::ifstream in(a.spec);
    if (!in) throw Error("io.Unreadable", "cannot open spec file " + a.spec);
    spec = synth::parse_spec(in);
    spec_name = std::filesystem::path(a.spec).filename().string();
  }
  if (a.seed) spec.seed = *a.seed;
  const auto pop = synth::generate_population(spec);
  const auto head = sim::provenance_line(spec.seed, "none", "spec=" + spec_name);
  std::ostringstream log;
  log << head;
  core::write_sessions(log, pop.sessions);
  ctx.write(a.out, log.str());
  if (!a.labels.empty()) ctx.write(a.labels, head + synth::labels_csv(pop.labels));
  return 0;
}

struct ServeArgs {
  std::string devices, host = "127.0.0.1", log = "decisions.log";
  int port = 8080;
  RuleOptions rule;
};

inline int serve(const ServeArgs& a, const Context& ctx) {
  if (a.rule.kind.empty()) throw Error("cli.BadRule", "serve needs --rule pc|phone");
  const auto rule = make_rule(a.rule, core::SessionKind::PhoneSingleTrial);
  screening::validate(rule);
  const auto devices = load_devices(a.devices);
  const auto log_path = io::resolve_output(a.log, ctx.out_dir);
  if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path());
  gate::DecisionLog log(log_path.string());
  httplib::Server server;
  gate::mount(server, rule, devices, log);
  ctx.out << "listening on " << a.host << ":" << a.port << " rule=" << screening::describe(rule) << "\n";
  ctx.out.flush();
  if (!server.listen(a.host, a.port)) throw Error("gate.ListenFailed", "cannot listen on " + a.host + ":" + std::to_string(a.port));
  return 0;
}

struct RenderArgs {
  std::string in = "heatmap.csv", dir = "heatmaps";
};

inline int render(const RenderArgs& a, const Context& ctx) {
  const auto target = io::resolve_output(a.dir, ctx.out_dir);
  for (const auto& p : render::render_heatmap(a.in, target.string())) ctx.out << "wrote " << p.string() << "\n";
  return 0;
}

inline void add_rule_options(CLI::App* sub, RuleOptions& r, bool need_t) {
  sub->add_option("--rule", r.kind, "Screening rule: pc or phone (default: follows the sessions)")
      ->check(CLI::IsMember({"pc", "phone"}));
  if (need_t) sub->add_option("--t", r.t, "Threshold T (px for pc, mm for phone)")->required();
  sub->add_option("--range-min", r.range_min, "pc: lower size bound, px (inclusive)");
  sub->add_option("--range-max", r.range_max, "pc: upper size bound, px (inclusive)");
  sub->add_option("--card", r.card, "phone: card short side, mm");
}

}  // namespace detail

/// Parses `args` (args[0] is the program name) and runs one subcommand.
/// Returns the process exit status.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace detail;
  CLI::App app{"Pre-task participant screening toolkit for crowdsourced pointing studies", "prescreen"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "Config file (TOML/INI); command-line flags take precedence");
  app.require_subcommand(1);

  std::string out_dir;
  app.add_option("--out-dir", out_dir, "Directory for relative output paths")->envname(io::kOutDirEnv);

  IngestArgs ing;
  auto* c_ingest = app.add_subcommand("ingest", "Validate a session log; optionally write accepted sessions, rejects and the exclusion report");
  c_ingest->add_option("--sessions", ing.sessions, "Session log (JSON lines)")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--schema", ing.schema, "Expected schema_version");
  c_ingest->add_option("--out", ing.out, "Accepted sessions, re-serialized");
  c_ingest->add_option("--rejects", ing.rejects, "Rejected lines CSV");
  c_ingest->add_option("--report", ing.report, "Outlier exclusion report (JSON)");

  ScreenArgs scr;
  auto* c_screen = app.add_subcommand("screen", "Classify participants from their pre-task outcome");
  c_screen->add_option("--sessions", scr.sessions, "Session log")->required()->check(CLI::ExistingFile);
  add_rule_options(c_screen, scr.rule, true);
  c_screen->add_option("--devices", scr.devices, "Device table CSV (default: built-in iPhone table)")->check(CLI::ExistingFile);
  c_screen->add_option("--out", scr.out, "Verdict CSV");

  FitArgs fa;
  auto* c_fit = app.add_subcommand("fit", "Fit the MT and ER models on the cleaned sessions");
  c_fit->add_option("--sessions", fa.sessions, "Session log")->required()->check(CLI::ExistingFile);
  c_fit->add_option("--out", fa.out, "Model fit CSV");
  c_fit->add_option("--points", fa.points, "Per-condition observed/predicted CSV");
  c_fit->add_flag("--screened", fa.screened, "Fit only the passing group under --rule/--t");
  c_fit->add_option("--rule", fa.rule.kind, "Screening rule: pc or phone")->check(CLI::IsMember({"pc", "phone"}));
  c_fit->add_option("--t", fa.rule.t, "Threshold T");
  c_fit->add_option("--range-min", fa.rule.range_min, "pc: lower size bound, px");
  c_fit->add_option("--range-max", fa.rule.range_max, "pc: upper size bound, px");
  c_fit->add_option("--card", fa.rule.card, "phone: card short side, mm");
  c_fit->add_option("--devices", fa.devices, "Device table CSV")->check(CLI::ExistingFile);

  SimulateArgs sa;
  auto add_sim = [&](CLI::App* sub) {
    sub->add_option("--sessions", sa.sessions, "Session log")->required()->check(CLI::ExistingFile);
    sub->add_option("--grid", sa.grid, "Grid file (key=value)")->check(CLI::ExistingFile);
    sub->add_option("--models", sa.models, "Comma list of fitts, er, er-disk, er-band");
    sub->add_option("--instructions", sa.instructions, "Comma list of fast, accurate");
    sub->add_option("--seed", sa.seed, "Root seed (overrides the grid file)");
    sub->add_option("--reps", sa.repetitions, "Repetitions per cell (overrides the grid file)");
    sub->add_option("--out", sa.out, "Heatmap CSV");
    sub->add_option("--group-sizes", sa.group_sizes, "Group size per T CSV");
    sub->add_option("--workers", sa.workers, "Worker threads (0: all cores)");
    sub->add_option("--devices", sa.devices, "Device table CSV")->check(CLI::ExistingFile);
    add_rule_options(sub, sa.rule, false);
  };
  auto* c_sim = app.add_subcommand("simulate", "Sweep the (N, T, X) mixture grid");
  add_sim(c_sim);
  c_sim->add_flag("--loocv", sa.loocv, "Leave-one-W-out R^2 instead of the full fit");
  auto* c_loocv = app.add_subcommand("loocv", "Sweep the grid with leave-one-W-out R^2");
  add_sim(c_loocv);

  GenerateArgs ga;
  auto* c_gen = app.add_subcommand("generate", "Generate a synthetic population");
  c_gen->add_option("--spec", ga.spec, "Population spec (key=value)")->check(CLI::ExistingFile);
  c_gen->add_option("--seed", ga.seed, "Seed (overrides the spec file)");
  c_gen->add_option("--out", ga.out, "Session log");
  c_gen->add_option("--labels", ga.labels, "Ground-truth profile labels CSV");

  ServeArgs sv;
  auto* c_serve = app.add_subcommand("serve", "Run the live gate service (POST /gate)");
  add_rule_options(c_serve, sv.rule, true);
  c_serve->add_option("--devices", sv.devices, "Device table CSV")->check(CLI::ExistingFile);
  c_serve->add_option("--host", sv.host, "Bind address");
  c_serve->add_option("--port", sv.port, "Port")->check(CLI::Range(1, 65535));
  c_serve->add_option("--log", sv.log, "Append-only decision log");

  RenderArgs ra;
  auto* c_render = app.add_subcommand("render", "Render SVG heatmaps from a heatmap CSV");
  c_render->add_option("--in", ra.in, "Heatmap CSV")->check(CLI::ExistingFile);
  c_render->add_option("--dir", ra.dir, "Output directory");

  for (auto* sub : app.get_subcommands({})) sub->configurable();

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  const Context ctx{out, err, out_dir};
  try {
    if (c_fit->parsed() && fa.screened && fa.rule.t <= 0.0) throw Error("cli.BadRule", "--screened needs --t > 0");
    if (c_ingest->parsed()) return ingest(ing, ctx);
    if (c_screen->parsed()) return screen(scr, ctx);
    if (c_fit->parsed()) return fit(fa, ctx);
    if (c_sim->parsed()) return simulate(sa, ctx);
    if (c_loocv->parsed()) {
      sa.loocv = true;
      return simulate(sa, ctx);
    }
    if (c_gen->parsed()) return generate(ga, ctx);
    if (c_serve->parsed()) return serve(sv, ctx);
    if (c_render->parsed()) return render(ra, ctx);
  } catch (const Error& e) {
    err << error_summary(e.code(), e.what()) << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << error_summary("internal", e.what()) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace prescreen::cli
