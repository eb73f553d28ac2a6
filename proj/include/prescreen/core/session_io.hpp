#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prescreen/core/types.hpp"
#include "prescreen/error.hpp"

// Line-delimited session records. One JSON object per line; field names follow
// the domain types. See docs/log-format.md.

namespace prescreen::core {

using json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

inline json to_json(Point p) { return {{"x", p.x}, {"y", p.y}}; }

inline json to_json(const Adjustment& a) {
  return {{"final_size", a.final_size}, {"op_time", a.op_time}, {"initial_size", a.initial_size}};
}

inline json to_json(const PreTaskOutcome& p) {
  json adj = json::array();
  for (const auto& a : p.adjustments) adj.push_back(to_json(a));
  return {{"participant_id", p.participant_id},
          {"session_kind", std::string(to_string(p.session_kind))},
          {"adjustments", std::move(adj)}};
}

inline json to_json(Resolution r) { return {{"width_px", r.width_px}, {"height_px", r.height_px}}; }

inline json to_json(const PointingTrial& t) {
  return {{"participant_id", t.participant_id},
          {"block_index", t.block_index},
          {"trial_index", t.trial_index},
          {"condition",
           {{"instruction", std::string(to_string(t.condition.instruction))},
            {"amplitude_A", t.condition.amplitude_A},
            {"width_W", t.condition.width_W}}},
          {"prev_center", to_json(t.prev_center)},
          {"target_center", to_json(t.target_center)},
          {"endpoint", to_json(t.endpoint)},
          {"movement_time_MT", t.movement_time_MT},
          {"success", t.success},
          {"reaim_count", t.reaim_count}};
}

inline json to_json(const SessionLog& s) {
  json trials = json::array();
  for (const auto& t : s.trials) trials.push_back(to_json(t));
  return {{"schema_version", kSchemaVersion},
          {"participant_id", s.participant_id},
          {"device", s.device ? to_json(*s.device) : json(nullptr)},
          {"reaim_policy", std::string(to_string(s.reaim_policy))},
          {"pretask", to_json(s.pretask)},
          {"trials", std::move(trials)}};
}

inline Point point_from_json(const json& j) { return {j.at("x").get<double>(), j.at("y").get<double>()}; }

inline Resolution resolution_from_json(const json& j) {
  return {j.at("width_px").get<int>(), j.at("height_px").get<int>()};
}

inline PreTaskOutcome pretask_from_json(const json& j) {
  PreTaskOutcome p;
  p.participant_id = j.at("participant_id").get<std::string>();
  p.session_kind = parse_session_kind(j.at("session_kind").get<std::string>());
  for (const auto& a : j.at("adjustments"))
    p.adjustments.push_back(
        {a.at("final_size").get<double>(), a.at("op_time").get<double>(), a.at("initial_size").get<double>()});
  return p;
}

inline PointingTrial trial_from_json(const json& j) {
  PointingTrial t;
  t.participant_id = j.at("participant_id").get<std::string>();
  t.block_index = j.at("block_index").get<int>();
  t.trial_index = j.at("trial_index").get<int>();
  const auto& c = j.at("condition");
  t.condition = {parse_instruction(c.at("instruction").get<std::string>()), c.at("amplitude_A").get<double>(),
                 c.at("width_W").get<double>()};
  t.prev_center = point_from_json(j.at("prev_center"));
  t.target_center = point_from_json(j.at("target_center"));
  t.endpoint = point_from_json(j.at("endpoint"));
  t.movement_time_MT = j.at("movement_time_MT").get<double>();
  t.success = j.at("success").get<bool>();
  t.reaim_count = j.at("reaim_count").get<int>();
  return t;
}

inline SessionLog session_from_json(const json& j) {
  SessionLog s;
  s.participant_id = j.at("participant_id").get<std::string>();
  if (j.contains("device") && !j.at("device").is_null()) s.device = resolution_from_json(j.at("device"));
  s.reaim_policy = parse_reaim_policy(j.at("reaim_policy").get<std::string>());
  s.pretask = pretask_from_json(j.at("pretask"));
  for (const auto& t : j.at("trials")) s.trials.push_back(trial_from_json(t));
  return s;
}

inline std::string to_line(const SessionLog& s) { return to_json(s).dump(); }

inline void write_sessions(std::ostream& out, const std::vector<SessionLog>& sessions) {
  for (const auto& s : sessions) out << to_line(s) << '\n';
}

struct Rejection {
  int line = 0;  // 1-based
  std::string reason;
};

struct IngestResult {
  std::vector<SessionLog> sessions;
  std::vector<Rejection> rejects;
};

inline bool known_schema_version(const std::string& v) { return v == kSchemaVersion; }

/// Parses and validates session records from a stream. Each record line yields
/// exactly one accepted session or one rejection; accepted sessions keep file
/// order. Blank lines and lines starting with '#' are skipped.
inline IngestResult ingest_sessions(std::istream& in, const std::string& schema_version = kSchemaVersion) {
  if (!known_schema_version(schema_version))
    throw Error("core.UnknownSchema", "unknown schema_version '" + schema_version + "'");
  IngestResult result;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#') continue;
    SessionLog s;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw Error("core.Malformed", "record is not an object");
      const auto version = j.at("schema_version").get<std::string>();
      if (version != schema_version) {
        result.rejects.push_back({line_no, "schema_version '" + version + "' != '" + schema_version + "'"});
        continue;
      }
      s = session_from_json(j);
    } catch (const json::exception& e) {
      result.rejects.push_back({line_no, std::string("malformed record: ") + e.what()});
      continue;
    } catch (const Error& e) {
      result.rejects.push_back({line_no, e.what()});
      continue;
    }
    if (auto why = check_session(s); !why.empty()) {
      result.rejects.push_back({line_no, why});
      continue;
    }
    if (!seen.insert(s.participant_id).second)
      throw Error("core.DuplicateParticipant",
                  "participant_id '" + s.participant_id + "' repeated at line " + std::to_string(line_no));
    result.sessions.push_back(std::move(s));
  }
  return result;
}

inline IngestResult ingest_sessions(const std::string& path, const std::string& schema_version = kSchemaVersion) {
  std::ifstream in(path);
  if (!in) throw Error("core.Unreadable", "cannot open session log " + path);
  return ingest_sessions(in, schema_version);
}

}  // namespace prescreen::core
