#pragma once

#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "prescreen/core/device.hpp"
#include "prescreen/core/session_io.hpp"
#include "prescreen/screening.hpp"
#include "prescreen/version.hpp"

// Live admit/reject decisions for pre-task payloads.
//
// Request body: one JSON record with the PreTaskOutcome fields plus an
// optional "resolution" {width_px, height_px}. Response body:
// {"decision": "admit"|"reject", "metric": number|null, "reason"?: string}.

namespace prescreen::gate {

using nlohmann::json;

struct GatePayload {
  core::PreTaskOutcome outcome;
  std::optional<core::Resolution> resolution;
};

inline json to_json(const GatePayload& p) {
  json j = core::to_json(p.outcome);
  if (p.resolution) j["resolution"] = core::to_json(*p.resolution);
  return j;
}

inline GatePayload parse_payload(const std::string& body) {
  try {
    const json j = json::parse(body);
    GatePayload p;
    p.outcome = core::pretask_from_json(j);
    if (j.contains("resolution") && !j.at("resolution").is_null())
      p.resolution = core::resolution_from_json(j.at("resolution"));
    if (auto why = core::check_pretask(p.outcome); !why.empty()) throw Error("gate.MalformedPayload", why);
    return p;
  } catch (const json::exception& e) {
    throw Error("gate.MalformedPayload", e.what());
  } catch (const Error& e) {
    if (e.code() == "gate.MalformedPayload") throw;
    throw Error("gate.MalformedPayload", e.what());
  }
}

enum class Reason { None, FailedScreening, UnresolvableDevice, MalformedPayload, WrongSessionKind };

inline const char* to_string(Reason r) {
  switch (r) {
    case Reason::None: return "";
    case Reason::FailedScreening: return "FailedScreening";
    case Reason::UnresolvableDevice: return "UnresolvableDevice";
    case Reason::MalformedPayload: return "MalformedPayload";
    case Reason::WrongSessionKind: return "WrongSessionKind";
  }
  return "";
}

struct DecisionRecord {
  std::string participant_id;
  bool admit = false;
  std::optional<double> metric;
  Reason reason = Reason::None;
  std::string timestamp;
  screening::ScreeningRule rule;

  json response() const {
    json j{{"decision", admit ? "admit" : "reject"}, {"metric", metric ? json(*metric) : json(nullptr)}};
    if (reason != Reason::None) j["reason"] = to_string(reason);
    return j;
  }

  /// Log line: the response fields plus participant, timestamp, the full rule
  /// and the toolkit version.
  json log_entry() const {
    json j = response();
    j["participant_id"] = participant_id;
    j["timestamp"] = timestamp;
    j["rule"] = screening::to_json(rule);
    j["version"] = kVersion;
    return j;
  }
};

/// Append-only decision log. Concurrent writers serialize on an internal mutex.
class DecisionLog {
public:
  DecisionLog() = default;
  explicit DecisionLog(const std::string& path) : file_(path, std::ios::app) {
    if (!file_) throw Error("gate.Unwritable", "cannot open decision log " + path);
    out_ = &file_;
  }
  explicit DecisionLog(std::ostream& out) : out_(&out) {}

  void append(const DecisionRecord& r) {
    const std::string line = r.log_entry().dump();
    std::lock_guard lock(mutex_);
    ++count_;
    if (out_ == nullptr) return;
    *out_ << line << '\n';
    out_->flush();
  }

  std::size_t count() const {
    std::lock_guard lock(mutex_);
    return count_;
  }

private:
  std::ofstream file_;
  std::ostream* out_ = nullptr;
  mutable std::mutex mutex_;
  std::size_t count_ = 0;
};

using Clock = std::function<std::string()>;

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Applies the screening rule to a payload. Phone payloads resolve their
/// device through `devices`; an unknown or ambiguous resolution is a reject.
inline DecisionRecord decide(const GatePayload& payload, const screening::ScreeningRule& rule,
                             const core::DeviceTable& devices) {
  DecisionRecord rec;
  rec.participant_id = payload.outcome.participant_id;
  rec.rule = rule;
  if (payload.outcome.session_kind != screening::session_kind_of(rule)) {
    rec.reason = Reason::WrongSessionKind;
    return rec;
  }
  std::optional<core::DeviceProfile> profile;
  if (std::holds_alternative<screening::PhoneAbsError>(rule)) {
    if (!payload.resolution) {
      rec.reason = Reason::UnresolvableDevice;
      return rec;
    }
    try {
      profile = devices.lookup(*payload.resolution);
    } catch (const Error&) {
      rec.reason = Reason::UnresolvableDevice;
      return rec;
    }
  }
  const auto verdict = screening::classify(payload.outcome, rule, profile ? &*profile : nullptr);
  rec.admit = verdict.passed;
  rec.metric = verdict.metric;
  if (!rec.admit) rec.reason = Reason::FailedScreening;
  return rec;
}

/// Parses, decides, stamps and logs one request body.
inline DecisionRecord gate_decision(const std::string& body, const screening::ScreeningRule& rule,
                                    const core::DeviceTable& devices, DecisionLog& log,
                                    const Clock& clock = utc_now) {
  DecisionRecord rec;
  try {
    rec = decide(parse_payload(body), rule, devices);
  } catch (const Error&) {
    rec = {};
    rec.rule = rule;
    rec.reason = Reason::MalformedPayload;
    try {
      rec.participant_id = json::parse(body).value("participant_id", "");
    } catch (const json::exception&) {
    }
  }
  rec.timestamp = clock();
  log.append(rec);
  return rec;
}

}  // namespace prescreen::gate
