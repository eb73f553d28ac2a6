#pragma once

#include <string>

#include <httplib.h>

#include "prescreen/gate.hpp"
#include "prescreen/version.hpp"

namespace prescreen::gate {

/// Installs POST /gate and GET /health on `server`. The referenced rule,
/// table and log must outlive it. Malformed bodies get status 400 and the
/// same reject body that is logged.
inline void mount(httplib::Server& server, const screening::ScreeningRule& rule, const core::DeviceTable& devices,
                  DecisionLog& log, Clock clock = utc_now) {
  server.Post("/gate", [&rule, &devices, &log, clock](const httplib::Request& req, httplib::Response& res) {
    const auto rec = gate_decision(req.body, rule, devices, log, clock);
    res.status = rec.reason == Reason::MalformedPayload ? 400 : 200;
    res.set_content(rec.response().dump(), "application/json");
  });
  server.Get("/health", [&rule](const httplib::Request&, httplib::Response& res) {
    const nlohmann::json body{{"status", "ok"}, {"version", kVersion}, {"rule", screening::to_json(rule)}};
    res.set_content(body.dump(), "application/json");
  });
}

}  // namespace prescreen::gate
