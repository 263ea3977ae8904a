#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wearsense/presence_tracker.hpp"
#include "wearsense/scenario_engine.hpp"
#include "wearsense/sim_harness.hpp"
#include "wearsense/taxonomy.hpp"

// Every file format is JSON: line-delimited (one flat object per line) for
// record streams, a single document for configs.
namespace wearsense::io {

using Json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename F>
void for_each_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json doc;
    try {
      doc = Json::parse(line);
      f(doc);
    } catch (const Json::exception& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline Json parse_document(std::istream& in) {
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw FormatError(e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sightings and sensor maps
// ---------------------------------------------------------------------------

inline Json to_json(const Sighting& s) {
  Json j;
  j["device_id"] = s.device_id.str();
  j["sensor_id"] = s.sensor_id;
  j["ts_micro"] = s.ts_micro;
  j["rssi_dbm"] = s.rssi_dbm ? Json(*s.rssi_dbm) : Json(nullptr);
  j["kind"] = to_string(s.kind);
  j["attrs"] = s.attrs ? Json(*s.attrs) : Json(nullptr);
  return j;
}

inline Sighting sighting_from_json(const Json& j) {
  Sighting s;
  s.device_id = DeviceId{j.at("device_id").get<std::string>()};
  s.sensor_id = j.at("sensor_id").get<std::string>();
  s.ts_micro = j.at("ts_micro").get<std::int64_t>();
  if (j.contains("rssi_dbm") && !j["rssi_dbm"].is_null()) s.rssi_dbm = j["rssi_dbm"].get<int>();
  const auto kind = sighting_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw FormatError("unknown sighting kind " + j.at("kind").dump());
  s.kind = *kind;
  if (j.contains("attrs") && !j["attrs"].is_null()) s.attrs = j["attrs"].get<Attrs>();
  if ((s.kind == SightingKind::ActiveAnnounce) != s.attrs.has_value())
    throw FormatError("attrs must be present exactly for active_announce sightings");
  return s;
}

inline void write_sightings(std::ostream& out, std::span<const Sighting> sightings) {
  for (const auto& s : sightings) out << to_json(s).dump() << '\n';
}

inline std::vector<Sighting> read_sightings(std::istream& in) {
  std::vector<Sighting> out;
  detail::for_each_line(in, [&](const Json& j) { out.push_back(sighting_from_json(j)); });
  return out;
}

inline void write_sensor_map(std::ostream& out, const SensorMap& map) {
  for (const auto& [sensor, zone] : map.entries()) out << Json{{"sensor_id", sensor}, {"zone_id", zone}}.dump() << '\n';
}

inline SensorMap read_sensor_map(std::istream& in) {
  SensorMap map;
  detail::for_each_line(in, [&](const Json& j) {
    try {
      map.add(j.at("sensor_id").get<std::string>(), j.at("zone_id").get<std::string>());
    } catch (const TrackerError& e) {
      throw FormatError(e.what());
    }
  });
  if (map.empty()) throw FormatError("sensor map has no entries");
  return map;
}

// ---------------------------------------------------------------------------
// Scenario specs
// ---------------------------------------------------------------------------

inline Json to_json(const taxonomy::ScenarioSpec& spec) {
  Json phases = Json::array();
  for (const auto& p : spec.phases) {
    Json kinds = Json::array();
    for (auto k : p.feedback_kinds) kinds.push_back(taxonomy::to_string(k));
    phases.push_back({{"shares_application_info", p.shares_application_info},
                      {"interaction", taxonomy::to_string(p.interaction)},
                      {"feedback_kinds", kinds}});
  }
  return {{"name", spec.name}, {"phases", phases}};
}

inline taxonomy::ScenarioSpec spec_from_json(const Json& j) {
  try {
    taxonomy::ScenarioSpec spec;
    spec.name = j.at("name").get<std::string>();
    for (const auto& p : j.at("phases")) {
      taxonomy::ScenarioPhase phase;
      phase.shares_application_info = p.at("shares_application_info").get<bool>();
      const auto interaction = taxonomy::interaction_from_string(p.at("interaction").get<std::string>());
      if (!interaction) throw FormatError("unknown interaction " + p.at("interaction").dump());
      phase.interaction = *interaction;
      for (const auto& k : p.at("feedback_kinds")) {
        const auto kind = taxonomy::feedback_from_string(k.get<std::string>());
        if (!kind) throw FormatError("unknown feedback kind " + k.dump());
        phase.feedback_kinds.insert(*kind);
      }
      spec.phases.push_back(std::move(phase));
    }
    return spec;
  } catch (const Json::exception& e) {
    throw FormatError(e.what());
  }
}

inline taxonomy::ScenarioSpec read_spec(std::istream& in) { return spec_from_json(detail::parse_document(in)); }

// ---------------------------------------------------------------------------
// Rules and actions
// ---------------------------------------------------------------------------

inline Json to_json(const engine::Rule& r) {
  Json cond;
  if (const auto* a = std::get_if<engine::OnArrival>(&r.condition)) {
    cond = {{"type", "on_arrival"}, {"zone", a->zone}};
    cond["device"] = a->device ? Json(a->device->str()) : Json(nullptr);
  } else {
    cond = {{"type", "on_active_info"}, {"key", std::get<engine::OnActiveInfo>(r.condition).key}};
  }
  Json j{{"rule_id", r.rule_id},
         {"condition", cond},
         {"action",
          {{"kind", taxonomy::to_string(r.action.kind)}, {"target", r.action.target}, {"payload", r.action.payload}}},
         {"origin", r.origin == engine::RuleOrigin::Learned ? "learned" : "configured"}};
  if (r.origin == engine::RuleOrigin::Learned) j["support"] = r.support;
  return j;
}

inline engine::Rule rule_from_json(const Json& j) {
  try {
    engine::Rule r;
    r.rule_id = j.at("rule_id").get<std::uint32_t>();
    const auto& c = j.at("condition");
    const auto type = c.at("type").get<std::string>();
    if (type == "on_arrival") {
      engine::OnArrival cond{c.at("zone").get<std::string>(), std::nullopt};
      if (c.contains("device") && !c["device"].is_null()) cond.device = DeviceId{c["device"].get<std::string>()};
      r.condition = cond;
    } else if (type == "on_active_info") {
      r.condition = engine::OnActiveInfo{c.at("key").get<std::string>()};
    } else {
      throw FormatError("unknown condition type " + type);
    }
    const auto& a = j.at("action");
    const auto kind = taxonomy::feedback_from_string(a.at("kind").get<std::string>());
    if (!kind || *kind == taxonomy::FeedbackKind::Observation) throw FormatError("invalid action kind " + a.at("kind").dump());
    r.action = {*kind, a.at("target").get<std::string>(), a.value("payload", std::string{})};
    const auto origin = j.value("origin", std::string("configured"));
    if (origin != "configured" && origin != "learned") throw FormatError("invalid origin " + origin);
    r.origin = origin == "learned" ? engine::RuleOrigin::Learned : engine::RuleOrigin::Configured;
    r.support = j.value("support", std::size_t{0});
    return r;
  } catch (const Json::exception& e) {
    throw FormatError(e.what());
  }
}

inline Json rules_to_json(std::span<const engine::Rule> rules) {
  Json arr = Json::array();
  for (const auto& r : rules) arr.push_back(to_json(r));
  return arr;
}

inline std::vector<engine::Rule> read_rules(std::istream& in) {
  const Json doc = detail::parse_document(in);
  if (!doc.is_array()) throw FormatError("rules file must hold a list");
  std::vector<engine::Rule> out;
  for (const auto& j : doc) out.push_back(rule_from_json(j));
  return out;
}

inline Json to_json(const engine::EmittedAction& a) {
  return {{"ts", a.ts_micro},
          {"kind", taxonomy::to_string(a.action.kind)},
          {"target", a.action.target},
          {"payload", a.action.payload},
          {"rule_id", a.rule_id}};
}

inline void write_actions(std::ostream& out, std::span<const engine::EmittedAction> actions) {
  for (const auto& a : actions) out << to_json(a).dump() << '\n';
}

inline Json to_json(const engine::Event& e) {
  Json j{{"ts", e.ts_micro}};
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, engine::Arrival>) {
          j["kind"] = "arrival";
          j["device"] = body.device.str();
          j["zone"] = body.zone;
        } else if constexpr (std::is_same_v<T, engine::Departure>) {
          j["kind"] = "departure";
          j["device"] = body.device.str();
          j["zone"] = body.zone;
        } else if constexpr (std::is_same_v<T, engine::ActiveInfo>) {
          j["kind"] = "active_info";
          j["device"] = body.device.str();
          j["attrs"] = body.attrs;
        } else {
          j["kind"] = "manual_actuation";
          j["actuator"] = body.actuator;
          j["state"] = body.state;
        }
      },
      e.body);
  return j;
}

inline const char* to_string(engine::LearnerKind k) {
  return k == engine::LearnerKind::TriggerRules ? "trigger_rules" : "interest_profile";
}

// Engine trace as line-delimited records: events, then learner and
// analytics passes.
inline void write_trace(std::ostream& out, const engine::EngineTrace& trace) {
  for (const auto& e : trace.log) out << Json{{"record", "event"}, {"event", to_json(e)}}.dump() << '\n';
  for (const auto& p : trace.learning)
    out << Json{{"record", "learning"},
                {"ts", p.ts_micro},
                {"learner", to_string(p.learner)},
                {"rules_derived", p.rules_derived},
                {"rules_added", p.rules_added}}
               .dump()
        << '\n';
  for (const auto& a : trace.analytics)
    out << Json{{"record", "analytics"}, {"ts", a.ts_micro}, {"report", a.report}}.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

inline Json to_json(const sim::GroundTruth& t) {
  Json intervals = Json::array();
  for (const auto& iv : t.intervals)
    intervals.push_back({{"agent_id", iv.agent_id}, {"zone_id", iv.zone}, {"start_micro", iv.start_micro},
                         {"end_micro", iv.end_micro}});
  Json agents = Json::array();
  for (const auto& [id, mac] : t.agent_macs)
    agents.push_back({{"agent_id", id}, {"mac", mac.to_string()}, {"probe_interval_micro", t.probe_intervals.at(id)}});
  Json occupancy = Json::object();
  for (const auto& [zone, series] : t.occupancy) {
    Json rows = Json::array();
    for (const auto& b : series) rows.push_back({b.bucket_start, b.device_count});
    occupancy[zone] = rows;
  }
  return {{"expected_label", t.expected_label},
          {"agents", agents},
          {"intervals", intervals},
          {"occupancy_bucket_micro", sim::kTruthBucketMicro},
          {"occupancy", occupancy}};
}

}  // namespace wearsense::io
