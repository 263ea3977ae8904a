#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "wearsense/analytics.hpp"
#include "wearsense/frame_codec.hpp"
#include "wearsense/presence_tracker.hpp"
#include "wearsense/scenario_engine.hpp"
#include "wearsense/taxonomy.hpp"

namespace wearsense::sim {

inline constexpr std::int64_t kMinProbeIntervalMicro = 15 * kMicrosPerSecond;
inline constexpr std::int64_t kMaxProbeIntervalMicro = 60 * kMicrosPerSecond;
inline constexpr std::int64_t kTruthBucketMicro = 60 * kMicrosPerSecond;

enum class SimErrc { InvalidConfig, UnknownScenario };

class SimError : public std::runtime_error {
 public:
  SimError(SimErrc code, const std::string& detail)
      : std::runtime_error(std::string(code == SimErrc::InvalidConfig ? "InvalidConfig" : "UnknownScenario") +
                           ": " + detail),
        code_(code) {}
  SimErrc code() const noexcept { return code_; }

 private:
  SimErrc code_;
};

// mt19937_64 output is fixed by the standard; the range reductions below are
// written out so results do not depend on the standard library's
// distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform on the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next());
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  // Uniform on [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// World description
// ---------------------------------------------------------------------------

// zone == nullopt means out of range of every sensor.
struct ItineraryStop {
  std::int64_t enter_micro = 0;
  std::optional<ZoneId> zone;
};

struct Announcement {
  std::int64_t ts_micro = 0;
  Attrs attrs;
};

// Something the person does by hand, e.g. flipping a light switch. Skipped
// when the actuator is already in the requested state.
struct ManualAction {
  std::int64_t ts_micro = 0;
  std::string actuator;
  std::string state;
};

struct Agent {
  std::string agent_id;
  MacAddress mac;
  // Drawn uniformly from [15 s, 60 s] at seed time when unset.
  std::optional<std::int64_t> probe_interval_micro;
  std::vector<ItineraryStop> itinerary;
  std::vector<Announcement> announcements;
  std::vector<ManualAction> manual_actions;
};

struct LearnStep {
  std::int64_t ts_micro = 0;
  engine::LearnerKind learner = engine::LearnerKind::TriggerRules;
};

struct AnalyticsStep {
  std::int64_t ts_micro = 0;
};

// Interest-profile learner: booth dwell turns into personalised content and
// a stand recommendation shown when the device reaches the display zone.
struct InterestLearning {
  std::set<ZoneId> booths;
  ZoneId display_zone;
  std::int64_t dwell_threshold_micro = analytics::kDefaultDwellThresholdMicro;
  std::map<ZoneId, std::string> recommendations;
};

struct ScenarioScript {
  std::string name;
  SensorMap sensors;
  std::int64_t duration_micro = 0;
  std::vector<Agent> agents;
  std::vector<engine::Rule> rules;
  std::vector<LearnStep> learn_steps;
  std::vector<AnalyticsStep> analytics_steps;
  engine::LearnerConfig learner;
  std::optional<InterestLearning> interest;
  std::string expected_label;
};

struct RssiModel {
  int near_dbm = -50;
  int far_dbm = -85;
  int jitter_db = 5;
  // Captures at or above the floor are kept.
  int capture_floor_dbm = -80;
};

struct SimConfig {
  std::optional<std::int64_t> duration_override;
  double drop_rate = 0.0;
  RssiModel rssi;
  TrackerConfig tracker;
};

// ---------------------------------------------------------------------------
// Outputs
// ---------------------------------------------------------------------------

struct TruthInterval {
  std::string agent_id;
  ZoneId zone;
  std::int64_t start_micro = 0;
  std::int64_t end_micro = 0;  // exclusive
  friend bool operator==(const TruthInterval&, const TruthInterval&) = default;
};

struct GroundTruth {
  std::vector<TruthInterval> intervals;
  std::map<std::string, MacAddress> agent_macs;
  std::map<std::string, std::int64_t> probe_intervals;
  std::map<ZoneId, std::vector<analytics::OccupancyBucket>> occupancy;
  std::string expected_label;
};

struct SimResult {
  std::map<std::string, Bytes> pcaps;  // per sensor, radiotap link type
  std::vector<Sighting> sightings;
  std::vector<ZonedSighting> zoned_sightings;
  std::vector<PresenceSession> sessions;
  GroundTruth truth;
  engine::EngineTrace trace;
  std::vector<engine::Rule> final_rules;
  IngestStats stats;
  // Every emitted probe per agent, captured or not.
  std::map<std::string, std::vector<std::int64_t>> emissions;
  std::string label;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

inline const ItineraryStop* stop_at(const Agent& a, std::int64_t ts) {
  const ItineraryStop* current = nullptr;
  for (const auto& stop : a.itinerary) {
    if (stop.enter_micro > ts) break;
    current = &stop;
  }
  return current;
}

inline std::optional<ZoneId> zone_at(const Agent& a, std::int64_t ts) {
  const auto* stop = stop_at(a, ts);
  return stop ? stop->zone : std::nullopt;
}

}  // namespace detail

inline void validate(const SimConfig& config, const ScenarioScript& script) {
  auto fail = [](const std::string& why) { throw SimError(SimErrc::InvalidConfig, why); };
  if (!(config.drop_rate >= 0.0 && config.drop_rate < 1.0)) fail("drop_rate must lie in [0, 1)");
  const std::int64_t duration = config.duration_override.value_or(script.duration_micro);
  if (duration <= 0) fail("duration must be positive");
  if (script.sensors.empty()) fail("no sensors");
  const auto zones = script.sensors.zones();
  auto known_zone = [&](const ZoneId& z) { return std::binary_search(zones.begin(), zones.end(), z); };
  std::set<std::string> ids;
  std::set<MacAddress> macs;
  for (const auto& a : script.agents) {
    if (!ids.insert(a.agent_id).second) fail("duplicate agent id " + a.agent_id);
    if (!macs.insert(a.mac).second) fail("duplicate MAC for agent " + a.agent_id);
    if (a.probe_interval_micro &&
        (*a.probe_interval_micro < kMinProbeIntervalMicro || *a.probe_interval_micro > kMaxProbeIntervalMicro))
      fail("probe interval of " + a.agent_id + " outside [15 s, 60 s]");
    for (std::size_t i = 0; i < a.itinerary.size(); ++i) {
      if (i > 0 && a.itinerary[i].enter_micro <= a.itinerary[i - 1].enter_micro)
        fail("itinerary of " + a.agent_id + " is not strictly increasing");
      if (a.itinerary[i].zone && !known_zone(*a.itinerary[i].zone))
        fail("itinerary of " + a.agent_id + " names unknown zone " + *a.itinerary[i].zone);
    }
    for (const auto& ann : a.announcements)
      if (!detail::zone_at(a, ann.ts_micro)) fail("announcement of " + a.agent_id + " made out of sensor range");
  }
  if (script.interest && !known_zone(script.interest->display_zone)) fail("interest display zone is unknown");
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

namespace detail {

struct Capture {
  std::int64_t ts;
  std::size_t agent_index;
  std::string sensor_id;
  Bytes payload;
};

inline GroundTruth build_truth(const ScenarioScript& script, std::int64_t duration,
                               const std::map<std::string, std::int64_t>& intervals) {
  GroundTruth truth;
  truth.expected_label = script.expected_label;
  truth.probe_intervals = intervals;
  for (const auto& a : script.agents) {
    truth.agent_macs[a.agent_id] = a.mac;
    for (std::size_t i = 0; i < a.itinerary.size(); ++i) {
      const auto& stop = a.itinerary[i];
      if (!stop.zone || stop.enter_micro >= duration) continue;
      const std::int64_t end = i + 1 < a.itinerary.size() ? std::min(a.itinerary[i + 1].enter_micro, duration) : duration;
      truth.intervals.push_back({a.agent_id, *stop.zone, stop.enter_micro, end});
    }
  }
  const std::int64_t buckets = (duration + kTruthBucketMicro - 1) / kTruthBucketMicro;
  for (const auto& zone : script.sensors.zones()) {
    auto& series = truth.occupancy[zone];
    for (std::int64_t b = 0; b < buckets; ++b) {
      const std::int64_t lo = b * kTruthBucketMicro;
      const std::int64_t hi = lo + kTruthBucketMicro;
      std::set<std::string> present;
      for (const auto& iv : truth.intervals)
        if (iv.zone == zone && iv.start_micro < hi && iv.end_micro > lo) present.insert(iv.agent_id);
      series.push_back({lo, static_cast<std::int64_t>(present.size())});
    }
  }
  return truth;
}

}  // namespace detail

// Each agent probes every interval from t = 0 with a wildcard SSID. A probe
// is lost entirely with probability drop_rate; otherwise every sensor whose
// modelled rssi reaches the capture floor records it. Captures are written
// to per-sensor pcaps, decoded again and pushed through tracker and engine.
inline SimResult run(const SimConfig& config, const ScenarioScript& script, std::uint64_t seed) {
  validate(config, script);
  const std::int64_t duration = config.duration_override.value_or(script.duration_micro);
  Rng rng(seed);

  std::map<std::string, std::int64_t> intervals;
  for (const auto& a : script.agents)
    intervals[a.agent_id] = a.probe_interval_micro.value_or(rng.uniform_int(kMinProbeIntervalMicro, kMaxProbeIntervalMicro));

  SimResult result;
  std::vector<detail::Capture> captures;
  const auto& sensor_entries = script.sensors.entries();
  for (std::size_t ai = 0; ai < script.agents.size(); ++ai) {
    const Agent& agent = script.agents[ai];
    const std::int64_t interval = intervals.at(agent.agent_id);
    auto& emitted = result.emissions[agent.agent_id];
    std::uint16_t seq = 0;
    for (std::int64_t t = 0; t < duration; t += interval) {
      emitted.push_back(t);
      ProbeRequestFrame frame;
      frame.sa = agent.mac;
      frame.seq = seq;
      frame.supported_rates = {0x02, 0x04, 0x0b, 0x16};
      seq = static_cast<std::uint16_t>((seq + 1) % 4096);
      const bool dropped = rng.unit() < config.drop_rate;
      const auto zone = detail::zone_at(agent, t);
      Bytes body;
      for (const auto& [sensor_id, sensor_zone] : sensor_entries) {
        const int base = (zone && *zone == sensor_zone) ? config.rssi.near_dbm : config.rssi.far_dbm;
        const int rssi = base + static_cast<int>(rng.uniform_int(-config.rssi.jitter_db, config.rssi.jitter_db));
        if (dropped || !zone || rssi < config.rssi.capture_floor_dbm) continue;
        if (body.empty()) body = serialize_probe_request(frame);
        Bytes payload = make_radiotap_header(rssi);
        payload.insert(payload.end(), body.begin(), body.end());
        captures.push_back({t, ai, sensor_id, std::move(payload)});
      }
    }
  }
  std::stable_sort(captures.begin(), captures.end(), [](const detail::Capture& a, const detail::Capture& b) {
    return std::tie(a.ts, a.sensor_id, a.agent_index) < std::tie(b.ts, b.sensor_id, b.agent_index);
  });

  std::map<std::string, PcapWriter> writers;
  for (const auto& [sensor_id, _] : sensor_entries) writers.emplace(sensor_id, PcapWriter(LinkType::Ieee80211Radiotap));
  for (const auto& c : captures) writers.at(c.sensor_id).append(c.ts, c.payload);
  for (auto& [sensor_id, w] : writers) result.pcaps[sensor_id] = std::move(w).bytes();

  // Decode what was written and interleave it with active announcements.
  struct Feed {
    std::int64_t ts;
    std::string sensor_id;
    std::size_t order;
    std::variant<CaptureRecord, Sighting> item;
  };
  std::vector<Feed> feed;
  for (const auto& [sensor_id, bytes] : result.pcaps) {
    auto decoded = parse_pcap(bytes);
    if (!decoded.ok()) throw std::logic_error("simulator produced an unreadable capture");
    for (auto& rec : decoded.records) {
      const std::int64_t ts = rec.ts_micro;
      feed.push_back({ts, sensor_id, feed.size(), std::move(rec)});
    }
  }
  std::vector<engine::Event> info_events;
  for (const auto& a : script.agents) {
    const DeviceId device = make_device_id(a.mac.to_string(), config.tracker.identity);
    for (const auto& ann : a.announcements) {
      if (ann.ts_micro >= duration) continue;
      const ZoneId zone = *detail::zone_at(a, ann.ts_micro);
      std::string sensor_id;
      for (const auto& [sid, z] : sensor_entries)
        if (z == zone) {
          sensor_id = sid;
          break;
        }
      Sighting s{device, sensor_id, ann.ts_micro, std::nullopt, SightingKind::ActiveAnnounce, ann.attrs};
      feed.push_back({ann.ts_micro, sensor_id, feed.size(), s});
      info_events.push_back({ann.ts_micro, engine::ActiveInfo{device, ann.attrs}});
    }
  }
  std::stable_sort(feed.begin(), feed.end(), [](const Feed& a, const Feed& b) {
    return std::tie(a.ts, a.sensor_id, a.order) < std::tie(b.ts, b.sensor_id, b.order);
  });

  TrackerConfig tracker_config = config.tracker;
  tracker_config.retain_sightings = true;
  PresenceTracker tracker(script.sensors, tracker_config);
  for (const auto& f : feed) {
    if (const auto* rec = std::get_if<CaptureRecord>(&f.item)) {
      if (auto s = tracker.ingest(*rec, f.sensor_id)) result.sightings.push_back(std::move(*s));
    } else {
      const auto& s = std::get<Sighting>(f.item);
      tracker.observe(s);
      result.sightings.push_back(s);
    }
  }
  tracker.flush();
  auto snap = tracker.snapshot();
  result.sessions = std::move(snap.sessions);
  result.zoned_sightings = std::move(snap.zoned_sightings);
  result.stats = snap.stats;
  result.truth = detail::build_truth(script, duration, intervals);

  // Engine replay: presence, announcements, manual actions and scheduled
  // learner / analytics passes in time order.
  enum Rank { kArrival, kInfo, kManual, kDeparture, kLearn, kAnalytics };
  struct Step {
    std::int64_t ts;
    int rank;
    std::size_t order;
    std::variant<engine::Event, ManualAction, LearnStep, AnalyticsStep> item;
  };
  std::vector<Step> steps;
  for (auto& e : engine::presence_events(result.sessions)) {
    const int rank = std::holds_alternative<engine::Arrival>(e.body) ? kArrival : kDeparture;
    steps.push_back({e.ts_micro, rank, steps.size(), std::move(e)});
  }
  for (auto& e : info_events) steps.push_back({e.ts_micro, kInfo, steps.size(), std::move(e)});
  for (const auto& a : script.agents)
    for (const auto& m : a.manual_actions)
      if (m.ts_micro < duration) steps.push_back({m.ts_micro, kManual, steps.size(), m});
  for (const auto& l : script.learn_steps)
    if (l.ts_micro <= duration) steps.push_back({l.ts_micro, kLearn, steps.size(), l});
  for (const auto& an : script.analytics_steps)
    if (an.ts_micro <= duration) steps.push_back({an.ts_micro, kAnalytics, steps.size(), an});
  std::stable_sort(steps.begin(), steps.end(), [](const Step& a, const Step& b) {
    return std::tie(a.ts, a.rank, a.order) < std::tie(b.ts, b.rank, b.order);
  });

  engine::Engine eng(script.rules);
  auto sessions_until = [&](std::int64_t ts) {
    std::vector<ZonedSighting> upto;
    for (const auto& z : result.zoned_sightings)
      if (z.sighting.ts_micro <= ts) upto.push_back(z);
    return build_sessions(upto, config.tracker.gap_micro);
  };

  for (const auto& step : steps) {
    if (const auto* e = std::get_if<engine::Event>(&step.item)) {
      eng.step(*e);
    } else if (const auto* m = std::get_if<ManualAction>(&step.item)) {
      auto it = eng.state().actuators.find(m->actuator);
      if (it != eng.state().actuators.end() && it->second == m->state) continue;
      eng.step({m->ts_micro, engine::ManualActuation{m->actuator, m->state}});
    } else if (const auto* l = std::get_if<LearnStep>(&step.item)) {
      engine::LearningPass pass{l->ts_micro, l->learner, 0, 0};
      if (l->learner == engine::LearnerKind::TriggerRules) {
        pass.rules_derived = engine::find_trigger_patterns(eng.log(), script.learner).size();
        for (auto& r : engine::learn_trigger_rules(eng.log(), script.learner, eng.rules(), eng.next_rule_id())) {
          eng.add_rule(std::move(r));
          ++pass.rules_added;
        }
      } else if (script.interest) {
        const auto& cfg = *script.interest;
        const auto sessions = sessions_until(l->ts_micro);
        std::set<DeviceId> devices;
        for (const auto& s : sessions) devices.insert(s.device_id);
        for (const auto& device : devices) {
          const auto profile = analytics::interest_profile(device, sessions, cfg.booths, cfg.dwell_threshold_micro);
          for (const auto& topic : profile.interests) {
            std::vector<engine::FeedbackAction> candidates{
                {engine::FeedbackKind::Content, "{device}", "ad: " + topic}};
            if (auto rec = cfg.recommendations.find(topic); rec != cfg.recommendations.end())
              candidates.push_back({engine::FeedbackKind::Navigation, "{device}", "next stand: " + rec->second});
            for (auto& action : candidates) {
              ++pass.rules_derived;
              engine::Rule rule{eng.next_rule_id(), engine::OnArrival{cfg.display_zone, device}, std::move(action),
                                engine::RuleOrigin::Learned, 1};
              const bool known = std::any_of(eng.rules().begin(), eng.rules().end(),
                                             [&](const engine::Rule& r) { return engine::same_behaviour(r, rule); });
              if (known) continue;
              eng.add_rule(std::move(rule));
              ++pass.rules_added;
            }
          }
        }
      }
      result.trace.learning.push_back(pass);
    } else {
      const auto& an = std::get<AnalyticsStep>(step.item);
      const auto sessions = sessions_until(an.ts_micro);
      const auto flows = analytics::flow_matrix(sessions);
      std::set<DeviceId> devices;
      for (const auto& s : sessions) devices.insert(s.device_id);
      result.trace.analytics.push_back(
          {an.ts_micro, "devices=" + std::to_string(devices.size()) + " transitions=" + std::to_string(flows.total())});
    }
  }

  result.trace.log = eng.log();
  result.trace.actions = eng.actions();
  result.final_rules = eng.rules();
  result.label = taxonomy::render_label(engine::classify_trace(result.trace));
  return result;
}

}  // namespace wearsense::sim
