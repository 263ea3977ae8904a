#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <type_traits>
#include <variant>
#include <vector>

#include "wearsense/presence_tracker.hpp"
#include "wearsense/taxonomy.hpp"

namespace wearsense::engine {

using taxonomy::FeedbackKind;

inline constexpr std::size_t kDefaultLearnThreshold = 5;
inline constexpr std::int64_t kDefaultLearnWindowMicro = 120 * kMicrosPerSecond;

enum class EngineErrc { TimeRegression, EmptyTrace, Unclassifiable, InvalidRule };

inline const char* to_string(EngineErrc e) {
  switch (e) {
    case EngineErrc::TimeRegression: return "TimeRegression";
    case EngineErrc::EmptyTrace: return "EmptyTrace";
    case EngineErrc::Unclassifiable: return "Unclassifiable";
    case EngineErrc::InvalidRule: return "InvalidRule";
  }
  return "Unknown";
}

class EngineError : public std::runtime_error {
 public:
  EngineError(EngineErrc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
  EngineErrc code() const noexcept { return code_; }

 private:
  EngineErrc code_;
};

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

struct Arrival {
  DeviceId device;
  ZoneId zone;
  friend bool operator==(const Arrival&, const Arrival&) = default;
};

struct Departure {
  DeviceId device;
  ZoneId zone;
  friend bool operator==(const Departure&, const Departure&) = default;
};

struct ActiveInfo {
  DeviceId device;
  Attrs attrs;
  friend bool operator==(const ActiveInfo&, const ActiveInfo&) = default;
};

struct ManualActuation {
  std::string actuator;
  std::string state;
  friend bool operator==(const ManualActuation&, const ManualActuation&) = default;
};

using EventBody = std::variant<Arrival, Departure, ActiveInfo, ManualActuation>;

struct Event {
  std::int64_t ts_micro = 0;
  EventBody body;

  friend bool operator==(const Event&, const Event&) = default;
};

// Arrival at session start, departure at session end. At equal timestamps
// arrivals precede departures so single-sighting sessions stay well formed.
inline std::vector<Event> presence_events(std::span<const PresenceSession> sessions) {
  struct Keyed {
    std::int64_t ts;
    int rank;
    DeviceId device;
    ZoneId zone;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(sessions.size() * 2);
  for (const auto& s : sessions) {
    keyed.push_back({s.start_micro, 0, s.device_id, s.zone_id});
    keyed.push_back({s.end_micro, 1, s.device_id, s.zone_id});
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.ts, a.rank, a.device, a.zone) < std::tie(b.ts, b.rank, b.device, b.zone);
  });
  std::vector<Event> out;
  out.reserve(keyed.size());
  for (auto& k : keyed) {
    if (k.rank == 0)
      out.push_back({k.ts, Arrival{std::move(k.device), std::move(k.zone)}});
    else
      out.push_back({k.ts, Departure{std::move(k.device), std::move(k.zone)}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rules
// ---------------------------------------------------------------------------

struct OnArrival {
  ZoneId zone;
  std::optional<DeviceId> device;  // nullopt matches any device
  friend bool operator==(const OnArrival&, const OnArrival&) = default;
};

struct OnActiveInfo {
  std::string key;
  friend bool operator==(const OnActiveInfo&, const OnActiveInfo&) = default;
};

using Condition = std::variant<OnArrival, OnActiveInfo>;

// Target and payload may contain placeholders resolved at firing time:
// {device}, {zone}, {value}, {occupancy:ZONE}, {least_occupied:Z1,Z2,...}.
struct FeedbackAction {
  FeedbackKind kind = FeedbackKind::Trigger;
  std::string target;
  std::string payload;
  friend bool operator==(const FeedbackAction&, const FeedbackAction&) = default;
};

enum class RuleOrigin { Configured, Learned };

struct Rule {
  std::uint32_t rule_id = 0;
  Condition condition;
  FeedbackAction action;
  RuleOrigin origin = RuleOrigin::Configured;
  // Qualifying observations behind a learned rule.
  std::size_t support = 0;

  friend bool operator==(const Rule&, const Rule&) = default;
};

struct EmittedAction {
  std::int64_t ts_micro = 0;
  std::uint32_t rule_id = 0;
  FeedbackAction action;
  friend bool operator==(const EmittedAction&, const EmittedAction&) = default;
};

struct EngineState {
  std::optional<std::int64_t> last_ts;
  std::map<ZoneId, std::set<DeviceId>> occupancy;
  std::map<std::string, std::string> actuators;

  std::size_t occupancy_of(const ZoneId& zone) const {
    auto it = occupancy.find(zone);
    return it == occupancy.end() ? 0 : it->second.size();
  }
};

namespace detail {

struct FiringContext {
  const DeviceId* device = nullptr;
  const ZoneId* zone = nullptr;
  const std::string* value = nullptr;
};

inline std::string expand(std::string_view text, const FiringContext& ctx, const EngineState& state) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find('{', pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = text.find('}', open);
    if (close == std::string_view::npos) break;
    out.append(text.substr(pos, open - pos));
    const std::string_view token = text.substr(open + 1, close - open - 1);
    if (token == "device" && ctx.device) {
      out += ctx.device->str();
    } else if (token == "zone" && ctx.zone) {
      out += *ctx.zone;
    } else if (token == "value" && ctx.value) {
      out += *ctx.value;
    } else if (token.starts_with("occupancy:")) {
      out += std::to_string(state.occupancy_of(std::string(token.substr(10))));
    } else if (token.starts_with("least_occupied:")) {
      std::string_view list = token.substr(15);
      std::optional<std::pair<std::size_t, std::string>> best;
      while (!list.empty()) {
        const std::size_t comma = list.find(',');
        const std::string zone(list.substr(0, comma));
        const auto candidate = std::make_pair(state.occupancy_of(zone), zone);
        if (!best || candidate < *best) best = candidate;
        if (comma == std::string_view::npos) break;
        list.remove_prefix(comma + 1);
      }
      if (best) out += best->second;
    } else {
      out.append(text.substr(open, close - open + 1));
    }
    pos = close + 1;
  }
  out.append(text.substr(std::min(pos, text.size())));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

// Event-sourced decision loop. Every processed event is appended to the
// observation log whether or not a rule fires.
class Engine {
 public:
  Engine() = default;
  explicit Engine(std::vector<Rule> rules) {
    for (auto& r : rules) add_rule(std::move(r));
  }

  void add_rule(Rule rule) {
    if (rule.action.kind == FeedbackKind::Observation)
      throw EngineError(EngineErrc::InvalidRule, "observation is not an action kind");
    auto pos = std::lower_bound(rules_.begin(), rules_.end(), rule.rule_id,
                                [](const Rule& r, std::uint32_t id) { return r.rule_id < id; });
    if (pos != rules_.end() && pos->rule_id == rule.rule_id)
      throw EngineError(EngineErrc::InvalidRule, "duplicate rule id " + std::to_string(rule.rule_id));
    rules_.insert(pos, std::move(rule));
  }

  std::uint32_t next_rule_id() const { return rules_.empty() ? 1 : rules_.back().rule_id + 1; }

  std::vector<EmittedAction> step(const Event& event) {
    if (state_.last_ts && event.ts_micro < *state_.last_ts)
      throw EngineError(EngineErrc::TimeRegression, "event at " + std::to_string(event.ts_micro) +
                                                        " precedes " + std::to_string(*state_.last_ts));
    state_.last_ts = event.ts_micro;
    log_.push_back(event);

    std::vector<EmittedAction> fired;
    auto fire = [&](const Rule& rule, const detail::FiringContext& ctx) {
      FeedbackAction a = rule.action;
      a.target = detail::expand(a.target, ctx, state_);
      a.payload = detail::expand(a.payload, ctx, state_);
      if (a.kind == FeedbackKind::Trigger) state_.actuators[a.target] = a.payload;
      fired.push_back({event.ts_micro, rule.rule_id, std::move(a)});
    };

    std::visit(
        [&](const auto& body) {
          using T = std::decay_t<decltype(body)>;
          if constexpr (std::is_same_v<T, Arrival>) {
            state_.occupancy[body.zone].insert(body.device);
            const detail::FiringContext ctx{&body.device, &body.zone, nullptr};
            for (const auto& rule : rules_) {
              const auto* cond = std::get_if<OnArrival>(&rule.condition);
              if (cond && cond->zone == body.zone && (!cond->device || *cond->device == body.device)) fire(rule, ctx);
            }
          } else if constexpr (std::is_same_v<T, Departure>) {
            auto it = state_.occupancy.find(body.zone);
            if (it != state_.occupancy.end()) it->second.erase(body.device);
          } else if constexpr (std::is_same_v<T, ActiveInfo>) {
            for (const auto& rule : rules_) {
              const auto* cond = std::get_if<OnActiveInfo>(&rule.condition);
              if (!cond) continue;
              auto attr = body.attrs.find(cond->key);
              if (attr == body.attrs.end()) continue;
              fire(rule, detail::FiringContext{&body.device, nullptr, &attr->second});
            }
          } else {
            state_.actuators[body.actuator] = body.state;
          }
        },
        event.body);

    actions_.insert(actions_.end(), fired.begin(), fired.end());
    return fired;
  }

  const std::vector<Rule>& rules() const { return rules_; }
  const std::vector<Event>& log() const { return log_; }
  const std::vector<EmittedAction>& actions() const { return actions_; }
  const EngineState& state() const { return state_; }

 private:
  std::vector<Rule> rules_;
  std::vector<Event> log_;
  std::vector<EmittedAction> actions_;
  EngineState state_;
};

// ---------------------------------------------------------------------------
// Trigger-rule learner
// ---------------------------------------------------------------------------

struct LearnerConfig {
  std::size_t k = kDefaultLearnThreshold;
  std::int64_t window_micro = kDefaultLearnWindowMicro;
  // Learned rules match any device instead of the observed one.
  bool generalize_devices = false;
};

struct TriggerPattern {
  ZoneId zone;
  std::optional<DeviceId> device;
  std::string actuator;
  std::string state;
  std::size_t support = 0;

  friend bool operator==(const TriggerPattern&, const TriggerPattern&) = default;
};

// Counts, per (zone, device, actuator, state), the distinct arrivals that are
// followed later in the log, within the window, by a manual actuation of
// that actuator to that state. Patterns with support >= k are returned in
// (zone, device, actuator, state) order.
inline std::vector<TriggerPattern> find_trigger_patterns(std::span<const Event> log, const LearnerConfig& cfg) {
  if (cfg.k < 1 || cfg.window_micro <= 0) throw std::invalid_argument("learner needs k >= 1 and a positive window");
  using Key = std::tuple<ZoneId, std::optional<DeviceId>, std::string, std::string>;
  std::map<Key, std::size_t> support;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto* arrival = std::get_if<Arrival>(&log[i].body);
    if (!arrival) continue;
    std::set<Key> matched;
    for (std::size_t j = i + 1; j < log.size() && log[j].ts_micro - log[i].ts_micro <= cfg.window_micro; ++j) {
      const auto* act = std::get_if<ManualActuation>(&log[j].body);
      if (!act) continue;
      std::optional<DeviceId> device;
      if (!cfg.generalize_devices) device = arrival->device;
      matched.insert(Key{arrival->zone, device, act->actuator, act->state});
    }
    for (const auto& key : matched) ++support[key];
  }
  std::vector<TriggerPattern> out;
  for (const auto& [key, n] : support) {
    if (n < cfg.k) continue;
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), n});
  }
  return out;
}

inline Rule rule_from_pattern(const TriggerPattern& p, std::uint32_t rule_id) {
  return Rule{rule_id, OnArrival{p.zone, p.device}, FeedbackAction{FeedbackKind::Trigger, p.actuator, p.state},
              RuleOrigin::Learned, p.support};
}

// Same condition and action, ignoring id, origin and support.
inline bool same_behaviour(const Rule& a, const Rule& b) { return a.condition == b.condition && a.action == b.action; }

// New learned rules only; patterns already covered by `existing` are
// suppressed. Ids are assigned from first_rule_id upward.
inline std::vector<Rule> learn_trigger_rules(std::span<const Event> log, const LearnerConfig& cfg,
                                             std::span<const Rule> existing = {}, std::uint32_t first_rule_id = 1) {
  std::vector<Rule> out;
  std::uint32_t next_id = first_rule_id;
  for (const auto& p : find_trigger_patterns(log, cfg)) {
    Rule candidate = rule_from_pattern(p, next_id);
    const bool known = std::any_of(existing.begin(), existing.end(),
                                   [&](const Rule& r) { return same_behaviour(r, candidate); });
    if (known) continue;
    out.push_back(std::move(candidate));
    ++next_id;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace classification
// ---------------------------------------------------------------------------

enum class LearnerKind { TriggerRules, InterestProfile };

struct LearningPass {
  std::int64_t ts_micro = 0;
  LearnerKind learner = LearnerKind::TriggerRules;
  // Rules the learner derived (new or already known) and how many were new.
  std::size_t rules_derived = 0;
  std::size_t rules_added = 0;
};

struct AnalyticsPass {
  std::int64_t ts_micro = 0;
  std::string report;
};

struct EngineTrace {
  std::vector<Event> log;
  std::vector<EmittedAction> actions;
  std::vector<LearningPass> learning;
  std::vector<AnalyticsPass> analytics;
};

// Reconstructs the phases a run went through and classifies them. A device
// that announced information makes the tag active; any observed device that
// never did makes it passive.
inline taxonomy::ScenarioClassification classify_trace(const EngineTrace& trace) {
  if (trace.log.empty()) throw EngineError(EngineErrc::EmptyTrace, "no events in trace");

  std::set<DeviceId> announcing;
  std::set<DeviceId> observed;
  for (const auto& e : trace.log) {
    std::visit(
        [&](const auto& body) {
          using T = std::decay_t<decltype(body)>;
          if constexpr (std::is_same_v<T, ActiveInfo>) {
            announcing.insert(body.device);
            observed.insert(body.device);
          } else if constexpr (!std::is_same_v<T, ManualActuation>) {
            observed.insert(body.device);
          }
        },
        e.body);
  }
  std::set<taxonomy::TagMode> tags;
  if (!announcing.empty()) tags.insert(taxonomy::TagMode::Active);
  if (std::any_of(observed.begin(), observed.end(), [&](const DeviceId& d) { return !announcing.count(d); }))
    tags.insert(taxonomy::TagMode::Passive);
  if (tags.empty()) throw EngineError(EngineErrc::Unclassifiable, "trace observed no devices");

  std::vector<taxonomy::ScenarioPhase> phases;
  if (!trace.actions.empty()) {
    taxonomy::ScenarioPhase direct{false, taxonomy::InteractionMode::Direct, {}};
    for (const auto& a : trace.actions) direct.feedback_kinds.insert(a.action.kind);
    phases.push_back(direct);
  }
  bool learned = false;
  for (auto kind : {LearnerKind::TriggerRules, LearnerKind::InterestProfile}) {
    const bool ran = std::any_of(trace.learning.begin(), trace.learning.end(), [&](const LearningPass& p) {
      return p.learner == kind && p.rules_derived > 0;
    });
    if (!ran) continue;
    learned = true;
    taxonomy::ScenarioPhase indirect{false, taxonomy::InteractionMode::Indirect, {}};
    // Behaviour learned from observed manual actions is observation feedback;
    // profile learning feeds personalised content instead.
    if (kind == LearnerKind::TriggerRules) indirect.feedback_kinds.insert(FeedbackKind::Observation);
    phases.push_back(indirect);
  }
  if (trace.actions.empty() && !learned && !trace.analytics.empty())
    phases.push_back({false, taxonomy::InteractionMode::None, {FeedbackKind::Observation}});
  if (phases.empty()) throw EngineError(EngineErrc::Unclassifiable, "trace was neither acted on nor analysed");

  taxonomy::ScenarioSpec spec{"trace", {}};
  for (auto tag : tags) {
    for (auto p : phases) {
      p.shares_application_info = tag == taxonomy::TagMode::Active;
      spec.phases.push_back(p);
    }
  }
  return taxonomy::classify(spec);
}

}  // namespace wearsense::engine
