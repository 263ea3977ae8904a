#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wearsense::taxonomy {

// Enumerator order is the canonical label order.
enum class TagMode { Passive, Active };
enum class InteractionMode { Indirect, Direct, None };
enum class FeedbackKind { Navigation, Content, Observation, Trigger };

inline const char* to_string(TagMode t) { return t == TagMode::Passive ? "passive" : "active"; }

inline const char* to_string(InteractionMode m) {
  switch (m) {
    case InteractionMode::Indirect: return "indirect";
    case InteractionMode::Direct: return "direct";
    case InteractionMode::None: return "none";
  }
  return "?";
}

inline const char* to_string(FeedbackKind k) {
  switch (k) {
    case FeedbackKind::Navigation: return "navigation";
    case FeedbackKind::Content: return "content";
    case FeedbackKind::Observation: return "observation";
    case FeedbackKind::Trigger: return "trigger";
  }
  return "?";
}

inline std::optional<TagMode> tag_mode_from_string(std::string_view s) {
  if (s == "passive") return TagMode::Passive;
  if (s == "active") return TagMode::Active;
  return std::nullopt;
}

inline std::optional<InteractionMode> interaction_from_string(std::string_view s) {
  if (s == "indirect") return InteractionMode::Indirect;
  if (s == "direct") return InteractionMode::Direct;
  if (s == "none") return InteractionMode::None;
  return std::nullopt;
}

inline std::optional<FeedbackKind> feedback_from_string(std::string_view s) {
  if (s == "navigation") return FeedbackKind::Navigation;
  if (s == "content") return FeedbackKind::Content;
  if (s == "observation") return FeedbackKind::Observation;
  if (s == "trigger") return FeedbackKind::Trigger;
  return std::nullopt;
}

struct ScenarioPhase {
  bool shares_application_info = false;
  InteractionMode interaction = InteractionMode::None;
  std::set<FeedbackKind> feedback_kinds;

  friend bool operator==(const ScenarioPhase&, const ScenarioPhase&) = default;
};

struct ScenarioSpec {
  std::string name;
  std::vector<ScenarioPhase> phases;
};

struct ScenarioClassification {
  std::set<TagMode> tag_modes;
  std::set<InteractionMode> interaction_modes;
  std::set<FeedbackKind> feedback_kinds;

  friend bool operator==(const ScenarioClassification&, const ScenarioClassification&) = default;
};

enum class Rule { EmptySpec, R1, R2, R3 };

inline const char* to_string(Rule r) {
  switch (r) {
    case Rule::EmptySpec: return "EmptySpec";
    case Rule::R1: return "R1";
    case Rule::R2: return "R2";
    case Rule::R3: return "R3";
  }
  return "?";
}

struct Violation {
  Rule rule = Rule::R1;
  std::size_t phase_index = 0;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

namespace detail {

inline bool touches_wearable(const std::set<FeedbackKind>& kinds) {
  return kinds.count(FeedbackKind::Navigation) || kinds.count(FeedbackKind::Content) ||
         kinds.count(FeedbackKind::Trigger);
}

}  // namespace detail

// R1: Direct iff the phase returns navigation, content or trigger feedback.
// R2: None implies exactly {observation}.
// R3: Indirect implies feedback within {observation}.
inline std::vector<Violation> validate(const ScenarioSpec& spec) {
  std::vector<Violation> out;
  if (spec.phases.empty()) {
    out.push_back({Rule::EmptySpec, 0, "scenario has no phases"});
    return out;
  }
  for (std::size_t i = 0; i < spec.phases.size(); ++i) {
    const auto& p = spec.phases[i];
    const bool direct = p.interaction == InteractionMode::Direct;
    if (direct != detail::touches_wearable(p.feedback_kinds)) {
      out.push_back({Rule::R1, i,
                     direct ? "direct interaction without navigation, content or trigger feedback"
                            : "navigation, content or trigger feedback without direct interaction"});
    }
    if (p.interaction == InteractionMode::None &&
        p.feedback_kinds != std::set<FeedbackKind>{FeedbackKind::Observation}) {
      out.push_back({Rule::R2, i, "no interaction must carry exactly observation feedback"});
    }
    if (p.interaction == InteractionMode::Indirect) {
      for (auto k : p.feedback_kinds) {
        if (k != FeedbackKind::Observation) {
          out.push_back({Rule::R3, i, "indirect interaction may only carry observation feedback"});
          break;
        }
      }
    }
  }
  return out;
}

class InvalidSpec : public std::runtime_error {
 public:
  explicit InvalidSpec(std::vector<Violation> violations)
      : std::runtime_error("InvalidSpec: " + std::to_string(violations.size()) + " violation(s)"),
        violations_(std::move(violations)) {}
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

inline ScenarioClassification classify(const ScenarioSpec& spec) {
  if (auto v = validate(spec); !v.empty()) throw InvalidSpec(std::move(v));
  ScenarioClassification c;
  for (const auto& p : spec.phases) {
    c.tag_modes.insert(p.shares_application_info ? TagMode::Active : TagMode::Passive);
    c.interaction_modes.insert(p.interaction);
    c.feedback_kinds.insert(p.feedback_kinds.begin(), p.feedback_kinds.end());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Canonical label: `tag:a/b; interaction:a/b; feedback:a/b`
// ---------------------------------------------------------------------------

class LabelParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename E>
std::string join(const std::set<E>& members) {
  std::string out;
  for (auto m : members) {
    if (!out.empty()) out += '/';
    out += to_string(m);
  }
  return out;
}

template <typename E, typename FromString>
std::set<E> split_members(std::string_view field, FromString from_string) {
  std::set<E> out;
  std::optional<E> previous;
  std::size_t pos = 0;
  while (true) {
    const std::size_t slash = field.find('/', pos);
    const std::string_view word = field.substr(pos, slash == std::string_view::npos ? std::string_view::npos : slash - pos);
    const auto value = from_string(word);
    if (!value) throw LabelParseError("unknown label member '" + std::string(word) + "'");
    if (previous && !(*previous < *value)) throw LabelParseError("label members out of canonical order");
    previous = value;
    out.insert(*value);
    if (slash == std::string_view::npos) break;
    pos = slash + 1;
  }
  return out;
}

inline std::string_view expect_field(std::string_view& rest, std::string_view prefix, bool last) {
  if (rest.substr(0, prefix.size()) != prefix) throw LabelParseError("expected '" + std::string(prefix) + "'");
  rest.remove_prefix(prefix.size());
  if (last) {
    auto field = rest;
    rest = {};
    return field;
  }
  const std::size_t sep = rest.find("; ");
  if (sep == std::string_view::npos) throw LabelParseError("missing '; ' separator");
  auto field = rest.substr(0, sep);
  rest.remove_prefix(sep + 2);
  return field;
}

}  // namespace detail

// An empty feedback set renders as `feedback:none`.
inline std::string render_label(const ScenarioClassification& c) {
  if (c.tag_modes.empty() || c.interaction_modes.empty())
    throw std::invalid_argument("classification needs at least one tag and one interaction mode");
  std::string out = "tag:" + detail::join(c.tag_modes);
  out += "; interaction:" + detail::join(c.interaction_modes);
  out += "; feedback:" + (c.feedback_kinds.empty() ? std::string("none") : detail::join(c.feedback_kinds));
  return out;
}

inline ScenarioClassification parse_label(std::string_view text) {
  std::string_view rest = text;
  const auto tag = detail::expect_field(rest, "tag:", false);
  const auto interaction = detail::expect_field(rest, "interaction:", false);
  const auto feedback = detail::expect_field(rest, "feedback:", true);
  ScenarioClassification c;
  c.tag_modes = detail::split_members<TagMode>(tag, tag_mode_from_string);
  c.interaction_modes = detail::split_members<InteractionMode>(interaction, interaction_from_string);
  if (feedback != "none") c.feedback_kinds = detail::split_members<FeedbackKind>(feedback, feedback_from_string);
  return c;
}

// ---------------------------------------------------------------------------
// The five built-in scenarios
// ---------------------------------------------------------------------------

inline ScenarioSpec my_seat_spec() {
  return {"my-seat", {{true, InteractionMode::Direct, {FeedbackKind::Navigation}}}};
}

inline ScenarioSpec free_seat_spec() {
  return {"free-seat", {{false, InteractionMode::Direct, {FeedbackKind::Navigation}}}};
}

// Passive visitor: learning phase, then personalised content and navigation.
// Active visitor: announced interests drive content directly.
inline ScenarioSpec optimized_advertisement_spec() {
  return {"optimized-advertisement",
          {{false, InteractionMode::Indirect, {}},
           {false, InteractionMode::Direct, {FeedbackKind::Content, FeedbackKind::Navigation}},
           {true, InteractionMode::Direct, {FeedbackKind::Content, FeedbackKind::Navigation}}}};
}

inline ScenarioSpec people_flow_spec() {
  return {"people-flow", {{false, InteractionMode::None, {FeedbackKind::Observation}}}};
}

inline ScenarioSpec smart_buildings_spec() {
  return {"smart-buildings",
          {{false, InteractionMode::Indirect, {FeedbackKind::Observation}},
           {false, InteractionMode::Direct, {FeedbackKind::Trigger}}}};
}

inline std::vector<ScenarioSpec> builtin_specs() {
  return {my_seat_spec(), free_seat_spec(), optimized_advertisement_spec(), people_flow_spec(),
          smart_buildings_spec()};
}

// Expected labels of the five built-in scenarios.
inline std::string builtin_label(std::string_view scenario) {
  if (scenario == "my-seat") return "tag:active; interaction:direct; feedback:navigation";
  if (scenario == "free-seat") return "tag:passive; interaction:direct; feedback:navigation";
  if (scenario == "optimized-advertisement")
    return "tag:passive/active; interaction:indirect/direct; feedback:navigation/content";
  if (scenario == "people-flow") return "tag:passive; interaction:none; feedback:observation";
  if (scenario == "smart-buildings") return "tag:passive; interaction:indirect/direct; feedback:observation/trigger";
  throw std::invalid_argument("unknown scenario '" + std::string(scenario) + "'");
}

}  // namespace wearsense::taxonomy
