#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "wearsense/sim_harness.hpp"
#include "wearsense/taxonomy.hpp"

namespace wearsense::sim {

namespace detail {

inline constexpr std::int64_t sec(std::int64_t s) { return s * kMicrosPerSecond; }
inline constexpr std::int64_t kDay = 86'400;

// Locally administered unicast address derived from an index.
inline MacAddress agent_mac(std::uint32_t index) {
  return MacAddress{{0x02, 0x57, 0x53, static_cast<std::uint8_t>(index >> 16), static_cast<std::uint8_t>(index >> 8),
                     static_cast<std::uint8_t>(index)}};
}

inline SensorMap one_sensor_per_zone(const std::vector<ZoneId>& zones) {
  SensorMap m;
  for (const auto& z : zones) m.add("s-" + z, z);
  return m;
}

}  // namespace detail

inline constexpr std::int64_t kMinStayMicro = 360 * kMicrosPerSecond;
inline constexpr std::int64_t kMaxStayMicro = 900 * kMicrosPerSecond;

// Agents wandering between zones with stays of 6 to 15 minutes, never
// staying put across consecutive stops. Every stay, including the last, is at
// least kMinStayMicro long. Probe intervals are left to the run seed.
inline ScenarioScript wandering_population(std::string name, std::size_t agents, std::vector<ZoneId> zones,
                                           std::int64_t duration_micro, std::uint64_t itinerary_seed) {
  if (zones.size() < 2) throw SimError(SimErrc::InvalidConfig, "wandering needs at least two zones");
  ScenarioScript script;
  script.name = std::move(name);
  script.sensors = detail::one_sensor_per_zone(zones);
  script.duration_micro = duration_micro;
  Rng rng(itinerary_seed);
  const auto zone_count = static_cast<std::int64_t>(zones.size());
  for (std::size_t i = 0; i < agents; ++i) {
    Agent a;
    a.agent_id = "agent-" + std::to_string(i + 1);
    a.mac = detail::agent_mac(static_cast<std::uint32_t>(i + 1));
    std::size_t zone = static_cast<std::size_t>(rng.uniform_int(0, zone_count - 1));
    std::int64_t t = 0;
    a.itinerary.push_back({t, zones[zone]});
    while (true) {
      t += rng.uniform_int(kMinStayMicro, kMaxStayMicro);
      if (duration_micro - t < kMinStayMicro) break;
      const auto step = static_cast<std::size_t>(rng.uniform_int(1, zone_count - 1));
      zone = (zone + step) % zones.size();
      a.itinerary.push_back({t, zones[zone]});
    }
    script.agents.push_back(std::move(a));
  }
  return script;
}

// Sebastian boards with an electronic ticket that his phone shares with the
// train; the monitor answers with his seat.
inline ScenarioScript my_seat_script() {
  using detail::sec;
  ScenarioScript s;
  s.name = "my-seat";
  s.sensors = detail::one_sensor_per_zone({"platform", "train_entrance"});
  s.duration_micro = sec(1800);
  Agent sebastian;
  sebastian.agent_id = "sebastian";
  sebastian.mac = detail::agent_mac(1);
  sebastian.probe_interval_micro = sec(30);
  sebastian.itinerary = {{0, "platform"}, {sec(900), "train_entrance"}};
  sebastian.announcements = {{sec(930), {{"ticket_route", "erfurt-berlin"}, {"ticket_seat", "32F"}}}};
  s.agents = {sebastian};
  s.rules = {{1, engine::OnActiveInfo{"ticket_seat"},
              {engine::FeedbackKind::Navigation, "{device}", "seat {value} is on the left side"}}};
  s.expected_label = taxonomy::builtin_label("my-seat");
  return s;
}

// Lucas shares nothing; the entrance monitor routes him to the emptier half
// of the wagon using the tracker's own occupancy.
inline ScenarioScript free_seat_script() {
  using detail::sec;
  ScenarioScript s;
  s.name = "free-seat";
  s.sensors = detail::one_sensor_per_zone({"platform", "entrance", "wagon21_left", "wagon21_right"});
  s.duration_micro = sec(2400);
  Agent lucas;
  lucas.agent_id = "lucas";
  lucas.mac = detail::agent_mac(1);
  lucas.probe_interval_micro = sec(45);
  lucas.itinerary = {{0, "platform"}, {sec(900), "entrance"}, {sec(1500), "wagon21_right"}};
  s.agents.push_back(lucas);
  for (std::uint32_t i = 0; i < 3; ++i) {
    Agent p;
    p.agent_id = "passenger-" + std::to_string(i + 1);
    p.mac = detail::agent_mac(10 + i);
    p.itinerary = {{0, "wagon21_left"}};
    s.agents.push_back(p);
  }
  s.rules = {{1, engine::OnArrival{"entrance", std::nullopt},
              {engine::FeedbackKind::Navigation, "{device}",
               "free seats in {least_occupied:wagon21_left,wagon21_right}"}}};
  s.expected_label = taxonomy::builtin_label("free-seat");
  return s;
}

// Maria wanders the fair without sharing anything; booth dwell is learned
// and turned into ads and a stand recommendation at the hall monitor. A
// second visitor shares her interests directly.
inline ScenarioScript optimized_advertisement_script() {
  using detail::sec;
  ScenarioScript s;
  s.name = "optimized-advertisement";
  s.sensors = detail::one_sensor_per_zone({"robotics", "cloud", "security", "hall"});
  s.duration_micro = sec(2400);
  Agent maria;
  maria.agent_id = "maria";
  maria.mac = detail::agent_mac(1);
  maria.probe_interval_micro = sec(30);
  maria.itinerary = {{0, "robotics"}, {sec(1200), "cloud"}, {sec(1290), "hall"}};
  Agent shared;
  shared.agent_id = "maria-active";
  shared.mac = detail::agent_mac(2);
  shared.probe_interval_micro = sec(40);
  shared.itinerary = {{0, "hall"}};
  shared.announcements = {{sec(600), {{"interests", "cloud"}}}};
  s.agents = {maria, shared};
  s.rules = {
      {1, engine::OnActiveInfo{"interests"}, {engine::FeedbackKind::Content, "{device}", "ad: {value}"}},
      {2, engine::OnActiveInfo{"interests"}, {engine::FeedbackKind::Navigation, "{device}", "next stand: {value}"}},
  };
  s.learn_steps = {{sec(1280), engine::LearnerKind::InterestProfile}};
  s.interest = InterestLearning{{"robotics", "cloud", "security"},
                                "hall",
                                analytics::kDefaultDwellThresholdMicro,
                                {{"robotics", "security"}, {"cloud", "security"}, {"security", "robotics"}}};
  s.expected_label = taxonomy::builtin_label("optimized-advertisement");
  return s;
}

// Ten shoppers wander a four-zone mall; the environment only counts.
inline ScenarioScript people_flow_script() {
  auto s = wandering_population("people-flow", 10, {"entrance", "food_court", "fashion", "electronics"},
                                detail::sec(3600), 0x5eed'f10e);
  s.analytics_steps = {{s.duration_micro}};
  s.expected_label = taxonomy::builtin_label("people-flow");
  return s;
}

// Katrin switches on the entrance light every morning. The learner runs at
// noon; after the fifth morning it knows the habit and morning six is
// handled by the building.
inline ScenarioScript smart_buildings_script() {
  using detail::kDay;
  using detail::sec;
  ScenarioScript s;
  s.name = "smart-buildings";
  s.sensors = detail::one_sensor_per_zone({"entrance", "office"});
  s.duration_micro = sec(5 * kDay + 18 * 3600);
  Agent katrin;
  katrin.agent_id = "katrin";
  katrin.mac = detail::agent_mac(1);
  katrin.probe_interval_micro = sec(30);
  for (std::int64_t day = 0; day < 6; ++day) {
    const std::int64_t base = day * kDay;
    katrin.itinerary.push_back({sec(base + 8 * 3600), "entrance"});
    katrin.itinerary.push_back({sec(base + 8 * 3600 + 600), "office"});
    katrin.itinerary.push_back({sec(base + 17 * 3600), std::nullopt});
    katrin.manual_actions.push_back({sec(base + 8 * 3600 + 90), "light_entrance", "on"});
    katrin.manual_actions.push_back({sec(base + 17 * 3600), "light_entrance", "off"});
    s.learn_steps.push_back({sec(base + 12 * 3600), engine::LearnerKind::TriggerRules});
  }
  s.agents = {katrin};
  s.expected_label = taxonomy::builtin_label("smart-buildings");
  return s;
}

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"my-seat", "free-seat", "optimized-advertisement", "people-flow",
                                              "smart-buildings"};
  return names;
}

inline ScenarioScript builtin_script(std::string_view name) {
  if (name == "my-seat") return my_seat_script();
  if (name == "free-seat") return free_seat_script();
  if (name == "optimized-advertisement") return optimized_advertisement_script();
  if (name == "people-flow") return people_flow_script();
  if (name == "smart-buildings") return smart_buildings_script();
  throw SimError(SimErrc::UnknownScenario, std::string(name));
}

}  // namespace wearsense::sim
