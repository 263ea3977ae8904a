// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
//
// Usage: acceptance <path-to-wearsense-cli>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "wearsense/wearsense.hpp"

using namespace wearsense;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::int64_t S = kMicrosPerSecond;

// Tolerances and sizes, fixed here so a run cannot drift from them.
constexpr double kScenarioSecondsMax = 5.0;
constexpr int kCodecCases = 10'000;
constexpr std::size_t kFuzzMaxLen = 512;
constexpr double kFuzzMillisMax = 10.0;
constexpr int kOracleInstances = 1000;
constexpr std::size_t kOracleMaxSightings = 50;
constexpr std::size_t kOracleMaxEvents = 100;
constexpr std::int64_t kMinGap = 15 * S;
constexpr std::int64_t kMaxGap = 60 * S;
constexpr std::int64_t kLearnWindow = 120 * S;
constexpr std::size_t kReidAgents = 20;
constexpr double kReidDropRate = 0.2;
constexpr std::uint64_t kReidRuns = 10;
constexpr std::size_t kCapacityDevices = 530'000;
constexpr std::size_t kCapacitySightingsPerDevice = 2;
constexpr double kCapacityMinRate = 50'000.0;
constexpr double kCapacitySecondsMax = 60.0;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "  " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Captured {
  int status = -1;
  std::string out;
};

Captured run_command(const std::string& cmd) {
  Captured c;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return c;
  char buf[512];
  while (std::fgets(buf, sizeof buf, p)) c.out += buf;
  const int raw = pclose(p);
  c.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return c;
}

std::string line_after(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(prefix, 0) == 0) {
      auto v = line.substr(prefix.size());
      v.erase(0, v.find_first_not_of(' '));
      return v;
    }
  return {};
}

// ---------------------------------------------------------------------------

void taxonomy_reproduction(const std::string& cli) {
  // Expected labels of the five built-in scenarios, pinned independently of the library.
  const std::vector<std::pair<std::string, std::string>> expected{
      {"my-seat", "tag:active; interaction:direct; feedback:navigation"},
      {"free-seat", "tag:passive; interaction:direct; feedback:navigation"},
      {"optimized-advertisement",
       "tag:passive/active; interaction:indirect/direct; feedback:navigation/content"},
      {"people-flow", "tag:passive; interaction:none; feedback:observation"},
      {"smart-buildings", "tag:passive; interaction:indirect/direct; feedback:observation/trigger"},
  };
  bool ok = true;
  double slowest = 0;
  std::string detail;
  for (const auto& [name, label] : expected) {
    const auto t0 = Clock::now();
    const auto r = run_command("'" + cli + "' run-scenario --scenario " + name + " --seed 1");
    const double secs = seconds_since(t0);
    slowest = std::max(slowest, secs);
    const auto actual = line_after(r.out, "actual:");
    if (r.status != 0 || actual != label || secs >= kScenarioSecondsMax) {
      ok = false;
      detail += " " + name + "[exit=" + std::to_string(r.status) + " label=\"" + actual + "\"]";
    }
  }
  std::ostringstream d;
  d << "5 scenarios, slowest " << slowest << " s (limit " << kScenarioSecondsMax << " s)" << detail;
  report(ok, "taxonomy-reproduction", d.str());
}

void codec_round_trip() {
  std::mt19937_64 rng(20240501);
  auto byte = [&] { return static_cast<std::uint8_t>(rng() & 0xff); };
  int mismatches = 0;
  for (int i = 0; i < kCodecCases; ++i) {
    ProbeRequestFrame f;
    for (auto* m : {&f.sa, &f.da, &f.bssid})
      for (auto& o : m->octets) o = byte();
    f.seq = static_cast<std::uint16_t>(rng() % 4096);
    f.frag = static_cast<std::uint8_t>(rng() % 16);
    f.ssid.resize(rng() % (kMaxSsidLen + 1));
    for (auto& c : f.ssid) c = static_cast<char>(byte());
    f.supported_rates.resize(rng() % 12);
    for (auto& r : f.supported_rates) r = byte();
    if (!(parse_probe_request(serialize_probe_request(f)) == f)) ++mismatches;
  }
  report(mismatches == 0, "codec-round-trip",
         std::to_string(kCodecCases) + " probe frames, " + std::to_string(mismatches) + " mismatches");
}

void codec_fuzz() {
  std::mt19937_64 rng(77);
  int undeclared = 0;
  double worst_ms = 0;
  auto timed = [&](auto&& fn) {
    const auto t0 = Clock::now();
    try {
      fn();
    } catch (const CodecError&) {
    } catch (...) {
      ++undeclared;
    }
    worst_ms = std::max(worst_ms, seconds_since(t0) * 1000.0);
  };
  for (int i = 0; i < kCodecCases; ++i) {
    Bytes b(rng() % (kFuzzMaxLen + 1));
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    // Half of the pcap and radiotap inputs carry a valid leading header so
    // the parsers get past their first check.
    Bytes pcap_in = b;
    if (i % 2 == 0) {
      PcapWriter w(LinkType::Ieee80211Radiotap);
      pcap_in = w.bytes();
      pcap_in.insert(pcap_in.end(), b.begin(), b.end());
    }
    Bytes rt_in = b;
    if (i % 2 == 0 && !rt_in.empty()) rt_in[0] = 0;
    timed([&] { (void)parse_pcap(pcap_in); });
    timed([&] { (void)parse_radiotap(rt_in); });
    timed([&] { (void)parse_probe_request(b); });
    timed([&] { (void)parse_ble_advertisement(b); });
  }
  std::ostringstream d;
  d << kCodecCases << " inputs x 4 parsers, " << undeclared << " undeclared failures, slowest " << worst_ms
    << " ms (limit " << kFuzzMillisMax << " ms)";
  report(undeclared == 0 && worst_ms < kFuzzMillisMax, "codec-fuzz", d.str());
}

void oracle_equivalence() {
  std::mt19937_64 rng(4242);
  std::map<std::string, int> bad{{"sessionize", 0},  {"occupancy", 0}, {"dwell_stats", 0},         {"flow_matrix", 0},
                                 {"unique_devices", 0}, {"interest_profile", 0}, {"learn_trigger_rules", 0}};
  for (int i = 0; i < kOracleInstances; ++i) {
    {
      const auto ts = oracle::random_sorted_timestamps(rng, kOracleMaxSightings);
      const std::int64_t gap = 1 + static_cast<std::int64_t>(rng() % 300);
      const auto got = sessionize(DeviceId{"d"}, "z", ts, gap);
      const auto want = oracle::sessions(ts, gap);
      bool same = got.size() == want.size();
      for (std::size_t j = 0; same && j < got.size(); ++j)
        same = got[j].start_micro == want[j].first && got[j].end_micro == want[j].second;
      bad["sessionize"] += !same;
    }
    const auto sessions = oracle::random_sessions(rng, kOracleMaxSightings);
    {
      const std::int64_t bucket = 1 + static_cast<std::int64_t>(rng() % 200);
      const std::int64_t from = static_cast<std::int64_t>(rng() % 500);
      const std::int64_t to = from + static_cast<std::int64_t>(rng() % 3000);
      bad["occupancy"] +=
          analytics::occupancy(sessions, "a", bucket, from, to).counts != oracle::occupancy(sessions, "a", bucket, from, to);
    }
    bad["dwell_stats"] += !(analytics::dwell_stats(sessions, "b") == oracle::dwell(sessions, "b"));
    bad["flow_matrix"] += !(analytics::flow_matrix(sessions) == oracle::flow(sessions));
    {
      const auto s = oracle::random_sightings(rng, kOracleMaxSightings);
      const std::int64_t t0 = static_cast<std::int64_t>(rng() % 100);
      const std::int64_t t1 = t0 + 1 + static_cast<std::int64_t>(rng() % 50);
      bad["unique_devices"] += analytics::unique_devices(s, t0, t1) != oracle::unique(s, t0, t1);
    }
    {
      const std::set<ZoneId> booths{"a", "c"};
      const std::int64_t threshold = 1 + static_cast<std::int64_t>(rng() % 400);
      const DeviceId dev{"d" + std::to_string(rng() % 4)};
      bad["interest_profile"] += analytics::interest_profile(dev, sessions, booths, threshold).interests !=
                                 oracle::interest(dev, sessions, booths, threshold);
    }
    {
      const auto log = oracle::random_log(rng, kOracleMaxEvents);
      const std::size_t k = 1 + rng() % 5;
      const std::int64_t window = (30 + static_cast<std::int64_t>(rng() % 120)) * S;
      const bool generalize = rng() % 4 == 0;
      bad["learn_trigger_rules"] += !oracle::rules_match(engine::learn_trigger_rules(log, {k, window, generalize}),
                                                         oracle::trigger_patterns(log, k, window, generalize));
    }
  }
  bool ok = true;
  std::string detail = std::to_string(kOracleInstances) + " instances each;";
  for (const auto& [name, n] : bad) {
    ok = ok && n == 0;
    detail += " " + name + "=" + std::to_string(n);
  }
  report(ok, "oracle-equivalence", detail + " mismatches");
}

// A wandering population observed by the analytics side at the end of the run.
sim::ScenarioScript observed_population(std::size_t agents, std::vector<ZoneId> zones, std::uint64_t itinerary_seed) {
  auto script = sim::wandering_population("population", agents, std::move(zones), 3600 * S, itinerary_seed);
  script.analytics_steps.push_back({script.duration_micro});
  return script;
}

void probe_cadence() {
  std::size_t gaps = 0, out_of_range = 0, uneven_agents = 0;
  auto check = [&](const sim::ScenarioScript& script, std::uint64_t seed) {
    const auto r = sim::run({}, script, seed);
    for (const auto& [agent, times] : r.emissions) {
      std::set<std::int64_t> distinct;
      for (std::size_t i = 1; i < times.size(); ++i) {
        const std::int64_t g = times[i] - times[i - 1];
        ++gaps;
        out_of_range += g < kMinGap || g > kMaxGap;
        distinct.insert(g);
      }
      uneven_agents += distinct.size() > 1;
    }
  };
  for (const auto& name : sim::builtin_names())
    for (std::uint64_t seed = 1; seed <= 5; ++seed) check(sim::builtin_script(name), seed);
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    check(observed_population(20, {"a", "b", "c"}, seed), seed);
  report(gaps > 0 && out_of_range == 0 && uneven_agents == 0, "probe-cadence",
         std::to_string(gaps) + " gaps at drop 0, " + std::to_string(out_of_range) + " outside [15 s, 60 s], " +
             std::to_string(uneven_agents) + " agents with more than one gap value");
}

void learning_transition() {
  const auto r = sim::run({}, sim::builtin_script("smart-buildings"), 1);
  const auto& passes = r.trace.learning;
  std::size_t after4 = 0, after5 = 0;
  for (std::size_t i = 0; i < passes.size(); ++i) {
    if (i < 4) after4 += passes[i].rules_added;
    if (i < 5) after5 += passes[i].rules_added;
  }
  const std::int64_t morning6 = 5 * 86'400 * S;
  const std::int64_t noon6 = morning6 + 12 * 3600 * S;
  std::optional<std::int64_t> arrival6;
  std::size_t manual6 = 0;
  for (const auto& e : r.trace.log) {
    if (e.ts_micro < morning6 || e.ts_micro >= noon6) continue;
    if (std::holds_alternative<engine::ManualActuation>(e.body)) ++manual6;
    if (const auto* a = std::get_if<engine::Arrival>(&e.body); a && !arrival6) arrival6 = e.ts_micro;
  }
  bool trigger = false;
  for (const auto& a : r.trace.actions)
    if (arrival6 && a.action.kind == taxonomy::FeedbackKind::Trigger && a.ts_micro >= *arrival6 &&
        a.ts_micro - *arrival6 <= kLearnWindow)
      trigger = true;
  const bool ok = passes.size() >= 5 && after4 == 0 && after5 == 1 && arrival6 && trigger && manual6 == 0;
  report(ok, "learning-transition",
         "rules after morning 4=" + std::to_string(after4) + ", after morning 5=" + std::to_string(after5) +
             ", morning 6 trigger within 120 s=" + (trigger ? "yes" : "no") +
             ", morning 6 manual actuations=" + std::to_string(manual6));
}

struct ReidOutcome {
  bool ok = true;
  std::size_t device_ids = 0;
  std::size_t sequence_mismatches = 0;
  std::size_t boundary_misses = 0;
  std::size_t boundaries = 0;
};

ReidOutcome reidentify(std::uint64_t seed) {
  const auto script = observed_population(kReidAgents, {"z1", "z2", "z3", "z4"}, 1000 + seed);
  sim::SimConfig cfg;
  cfg.drop_rate = kReidDropRate;
  const auto r = sim::run(cfg, script, seed);
  ReidOutcome out;
  std::set<DeviceId> ids;
  for (const auto& s : r.sightings) ids.insert(s.device_id);
  out.device_ids = ids.size();
  for (const auto& agent : script.agents) {
    const DeviceId id{agent.mac.to_string()};
    const std::int64_t tol = std::min(r.truth.probe_intervals.at(agent.agent_id), kMaxGap);
    std::vector<PresenceSession> mine;
    for (const auto& s : r.sessions)
      if (s.device_id == id) mine.push_back(s);
    std::sort(mine.begin(), mine.end(), session_less);
    std::vector<sim::TruthInterval> truth;
    for (const auto& t : r.truth.intervals)
      if (t.agent_id == agent.agent_id) truth.push_back(t);
    std::sort(truth.begin(), truth.end(),
              [](const auto& a, const auto& b) { return a.start_micro < b.start_micro; });
    if (mine.size() != truth.size()) {
      ++out.sequence_mismatches;
      continue;
    }
    bool seq_ok = true;
    for (std::size_t i = 0; i < mine.size(); ++i) {
      out.boundaries += 2;
      if (mine[i].zone_id != truth[i].zone) seq_ok = false;
      if (std::llabs(mine[i].start_micro - truth[i].start_micro) > tol ||
          std::llabs(mine[i].end_micro - truth[i].end_micro) > tol)
        ++out.boundary_misses;
    }
    out.sequence_mismatches += !seq_ok;
  }
  out.ok = out.device_ids == kReidAgents && out.sequence_mismatches == 0 && out.boundary_misses == 0;
  return out;
}

void reidentification() {
  std::uint64_t passed = 0;
  std::size_t seq_bad = 0, boundary_bad = 0, boundaries = 0, id_bad = 0;
  for (std::uint64_t seed = 1; seed <= kReidRuns; ++seed) {
    const auto o = reidentify(seed);
    passed += o.ok;
    seq_bad += o.sequence_mismatches;
    boundary_bad += o.boundary_misses;
    boundaries += o.boundaries;
    id_bad += o.device_ids != kReidAgents;
  }
  report(passed == kReidRuns, "re-identification",
         std::to_string(passed) + "/" + std::to_string(kReidRuns) + " runs exact (20 agents, 60 min, drop 0.2); " +
             "runs with wrong id count=" + std::to_string(id_bad) + ", agents with wrong zone sequence=" +
             std::to_string(seq_bad) + ", boundaries off by more than one interval=" + std::to_string(boundary_bad) +
             " of " + std::to_string(boundaries));
}

void capacity() {
  const std::size_t total = kCapacityDevices * kCapacitySightingsPerDevice;
  // Two passes over the population spread evenly over one hour.
  const std::int64_t step = 3600 * S / static_cast<std::int64_t>(total);
  PcapWriter writer(LinkType::Ieee80211Radiotap);
  const Bytes rt = make_radiotap_header(-55);
  for (std::size_t i = 0; i < total; ++i) {
    const auto dev = static_cast<std::uint32_t>(i % kCapacityDevices);
    ProbeRequestFrame f;
    f.sa = MacAddress{{0x02, 0x5e, static_cast<std::uint8_t>(dev >> 24), static_cast<std::uint8_t>(dev >> 16),
                       static_cast<std::uint8_t>(dev >> 8), static_cast<std::uint8_t>(dev)}};
    f.seq = static_cast<std::uint16_t>(i % 4096);
    Bytes payload = rt;
    const Bytes body = serialize_probe_request(f);
    payload.insert(payload.end(), body.begin(), body.end());
    writer.append(static_cast<std::int64_t>(i) * step, payload);
  }
  const Bytes pcap = std::move(writer).bytes();

  TrackerConfig cfg;
  cfg.identity = IdentityPolicy::hashed({0x5a, 0x17, 0xc3, 0x09});
  cfg.retain_sightings = false;
  PresenceTracker tracker(SensorMap{{"s1", "hall"}}, cfg);

  const auto t0 = Clock::now();
  const auto parsed = parse_pcap(pcap);
  for (const auto& rec : parsed.records) tracker.ingest(rec, "s1");
  tracker.flush();
  const double secs = seconds_since(t0);

  const auto stats = tracker.stats();
  const double rate = static_cast<double>(stats.sightings) / secs;
  const auto ids = tracker.device_count();
  const std::size_t collisions = kCapacityDevices - std::min(ids, kCapacityDevices);
  std::ostringstream d;
  d << stats.sightings << " sightings of " << kCapacityDevices << " identities in " << secs << " s ("
    << static_cast<std::int64_t>(rate) << "/s, need " << kCapacityMinRate << "/s), " << ids
    << " hashed ids, " << collisions << " collisions";
  report(parsed.ok() && static_cast<std::size_t>(stats.sightings) == total && ids == kCapacityDevices &&
             rate >= kCapacityMinRate && secs < kCapacitySecondsMax,
         "capacity", d.str());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <path-to-wearsense-cli>\n";
    return 2;
  }
  taxonomy_reproduction(argv[1]);
  codec_round_trip();
  codec_fuzz();
  oracle_equivalence();
  probe_cadence();
  learning_transition();
  reidentification();
  capacity();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
