// wearsense: capture parsing, scenario simulation, analytics and taxonomy
// classification from the command line.
//
// Exit status: 0 success, 1 input or parse error, 2 invalid arguments,
// 3 run-scenario classification mismatch.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wearsense/wearsense.hpp"

namespace fs = std::filesystem;
using namespace wearsense;

namespace {

enum Exit { kOk = 0, kInputError = 1, kBadArgs = 2, kMismatch = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw io::FormatError("cannot open " + p.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& p, const std::string& contents) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw io::FormatError("cannot write " + p.string());
  out << contents;
}

void write_file(const fs::path& p, const Bytes& contents) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw io::FormatError("cannot write " + p.string());
  out.write(reinterpret_cast<const char*>(contents.data()), static_cast<std::streamsize>(contents.size()));
}

template <typename F>
auto with_file(const fs::path& p, F&& f) {
  std::ifstream in(p);
  if (!in) throw io::FormatError("cannot open " + p.string());
  return f(in);
}

// ---------------------------------------------------------------------------

struct ParseArgs {
  std::string in, sensors, sensor_id, salt, out;
  bool hash_ids = false;
};

int cmd_parse(const ParseArgs& a) {
  if (a.hash_ids && a.salt.empty()) throw UsageError("--hash-ids requires --salt");
  IdentityPolicy policy;
  if (a.hash_ids) {
    auto salt = decode_hex(a.salt);
    if (!salt) throw UsageError("--salt must be hex");
    policy = IdentityPolicy::hashed(std::move(*salt));
  }
  const SensorMap sensors = with_file(a.sensors, [](std::istream& in) { return io::read_sensor_map(in); });
  if (!sensors.contains(a.sensor_id)) throw UsageError("sensor " + a.sensor_id + " is not in the sensor map");

  const Bytes data = read_file(a.in);
  const auto capture = parse_pcap(data);
  if (!capture.ok()) {
    std::error_code ec;
    fs::remove(a.out, ec);
    std::cerr << "error: " << to_string(*capture.error) << " after " << capture.records.size() << " record(s) in "
              << a.in << "\n";
    return kInputError;
  }

  IngestStats stats;
  std::vector<Sighting> sightings;
  for (const auto& rec : capture.records)
    if (auto s = ingest(rec, sensors, a.sensor_id, policy, stats)) sightings.push_back(std::move(*s));

  std::ostringstream body;
  io::write_sightings(body, sightings);
  try {
    write_file(a.out, body.str());
  } catch (...) {
    std::error_code ec;
    fs::remove(a.out, ec);
    throw;
  }
  std::cout << "frames=" << stats.frames << " sightings=" << stats.sightings << " dropped=" << stats.dropped << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimArgs {
  std::string scenario;
  std::uint64_t seed = 1;
  std::string out;
  double drop_rate = 0.0;
  std::string expect;
};

sim::ScenarioScript load_script(const std::string& name) {
  try {
    return sim::builtin_script(name);
  } catch (const sim::SimError&) {
    throw UsageError("unknown scenario '" + name + "'");
  }
}

int cmd_simulate(const SimArgs& a) {
  const auto script = load_script(a.scenario);
  sim::SimConfig config;
  config.drop_rate = a.drop_rate;
  const auto result = sim::run(config, script, a.seed);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  for (const auto& [sensor, bytes] : result.pcaps) write_file(dir / ("capture-" + sensor + ".pcap"), bytes);
  {
    std::ostringstream s;
    io::write_sensor_map(s, script.sensors);
    write_file(dir / "sensors.jsonl", s.str());
  }
  {
    std::ostringstream s;
    io::write_sightings(s, result.sightings);
    write_file(dir / "sightings.jsonl", s.str());
  }
  write_file(dir / "ground_truth.json", io::to_json(result.truth).dump(2) + "\n");
  {
    std::ostringstream s;
    io::write_trace(s, result.trace);
    write_file(dir / "trace.jsonl", s.str());
  }
  {
    std::ostringstream s;
    io::write_actions(s, result.trace.actions);
    write_file(dir / "actions.jsonl", s.str());
  }
  write_file(dir / "rules.json", io::rules_to_json(result.final_rules).dump(2) + "\n");

  io::Json summary{{"scenario", script.name},
                   {"seed", a.seed},
                   {"drop_rate", a.drop_rate},
                   {"label", result.label},
                   {"expected_label", script.expected_label},
                   {"frames", result.stats.frames},
                   {"sightings", result.sightings.size()},
                   {"sessions", result.sessions.size()},
                   {"actions", result.trace.actions.size()},
                   {"rules", result.final_rules.size()}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  std::cout << result.label << "\n";
  return kOk;
}

int cmd_run_scenario(const SimArgs& a) {
  auto script = load_script(a.scenario);
  if (!a.expect.empty()) script.expected_label = a.expect;
  sim::SimConfig config;
  config.drop_rate = a.drop_rate;
  const auto result = sim::run(config, script, a.seed);
  std::cout << "expected: " << script.expected_label << "\n";
  std::cout << "actual:   " << result.label << "\n";
  if (result.label != script.expected_label) {
    std::cout << "MISMATCH\n";
    return kMismatch;
  }
  std::cout << "MATCH\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string in, report, zone, sensors, format = "text", booths, device;
  std::int64_t bucket_s = 60;
  std::optional<double> from_s, to_s;
  std::int64_t gap_s = kDefaultGapMicro / kMicrosPerSecond;
  std::int64_t epoch_s = kDefaultEpochMicro / kMicrosPerSecond;
  std::int64_t threshold_s = analytics::kDefaultDwellThresholdMicro / kMicrosPerSecond;
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::int64_t seconds_to_micro(double s) { return static_cast<std::int64_t>(std::llround(s * 1e6)); }

int cmd_analyze(const AnalyzeArgs& a) {
  if (a.format != "text" && a.format != "machine") throw UsageError("--format must be text or machine");
  if (a.report == "occupancy" && a.zone.empty()) throw UsageError("--report occupancy requires --zone");
  if (a.report == "unique" && (!a.from_s || !a.to_s)) throw UsageError("--report unique requires --from and --to");
  if ((a.from_s.has_value()) != (a.to_s.has_value())) throw UsageError("--from and --to go together");
  if (a.from_s && *a.from_s >= *a.to_s) throw UsageError("--from must be before --to");
  if (a.bucket_s <= 0 || a.gap_s <= 0 || a.epoch_s <= 0 || a.threshold_s <= 0)
    throw UsageError("durations must be positive");

  const auto sightings = with_file(a.in, [](std::istream& in) { return io::read_sightings(in); });
  SensorMap sensors;
  if (!a.sensors.empty()) {
    sensors = with_file(a.sensors, [](std::istream& in) { return io::read_sensor_map(in); });
  } else {
    std::set<std::string> ids;
    for (const auto& s : sightings) ids.insert(s.sensor_id);
    for (const auto& id : ids) sensors.add(id, id);
  }
  for (const auto& s : sightings)
    if (!sensors.contains(s.sensor_id)) throw io::FormatError("sighting from unmapped sensor " + s.sensor_id);

  const auto zoned = assign_zones(sightings, sensors, a.epoch_s * kMicrosPerSecond);
  const auto sessions = build_sessions(zoned, a.gap_s * kMicrosPerSecond);
  const bool machine = a.format == "machine";

  if (a.report == "unique") {
    const auto n = analytics::unique_devices(sightings, seconds_to_micro(*a.from_s), seconds_to_micro(*a.to_s));
    if (machine)
      std::cout << io::Json{{"report", "unique"}, {"from_micro", seconds_to_micro(*a.from_s)},
                            {"to_micro", seconds_to_micro(*a.to_s)}, {"count", n}}
                       .dump()
                << "\n";
    else
      std::cout << n << "\n";
  } else if (a.report == "occupancy") {
    const std::int64_t bucket = a.bucket_s * kMicrosPerSecond;
    const auto series = a.from_s ? analytics::occupancy(sessions, a.zone, bucket, seconds_to_micro(*a.from_s),
                                                        seconds_to_micro(*a.to_s))
                                 : analytics::occupancy(sessions, a.zone, bucket);
    if (!machine) std::cout << "zone\tbucket_start_micro\tdevices\n";
    for (const auto& b : series.counts) {
      if (machine)
        std::cout << io::Json{{"report", "occupancy"}, {"zone", a.zone}, {"bucket_start_micro", b.bucket_start},
                              {"bucket_micro", bucket}, {"devices", b.device_count}}
                         .dump()
                  << "\n";
      else
        std::cout << a.zone << "\t" << b.bucket_start << "\t" << b.device_count << "\n";
    }
  } else if (a.report == "dwell") {
    std::vector<ZoneId> zones = a.zone.empty() ? sensors.zones() : std::vector<ZoneId>{a.zone};
    if (!machine) std::cout << "zone\tcount\ttotal_micro\tmean_micro\tmax_micro\n";
    for (const auto& z : zones) {
      const auto d = analytics::dwell_stats(sessions, z);
      if (machine) {
        io::Json j{{"report", "dwell"}, {"zone", z}, {"count", d.count}, {"total_micro", d.total_micro}};
        j["mean_micro"] = d.mean_micro ? io::Json(*d.mean_micro) : io::Json(nullptr);
        j["max_micro"] = d.max_micro ? io::Json(*d.max_micro) : io::Json(nullptr);
        std::cout << j.dump() << "\n";
      } else {
        std::cout << z << "\t" << d.count << "\t" << d.total_micro << "\t";
        if (d.mean_micro) std::cout << std::fixed << std::setprecision(1) << *d.mean_micro; else std::cout << "-";
        std::cout << "\t";
        if (d.max_micro) std::cout << *d.max_micro; else std::cout << "-";
        std::cout << "\n";
      }
    }
  } else if (a.report == "flow") {
    const auto m = analytics::flow_matrix(sessions);
    if (!machine) std::cout << "from\tto\tcount\n";
    for (std::size_t i = 0; i < m.zones.size(); ++i)
      for (std::size_t j = 0; j < m.zones.size(); ++j) {
        if (i == j) continue;
        if (machine)
          std::cout << io::Json{{"report", "flow"}, {"from", m.zones[i]}, {"to", m.zones[j]}, {"count", m.counts[i][j]}}
                           .dump()
                    << "\n";
        else
          std::cout << m.zones[i] << "\t" << m.zones[j] << "\t" << m.counts[i][j] << "\n";
      }
  } else if (a.report == "interest") {
    const auto booth_list = a.booths.empty() ? sensors.zones() : split_csv(a.booths);
    const std::set<ZoneId> booths(booth_list.begin(), booth_list.end());
    std::set<DeviceId> devices;
    for (const auto& s : sessions) devices.insert(s.device_id);
    if (!a.device.empty()) devices = {DeviceId{a.device}};
    if (!machine) std::cout << "device\tinterests\n";
    for (const auto& d : devices) {
      const auto p = analytics::interest_profile(d, sessions, booths, a.threshold_s * kMicrosPerSecond);
      if (machine) {
        std::cout << io::Json{{"report", "interest"}, {"device_id", d.str()}, {"interests", p.interests}}.dump() << "\n";
      } else {
        std::cout << d.str() << "\t";
        bool first = true;
        for (const auto& z : p.interests) {
          std::cout << (first ? "" : ",") << z;
          first = false;
        }
        std::cout << "\n";
      }
    }
  } else {
    throw UsageError("unknown report '" + a.report + "'");
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_classify(const std::string& spec_path) {
  const auto spec = with_file(spec_path, [](std::istream& in) { return io::read_spec(in); });
  const auto violations = taxonomy::validate(spec);
  if (!violations.empty()) {
    for (const auto& v : violations)
      std::cout << "violation " << taxonomy::to_string(v.rule) << " phase " << v.phase_index << ": " << v.message
                << "\n";
    return kInputError;
  }
  std::cout << taxonomy::render_label(taxonomy::classify(spec)) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Passive wearable presence: capture parsing, scenario simulation and analytics"};
  app.require_subcommand(1);

  ParseArgs parse_args;
  auto* parse = app.add_subcommand("parse", "Decode a pcap capture into sightings");
  parse->add_option("--in", parse_args.in, "pcap capture")->required()->check(CLI::ExistingFile);
  parse->add_option("--sensors", parse_args.sensors, "sensor map (JSON lines)")->required()->check(CLI::ExistingFile);
  parse->add_option("--sensor-id", parse_args.sensor_id, "sensor that recorded the capture")->required();
  parse->add_flag("--hash-ids", parse_args.hash_ids, "replace device identities with salted tokens");
  parse->add_option("--salt", parse_args.salt, "hex salt for --hash-ids");
  parse->add_option("--out", parse_args.out, "sightings output (JSON lines)")->required();

  SimArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run a built-in scenario and write all artifacts");
  simulate->add_option("--scenario", sim_args.scenario, "scenario name")->required();
  simulate->add_option("--seed", sim_args.seed, "random seed");
  simulate->add_option("--out", sim_args.out, "output directory")->required();
  simulate->add_option("--drop-rate", sim_args.drop_rate, "probability a probe is lost")->check(CLI::Range(0.0, 1.0));

  SimArgs run_args;
  auto* run_scenario = app.add_subcommand("run-scenario", "Simulate and check the expected classification");
  run_scenario->add_option("--scenario", run_args.scenario, "scenario name")->required();
  run_scenario->add_option("--seed", run_args.seed, "random seed");
  run_scenario->add_option("--drop-rate", run_args.drop_rate, "probability a probe is lost")->check(CLI::Range(0.0, 1.0));
  run_scenario->add_option("--expect", run_args.expect, "override the expected label");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Compute an observation report from sightings");
  analyze->add_option("--in", an.in, "sightings (JSON lines)")->required()->check(CLI::ExistingFile);
  analyze->add_option("--report", an.report, "occupancy|dwell|flow|unique|interest")
      ->required()
      ->check(CLI::IsMember({"occupancy", "dwell", "flow", "unique", "interest"}));
  analyze->add_option("--sensors", an.sensors, "sensor map; defaults to one zone per sensor")->check(CLI::ExistingFile);
  analyze->add_option("--zone", an.zone, "zone for occupancy / dwell");
  analyze->add_option("--bucket", an.bucket_s, "occupancy bucket in seconds");
  analyze->add_option("--from", an.from_s, "window start in seconds");
  analyze->add_option("--to", an.to_s, "window end in seconds (exclusive)");
  analyze->add_option("--format", an.format, "text or machine");
  analyze->add_option("--gap", an.gap_s, "session gap in seconds");
  analyze->add_option("--epoch", an.epoch_s, "zone-assignment epoch in seconds");
  analyze->add_option("--booths", an.booths, "comma-separated booth zones for interest");
  analyze->add_option("--threshold", an.threshold_s, "interest dwell threshold in seconds");
  analyze->add_option("--device", an.device, "restrict interest to one device");

  std::string spec_path;
  auto* classify = app.add_subcommand("classify", "Validate and classify a scenario spec");
  classify->add_option("--spec", spec_path, "scenario spec (JSON)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadArgs;
  }

  try {
    if (*parse) return cmd_parse(parse_args);
    if (*simulate) return cmd_simulate(sim_args);
    if (*run_scenario) return cmd_run_scenario(run_args);
    if (*analyze) return cmd_analyze(an);
    if (*classify) return cmd_classify(spec_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadArgs;
  } catch (const sim::SimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadArgs;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kBadArgs;
}
