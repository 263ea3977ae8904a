#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "wearsense/frame_codec.hpp"
#include "wearsense/identity.hpp"

namespace wearsense {

using ZoneId = std::string;
using Attrs = std::map<std::string, std::string>;

inline constexpr std::int64_t kMicrosPerSecond = 1'000'000;
inline constexpr std::int64_t kDefaultGapMicro = 300 * kMicrosPerSecond;
inline constexpr std::int64_t kDefaultEpochMicro = 10 * kMicrosPerSecond;

enum class TrackerErrc { UnknownSensor, UnsortedInput, UnknownDevice, OutOfOrder, InvalidArgument };

inline const char* to_string(TrackerErrc e) {
  switch (e) {
    case TrackerErrc::UnknownSensor: return "UnknownSensor";
    case TrackerErrc::UnsortedInput: return "UnsortedInput";
    case TrackerErrc::UnknownDevice: return "UnknownDevice";
    case TrackerErrc::OutOfOrder: return "OutOfOrder";
    case TrackerErrc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class TrackerError : public std::runtime_error {
 public:
  TrackerError(TrackerErrc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
  TrackerErrc code() const noexcept { return code_; }

 private:
  TrackerErrc code_;
};

class SensorMap {
 public:
  SensorMap() = default;
  explicit SensorMap(std::vector<std::pair<std::string, ZoneId>> pairs) {
    for (auto& [sensor, zone] : pairs) add(std::move(sensor), std::move(zone));
  }
  SensorMap(std::initializer_list<std::pair<std::string, ZoneId>> pairs) {
    for (const auto& [sensor, zone] : pairs) add(sensor, zone);
  }

  void add(std::string sensor_id, ZoneId zone_id) {
    auto [it, inserted] = zones_.emplace(std::move(sensor_id), std::move(zone_id));
    if (!inserted) throw TrackerError(TrackerErrc::InvalidArgument, "sensor " + it->first + " mapped twice");
  }

  bool contains(std::string_view sensor_id) const { return zones_.find(std::string(sensor_id)) != zones_.end(); }

  const ZoneId& zone_of(std::string_view sensor_id) const {
    auto it = zones_.find(std::string(sensor_id));
    if (it == zones_.end()) throw TrackerError(TrackerErrc::UnknownSensor, std::string(sensor_id));
    return it->second;
  }

  // Zones in sorted order, each listed once.
  std::vector<ZoneId> zones() const {
    std::set<ZoneId> unique;
    for (const auto& [_, z] : zones_) unique.insert(z);
    return {unique.begin(), unique.end()};
  }

  const std::map<std::string, ZoneId>& entries() const { return zones_; }
  bool empty() const { return zones_.empty(); }
  std::size_t size() const { return zones_.size(); }

 private:
  std::map<std::string, ZoneId> zones_;
};

enum class SightingKind { WifiProbe, BleAdv, ActiveAnnounce };

inline const char* to_string(SightingKind k) {
  switch (k) {
    case SightingKind::WifiProbe: return "wifi_probe";
    case SightingKind::BleAdv: return "ble_adv";
    case SightingKind::ActiveAnnounce: return "active_announce";
  }
  return "unknown";
}

inline std::optional<SightingKind> sighting_kind_from_string(std::string_view s) {
  if (s == "wifi_probe") return SightingKind::WifiProbe;
  if (s == "ble_adv") return SightingKind::BleAdv;
  if (s == "active_announce") return SightingKind::ActiveAnnounce;
  return std::nullopt;
}

// attrs is present exactly when kind == ActiveAnnounce.
struct Sighting {
  DeviceId device_id;
  std::string sensor_id;
  std::int64_t ts_micro = 0;
  std::optional<int> rssi_dbm;
  SightingKind kind = SightingKind::WifiProbe;
  std::optional<Attrs> attrs;

  friend bool operator==(const Sighting&, const Sighting&) = default;
};

struct ZonedSighting {
  Sighting sighting;
  ZoneId zone_id;

  friend bool operator==(const ZonedSighting&, const ZonedSighting&) = default;
};

struct PresenceSession {
  DeviceId device_id;
  ZoneId zone_id;
  std::int64_t start_micro = 0;
  std::int64_t end_micro = 0;
  std::int64_t sighting_count = 0;

  std::int64_t duration() const { return end_micro - start_micro; }
  friend bool operator==(const PresenceSession&, const PresenceSession&) = default;
};

// Canonical session order: device, start, zone.
inline bool session_less(const PresenceSession& a, const PresenceSession& b) {
  return std::tie(a.device_id, a.start_micro, a.zone_id, a.end_micro) <
         std::tie(b.device_id, b.start_micro, b.zone_id, b.end_micro);
}

struct DeviceRecord {
  DeviceId device_id;
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
  std::int64_t visit_count = 0;
  std::set<ZoneId> zones_visited;

  friend bool operator==(const DeviceRecord&, const DeviceRecord&) = default;
};

struct IngestStats {
  std::int64_t frames = 0;
  std::int64_t sightings = 0;
  std::int64_t dropped = 0;
};

// ---------------------------------------------------------------------------
// Record -> sighting
// ---------------------------------------------------------------------------

// Maps one captured frame to a sighting. Probe requests are keyed by the
// transmitter address, BLE advertisements by iBeacon identity when present
// and by AdvA otherwise. Anything else is counted as dropped.
inline std::optional<Sighting> ingest(const CaptureRecord& record, const SensorMap& sensors,
                                      std::string_view sensor_id, const IdentityPolicy& policy,
                                      IngestStats& stats) {
  if (!sensors.contains(sensor_id)) throw TrackerError(TrackerErrc::UnknownSensor, std::string(sensor_id));
  ++stats.frames;
  try {
    Sighting s;
    s.sensor_id = std::string(sensor_id);
    s.ts_micro = record.ts_micro;
    switch (record.link_type) {
      case LinkType::Ieee80211Radiotap: {
        const auto rt = parse_radiotap(record.payload);
        const auto frame = parse_probe_request(ByteView(record.payload).subspan(rt.body_offset));
        s.device_id = make_device_id(frame.sa.to_string(), policy);
        s.rssi_dbm = rt.rssi_dbm;
        s.kind = SightingKind::WifiProbe;
        break;
      }
      case LinkType::Ieee80211Bare: {
        const auto frame = parse_probe_request(record.payload);
        s.device_id = make_device_id(frame.sa.to_string(), policy);
        s.kind = SightingKind::WifiProbe;
        break;
      }
      case LinkType::BleAdv: {
        const auto adv = parse_ble_advertisement(record.payload);
        const std::string identity = adv.ibeacon ? adv.ibeacon->identity() : adv.adv_addr.to_string();
        s.device_id = make_device_id(identity, policy);
        s.kind = SightingKind::BleAdv;
        break;
      }
    }
    ++stats.sightings;
    return s;
  } catch (const CodecError&) {
    ++stats.dropped;
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Zone assignment and sessionization
// ---------------------------------------------------------------------------

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// True when `a` is stronger evidence than `b`: any rssi beats none, higher
// rssi wins, ties go to the smaller sensor id.
inline bool stronger(const Sighting& a, const Sighting& b) {
  if (a.rssi_dbm.has_value() != b.rssi_dbm.has_value()) return a.rssi_dbm.has_value();
  if (a.rssi_dbm && *a.rssi_dbm != *b.rssi_dbm) return *a.rssi_dbm > *b.rssi_dbm;
  return a.sensor_id < b.sensor_id;
}

inline bool zoned_less(const ZonedSighting& a, const ZonedSighting& b) {
  return std::tie(a.sighting.ts_micro, a.sighting.device_id, a.sighting.sensor_id, a.sighting.kind) <
         std::tie(b.sighting.ts_micro, b.sighting.device_id, b.sighting.sensor_id, b.sighting.kind);
}

}  // namespace detail

// For every (device, epoch bucket) the zone of the strongest sighting wins.
// Only sightings whose sensor lies in the winning zone are kept; output is
// ordered by (ts, device, sensor).
inline std::vector<ZonedSighting> assign_zones(std::span<const Sighting> sightings, const SensorMap& sensors,
                                               std::int64_t epoch_micro) {
  if (epoch_micro <= 0) throw TrackerError(TrackerErrc::InvalidArgument, "epoch must be positive");
  std::map<std::pair<DeviceId, std::int64_t>, const Sighting*> best;
  for (const auto& s : sightings) {
    sensors.zone_of(s.sensor_id);
    auto key = std::make_pair(s.device_id, detail::floor_div(s.ts_micro, epoch_micro));
    auto [it, inserted] = best.emplace(key, &s);
    if (!inserted && detail::stronger(s, *it->second)) it->second = &s;
  }
  std::vector<ZonedSighting> out;
  out.reserve(sightings.size());
  for (const auto& s : sightings) {
    const auto& winner = *best.at({s.device_id, detail::floor_div(s.ts_micro, epoch_micro)});
    const ZoneId& zone = sensors.zone_of(winner.sensor_id);
    if (sensors.zone_of(s.sensor_id) == zone) out.push_back({s, zone});
  }
  std::sort(out.begin(), out.end(), detail::zoned_less);
  return out;
}

// Splits one device's time-sorted sightings in one zone into sessions. A
// new session starts when the gap to the previous sighting strictly exceeds
// gap_micro.
inline std::vector<PresenceSession> sessionize(const DeviceId& device, const ZoneId& zone,
                                               std::span<const std::int64_t> timestamps,
                                               std::int64_t gap_micro) {
  if (gap_micro <= 0) throw TrackerError(TrackerErrc::InvalidArgument, "gap must be positive");
  std::vector<PresenceSession> out;
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    const std::int64_t ts = timestamps[i];
    if (i > 0 && ts < timestamps[i - 1]) throw TrackerError(TrackerErrc::UnsortedInput, "timestamps not sorted");
    if (out.empty() || ts - out.back().end_micro > gap_micro) {
      out.push_back({device, zone, ts, ts, 1});
    } else {
      out.back().end_micro = ts;
      ++out.back().sighting_count;
    }
  }
  return out;
}

// Groups zone-resolved sightings by (device, zone), sessionizes each group
// and returns all sessions in canonical order.
inline std::vector<PresenceSession> build_sessions(std::span<const ZonedSighting> zoned, std::int64_t gap_micro) {
  std::map<std::pair<DeviceId, ZoneId>, std::vector<std::int64_t>> groups;
  for (const auto& z : zoned) groups[{z.sighting.device_id, z.zone_id}].push_back(z.sighting.ts_micro);
  std::vector<PresenceSession> out;
  for (auto& [key, ts] : groups) {
    std::sort(ts.begin(), ts.end());
    auto part = sessionize(key.first, key.second, ts, gap_micro);
    out.insert(out.end(), part.begin(), part.end());
  }
  std::sort(out.begin(), out.end(), session_less);
  return out;
}

inline DeviceRecord device_summary(const DeviceId& device, std::span<const PresenceSession> sessions) {
  DeviceRecord rec;
  rec.device_id = device;
  for (const auto& s : sessions) {
    if (s.device_id != device) continue;
    if (rec.visit_count == 0) {
      rec.first_seen = s.start_micro;
      rec.last_seen = s.end_micro;
    } else {
      rec.first_seen = std::min(rec.first_seen, s.start_micro);
      rec.last_seen = std::max(rec.last_seen, s.end_micro);
    }
    ++rec.visit_count;
    rec.zones_visited.insert(s.zone_id);
  }
  if (rec.visit_count == 0) throw TrackerError(TrackerErrc::UnknownDevice, device.str());
  return rec;
}

// ---------------------------------------------------------------------------
// Streaming tracker
// ---------------------------------------------------------------------------

struct TrackerConfig {
  std::int64_t gap_micro = kDefaultGapMicro;
  std::int64_t epoch_micro = kDefaultEpochMicro;
  IdentityPolicy identity;
  // Keep every zone-resolved sighting for later replay. Off for bulk ingest.
  bool retain_sightings = true;
};

struct TrackerSnapshot {
  std::vector<PresenceSession> sessions;
  std::vector<ZonedSighting> zoned_sightings;
  IngestStats stats;
  std::size_t device_count = 0;
};

// Single-writer presence state. Sightings are buffered per epoch; a sighting
// from a later epoch closes the buffered one, which is zone-resolved and
// folded into the open sessions. snapshot() may be called from any thread
// and reflects only fully applied epochs.
class PresenceTracker {
 public:
  PresenceTracker(SensorMap sensors, TrackerConfig config) : sensors_(std::move(sensors)), config_(std::move(config)) {
    if (sensors_.empty()) throw TrackerError(TrackerErrc::InvalidArgument, "sensor map is empty");
    if (config_.gap_micro <= 0 || config_.epoch_micro <= 0)
      throw TrackerError(TrackerErrc::InvalidArgument, "gap and epoch must be positive");
  }

  std::optional<Sighting> ingest(const CaptureRecord& record, std::string_view sensor_id) {
    auto s = wearsense::ingest(record, sensors_, sensor_id, config_.identity, pending_stats_);
    if (s) observe(*s);
    return s;
  }

  void observe(const Sighting& s) {
    sensors_.zone_of(s.sensor_id);
    const std::int64_t bucket = detail::floor_div(s.ts_micro, config_.epoch_micro);
    if (current_bucket_ && bucket < *current_bucket_)
      throw TrackerError(TrackerErrc::OutOfOrder, "sighting at " + std::to_string(s.ts_micro) + " precedes current epoch");
    if (current_bucket_ && bucket > *current_bucket_) resolve_pending();
    current_bucket_ = bucket;
    pending_.push_back(s);
  }

  // Resolves the buffered epoch. Further sightings must still not precede it.
  void flush() { resolve_pending(); }

  TrackerSnapshot snapshot() const {
    std::shared_lock lock(mutex_);
    TrackerSnapshot snap;
    snap.sessions = closed_;
    snap.sessions.reserve(closed_.size() + open_.size());
    for (const auto& [_, s] : open_) snap.sessions.push_back(s);
    std::sort(snap.sessions.begin(), snap.sessions.end(), session_less);
    snap.zoned_sightings = zoned_;
    snap.stats = stats_;
    snap.device_count = devices_.size();
    return snap;
  }

  std::size_t device_count() const {
    std::shared_lock lock(mutex_);
    return devices_.size();
  }

  IngestStats stats() const {
    std::shared_lock lock(mutex_);
    return stats_;
  }

  const SensorMap& sensors() const { return sensors_; }
  const TrackerConfig& config() const { return config_; }

 private:
  struct KeyHash {
    std::size_t operator()(const std::pair<DeviceId, ZoneId>& k) const noexcept {
      const std::size_t h = std::hash<std::string>{}(k.first.value);
      return h ^ (std::hash<std::string>{}(k.second) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    }
  };

  void resolve_pending() {
    auto resolved = assign_zones(pending_, sensors_, config_.epoch_micro);
    std::unique_lock lock(mutex_);
    for (const auto& z : resolved) {
      devices_.emplace(z.sighting.device_id);
      auto key = std::make_pair(z.sighting.device_id, z.zone_id);
      auto it = open_.find(key);
      const std::int64_t ts = z.sighting.ts_micro;
      if (it == open_.end()) {
        open_.emplace(std::move(key), PresenceSession{z.sighting.device_id, z.zone_id, ts, ts, 1});
      } else if (ts - it->second.end_micro > config_.gap_micro) {
        closed_.push_back(it->second);
        it->second = PresenceSession{z.sighting.device_id, z.zone_id, ts, ts, 1};
      } else {
        it->second.end_micro = ts;
        ++it->second.sighting_count;
      }
    }
    if (config_.retain_sightings) zoned_.insert(zoned_.end(), resolved.begin(), resolved.end());
    stats_.frames += pending_stats_.frames;
    stats_.sightings += pending_stats_.sightings;
    stats_.dropped += pending_stats_.dropped;
    pending_stats_ = {};
    pending_.clear();
  }

  SensorMap sensors_;
  TrackerConfig config_;
  std::optional<std::int64_t> current_bucket_;
  std::vector<Sighting> pending_;
  IngestStats pending_stats_;

  mutable std::shared_mutex mutex_;
  std::unordered_map<std::pair<DeviceId, ZoneId>, PresenceSession, KeyHash> open_;
  std::vector<PresenceSession> closed_;
  std::vector<ZonedSighting> zoned_;
  std::unordered_set<DeviceId> devices_;
  IngestStats stats_;
};

}  // namespace wearsense
