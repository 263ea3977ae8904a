#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "wearsense/presence_tracker.hpp"

namespace wearsense::analytics {

inline constexpr std::int64_t kDefaultDwellThresholdMicro = 120 * kMicrosPerSecond;

class AnalyticsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OccupancyBucket {
  std::int64_t bucket_start = 0;
  std::int64_t device_count = 0;
  friend bool operator==(const OccupancyBucket&, const OccupancyBucket&) = default;
};

struct OccupancySeries {
  ZoneId zone_id;
  std::int64_t bucket_micro = 0;
  std::vector<OccupancyBucket> counts;
  friend bool operator==(const OccupancySeries&, const OccupancySeries&) = default;
};

// Buckets are [start, start + bucket) aligned to multiples of bucket_micro
// and cover [from, to). A session [s, e] counts in every bucket it touches;
// a device is counted once per bucket.
inline OccupancySeries occupancy(std::span<const PresenceSession> sessions, const ZoneId& zone,
                                 std::int64_t bucket_micro, std::int64_t from, std::int64_t to) {
  if (bucket_micro <= 0) throw AnalyticsError("bucket must be positive");
  OccupancySeries series{zone, bucket_micro, {}};
  if (to <= from) return series;
  const std::int64_t first = detail::floor_div(from, bucket_micro);
  const std::int64_t last = detail::floor_div(to - 1, bucket_micro);
  std::vector<std::set<DeviceId>> present(static_cast<std::size_t>(last - first + 1));
  for (const auto& s : sessions) {
    if (s.zone_id != zone) continue;
    const std::int64_t lo = std::max(first, detail::floor_div(s.start_micro, bucket_micro));
    const std::int64_t hi = std::min(last, detail::floor_div(s.end_micro, bucket_micro));
    for (std::int64_t b = lo; b <= hi; ++b) present[static_cast<std::size_t>(b - first)].insert(s.device_id);
  }
  for (std::int64_t b = first; b <= last; ++b)
    series.counts.push_back({b * bucket_micro, static_cast<std::int64_t>(present[static_cast<std::size_t>(b - first)].size())});
  return series;
}

// Range defaults to the span of the zone's sessions.
inline OccupancySeries occupancy(std::span<const PresenceSession> sessions, const ZoneId& zone,
                                 std::int64_t bucket_micro) {
  std::optional<std::int64_t> lo, hi;
  for (const auto& s : sessions) {
    if (s.zone_id != zone) continue;
    lo = lo ? std::min(*lo, s.start_micro) : s.start_micro;
    hi = hi ? std::max(*hi, s.end_micro) : s.end_micro;
  }
  if (!lo) return occupancy(sessions, zone, bucket_micro, 0, 0);
  return occupancy(sessions, zone, bucket_micro, *lo, *hi + 1);
}

struct DwellStats {
  std::int64_t count = 0;
  std::int64_t total_micro = 0;
  std::optional<double> mean_micro;
  std::optional<std::int64_t> max_micro;
  friend bool operator==(const DwellStats&, const DwellStats&) = default;
};

inline DwellStats dwell_stats(std::span<const PresenceSession> sessions, const ZoneId& zone) {
  DwellStats d;
  for (const auto& s : sessions) {
    if (s.zone_id != zone) continue;
    ++d.count;
    d.total_micro += s.duration();
    d.max_micro = d.max_micro ? std::max(*d.max_micro, s.duration()) : s.duration();
  }
  if (d.count > 0) d.mean_micro = static_cast<double>(d.total_micro) / static_cast<double>(d.count);
  return d;
}

struct FlowMatrix {
  std::vector<ZoneId> zones;
  std::vector<std::vector<std::int64_t>> counts;

  std::int64_t at(const ZoneId& from, const ZoneId& to) const {
    auto index = [this](const ZoneId& z) -> std::optional<std::size_t> {
      auto it = std::lower_bound(zones.begin(), zones.end(), z);
      if (it == zones.end() || *it != z) return std::nullopt;
      return static_cast<std::size_t>(it - zones.begin());
    };
    const auto i = index(from);
    const auto j = index(to);
    return (i && j) ? counts[*i][*j] : 0;
  }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& row : counts)
      for (auto c : row) t += c;
    return t;
  }

  friend bool operator==(const FlowMatrix&, const FlowMatrix&) = default;
};

// One transition per consecutive pair of a device's sessions in different
// zones. Zones are every zone that appears in the input, sorted.
inline FlowMatrix flow_matrix(std::span<const PresenceSession> sessions) {
  std::set<ZoneId> zone_set;
  std::map<DeviceId, std::vector<const PresenceSession*>> per_device;
  for (const auto& s : sessions) {
    zone_set.insert(s.zone_id);
    per_device[s.device_id].push_back(&s);
  }
  FlowMatrix m;
  m.zones.assign(zone_set.begin(), zone_set.end());
  m.counts.assign(m.zones.size(), std::vector<std::int64_t>(m.zones.size(), 0));
  auto index = [&m](const ZoneId& z) {
    return static_cast<std::size_t>(std::lower_bound(m.zones.begin(), m.zones.end(), z) - m.zones.begin());
  };
  for (auto& [device, list] : per_device) {
    std::sort(list.begin(), list.end(), [](const PresenceSession* a, const PresenceSession* b) {
      return std::tie(a->start_micro, a->end_micro, a->zone_id) < std::tie(b->start_micro, b->end_micro, b->zone_id);
    });
    for (std::size_t i = 1; i < list.size(); ++i) {
      const auto& prev = *list[i - 1];
      const auto& next = *list[i];
      if (next.start_micro <= prev.end_micro)
        throw AnalyticsError("OverlappingSessions: device " + device.str() + " in " + prev.zone_id + " and " +
                             next.zone_id);
      if (prev.zone_id != next.zone_id) ++m.counts[index(prev.zone_id)][index(next.zone_id)];
    }
  }
  return m;
}

// Distinct devices with at least one sighting in [t0, t1).
inline std::int64_t unique_devices(std::span<const Sighting> sightings, std::int64_t t0, std::int64_t t1) {
  if (t0 >= t1) throw AnalyticsError("unique_devices window must satisfy t0 < t1");
  std::set<DeviceId> seen;
  for (const auto& s : sightings)
    if (s.ts_micro >= t0 && s.ts_micro < t1) seen.insert(s.device_id);
  return static_cast<std::int64_t>(seen.size());
}

struct InterestProfile {
  DeviceId device_id;
  std::set<ZoneId> interests;
  friend bool operator==(const InterestProfile&, const InterestProfile&) = default;
};

// A booth is an interest when the device's summed dwell there reaches the
// threshold.
inline InterestProfile interest_profile(const DeviceId& device, std::span<const PresenceSession> sessions,
                                        const std::set<ZoneId>& booths, std::int64_t dwell_threshold_micro) {
  if (dwell_threshold_micro <= 0) throw AnalyticsError("dwell threshold must be positive");
  std::map<ZoneId, std::int64_t> dwell;
  for (const auto& s : sessions)
    if (s.device_id == device && booths.count(s.zone_id)) dwell[s.zone_id] += s.duration();
  InterestProfile p{device, {}};
  for (const auto& [zone, total] : dwell)
    if (total >= dwell_threshold_micro) p.interests.insert(zone);
  return p;
}

}  // namespace wearsense::analytics
