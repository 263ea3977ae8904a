#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "wearsense/analytics.hpp"

using namespace wearsense;
using namespace wearsense::analytics;

using oracle::random_sessions;
using oracle::S;
using oracle::session;
using oracle::sighting;

TEST(Occupancy, Examples) {
  const std::vector<PresenceSession> one{session("x", "A", 0, 150 * S)};
  const auto series = occupancy(one, "A", 60 * S);
  ASSERT_EQ(series.counts.size(), 3u);
  EXPECT_EQ(series.counts[0], (OccupancyBucket{0, 1}));
  EXPECT_EQ(series.counts[1], (OccupancyBucket{60 * S, 1}));
  EXPECT_EQ(series.counts[2], (OccupancyBucket{120 * S, 1}));

  const auto empty = occupancy(std::vector<PresenceSession>{}, "A", 60 * S, 0, 180 * S);
  ASSERT_EQ(empty.counts.size(), 3u);
  for (const auto& b : empty.counts) EXPECT_EQ(b.device_count, 0);

  const std::vector<PresenceSession> two{session("x", "A", 0, 10 * S), session("y", "A", 30 * S, 90 * S)};
  EXPECT_EQ(occupancy(two, "A", 60 * S).counts[0].device_count, 2);
}

TEST(Occupancy, SessionEndingOnBucketBoundaryTouchesIt) {
  const std::vector<PresenceSession> s{session("x", "A", 0, 60 * S)};
  const auto series = occupancy(s, "A", 60 * S, 0, 120 * S);
  EXPECT_EQ(series.counts[1].device_count, 1);
}

TEST(Occupancy, MatchesOracle) {
  std::mt19937_64 rng(31);
  for (int round = 0; round < 1000; ++round) {
    const auto sessions = random_sessions(rng, 20);
    const std::int64_t bucket = 1 + static_cast<std::int64_t>(rng() % 200);
    const std::int64_t from = static_cast<std::int64_t>(rng() % 500);
    const std::int64_t to = from + static_cast<std::int64_t>(rng() % 3000);
    const auto got = occupancy(sessions, "a", bucket, from, to);
    const auto want = oracle::occupancy(sessions, "a", bucket, from, to);
    EXPECT_EQ(got.counts, want);
    EXPECT_EQ(got.bucket_micro, bucket);
  }
}

TEST(Occupancy, TotalAtLeastSessionCount) {
  std::mt19937_64 rng(8);
  for (int round = 0; round < 200; ++round) {
    const auto sessions = random_sessions(rng, 20);
    std::int64_t n = 0, total = 0;
    for (const auto& s : sessions) n += s.zone_id == "a";
    for (const auto& b : occupancy(sessions, "a", 50).counts) total += b.device_count;
    EXPECT_GE(total, n);
  }
}

TEST(Dwell, Examples) {
  const std::vector<PresenceSession> s{session("x", "A", 0, 300 * S), session("y", "A", 0, 100 * S)};
  const auto d = dwell_stats(s, "A");
  EXPECT_EQ(d.count, 2);
  EXPECT_EQ(d.total_micro, 400 * S);
  EXPECT_EQ(d.mean_micro, 200.0 * S);
  EXPECT_EQ(d.max_micro, 300 * S);

  const std::vector<PresenceSession> z{session("x", "A", 5, 5)};
  EXPECT_EQ(dwell_stats(z, "A").mean_micro, 0.0);

  const auto e = dwell_stats(std::vector<PresenceSession>{}, "A");
  EXPECT_EQ(e.count, 0);
  EXPECT_FALSE(e.mean_micro);
  EXPECT_FALSE(e.max_micro);
}

TEST(Dwell, MatchesOracle) {
  std::mt19937_64 rng(32);
  for (int round = 0; round < 1000; ++round) {
    const auto sessions = random_sessions(rng, 20);
    EXPECT_EQ(dwell_stats(sessions, "b"), oracle::dwell(sessions, "b"));
  }
}

TEST(Flow, Examples) {
  const std::vector<PresenceSession> aba{session("x", "A", 0, 10), session("x", "B", 20, 30),
                                         session("x", "A", 40, 50)};
  const auto m = flow_matrix(aba);
  EXPECT_EQ(m.at("A", "B"), 1);
  EXPECT_EQ(m.at("B", "A"), 1);
  EXPECT_EQ(m.total(), 2);

  const std::vector<PresenceSession> single{session("x", "A", 0, 10)};
  EXPECT_EQ(flow_matrix(single).total(), 0);

  const std::vector<PresenceSession> reentry{session("x", "A", 0, 10), session("x", "A", 500, 600)};
  const auto r = flow_matrix(reentry);
  EXPECT_EQ(r.total(), 0);
  EXPECT_EQ(r.at("A", "A"), 0);
}

TEST(Flow, OverlappingSessions) {
  const std::vector<PresenceSession> overlap{session("x", "A", 0, 10), session("x", "B", 5, 30)};
  EXPECT_THROW(flow_matrix(overlap), AnalyticsError);
}

TEST(Flow, MatchesOracle) {
  std::mt19937_64 rng(33);
  for (int round = 0; round < 1000; ++round) {
    const auto sessions = random_sessions(rng, 20);
    const auto m = flow_matrix(sessions);
    EXPECT_EQ(m, oracle::flow(sessions));
    for (std::size_t i = 0; i < m.zones.size(); ++i) EXPECT_EQ(m.counts[i][i], 0);
  }
}

TEST(Unique, Examples) {
  const std::vector<Sighting> s{sighting("X", 1), sighting("X", 2), sighting("Y", 3)};
  EXPECT_EQ(unique_devices(s, 0, 10), 2);
  EXPECT_EQ(unique_devices(s, 100, 200), 0);
  EXPECT_EQ(unique_devices(s, 0, 3), 1);
  EXPECT_THROW(unique_devices(s, 5, 5), AnalyticsError);
}

TEST(Unique, MatchesOracle) {
  std::mt19937_64 rng(34);
  for (int round = 0; round < 1000; ++round) {
    const auto s = oracle::random_sightings(rng, 50);
    const std::int64_t t0 = static_cast<std::int64_t>(rng() % 100);
    const std::int64_t t1 = t0 + 1 + static_cast<std::int64_t>(rng() % 50);
    EXPECT_EQ(unique_devices(s, t0, t1), oracle::unique(s, t0, t1));
  }
}

TEST(Interest, Examples) {
  const std::set<ZoneId> booths{"robotics", "cloud", "security"};
  const std::vector<PresenceSession> s{session("m", "robotics", 0, 300 * S), session("m", "cloud", 400 * S, 430 * S)};
  EXPECT_EQ(interest_profile(DeviceId{"m"}, s, booths, 120 * S).interests, (std::set<ZoneId>{"robotics"}));

  const std::vector<PresenceSession> split{session("m", "cloud", 0, 70 * S), session("m", "cloud", 500 * S, 570 * S)};
  EXPECT_EQ(interest_profile(DeviceId{"m"}, split, booths, 120 * S).interests, (std::set<ZoneId>{"cloud"}));

  const std::vector<PresenceSession> hall{session("m", "hall", 0, 900 * S)};
  EXPECT_TRUE(interest_profile(DeviceId{"m"}, hall, booths, 120 * S).interests.empty());
  EXPECT_THROW(interest_profile(DeviceId{"m"}, hall, booths, 0), AnalyticsError);
}

TEST(Interest, MatchesOracle) {
  std::mt19937_64 rng(35);
  for (int round = 0; round < 1000; ++round) {
    const auto sessions = random_sessions(rng, 20);
    const std::set<ZoneId> booths{"a", "c"};
    const std::int64_t threshold = 1 + static_cast<std::int64_t>(rng() % 400);
    const DeviceId dev{"d" + std::to_string(rng() % 4)};
    EXPECT_EQ(interest_profile(dev, sessions, booths, threshold).interests,
              oracle::interest(dev, sessions, booths, threshold));
  }
}

TEST(Analytics, RenamingDevicesLeavesCountsUnchanged) {
  std::mt19937_64 rng(36);
  for (int round = 0; round < 200; ++round) {
    const auto sessions = random_sessions(rng, 20);
    auto renamed = sessions;
    for (auto& s : renamed) s.device_id = DeviceId{"hashed-" + s.device_id.str()};
    EXPECT_EQ(occupancy(sessions, "a", 60).counts, occupancy(renamed, "a", 60).counts);
    EXPECT_EQ(dwell_stats(sessions, "b"), dwell_stats(renamed, "b"));
    EXPECT_EQ(flow_matrix(sessions), flow_matrix(renamed));
  }
}
