#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "lightfdg/traffic.hpp"

using namespace lightfdg;

namespace {

std::vector<PacketEvent> drain(FlowPacketGenerator g) {
  std::vector<PacketEvent> out;
  PacketEvent e;
  while (g.next(e)) out.push_back(e);
  return out;
}

std::map<TcpFlags, int> census(const std::vector<PacketEvent>& events) {
  std::map<TcpFlags, int> c;
  for (const auto& e : events) ++c[e.flags];
  return c;
}

const FlowKey kKey{host_address(0, 0), host_address(1, 0), 40000, 5001, 6};

}  // namespace

TEST(GenerateFlows, MixSplitsNinetyTen) {
  const RackMap racks{8, 5};
  TrafficConfig c;
  c.flow_count = 1000;
  const auto flows = generate_flows(c, racks, 1);
  ASSERT_EQ(flows.size(), 1000u);
  const auto mice = std::count_if(flows.begin(), flows.end(), [](const auto& f) { return f.cls == FlowClass::Mice; });
  EXPECT_EQ(mice, 900);
  for (const auto& f : flows) {
    EXPECT_NE(racks.rack_of(f.src_server), racks.rack_of(f.dst_server));
    EXPECT_EQ(f.size_bytes, f.cls == FlowClass::Mice ? 100'000u : 128'000'000u);
  }
}

TEST(GenerateFlows, PureMiceBelowThreshold) {
  TrafficConfig c;
  c.kind = TrafficKind::PureMice;
  c.flow_count = 500;
  c.mice_size = {1, 1'000'000};
  const auto flows = generate_flows(c, RackMap{4, 4}, 2);
  ASSERT_EQ(flows.size(), 500u);
  for (const auto& f : flows) {
    EXPECT_LE(f.size_bytes, kDefaultThresholdBytes);
    EXPECT_EQ(f.cls, FlowClass::Mice);
  }
}

TEST(GenerateFlows, ArrivalsIncreaseAndSeedsDetermine) {
  TrafficConfig c;
  c.flow_count = 300;
  const auto a = generate_flows(c, RackMap{4, 4}, 7);
  const auto b = generate_flows(c, RackMap{4, 4}, 7);
  const auto other = generate_flows(c, RackMap{4, 4}, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, other);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_GT(a[i].arrival_s, a[i - 1].arrival_s);
}

TEST(GenerateFlows, MeanInterArrivalMatchesRate) {
  TrafficConfig c;
  c.flow_count = 20000;
  c.arrival_rate = 500.0;
  const auto flows = generate_flows(c, RackMap{4, 4}, 11);
  EXPECT_NEAR(flows.back().arrival_s / flows.size(), 1.0 / 500.0, 0.05 / 500.0);
}

TEST(GenerateFlows, ValidationErrors) {
  TrafficConfig c;
  c.mice_size = {1000, 2'000'000};
  EXPECT_THROW(generate_flows(c, RackMap{4, 4}, 1), ConfigError);
  c = TrafficConfig{};
  c.elephant_size = {500'000, 500'000};
  EXPECT_THROW(generate_flows(c, RackMap{4, 4}, 1), ConfigError);
  c = TrafficConfig{};
  c.arrival_rate = 0.0;
  EXPECT_THROW(generate_flows(c, RackMap{4, 4}, 1), ConfigError);
  EXPECT_THROW(generate_flows(TrafficConfig{}, RackMap{1, 4}, 1), ConfigError);
  c = TrafficConfig{};
  c.kind = TrafficKind::Shuffle;
  EXPECT_THROW(generate_flows(c, RackMap{4, 40}, 1), ConfigError);
}

TEST(ShuffleSlots, TenPercentOfTwenty) {
  const auto slots = shuffle_elephant_slots(20, 0.10, 0);
  EXPECT_EQ(std::count(slots.begin(), slots.end(), true), 2);
}

TEST(ShuffleSlots, GroupsOfFiveHoldOneElephant) {
  const auto slots = shuffle_elephant_slots(20, 0.20, 5);
  for (int g = 0; g < 4; ++g) {
    EXPECT_EQ(std::count(slots.begin() + 5 * g, slots.begin() + 5 * g + 5, true), 1) << "group " << g;
  }
}

TEST(ShufflePattern, EightRackRing) {
  const RackMap racks{8, 40};
  TrafficConfig c;
  c.kind = TrafficKind::Shuffle;
  c.shuffle_k = 20;
  c.elephant_fraction = 0.10;
  c.mice_size = {50'000, 50'000};
  const auto flows = shuffle_pattern(c, racks, 3);
  ASSERT_EQ(flows.size(), 160u);
  std::map<std::pair<int, int>, int> per_pair, ef_per_pair;
  std::set<int> receivers;
  for (const auto& f : flows) {
    const int i = racks.rack_of(f.src_server), j = racks.rack_of(f.dst_server);
    EXPECT_EQ(j, (i + 1) % 8);
    ++per_pair[{i, j}];
    if (f.cls == FlowClass::Elephant) ++ef_per_pair[{i, j}];
    EXPECT_TRUE(receivers.insert(f.dst_server).second);
  }
  EXPECT_EQ(per_pair.size(), 8u);
  for (const auto& [p, n] : per_pair) {
    EXPECT_EQ(n, 20);
    EXPECT_EQ(ef_per_pair[p], 2);
  }
}

TEST(ShufflePattern, SingleFlowPerPair) {
  TrafficConfig c;
  c.kind = TrafficKind::Shuffle;
  c.shuffle_k = 1;
  c.elephant_fraction = 0.0;
  const auto flows = shuffle_pattern(c, RackMap{8, 2}, 1);
  EXPECT_EQ(flows.size(), 8u);
}

TEST(ShufflePattern, ZeroFractionIsPureMice) {
  TrafficConfig c;
  c.kind = TrafficKind::Shuffle;
  c.shuffle_k = 20;
  c.elephant_fraction = 0.0;
  const auto flows = shuffle_pattern(c, RackMap{4, 40}, 1);
  for (const auto& f : flows) EXPECT_EQ(f.cls, FlowClass::Mice);
}

TEST(ShufflePattern, KTooLarge) {
  TrafficConfig c;
  c.kind = TrafficKind::Shuffle;
  c.shuffle_k = 21;
  EXPECT_THROW(shuffle_pattern(c, RackMap{8, 40}, 1), ConfigError);
}

TEST(Addressing, OneSubnetPerRack) {
  EXPECT_EQ(format_ipv4(host_address(3, 0)), "10.0.3.1");
  EXPECT_EQ(format_ipv4(host_address(300, 4)), "10.1.44.5");
  EXPECT_EQ(host_address(3, 0) >> 8, host_address(3, 9) >> 8);
  EXPECT_NE(host_address(3, 0) >> 8, host_address(4, 0) >> 8);
}

TEST(PacketGenerator, SegmentArithmetic) {
  PacketGenConfig pg;
  pg.ack_every = 1;
  const auto ev = drain(FlowPacketGenerator(kKey, 3000, 0, 100, 200, pg));
  auto c = census(ev);
  EXPECT_EQ(c[TcpFlags::Syn], 1);
  EXPECT_EQ(c[TcpFlags::SynAck], 1);
  EXPECT_EQ(c[TcpFlags::Data], 3);
  EXPECT_EQ(c[TcpFlags::Ack], 4);  // handshake ACK + 3
  EXPECT_EQ(c[TcpFlags::Fin], 1);
  EXPECT_EQ(ev.size(), 10u);
  EXPECT_EQ(ev.back().flags, TcpFlags::Fin);
}

TEST(PacketGenerator, ZeroPayload) {
  const auto ev = drain(FlowPacketGenerator(kKey, 0, 0, 100, 200, PacketGenConfig{}));
  ASSERT_EQ(ev.size(), 4u);
  EXPECT_EQ(ev[0].flags, TcpFlags::Syn);
  EXPECT_EQ(ev[1].flags, TcpFlags::SynAck);
  EXPECT_EQ(ev[2].flags, TcpFlags::Ack);
  EXPECT_EQ(ev[3].flags, TcpFlags::Fin);
}

TEST(PacketGenerator, DelayedAcksAndFinalAck) {
  for (std::uint32_t isn : {0u, 4294967000u}) {
    const std::uint64_t size = 100'001;
    const auto ev = drain(FlowPacketGenerator(kKey, size, 5, isn, 9, PacketGenConfig{}));
    auto c = census(ev);
    const int segments = (size + 1459) / 1460;
    EXPECT_EQ(c[TcpFlags::Data], segments);
    EXPECT_EQ(c[TcpFlags::Ack], 1 + (segments + 1) / 2);
    std::uint64_t payload = 0;
    std::uint32_t last_ack = 0;
    for (const auto& e : ev) {
      if (e.flags == TcpFlags::Data) payload += e.len;
      if (e.flags == TcpFlags::Ack && e.key == kKey.reversed()) last_ack = e.ack;
    }
    EXPECT_EQ(payload, size);
    EXPECT_EQ(static_cast<std::uint32_t>(last_ack - (isn + 1U)), size);
  }
}

TEST(PacketGenerator, TimestampsNonDecreasingAndRateHonoured) {
  PacketGenConfig pg;
  pg.rate_bps = 1e9;
  const auto ev = drain(FlowPacketGenerator(kKey, 1'460'000, 0, 1, 2, pg));
  for (std::size_t i = 1; i < ev.size(); ++i) EXPECT_LE(ev[i - 1].ts_ns, ev[i].ts_ns);
  std::int64_t first = -1, last = 0;
  for (const auto& e : ev) {
    if (e.flags != TcpFlags::Data) continue;
    if (first < 0) first = e.ts_ns;
    last = e.ts_ns;
  }
  EXPECT_NEAR(static_cast<double>(last - first), 999 * 11'680.0, 1.0);
}

TEST(PacketGenerator, RejectsBadConfig) {
  PacketGenConfig pg;
  pg.mss = 0;
  EXPECT_THROW(FlowPacketGenerator(kKey, 10, 0, 1, 2, pg), ConfigError);
  pg = PacketGenConfig{};
  pg.ack_every = 0;
  EXPECT_THROW(FlowPacketGenerator(kKey, 10, 0, 1, 2, pg), ConfigError);
}

TEST(PacketEventStream, MergeEqualsStableSortOfConcatenation) {
  const RackMap racks{4, 4};
  TrafficConfig c;
  c.flow_count = 40;
  c.arrival_rate = 1e5;  // heavy overlap
  c.mice_size = {1, 200'000};
  c.elephant_size = {2'000'000, 3'000'000};
  const auto flows = generate_flows(c, racks, 5);
  PacketGenConfig pg;
  pg.isn_seed = 5;
  std::vector<PacketEvent> concat;
  for (const auto& f : flows) {
    const auto ev = drain(packet_generator(f, racks, pg));
    concat.insert(concat.end(), ev.begin(), ev.end());
  }
  std::stable_sort(concat.begin(), concat.end(), [](const auto& a, const auto& b) { return a.ts_ns < b.ts_ns; });
  EXPECT_EQ(flows_to_packet_events(flows, racks, pg), concat);
}

TEST(PacketEventStream, EmptyStream) {
  PacketEventStream s;
  PacketEvent e;
  EXPECT_FALSE(s.next(e));
}

TEST(GroundTruth, GeneratorAndTraceAgree) {
  const RackMap racks{4, 4};
  TrafficConfig c;
  c.flow_count = 50;
  c.mice_size = {1, 1'048'576};
  c.elephant_size = {1'048'577, 2'000'000};
  const auto flows = generate_flows(c, racks, 13);
  const auto events = flows_to_packet_events(flows, racks, PacketGenConfig{});
  const auto a = ground_truth(flows, racks, kDefaultThresholdBytes);
  const auto b = ground_truth_from_trace(events, kDefaultThresholdBytes);
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [k, t] : a) {
    ASSERT_TRUE(b.contains(k));
    EXPECT_EQ(b.at(k).cls, t.cls);
    EXPECT_EQ(b.at(k).bytes, t.bytes);
    EXPECT_EQ(b.at(k).start_ns, t.start_ns);
  }
}
