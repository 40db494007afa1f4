#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "lightfdg/engine.hpp"

using namespace lightfdg;

namespace {

// Two racks of eight servers: rack 0 = 0..7, rack 1 = 8..15.
const RackMap kRacks{2, 8};

FlowDescriptor flow(FlowId id, FlowClass cls, int src, int dst, std::uint64_t size, double arrival_s = 0.0) {
  FlowDescriptor f;
  f.id = id;
  f.cls = cls;
  f.src_server = src;
  f.dst_server = dst;
  f.size_bytes = size;
  f.arrival_s = arrival_s;
  f.src_port = static_cast<std::uint16_t>(2000 + id);
  return f;
}

// Hand-built lightpath table for the rack pair 0 -> 1.
ProvisioningResult lightpaths(double mice_bps, double elephant_bps) {
  ProvisioningResult r;
  r.racks = 2;
  for (auto [cls, cap] : {std::pair{FlowClass::Mice, mice_bps}, std::pair{FlowClass::Elephant, elephant_bps}}) {
    Lightpath lp;
    lp.id = static_cast<LightpathId>(r.lightpaths.size());
    lp.cls = cls;
    lp.src = 0;
    lp.dst = 1;
    lp.capacity_bps = cap;
    r.lightpaths.push_back(lp);
  }
  return r;
}

SimulationSetup setup(Policy p, const ProvisioningResult* prov = nullptr) {
  SimulationSetup s;
  s.policy = p;
  s.racks = kRacks;
  s.spines = 1;
  s.wavelengths = 4;
  s.link_rate_bps = 10e9;
  s.network.host_link_bps = 0.0;
  s.network.check_invariants = true;
  s.provisioning = prov;
  s.seed = 3;
  return s;
}

std::string csv(const MetricsReport& r) {
  std::ostringstream os;
  write_flow_csv(os, r);
  write_summary_rows(os, r);
  return os.str();
}

ScenarioConfig shuffle_scenario(double ef_fraction) {
  auto sc = parse_scenario(R"({
    "topology": {"leaves": 8, "spine_ratio": "1/2", "wavelengths": 4, "link_rate_bps": 1e10,
                 "bandwidth_hz": 1e10, "hosts_per_rack": 40},
    "traffic": {"kind": "shuffle", "shuffle_k": 20, "mice_size": 50000, "elephant_size": 128000000,
                "arrival_rate": 5000, "ring_offset": 1},
    "demand": {"mice_deadline_s": 0.001, "elephant_deadline_s": 1}
  })");
  sc.traffic.elephant_fraction = ef_fraction;
  return sc;
}

}  // namespace

TEST(EcmpRoute, DeterministicAndBounded) {
  const FlowKey k{1, 2, 3, 4, 6};
  EXPECT_EQ(ecmp_route(k, 4), ecmp_route(k, 4));
  EXPECT_EQ(ecmp_route(k, 1), 0u);
  EXPECT_THROW(ecmp_route(k, 0), ContractError);
}

TEST(EcmpRoute, SpreadsEvenly) {
  std::mt19937_64 rng(1);
  std::vector<int> hits(4, 0);
  for (int i = 0; i < 10000; ++i) {
    const FlowKey k{static_cast<Ipv4>(rng()), static_cast<Ipv4>(rng()), static_cast<std::uint16_t>(rng()),
                    static_cast<std::uint16_t>(rng()), 6};
    ++hits[ecmp_route(k, 4)];
  }
  for (int h : hits) EXPECT_NEAR(h, 2500, 250);
}

TEST(Simulate, SingleMiceOnTenGigabitLightpath) {
  const auto prov = lightpaths(10e9, 10e9);
  const std::vector<FlowDescriptor> flows{flow(0, FlowClass::Mice, 0, 8, 50'000)};
  for (Policy p : {Policy::FgFso, Policy::LightFdg}) {
    const auto r = simulate(setup(p, &prov), flows);
    ASSERT_EQ(r.flows.size(), 1u);
    EXPECT_EQ(r.flows[0].fct_ns, 40'000) << to_string(p);
    EXPECT_TRUE(r.flows[0].deadline_met);
  }
}

TEST(Simulate, HostLinkCapsTheRate) {
  const auto prov = lightpaths(10e9, 10e9);
  auto s = setup(Policy::FgFso, &prov);
  s.network.host_link_bps = 1e9;
  const auto r = simulate(s, std::vector<FlowDescriptor>{flow(0, FlowClass::Mice, 0, 8, 50'000)});
  EXPECT_EQ(r.flows[0].fct_ns, 400'000);
}

TEST(Simulate, EcmpFsoSingleFlowGetsOneWavelength) {
  const auto r = simulate(setup(Policy::EcmpFso), std::vector<FlowDescriptor>{flow(0, FlowClass::Mice, 0, 8, 50'000)});
  EXPECT_EQ(r.flows[0].fct_ns, 160'000);  // 4e5 bits at 2.5 Gb/s
}

TEST(Simulate, EcmpFsoFifoWhenWavelengthsRunOut) {
  std::vector<FlowDescriptor> flows;
  for (int i = 0; i < 5; ++i) flows.push_back(flow(i, FlowClass::Mice, i, 8 + i, 250'000, i * 1e-9));
  const auto r = simulate(setup(Policy::EcmpFso), flows);
  const std::int64_t solo = 800'000;  // 2e6 bits at 2.5 Gb/s
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(r.flows[i].wait_ns, 0);
    EXPECT_EQ(r.flows[i].fct_ns, solo);
  }
  EXPECT_EQ(r.flows[4].wait_ns, solo - 4);  // starts when flow 0 completes
  EXPECT_EQ(r.flows[4].fct_ns, 2 * solo - 4);
}

TEST(Simulate, EcmpSharesCabledLinks) {
  const std::vector<FlowDescriptor> flows{flow(0, FlowClass::Mice, 0, 8, 125'000), flow(1, FlowClass::Mice, 1, 9, 125'000)};
  const auto r = simulate(setup(Policy::Ecmp), flows);
  // One spine, cabled links at 1 Gb/s shared by two flows.
  EXPECT_EQ(r.flows[0].fct_ns, 2'000'000);
  EXPECT_EQ(r.flows[1].fct_ns, 2'000'000);
}

TEST(Simulate, MaxMinSharingOnLightpath) {
  const auto prov = lightpaths(4e9, 10e9);
  auto s = setup(Policy::FgFso, &prov);
  s.network.host_link_bps = 1e9;
  // Three flows: two on the same sender NIC (capped at 0.5 Gb/s each), one free.
  const std::vector<FlowDescriptor> flows{flow(0, FlowClass::Mice, 0, 8, 62'500), flow(1, FlowClass::Mice, 0, 9, 62'500),
                                          flow(2, FlowClass::Mice, 1, 10, 125'000)};
  const auto r = simulate(s, flows);
  EXPECT_EQ(r.flows[0].fct_ns, 1'000'000);
  EXPECT_EQ(r.flows[1].fct_ns, 1'000'000);
  EXPECT_EQ(r.flows[2].fct_ns, 1'000'000);
}

TEST(Simulate, LightFdgReroutesAtFirstQuantumOverThreshold) {
  const auto prov = lightpaths(5e9, 10e9);
  auto s = setup(Policy::LightFdg, &prov);
  s.network.ack_quantum_bytes = 65'536;
  const std::uint64_t size = 10'000'000;
  const auto r = simulate(s, std::vector<FlowDescriptor>{flow(0, FlowClass::Elephant, 0, 8, size)});
  const auto& f = r.flows[0];
  const std::uint64_t crossing = 17 * 65'536;  // first multiple above 2^20
  EXPECT_TRUE(f.rerouted);
  EXPECT_EQ(f.bytes_on_mice_path, crossing);
  ASSERT_TRUE(f.detect_ns);
  EXPECT_EQ(*f.detect_ns, std::llround(crossing * 8.0 / 5e9 * 1e9));
  const double fct = crossing * 8.0 / 5e9 * 1e9 + (size - crossing) * 8.0 / 10e9 * 1e9;
  EXPECT_NEAR(static_cast<double>(f.fct_ns), fct, 1.0);
  ASSERT_TRUE(r.detection);
  EXPECT_EQ(r.detection->true_negatives, 0u);
}

TEST(Simulate, LightFdgMiceNeverLeaveTheMicePath) {
  const auto prov = lightpaths(5e9, 10e9);
  const auto r = simulate(setup(Policy::LightFdg, &prov),
                          std::vector<FlowDescriptor>{flow(0, FlowClass::Mice, 0, 8, 1'048'576)});
  EXPECT_FALSE(r.flows[0].rerouted);
  EXPECT_FALSE(r.flows[0].detect_ns);
  EXPECT_EQ(r.flows[0].detected, FlowClass::Mice);
  EXPECT_EQ(r.flows[0].bytes_on_mice_path, 1'048'576u);
}

TEST(Simulate, FgFsoIsolatedElephantRunsAtLightpathCapacity) {
  const auto prov = lightpaths(5e9, 7.5e9);
  const auto r = simulate(setup(Policy::FgFso, &prov),
                          std::vector<FlowDescriptor>{flow(0, FlowClass::Elephant, 0, 8, 75'000'000)});
  EXPECT_NEAR(r.elephant.throughput_bps, 7.5e9, 7.5e9 * 1e-9);
}

TEST(Simulate, ZeroFlows) {
  const auto prov = lightpaths(5e9, 10e9);
  for (Policy p : kAllPolicies) {
    const auto r = simulate(setup(p, &prov), std::vector<FlowDescriptor>{});
    EXPECT_TRUE(r.flows.empty());
    EXPECT_EQ(r.events, 0u);
    EXPECT_EQ(r.mice.flows, 0u);
  }
}

TEST(Simulate, UnprovisionedPairIsContractError) {
  const auto prov = lightpaths(5e9, 10e9);
  const std::vector<FlowDescriptor> flows{flow(0, FlowClass::Mice, 8, 0, 1000)};
  EXPECT_THROW(simulate(setup(Policy::FgFso, &prov), flows), ContractError);
  EXPECT_THROW(simulate(setup(Policy::LightFdg, nullptr), flows), ContractError);
}

TEST(CollectMetrics, HalfTheMiceMissTheDeadline) {
  MetricsReport r;
  FlowResult a;
  a.truth = FlowClass::Mice;
  a.deadline_met = true;
  a.finish_ns = 10;
  FlowResult b = a;
  b.deadline_met = false;
  r.flows = {a, b};
  collect_metrics(r);
  EXPECT_DOUBLE_EQ(r.mice.deadline_satisfaction, 0.5);
  EXPECT_DOUBLE_EQ(r.elephant.deadline_satisfaction, 1.0);
}

TEST(ScenarioDemands, OverridesAndFloor) {
  auto sc = shuffle_scenario(0.0);
  const auto flows = make_flows(sc.traffic, sc.racks(), 1);
  const auto d = scenario_demands(sc, flows);
  // 20 flows/s of 50 KB within 1 ms on each ring pair.
  EXPECT_NEAR(d.capacity_bps(0, 1, FlowClass::Mice), 20 * 4e5 / 1e-3, 1.0);
  EXPECT_EQ(d.capacity_bps(0, 1, FlowClass::Elephant), sc.demand.min_bps);
  EXPECT_EQ(d.capacity_bps(0, 2, FlowClass::Mice), 0.0);
  sc.demand.mice_bps = 3e9;
  EXPECT_EQ(scenario_demands(sc, flows).capacity_bps(0, 1, FlowClass::Mice), 3e9);
}

TEST(Run, PureMiceLightFdgMatchesOracle) {
  const auto sc = shuffle_scenario(0.0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto a = run(sc, Policy::LightFdg, seed);
    const auto b = run(sc, Policy::FgFso, seed);
    ASSERT_EQ(a.flows.size(), b.flows.size());
    for (std::size_t i = 0; i < a.flows.size(); ++i) {
      EXPECT_EQ(a.flows[i].fct_ns, b.flows[i].fct_ns) << "seed " << seed << " flow " << i;
      EXPECT_EQ(a.flows[i].start_ns, b.flows[i].start_ns);
    }
    EXPECT_EQ(a.mice.deadline_satisfaction, b.mice.deadline_satisfaction);
  }
}

TEST(Run, Deterministic) {
  const auto sc = shuffle_scenario(0.15);
  for (Policy p : kAllPolicies) EXPECT_EQ(csv(run(sc, p, 4)), csv(run(sc, p, 4))) << to_string(p);
}

TEST(Run, PolicyNamesRoundTrip) {
  for (Policy p : kAllPolicies) EXPECT_EQ(parse_policy(to_string(p)), p);
  EXPECT_THROW(parse_policy("ospf"), ConfigError);
}
