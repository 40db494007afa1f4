#include <gtest/gtest.h>

#include <random>

#include "lightfdg/grooming.hpp"

using namespace lightfdg;

namespace {

// Two racks of two servers: rack 0 = {0, 1}, rack 1 = {2, 3}.
const RackMap kRacks{2, 2};

FlowDescriptor mf(FlowId id, int src, int dst, double rate) {
  FlowDescriptor f;
  f.id = id;
  f.cls = FlowClass::Mice;
  f.src_server = src;
  f.dst_server = dst;
  f.rate = rate;
  return f;
}

}  // namespace

TEST(ComposeRate, Examples) {
  EXPECT_EQ(compose_rate(std::vector<double>{}), 0.0);
  EXPECT_EQ(compose_rate(std::vector<double>{2.0, 3.0}), 5.0);
  EXPECT_THROW(compose_rate(std::vector<double>{1.0, -0.5}), std::domain_error);
}

TEST(ComposeRate, EqualsLeftFold) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  std::vector<double> rates(100);
  for (auto& r : rates) r = u(rng);
  double fold = 0.0;
  for (double r : rates) fold = fold + r;
  EXPECT_EQ(compose_rate(rates), fold);
}

TEST(GroomThreeStep, SameServerPairSums) {
  const std::vector<FlowDescriptor> flows{mf(1, 0, 2, 2.0), mf(2, 0, 2, 3.0)};
  const auto g = groom_three_step(flows, kRacks);
  ASSERT_EQ(g.s2s.size(), 1u);
  EXPECT_EQ(g.s2s[0].rate, 5.0);
  EXPECT_EQ(g.s2s[0].members, (std::vector<FlowId>{1, 2}));
}

TEST(GroomThreeStep, ServerToRack) {
  const std::vector<FlowDescriptor> flows{mf(1, 0, 2, 2.0), mf(2, 0, 3, 1.5)};
  const auto g = groom_three_step(flows, kRacks);
  EXPECT_EQ(g.s2s.size(), 2u);
  ASSERT_EQ(g.s2r.size(), 1u);
  EXPECT_EQ(g.s2r[0].src, 0);
  EXPECT_EQ(g.s2r[0].dst, 1);
  EXPECT_EQ(g.s2r[0].rate, 3.5);
}

TEST(GroomThreeStep, RackToRack) {
  const std::vector<FlowDescriptor> flows{mf(1, 0, 2, 2.0), mf(2, 0, 3, 1.5), mf(3, 1, 2, 4.0)};
  const auto g = groom_three_step(flows, kRacks);
  EXPECT_EQ(g.s2r.size(), 2u);
  ASSERT_EQ(g.r2r.size(), 1u);
  EXPECT_EQ(g.r2r[0].level, GroomingLevel::R2R);
  EXPECT_EQ(g.r2r[0].src, 0);
  EXPECT_EQ(g.r2r[0].dst, 1);
  EXPECT_EQ(g.r2r[0].rate, 7.5);
  auto members = g.r2r[0].members;
  std::sort(members.begin(), members.end());
  EXPECT_EQ(members, (std::vector<FlowId>{1, 2, 3}));
}

TEST(GroomThreeStep, ClassesKeptApart) {
  auto ef = mf(2, 0, 2, 1.0);
  ef.cls = FlowClass::Elephant;
  const std::vector<FlowDescriptor> flows{mf(1, 0, 2, 2.0), ef};
  const auto g = groom_three_step(flows, kRacks);
  ASSERT_EQ(g.r2r.size(), 2u);
  for (const auto& a : g.r2r) EXPECT_EQ(a.rate, a.cls == FlowClass::Mice ? 2.0 : 1.0);
}

TEST(GroomThreeStep, IntraRackFlowsSetAside) {
  const std::vector<FlowDescriptor> flows{mf(1, 0, 1, 2.0), mf(2, 0, 2, 1.0)};
  const auto g = groom_three_step(flows, kRacks);
  EXPECT_EQ(g.intra_rack, (std::vector<FlowId>{1}));
  ASSERT_EQ(g.r2r.size(), 1u);
  EXPECT_EQ(g.r2r[0].rate, 1.0);
}

TEST(GroomThreeStep, UnknownClassNamesTheFlow) {
  auto f = mf(42, 0, 2, 1.0);
  f.cls = FlowClass::Unknown;
  const std::vector<FlowDescriptor> flows{f};
  try {
    groom_three_step(flows, kRacks);
    FAIL() << "expected a contract error";
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("42"), std::string::npos);
  }
}

TEST(DemandFromAggregates, SubstitutesRequiredCapacity) {
  const std::vector<FlowDescriptor> flows{mf(1, 0, 2, 2.0), mf(2, 0, 3, 1.5), mf(3, 1, 2, 4.0)};
  const auto g = groom_three_step(flows, kRacks);
  const auto d = demand_matrix_from_aggregates(g.r2r, 2, 8e5, 1.0, 1e9, 1.0);
  EXPECT_DOUBLE_EQ(d.capacity_bps(0, 1, FlowClass::Mice), 6e6);
  EXPECT_EQ(d.capacity_bps(1, 0, FlowClass::Mice), 0.0);
  EXPECT_EQ(d.capacity_bps(0, 1, FlowClass::Elephant), 0.0);
}

TEST(DemandFromAggregates, SymmetricInputsGiveSymmetricMatrix) {
  const std::vector<FlowDescriptor> flows{mf(1, 0, 2, 2.0), mf(2, 2, 0, 2.0), mf(3, 1, 3, 0.5), mf(4, 3, 1, 0.5)};
  const auto g = groom_three_step(flows, kRacks);
  const auto d = demand_matrix_from_aggregates(g.r2r, 2, 8e5, 1e-3, 1e9, 1.0);
  EXPECT_EQ(d.capacity_bps(0, 1, FlowClass::Mice), d.capacity_bps(1, 0, FlowClass::Mice));
}

TEST(DemandFromAggregates, RejectsNonRackAggregates) {
  const std::vector<FlowDescriptor> flows{mf(1, 0, 2, 2.0)};
  const auto g = groom_three_step(flows, kRacks);
  EXPECT_THROW(demand_matrix_from_aggregates(g.s2s, 2, 1, 1, 1, 1), ContractError);
}
