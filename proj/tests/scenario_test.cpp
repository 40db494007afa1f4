#include <gtest/gtest.h>

#include <filesystem>

#include "lightfdg/scenario.hpp"

using namespace lightfdg;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text, "s.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Scenario, EmptyObjectGivesDefaults) {
  const auto sc = parse_scenario("{}");
  EXPECT_EQ(sc.topology.leaves, 8);
  EXPECT_EQ(sc.topology.spines(), 4);
  EXPECT_EQ(sc.topology.wavelengths, 4);
  EXPECT_EQ(sc.detector.threshold_bytes, 1u << 20);
  EXPECT_EQ(sc.traffic.threshold_bytes, sc.detector.threshold_bytes);
}

TEST(Scenario, FullDocument) {
  const auto sc = parse_scenario(R"({
    "seed": 9,
    "topology": {"leaves": 6, "spine_ratio": "1/3", "wavelengths": 5, "hosts_per_rack": 4,
                 "gain": {"path_loss": 0.5}},
    "traffic": {"kind": "pure-mf", "flows": 10, "mice_size": [10, 20]},
    "demand": {"mice_bps": 2e9},
    "network": {"host_link_bps": 0},
    "detector": {"mode": "centralized", "ack_sample_rate": 10, "port_classes": {"21": "EF"}},
    "packets": {"mss": 9000}
  })");
  EXPECT_EQ(sc.seed, 9u);
  EXPECT_EQ(sc.topology.spines(), 2);
  EXPECT_DOUBLE_EQ(sc.topology.gain.composite(), 0.5);
  EXPECT_EQ(sc.traffic.kind, TrafficKind::PureMice);
  EXPECT_EQ(sc.traffic.mice_size.min, 10u);
  EXPECT_EQ(sc.traffic.mice_size.max, 20u);
  EXPECT_EQ(*sc.demand.mice_bps, 2e9);
  EXPECT_EQ(sc.detector.mode, DetectionMode::Centralized);
  EXPECT_EQ(sc.detector.port_classes.size(), 1u);
  EXPECT_EQ(sc.detector.port_classes.at(21), FlowClass::Elephant);
  EXPECT_EQ(sc.packets.mss, 9000u);
}

TEST(Scenario, DefaultBudgetFillsTheLinkRate) {
  const auto sc = parse_scenario(R"({"topology": {"link_rate_bps": 1e10, "bandwidth_hz": 1e10, "wavelengths": 4}})");
  const auto topo = sc.topology.build();
  const double per_wavelength = topo.intensity_budget() / 4;
  EXPECT_NEAR(wavelength_capacity(ChannelGain::unit(), per_wavelength, 1e10), 2.5e9, 1e-3);
}

TEST(Scenario, SyntaxErrorCarriesLine) {
  const auto msg = error_of("{\n  \"seed\": 1,\n  \"topology\": {\n    \"leaves\": 8,,\n  }\n}\n");
  EXPECT_NE(msg.find("s.json:4:"), std::string::npos) << msg;
}

TEST(Scenario, UnknownKeysRejected) {
  EXPECT_NE(error_of(R"({"sead": 1})").find("unknown key 'sead'"), std::string::npos);
  EXPECT_NE(error_of(R"({"topology": {"leafs": 4}})").find("topology"), std::string::npos);
}

TEST(Scenario, InvalidValuesRejected) {
  EXPECT_FALSE(error_of(R"({"topology": {"spine_ratio": "1/0"}})").empty());
  EXPECT_FALSE(error_of(R"({"topology": {"spine_ratio": "1/3"}})").empty());
  EXPECT_FALSE(error_of(R"({"traffic": {"kind": "tidal"}})").empty());
  EXPECT_FALSE(error_of(R"({"traffic": {"mice_size": [5]}})").empty());
  EXPECT_FALSE(error_of(R"({"detector": {"mode": "psychic"}})").empty());
  EXPECT_FALSE(error_of(R"({"detector": {"port_classes": {"99999": "EF"}}})").empty());
  EXPECT_FALSE(error_of(R"({"detector": {"threshold_bytes": 10}})").empty());  // MF size now crosses it
  EXPECT_FALSE(error_of(R"({"seed": "one"})").empty());
  EXPECT_FALSE(error_of(R"([1, 2])").empty());
}

TEST(Scenario, JsonRoundTrip) {
  const auto sc = parse_scenario(R"({"seed": 4, "topology": {"leaves": 4, "hosts_per_rack": 8},
    "traffic": {"kind": "mix", "flows": 50, "elephant_size": [2000000, 3000000]}})");
  const auto j = scenario_to_json(sc);
  EXPECT_EQ(scenario_to_json(scenario_from_json(j)).dump(), j.dump());
}

TEST(Scenario, ShippedScenariosLoad) {
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(LIGHTFDG_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_scenario(entry.path().string())) << entry.path();
    ++n;
  }
  EXPECT_GE(n, 5);
}

TEST(Scenario, MissingFile) { EXPECT_THROW(load_scenario("/nonexistent/s.json"), ConfigError); }
