// lightfdg: provisioning, simulation and detector replay from the shell.
//
// Exit codes: 0 success, 1 bad input or usage, 2 infeasible request.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lightfdg/lightfdg.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using namespace lightfdg;

namespace {

struct DetectorOverrides {
  std::optional<std::uint64_t> threshold_bytes;
  std::optional<std::string> mode;
  std::optional<std::uint32_t> ack_sample_rate;
  std::optional<std::int64_t> notification_delay_ns;
  bool no_stop_useless = false;
  bool no_preclassify = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--threshold-bytes", threshold_bytes, "EF threshold in bytes");
    cmd->add_option("--mode", mode, "detector placement")->check(CLI::IsMember({"in-network", "centralized"}));
    cmd->add_option("--ack-sample-rate", ack_sample_rate, "centralized 1-in-S ACK sampling");
    cmd->add_option("--notification-delay-ns", notification_delay_ns, "centralized per-message delay");
    cmd->add_flag("--no-stop-useless", no_stop_useless, "keep capturing ACKs of classified flows");
    cmd->add_flag("--no-preclassify", no_preclassify, "disable port pre-classification");
  }

  void apply(DetectorConfig& d) const {
    if (threshold_bytes) d.threshold_bytes = *threshold_bytes;
    if (mode) d.mode = parse_detection_mode(*mode);
    if (ack_sample_rate) d.ack_sample_rate = *ack_sample_rate;
    if (notification_delay_ns) d.notification_delay_ns = *notification_delay_ns;
    if (no_stop_useless) d.stop_useless = false;
    if (no_preclassify) d.preclassify = false;
    d.validate();
  }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  return out;
}

int cmd_provision(const std::string& scenario_path, const std::string& out_path, std::optional<std::uint64_t> seed,
                  std::optional<int> k_paths) {
  ScenarioConfig sc = load_scenario(scenario_path);
  if (k_paths) sc.topology.k_paths = *k_paths;
  sc.validate();
  const std::uint64_t s = seed.value_or(sc.seed);
  const auto flows = make_flows(sc.traffic, sc.racks(), s);
  PhysicalTopology topo = sc.topology.build();
  const auto result = provision_all(topo, scenario_demands(sc, flows), sc.topology.k_paths, s);
  const fs::path out(out_path);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  auto f = open_out(out);
  f << provisioning_to_json(result, topo).dump(2) << '\n';
  std::cout << provisioning_summary(result);
  return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::vector<std::string>& policy_names,
                 std::vector<std::uint64_t> seeds, const std::string& out_dir, std::optional<int> k_paths,
                 const DetectorOverrides& det) {
  if (policy_names.empty()) throw ConfigError("at least one --policy is required (valid: ecmp, ecmp-fso, fg-fso, lightfdg)");
  std::vector<Policy> policies;
  for (const auto& p : policy_names) policies.push_back(parse_policy(p));
  ScenarioConfig sc = load_scenario(scenario_path);
  if (k_paths) sc.topology.k_paths = *k_paths;
  det.apply(sc.detector);
  sc.traffic.threshold_bytes = sc.detector.threshold_bytes;
  sc.validate();
  if (seeds.empty()) seeds.push_back(sc.seed);

  const fs::path dir(out_dir);
  ensure_dir(dir);
  tools::RunManifest manifest{"simulate", scenario_path, policy_names, seeds, dir, {}};
  std::ostringstream summary;
  write_summary_header(summary);
  for (Policy p : policies) {
    for (std::uint64_t seed : seeds) {
      const MetricsReport report = run(sc, p, seed);
      const fs::path name = "flows_" + std::string(to_string(p)) + "_seed" + std::to_string(seed) + ".csv";
      auto out = open_out(dir / name);
      write_flow_csv(out, report);
      out.close();
      manifest.files.push_back(name);
      write_summary_rows(summary, report);
      std::cout << to_string(p) << " seed " << seed << ": MF deadline satisfaction " << report.mice.deadline_satisfaction
                << ", EF throughput " << report.elephant.throughput_bps << " bit/s\n";
    }
  }
  auto out = open_out(dir / "summary.csv");
  out << summary.str();
  out.close();
  manifest.files.push_back("summary.csv");
  manifest.write();
  return 0;
}

void write_overhead_row(std::ostream& os, std::string_view name, const DetectionMetrics& m) {
  os << name << ',' << m.counters.packets_total << ',' << m.counters.packets_captured << ','
     << m.counters.notifications << ',' << m.counters.reconfigurations << ',' << m.true_negative_rate << ','
     << m.false_positive_rate << ',' << m.accuracy << '\n';
}

int cmd_detect_replay(const std::string& trace_path, const std::string& out_dir, const DetectorOverrides& det,
                      std::uint32_t baseline_rate, std::uint64_t seed) {
  DetectorConfig config;
  det.apply(config);
  std::ifstream in(trace_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open trace '" + trace_path + "'");
  auto events = read_trace(in);
  std::stable_sort(events.begin(), events.end(),
                   [](const PacketEvent& a, const PacketEvent& b) { return a.ts_ns < b.ts_ns; });

  Detector detector(config);
  for (const auto& e : events) detector.observe(e);
  const auto truth = ground_truth_from_trace(events, config.threshold_bytes);
  const auto metrics = detection_metrics(detector, truth);

  const fs::path dir(out_dir);
  ensure_dir(dir);
  tools::RunManifest manifest{"detect-replay", trace_path, {std::string(to_string(config.mode))}, {seed}, dir, {}};
  {
    auto out = open_out(dir / "detection.csv");
    write_detection_csv(out, metrics);
  }
  manifest.files.push_back("detection.csv");

  std::ostringstream overhead;
  overhead << "detector,packets_total,packets_captured,notifications,reconfigurations,true_negative_rate,"
              "false_positive_rate,accuracy\n";
  write_overhead_row(overhead, to_string(config.mode), metrics);
  std::cout << to_string(config.mode) << ": " << metrics.elephants << " EF, " << metrics.mice << " MF, "
            << metrics.true_negatives << " true-negatives, " << metrics.false_positives << " false-positives\n";

  if (baseline_rate > 0) {
    SamplingBaseline baseline(baseline_rate, config.threshold_bytes, seed);
    for (const auto& e : events) baseline.observe(e);
    const auto bm = detection_metrics(baseline, truth);
    auto out = open_out(dir / "baseline_detection.csv");
    write_detection_csv(out, bm);
    out.close();
    manifest.files.push_back("baseline_detection.csv");
    write_overhead_row(overhead, "sampling-1/" + std::to_string(baseline_rate), bm);
    std::cout << "sampling 1/" << baseline_rate << ": accuracy " << bm.accuracy << '\n';
  }
  {
    auto out = open_out(dir / "overhead.csv");
    out << overhead.str();
  }
  manifest.files.push_back("overhead.csv");
  manifest.write();
  return 0;
}

int cmd_gen_trace(const std::string& scenario_path, const std::string& out_path, std::optional<std::uint64_t> seed) {
  const ScenarioConfig sc = load_scenario(scenario_path);
  const std::uint64_t s = seed.value_or(sc.seed);
  const auto flows = make_flows(sc.traffic, sc.racks(), s);
  PacketGenConfig pg = sc.packets;
  pg.isn_seed = s;
  auto stream = packet_event_stream(flows, sc.racks(), pg);
  const fs::path out(out_path);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  auto f = open_out(out);
  write_trace_header(f);
  PacketEvent e;
  std::uint64_t n = 0;
  while (stream.next(e)) {
    write_trace_row(f, e);
    ++n;
  }
  std::cout << flows.size() << " flows, " << n << " packet events\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lightpath provisioning, flow grooming and elephant-flow detection for WDM-FSO leaf-spine fabrics"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out;
  std::string trace;
  std::vector<std::string> policies;
  std::vector<std::uint64_t> seeds;
  std::optional<std::uint64_t> seed;
  std::optional<int> k_paths;
  std::uint32_t baseline_rate = 0;
  DetectorOverrides det;

  auto* provision = app.add_subcommand("provision", "provision MF and EF lightpaths for a scenario");
  provision->add_option("--scenario", scenario, "scenario JSON")->required();
  provision->add_option("--out", out, "lightpath table JSON to write")->required();
  provision->add_option("--seed", seed, "seed (default: the scenario's)");
  provision->add_option("--k-paths", k_paths, "candidate paths per lightpath")->check(CLI::PositiveNumber);

  auto* simulate_cmd = app.add_subcommand("simulate", "run policies over seeds and write per-flow CSVs");
  simulate_cmd->add_option("--scenario", scenario, "scenario JSON")->required();
  simulate_cmd->add_option("--policy", policies, "ecmp | ecmp-fso | fg-fso | lightfdg (repeatable)");
  simulate_cmd->add_option("--seed", seeds, "seed (repeatable; default: the scenario's)");
  simulate_cmd->add_option("--out", out, "output directory")->required();
  simulate_cmd->add_option("--k-paths", k_paths, "candidate paths per lightpath")->check(CLI::PositiveNumber);
  det.attach(simulate_cmd);

  auto* replay = app.add_subcommand("detect-replay", "run the detector over a packet-event trace");
  replay->add_option("--trace", trace, "trace CSV")->required();
  replay->add_option("--out", out, "output directory")->required();
  replay->add_option("--baseline-sample-rate", baseline_rate, "also run 1-in-S random sampling (0: off)");
  std::uint64_t replay_seed = 1;
  replay->add_option("--seed", replay_seed, "seed of the sampling baseline");
  det.attach(replay);

  auto* gen = app.add_subcommand("gen-trace", "render a scenario's flows as a packet-event trace");
  gen->add_option("--scenario", scenario, "scenario JSON")->required();
  gen->add_option("--out", out, "trace CSV to write")->required();
  gen->add_option("--seed", seed, "seed (default: the scenario's)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (provision->parsed()) return cmd_provision(scenario, out, seed, k_paths);
    if (simulate_cmd->parsed()) return cmd_simulate(scenario, policies, seeds, out, k_paths, det);
    if (replay->parsed()) return cmd_detect_replay(trace, out, det, baseline_rate, replay_seed);
    if (gen->parsed()) return cmd_gen_trace(scenario, out, seed);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
