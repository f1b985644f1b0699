// Command-line front end: run suites, generate instances, run baselines and
// serve the greedy policy over the line protocol.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>

#include "binpack/datagen.hpp"
#include "binpack/harness.hpp"
#include "binpack/policy.hpp"

using namespace binpack;

namespace {

void print_summary(const SuiteReport& report) {
  std::cout << std::left << std::setw(16) << "scenario" << std::right << std::setw(10) << "episodes" << std::setw(10)
            << "util_%" << std::setw(10) << "packed" << std::setw(10) << "steps" << std::setw(10) << "repacked"
            << '\n';
  for (const ScenarioAggregate& a : report.aggregates) {
    std::cout << std::left << std::setw(16) << a.scenario << std::right << std::setw(10) << a.episodes << std::setw(10)
              << std::fixed << std::setprecision(2) << a.mean_utilization * 100.0 << std::setw(10) << a.total_packed
              << std::setw(10) << a.total_steps << std::setw(10) << a.total_repacked << '\n';
  }
  std::cout << "config " << report.config_hash << '\n';
}

void emit(const SuiteReport& report, const std::string& csv_path, const std::string& json_path) {
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write " + csv_path);
    write_csv(out, report);
  }
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot write " + json_path);
    write_json(out, report);
  }
  print_summary(report);
}

const std::map<std::string, long> kTimeUnits{{"ms", 1}, {"s", 1000}, {"min", 60000}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical 2D bin packing engine"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run the search engine over an instance file");
  std::vector<std::string> scenarios;
  std::string instances_path, csv_path, json_path, policy_cmd;
  bool rotation = false, repack = false, full_pack = false;
  long repack_budget_ms = 1000, episode_budget_ms = 0, policy_timeout_ms = 500;
  int beam = 2, threads = 0;
  std::uint64_t seed = 0;
  run->add_option("--scenario", scenarios, "Scenario presets, comma separated, or 'all'")
      ->required()
      ->delimiter(',');
  run->add_option("--instances", instances_path, "Instance file (JSONL, optionally gzip)")->required()->check(CLI::ExistingFile);
  run->add_flag("--rotation", rotation, "Allow 90 degree rotations");
  run->add_flag("--repack", repack, "Enable repacking");
  run->add_flag("--full-pack", full_pack, "Only accept solutions that fill the bin");
  run->add_option("--repack-budget", repack_budget_ms, "Repack time budget per search (e.g. 1s, 500ms)")
      ->transform(CLI::AsNumberWithUnit(kTimeUnits, CLI::AsNumberWithUnit::CASE_SENSITIVE, "TIME"));
  run->add_option("--episode-budget", episode_budget_ms, "Wall-clock cap per episode, 0 for none")
      ->transform(CLI::AsNumberWithUnit(kTimeUnits, CLI::AsNumberWithUnit::CASE_SENSITIVE, "TIME"));
  run->add_option("--beam", beam, "Beam width K, 0 for unbounded")->check(CLI::NonNegativeNumber);
  run->add_option("--seed", seed, "Search seed");
  run->add_option("--threads", threads, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
  run->add_option("--policy-cmd", policy_cmd, "External low-level policy command (line protocol)");
  run->add_option("--policy-timeout", policy_timeout_ms, "External policy reply timeout")
      ->transform(CLI::AsNumberWithUnit(kTimeUnits, CLI::AsNumberWithUnit::CASE_SENSITIVE, "TIME"));
  run->add_option("--out", csv_path, "CSV report path");
  run->add_option("--json", json_path, "JSON report path");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate instances");
  gen->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
  std::string mode = "full-set", gen_out;
  int width = 10, height = 10, count = 10000, items = 64;
  double sigma = 2.0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--mode", mode, "full-set or random")->check(CLI::IsMember({"full-set", "random"}));
  gen->add_option("--w", width, "Bin width")->check(CLI::PositiveNumber);
  gen->add_option("--h", height, "Bin height")->check(CLI::PositiveNumber);
  gen->add_option("--count", count, "Number of instances")->check(CLI::PositiveNumber);
  gen->add_option("--sigma", sigma, "Gaussian spread for full sets")->check(CLI::PositiveNumber);
  gen->add_option("--items", items, "Items per random instance")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Base seed; instance i uses seed + i");
  gen->add_option("--out", gen_out, "Output path (.gz compresses); stdout if omitted");

  // baseline
  auto* base = app.add_subcommand("baseline", "Run a heuristic baseline");
  std::string base_name, base_instances, base_csv, base_json;
  int base_threads = 0;
  base->add_option("--name", base_name, "first-fit or shelf-next-fit")->required();
  base->add_option("--instances", base_instances, "Instance file")->required()->check(CLI::ExistingFile);
  base->add_option("--threads", base_threads, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
  base->add_option("--out", base_csv, "CSV report path");
  base->add_option("--json", base_json, "JSON report path");

  // serve-policy
  auto* serve = app.add_subcommand("serve-policy", "Answer QUERY lines on stdin with the greedy policy");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      SuiteConfig cfg;
      if (scenarios.size() == 1 && scenarios[0] == "all") scenarios = preset_names();
      for (const std::string& s : scenarios) cfg.scenarios.push_back(scenario_preset(s));
      SearchConfig& q = cfg.episode.search;
      q.rotation_enabled = rotation;
      q.use_repack = repack;
      q.require_full_pack = full_pack;
      q.repack_budget = std::chrono::milliseconds(repack_budget_ms);
      q.beam_width = beam > 0 ? std::optional<int>(beam) : std::nullopt;
      q.seed = seed;
      if (episode_budget_ms > 0) cfg.episode.episode_budget = std::chrono::milliseconds(episode_budget_ms);
      cfg.threads = threads;
      if (!policy_cmd.empty()) {
        ExternalPolicyOptions opts;
        opts.timeout = std::chrono::milliseconds(policy_timeout_ms);
        q.policy = std::make_shared<ExternalPolicyHandle>(policy_cmd, opts);
        // The child answers one query at a time.
        cfg.threads = 1;
      }
      const std::vector<InstanceRecord> instances = read_instances(instances_path);
      emit(run_suite(instances, cfg), csv_path, json_path);
    } else if (*gen) {
      std::vector<InstanceRecord> records;
      records.reserve(static_cast<std::size_t>(count));
      for (int i = 0; i < count; ++i) {
        const std::uint64_t s = gen_seed + static_cast<std::uint64_t>(i);
        records.push_back(mode == "full-set" ? generate_full_set(width, height, sigma, s)
                                             : generate_random_instance(width, height, items, s));
      }
      if (gen_out.empty()) {
        for (const InstanceRecord& r : records) std::cout << serialize(r) << '\n';
      } else {
        write_instances(gen_out, records);
      }
    } else if (*base) {
      const std::vector<InstanceRecord> instances = read_instances(base_instances);
      emit(run_baseline(parse_baseline(base_name), instances, base_threads), base_csv, base_json);
    } else if (*serve) {
      std::ios::sync_with_stdio(false);
      serve_policy(std::cin, std::cout, GreedyPolicy{});
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
