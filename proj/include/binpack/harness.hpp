#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "binpack/datagen.hpp"
#include "binpack/env.hpp"
#include "binpack/search.hpp"

namespace binpack {

inline constexpr const char* kEngineVersion = "1.0.0";

struct EpisodeConfig {
  SearchConfig search;
  // Wall-clock cap for the whole episode; becomes the search hard deadline.
  std::optional<std::chrono::milliseconds> episode_budget;
  int max_actions = 10000;  // guard against actions that never finish an episode
};

struct EpisodeReport {
  std::string scenario;
  std::size_t instance = 0;  // position in the suite's instance list
  std::uint64_t seed = 0;
  bool rotation = false;
  bool repack = false;
  double utilization = 0.0;
  int packed_items = 0;
  int packing_steps = 0;
  int repacked_items = 0;
  double repack_time_ms = 0.0;
  int actions = 0;
  bool truncated = false;          // stopped by max_actions rather than TERMINATE
  std::vector<ItemSpec> leftovers;  // offered but never packed, in arrival order

  bool operator==(const EpisodeReport&) const = default;
};

// Raised when the executed world diverges from the state the search predicted.
class EpisodeInconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One bin: observe, search, allocate, sequence, execute, until TERMINATE.
EpisodeReport run_episode(const InstanceRecord& instance, const ScenarioConfig& scenario, const EpisodeConfig& cfg);

// Random-instance protocol: after each bin the leftovers head the stream for
// the next one. Returns one report per bin.
std::vector<EpisodeReport> run_bin_sequence(const InstanceRecord& instance, const ScenarioConfig& scenario,
                                            const EpisodeConfig& cfg, int bins);

struct ScenarioAggregate {
  std::string scenario;
  int episodes = 0;
  double mean_utilization = 0.0;
  long total_packed = 0;
  long total_steps = 0;
  long total_repacked = 0;
  double mean_repacked = 0.0;
  double mean_repack_ms = 0.0;

  bool operator==(const ScenarioAggregate&) const = default;
};

struct SuiteReport {
  std::vector<EpisodeReport> episodes;  // sorted by scenario order, then instance
  std::vector<ScenarioAggregate> aggregates;
  std::string engine_version = kEngineVersion;
  std::string config_hash;
};

// Means and totals per scenario, in order of first appearance.
std::vector<ScenarioAggregate> aggregate(std::span<const EpisodeReport> episodes);

struct SuiteConfig {
  std::vector<ScenarioConfig> scenarios;
  EpisodeConfig episode;
  int threads = 0;  // 0: hardware concurrency
};

// Every scenario sees the same instances, hence the same arrival streams.
SuiteReport run_suite(std::span<const InstanceRecord> instances, const SuiteConfig& cfg);

enum class Baseline { first_fit, shelf_next_fit };

Baseline parse_baseline(std::string_view name);
const char* to_string(Baseline b);

// Online, no rotation, no repacking: items are placed in arrival order and the
// episode stops at the first item that cannot be placed.
EpisodeReport run_baseline_episode(Baseline kind, const InstanceRecord& instance);
SuiteReport run_baseline(Baseline kind, std::span<const InstanceRecord> instances, int threads = 0);

// FNV-1a over a canonical rendering of the run configuration.
std::string config_hash(const SuiteConfig& cfg);

void write_csv(std::ostream& out, const SuiteReport& report);
void write_json(std::ostream& out, const SuiteReport& report);

}  // namespace binpack
