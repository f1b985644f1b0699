#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "binpack/env.hpp"
#include "binpack/policy.hpp"

namespace binpack {

using Clock = std::chrono::steady_clock;

struct SearchConfig {
  std::optional<int> beam_width = 2;  // nullopt: no pruning
  int prune_floor = 3;                // below this many remaining items every candidate is kept
  bool require_full_pack = false;
  bool use_repack = false;
  std::chrono::milliseconds repack_budget{1000};
  bool rotation_enabled = true;
  std::uint64_t seed = 0;

  // Low-level policy; greedy with smallest-index ties when null.
  std::shared_ptr<const LowLevelPolicy> policy;

  // Optional wall-clock cap. Tree expansion checks it at every node and
  // repacking between subsets; used to bound whole episodes.
  std::optional<Clock::time_point> hard_deadline;

  // When set, every generated child is written here as one JSON line.
  std::ostream* trace = nullptr;
};

// A virtual high-level state. The packed set is implied by the bin; only its
// occupancy matters to expansion.
struct SearchNode {
  GridBin bin{1, 1};
  ConveyorState conveyor;
  std::vector<ItemSpec> buffered;  // C, all buffers flattened

  bool empty() const { return conveyor.queue.empty() && buffered.empty(); }
  bool accessible(const ItemSpec& item, const ScenarioConfig& cfg) const;
};

SearchNode make_root(const WorldState& world);

struct TupleEntry {
  ItemSpec item;
  Orientation orientation = Orientation::deg0;
  PositionAction action;
  int reward = 0;
  int depth = 0;

  bool operator==(const TupleEntry&) const = default;
};

struct CandidateSequence {
  std::vector<TupleEntry> tuples;
  bool reordered = false;

  bool contains_no_position(int width, int height) const;
};

// One (item, orientation) option at a node together with the policy decision.
struct Candidate {
  ItemSpec item;
  Orientation orientation = Orientation::deg0;
  PositionAction action;
  int reward = 0;
  bool no_position = false;
};

// Reward descending, then area descending, then id ascending, then deg0 first.
void reward_sorting(std::vector<Candidate>& candidates);

std::vector<Candidate> selection(std::vector<Candidate> sorted, std::optional<int> beam_width, int remaining_items,
                                 int prune_floor = 3);

// How items relate to the root: buffered, reachable now, or waiting (with
// their arrival position).
struct RootClasses {
  std::unordered_set<int> buffered;
  std::unordered_set<int> accessible;
  std::unordered_map<int, int> arrival;

  static RootClasses of(const SearchNode& root, const ScenarioConfig& cfg);
};

// Buffered items first, then root-accessible ones (tree order kept), then the
// rest by arrival.
CandidateSequence sequence_sorting(const CandidateSequence& chi, const RootClasses& classes);

struct SearchStats {
  std::uint64_t nodes = 0;
  std::uint64_t leaves = 0;
  bool aborted = false;  // hard deadline hit during expansion
};

struct ExpansionResult {
  std::vector<CandidateSequence> sequences;  // X
  bool solved = false;
  SearchStats stats;
};

ExpansionResult tree_expansion(const SearchNode& root, const ScenarioConfig& scenario, const SearchConfig& cfg);

struct EvaluatedSequence {
  CandidateSequence sequence;
  int mu = 0;
  int occupied = 0;  // simulated final occupied cells
  double util = 0.0;
  std::vector<TaskPrimitive> action;
  int depth_sum = 0;
  GridBin predicted_bin{1, 1};  // root bin plus the emitted packs
};

EvaluatedSequence forward_simulate(const CandidateSequence& chi, const WorldState& world, const SearchConfig& cfg);

enum class SelectionRanking {
  score_first,     // score, then occupied cells
  occupied_first,  // occupied cells, then score; used inside repack trials
};

// Highest score, then utilization, then smallest depth sum, then
// lexicographically smallest item ids; first wins on a full tie.
std::size_t best_action_selection(std::span<const EvaluatedSequence> evaluated,
                                  SelectionRanking ranking = SelectionRanking::score_first);

struct RepackResult {
  bool success = false;
  std::vector<TaskPrimitive> action;
  std::optional<EvaluatedSequence> best;
  int unpacked = 0;
  std::uint64_t subsets_tried = 0;
  std::vector<int> util_history;  // best occupied cells after each accepted improvement
};

// `best_occupied` is the baseline the any-time branch must beat.
RepackResult repack_trial(const WorldState& world, int best_occupied, const SearchConfig& cfg);

struct SearchOutcome {
  std::vector<TaskPrimitive> action;
  GridBin predicted_bin{1, 1};
  double util = 0.0;
  std::optional<CandidateSequence> chi_star;
  bool repack_attempted = false;
  bool repack_success = false;
  int repacked_items = 0;
  double repack_ms = 0.0;
  SearchStats stats;
};

SearchOutcome high_level_search(const WorldState& world, const SearchConfig& cfg);

}  // namespace binpack
