#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "binpack/grid.hpp"

namespace binpack {

// Robot 0 sits at the front (downstream) end of the conveyor, robot 1 at the rear.
inline constexpr int kFront = 0;
inline constexpr int kRear = 1;

struct ScenarioConfig {
  std::string name;
  int n_robot = 1;
  int n_recognized = 1;  // items visible to the planner
  int n_accessible = 1;  // items each robot can reach
  int n_overlap = 0;     // items reachable by both robots (dual only)
  std::array<double, 2> robot_x{0.0, 0.0};  // base positions along the conveyor, in slots
  std::optional<int> buffer_cap;             // per robot; nullopt means unbounded
};

int n_max(const ScenarioConfig& cfg);

// Throws ContractViolation if the configuration is inconsistent.
void validate(const ScenarioConfig& cfg);

// S-R1A1, S-R5A1, S-R5A3, D-R2A2O2, D-R5A2O2, D-R5A3O1.
ScenarioConfig scenario_preset(std::string_view name);
const std::vector<std::string>& preset_names();

struct ZoneCounts {
  int beta = 0;     // front-exclusive
  int overlap = 0;  // shared (all positioned items for a single robot)
  int alpha = 0;    // rear-exclusive

  int total() const { return beta + overlap + alpha; }
  bool operator==(const ZoneCounts&) const = default;
};

// Zone split for k_total < n_max, given the rear-exclusive count before the
// conveyor moves.
ZoneCounts balance_zones(int k_total, int k_alpha_prev, const ScenarioConfig& cfg);

enum class Zone { beta, overlap, alpha, unpositioned };

struct ConveyorState {
  std::vector<ItemSpec> queue;  // recognized items, front first
  ZoneCounts zones;             // queue[0, k_total) are positioned: beta, then overlap, then alpha

  int k_total() const { return zones.total(); }
  Zone zone_of(std::size_t pos) const;
  bool reachable(std::size_t pos, int robot, const ScenarioConfig& cfg) const;
  std::optional<std::size_t> position_of(int item_id) const;

  // Drops queue[pos] and debits the zone it occupied.
  void remove(std::size_t pos);
};

ConveyorState advance_conveyor(ConveyorState state, const ScenarioConfig& cfg);

enum class PrimitiveKind { pack, unpack, terminate };

struct TaskPrimitive {
  PrimitiveKind kind = PrimitiveKind::terminate;
  ItemSpec item;
  Orientation orientation = Orientation::deg0;
  int x = 0;
  int y = 0;

  static TaskPrimitive pack(const ItemSpec& item, Orientation phi, int x, int y) {
    return {PrimitiveKind::pack, item, phi, x, y};
  }
  static TaskPrimitive unpack(const ItemSpec& item) { return {PrimitiveKind::unpack, item}; }
  static TaskPrimitive terminate() { return {}; }

  bool operator==(const TaskPrimitive&) const = default;
};

std::string to_string(const TaskPrimitive& p);

class WorldError : public std::runtime_error {
 public:
  enum class Kind { item_unavailable, item_inaccessible, buffer_full, episode_terminated };

  WorldError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct WorldState {
  std::shared_ptr<const ScenarioConfig> scenario;
  GridBin bin{1, 1};
  ConveyorState conveyor;                      // N
  std::deque<ItemSpec> upcoming;               // not yet recognized; never visible to planning
  bool arrivals_pending = false;               // set on observations when `upcoming` was non-empty
  std::vector<Placement> packed;               // I, in pack order
  std::vector<std::vector<ItemSpec>> buffers;  // C_i, in entry order
  std::uint64_t next_seq = 1;
  int step_count = 0;
  bool terminated = false;
  std::vector<TaskPrimitive> executed;

  const ScenarioConfig& config() const { return *scenario; }
  bool more_arrivals() const { return !upcoming.empty() || arrivals_pending; }

  // Copy with unrecognized arrivals stripped; what planning is allowed to see.
  WorldState observe() const;

  std::vector<ItemSpec> buffered_items() const;
  std::optional<int> buffer_holding(int item_id) const;
  const Placement* find_packed(int item_id) const;
};

WorldState make_world(int width, int height, std::span<const ItemSpec> arrivals, ScenarioConfig cfg);

// Single-robot: the first n_A queue items. Dual: front robot sees beta and
// overlap, rear robot sees overlap and alpha. A robot's own buffer is always
// accessible.
std::vector<ItemSpec> accessible_items(const WorldState& state, int robot);

// PACK takes the item from N or C and refills the recognized window;
// UNPACK moves the item into `buffer_robot`'s buffer; TERMINATE freezes.
void execute(WorldState& state, const TaskPrimitive& p, int buffer_robot = kFront);
WorldState exec_primitive(WorldState state, const TaskPrimitive& p, int buffer_robot = kFront);

int high_level_reward(std::span<const TaskPrimitive> executed);

}  // namespace binpack
