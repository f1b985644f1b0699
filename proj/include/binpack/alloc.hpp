#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "binpack/env.hpp"

namespace binpack {

enum class PackSource { conveyor, buffer, bin };

struct AssignedPrimitive {
  TaskPrimitive primitive;
  int robot = kFront;
  PackSource source = PackSource::conveyor;  // where a PACK picks from; bin for UNPACK

  bool operator==(const AssignedPrimitive&) const = default;
};

struct Allocation {
  std::vector<std::vector<AssignedPrimitive>> queues;  // per robot
  std::vector<AssignedPrimitive> order;                // global execution order
  bool terminate = false;
};

// A new item waiting on the conveyor: its slot and the robots that reach it.
struct SlotRequest {
  int slot = 0;
  unsigned reach = 0b11;
};

// Nearest reachable robot per item, ties to the front robot; two items go to
// different robots when both can be served.
std::vector<int> assign_new_items(std::span<const SlotRequest> items, const ScenarioConfig& cfg);

// `world` is the state the action will be executed on.
Allocation allocate(std::span<const TaskPrimitive> action, const WorldState& world);

enum class AtomicKind { pick, place_to_bin, place_to_buffer, standby, ready };

struct AtomicAction {
  AtomicKind kind = AtomicKind::standby;
  PackSource source = PackSource::conveyor;  // PICK only
  ItemSpec item;
  Placement cells;  // footprint touched in the bin (PICK from bin, PLACE_TO_BIN)

  bool touches_bin() const {
    return kind == AtomicKind::place_to_bin || (kind == AtomicKind::pick && source == PackSource::bin);
  }
  bool operator==(const AtomicAction&) const = default;
};

const char* to_string(AtomicKind k);

struct RoundSchedule {
  std::vector<std::vector<AtomicAction>> programs;  // per robot, each ending with READY
  std::vector<std::vector<AtomicAction>> rounds;    // rounds[r][robot]
};

// `world` is the pre-action state; it supplies the footprints of items that
// are picked back out of the bin.
RoundSchedule sequence_atomic(const Allocation& allocation, const WorldState& world);

struct StepReport {
  int packing_steps = 0;
  int total_rounds = 0;
  std::vector<int> busy_rounds;  // per robot, rounds not spent in STANDBY or READY
};

StepReport count_steps(const RoundSchedule& schedule);

// One JSON object per (round, robot): round, robot, action, item, cells.
void write_schedule_jsonl(std::ostream& out, const RoundSchedule& schedule);

}  // namespace binpack
