#include <climits>
#include <random>
#include <sstream>

#include "binpack/alloc.hpp"
#include "binpack/search.hpp"
#include "doctest.h"

using namespace binpack;

namespace {

ScenarioConfig wide_dual() {
  ScenarioConfig cfg{"wide", 2, 5, 5, 5, {1.0, 4.0}, std::nullopt};
  return cfg;
}

std::vector<ItemSpec> unit_items(int n, int first_id = 0) {
  std::vector<ItemSpec> out;
  for (int i = 0; i < n; ++i) out.push_back({first_id + i, 1, 1});
  return out;
}

std::vector<AtomicKind> kinds(const std::vector<AtomicAction>& prog) {
  std::vector<AtomicKind> out;
  for (const auto& a : prog) out.push_back(a.kind);
  return out;
}

bool hold_one(const std::vector<AtomicAction>& prog) {
  bool holding = false;
  for (const auto& a : prog) {
    if (a.kind == AtomicKind::pick) {
      if (holding) return false;
      holding = true;
    } else if (a.kind == AtomicKind::place_to_bin || a.kind == AtomicKind::place_to_buffer) {
      if (!holding) return false;
      holding = false;
    }
  }
  return !holding;
}

bool cells_overlap(const Placement& a, const Placement& b) {
  const RotatedSize sa = a.size(), sb = b.size();
  for (int y = a.y; y < a.y + sa.ly; ++y)
    for (int x = a.x; x < a.x + sa.lx; ++x)
      if (x >= b.x && x < b.x + sb.lx && y >= b.y && y < b.y + sb.ly) return true;
  return false;
}

}  // namespace

TEST_CASE("new items go to the nearest robot") {
  const ScenarioConfig cfg = wide_dual();
  const std::vector<SlotRequest> two{{0, 0b11}, {3, 0b11}};
  CHECK(assign_new_items(two, cfg) == std::vector<int>{kFront, kRear});
  const std::vector<SlotRequest> swapped{{3, 0b11}, {0, 0b11}};
  CHECK(assign_new_items(swapped, cfg) == std::vector<int>{kRear, kFront});

  // Equidistant single item goes to the front robot.
  ScenarioConfig mid = cfg;
  mid.robot_x = {0.0, 4.0};
  const std::vector<SlotRequest> one{{2, 0b11}};
  CHECK(assign_new_items(one, mid) == std::vector<int>{kFront});
  // Reach beats distance.
  const std::vector<SlotRequest> rear_only{{0, 0b10}};
  CHECK(assign_new_items(rear_only, mid) == std::vector<int>{kRear});
  // Two items nearest to the same robot still go to different robots.
  const std::vector<SlotRequest> crowd{{0, 0b11}, {1, 0b11}};
  CHECK(assign_new_items(crowd, mid) == std::vector<int>{kFront, kRear});
}

TEST_CASE("allocation on the wide dual preset") {
  const std::vector<ItemSpec> items = unit_items(5);
  const WorldState w = make_world(5, 5, items, wide_dual());
  const std::vector<TaskPrimitive> action{TaskPrimitive::pack(items[3], Orientation::deg0, 1, 1),
                                          TaskPrimitive::pack(items[0], Orientation::deg0, 0, 0)};
  const Allocation a = allocate(action, w);
  REQUIRE(a.order.size() == 2);
  CHECK(a.order[0].robot == kRear);
  CHECK(a.order[1].robot == kFront);
  CHECK(a.order[0].source == PackSource::conveyor);
  CHECK_FALSE(a.terminate);
}

TEST_CASE("unpacks alternate from the lighter robot and repacks reverse") {
  // Front robot already holds two buffered items it will place this step.
  const std::vector<ItemSpec> items = unit_items(5);
  WorldState w = make_world(5, 5, items, scenario_preset("D-R5A3O1"));
  for (int i = 0; i < 5; ++i) execute(w, TaskPrimitive::pack(items[i], Orientation::deg0, i, 0));
  execute(w, TaskPrimitive::unpack(items[0]), kFront);
  execute(w, TaskPrimitive::unpack(items[1]), kFront);

  const std::vector<TaskPrimitive> action{
      TaskPrimitive::unpack(items[2]), TaskPrimitive::unpack(items[3]), TaskPrimitive::unpack(items[4]),
      TaskPrimitive::pack(items[0], Orientation::deg0, 0, 1), TaskPrimitive::pack(items[1], Orientation::deg0, 1, 1)};
  const Allocation a = allocate(action, w);
  REQUIRE(a.order.size() == 5);
  CHECK(a.order[0].robot == kRear);
  CHECK(a.order[1].robot == kFront);
  CHECK(a.order[2].robot == kRear);
  // Buffered items leave last-in first-out.
  CHECK(a.order[3].primitive.item == items[1]);
  CHECK(a.order[4].primitive.item == items[0]);
  CHECK(a.order[3].source == PackSource::buffer);

  const std::vector<ItemSpec> two = unit_items(2);
  WorldState v = make_world(5, 5, two, scenario_preset("D-R5A3O1"));
  execute(v, TaskPrimitive::pack(two[0], Orientation::deg0, 0, 0));
  execute(v, TaskPrimitive::pack(two[1], Orientation::deg0, 1, 0));
  const std::vector<TaskPrimitive> swap{TaskPrimitive::unpack(two[0]), TaskPrimitive::unpack(two[1]),
                                        TaskPrimitive::pack(two[0], Orientation::deg0, 1, 0),
                                        TaskPrimitive::pack(two[1], Orientation::deg0, 0, 0)};
  const Allocation b = allocate(swap, v);
  REQUIRE(b.order.size() == 4);
  CHECK(b.order[0].robot == kFront);
  CHECK(b.order[1].robot == kRear);
  CHECK(b.order[2].primitive == swap[3]);
  CHECK(b.order[2].robot == kRear);
  CHECK(b.order[3].primitive == swap[2]);
  CHECK(b.order[3].robot == kFront);

  CHECK_THROWS_AS(allocate(std::vector<TaskPrimitive>{TaskPrimitive::pack({42, 1, 1}, Orientation::deg0, 0, 0)}, v),
                  ContractViolation);
}

TEST_CASE("a single robot takes every primitive") {
  const std::vector<ItemSpec> items = unit_items(3);
  WorldState w = make_world(3, 3, items, scenario_preset("S-R5A3"));
  execute(w, TaskPrimitive::pack(items[0], Orientation::deg0, 0, 0));
  const std::vector<TaskPrimitive> action{TaskPrimitive::unpack(items[0]),
                                          TaskPrimitive::pack(items[0], Orientation::deg0, 2, 2),
                                          TaskPrimitive::pack(items[1], Orientation::deg0, 0, 0),
                                          TaskPrimitive::terminate()};
  const Allocation a = allocate(action, w);
  REQUIRE(a.order.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.order[i].primitive == action[i]);
    CHECK(a.order[i].robot == kFront);
  }
  CHECK(a.terminate);
}

TEST_CASE("atomic programs") {
  const std::vector<ItemSpec> items = unit_items(6);
  WorldState w = make_world(4, 4, items, scenario_preset("S-R5A3"));
  {
    const std::vector<TaskPrimitive> one{TaskPrimitive::pack(items[0], Orientation::deg0, 0, 0)};
    const RoundSchedule s = sequence_atomic(allocate(one, w), w);
    CHECK(kinds(s.programs[0]) == std::vector<AtomicKind>{AtomicKind::pick, AtomicKind::place_to_bin, AtomicKind::ready});
    CHECK(s.programs[0][0].source == PackSource::conveyor);
    CHECK(count_steps(s).packing_steps == 1);
  }
  execute(w, TaskPrimitive::pack(items[0], Orientation::deg0, 0, 0));
  {
    const std::vector<TaskPrimitive> move{TaskPrimitive::unpack(items[0]),
                                          TaskPrimitive::pack(items[0], Orientation::deg0, 3, 3)};
    const RoundSchedule s = sequence_atomic(allocate(move, w), w);
    CHECK(kinds(s.programs[0]) == std::vector<AtomicKind>{AtomicKind::pick, AtomicKind::place_to_bin, AtomicKind::ready});
    CHECK(s.programs[0][0].source == PackSource::bin);
    CHECK(s.programs[0][0].cells.x == 0);
    CHECK(s.programs[0][1].cells.x == 3);
  }
  {
    // Earlier unpacks go through the buffer; only the last one is fused.
    execute(w, TaskPrimitive::pack(items[1], Orientation::deg0, 1, 0));
    const std::vector<TaskPrimitive> two{TaskPrimitive::unpack(items[0]), TaskPrimitive::unpack(items[1]),
                                         TaskPrimitive::pack(items[1], Orientation::deg0, 3, 3),
                                         TaskPrimitive::pack(items[0], Orientation::deg0, 2, 3)};
    const RoundSchedule s = sequence_atomic(allocate(two, w), w);
    CHECK(kinds(s.programs[0]) == std::vector<AtomicKind>{AtomicKind::pick, AtomicKind::place_to_buffer,
                                                          AtomicKind::pick, AtomicKind::place_to_bin,
                                                          AtomicKind::pick, AtomicKind::place_to_bin, AtomicKind::ready});
  }
}

TEST_CASE("lighter robot opens with standby") {
  const std::vector<ItemSpec> items = unit_items(6);
  WorldState w = make_world(4, 4, items, scenario_preset("D-R5A3O1"));
  for (int i = 0; i < 4; ++i) execute(w, TaskPrimitive::pack(items[i], Orientation::deg0, i, 0));
  for (int i = 0; i < 4; ++i) execute(w, TaskPrimitive::unpack(items[i]), i < 3 ? kFront : kRear);
  // Front: three buffered packs plus one fresh; rear: one buffered pack.
  std::vector<TaskPrimitive> action;
  for (int i = 0; i < 4; ++i) action.push_back(TaskPrimitive::pack(items[i], Orientation::deg0, i, 1));
  const Allocation a = allocate(action, w);
  REQUIRE(a.queues[0].size() == 3);
  REQUIRE(a.queues[1].size() == 1);
  const RoundSchedule s = sequence_atomic(a, w);
  CHECK(s.programs[1].front().kind == AtomicKind::standby);
  CHECK(s.programs[0].front().kind == AtomicKind::pick);
  CHECK(s.programs[0].back().kind == AtomicKind::ready);
  CHECK(s.programs[1].back().kind == AtomicKind::ready);
  for (const auto& round : s.rounds) CHECK(round.size() == 2);
}

TEST_CASE("equal loads need no standby") {
  const std::vector<ItemSpec> items = unit_items(5);
  const WorldState w = make_world(4, 4, items, scenario_preset("D-R5A3O1"));
  const std::vector<TaskPrimitive> action{TaskPrimitive::pack(items[0], Orientation::deg0, 0, 0),
                                          TaskPrimitive::pack(items[4], Orientation::deg0, 3, 3)};
  const RoundSchedule s = sequence_atomic(allocate(action, w), w);
  CHECK(s.programs[0].front().kind == AtomicKind::pick);
  CHECK(s.programs[1].front().kind == AtomicKind::pick);
  CHECK(count_steps(s).packing_steps == 1);
  CHECK(count_steps(s).total_rounds == 3);
}

TEST_CASE("step counts across actions") {
  // Single robot: one packing step per packed item.
  {
    const std::vector<ItemSpec> items = unit_items(5);
    WorldState w = make_world(5, 5, items, scenario_preset("S-R5A3"));
    int steps = 0;
    for (int i = 0; i < 5; ++i) {
      const std::vector<TaskPrimitive> act{TaskPrimitive::pack(items[i], Orientation::deg0, i, 0)};
      steps += count_steps(sequence_atomic(allocate(act, w), w)).packing_steps;
      execute(w, act[0]);
    }
    CHECK(steps == 5);
  }
  // Dual robots: 2 + 2 synchronized packs, then 2 + 2 + 1.
  for (int total : {4, 5}) {
    const std::vector<ItemSpec> items = unit_items(total);
    WorldState w = make_world(5, 5, items, scenario_preset("D-R2A2O2"));
    int steps = 0, packed = 0;
    while (packed < total) {
      std::vector<TaskPrimitive> act;
      for (const ItemSpec& it : accessible_items(w, kFront)) {
        if (act.size() == 2) break;
        act.push_back(TaskPrimitive::pack(it, Orientation::deg0, packed % 5, packed / 5));
        ++packed;
      }
      const Allocation a = allocate(act, w);
      steps += count_steps(sequence_atomic(a, w)).packing_steps;
      for (const auto& ap : a.order) execute(w, ap.primitive, ap.robot);
    }
    CHECK(steps == (total == 4 ? 2 : 3));
  }
}

TEST_CASE("placements wait for the other robot to clear their cells") {
  const std::vector<ItemSpec> items{{0, 2, 1}, {1, 2, 1}, {2, 1, 1}, {3, 1, 1}};
  WorldState w = make_world(2, 2, items, scenario_preset("D-R5A2O2"));
  execute(w, TaskPrimitive::pack(items[0], Orientation::deg0, 0, 0));
  execute(w, TaskPrimitive::pack(items[1], Orientation::deg0, 0, 1));
  // Front unpacks item 0 and moves it down; rear unpacks item 1 and moves it up.
  const std::vector<TaskPrimitive> swap{TaskPrimitive::unpack(items[0]), TaskPrimitive::unpack(items[1]),
                                        TaskPrimitive::pack(items[1], Orientation::deg0, 0, 0),
                                        TaskPrimitive::pack(items[0], Orientation::deg0, 0, 1)};
  const RoundSchedule s = sequence_atomic(allocate(swap, w), w);
  for (std::size_t r = 0; r < s.rounds.size(); ++r) {
    for (std::size_t i = 0; i < 2; ++i) {
      const AtomicAction& place = s.rounds[r][i];
      if (place.kind != AtomicKind::place_to_bin) continue;
      for (std::size_t u = r; u < s.rounds.size(); ++u) {
        const AtomicAction& other = s.rounds[u][1 - i];
        if (other.kind == AtomicKind::pick && other.source == PackSource::bin) {
          CHECK_FALSE(cells_overlap(place.cells, other.cells));
        }
      }
    }
  }
  std::ostringstream out;
  write_schedule_jsonl(out, s);
  CHECK(out.str().find("\"action\":\"pick\",\"source\":\"bin\"") != std::string::npos);
  CHECK(out.str().find("\"cells\":[[0,0],[1,0]]") != std::string::npos);
}

// Search-driven actions on every dual preset: hold-one, cell safety, step
// bounds, LIFO buffers, and allocation-order replay to the predicted bin.
TEST_CASE("schedules from searched actions") {
  std::mt19937 rng(23);
  for (const char* name : {"D-R2A2O2", "D-R5A2O2", "D-R5A3O1", "S-R5A3"}) {
    for (int ep = 0; ep < 15; ++ep) {
      std::vector<ItemSpec> arr;
      std::uniform_int_distribution<int> dim(1, 3);
      for (int i = 0; i < 16; ++i) arr.push_back({i, dim(rng), dim(rng)});
      WorldState w = make_world(6, 6, arr, scenario_preset(name));
      SearchConfig cfg;
      cfg.use_repack = ep % 2 == 0;
      cfg.repack_budget = std::chrono::milliseconds(200);
      int packs = 0, steps = 0;
      for (int t = 0; t < 40 && !w.terminated; ++t) {
        const WorldState view = w.observe();
        const SearchOutcome out = high_level_search(view, cfg);
        const Allocation a = allocate(out.action, view);
        const RoundSchedule s = sequence_atomic(a, view);
        for (const auto& prog : s.programs) {
          CHECK(hold_one(prog));
          CHECK(prog.back().kind == AtomicKind::ready);
        }
        const int action_packs = static_cast<int>(std::count_if(
            out.action.begin(), out.action.end(), [](const TaskPrimitive& p) { return p.kind == PrimitiveKind::pack; }));
        const int st = count_steps(s).packing_steps;
        if (w.config().n_robot == 1) CHECK(st == action_packs);
        CHECK(st <= action_packs);
        CHECK(2 * st >= action_packs);
        packs += action_packs;
        steps += st;

        // Entry index into each robot's buffer; departures must run backwards.
        std::vector<std::vector<int>> entered(2);
        for (int r = 0; r < static_cast<int>(view.buffers.size()); ++r)
          for (const auto& it : view.buffers[r]) entered[r].push_back(it.id);
        std::vector<int> last_left(2, INT_MAX);
        for (const auto& ap : a.order) {
          execute(w, ap.primitive, ap.robot);
          auto& e = entered[ap.robot];
          if (ap.primitive.kind == PrimitiveKind::unpack) e.push_back(ap.primitive.item.id);
          if (ap.primitive.kind == PrimitiveKind::pack && ap.source == PackSource::buffer) {
            const auto at = std::find(e.begin(), e.end(), ap.primitive.item.id);
            REQUIRE(at != e.end());
            const int idx = static_cast<int>(at - e.begin());
            CHECK_MESSAGE(idx < last_left[ap.robot], std::string(name));
            last_left[ap.robot] = idx;
          }
        }
        if (a.terminate) execute(w, TaskPrimitive::terminate());
        CHECK(w.bin == out.predicted_bin);
      }
      CHECK(steps <= packs);
      CHECK(2 * steps >= packs);
    }
  }
}
