#include "binpack/alloc.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "json.hpp"

namespace binpack {

namespace {

double distance(const ScenarioConfig& cfg, int robot, int slot) {
  return std::abs(cfg.robot_x[static_cast<std::size_t>(robot)] - static_cast<double>(slot));
}

int nearest(const SlotRequest& item, const ScenarioConfig& cfg) {
  int best = -1;
  for (int r = 0; r < cfg.n_robot; ++r) {
    const bool reaches = (item.reach >> r) & 1u;
    if (!reaches) continue;
    if (best < 0 || distance(cfg, r, item.slot) < distance(cfg, best, item.slot)) best = r;
  }
  if (best >= 0) return best;
  best = 0;
  for (int r = 1; r < cfg.n_robot; ++r) {
    if (distance(cfg, r, item.slot) < distance(cfg, best, item.slot)) best = r;
  }
  return best;
}

bool overlaps(const Placement& a, const Placement& b) {
  const RotatedSize sa = a.size(), sb = b.size();
  return a.x < b.x + sb.lx && b.x < a.x + sa.lx && a.y < b.y + sb.ly && b.y < a.y + sa.ly;
}

}  // namespace

std::vector<int> assign_new_items(std::span<const SlotRequest> items, const ScenarioConfig& cfg) {
  std::vector<int> robots;
  for (const auto& it : items) robots.push_back(nearest(it, cfg));
  if (cfg.n_robot != 2 || items.size() != 2) return robots;

  auto cost = [&](int r0, int r1) -> double {
    if (!((items[0].reach >> r0) & 1u) || !((items[1].reach >> r1) & 1u)) return INFINITY;
    return distance(cfg, r0, items[0].slot) + distance(cfg, r1, items[1].slot);
  };
  const double straight = cost(kFront, kRear), crossed = cost(kRear, kFront);
  if (std::isinf(straight) && std::isinf(crossed)) return robots;
  if (straight <= crossed) return {kFront, kRear};
  return {kRear, kFront};
}

Allocation allocate(std::span<const TaskPrimitive> action, const WorldState& world) {
  const ScenarioConfig& cfg = world.config();
  Allocation out;
  out.queues.resize(static_cast<std::size_t>(cfg.n_robot));

  enum class Role { unpack, repack, buffered, fresh };
  struct Entry {
    TaskPrimitive p;
    Role role;
    int robot = kFront;
    int rank = 0;  // unpack index for repacks, buffer entry index for buffered packs
  };
  std::vector<Entry> entries;
  std::unordered_map<int, std::size_t> unpack_index;
  std::vector<SlotRequest> slots;
  std::vector<std::size_t> fresh_entries;

  for (const TaskPrimitive& p : action) {
    switch (p.kind) {
      case PrimitiveKind::terminate: out.terminate = true; break;
      case PrimitiveKind::unpack:
        unpack_index[p.item.id] = entries.size();
        entries.push_back({p, Role::unpack});
        break;
      case PrimitiveKind::pack: {
        if (const auto u = unpack_index.find(p.item.id); u != unpack_index.end()) {
          entries.push_back({p, Role::repack, kFront, static_cast<int>(u->second)});
        } else if (const auto holder = world.buffer_holding(p.item.id)) {
          const auto& buf = world.buffers[static_cast<std::size_t>(*holder)];
          const auto at = std::find(buf.begin(), buf.end(), p.item) - buf.begin();
          entries.push_back({p, Role::buffered, *holder, static_cast<int>(at)});
        } else if (const auto pos = world.conveyor.position_of(p.item.id)) {
          unsigned reach = 0;
          for (int r = 0; r < cfg.n_robot; ++r) reach |= world.conveyor.reachable(*pos, r, cfg) ? 1u << r : 0u;
          slots.push_back({static_cast<int>(*pos), reach});
          fresh_entries.push_back(entries.size());
          entries.push_back({p, Role::fresh});
        } else {
          throw ContractViolation("no robot can supply item " + std::to_string(p.item.id));
        }
        break;
      }
    }
  }

  auto source_of = [](Role r) {
    if (r == Role::unpack) return PackSource::bin;
    return r == Role::fresh ? PackSource::conveyor : PackSource::buffer;
  };

  if (cfg.n_robot == 2) {
    const std::vector<int> fresh_robots = assign_new_items(slots, cfg);
    for (std::size_t k = 0; k < fresh_entries.size(); ++k) entries[fresh_entries[k]].robot = fresh_robots[k];
  }

  std::vector<int> load(2, 0);
  for (const Entry& e : entries) {
    if (e.role == Role::fresh || e.role == Role::buffered) ++load[static_cast<std::size_t>(e.robot)];
  }
  int next = cfg.n_robot == 2 && load[kRear] < load[kFront] ? kRear : kFront;
  for (Entry& e : entries) {
    if (e.role != Role::unpack) continue;
    e.robot = next;
    if (cfg.n_robot == 2) next = 1 - next;
  }
  for (Entry& e : entries) {
    if (e.role == Role::repack) e.robot = entries[static_cast<std::size_t>(e.rank)].robot;
  }

  auto emit = [&](Role role, bool reverse_rank) {
    std::vector<const Entry*> picked;
    for (const Entry& e : entries)
      if (e.role == role) picked.push_back(&e);
    if (reverse_rank) {
      std::stable_sort(picked.begin(), picked.end(), [](const Entry* a, const Entry* b) { return a->rank > b->rank; });
    }
    for (const Entry* e : picked) out.order.push_back({e->p, e->robot, source_of(role)});
  };
  emit(Role::unpack, false);
  emit(Role::repack, true);
  emit(Role::buffered, true);
  emit(Role::fresh, false);

  for (const AssignedPrimitive& a : out.order) out.queues[static_cast<std::size_t>(a.robot)].push_back(a);
  return out;
}

const char* to_string(AtomicKind k) {
  switch (k) {
    case AtomicKind::pick: return "pick";
    case AtomicKind::place_to_bin: return "place_to_bin";
    case AtomicKind::place_to_buffer: return "place_to_buffer";
    case AtomicKind::standby: return "standby";
    case AtomicKind::ready: return "ready";
  }
  return "?";
}

RoundSchedule sequence_atomic(const Allocation& allocation, const WorldState& world) {
  RoundSchedule s;
  const std::size_t robots = allocation.queues.size();

  auto footprint = [](const TaskPrimitive& p) { return Placement{p.item, p.orientation, p.x, p.y, 0}; };
  auto packed_at = [&](const ItemSpec& item) {
    const Placement* p = world.find_packed(item.id);
    if (p == nullptr) throw ContractViolation("item " + std::to_string(item.id) + " is not in the bin");
    return *p;
  };

  for (const auto& queue : allocation.queues) {
    std::vector<AtomicAction> prog;
    std::optional<std::size_t> last_unpack;
    for (std::size_t k = 0; k < queue.size(); ++k)
      if (queue[k].primitive.kind == PrimitiveKind::unpack) last_unpack = k;
    const bool fuse = last_unpack && *last_unpack + 1 < queue.size() &&
                      queue[*last_unpack + 1].primitive.kind == PrimitiveKind::pack &&
                      queue[*last_unpack + 1].primitive.item.id == queue[*last_unpack].primitive.item.id;

    for (std::size_t k = 0; k < queue.size(); ++k) {
      const TaskPrimitive& p = queue[k].primitive;
      if (p.kind == PrimitiveKind::unpack) {
        prog.push_back({AtomicKind::pick, PackSource::bin, p.item, packed_at(p.item)});
        if (fuse && k == *last_unpack) {
          const TaskPrimitive& repack = queue[k + 1].primitive;
          prog.push_back({AtomicKind::place_to_bin, PackSource::bin, p.item, footprint(repack)});
          ++k;
        } else {
          prog.push_back({AtomicKind::place_to_buffer, PackSource::bin, p.item, {}});
        }
      } else if (p.kind == PrimitiveKind::pack) {
        prog.push_back({AtomicKind::pick, queue[k].source, p.item, {}});
        prog.push_back({AtomicKind::place_to_bin, queue[k].source, p.item, footprint(p)});
      }
    }
    s.programs.push_back(std::move(prog));
  }

  if (robots == 2) {
    const std::size_t n0 = allocation.queues[0].size(), n1 = allocation.queues[1].size();
    if (n0 != n1) {
      auto& lighter = s.programs[n0 < n1 ? 0 : 1];
      lighter.insert(lighter.begin(), AtomicAction{});
    }
    // A placement must not land on cells another robot is still to clear.
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t i = 0; i < 2 && !changed; ++i) {
        const auto& mine = s.programs[i];
        const auto& theirs = s.programs[1 - i];
        for (std::size_t t = 0; t < mine.size() && !changed; ++t) {
          if (mine[t].kind != AtomicKind::place_to_bin) continue;
          for (std::size_t u = t; u < theirs.size(); ++u) {
            const AtomicAction& o = theirs[u];
            if (o.kind == AtomicKind::pick && o.source == PackSource::bin && overlaps(mine[t].cells, o.cells)) {
              s.programs[i].insert(s.programs[i].begin() + static_cast<std::ptrdiff_t>(t), AtomicAction{});
              changed = true;
              break;
            }
          }
        }
      }
    }
  }

  AtomicAction ready;
  ready.kind = AtomicKind::ready;
  for (auto& prog : s.programs) prog.push_back(ready);
  std::size_t rounds = 0;
  for (const auto& prog : s.programs) rounds = std::max(rounds, prog.size());
  s.rounds.assign(rounds, std::vector<AtomicAction>(robots));
  for (std::size_t r = 0; r < robots; ++r)
    for (std::size_t t = 0; t < s.programs[r].size(); ++t) s.rounds[t][r] = s.programs[r][t];
  return s;
}

StepReport count_steps(const RoundSchedule& schedule) {
  StepReport rep;
  rep.total_rounds = static_cast<int>(schedule.rounds.size());
  rep.busy_rounds.assign(schedule.programs.size(), 0);
  for (const auto& round : schedule.rounds) {
    bool places = false;
    for (std::size_t r = 0; r < round.size(); ++r) {
      places = places || round[r].kind == AtomicKind::place_to_bin;
      if (round[r].kind != AtomicKind::standby && round[r].kind != AtomicKind::ready) ++rep.busy_rounds[r];
    }
    if (places) ++rep.packing_steps;
  }
  return rep;
}

void write_schedule_jsonl(std::ostream& out, const RoundSchedule& schedule) {
  static constexpr const char* kSources[] = {"conveyor", "buffer", "bin"};
  for (std::size_t r = 0; r < schedule.rounds.size(); ++r) {
    for (std::size_t robot = 0; robot < schedule.rounds[r].size(); ++robot) {
      const AtomicAction& a = schedule.rounds[r][robot];
      nlohmann::ordered_json j;
      j["round"] = r;
      j["robot"] = robot;
      j["action"] = to_string(a.kind);
      if (a.kind == AtomicKind::pick) j["source"] = kSources[static_cast<int>(a.source)];
      if (a.kind != AtomicKind::standby && a.kind != AtomicKind::ready) j["item"] = a.item.id;
      auto cells = nlohmann::json::array();
      if (a.touches_bin()) {
        const RotatedSize sz = a.cells.size();
        for (int y = a.cells.y; y < a.cells.y + sz.ly; ++y)
          for (int x = a.cells.x; x < a.cells.x + sz.lx; ++x) cells.push_back({x, y});
      }
      j["cells"] = cells;
      out << j.dump() << '\n';
    }
  }
}

}  // namespace binpack
