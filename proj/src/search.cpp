#include "binpack/search.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "json.hpp"

namespace binpack {

namespace {

const LowLevelPolicy& policy_of(const SearchConfig& cfg) {
  static const GreedyPolicy greedy;
  return cfg.policy ? *cfg.policy : greedy;
}

// Square items look the same either way round, so they get one orientation.
std::span<const Orientation> orientations(const ItemSpec& item, const SearchConfig& cfg) {
  static constexpr Orientation both[] = {Orientation::deg0, Orientation::deg90};
  if (!cfg.rotation_enabled || item.w == item.h) return std::span(both, 1);
  return std::span(both, 2);
}

unsigned reach_mask(const ConveyorState& conveyor, std::size_t pos, const ScenarioConfig& cfg) {
  unsigned mask = 0;
  for (int r = 0; r < cfg.n_robot; ++r) {
    if (conveyor.reachable(pos, r, cfg)) mask |= 1u << r;
  }
  return mask;
}

bool packable_somewhere(const GridBin& bin, const ItemSpec& item, const SearchConfig& cfg) {
  const OccupancyIndex index(bin);
  for (Orientation phi : orientations(item, cfg)) {
    const RotatedSize s = rotated_size(item, phi);
    for (int y = 0; y + s.ly <= bin.height(); ++y)
      for (int x = 0; x + s.lx <= bin.width(); ++x)
        if (index.fits(x, y, s)) return true;
  }
  return false;
}

class TreeSearch {
 public:
  TreeSearch(const ScenarioConfig& scenario, const SearchConfig& cfg, RootClasses classes)
      : scenario_(scenario), cfg_(cfg), policy_(policy_of(cfg)), classes_(std::move(classes)) {}

  ExpansionResult run(const SearchNode& root) {
    std::vector<TupleEntry> chi;
    result_.solved = expand(root, chi, 0, 0);
    return std::move(result_);
  }

 private:
  bool out_of_time() {
    if (!cfg_.hard_deadline) return false;
    if (Clock::now() >= *cfg_.hard_deadline) result_.stats.aborted = true;
    return result_.stats.aborted;
  }

  void emit_leaf(const std::vector<TupleEntry>& chi) {
    result_.sequences.push_back(sequence_sorting(CandidateSequence{chi, false}, classes_));
    ++result_.stats.leaves;
  }

  void trace(const Candidate& c, int depth) {
    if (cfg_.trace == nullptr) return;
    nlohmann::ordered_json j;
    j["depth"] = depth;
    j["item"] = c.item.id;
    j["orientation"] = to_string(c.orientation);
    j["action"] = c.action.idx;
    j["reward"] = c.reward;
    *cfg_.trace << j.dump() << '\n';
  }

  SearchNode child(const SearchNode& v, const Candidate& c) const {
    SearchNode next = v;
    const Anchor a = decode_action(c.action, v.bin.width(), v.bin.height());
    next.bin.pack({c.item, c.orientation, a.x, a.y, 0});
    const auto buffered = std::find(next.buffered.begin(), next.buffered.end(), c.item);
    if (buffered != next.buffered.end()) {
      next.buffered.erase(buffered);
    } else {
      next.conveyor.remove(*next.conveyor.position_of(c.item.id));
      next.conveyor = advance_conveyor(std::move(next.conveyor), scenario_);
    }
    return next;
  }

  bool expand(const SearchNode& v, std::vector<TupleEntry>& chi, int d, int n) {
    if (out_of_time()) return false;
    ++result_.stats.nodes;
    const int W = v.bin.width(), H = v.bin.height();

    std::vector<Candidate> options;
    bool stop = n == 0;
    auto consider = [&](const ItemSpec& o, bool accessible) {
      bool placeable = false;
      for (Orientation phi : orientations(o, cfg_)) {
        const PolicyDecision dec = policy_.decide(v.bin, rotated_size(o, phi));
        const bool nop = dec.action.is_no_position(W, H);
        if (accessible && !nop) stop = false;
        placeable = placeable || !nop;
        options.push_back({o, phi, dec.action, dec.score, nop});
      }
      return placeable;
    };
    for (std::size_t i = 0; i < v.conveyor.queue.size(); ++i) {
      const ItemSpec& o = v.conveyor.queue[i];
      if (!consider(o, reach_mask(v.conveyor, i, scenario_) != 0) && cfg_.require_full_pack) return false;
    }
    for (const ItemSpec& o : v.buffered) {
      if (!consider(o, true) && cfg_.require_full_pack) return false;
    }
    if (stop) return false;

    const int remaining = static_cast<int>(v.conveyor.queue.size() + v.buffered.size());
    reward_sorting(options);
    options = selection(std::move(options), cfg_.beam_width, remaining, cfg_.prune_floor);

    for (const Candidate& c : options) {
      chi.push_back({c.item, c.orientation, c.action, c.reward, d});
      trace(c, d);
      if (c.no_position) {
        emit_leaf(chi);
        chi.pop_back();
        continue;
      }
      const bool accessible = v.accessible(c.item, scenario_);
      const SearchNode next = child(v, c);
      const bool full = is_full(next.bin);
      if (next.empty() || full) {
        emit_leaf(chi);
        chi.pop_back();
        if (cfg_.require_full_pack && full) return true;
        continue;
      }
      const bool solved = expand(next, chi, d + 1, n + (accessible ? 1 : 0));
      chi.pop_back();
      if (solved) return true;
      if (result_.stats.aborted) return false;
    }
    return false;
  }

  const ScenarioConfig& scenario_;
  const SearchConfig& cfg_;
  const LowLevelPolicy& policy_;
  RootClasses classes_;
  ExpansionResult result_;
};

std::vector<int> item_ids(const CandidateSequence& s) {
  std::vector<int> ids;
  ids.reserve(s.tuples.size());
  for (const auto& t : s.tuples) ids.push_back(t.item.id);
  return ids;
}

}  // namespace

bool SearchNode::accessible(const ItemSpec& item, const ScenarioConfig& cfg) const {
  if (std::find(buffered.begin(), buffered.end(), item) != buffered.end()) return true;
  const auto pos = conveyor.position_of(item.id);
  return pos && reach_mask(conveyor, *pos, cfg) != 0;
}

SearchNode make_root(const WorldState& world) {
  return {world.bin, world.conveyor, world.buffered_items()};
}

bool CandidateSequence::contains_no_position(int width, int height) const {
  return std::any_of(tuples.begin(), tuples.end(),
                     [&](const TupleEntry& t) { return t.action.is_no_position(width, height); });
}

void reward_sorting(std::vector<Candidate>& candidates) {
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.reward != b.reward) return a.reward > b.reward;
    if (a.item.area() != b.item.area()) return a.item.area() > b.item.area();
    if (a.item.id != b.item.id) return a.item.id < b.item.id;
    return a.orientation < b.orientation;
  });
}

std::vector<Candidate> selection(std::vector<Candidate> sorted, std::optional<int> beam_width, int remaining_items,
                                 int prune_floor) {
  if (sorted.empty()) return sorted;
  const bool all_nop = std::all_of(sorted.begin(), sorted.end(), [](const Candidate& c) { return c.no_position; });
  if (all_nop) {
    sorted.resize(1);
    return sorted;
  }
  if (remaining_items < prune_floor || !beam_width) return sorted;
  if (static_cast<int>(sorted.size()) > *beam_width) sorted.resize(static_cast<std::size_t>(std::max(*beam_width, 1)));
  return sorted;
}

RootClasses RootClasses::of(const SearchNode& root, const ScenarioConfig& cfg) {
  RootClasses c;
  for (const auto& it : root.buffered) c.buffered.insert(it.id);
  for (std::size_t i = 0; i < root.conveyor.queue.size(); ++i) {
    const int id = root.conveyor.queue[i].id;
    c.arrival[id] = static_cast<int>(i);
    if (reach_mask(root.conveyor, i, cfg) != 0) c.accessible.insert(id);
  }
  return c;
}

CandidateSequence sequence_sorting(const CandidateSequence& chi, const RootClasses& classes) {
  auto rank = [&](const TupleEntry& t) {
    if (classes.buffered.contains(t.item.id)) return 0;
    if (classes.accessible.contains(t.item.id)) return 1;
    return 2;
  };
  CandidateSequence out{chi.tuples, true};
  std::stable_sort(out.tuples.begin(), out.tuples.end(), [&](const TupleEntry& a, const TupleEntry& b) {
    const int ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb;
    if (ra == 2) {
      const auto ia = classes.arrival.find(a.item.id), ib = classes.arrival.find(b.item.id);
      const int pa = ia == classes.arrival.end() ? 0 : ia->second;
      const int pb = ib == classes.arrival.end() ? 0 : ib->second;
      return pa < pb;
    }
    return false;
  });
  return out;
}

ExpansionResult tree_expansion(const SearchNode& root, const ScenarioConfig& scenario, const SearchConfig& cfg) {
  TreeSearch search(scenario, cfg, RootClasses::of(root, scenario));
  return search.run(root);
}

EvaluatedSequence forward_simulate(const CandidateSequence& chi, const WorldState& world, const SearchConfig& cfg) {
  const ScenarioConfig& scenario = world.config();
  const int W = world.bin.width(), H = world.bin.height();

  struct SimPack {
    const TupleEntry* tuple;
    bool from_buffer;
    unsigned root_reach;
  };

  std::unordered_map<int, unsigned> root_reach;
  for (std::size_t i = 0; i < world.conveyor.queue.size(); ++i) {
    root_reach[world.conveyor.queue[i].id] = reach_mask(world.conveyor, i, scenario);
  }

  EvaluatedSequence ev;
  ev.sequence = chi;
  GridBin bin = world.bin;
  ConveyorState conveyor = world.conveyor;
  std::vector<ItemSpec> buffered = world.buffered_items();
  std::vector<SimPack> packs;

  // Tuples along one tree path are pairwise disjoint and disjoint from the
  // root occupancy, so any subset replays feasibly in any order. A tuple is
  // skipped when it has no position or its item is still out of reach.
  for (const TupleEntry& t : chi.tuples) {
    if (t.action.is_no_position(W, H)) continue;
    const Anchor a = decode_action(t.action, W, H);
    const auto in_buffer = std::find(buffered.begin(), buffered.end(), t.item);
    if (in_buffer != buffered.end()) {
      bin.pack({t.item, t.orientation, a.x, a.y, 0});
      buffered.erase(in_buffer);
      packs.push_back({&t, true, 0});
    } else if (const auto pos = conveyor.position_of(t.item.id); pos && reach_mask(conveyor, *pos, scenario) != 0) {
      bin.pack({t.item, t.orientation, a.x, a.y, 0});
      conveyor.remove(*pos);
      conveyor = advance_conveyor(std::move(conveyor), scenario);
      packs.push_back({&t, false, root_reach[t.item.id]});
    } else {
      continue;
    }
    ev.mu += t.reward;
  }
  ev.occupied = bin.occupied_cells();
  ev.util = utilization(bin);

  // Conveyor items enter the action only if a robot can reach them now; the
  // shallowest go first, at most one per robot.
  std::vector<const SimPack*> fresh;
  for (const SimPack& p : packs) {
    if (!p.from_buffer && p.root_reach != 0) fresh.push_back(&p);
  }
  std::stable_sort(fresh.begin(), fresh.end(),
                   [](const SimPack* a, const SimPack* b) { return a->tuple->depth < b->tuple->depth; });
  std::unordered_set<const SimPack*> chosen;
  if (!fresh.empty()) {
    chosen.insert(fresh[0]);
    if (scenario.n_robot == 2) {
      const unsigned both = 0b11;
      if (fresh[0]->root_reach == both) {
        if (fresh.size() > 1) chosen.insert(fresh[1]);
      } else {
        const unsigned other = both & ~fresh[0]->root_reach;
        for (std::size_t i = 1; i < fresh.size(); ++i) {
          if (fresh[i]->root_reach & other) {
            chosen.insert(fresh[i]);
            break;
          }
        }
      }
    }
  }

  ev.predicted_bin = world.bin;
  ConveyorState after = world.conveyor;
  std::vector<ItemSpec> after_buffered = world.buffered_items();
  for (const SimPack& p : packs) {
    if (!p.from_buffer && !chosen.contains(&p)) continue;
    const TupleEntry& t = *p.tuple;
    const Anchor a = decode_action(t.action, W, H);
    ev.action.push_back(TaskPrimitive::pack(t.item, t.orientation, a.x, a.y));
    ev.predicted_bin.pack({t.item, t.orientation, a.x, a.y, 0});
    ev.depth_sum += t.depth;
    if (p.from_buffer) {
      after_buffered.erase(std::find(after_buffered.begin(), after_buffered.end(), t.item));
    } else {
      after.remove(*after.position_of(t.item.id));
      after = advance_conveyor(std::move(after), scenario);
    }
  }

  // Look one conveyor step ahead with the items already known.
  bool terminate = false;
  std::vector<ItemSpec> reachable = after_buffered;
  for (std::size_t i = 0; i < after.queue.size(); ++i) {
    if (reach_mask(after, i, scenario) != 0) reachable.push_back(after.queue[i]);
  }
  if (reachable.empty()) {
    terminate = !world.more_arrivals();
  } else if (!cfg.use_repack) {
    const bool any = std::any_of(reachable.begin(), reachable.end(),
                                 [&](const ItemSpec& it) { return packable_somewhere(ev.predicted_bin, it, cfg); });
    const bool zones_can_grow = world.more_arrivals() && after.k_total() < n_max(scenario);
    terminate = !any && !zones_can_grow;
  }
  if (terminate || ev.action.empty()) ev.action.push_back(TaskPrimitive::terminate());
  return ev;
}

std::size_t best_action_selection(std::span<const EvaluatedSequence> evaluated, SelectionRanking ranking) {
  if (evaluated.empty()) throw ContractViolation("best action selection needs at least one sequence");
  const bool occupied_first = ranking == SelectionRanking::occupied_first;
  std::size_t best = 0;
  std::vector<int> best_ids = item_ids(evaluated[0].sequence);
  for (std::size_t i = 1; i < evaluated.size(); ++i) {
    const EvaluatedSequence& a = evaluated[i];
    const EvaluatedSequence& b = evaluated[best];
    bool better = false;
    if (occupied_first && a.occupied != b.occupied) {
      better = a.occupied > b.occupied;
    } else if (a.mu != b.mu) {
      better = a.mu > b.mu;
    } else if (a.occupied != b.occupied) {
      better = a.occupied > b.occupied;
    } else if (a.depth_sum != b.depth_sum) {
      better = a.depth_sum < b.depth_sum;
    } else {
      std::vector<int> ids = item_ids(a.sequence);
      if (ids < best_ids) {
        better = true;
        best_ids = std::move(ids);
        best = i;
        continue;
      }
    }
    if (better) {
      best = i;
      best_ids = item_ids(a.sequence);
    }
  }
  return best;
}

namespace {

struct Selected {
  std::vector<EvaluatedSequence> all;
  std::size_t best = 0;
};

std::optional<Selected> evaluate_and_select(const ExpansionResult& x, const WorldState& world, const SearchConfig& cfg,
                                            SelectionRanking ranking = SelectionRanking::score_first) {
  if (x.sequences.empty()) return std::nullopt;
  Selected s;
  s.all.reserve(x.sequences.size());
  for (const auto& chi : x.sequences) s.all.push_back(forward_simulate(chi, world, cfg));
  s.best = best_action_selection(s.all, ranking);
  return s;
}

// Advances `idx` to the next i-combination of [0, m) in lexicographic order.
bool next_combination(std::vector<std::size_t>& idx, std::size_t m) {
  const std::size_t k = idx.size();
  for (std::size_t i = k; i-- > 0;) {
    if (idx[i] < m - k + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

RepackResult repack_trial(const WorldState& world, int best_occupied, const SearchConfig& cfg) {
  RepackResult out;
  if (cfg.repack_budget.count() <= 0) return out;
  Clock::time_point deadline = Clock::now() + cfg.repack_budget;
  if (cfg.hard_deadline) deadline = std::min(deadline, *cfg.hard_deadline);

  std::vector<Placement> order = world.packed;
  std::stable_sort(order.begin(), order.end(), [](const Placement& a, const Placement& b) { return a.seq > b.seq; });
  const std::size_t m = order.size();
  const auto cap = world.config().buffer_cap;
  const int W = world.bin.width(), H = world.bin.height();

  for (std::size_t size = 1; size <= m; ++size) {
    std::vector<std::size_t> idx(size);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    do {
      if (Clock::now() >= deadline) return out;
      ++out.subsets_tried;

      WorldState clone = world;
      std::vector<TaskPrimitive> unpacks;
      bool fits_buffers = true;
      for (std::size_t k : idx) {
        int robot = kFront;
        for (int r = 1; r < static_cast<int>(clone.buffers.size()); ++r) {
          if (clone.buffers[r].size() < clone.buffers[robot].size()) robot = r;
        }
        if (cap && static_cast<int>(clone.buffers[robot].size()) >= *cap) {
          fits_buffers = false;
          break;
        }
        const TaskPrimitive u = TaskPrimitive::unpack(order[k].item);
        execute(clone, u, robot);
        unpacks.push_back(u);
      }
      if (!fits_buffers) continue;

      const ExpansionResult x = tree_expansion(make_root(clone), clone.config(), cfg);
      // A trial is judged by the cells it fills, so that is what picks its sequence.
      const auto sel = evaluate_and_select(x, clone, cfg, SelectionRanking::occupied_first);
      if (!sel) continue;
      const EvaluatedSequence& best = sel->all[sel->best];
      std::vector<TaskPrimitive> action = unpacks;
      action.insert(action.end(), best.action.begin(), best.action.end());

      if (cfg.require_full_pack) {
        if (!best.sequence.contains_no_position(W, H)) {
          out.success = true;
          out.action = std::move(action);
          out.best = best;
          out.unpacked = static_cast<int>(unpacks.size());
          return out;
        }
      } else if (best.occupied > best_occupied) {
        out.success = true;
        out.action = std::move(action);
        out.best = best;
        out.unpacked = static_cast<int>(unpacks.size());
        best_occupied = best.occupied;
        out.util_history.push_back(best_occupied);
      }
    } while (next_combination(idx, m));
  }
  return out;
}

SearchOutcome high_level_search(const WorldState& world, const SearchConfig& cfg) {
  SearchOutcome out;
  const int W = world.bin.width(), H = world.bin.height();
  const ExpansionResult x = tree_expansion(make_root(world), world.config(), cfg);
  out.stats = x.stats;

  int baseline = world.bin.occupied_cells();
  bool has_nop = false;
  if (const auto sel = evaluate_and_select(x, world, cfg)) {
    const EvaluatedSequence& best = sel->all[sel->best];
    out.action = best.action;
    out.predicted_bin = best.predicted_bin;
    out.util = best.util;
    out.chi_star = best.sequence;
    baseline = best.occupied;
    has_nop = best.sequence.contains_no_position(W, H);
  } else {
    out.action = {TaskPrimitive::terminate()};
    out.predicted_bin = world.bin;
    out.util = utilization(world.bin);
  }

  if (cfg.use_repack && (x.sequences.empty() || has_nop)) {
    out.repack_attempted = true;
    const auto t0 = Clock::now();
    RepackResult r = repack_trial(world, baseline, cfg);
    out.repack_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    if (r.success) {
      out.repack_success = true;
      out.action = std::move(r.action);
      out.predicted_bin = r.best->predicted_bin;
      out.util = r.best->util;
      out.chi_star = r.best->sequence;
      out.repacked_items = r.unpacked;
    }
  }
  return out;
}

}  // namespace binpack
