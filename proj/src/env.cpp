#include "binpack/env.hpp"

#include <algorithm>
#include <sstream>

namespace binpack {

int n_max(const ScenarioConfig& cfg) {
  return cfg.n_accessible * cfg.n_robot - cfg.n_overlap * (cfg.n_robot - 1);
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.n_robot != 1 && cfg.n_robot != 2) throw ContractViolation("n_robot must be 1 or 2");
  if (cfg.n_accessible < 1) throw ContractViolation("n_A must be positive");
  if (cfg.n_robot == 2 && (cfg.n_overlap < 0 || cfg.n_overlap > cfg.n_accessible)) {
    throw ContractViolation("n_O must lie in [0, n_A]");
  }
  if (cfg.n_robot == 1 && cfg.n_overlap != 0) throw ContractViolation("n_O is only meaningful for two robots");
  if (n_max(cfg) > cfg.n_recognized) throw ContractViolation("n_max exceeds n_R");
  if (cfg.buffer_cap && *cfg.buffer_cap < 0) throw ContractViolation("buffer capacity must be non-negative");
}

namespace {

ScenarioConfig make_preset(std::string name, int robots, int nr, int na, int no) {
  ScenarioConfig cfg{std::move(name), robots, nr, na, no, {0.0, 0.0}, std::nullopt};
  cfg.robot_x = {0.0, robots == 2 ? static_cast<double>(n_max(cfg) - 1) : 0.0};
  return cfg;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"S-R1A1", "S-R5A1", "S-R5A3", "D-R2A2O2", "D-R5A2O2", "D-R5A3O1"};
  return names;
}

ScenarioConfig scenario_preset(std::string_view name) {
  if (name == "S-R1A1") return make_preset("S-R1A1", 1, 1, 1, 0);
  if (name == "S-R5A1") return make_preset("S-R5A1", 1, 5, 1, 0);
  if (name == "S-R5A3") return make_preset("S-R5A3", 1, 5, 3, 0);
  if (name == "D-R2A2O2") return make_preset("D-R2A2O2", 2, 2, 2, 2);
  if (name == "D-R5A2O2") return make_preset("D-R5A2O2", 2, 5, 2, 2);
  if (name == "D-R5A3O1") return make_preset("D-R5A3O1", 2, 5, 3, 1);
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

ZoneCounts balance_zones(int k_total, int k_alpha_prev, const ScenarioConfig& cfg) {
  if (k_total <= 0) return {};
  const int k_o = std::min(k_total - k_alpha_prev, cfg.n_overlap);
  const int k_alpha = std::max(k_alpha_prev, k_total / 2 + 1 - k_o);
  return {k_total - k_alpha - k_o, k_o, k_alpha};
}

Zone ConveyorState::zone_of(std::size_t pos) const {
  const auto p = static_cast<int>(pos);
  if (p < zones.beta) return Zone::beta;
  if (p < zones.beta + zones.overlap) return Zone::overlap;
  if (p < zones.total()) return Zone::alpha;
  return Zone::unpositioned;
}

bool ConveyorState::reachable(std::size_t pos, int robot, const ScenarioConfig& cfg) const {
  const Zone z = zone_of(pos);
  if (z == Zone::unpositioned) return false;
  if (cfg.n_robot == 1) return static_cast<int>(pos) < cfg.n_accessible;
  if (z == Zone::overlap) return true;
  return robot == kFront ? z == Zone::beta : z == Zone::alpha;
}

std::optional<std::size_t> ConveyorState::position_of(int item_id) const {
  for (std::size_t i = 0; i < queue.size(); ++i) {
    if (queue[i].id == item_id) return i;
  }
  return std::nullopt;
}

void ConveyorState::remove(std::size_t pos) {
  switch (zone_of(pos)) {
    case Zone::beta: --zones.beta; break;
    case Zone::overlap: --zones.overlap; break;
    case Zone::alpha: --zones.alpha; break;
    case Zone::unpositioned: break;
  }
  queue.erase(queue.begin() + static_cast<std::ptrdiff_t>(pos));
}

ConveyorState advance_conveyor(ConveyorState state, const ScenarioConfig& cfg) {
  const int cap = n_max(cfg);
  const int k = std::min(static_cast<int>(state.queue.size()), cap);
  if (cfg.n_robot == 1) {
    state.zones = {0, k, 0};
  } else if (k >= cap) {
    const int side = cfg.n_accessible - cfg.n_overlap;
    state.zones = {side, cfg.n_overlap, side};
  } else {
    state.zones = balance_zones(k, state.zones.alpha, cfg);
  }
  return state;
}

std::string to_string(const TaskPrimitive& p) {
  std::ostringstream out;
  switch (p.kind) {
    case PrimitiveKind::pack:
      out << "PACK(" << p.item.id << ' ' << p.item.w << 'x' << p.item.h << ' ' << to_string(p.orientation) << " @"
          << p.x << ',' << p.y << ')';
      break;
    case PrimitiveKind::unpack: out << "UNPACK(" << p.item.id << ')'; break;
    case PrimitiveKind::terminate: out << "TERMINATE"; break;
  }
  return out.str();
}

WorldState WorldState::observe() const {
  WorldState view = *this;
  view.arrivals_pending = more_arrivals();
  view.upcoming.clear();
  return view;
}

std::vector<ItemSpec> WorldState::buffered_items() const {
  std::vector<ItemSpec> all;
  for (const auto& b : buffers) all.insert(all.end(), b.begin(), b.end());
  return all;
}

std::optional<int> WorldState::buffer_holding(int item_id) const {
  for (std::size_t r = 0; r < buffers.size(); ++r) {
    for (const auto& it : buffers[r]) {
      if (it.id == item_id) return static_cast<int>(r);
    }
  }
  return std::nullopt;
}

const Placement* WorldState::find_packed(int item_id) const {
  for (const auto& p : packed) {
    if (p.item.id == item_id) return &p;
  }
  return nullptr;
}

namespace {

void refill(WorldState& s) {
  const auto window = static_cast<std::size_t>(s.config().n_recognized);
  while (s.conveyor.queue.size() < window && !s.upcoming.empty()) {
    s.conveyor.queue.push_back(s.upcoming.front());
    s.upcoming.pop_front();
  }
  s.conveyor = advance_conveyor(std::move(s.conveyor), s.config());
}

}  // namespace

WorldState make_world(int width, int height, std::span<const ItemSpec> arrivals, ScenarioConfig cfg) {
  validate(cfg);
  WorldState s;
  s.scenario = std::make_shared<const ScenarioConfig>(std::move(cfg));
  s.bin = GridBin(width, height);
  s.upcoming.assign(arrivals.begin(), arrivals.end());
  s.buffers.resize(static_cast<std::size_t>(s.config().n_robot));
  refill(s);
  return s;
}

std::vector<ItemSpec> accessible_items(const WorldState& state, int robot) {
  const ScenarioConfig& cfg = state.config();
  std::vector<ItemSpec> out;
  const auto& q = state.conveyor.queue;
  for (std::size_t i = 0; i < q.size() && static_cast<int>(out.size()) < cfg.n_accessible; ++i) {
    if (state.conveyor.reachable(i, robot, cfg)) out.push_back(q[i]);
  }
  if (robot >= 0 && robot < static_cast<int>(state.buffers.size())) {
    const auto& own = state.buffers[static_cast<std::size_t>(robot)];
    out.insert(out.end(), own.begin(), own.end());
  }
  return out;
}

void execute(WorldState& state, const TaskPrimitive& p, int buffer_robot) {
  if (state.terminated) throw WorldError(WorldError::Kind::episode_terminated, "episode already terminated");
  const ScenarioConfig& cfg = state.config();
  switch (p.kind) {
    case PrimitiveKind::pack: {
      const Placement placement{p.item, p.orientation, p.x, p.y, state.next_seq};
      if (const auto r = state.buffer_holding(p.item.id)) {
        state.bin.pack(placement);
        auto& buf = state.buffers[static_cast<std::size_t>(*r)];
        buf.erase(std::find_if(buf.begin(), buf.end(), [&](const ItemSpec& it) { return it.id == p.item.id; }));
      } else if (const auto pos = state.conveyor.position_of(p.item.id)) {
        bool reachable = false;
        for (int r = 0; r < cfg.n_robot; ++r) reachable = reachable || state.conveyor.reachable(*pos, r, cfg);
        if (!reachable) {
          throw WorldError(WorldError::Kind::item_inaccessible,
                           "item " + std::to_string(p.item.id) + " is not within reach of any robot");
        }
        state.bin.pack(placement);
        state.conveyor.remove(*pos);
        refill(state);
      } else {
        throw WorldError(WorldError::Kind::item_unavailable,
                         "item " + std::to_string(p.item.id) + " is neither on the conveyor nor buffered");
      }
      state.packed.push_back(placement);
      ++state.next_seq;
      break;
    }
    case PrimitiveKind::unpack: {
      const auto it = std::find_if(state.packed.begin(), state.packed.end(),
                                   [&](const Placement& q) { return q.item.id == p.item.id; });
      if (it == state.packed.end()) throw NotPacked("item " + std::to_string(p.item.id) + " is not in the bin");
      if (buffer_robot < 0 || buffer_robot >= static_cast<int>(state.buffers.size())) {
        throw ContractViolation("no buffer for robot " + std::to_string(buffer_robot));
      }
      auto& buf = state.buffers[static_cast<std::size_t>(buffer_robot)];
      if (cfg.buffer_cap && static_cast<int>(buf.size()) >= *cfg.buffer_cap) {
        throw WorldError(WorldError::Kind::buffer_full, "buffer of robot " + std::to_string(buffer_robot) + " is full");
      }
      state.bin.unpack(*it);
      buf.push_back(it->item);
      state.packed.erase(it);
      break;
    }
    case PrimitiveKind::terminate: state.terminated = true; break;
  }
  state.executed.push_back(p);
}

WorldState exec_primitive(WorldState state, const TaskPrimitive& p, int buffer_robot) {
  execute(state, p, buffer_robot);
  return state;
}

int high_level_reward(std::span<const TaskPrimitive> executed) {
  int total = 0;
  for (const auto& p : executed) {
    if (p.kind == PrimitiveKind::pack) total += p.item.area();
    if (p.kind == PrimitiveKind::unpack) total -= p.item.area();
  }
  return total;
}

}  // namespace binpack
