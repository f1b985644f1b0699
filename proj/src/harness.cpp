#include "binpack/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "binpack/alloc.hpp"
#include "json.hpp"

namespace binpack {

namespace {

std::string bin_diff(const GridBin& expected, const GridBin& actual) {
  std::ostringstream os;
  os << "predicted vs executed bin differ at";
  for (int y = 0; y < expected.height(); ++y)
    for (int x = 0; x < expected.width(); ++x)
      if (expected.occupied(x, y) != actual.occupied(x, y))
        os << " (" << x << "," << y << ":" << expected.occupied(x, y) << "->" << actual.occupied(x, y) << ")";
  return os.str();
}

std::vector<ItemSpec> remaining_items(const WorldState& w) {
  std::vector<ItemSpec> out = w.buffered_items();
  out.insert(out.end(), w.conveyor.queue.begin(), w.conveyor.queue.end());
  out.insert(out.end(), w.upcoming.begin(), w.upcoming.end());
  std::sort(out.begin(), out.end(), [](const ItemSpec& a, const ItemSpec& b) { return a.id < b.id; });
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) h = (h ^ c) * 0x100000001b3ull;
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << h;
  return hex.str();
}

EpisodeReport play(int width, int height, std::span<const ItemSpec> arrivals, const ScenarioConfig& scenario,
                   const EpisodeConfig& cfg) {
  EpisodeReport rep;
  rep.scenario = scenario.name;
  rep.rotation = cfg.search.rotation_enabled;
  rep.repack = cfg.search.use_repack;

  SearchConfig search = cfg.search;
  if (cfg.episode_budget) {
    const auto deadline = Clock::now() + *cfg.episode_budget;
    search.hard_deadline = search.hard_deadline ? std::min(*search.hard_deadline, deadline) : deadline;
  }

  WorldState world = make_world(width, height, arrivals, scenario);
  while (!world.terminated) {
    if (rep.actions >= cfg.max_actions) {
      rep.truncated = true;
      break;
    }
    const WorldState view = world.observe();
    const SearchOutcome out = high_level_search(view, search);
    const Allocation alloc = allocate(out.action, view);
    rep.packing_steps += count_steps(sequence_atomic(alloc, view)).packing_steps;
    for (const AssignedPrimitive& ap : alloc.order) execute(world, ap.primitive, ap.robot);
    if (alloc.terminate) execute(world, TaskPrimitive::terminate());
    if (!(world.bin == out.predicted_bin)) throw EpisodeInconsistency(bin_diff(out.predicted_bin, world.bin));
    if (out.repack_success) rep.repacked_items += out.repacked_items;
    rep.repack_time_ms += out.repack_ms;
    ++rep.actions;
  }
  rep.utilization = utilization(world.bin);
  rep.packed_items = static_cast<int>(world.packed.size());
  rep.leftovers = remaining_items(world);
  return rep;
}

template <typename Job>
void parallel_for(std::size_t n, int threads, Job job) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

EpisodeReport run_episode(const InstanceRecord& instance, const ScenarioConfig& scenario, const EpisodeConfig& cfg) {
  EpisodeReport rep = play(instance.width, instance.height, instance.items, scenario, cfg);
  rep.seed = instance.seed;
  return rep;
}

std::vector<EpisodeReport> run_bin_sequence(const InstanceRecord& instance, const ScenarioConfig& scenario,
                                            const EpisodeConfig& cfg, int bins) {
  std::vector<EpisodeReport> out;
  std::vector<ItemSpec> stream = instance.items;
  for (int b = 0; b < bins && !stream.empty(); ++b) {
    out.push_back(play(instance.width, instance.height, stream, scenario, cfg));
    out.back().seed = instance.seed;
    stream = out.back().leftovers;
  }
  return out;
}

std::vector<ScenarioAggregate> aggregate(std::span<const EpisodeReport> episodes) {
  std::vector<ScenarioAggregate> out;
  std::map<std::string, std::size_t> index;
  for (const EpisodeReport& e : episodes) {
    auto [it, fresh] = index.emplace(e.scenario, out.size());
    if (fresh) out.push_back({e.scenario});
    ScenarioAggregate& a = out[it->second];
    ++a.episodes;
    a.mean_utilization += e.utilization;
    a.total_packed += e.packed_items;
    a.total_steps += e.packing_steps;
    a.total_repacked += e.repacked_items;
    a.mean_repack_ms += e.repack_time_ms;
  }
  for (ScenarioAggregate& a : out) {
    a.mean_utilization /= a.episodes;
    a.mean_repacked = static_cast<double>(a.total_repacked) / a.episodes;
    a.mean_repack_ms /= a.episodes;
  }
  return out;
}

SuiteReport run_suite(std::span<const InstanceRecord> instances, const SuiteConfig& cfg) {
  SuiteReport report;
  report.config_hash = config_hash(cfg);
  const std::size_t n = instances.size();
  report.episodes.resize(cfg.scenarios.size() * n);
  parallel_for(report.episodes.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t s = job / std::max<std::size_t>(n, 1), i = job % std::max<std::size_t>(n, 1);
    EpisodeReport rep = run_episode(instances[i], cfg.scenarios[s], cfg.episode);
    rep.instance = i;
    report.episodes[job] = std::move(rep);
  });
  report.aggregates = aggregate(report.episodes);
  return report;
}

Baseline parse_baseline(std::string_view name) {
  std::string n(name);
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return c == '-' ? '_' : std::tolower(c); });
  if (n == "first_fit") return Baseline::first_fit;
  if (n == "shelf_next_fit") return Baseline::shelf_next_fit;
  throw std::invalid_argument("unknown baseline '" + std::string(name) + "'");
}

const char* to_string(Baseline b) { return b == Baseline::first_fit ? "FIRST_FIT" : "SHELF_NEXT_FIT"; }

EpisodeReport run_baseline_episode(Baseline kind, const InstanceRecord& instance) {
  EpisodeReport rep;
  rep.scenario = to_string(kind);
  rep.seed = instance.seed;
  GridBin bin(instance.width, instance.height);
  // Shelf state: current shelf top, its height (0 while empty) and the cursor.
  int shelf_y = 0, shelf_h = 0, cursor = 0;
  std::size_t next = 0;
  for (; next < instance.items.size(); ++next) {
    const ItemSpec& it = instance.items[next];
    std::optional<Anchor> at;
    if (kind == Baseline::first_fit) {
      const OccupancyIndex index(bin);
      for (int y = 0; y + it.h <= bin.height() && !at; ++y)
        for (int x = 0; x + it.w <= bin.width() && !at; ++x)
          if (index.fits(x, y, {it.w, it.h})) at = Anchor{x, y};
    } else {
      const bool fits_shelf = shelf_h == 0 ? shelf_y + it.h <= bin.height() : it.h <= shelf_h;
      if (cursor + it.w <= bin.width() && fits_shelf) {
        at = Anchor{cursor, shelf_y};
        shelf_h = std::max(shelf_h, it.h);
      } else if (shelf_y + shelf_h + it.h <= bin.height() && it.w <= bin.width()) {
        shelf_y += shelf_h;
        shelf_h = it.h;
        cursor = 0;
        at = Anchor{0, shelf_y};
      }
      if (at) cursor = at->x + it.w;
    }
    if (!at) break;
    bin.pack({it, Orientation::deg0, at->x, at->y, next + 1});
    ++rep.packed_items;
    ++rep.packing_steps;
    ++rep.actions;
  }
  rep.utilization = utilization(bin);
  rep.leftovers.assign(instance.items.begin() + static_cast<std::ptrdiff_t>(next), instance.items.end());
  return rep;
}

SuiteReport run_baseline(Baseline kind, std::span<const InstanceRecord> instances, int threads) {
  SuiteReport report;
  report.episodes.resize(instances.size());
  parallel_for(instances.size(), threads, [&](std::size_t i) {
    report.episodes[i] = run_baseline_episode(kind, instances[i]);
    report.episodes[i].instance = i;
  });
  report.aggregates = aggregate(report.episodes);
  report.config_hash = fnv1a_hex(std::string("baseline=") + to_string(kind));
  return report;
}

std::string config_hash(const SuiteConfig& cfg) {
  std::ostringstream os;
  for (const ScenarioConfig& s : cfg.scenarios) {
    os << s.name << ':' << s.n_robot << ',' << s.n_recognized << ',' << s.n_accessible << ',' << s.n_overlap << ','
       << s.robot_x[0] << ',' << s.robot_x[1] << ',' << (s.buffer_cap ? *s.buffer_cap : -1) << ';';
  }
  const SearchConfig& q = cfg.episode.search;
  os << "beam=" << (q.beam_width ? *q.beam_width : -1) << ";floor=" << q.prune_floor
     << ";full=" << q.require_full_pack << ";repack=" << q.use_repack << ";budget=" << q.repack_budget.count()
     << ";rot=" << q.rotation_enabled << ";seed=" << q.seed << ";policy=" << (q.policy ? "custom" : "greedy")
     << ";episode=" << (cfg.episode.episode_budget ? cfg.episode.episode_budget->count() : -1)
     << ";max_actions=" << cfg.episode.max_actions;
  return fnv1a_hex(os.str());
}

void write_csv(std::ostream& out, const SuiteReport& report) {
  out << "scenario,seed,rotation,repack,utilization_pct,packed_items,packing_steps,repacked_items,repack_time_ms\n";
  for (const EpisodeReport& e : report.episodes) {
    out << e.scenario << ',' << e.seed << ',' << e.rotation << ',' << e.repack << ',' << std::fixed
        << std::setprecision(2) << e.utilization * 100.0 << ',' << e.packed_items << ',' << e.packing_steps << ','
        << e.repacked_items << ',' << std::setprecision(3) << e.repack_time_ms << '\n';
    out << std::defaultfloat;
  }
}

void write_json(std::ostream& out, const SuiteReport& report) {
  auto round2 = [](double v) { return std::round(v * 100.0) / 100.0; };
  nlohmann::ordered_json j;
  j["metadata"] = {{"engine_version", report.engine_version}, {"config_hash", report.config_hash}};
  auto aggs = nlohmann::ordered_json::array();
  for (const ScenarioAggregate& a : report.aggregates) {
    aggs.push_back({{"scenario", a.scenario},
                    {"episodes", a.episodes},
                    {"mean_utilization_pct", round2(a.mean_utilization * 100.0)},
                    {"total_packed_items", a.total_packed},
                    {"total_packing_steps", a.total_steps},
                    {"total_repacked_items", a.total_repacked},
                    {"mean_repacked_items", a.mean_repacked},
                    {"mean_repack_time_ms", a.mean_repack_ms}});
  }
  j["aggregates"] = std::move(aggs);
  auto eps = nlohmann::ordered_json::array();
  for (const EpisodeReport& e : report.episodes) {
    eps.push_back({{"scenario", e.scenario},
                   {"instance", e.instance},
                   {"seed", e.seed},
                   {"rotation", e.rotation},
                   {"repack", e.repack},
                   {"utilization_pct", round2(e.utilization * 100.0)},
                   {"packed_items", e.packed_items},
                   {"packing_steps", e.packing_steps},
                   {"repacked_items", e.repacked_items},
                   {"repack_time_ms", e.repack_time_ms},
                   {"truncated", e.truncated}});
  }
  j["episodes"] = std::move(eps);
  out << j.dump(2) << '\n';
}

}  // namespace binpack
