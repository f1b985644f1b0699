#include "binpack/datagen.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "binpack/policy.hpp"
#include "json.hpp"

namespace binpack {

const char* to_string(Generator g) { return g == Generator::full_set ? "FULL_SET" : "RANDOM"; }

GaussianWeights gaussian_prob(int n, double sigma) {
  if (n < 1 || !(sigma > 0)) throw std::invalid_argument("gaussian weights need n >= 1 and sigma > 0");
  const double mu = (n + 1) / 2.0;
  GaussianWeights g;
  double total = 0;
  for (int d = 1; d <= n; ++d) {
    const double v = std::exp(-(d - mu) * (d - mu) / (2 * sigma * sigma));
    g.p.push_back(v);
    total += v;
  }
  for (double& v : g.p) v /= total;
  return g;
}

InstanceRecord generate_full_set(int width, int height, double sigma, std::uint64_t seed) {
  InstanceRecord rec{Generator::full_set, width, height, sigma, seed, {}, {}};
  std::mt19937_64 rng(seed);
  const GaussianWeights pw = gaussian_prob(width, sigma);
  const GaussianWeights ph = gaussian_prob(height, sigma);
  const int cells = width * height;

  GridBin bin(width, height);
  int area = 0, max_w = 0, max_h = 0;
  std::vector<std::pair<int, int>> sizes;
  std::vector<double> weights;
  while (area < cells - 1) {
    // The size-sum bound never drops below 2 so that a 1x1 stays admissible;
    // taken literally it can exclude every size once a wide and a tall item
    // are both placed.
    const int bound = std::max(2, width + height - max_w - max_h);
    const OccupancyIndex index(bin);
    sizes.clear();
    weights.clear();
    for (int w = 1; w <= width; ++w) {
      for (int h = 1; h <= height; ++h) {
        if (w + h > bound || area + w * h > cells) continue;
        bool feasible = false;
        for (int y = 0; y + h <= height && !feasible; ++y)
          for (int x = 0; x + w <= width && !feasible; ++x) feasible = index.fits(x, y, {w, h});
        if (!feasible) continue;
        sizes.emplace_back(w, h);
        weights.push_back(pw(w) * ph(h));
      }
    }
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    const auto [w, h] = sizes[pick(rng)];
    const PolicyDecision d = greedy_place(bin, {w, h}, rng);
    const Anchor a = decode_action(d.action, width, height);
    const int id = static_cast<int>(rec.tiling.size());
    bin.pack({{id, w, h}, Orientation::deg0, a.x, a.y, 0});
    rec.tiling.push_back({a.x, a.y, w, h});
    area += w * h;
    max_w = std::max(max_w, w);
    max_h = std::max(max_h, h);
  }
  if (area == cells - 1) {
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        if (!bin.occupied(x, y)) rec.tiling.push_back({x, y, 1, 1});
  }

  std::vector<std::pair<int, int>> dims;
  for (const TilePiece& t : rec.tiling) dims.emplace_back(t.w, t.h);
  std::shuffle(dims.begin(), dims.end(), rng);
  for (std::size_t i = 0; i < dims.size(); ++i) rec.items.push_back({static_cast<int>(i), dims[i].first, dims[i].second});
  return rec;
}

InstanceRecord generate_random_instance(int width, int height, int count, std::uint64_t seed) {
  if (width < 2 || height < 2 || count < 1) throw std::invalid_argument("random instances need W, H >= 2 and count >= 1");
  InstanceRecord rec{Generator::random, width, height, std::nullopt, seed, {}, {}};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dw(1, width / 2), dh(1, height / 2);
  for (int i = 0; i < count; ++i) {
    const int w = dw(rng);
    const int h = dh(rng);
    rec.items.push_back({i, w, h});
  }
  return rec;
}

void validate(const InstanceRecord& rec) {
  if (rec.width < 1 || rec.height < 1) throw std::invalid_argument("bin dimensions must be positive");
  int area = 0;
  for (std::size_t i = 0; i < rec.items.size(); ++i) {
    const ItemSpec& it = rec.items[i];
    if (it.w < 1 || it.h < 1) throw std::invalid_argument("item sides must be positive");
    if (it.id != static_cast<int>(i)) throw std::invalid_argument("item ids must follow arrival order");
    area += it.area();
  }
  if (rec.gen == Generator::random) {
    for (const ItemSpec& it : rec.items) {
      if (it.w > rec.width / 2 || it.h > rec.height / 2) {
        throw std::invalid_argument("random item exceeds half the bin");
      }
    }
    return;
  }
  if (area != rec.width * rec.height) {
    throw std::invalid_argument("full-set areas sum to " + std::to_string(area) + ", bin has " +
                                std::to_string(rec.width * rec.height));
  }
  if (!rec.tiling.empty()) {
    GridBin bin(rec.width, rec.height);
    for (std::size_t i = 0; i < rec.tiling.size(); ++i) {
      const TilePiece& t = rec.tiling[i];
      try {
        bin.pack({{static_cast<int>(i), t.w, t.h}, Orientation::deg0, t.x, t.y, 0});
      } catch (const PlacementConflict&) {
        throw std::invalid_argument("tiling pieces overlap or overflow");
      }
    }
    if (!is_full(bin)) throw std::invalid_argument("tiling leaves cells uncovered");
  }
}

std::string serialize(const InstanceRecord& rec) {
  nlohmann::ordered_json j;
  j["gen"] = to_string(rec.gen);
  j["W"] = rec.width;
  j["H"] = rec.height;
  if (rec.sigma) j["sigma"] = *rec.sigma;
  j["seed"] = rec.seed;
  auto items = nlohmann::ordered_json::array();
  for (const ItemSpec& it : rec.items) items.push_back({it.w, it.h});
  j["items"] = std::move(items);
  if (!rec.tiling.empty()) {
    auto tiles = nlohmann::ordered_json::array();
    for (const TilePiece& t : rec.tiling) tiles.push_back({t.x, t.y, t.w, t.h});
    j["tiling"] = std::move(tiles);
  }
  return j.dump();
}

InstanceRecord parse_record(std::string_view line, int line_number) {
  InstanceRecord rec;
  try {
    const auto j = nlohmann::json::parse(line);
    const std::string gen = j.at("gen").get<std::string>();
    if (gen == "FULL_SET") {
      rec.gen = Generator::full_set;
    } else if (gen == "RANDOM") {
      rec.gen = Generator::random;
    } else {
      throw InstanceFormatError(line_number, "unknown generator '" + gen + "'");
    }
    rec.width = j.at("W").get<int>();
    rec.height = j.at("H").get<int>();
    if (j.contains("sigma")) rec.sigma = j.at("sigma").get<double>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    int id = 0;
    for (const auto& it : j.at("items")) {
      if (!it.is_array() || it.size() != 2) throw InstanceFormatError(line_number, "items must be [w, h] pairs");
      rec.items.push_back({id++, it.at(0).get<int>(), it.at(1).get<int>()});
    }
    if (j.contains("tiling")) {
      for (const auto& t : j.at("tiling")) {
        if (!t.is_array() || t.size() != 4) throw InstanceFormatError(line_number, "tiling entries are [x, y, w, h]");
        rec.tiling.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>(), t.at(3).get<int>()});
      }
    }
    validate(rec);
  } catch (const InstanceFormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw InstanceFormatError(line_number, e.what());
  }
  return rec;
}

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void write_instances(const std::string& path, std::span<const InstanceRecord> records) {
  std::string text;
  for (const InstanceRecord& r : records) {
    text += serialize(r);
    text += '\n';
  }
  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (f == nullptr) throw std::runtime_error("cannot open " + path + " for writing");
    const bool ok = text.empty() || gzwrite(f, text.data(), static_cast<unsigned>(text.size())) > 0;
    gzclose(f);
    if (!ok) throw std::runtime_error("failed writing " + path);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
}

std::vector<InstanceRecord> read_instances(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw std::runtime_error("cannot open " + path);
  std::vector<InstanceRecord> out;
  std::string line;
  char buf[1 << 14];
  int line_number = 0;
  auto flush = [&] {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) out.push_back(parse_record(line, line_number));
    line.clear();
  };
  try {
    while (gzgets(f, buf, sizeof buf) != nullptr) {
      line += buf;
      if (!line.empty() && line.back() == '\n') {
        line.pop_back();
        flush();
      }
    }
    if (!line.empty()) flush();
  } catch (...) {
    gzclose(f);
    throw;
  }
  gzclose(f);
  return out;
}

}  // namespace binpack
