#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

#include "binpack/datagen.hpp"
#include "oracles.hpp"

using namespace binpack;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("binpack_datagen_" + name);
}

std::map<std::pair<int, int>, int> multiset(const std::vector<std::pair<int, int>>& v) {
  std::map<std::pair<int, int>, int> m;
  for (const auto& p : v) ++m[p];
  return m;
}

// Replays a tiling on a plain grid; returns false on overlap or overflow.
bool tiles_exactly(const InstanceRecord& rec) {
  oracle::Plain g(rec.width, rec.height);
  for (const TilePiece& t : rec.tiling) {
    if (!oracle::fits(g, t.x, t.y, t.w, t.h)) return false;
    for (int y = t.y; y < t.y + t.h; ++y)
      for (int x = t.x; x < t.x + t.w; ++x) g.set(x, y);
  }
  for (int y = 0; y < rec.height; ++y)
    for (int x = 0; x < rec.width; ++x)
      if (!g.at(x, y)) return false;
  return true;
}

}  // namespace

TEST_CASE("gaussian weights") {
  const GaussianWeights one = gaussian_prob(1, 2.0);
  CHECK(one(1) == doctest::Approx(1.0));

  const GaussianWeights g = gaussian_prob(10, 2.0);
  // Independent evaluation of the normalized bell at mu = 5.5.
  double z = 0;
  for (int d = 1; d <= 10; ++d) z += std::exp(-(d - 5.5) * (d - 5.5) / 8.0);
  for (int d = 1; d <= 10; ++d) CHECK(g(d) == doctest::Approx(std::exp(-(d - 5.5) * (d - 5.5) / 8.0) / z));
  CHECK(g(5) == doctest::Approx(g(6)));
  CHECK(g(1) < g(5));
  CHECK(std::accumulate(g.p.begin(), g.p.end(), 0.0) == doctest::Approx(1.0));

  for (int n = 4; n <= 20; ++n) {
    const GaussianWeights h = gaussian_prob(n, 2.0);
    CHECK(h(1) < h((n + 1) / 2));
    for (double p : h.p) CHECK(p > 0);
  }
  CHECK_THROWS_AS(gaussian_prob(0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_prob(3, 0.0), std::invalid_argument);
}

TEST_CASE("full set: single cell bin") {
  const InstanceRecord r = generate_full_set(1, 1, 2.0, 7);
  REQUIRE(r.items.size() == 1);
  CHECK(r.items[0].w == 1);
  CHECK(r.items[0].h == 1);
  CHECK(tiles_exactly(r));
}

TEST_CASE("full set: 10x10 tiles the bin") {
  const InstanceRecord r = generate_full_set(10, 10, 2.0, 12345);
  int area = 0;
  for (const ItemSpec& it : r.items) area += it.area();
  CHECK(area == 100);
  CHECK(tiles_exactly(r));
  CHECK_NOTHROW(validate(r));
}

TEST_CASE("full set: size-sum bound holds at sample time") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const InstanceRecord r = generate_full_set(4, 4, 2.0, seed);
    int mw = 0, mh = 0;
    // A trailing 1x1 fill also satisfies the bound, so every piece is checked.
    for (const TilePiece& t : r.tiling) {
      CHECK(t.w + t.h <= 8);
      CHECK(t.w + t.h <= std::max(2, 8 - mw - mh));
      mw = std::max(mw, t.w);
      mh = std::max(mh, t.h);
    }
    CHECK(tiles_exactly(r));
  }
}

TEST_CASE("full set: exact cover and termination across sizes") {
  for (int w = 1; w <= 20; ++w) {
    for (int h = 1; h <= 20; ++h) {
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const InstanceRecord r = generate_full_set(w, h, 2.0, seed * 1000 + w * 20 + h);
        REQUIRE(tiles_exactly(r));
        int area = 0;
        for (const ItemSpec& it : r.items) area += it.area();
        REQUIRE(area == w * h);
      }
    }
  }
}

TEST_CASE("full set: determinism and shuffle multiset") {
  for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
    const InstanceRecord a = generate_full_set(10, 10, 2.0, seed);
    const InstanceRecord b = generate_full_set(10, 10, 2.0, seed);
    CHECK(serialize(a) == serialize(b));
    std::vector<std::pair<int, int>> before, after;
    for (const TilePiece& t : a.tiling) before.emplace_back(t.w, t.h);
    for (const ItemSpec& it : a.items) after.emplace_back(it.w, it.h);
    CHECK(multiset(before) == multiset(after));
    for (std::size_t i = 0; i < a.items.size(); ++i) CHECK(a.items[i].id == static_cast<int>(i));
  }
  CHECK(serialize(generate_full_set(10, 10, 2.0, 1)) != serialize(generate_full_set(10, 10, 2.0, 2)));
}

TEST_CASE("random instances") {
  const InstanceRecord r = generate_random_instance(10, 10, 500, 3);
  CHECK(r.items.size() == 500);
  for (const ItemSpec& it : r.items) {
    CHECK(it.w >= 1);
    CHECK(it.w <= 5);
    CHECK(it.h >= 1);
    CHECK(it.h <= 5);
  }
  for (const ItemSpec& it : generate_random_instance(2, 2, 50, 4).items) {
    CHECK(it.w == 1);
    CHECK(it.h == 1);
  }

  const InstanceRecord big = generate_random_instance(10, 10, 10000, 2024);
  double mean = 0;
  std::array<int, 5> counts{};
  for (const ItemSpec& it : big.items) {
    mean += it.w;
    ++counts[static_cast<std::size_t>(it.w - 1)];
  }
  mean /= 10000.0;
  CHECK(std::abs(mean - 3.0) <= 0.05);
  // Chi-square against Uniform{1..5}; 4 dof, 99.9% quantile is 18.47.
  double chi2 = 0;
  for (int c : counts) chi2 += (c - 2000.0) * (c - 2000.0) / 2000.0;
  CHECK(chi2 < 18.47);

  CHECK_THROWS_AS(generate_random_instance(1, 10, 5, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_random_instance(10, 10, 0, 0), std::invalid_argument);
}

TEST_CASE("serialization round trip") {
  std::vector<InstanceRecord> recs;
  for (int i = 0; i < 1000; ++i) {
    if (i % 2 == 0) {
      recs.push_back(generate_full_set(4 + i % 7, 3 + i % 5, 2.0, static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ull));
    } else {
      recs.push_back(generate_random_instance(10, 8, 1 + i % 40, static_cast<std::uint64_t>(i)));
    }
  }
  for (const char* name : {"rt.jsonl", "rt.jsonl.gz"}) {
    const auto path = temp_file(name).string();
    write_instances(path, recs);
    const auto back = read_instances(path);
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(back[i] == recs[i]);
      CHECK(serialize(back[i]) == serialize(recs[i]));
    }
    std::filesystem::remove(path);
  }
  const std::string line = serialize(recs[0]);
  CHECK(line.rfind("{\"gen\":\"FULL_SET\",\"W\":4,\"H\":3,\"sigma\":2.0,\"seed\":", 0) == 0);
}

TEST_CASE("validation errors carry line numbers") {
  const auto path = temp_file("bad.jsonl").string();
  {
    std::ofstream out(path);
    out << serialize(generate_random_instance(10, 10, 3, 1)) << "\n";
    // 9x11 = 99 cells in a 10x10 bin.
    out << R"({"gen":"FULL_SET","W":10,"H":10,"sigma":2.0,"seed":5,"items":[[9,11]]})" << "\n";
  }
  try {
    read_instances(path);
    FAIL("expected a validation error");
  } catch (const InstanceFormatError& e) {
    CHECK(e.line() == 2);
  }

  {
    std::ofstream out(path);
    out << "\n" << serialize(generate_full_set(3, 3, 2.0, 1)) << "\n{not json\n";
  }
  try {
    read_instances(path);
    FAIL("expected a parse error");
  } catch (const InstanceFormatError& e) {
    CHECK(e.line() == 3);
  }

  CHECK_THROWS_AS(parse_record(R"({"gen":"RANDOM","W":10,"H":10,"seed":1,"items":[[6,1]]})"), InstanceFormatError);
  CHECK_THROWS_AS(parse_record(R"({"gen":"OTHER","W":10,"H":10,"seed":1,"items":[]})"), InstanceFormatError);
  CHECK_THROWS_AS(
      parse_record(R"({"gen":"FULL_SET","W":2,"H":2,"seed":1,"items":[[2,1],[2,1]],"tiling":[[0,0,2,1],[0,0,2,1]]})"),
      InstanceFormatError);

  { std::ofstream out(path, std::ios::trunc); }
  CHECK(read_instances(path).empty());
  std::filesystem::remove(path);
  CHECK_THROWS(read_instances(temp_file("missing.jsonl").string()));
}
