#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "binpack/grid.hpp"

namespace binpack {

enum class Generator { full_set, random };

const char* to_string(Generator g);

struct TilePiece {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  bool operator==(const TilePiece&) const = default;
};

struct InstanceRecord {
  Generator gen = Generator::random;
  int width = 10;
  int height = 10;
  std::optional<double> sigma;  // full-set only
  std::uint64_t seed = 0;
  std::vector<ItemSpec> items;    // arrival order; ids are 0..n-1
  std::vector<TilePiece> tiling;  // full-set only: placements in generation order

  bool operator==(const InstanceRecord&) const = default;
};

struct GaussianWeights {
  std::vector<double> p;  // p[d - 1] for d in [1, n]

  double operator()(int d) const { return p.at(static_cast<std::size_t>(d - 1)); }
};

// Bell over [1, n] centred at (n + 1) / 2.
GaussianWeights gaussian_prob(int n, double sigma);

// Builds an exact tiling greedily: sizes are drawn from the Gaussian weights,
// restricted to those that keep the size-sum bound, fit the remaining area and
// have a feasible anchor; each goes to a maximum edge-contact anchor with
// random ties. A last single free cell becomes a 1x1. Items are shuffled.
InstanceRecord generate_full_set(int width, int height, double sigma, std::uint64_t seed);

// Independent uniform sides in [1, W/2] x [1, H/2].
InstanceRecord generate_random_instance(int width, int height, int count, std::uint64_t seed);

class InstanceFormatError : public std::runtime_error {
 public:
  InstanceFormatError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Throws std::invalid_argument when a generator invariant does not hold.
void validate(const InstanceRecord& rec);

std::string serialize(const InstanceRecord& rec);
InstanceRecord parse_record(std::string_view line, int line_number = 1);

// One record per line. Paths ending in .gz are compressed on write; reads
// accept plain or gzip input either way.
void write_instances(const std::string& path, std::span<const InstanceRecord> records);
std::vector<InstanceRecord> read_instances(const std::string& path);

}  // namespace binpack
