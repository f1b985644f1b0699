#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace binpack {

enum class Orientation : std::uint8_t { deg0 = 0, deg90 = 1 };

const char* to_string(Orientation o);

struct ItemSpec {
  int id = 0;
  int w = 1;
  int h = 1;

  int area() const { return w * h; }
  bool operator==(const ItemSpec&) const = default;
};

struct RotatedSize {
  int lx = 1;
  int ly = 1;

  bool operator==(const RotatedSize&) const = default;
};

RotatedSize rotated_size(const ItemSpec& item, Orientation phi);

// Row-wise anchor index; the value W*H is reserved for "no position".
struct PositionAction {
  int idx = 0;

  static PositionAction no_position(int width, int height) { return {width * height}; }
  bool is_no_position(int width, int height) const { return idx == width * height; }
  bool operator==(const PositionAction&) const = default;
};

struct Anchor {
  int x = 0;
  int y = 0;

  bool operator==(const Anchor&) const = default;
};

PositionAction encode_action(int x, int y, int width, int height);
Anchor decode_action(PositionAction a, int width, int height);

struct Placement {
  ItemSpec item;
  Orientation orientation = Orientation::deg0;
  int x = 0;
  int y = 0;
  std::uint64_t seq = 0;

  RotatedSize size() const { return rotated_size(item, orientation); }
  bool operator==(const Placement&) const = default;
};

class PlacementConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPacked : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a caller breaks a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline constexpr int kNoOwner = -1;

// Padded occupancy map. Interior cell (x, y), 0-based, lives at padded
// coordinate (x + 1, y + 1); the one-cell border is permanently occupied.
// A per-cell owner id sits alongside the binary map so that unpacking can
// verify attribution.
class GridBin {
 public:
  GridBin(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  int cells() const { return width_ * height_; }
  int occupied_cells() const { return occupied_; }

  // Padded access: px in [0, W+1], py in [0, H+1].
  std::uint8_t padded(int px, int py) const { return occ_[index(px, py)]; }
  bool occupied(int x, int y) const { return occ_[index(x + 1, y + 1)] != 0; }
  int owner(int x, int y) const { return owner_[index(x + 1, y + 1)]; }

  bool fits(int x, int y, RotatedSize size) const;

  void pack(const Placement& p);
  void unpack(const Placement& p);

  // Marks interior cells occupied without an owning item (fixtures, tests).
  void block(int x, int y);

  bool operator==(const GridBin&) const = default;

  std::string to_string() const;

 private:
  int index(int px, int py) const { return py * (width_ + 2) + px; }

  int width_;
  int height_;
  int occupied_ = 0;
  std::vector<std::uint8_t> occ_;
  std::vector<int> owner_;
};

GridBin apply_pack(GridBin bin, const Placement& p);
GridBin apply_unpack(GridBin bin, const Placement& p);

// Bit j < W*H is set iff anchoring at decode(j) is in bounds and collision
// free; bit W*H is set iff no other bit is.
std::vector<bool> feasibility_mask(const GridBin& bin, RotatedSize size);

// Occupied cells (border included) in the four strips that touch the
// footprint, evaluated before the item is placed.
int edge_contact_reward(const GridBin& bin, int x, int y, RotatedSize size);

double utilization(const GridBin& bin);
bool is_full(const GridBin& bin);

// Summed-area table over interior occupancy; O(1) collision queries for
// repeated anchor scans over one bin snapshot.
class OccupancyIndex {
 public:
  explicit OccupancyIndex(const GridBin& bin);

  bool fits(int x, int y, RotatedSize size) const;

 private:
  int width_;
  int height_;
  std::vector<int> sums_;
};

}  // namespace binpack
