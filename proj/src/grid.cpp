#include "binpack/grid.hpp"

#include <sstream>

namespace binpack {

const char* to_string(Orientation o) { return o == Orientation::deg0 ? "deg0" : "deg90"; }

RotatedSize rotated_size(const ItemSpec& item, Orientation phi) {
  if (phi == Orientation::deg0) return {item.w, item.h};
  return {item.h, item.w};
}

PositionAction encode_action(int x, int y, int width, int height) {
  if (x < 0 || x >= width || y < 0 || y >= height) {
    throw std::out_of_range("anchor (" + std::to_string(x) + ", " + std::to_string(y) +
                            ") outside " + std::to_string(width) + "x" + std::to_string(height));
  }
  return {x + y * width};
}

Anchor decode_action(PositionAction a, int width, int height) {
  if (a.idx < 0 || a.idx >= width * height) {
    throw std::out_of_range("action index " + std::to_string(a.idx) + " has no anchor");
  }
  return {a.idx % width, a.idx / width};
}

GridBin::GridBin(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw ContractViolation("bin dimensions must be positive");
  occ_.assign(static_cast<std::size_t>((width + 2) * (height + 2)), 0);
  owner_.assign(occ_.size(), kNoOwner);
  for (int px = 0; px < width + 2; ++px) {
    occ_[index(px, 0)] = 1;
    occ_[index(px, height + 1)] = 1;
  }
  for (int py = 0; py < height + 2; ++py) {
    occ_[index(0, py)] = 1;
    occ_[index(width + 1, py)] = 1;
  }
}

bool GridBin::fits(int x, int y, RotatedSize size) const {
  if (x < 0 || y < 0 || x + size.lx > width_ || y + size.ly > height_) return false;
  for (int py = y + 1; py <= y + size.ly; ++py) {
    for (int px = x + 1; px <= x + size.lx; ++px) {
      if (occ_[index(px, py)]) return false;
    }
  }
  return true;
}

void GridBin::pack(const Placement& p) {
  const RotatedSize s = p.size();
  if (p.x < 0 || p.y < 0 || p.x + s.lx > width_ || p.y + s.ly > height_) {
    throw PlacementConflict("item " + std::to_string(p.item.id) + " overflows the bin");
  }
  if (!fits(p.x, p.y, s)) {
    throw PlacementConflict("item " + std::to_string(p.item.id) + " overlaps occupied cells");
  }
  for (int py = p.y + 1; py <= p.y + s.ly; ++py) {
    for (int px = p.x + 1; px <= p.x + s.lx; ++px) {
      occ_[index(px, py)] = 1;
      owner_[index(px, py)] = p.item.id;
    }
  }
  occupied_ += s.lx * s.ly;
}

void GridBin::unpack(const Placement& p) {
  const RotatedSize s = p.size();
  if (p.x < 0 || p.y < 0 || p.x + s.lx > width_ || p.y + s.ly > height_) {
    throw NotPacked("item " + std::to_string(p.item.id) + " is not in the bin");
  }
  for (int py = p.y + 1; py <= p.y + s.ly; ++py) {
    for (int px = p.x + 1; px <= p.x + s.lx; ++px) {
      if (!occ_[index(px, py)] || owner_[index(px, py)] != p.item.id) {
        throw NotPacked("item " + std::to_string(p.item.id) + " is not in the bin");
      }
    }
  }
  for (int py = p.y + 1; py <= p.y + s.ly; ++py) {
    for (int px = p.x + 1; px <= p.x + s.lx; ++px) {
      occ_[index(px, py)] = 0;
      owner_[index(px, py)] = kNoOwner;
    }
  }
  occupied_ -= s.lx * s.ly;
}

void GridBin::block(int x, int y) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) throw std::out_of_range("block outside bin");
  auto& cell = occ_[index(x + 1, y + 1)];
  if (!cell) {
    cell = 1;
    ++occupied_;
  }
}

std::string GridBin::to_string() const {
  std::ostringstream out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (!occupied(x, y)) {
        out << '.';
      } else {
        const int id = owner(x, y);
        out << (id == kNoOwner ? '#' : static_cast<char>('A' + id % 26));
      }
    }
    out << '\n';
  }
  return out.str();
}

GridBin apply_pack(GridBin bin, const Placement& p) {
  bin.pack(p);
  return bin;
}

GridBin apply_unpack(GridBin bin, const Placement& p) {
  bin.unpack(p);
  return bin;
}

OccupancyIndex::OccupancyIndex(const GridBin& bin) : width_(bin.width()), height_(bin.height()) {
  const int stride = width_ + 1;
  sums_.assign(static_cast<std::size_t>(stride * (height_ + 1)), 0);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      sums_[(y + 1) * stride + (x + 1)] = (bin.occupied(x, y) ? 1 : 0) + sums_[y * stride + (x + 1)] +
                                          sums_[(y + 1) * stride + x] - sums_[y * stride + x];
    }
  }
}

bool OccupancyIndex::fits(int x, int y, RotatedSize size) const {
  if (x < 0 || y < 0 || x + size.lx > width_ || y + size.ly > height_) return false;
  const int stride = width_ + 1;
  const int x1 = x + size.lx;
  const int y1 = y + size.ly;
  const int sum = sums_[y1 * stride + x1] - sums_[y * stride + x1] - sums_[y1 * stride + x] + sums_[y * stride + x];
  return sum == 0;
}

std::vector<bool> feasibility_mask(const GridBin& bin, RotatedSize size) {
  const int w = bin.width();
  const int h = bin.height();
  std::vector<bool> mask(static_cast<std::size_t>(w * h + 1), false);
  const OccupancyIndex index(bin);
  bool any = false;
  for (int y = 0; y + size.ly <= h; ++y) {
    for (int x = 0; x + size.lx <= w; ++x) {
      if (index.fits(x, y, size)) {
        mask[static_cast<std::size_t>(x + y * w)] = true;
        any = true;
      }
    }
  }
  mask.back() = !any;
  return mask;
}

int edge_contact_reward(const GridBin& bin, int x, int y, RotatedSize size) {
  if (!bin.fits(x, y, size)) {
    throw ContractViolation("edge contact requested for an infeasible placement");
  }
  // Footprint spans padded [x+1, x+lx] x [y+1, y+ly]; the strips sit just outside.
  int reward = 0;
  for (int j = 1; j <= size.lx; ++j) {
    reward += bin.padded(x + j, y);
    reward += bin.padded(x + j, y + size.ly + 1);
  }
  for (int j = 1; j <= size.ly; ++j) {
    reward += bin.padded(x, y + j);
    reward += bin.padded(x + size.lx + 1, y + j);
  }
  return reward;
}

double utilization(const GridBin& bin) {
  return static_cast<double>(bin.occupied_cells()) / static_cast<double>(bin.cells());
}

bool is_full(const GridBin& bin) { return bin.occupied_cells() == bin.cells(); }

}  // namespace binpack
