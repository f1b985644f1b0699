#include "binpack/policy.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace binpack {

namespace {

struct BestAnchors {
  int score = -1;
  std::vector<int> indices;  // ascending, all at `score`
};

BestAnchors scan(const GridBin& bin, RotatedSize size) {
  BestAnchors best;
  const OccupancyIndex index(bin);
  const int w = bin.width();
  for (int y = 0; y + size.ly <= bin.height(); ++y) {
    for (int x = 0; x + size.lx <= w; ++x) {
      if (!index.fits(x, y, size)) continue;
      const int r = edge_contact_reward(bin, x, y, size);
      if (r > best.score) {
        best.score = r;
        best.indices.assign(1, x + y * w);
      } else if (r == best.score) {
        best.indices.push_back(x + y * w);
      }
    }
  }
  return best;
}

template <class Rng>
PolicyDecision pick(const GridBin& bin, const BestAnchors& best, Rng* rng) {
  if (best.indices.empty()) return {PositionAction::no_position(bin.width(), bin.height()), 0};
  std::size_t k = 0;
  if (rng != nullptr && best.indices.size() > 1) {
    std::uniform_int_distribution<std::size_t> dist(0, best.indices.size() - 1);
    k = dist(*rng);
  }
  return {PositionAction{best.indices[k]}, best.score};
}

}  // namespace

PolicyDecision greedy_place(const GridBin& bin, RotatedSize size, const TieBreakRule& tiebreak) {
  const BestAnchors best = scan(bin, size);
  if (tiebreak.kind == TieBreakRule::Kind::seeded_random) {
    std::mt19937_64 rng(tiebreak.seed);
    return pick(bin, best, &rng);
  }
  return pick<std::mt19937_64>(bin, best, nullptr);
}

PolicyDecision greedy_place(const GridBin& bin, RotatedSize size, std::mt19937_64& rng) {
  return pick(bin, scan(bin, size), &rng);
}

std::string encode_occupancy_hex(const GridBin& bin) {
  static constexpr char kDigits[] = "0123456789abcdef";
  const int n = bin.cells();
  std::string hex;
  hex.reserve(static_cast<std::size_t>((n + 3) / 4));
  for (int base = 0; base < n; base += 4) {
    int nibble = 0;
    for (int b = 0; b < 4; ++b) {
      const int i = base + b;
      const bool bit = i < n && bin.occupied(i % bin.width(), i / bin.width());
      nibble = (nibble << 1) | (bit ? 1 : 0);
    }
    hex.push_back(kDigits[nibble]);
  }
  return hex;
}

std::string encode_query(const GridBin& bin, RotatedSize size) {
  std::ostringstream out;
  out << "QUERY " << bin.width() << ' ' << bin.height() << ' ' << size.lx << ' ' << size.ly << ' '
      << encode_occupancy_hex(bin);
  return out.str();
}

DecodedQuery decode_query(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string tag, hex;
  int w = 0, h = 0, lx = 0, ly = 0;
  if (!(in >> tag >> w >> h >> lx >> ly >> hex) || tag != "QUERY") {
    throw PolicyProtocolError("malformed query: " + std::string(line));
  }
  if (w < 1 || h < 1 || lx < 1 || ly < 1 || hex.size() != static_cast<std::size_t>((w * h + 3) / 4)) {
    throw PolicyProtocolError("inconsistent query dimensions: " + std::string(line));
  }
  GridBin bin(w, h);
  for (std::size_t k = 0; k < hex.size(); ++k) {
    const char c = hex[k];
    int nibble = 0;
    if (c >= '0' && c <= '9') {
      nibble = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      nibble = c - 'a' + 10;
    } else {
      throw PolicyProtocolError("bad hex digit in query");
    }
    for (int b = 0; b < 4; ++b) {
      const int i = static_cast<int>(k) * 4 + b;
      if (i < w * h && (nibble >> (3 - b)) & 1) bin.block(i % w, i / w);
    }
  }
  return {bin, {lx, ly}};
}

std::optional<int> parse_reply(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string tag;
  long long idx = 0;
  if (!(in >> tag >> idx) || tag != "ACT") return std::nullopt;
  std::string rest;
  if (in >> rest) return std::nullopt;
  if (idx < 0 || idx > (1LL << 30)) return std::nullopt;
  return static_cast<int>(idx);
}

void serve_policy(std::istream& in, std::ostream& out, const LowLevelPolicy& policy) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const DecodedQuery q = decode_query(line);
      out << "ACT " << policy.decide(q.bin, q.size).action.idx << '\n';
    } catch (const PolicyProtocolError&) {
      out << "ERR\n";
    }
    out.flush();
  }
}

PolicyDecision external_policy_query(const GridBin& bin, RotatedSize size, const ExternalPolicyHandle& endpoint) {
  return endpoint.decide(bin, size);
}

}  // namespace binpack
