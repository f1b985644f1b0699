#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "binpack/grid.hpp"

namespace binpack {

struct PolicyDecision {
  PositionAction action;
  int score = 0;  // edge contact at the chosen anchor, 0 for no-position

  bool operator==(const PolicyDecision&) const = default;
};

struct TieBreakRule {
  enum class Kind { smallest_index, seeded_random };

  Kind kind = Kind::smallest_index;
  std::uint64_t seed = 0;

  static TieBreakRule smallest_index() { return {}; }
  static TieBreakRule seeded_random(std::uint64_t seed) { return {Kind::seeded_random, seed}; }
};

// Maximizes edge contact over all feasible anchors.
PolicyDecision greedy_place(const GridBin& bin, RotatedSize size, const TieBreakRule& tiebreak);

// Same maximizer; ties drawn uniformly from a caller-owned stream.
PolicyDecision greedy_place(const GridBin& bin, RotatedSize size, std::mt19937_64& rng);

// The low-level placement decision consumed by the high-level search.
class LowLevelPolicy {
 public:
  virtual ~LowLevelPolicy() = default;
  virtual PolicyDecision decide(const GridBin& bin, RotatedSize size) const = 0;
};

class GreedyPolicy final : public LowLevelPolicy {
 public:
  explicit GreedyPolicy(TieBreakRule rule = TieBreakRule::smallest_index()) : rule_(rule) {}

  PolicyDecision decide(const GridBin& bin, RotatedSize size) const override {
    return greedy_place(bin, size, rule_);
  }

 private:
  TieBreakRule rule_;
};

// ---------------------------------------------------------------------------
// External policy line protocol
//
//   request:  QUERY W H lx ly <hex>
//   reply:    ACT <idx>            idx in [0, W*H]
//
// <hex> packs the W*H interior cells row-wise (cell i = x + y*W). Nibble k
// carries cells 4k..4k+3 with cell 4k in the most significant bit; the last
// nibble is zero padded. Digits are lowercase.
// ---------------------------------------------------------------------------

class PolicyTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PolicyProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string encode_occupancy_hex(const GridBin& bin);
std::string encode_query(const GridBin& bin, RotatedSize size);

struct DecodedQuery {
  GridBin bin;
  RotatedSize size;
};

// Throws PolicyProtocolError on malformed input.
DecodedQuery decode_query(std::string_view line);

// Returns the action index, or nullopt when the line is not a well-formed reply.
std::optional<int> parse_reply(std::string_view line);

// Answers QUERY lines from `in` with the given policy until EOF.
void serve_policy(std::istream& in, std::ostream& out, const LowLevelPolicy& policy);

struct ExternalPolicyOptions {
  std::chrono::milliseconds timeout{500};
  std::function<void(std::string_view)> warn;  // defaults to stderr
};

// A child process speaking the line protocol on its stdin/stdout. One query
// is in flight per handle; concurrent callers are serialized.
class ExternalPolicyHandle final : public LowLevelPolicy {
 public:
  explicit ExternalPolicyHandle(std::string command, ExternalPolicyOptions options = {});
  ~ExternalPolicyHandle() override;

  ExternalPolicyHandle(const ExternalPolicyHandle&) = delete;
  ExternalPolicyHandle& operator=(const ExternalPolicyHandle&) = delete;

  // Infeasible replies are coerced to the greedy fallback and reported
  // through the warning sink; timeouts and malformed replies throw.
  PolicyDecision decide(const GridBin& bin, RotatedSize size) const override;

  int coerced_count() const;

 private:
  void start() const;
  void stop() const;
  std::string round_trip(const std::string& request) const;

  std::string command_;
  ExternalPolicyOptions options_;
  mutable std::mutex mutex_;
  mutable int fd_ = -1;
  mutable int pid_ = -1;
  mutable std::string pending_;
  mutable int coerced_ = 0;
};

PolicyDecision external_policy_query(const GridBin& bin, RotatedSize size, const ExternalPolicyHandle& endpoint);

}  // namespace binpack
