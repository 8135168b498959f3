#pragma once

#include <cstdint>
#include <mutex>
#include <vector>

#include "gaat/core_model.hpp"

namespace gaat {

class BloomFilter {
 public:
  BloomFilter(std::uint64_t bits, unsigned hashes);
  /// Optimal m and k for `capacity` keys at false-positive rate `fp_rate`.
  static BloomFilter sized_for(std::uint64_t capacity, double fp_rate);

  void insert(std::uint64_t h1, std::uint64_t h2);
  [[nodiscard]] bool maybe_contains(std::uint64_t h1, std::uint64_t h2) const;
  void clear();

  [[nodiscard]] std::uint64_t bit_count() const noexcept { return bits_; }
  [[nodiscard]] unsigned hash_count() const noexcept { return hashes_; }

 private:
  std::uint64_t bits_;
  unsigned hashes_;
  std::vector<std::uint64_t> words_;
};

struct ReplayFilterConfig {
  std::uint64_t capacity = 10'000'000;
  double fp_rate = 1e-4;
  double window_seconds = 600.0;  ///< two generations of window/2 each
};

enum class ReplayVerdict : std::uint8_t { Fresh, Replay };
GAAT_ENUM_NAMES(ReplayVerdict, std::string_view{"FRESH"}, std::string_view{"REPLAY"})

/// Two rotating Bloom generations keyed by (source, nonce). A key inserted at
/// time t is reported as a replay until at least t + window/2.
class ReplayFilter {
 public:
  explicit ReplayFilter(ReplayFilterConfig config = {});

  /// Reports REPLAY if present in either generation, else inserts and reports FRESH.
  ReplayVerdict check(std::uint64_t nonce, const AgentId& source, double now);
  /// Query only, no insertion and no rotation.
  [[nodiscard]] bool probably_contains(std::uint64_t nonce, const AgentId& source) const;

  [[nodiscard]] const ReplayFilterConfig& config() const noexcept { return config_; }
  [[nodiscard]] const BloomFilter& current_generation() const noexcept { return gens_[current_]; }

 private:
  void rotate_to(double now);

  ReplayFilterConfig config_;
  BloomFilter gens_[2];
  std::size_t current_ = 0;
  double generation_start_ = 0.0;
  bool started_ = false;
  mutable std::mutex mutex_;
};

/// (source, nonce) -> two independent 64-bit hashes.
void replay_key_hashes(std::uint64_t nonce, const AgentId& source, std::uint64_t& h1, std::uint64_t& h2);

}  // namespace gaat
