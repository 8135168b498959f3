#include "gaat/replay_filter.hpp"

#include <cmath>

namespace gaat {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void replay_key_hashes(std::uint64_t nonce, const AgentId& source, std::uint64_t& h1, std::uint64_t& h2) {
  const std::uint64_t s = splitmix64(fnv1a(source.str()));
  h1 = splitmix64(nonce ^ s);
  h2 = splitmix64(h1 ^ 0x6a09e667f3bcc909ULL ^ (s << 1)) | 1ULL;
}

BloomFilter::BloomFilter(std::uint64_t bits, unsigned hashes)
    : bits_(bits), hashes_(hashes), words_((bits + 63) / 64, 0) {
  if (bits == 0 || hashes == 0) throw ConfigError("bloom filter needs at least one bit and one hash");
}

BloomFilter BloomFilter::sized_for(std::uint64_t capacity, double fp_rate) {
  if (capacity == 0 || !(fp_rate > 0.0 && fp_rate < 1.0)) throw ConfigError("invalid bloom sizing");
  const double ln2 = std::log(2.0);
  const double m = std::ceil(-static_cast<double>(capacity) * std::log(fp_rate) / (ln2 * ln2));
  const double k = std::max(1.0, std::round(m / static_cast<double>(capacity) * ln2));
  return BloomFilter(static_cast<std::uint64_t>(m), static_cast<unsigned>(k));
}

// Kirsch-Mitzenmacher: index_i = h1 + i*h2 mod m.
void BloomFilter::insert(std::uint64_t h1, std::uint64_t h2) {
  for (unsigned i = 0; i < hashes_; ++i) {
    const std::uint64_t bit = (h1 + i * h2) % bits_;
    words_[bit >> 6] |= 1ULL << (bit & 63);
  }
}

bool BloomFilter::maybe_contains(std::uint64_t h1, std::uint64_t h2) const {
  for (unsigned i = 0; i < hashes_; ++i) {
    const std::uint64_t bit = (h1 + i * h2) % bits_;
    if ((words_[bit >> 6] & (1ULL << (bit & 63))) == 0) return false;
  }
  return true;
}

void BloomFilter::clear() { std::fill(words_.begin(), words_.end(), 0); }

ReplayFilter::ReplayFilter(ReplayFilterConfig config)
    : config_(config),
      gens_{BloomFilter::sized_for(config.capacity, config.fp_rate),
            BloomFilter::sized_for(config.capacity, config.fp_rate)} {
  if (!(config_.window_seconds > 0.0)) throw ConfigError("replay window must be positive");
}

void ReplayFilter::rotate_to(double now) {
  const double half = config_.window_seconds / 2.0;
  if (!started_) {
    generation_start_ = now;
    started_ = true;
    return;
  }
  if (now < generation_start_ + half) return;
  const double elapsed = std::floor((now - generation_start_) / half);
  if (elapsed >= 2.0) {
    gens_[0].clear();
    gens_[1].clear();
  } else {
    current_ ^= 1U;
    gens_[current_].clear();
  }
  generation_start_ += elapsed * half;
}

ReplayVerdict ReplayFilter::check(std::uint64_t nonce, const AgentId& source, double now) {
  std::uint64_t h1 = 0;
  std::uint64_t h2 = 0;
  replay_key_hashes(nonce, source, h1, h2);
  std::lock_guard lock(mutex_);
  rotate_to(now);
  if (gens_[0].maybe_contains(h1, h2) || gens_[1].maybe_contains(h1, h2)) return ReplayVerdict::Replay;
  gens_[current_].insert(h1, h2);
  return ReplayVerdict::Fresh;
}

bool ReplayFilter::probably_contains(std::uint64_t nonce, const AgentId& source) const {
  std::uint64_t h1 = 0;
  std::uint64_t h2 = 0;
  replay_key_hashes(nonce, source, h1, h2);
  std::lock_guard lock(mutex_);
  return gens_[0].maybe_contains(h1, h2) || gens_[1].maybe_contains(h1, h2);
}

}  // namespace gaat
