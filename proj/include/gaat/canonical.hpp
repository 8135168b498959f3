#pragma once

#include <span>
#include <string>

#include "gaat/core_model.hpp"
#include "gaat/crypto.hpp"

namespace gaat {

/// Byte-level helpers shared by every canonical encoding in the library:
/// big-endian integers, u32-length-prefixed strings, reals as shortest
/// round-trip decimal text.
class CanonicalWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void str(std::string_view s);
  void bytes(std::span<const std::uint8_t> b);
  /// Throws SerializationError on NaN or infinity.
  void real(double v);
  void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

  [[nodiscard]] const Bytes& data() const noexcept { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class CanonicalReader {
 public:
  explicit CanonicalReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::string str();
  Bytes bytes();
  double real();
  void expect(std::span<const std::uint8_t> magic);

  [[nodiscard]] bool done() const noexcept { return pos_ == in_.size(); }
  [[nodiscard]] std::size_t position() const noexcept { return pos_; }

 private:
  std::span<const std::uint8_t> take(std::size_t n);
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

/// Shortest round-trip decimal text for a finite double.
[[nodiscard]] std::string format_real(double v);

/// Canonical event bytes: every field except the signature, in fixed order.
[[nodiscard]] Bytes canonical_serialize(const GovernanceTelemetryEvent& event);
/// Inverse of canonical_serialize; the result has no signature. Throws ParseError.
[[nodiscard]] GovernanceTelemetryEvent canonical_parse(std::span<const std::uint8_t> bytes);

/// Bytes covered by the signature: the canonical form with `verified` reset to
/// UNKNOWN, so the verifier's own annotation never invalidates it.
[[nodiscard]] Bytes signing_payload(const GovernanceTelemetryEvent& event);
/// SHA-256 of the signing payload; used as the event reference in history and audit.
[[nodiscard]] Digest event_digest(const GovernanceTelemetryEvent& event);

}  // namespace gaat
