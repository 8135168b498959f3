#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaat/core_model.hpp"

namespace gaat {

using Digest = std::array<std::uint8_t, 32>;

class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::uint8_t> data);
  Sha256& update(std::string_view data);
  Sha256& update(std::uint8_t byte);
  Digest finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

[[nodiscard]] Digest sha256(std::span<const std::uint8_t> data);
[[nodiscard]] Digest sha256(std::string_view data);

[[nodiscard]] std::string to_hex(std::span<const std::uint8_t> bytes);
/// Throws ParseError on odd length or non-hex characters.
[[nodiscard]] Bytes from_hex(std::string_view hex);
[[nodiscard]] Digest digest_from_hex(std::string_view hex);

/// Verifies signatures for one public key.
class VerificationKey {
 public:
  virtual ~VerificationKey() = default;
  [[nodiscard]] virtual bool verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature) const = 0;
  [[nodiscard]] virtual Bytes encoded() const = 0;
};

class Signer {
 public:
  virtual ~Signer() = default;
  [[nodiscard]] virtual Bytes sign(std::span<const std::uint8_t> message) const = 0;
  [[nodiscard]] virtual std::shared_ptr<const VerificationKey> verification_key() const = 0;
};

/// ECDSA over P-256 with SHA-256; signatures are DER encoded.
class EcdsaP256Signer final : public Signer {
 public:
  static std::unique_ptr<EcdsaP256Signer> generate();
  ~EcdsaP256Signer() override;

  [[nodiscard]] Bytes sign(std::span<const std::uint8_t> message) const override;
  [[nodiscard]] std::shared_ptr<const VerificationKey> verification_key() const override;

 private:
  struct Impl;
  explicit EcdsaP256Signer(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
  std::shared_ptr<const VerificationKey> public_;
};

/// Parses a DER SubjectPublicKeyInfo. Throws ParseError.
[[nodiscard]] std::shared_ptr<const VerificationKey> ecdsa_p256_public_key(std::span<const std::uint8_t> spki_der);

/// Deterministic SHA-256 counter-mode generator, used for simulation nonces so a
/// seed fixes the whole event stream.
class DeterministicRandom {
 public:
  explicit DeterministicRandom(std::span<const std::uint8_t> seed_material);
  DeterministicRandom(std::uint64_t seed, std::string_view domain);

  std::uint64_t next_u64();

 private:
  Digest key_{};
  std::uint64_t counter_ = 0;
  Digest block_{};
  std::size_t used_ = 32;
};

/// 64-bit nonce from the operating system CSPRNG.
[[nodiscard]] std::uint64_t os_random_u64();

}  // namespace gaat
