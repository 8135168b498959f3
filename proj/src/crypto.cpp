#include "gaat/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/x509.h>

namespace gaat {

namespace {

struct EvpMdCtxDeleter {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct EvpPkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct EvpPkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, EvpMdCtxDeleter>;
using PkeyPtr = std::unique_ptr<EVP_PKEY, EvpPkeyDeleter>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, EvpPkeyCtxDeleter>;

MdCtxPtr new_md_ctx() {
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx) throw std::bad_alloc();
  return ctx;
}

class EcdsaP256PublicKey final : public VerificationKey {
 public:
  EcdsaP256PublicKey(PkeyPtr key, Bytes der) : key_(std::move(key)), der_(std::move(der)) {}

  bool verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature) const override {
    if (signature.empty()) return false;
    MdCtxPtr ctx = new_md_ctx();
    if (EVP_DigestVerifyInit(ctx.get(), nullptr, EVP_sha256(), nullptr, key_.get()) != 1) return false;
    return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(), message.size()) == 1;
  }

  Bytes encoded() const override { return der_; }

 private:
  PkeyPtr key_;
  Bytes der_;
};

Bytes encode_public(EVP_PKEY* key) {
  const int len = i2d_PUBKEY(key, nullptr);
  if (len <= 0) throw SigningError("cannot encode public key");
  Bytes out(static_cast<std::size_t>(len));
  unsigned char* p = out.data();
  i2d_PUBKEY(key, &p);
  return out;
}

}  // namespace

struct Sha256::Impl {
  MdCtxPtr ctx = new_md_ctx();
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
  if (EVP_DigestInit_ex(impl_->ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
}

Sha256::~Sha256() = default;

Sha256& Sha256::update(std::span<const std::uint8_t> data) {
  if (!data.empty()) EVP_DigestUpdate(impl_->ctx.get(), data.data(), data.size());
  return *this;
}

Sha256& Sha256::update(std::string_view data) {
  if (!data.empty()) EVP_DigestUpdate(impl_->ctx.get(), data.data(), data.size());
  return *this;
}

Sha256& Sha256::update(std::uint8_t byte) {
  EVP_DigestUpdate(impl_->ctx.get(), &byte, 1);
  return *this;
}

Digest Sha256::finish() {
  Digest d{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(impl_->ctx.get(), d.data(), &len);
  EVP_DigestInit_ex(impl_->ctx.get(), EVP_sha256(), nullptr);
  return d;
}

Digest sha256(std::span<const std::uint8_t> data) { return Sha256().update(data).finish(); }
Digest sha256(std::string_view data) { return Sha256().update(data).finish(); }

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw ParseError("hex string has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw ParseError(std::string("invalid hex character '") + c + "'");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return out;
}

Digest digest_from_hex(std::string_view hex) {
  const Bytes b = from_hex(hex);
  if (b.size() != 32) throw ParseError("digest must be 32 bytes");
  Digest d{};
  std::copy(b.begin(), b.end(), d.begin());
  return d;
}

struct EcdsaP256Signer::Impl {
  PkeyPtr key;
};

EcdsaP256Signer::EcdsaP256Signer(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {
  const Bytes der = encode_public(impl_->key.get());
  public_ = ecdsa_p256_public_key(der);
}

EcdsaP256Signer::~EcdsaP256Signer() = default;

std::unique_ptr<EcdsaP256Signer> EcdsaP256Signer::generate() {
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_EC, nullptr));
  if (!ctx || EVP_PKEY_keygen_init(ctx.get()) != 1 ||
      EVP_PKEY_CTX_set_ec_paramgen_curve_nid(ctx.get(), NID_X9_62_prime256v1) != 1) {
    throw SigningError("cannot initialise P-256 key generation");
  }
  EVP_PKEY* raw = nullptr;
  if (EVP_PKEY_keygen(ctx.get(), &raw) != 1) throw SigningError("P-256 key generation failed");
  auto impl = std::make_unique<Impl>();
  impl->key.reset(raw);
  return std::unique_ptr<EcdsaP256Signer>(new EcdsaP256Signer(std::move(impl)));
}

Bytes EcdsaP256Signer::sign(std::span<const std::uint8_t> message) const {
  MdCtxPtr ctx = new_md_ctx();
  if (EVP_DigestSignInit(ctx.get(), nullptr, EVP_sha256(), nullptr, impl_->key.get()) != 1) {
    throw SigningError("signing init failed");
  }
  std::size_t len = 0;
  if (EVP_DigestSign(ctx.get(), nullptr, &len, message.data(), message.size()) != 1) {
    throw SigningError("signature length query failed");
  }
  Bytes sig(len);
  if (EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1) {
    throw SigningError("signing failed");
  }
  sig.resize(len);
  return sig;
}

std::shared_ptr<const VerificationKey> EcdsaP256Signer::verification_key() const { return public_; }

std::shared_ptr<const VerificationKey> ecdsa_p256_public_key(std::span<const std::uint8_t> spki_der) {
  const unsigned char* p = spki_der.data();
  PkeyPtr key(d2i_PUBKEY(nullptr, &p, static_cast<long>(spki_der.size())));
  if (!key) throw ParseError("invalid public key encoding");
  if (EVP_PKEY_get_base_id(key.get()) != EVP_PKEY_EC) throw ParseError("public key is not an EC key");
  return std::make_shared<EcdsaP256PublicKey>(std::move(key), Bytes(spki_der.begin(), spki_der.end()));
}

DeterministicRandom::DeterministicRandom(std::span<const std::uint8_t> seed_material) : key_(sha256(seed_material)) {}

DeterministicRandom::DeterministicRandom(std::uint64_t seed, std::string_view domain) {
  Sha256 h;
  for (int i = 7; i >= 0; --i) h.update(static_cast<std::uint8_t>(seed >> (8 * i)));
  h.update(domain);
  key_ = h.finish();
}

std::uint64_t DeterministicRandom::next_u64() {
  if (used_ + 8 > block_.size()) {
    Sha256 h;
    h.update(key_);
    for (int i = 7; i >= 0; --i) h.update(static_cast<std::uint8_t>(counter_ >> (8 * i)));
    block_ = h.finish();
    ++counter_;
    used_ = 0;
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | block_[used_ + static_cast<std::size_t>(i)];
  used_ += 8;
  return v;
}

std::uint64_t os_random_u64() {
  unsigned char buf[8];
  if (RAND_bytes(buf, sizeof buf) != 1) throw Error("OS random source failed");
  std::uint64_t v = 0;
  for (unsigned char b : buf) v = (v << 8) | b;
  return v;
}

}  // namespace gaat
