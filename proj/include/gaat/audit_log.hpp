#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gaat/crypto.hpp"

namespace gaat {

struct ProofStep {
  Digest sibling{};
  bool sibling_is_left = false;
};

struct InclusionProof {
  std::uint64_t leaf_index = 0;
  std::uint64_t tree_size = 0;
  std::vector<ProofStep> path;
};

/// SHA-256(0x00 || index || len-prefixed record || len-prefixed signature).
[[nodiscard]] Digest audit_leaf_hash(std::uint64_t index, std::span<const std::uint8_t> record,
                                     std::span<const std::uint8_t> signature);
/// SHA-256(0x01 || left || right).
[[nodiscard]] Digest merkle_node(const Digest& left, const Digest& right);
/// Root of the empty log: 32 zero bytes.
[[nodiscard]] Digest empty_merkle_root();
/// Reference root over a full leaf list, odd levels padded by duplicating the last node.
[[nodiscard]] Digest merkle_root(std::span<const Digest> leaves);
[[nodiscard]] bool verify_inclusion(const Digest& leaf, const InclusionProof& proof, const Digest& root);

/// Append-only Merkle log, optionally persisted. On-disk layout is described in
/// docs/file_formats.md.
class MerkleAuditLog {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  /// In-memory only.
  MerkleAuditLog();
  /// Creates (or truncates) a log file and writes its header.
  static MerkleAuditLog create(const std::filesystem::path& path);
  /// Opens an existing file for further appends after verifying it. Throws StorageError.
  static MerkleAuditLog open(const std::filesystem::path& path);

  MerkleAuditLog(MerkleAuditLog&&) noexcept;
  MerkleAuditLog& operator=(MerkleAuditLog&&) noexcept;
  ~MerkleAuditLog();

  /// Throws StorageError and leaves the log unchanged when persistence fails.
  InclusionProof append(std::span<const std::uint8_t> record, std::span<const std::uint8_t> signature = {});

  [[nodiscard]] Digest root() const;
  [[nodiscard]] std::uint64_t size() const noexcept { return levels_.empty() ? 0 : levels_[0].size(); }
  [[nodiscard]] const Digest& leaf(std::uint64_t index) const { return levels_.at(0).at(index); }
  [[nodiscard]] InclusionProof prove(std::uint64_t index) const;

  /// Fault-injection hook: the next append fails as if the disk write failed.
  void fail_next_append() noexcept { fail_next_ = true; }

 private:
  struct Undo {
    std::size_t level;
    std::size_t index;
    std::optional<Digest> previous;  ///< nullopt: node was pushed
  };
  std::vector<Undo> push_leaf(const Digest& leaf);
  void rollback(const std::vector<Undo>& undo);

  std::vector<std::vector<Digest>> levels_;
  std::optional<std::filesystem::path> path_;
  std::ofstream file_;
  bool fail_next_ = false;
};

struct ChainReport {
  enum class Status : std::uint8_t { Ok, Tampered, Truncated, BadHeader, AnchorMismatch };
  Status status = Status::Ok;
  std::uint64_t records = 0;                    ///< records that verified
  std::optional<std::uint64_t> first_bad_index;  ///< first record that failed
  Digest root{};
  std::string detail;

  [[nodiscard]] bool ok() const noexcept { return status == Status::Ok; }
};

/// Replays every persisted record, recomputing leaves and roots, and reports the
/// first divergence. `expected_root` anchors the final root against truncation
/// at a record boundary.
[[nodiscard]] ChainReport audit_verify_chain(const std::filesystem::path& path,
                                             std::optional<Digest> expected_root = std::nullopt);

}  // namespace gaat
