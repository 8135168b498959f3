#include "gaat/audit_log.hpp"

#include <cstring>
#include <iterator>

#include "gaat/canonical.hpp"

namespace gaat {

namespace {

constexpr char kMagic[8] = {'G', 'A', 'A', 'T', 'L', 'O', 'G', '\0'};
constexpr std::size_t kHeaderSize = sizeof kMagic + 4;

Bytes encode_header() {
  CanonicalWriter w;
  w.raw(std::span(reinterpret_cast<const std::uint8_t*>(kMagic), sizeof kMagic));
  w.u32(MerkleAuditLog::kFormatVersion);
  return w.take();
}

Bytes encode_entry(std::uint64_t index, std::span<const std::uint8_t> record, std::span<const std::uint8_t> signature,
                   const Digest& root_after) {
  CanonicalWriter w;
  w.u64(index);
  w.bytes(record);
  w.bytes(signature);
  w.raw(root_after);
  return w.take();
}

void write_all(std::ofstream& out, const Bytes& data) {
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  out.flush();
}

}  // namespace

Digest audit_leaf_hash(std::uint64_t index, std::span<const std::uint8_t> record,
                       std::span<const std::uint8_t> signature) {
  CanonicalWriter w;
  w.u8(0x00);
  w.u64(index);
  w.bytes(record);
  w.bytes(signature);
  return sha256(w.data());
}

Digest merkle_node(const Digest& left, const Digest& right) {
  Sha256 h;
  h.update(std::uint8_t{0x01});
  h.update(left);
  h.update(right);
  return h.finish();
}

Digest empty_merkle_root() { return Digest{}; }

Digest merkle_root(std::span<const Digest> leaves) {
  if (leaves.empty()) return empty_merkle_root();
  std::vector<Digest> level(leaves.begin(), leaves.end());
  while (level.size() > 1) {
    std::vector<Digest> next;
    for (std::size_t i = 0; i < level.size(); i += 2) {
      next.push_back(merkle_node(level[i], i + 1 < level.size() ? level[i + 1] : level[i]));
    }
    level = std::move(next);
  }
  return level[0];
}

bool verify_inclusion(const Digest& leaf, const InclusionProof& proof, const Digest& root) {
  if (proof.leaf_index >= proof.tree_size) return false;
  Digest acc = leaf;
  for (const auto& step : proof.path) {
    acc = step.sibling_is_left ? merkle_node(step.sibling, acc) : merkle_node(acc, step.sibling);
  }
  return acc == root;
}

MerkleAuditLog::MerkleAuditLog() = default;
MerkleAuditLog::MerkleAuditLog(MerkleAuditLog&&) noexcept = default;
MerkleAuditLog& MerkleAuditLog::operator=(MerkleAuditLog&&) noexcept = default;
MerkleAuditLog::~MerkleAuditLog() = default;

MerkleAuditLog MerkleAuditLog::create(const std::filesystem::path& path) {
  MerkleAuditLog log;
  log.file_.open(path, std::ios::binary | std::ios::trunc);
  if (!log.file_) throw StorageError("cannot create audit log '" + path.string() + "'");
  write_all(log.file_, encode_header());
  if (!log.file_) throw StorageError("cannot write audit log header to '" + path.string() + "'");
  log.path_ = path;
  return log;
}

MerkleAuditLog MerkleAuditLog::open(const std::filesystem::path& path) {
  const ChainReport report = audit_verify_chain(path);
  if (!report.ok()) throw StorageError("audit log '" + path.string() + "' failed verification: " + report.detail);
  std::ifstream in(path, std::ios::binary);
  const Bytes all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  MerkleAuditLog log;
  CanonicalReader r(std::span<const std::uint8_t>(all).subspan(kHeaderSize));
  while (!r.done()) {
    const std::uint64_t index = r.u64();
    const Bytes record = r.bytes();
    const Bytes sig = r.bytes();
    for (int i = 0; i < 4; ++i) (void)r.u64();
    log.push_leaf(audit_leaf_hash(index, record, sig));
  }
  log.file_.open(path, std::ios::binary | std::ios::app);
  if (!log.file_) throw StorageError("cannot open audit log '" + path.string() + "' for append");
  log.path_ = path;
  return log;
}

std::vector<MerkleAuditLog::Undo> MerkleAuditLog::push_leaf(const Digest& leaf) {
  std::vector<Undo> undo;
  if (levels_.empty()) levels_.emplace_back();
  levels_[0].push_back(leaf);
  undo.push_back(Undo{0, levels_[0].size() - 1, std::nullopt});
  std::size_t idx = levels_[0].size() - 1;
  std::size_t h = 0;
  while (levels_[h].size() > 1) {
    const std::size_t parent = idx >> 1;
    const Digest& left = levels_[h][parent * 2];
    const Digest& right = parent * 2 + 1 < levels_[h].size() ? levels_[h][parent * 2 + 1] : left;
    const Digest node = merkle_node(left, right);
    if (levels_.size() <= h + 1) levels_.emplace_back();
    auto& up = levels_[h + 1];
    if (parent < up.size()) {
      undo.push_back(Undo{h + 1, parent, up[parent]});
      up[parent] = node;
    } else {
      up.push_back(node);
      undo.push_back(Undo{h + 1, parent, std::nullopt});
    }
    idx = parent;
    ++h;
  }
  return undo;
}

void MerkleAuditLog::rollback(const std::vector<Undo>& undo) {
  for (auto it = undo.rbegin(); it != undo.rend(); ++it) {
    auto& level = levels_[it->level];
    if (it->previous) {
      level[it->index] = *it->previous;
    } else {
      level.pop_back();
    }
  }
  while (!levels_.empty() && levels_.back().empty()) levels_.pop_back();
}

InclusionProof MerkleAuditLog::append(std::span<const std::uint8_t> record, std::span<const std::uint8_t> signature) {
  const std::uint64_t index = size();
  const auto undo = push_leaf(audit_leaf_hash(index, record, signature));
  if (path_) {
    const auto before = file_.tellp();
    const bool inject = fail_next_;
    fail_next_ = false;
    if (!inject) write_all(file_, encode_entry(index, record, signature, root()));
    if (inject || !file_) {
      rollback(undo);
      file_.clear();
      std::error_code ec;
      file_.close();
      std::filesystem::resize_file(*path_, static_cast<std::uintmax_t>(before), ec);
      file_.open(*path_, std::ios::binary | std::ios::app);
      throw StorageError("audit append failed for record " + std::to_string(index));
    }
  } else if (fail_next_) {
    fail_next_ = false;
    rollback(undo);
    throw StorageError("audit append failed for record " + std::to_string(index));
  }
  return prove(index);
}

Digest MerkleAuditLog::root() const {
  if (levels_.empty() || levels_[0].empty()) return empty_merkle_root();
  return levels_.back().front();
}

InclusionProof MerkleAuditLog::prove(std::uint64_t index) const {
  if (index >= size()) throw ConfigError("inclusion proof index out of range");
  InclusionProof proof;
  proof.leaf_index = index;
  proof.tree_size = size();
  std::size_t idx = static_cast<std::size_t>(index);
  for (std::size_t h = 0; h + 1 < levels_.size(); ++h) {
    const auto& level = levels_[h];
    const std::size_t sib = idx ^ 1U;
    ProofStep step;
    step.sibling_is_left = (idx & 1U) != 0;
    step.sibling = sib < level.size() ? level[sib] : level[idx];
    proof.path.push_back(step);
    idx >>= 1;
  }
  return proof;
}

ChainReport audit_verify_chain(const std::filesystem::path& path, std::optional<Digest> expected_root) {
  ChainReport report;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    report.status = ChainReport::Status::BadHeader;
    report.detail = "cannot open '" + path.string() + "'";
    return report;
  }
  const Bytes all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (all.size() < kHeaderSize || std::memcmp(all.data(), kMagic, sizeof kMagic) != 0) {
    report.status = ChainReport::Status::BadHeader;
    report.detail = "missing or corrupt header";
    return report;
  }
  CanonicalReader header(std::span<const std::uint8_t>(all).subspan(sizeof kMagic, 4));
  if (header.u32() != MerkleAuditLog::kFormatVersion) {
    report.status = ChainReport::Status::BadHeader;
    report.detail = "unsupported format version";
    return report;
  }

  MerkleAuditLog replay;
  CanonicalReader r(std::span<const std::uint8_t>(all).subspan(kHeaderSize));
  std::uint64_t index = 0;
  while (!r.done()) {
    std::uint64_t stored_index = 0;
    Bytes record;
    Bytes sig;
    Digest stored_root{};
    try {
      stored_index = r.u64();
      record = r.bytes();
      sig = r.bytes();
      for (auto& b : stored_root) b = r.u8();
    } catch (const ParseError&) {
      report.status = ChainReport::Status::Truncated;
      report.first_bad_index = index;
      report.detail = "record " + std::to_string(index) + " is truncated or its length field is corrupt";
      report.root = replay.root();
      return report;
    }
    if (stored_index != index) {
      report.status = ChainReport::Status::Tampered;
      report.first_bad_index = index;
      report.detail = "record " + std::to_string(index) + " carries index " + std::to_string(stored_index);
      report.root = replay.root();
      return report;
    }
    replay.append(record, sig);
    if (replay.root() != stored_root) {
      report.status = ChainReport::Status::Tampered;
      report.first_bad_index = index;
      report.detail = "root mismatch at record " + std::to_string(index);
      report.root = replay.root();
      return report;
    }
    ++index;
    report.records = index;
  }
  report.root = replay.root();
  if (expected_root && *expected_root != report.root) {
    report.status = ChainReport::Status::AnchorMismatch;
    report.first_bad_index = index;
    report.detail = "final root does not match the expected anchor";
    return report;
  }
  report.detail = "ok";
  return report;
}

}  // namespace gaat
