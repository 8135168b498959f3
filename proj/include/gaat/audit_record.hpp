#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gaat/crypto.hpp"

namespace gaat {

/// One audit log entry. Enumerations are stored by name so the log stays
/// readable without the library's enum tables.
struct AuditRecord {
  std::string kind;  ///< "ENFORCEMENT" or "BREAKER_RESET"
  double time = 0.0;
  std::optional<Digest> event_digest;
  std::string agent;
  std::string receiver;
  std::string operation;
  std::string verification;
  std::string tier;
  std::string action;  ///< empty when policy was not evaluated
  double confidence = 0.0;
  int applied_level = 0;
  std::string reason;
  bool operation_completed = false;
  bool redirected = false;
  std::vector<std::string> matched_rules;
  std::string operator_token;
  std::string detail;

  bool operator==(const AuditRecord&) const = default;
};

[[nodiscard]] Bytes encode_audit_record(const AuditRecord& record);
/// Throws ParseError.
[[nodiscard]] AuditRecord decode_audit_record(std::span<const std::uint8_t> bytes);

}  // namespace gaat
