#include "gaat/audit_record.hpp"

#include "gaat/canonical.hpp"

namespace gaat {

namespace {
constexpr std::uint8_t kMagic[4] = {'A', 'U', 'D', '1'};
}

Bytes encode_audit_record(const AuditRecord& r) {
  CanonicalWriter w;
  w.raw(kMagic);
  w.str(r.kind);
  w.real(r.time);
  w.u8(r.event_digest ? 1 : 0);
  if (r.event_digest) w.raw(*r.event_digest);
  w.str(r.agent);
  w.str(r.receiver);
  w.str(r.operation);
  w.str(r.verification);
  w.str(r.tier);
  w.str(r.action);
  w.real(r.confidence);
  w.u8(static_cast<std::uint8_t>(r.applied_level));
  w.str(r.reason);
  w.u8(r.operation_completed ? 1 : 0);
  w.u8(r.redirected ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(r.matched_rules.size()));
  for (const auto& id : r.matched_rules) w.str(id);
  w.str(r.operator_token);
  w.str(r.detail);
  return w.take();
}

AuditRecord decode_audit_record(std::span<const std::uint8_t> bytes) {
  CanonicalReader rd(bytes);
  rd.expect(kMagic);
  AuditRecord r;
  r.kind = rd.str();
  r.time = rd.real();
  if (rd.u8() != 0) {
    Digest d{};
    for (auto& b : d) b = rd.u8();
    r.event_digest = d;
  }
  r.agent = rd.str();
  r.receiver = rd.str();
  r.operation = rd.str();
  r.verification = rd.str();
  r.tier = rd.str();
  r.action = rd.str();
  r.confidence = rd.real();
  r.applied_level = rd.u8();
  r.reason = rd.str();
  r.operation_completed = rd.u8() != 0;
  r.redirected = rd.u8() != 0;
  const std::uint32_t n = rd.u32();
  for (std::uint32_t i = 0; i < n; ++i) r.matched_rules.push_back(rd.str());
  r.operator_token = rd.str();
  r.detail = rd.str();
  if (!rd.done()) throw ParseError("trailing bytes after audit record");
  return r;
}

}  // namespace gaat
