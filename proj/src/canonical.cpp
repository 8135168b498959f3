#include "gaat/canonical.hpp"

#include <charconv>
#include <cmath>
#include <limits>

namespace gaat {

namespace {

constexpr std::uint8_t kMagic[4] = {'G', 'T', 'E', '1'};
constexpr std::uint8_t kTagString = 'S';
constexpr std::uint8_t kTagInteger = 'I';
constexpr std::uint8_t kTagReal = 'R';

}  // namespace

void CanonicalWriter::u32(std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void CanonicalWriter::u64(std::uint64_t v) {
  for (int i = 7; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void CanonicalWriter::str(std::string_view s) {
  if (s.size() > std::numeric_limits<std::uint32_t>::max()) throw SerializationError("string too long");
  u32(static_cast<std::uint32_t>(s.size()));
  out_.insert(out_.end(), s.begin(), s.end());
}

void CanonicalWriter::bytes(std::span<const std::uint8_t> b) {
  if (b.size() > std::numeric_limits<std::uint32_t>::max()) throw SerializationError("byte string too long");
  u32(static_cast<std::uint32_t>(b.size()));
  raw(b);
}

std::string format_real(double v) {
  if (!std::isfinite(v)) throw SerializationError("non-finite real cannot be serialized");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw SerializationError("real formatting failed");
  return std::string(buf, end);
}

void CanonicalWriter::real(double v) { str(format_real(v)); }

std::span<const std::uint8_t> CanonicalReader::take(std::size_t n) {
  if (in_.size() - pos_ < n) throw ParseError("canonical input truncated at offset " + std::to_string(pos_));
  auto s = in_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::uint8_t CanonicalReader::u8() { return take(1)[0]; }

std::uint32_t CanonicalReader::u32() {
  std::uint32_t v = 0;
  for (auto b : take(4)) v = (v << 8) | b;
  return v;
}

std::uint64_t CanonicalReader::u64() {
  std::uint64_t v = 0;
  for (auto b : take(8)) v = (v << 8) | b;
  return v;
}

std::string CanonicalReader::str() {
  auto s = take(u32());
  return std::string(s.begin(), s.end());
}

Bytes CanonicalReader::bytes() {
  auto s = take(u32());
  return Bytes(s.begin(), s.end());
}

double CanonicalReader::real() {
  const std::string text = str();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ParseError("invalid canonical real '" + text + "'");
  }
  return v;
}

void CanonicalReader::expect(std::span<const std::uint8_t> magic) {
  auto s = take(magic.size());
  if (!std::equal(s.begin(), s.end(), magic.begin())) throw ParseError("bad canonical magic");
}

namespace {

void write_event(CanonicalWriter& w, const GovernanceTelemetryEvent& e, Verification verified) {
  w.raw(kMagic);
  w.real(e.timestamp);
  w.str(e.source.str());
  w.str(e.receiver.str());
  w.str(e.operation);
  w.u64(e.nonce);
  w.u32(static_cast<std::uint32_t>(e.context.size()));
  for (const auto& [key, value] : e.context) {
    w.str(key);
    if (const auto* s = std::get_if<std::string>(&value)) {
      w.u8(kTagString);
      w.str(*s);
    } else if (const auto* i = std::get_if<std::int64_t>(&value)) {
      w.u8(kTagInteger);
      w.u64(static_cast<std::uint64_t>(*i));
    } else {
      const double d = std::get<double>(value);
      if (!std::isfinite(d)) throw SerializationError("non-finite real in context key '" + key + "'");
      w.u8(kTagReal);
      w.real(d);
    }
  }
  const auto& g = e.governance;
  w.str(to_string(g.classification));
  w.str(to_string(g.jurisdiction));
  w.str(to_string(g.sensitivity));
  w.u32(static_cast<std::uint32_t>(g.lineage.size()));
  for (const auto& a : g.lineage) w.str(a.str());
  w.str(to_string(verified));
}

AgentId read_agent(CanonicalReader& r) {
  std::string s = r.str();
  if (s.empty()) throw ParseError("empty agent id in canonical form");
  return AgentId(std::move(s));
}

}  // namespace

Bytes canonical_serialize(const GovernanceTelemetryEvent& event) {
  CanonicalWriter w;
  write_event(w, event, event.governance.verified);
  return w.take();
}

Bytes signing_payload(const GovernanceTelemetryEvent& event) {
  CanonicalWriter w;
  write_event(w, event, Verification::Unknown);
  return w.take();
}

Digest event_digest(const GovernanceTelemetryEvent& event) { return sha256(signing_payload(event)); }

GovernanceTelemetryEvent canonical_parse(std::span<const std::uint8_t> bytes) {
  CanonicalReader r(bytes);
  r.expect(kMagic);
  GovernanceTelemetryEvent e;
  e.timestamp = r.real();
  e.source = read_agent(r);
  e.receiver = read_agent(r);
  e.operation = r.str();
  e.nonce = r.u64();
  const std::uint32_t n = r.u32();
  std::string previous;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string key = r.str();
    if (i != 0 && key <= previous) throw ParseError("context keys not in canonical order");
    previous = key;
    const std::uint8_t tag = r.u8();
    ContextValue value;
    if (tag == kTagString) {
      value = r.str();
    } else if (tag == kTagInteger) {
      value = static_cast<std::int64_t>(r.u64());
    } else if (tag == kTagReal) {
      value = r.real();
    } else {
      throw ParseError("unknown context value tag");
    }
    e.context.emplace(std::move(key), std::move(value));
  }
  auto& g = e.governance;
  g.classification = parse_enum<Classification>(r.str());
  g.jurisdiction = parse_enum<Jurisdiction>(r.str());
  g.sensitivity = parse_enum<Sensitivity>(r.str());
  const std::uint32_t lineage = r.u32();
  for (std::uint32_t i = 0; i < lineage; ++i) g.lineage.push_back(read_agent(r));
  g.verified = parse_enum<Verification>(r.str());
  if (!r.done()) throw ParseError("trailing bytes after canonical event");
  return e;
}

}  // namespace gaat
