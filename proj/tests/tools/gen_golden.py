#!/usr/bin/env python3
"""Writes tests/data/canonical_golden.txt.

A second, stdlib-only encoder for the canonical event layout and the audit
Merkle hashing. The C++ tests compare their bytes against this output.

Line formats ('|' separated):
  real|<literal>|<expected text>
  event|name|ts|source|receiver|op|nonce|k=T:v;..|class|juris|sens|a,b|verified|canonical_hex|signing_sha256
  leaf|index|record|signature|hex
  root|n|hex      (leaves are leaf_hash(i, "record-i", "sig-i"))
  mt|seed|10000th output
  boot|kind|seed|resamples|level|values;..|denominators;..|low|high
"""
import hashlib
import struct
import sys
from decimal import Decimal
from pathlib import Path


def shortest_real(x: float) -> str:
    if x == 0.0:
        return "-0" if str(x).startswith("-") else "0"
    sign = "-" if x < 0 else ""
    t = Decimal(repr(abs(x))).as_tuple()
    digits = "".join(map(str, t.digits)).lstrip("0")
    exp = t.exponent
    stripped = digits.rstrip("0")
    exp += len(digits) - len(stripped)
    digits = stripped
    if exp >= 0:
        fixed = digits + "0" * exp
    elif len(digits) > -exp:
        fixed = digits[:exp] + "." + digits[exp:]
    else:
        fixed = "0." + "0" * (-exp - len(digits)) + digits
    sci_exp = exp + len(digits) - 1
    mant = digits[0] + ("." + digits[1:] if len(digits) > 1 else "")
    sci = f"{mant}e{'-' if sci_exp < 0 else '+'}{abs(sci_exp):02d}"
    return sign + (fixed if len(fixed) <= len(sci) else sci)


def u32(v):
    return struct.pack(">I", v)


def u64(v):
    return struct.pack(">Q", v & 0xFFFFFFFFFFFFFFFF)


def s(text):
    b = text.encode("utf-8") if isinstance(text, str) else text
    return u32(len(b)) + b


def encode(ev, verified):
    out = b"GTE1" + s(shortest_real(ev["ts"])) + s(ev["source"]) + s(ev["receiver"]) + s(ev["op"])
    out += u64(ev["nonce"])
    ctx = ev["context"]
    out += u32(len(ctx))
    for key in sorted(ctx, key=lambda k: k.encode("utf-8")):
        tag, value = ctx[key]
        out += s(key) + tag.encode()
        if tag == "S":
            out += s(value)
        elif tag == "I":
            out += u64(value)
        else:
            out += s(shortest_real(value))
    out += s(ev["class"]) + s(ev["juris"]) + s(ev["sens"])
    out += u32(len(ev["lineage"]))
    for a in ev["lineage"]:
        out += s(a)
    return out + s(verified)


def leaf_hash(index, record, sig):
    return hashlib.sha256(b"\x00" + u64(index) + s(record) + s(sig)).digest()


def node(a, b):
    return hashlib.sha256(b"\x01" + a + b).digest()


def root(leaves):
    if not leaves:
        return bytes(32)
    level = list(leaves)
    while len(level) > 1:
        level = [node(level[i], level[i + 1] if i + 1 < len(level) else level[i]) for i in range(0, len(level), 2)]
    return level[0]


class MT19937_64:
    def __init__(self, seed):
        self.mt = [0] * 312
        self.mt[0] = seed & 0xFFFFFFFFFFFFFFFF
        for i in range(1, 312):
            self.mt[i] = (6364136223846793005 * (self.mt[i - 1] ^ (self.mt[i - 1] >> 62)) + i) & 0xFFFFFFFFFFFFFFFF
        self.i = 312

    def next(self):
        if self.i >= 312:
            for k in range(312):
                y = (self.mt[k] & 0xFFFFFFFF80000000) | (self.mt[(k + 1) % 312] & 0x7FFFFFFF)
                v = self.mt[(k + 156) % 312] ^ (y >> 1)
                if y & 1:
                    v ^= 0xB5026F5AA96619E9
                self.mt[k] = v
            self.i = 0
        x = self.mt[self.i]
        self.i += 1
        x ^= (x >> 29) & 0x5555555555555555
        x ^= (x << 17) & 0x71D67FFFEDA60000
        x ^= (x << 37) & 0xFFF7EEE000000000
        x ^= x >> 43
        return x & 0xFFFFFFFFFFFFFFFF

    def index(self, n):
        u = (self.next() >> 11) * 2.0 ** -53
        return int(u * n) % n


def percentile(values, q):
    v = sorted(values)
    h = (len(v) - 1) * q
    lo = int(h // 1)
    if lo + 1 >= len(v):
        return v[-1]
    return v[lo] + (h - lo) * (v[lo + 1] - v[lo])


def bootstrap(nums, dens, resamples, level, seed):
    rng = MT19937_64(seed)
    stats = []
    n = len(nums)
    for _ in range(resamples):
        num = 0.0
        den = 0.0
        for _ in range(n):
            j = rng.index(n)
            num += nums[j]
            den += dens[j] if dens else 0.0
        if dens:
            stats.append(num / den if den > 0.0 else 0.0)
        else:
            stats.append(num / n)
    alpha = 1.0 - level
    return percentile(stats, alpha / 2.0), percentile(stats, 1.0 - alpha / 2.0)


BOOTS = [
    ("mean", 0x5EED, 1000, 0.95, [0.96, 0.97, 0.98, 0.99, 1.0], []),
    ("mean", 42, 1000, 0.9, [1.4, 1.52, 1.61, 1.38, 1.7, 1.49, 1.55, 1.44, 1.6, 1.58], []),
    ("ratio", 0x5EED, 1000, 0.95, [24, 25, 23, 25, 22, 25, 24, 25, 25, 21], [25, 25, 25, 26, 24, 25, 25, 25, 26, 25]),
    ("ratio", 7, 500, 0.95, [0, 1, 0, 0, 2], [470, 480, 475, 476, 470]),
]

REALS = ["0.1", "1", "100", "123456", "1e15", "1e16", "1e21", "2.5e-7", "0.0001", "1234567.125",
         "-3.75", "5e-324", "1.7976931348623157e308", "1712345678.25", "0.3"]

EVENTS = [
    dict(name="minimal", ts=1.0, source="a", receiver="b", op="op", nonce=0, context={},
         cls="PUBLIC", juris="US", sens="LOW", lineage=[], verified="UNKNOWN"),
    dict(name="scenario_hop", ts=1712345678.25, source="shipping_agent", receiver="analytics_agent",
         op="emit_analytics", nonce=42,
         context={"destination_jurisdiction": ("S", "US"), "batch": ("I", -7), "disparate_impact": ("R", 0.16)},
         cls="PII", juris="EU", sens="HIGH", lineage=["order_agent", "shipping_agent"], verified="TRUE"),
    dict(name="extremes", ts=1e15, source="agent-é", receiver="z", op="", nonce=2**64 - 1,
         context={"Z": ("I", 2**63 - 1), "a": ("R", 2.5e-7), "m": ("S", "")},
         cls="FINANCIAL", juris="OTHER", sens="MEDIUM", lineage=["x", "y", "x"], verified="FALSE"),
    dict(name="small_time", ts=0.1, source="order_agent", receiver="inventory_agent", op="reserve_inventory",
         nonce=1, context={"n": ("I", 0)}, cls="OPERATIONAL", juris="EU", sens="LOW",
         lineage=["order_agent"], verified="UNKNOWN"),
]


def main(path):
    lines = []
    for lit in REALS:
        lines.append(f"real|{lit}|{shortest_real(float(lit))}")
    for ev in EVENTS:
        e = dict(ev, **{"class": ev["cls"]})
        ctx = ";".join(f"{k}={t}:{v}" for k, (t, v) in ev["context"].items())
        canon = encode(e, ev["verified"])
        payload = encode(e, "UNKNOWN")
        lines.append("|".join([
            "event", ev["name"], repr(ev["ts"]), ev["source"], ev["receiver"], ev["op"], str(ev["nonce"]), ctx,
            ev["cls"], ev["juris"], ev["sens"], ",".join(ev["lineage"]), ev["verified"], canon.hex(),
            hashlib.sha256(payload).hexdigest()]))
    for i, (rec, sig) in enumerate([("", ""), ("record", "sig"), ("x" * 300, "ÿ")]):
        lines.append(f"leaf|{i * 1000}|{rec}|{sig}|{leaf_hash(i * 1000, rec, sig).hex()}")
    for n in [0, 1, 2, 3, 5, 8, 13]:
        leaves = [leaf_hash(i, f"record-{i}", f"sig-{i}") for i in range(n)]
        lines.append(f"root|{n}|{root(leaves).hex()}")
    mt = MT19937_64(5489)
    for _ in range(9999):
        mt.next()
    lines.append(f"mt|5489|{mt.next()}")
    for kind, seed, res, level, nums, dens in BOOTS:
        lo, hi = bootstrap([float(x) for x in nums], [float(x) for x in dens], res, level, seed)
        lines.append("|".join(["boot", kind, str(seed), str(res), repr(level), ";".join(repr(float(x)) for x in nums),
                               ";".join(repr(float(x)) for x in dens), repr(lo), repr(hi)]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else str(Path(__file__).resolve().parents[1] / "data" / "canonical_golden.txt"))
