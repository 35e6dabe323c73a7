"""Shared builders and reference implementations for the test suite.

Reference code in this file is written against the documented formats only
(plain ints, dicts, struct), never by calling the package functions it is
meant to check, so a defect in a kernel cannot hide inside its own test.
"""

import struct

import numpy as np

from edima.features import FeatureVector, Label
from edima.packets import PACKET_DTYPE, empty_packets, ip_to_int
from edima.sessions import MalwareCategory, TrafficSession

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def ref_splitmix64(seed: int, n: int) -> list[int]:
    """First n outputs of the published splitmix64 generator."""
    out = []
    state = seed & MASK64
    for _ in range(n):
        state = (state + GOLDEN) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


def ref_uniforms(seed: int, n: int) -> list[float]:
    # top 53 bits scaled into [0, 1), matching the documented float mapping
    return [(v >> 11) / float(1 << 53) for v in ref_splitmix64(seed, n)]


def make_packets(rows) -> np.ndarray:
    """Structured packet array from (ts, src, dst, proto, sport, dport, flags, plen).

    src/dst may be dotted strings or ints.
    """
    out = empty_packets(len(rows))
    for i, (ts, src, dst, proto, sport, dport, flags, plen) in enumerate(rows):
        out[i] = (
            ts,
            ip_to_int(src) if isinstance(src, str) else int(src),
            ip_to_int(dst) if isinstance(dst, str) else int(dst),
            proto, sport, dport, flags, plen,
        )
    return out


def make_session(rows, gateway="gw", start=0, window=900_000_000) -> TrafficSession:
    return TrafficSession(gateway, start, window, make_packets(rows))


def make_fv(f1, f2, f3, f4, label=None, gateway="gw", start=0,
            category=MalwareCategory.TELNET) -> FeatureVector:
    return FeatureVector(gateway, start, category, f1, f2, f3, f4, label)


def cluster_rows(n_benign: int, n_malicious: int, seed: int = 0,
                 category=MalwareCategory.TELNET, spread=1.0) -> list[FeatureVector]:
    """Two well separated feature clusters with labels, for classifier tests."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_benign):
        f1 = max(1.0, 5.0 + spread * rng.normal())
        f2 = max(1.0, 3.0 + spread * rng.normal())
        rows.append(make_fv(f1, f2, 1.0, max(1.0, f2 - 1.0), Label.BENIGN,
                            start=i * 1000, category=category))
    for i in range(n_malicious):
        f1 = 60.0 + 5 * spread * rng.normal()
        rows.append(make_fv(f1, 1.0, 1.0, 1.0, Label.MALICIOUS,
                            start=(n_benign + i) * 1000, category=category))
    return rows


# ---------------------------------------------------------------------------
# Independent classic-pcap reference codec.
#
# The writer makes different surface choices than the package (TTL, IP id,
# window size, patterned payload bytes, a real UDP checksum) so agreement
# with the package parser means the documented fields round trip, not that
# two copies of the same code agree.


def _fold16(total: int) -> int:
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return (~total) & 0xFFFF


def inet_checksum(data: bytes) -> int:
    if len(data) % 2:
        data += b"\x00"
    total = sum(struct.unpack(f">{len(data) // 2}H", data))
    return _fold16(total)


def ref_write_pcap(rows, big_endian: bool = False) -> bytes:
    """Independent pcap writer for (ts, src, dst, proto, sport, dport, flags, plen)."""
    e = ">" if big_endian else "<"
    out = bytearray(struct.pack(e + "IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, 1))
    for i, (ts, src, dst, proto, sport, dport, flags, plen) in enumerate(rows):
        src = ip_to_int(src) if isinstance(src, str) else int(src)
        dst = ip_to_int(dst) if isinstance(dst, str) else int(dst)
        payload = bytes((i + j) & 0xFF for j in range(plen))
        if proto == 6:
            l4 = struct.pack(">HHIIBBHHH", sport, dport, 0x1111 + i, 0x2222,
                             0x50, flags, 0xFFFF, 0, 0)
            pseudo = struct.pack(">IIBBH", src, dst, 0, 6, len(l4) + plen)
            csum = inet_checksum(pseudo + l4 + payload)
            l4 = l4[:16] + struct.pack(">H", csum) + l4[18:]
        elif proto == 17:
            l4 = struct.pack(">HHHH", sport, dport, 8 + plen, 0)
            pseudo = struct.pack(">IIBBH", src, dst, 0, 17, 8 + plen)
            csum = inet_checksum(pseudo + l4 + payload)
            l4 = l4[:6] + struct.pack(">H", csum or 0xFFFF)
        else:
            l4 = b""
        tot = 20 + len(l4) + plen
        ip = struct.pack(">BBHHHBBH", 0x45, 0, tot, i & 0xFFFF, 0, 17 + (i % 200),
                         proto, 0) + struct.pack(">II", src, dst)
        ip = ip[:10] + struct.pack(">H", inet_checksum(ip)) + ip[12:]
        eth = bytes([0xAA, 0, 0, 0, 0, i & 0xFF, 0xBB, 0, 0, 0, 0, i & 0xFF]) \
            + struct.pack(">H", 0x0800)
        frame = eth + ip + l4 + payload
        out += struct.pack(e + "IIII", ts // 1_000_000, ts % 1_000_000,
                           len(frame), len(frame))
        out += frame
    return bytes(out)


def ref_parse_pcap(data: bytes):
    """Independent pcap reader; verifies every checksum it can.

    Returns (rows, skipped) with rows as plain tuples in packet field order.
    """
    magic, = struct.unpack_from("<I", data, 0)
    if magic == 0xA1B2C3D4:
        e = "<"
    else:
        assert magic == 0xD4C3B2A1, "unknown magic"
        e = ">"
    hdr = struct.unpack_from(e + "IHHiIII", data, 0)
    assert hdr[6] == 1, "not ethernet"
    pos, rows, skipped = 24, [], 0
    while pos < len(data):
        if len(data) - pos < 16:
            skipped += 1
            break
        sec, usec, incl, orig = struct.unpack_from(e + "IIII", data, pos)
        pos += 16
        if pos + incl > len(data):
            skipped += 1
            break
        frame = data[pos:pos + incl]
        pos += incl
        if len(frame) < 34 or frame[12:14] != b"\x08\x00" or frame[14] >> 4 != 4:
            skipped += 1
            continue
        ihl = (frame[14] & 0xF) * 4
        if ihl < 20:
            skipped += 1
            continue
        tot, = struct.unpack_from(">H", frame, 16)
        proto = frame[23]
        need = 20 if proto == 6 else 8 if proto == 17 else 0
        if len(frame) < 14 + ihl + need:
            skipped += 1
            continue
        assert inet_checksum(frame[14:14 + ihl]) == 0, "bad IP checksum"
        src, dst = struct.unpack_from(">II", frame, 26)
        l4 = frame[14 + ihl:]
        ts = sec * 1_000_000 + usec
        if proto == 6:
            sport, dport = struct.unpack_from(">HH", l4, 0)
            doff = (l4[12] >> 4) * 4
            flags = l4[13] & 0x3F
            plen = max(tot - ihl - doff, 0)
            seg = l4[:tot - ihl] if tot - ihl <= len(l4) else l4
            pseudo = struct.pack(">IIBBH", src, dst, 0, 6, len(seg))
            assert inet_checksum(pseudo + seg) == 0, "bad TCP checksum"
        elif proto == 17:
            sport, dport, ulen, ucsum = struct.unpack_from(">HHHH", l4, 0)
            plen = max(ulen - 8, 0)
            if ucsum:
                seg = l4[:ulen] if ulen <= len(l4) else l4
                pseudo = struct.pack(">IIBBH", src, dst, 0, 17, len(seg))
                assert inet_checksum(pseudo + seg) in (0, 0xFFFF), "bad UDP checksum"
            flags = 0
        else:
            sport = dport = flags = 0
            plen = max(tot - ihl, 0)
        rows.append((ts, src, dst, proto, sport, dport, flags, plen))
    return rows, skipped


def session_fields(s: TrafficSession):
    """Hashable snapshot for equality checks on sessions."""
    return (s.gateway_id, s.window_start_micros, s.window_len_micros,
            [tuple(int(r[name]) for name in PACKET_DTYPE.names) for r in s.packets])
