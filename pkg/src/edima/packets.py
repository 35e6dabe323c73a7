"""Columnar packet records.

A packet stream is a numpy structured array with PACKET_DTYPE, one element
per frame. Keeping the stream columnar lets the filter, feature and pcap
stages run as array operations instead of per-packet Python.
"""

from __future__ import annotations

import ipaddress
from typing import Iterable

import numpy as np

PACKET_DTYPE = np.dtype([
    ("ts_micros", np.int64),
    ("src_ip", np.uint32),
    ("dst_ip", np.uint32),
    ("ip_proto", np.uint8),
    ("src_port", np.uint16),
    ("dst_port", np.uint16),
    ("tcp_flags", np.uint8),
    ("payload_len", np.uint32),
])

PROTO_TCP = 6
PROTO_UDP = 17

# TCP flag bits, low 6 bits of the flags byte
FIN = 0x01
SYN = 0x02
RST = 0x04
PSH = 0x08
ACK = 0x10
URG = 0x20


def ip_to_int(addr: str) -> int:
    return int(ipaddress.IPv4Address(addr))


def int_to_ip(value: int) -> str:
    return str(ipaddress.IPv4Address(int(value)))


def empty_packets(n: int = 0) -> np.ndarray:
    return np.zeros(n, dtype=PACKET_DTYPE)


def packet(ts_micros: int, src_ip, dst_ip, ip_proto: int = PROTO_TCP,
           src_port: int = 0, dst_port: int = 0, tcp_flags: int = 0,
           payload_len: int = 0) -> np.ndarray:
    """One-element packet array; IPs may be dotted strings or integers."""
    rec = empty_packets(1)
    rec["ts_micros"] = ts_micros
    rec["src_ip"] = ip_to_int(src_ip) if isinstance(src_ip, str) else src_ip
    rec["dst_ip"] = ip_to_int(dst_ip) if isinstance(dst_ip, str) else dst_ip
    rec["ip_proto"] = ip_proto
    rec["src_port"] = src_port
    rec["dst_port"] = dst_port
    rec["tcp_flags"] = tcp_flags
    rec["payload_len"] = payload_len
    return rec


def concat_packets(parts: Iterable[np.ndarray]) -> np.ndarray:
    parts = [p for p in parts if len(p)]
    if not parts:
        return empty_packets()
    return np.concatenate(parts)


def is_sorted(records: np.ndarray) -> bool:
    ts = records["ts_micros"]
    return bool(len(ts) < 2 or np.all(ts[1:] >= ts[:-1]))


# Non-routable destination space, in Mirai-style exclusion spirit: private,
# loopback, link-local, CGN, test nets, benchmarking, multicast and reserved.
_EXCLUDED_BLOCKS = [
    ("0.0.0.0", 8),
    ("10.0.0.0", 8),
    ("100.64.0.0", 10),
    ("127.0.0.0", 8),
    ("169.254.0.0", 16),
    ("172.16.0.0", 12),
    ("192.0.0.0", 24),
    ("192.0.2.0", 24),
    ("192.88.99.0", 24),
    ("192.168.0.0", 16),
    ("198.18.0.0", 15),
    ("198.51.100.0", 24),
    ("203.0.113.0", 24),
    ("224.0.0.0", 3),      # multicast plus reserved plus broadcast
]

_EXCLUDED = [(ip_to_int(base), 0xFFFFFFFF << (32 - bits) & 0xFFFFFFFF)
             for base, bits in _EXCLUDED_BLOCKS]


def routable_mask(addrs: np.ndarray) -> np.ndarray:
    """True where the IPv4 integer lies in publicly routable unicast space."""
    a = addrs.astype(np.uint32, copy=False)
    ok = np.ones(a.shape, dtype=bool)
    for base, mask in _EXCLUDED:
        ok &= (a & np.uint32(mask)) != np.uint32(base)
    return ok


def is_routable(addr: int) -> bool:
    return bool(routable_mask(np.asarray([addr], dtype=np.uint32))[0])
