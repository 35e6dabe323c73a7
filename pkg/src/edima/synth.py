"""Deterministic traffic generator for benign and scanning workloads.

Benign gateways run a handful of devices talking to a small fixed pool
of external services, so destinations repeat heavily. An infected
gateway adds a scanning stream: single SYN probes at a steady rate,
almost always to an address never probed before, on the ports the
malware family infects through. Everything is a pure function of
(profile, duration, seed); session seeds derive from a master seed, so
whole corpora are reproducible byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidProfile
from .packets import PROTO_TCP, empty_packets, ip_to_int, routable_mask
from .pcap import write_pcap
from .rng import Stream, derive_seed, splitmix64_at_counters
from .sessions import MalwareCategory, TargetPortList

FLAG_SYN = 0x02
FLAG_ACK = 0x10
FLAG_PSH = 0x08

# ports benign devices use when not touching a category target port
_BENIGN_SERVICE_PORTS = (22, 53, 123, 443, 8883)
_EPHEMERAL_LO = 32768
_EPHEMERAL_HI = 60999
_DEVICE_BASE_IP = "192.168.1.10"


@dataclass
class ScanProfile:
    category: MalwareCategory
    scan_rate_pps: float = 5.0
    repeat_prob: float = 0.02
    port_choice: Optional[tuple] = None  # weights over the sorted port list; None = uniform
    source_ip: str = "192.168.1.50"

    def __post_init__(self):
        if self.scan_rate_pps <= 0:
            raise InvalidProfile(f"scan_rate_pps must be > 0, got {self.scan_rate_pps}")
        if not (0.0 <= self.repeat_prob <= 0.5):
            raise InvalidProfile(f"repeat_prob must be in [0, 0.5], got {self.repeat_prob}")
        ports = sorted(TargetPortList.default(self.category).ports)
        if self.port_choice is not None:
            w = tuple(float(v) for v in self.port_choice)
            if len(w) != len(ports) or any(v < 0 for v in w) or sum(w) <= 0:
                raise InvalidProfile("port_choice must be nonnegative weights, one per target port")
            self.port_choice = w


@dataclass
class BenignProfile:
    device_count: int = 5
    dst_pool_size: int = 20
    conn_rate_pps: float = 2.0        # aggregate across all devices
    target_port_share: float = 0.3
    rate_jitter: float = 0.0          # per-session rate spread, fraction of the rate

    def __post_init__(self):
        if self.device_count < 1:
            raise InvalidProfile(f"device_count must be >= 1, got {self.device_count}")
        if not (1 <= self.dst_pool_size <= 1 << 31):
            raise InvalidProfile(f"dst_pool_size must be in [1, 2^31], got {self.dst_pool_size}")
        if self.conn_rate_pps <= 0:
            raise InvalidProfile(f"conn_rate_pps must be > 0, got {self.conn_rate_pps}")
        if not (0.0 <= self.target_port_share <= 1.0):
            raise InvalidProfile(f"target_port_share must be in [0, 1], got {self.target_port_share}")
        if not (0.0 <= self.rate_jitter < 1.0):
            raise InvalidProfile(f"rate_jitter must be in [0, 1), got {self.rate_jitter}")


def _arrival_times(stream: Stream, rate: float, duration_s: float) -> np.ndarray:
    """Poisson arrivals in [0, duration): cumulative exponential gaps."""
    expect = rate * duration_s
    chunk = int(expect + 6.0 * math.sqrt(expect + 1.0)) + 16
    parts = []
    t_last = 0.0
    while True:
        u = stream.uniform_block(chunk)
        ts = t_last + np.cumsum(-np.log1p(-u) / rate)
        parts.append(ts)
        t_last = float(ts[-1])
        if t_last >= duration_s:
            break
        chunk = max(16, chunk // 4)
    ts = np.concatenate(parts)
    return ts[ts < duration_s]


def _routable_block(stream: Stream, n: int) -> np.ndarray:
    """n uniform routable IPv4 addresses, rejection-sampled as uint32."""
    have = []
    count = 0
    while count < n:
        cand = stream.u32_block(2 * (n - count) + 16)
        cand = cand[routable_mask(cand)]
        have.append(cand)
        count += cand.shape[0]
    return np.concatenate(have)[:n]


def _pool_addresses(seed: int, slots: np.ndarray) -> np.ndarray:
    """The routable address behind each destination-pool slot.

    Slot j always maps to the same address (the first routable value of
    the draws at counters j, j + 2^40, j + 2*2^40, ...), so the pool
    behaves like a fixed array without ever being materialized; huge
    pools cost only the slots actually drawn.
    """
    out = np.zeros(slots.shape[0], dtype=np.uint32)
    need = np.arange(slots.shape[0])
    salt = 0
    while need.size:
        c = slots[need].astype(np.uint64) + np.uint64(salt) * np.uint64(1 << 40)
        v = (splitmix64_at_counters(seed, c) >> np.uint64(32)).astype(np.uint32)
        ok = routable_mask(v)
        out[need[ok]] = v[ok]
        need = need[~ok]
        salt += 1
    return out


def _weighted_ports(stream: Stream, ports: list, weights, n: int) -> np.ndarray:
    if weights is None:
        return np.asarray(ports, dtype=np.uint16)[stream.choice_block(n, len(ports))]
    cum = np.cumsum(np.asarray(weights, dtype=np.float64))
    cum /= cum[-1]
    idx = np.searchsorted(cum, stream.uniform_block(n), side="right")
    return np.asarray(ports, dtype=np.uint16)[np.minimum(idx, len(ports) - 1)]


def synth_benign(profile: BenignProfile, ports: TargetPortList,
                 duration_s: float, seed: int) -> np.ndarray:
    """One benign gateway session as a sorted packet array.

    Each connection is four packets: SYN out, SYN+ACK back, ACK out,
    then one data packet. A target_port_share fraction of connections
    lands on the category's target ports (those SYNs are what survive
    the scan filter); the rest use common service ports. Destinations
    come from a fixed pool of dst_pool_size routable addresses.
    """
    if duration_s <= 0:
        raise InvalidProfile(f"duration_s must be > 0, got {duration_s}")
    pool_seed = derive_seed(seed, 0)

    rate = profile.conn_rate_pps
    if profile.rate_jitter > 0.0:
        u = Stream(derive_seed(seed, 7)).uniform()
        rate *= 1.0 - profile.rate_jitter + 2.0 * profile.rate_jitter * u
    arrive = _arrival_times(Stream(derive_seed(seed, 1)), rate, duration_s)
    k = arrive.shape[0]
    if k == 0:
        return empty_packets()

    device = Stream(derive_seed(seed, 2)).choice_block(k, profile.device_count)
    src_ips = (np.uint32(ip_to_int(_DEVICE_BASE_IP)) + device.astype(np.uint32))
    slots = Stream(derive_seed(seed, 3)).choice_block(k, profile.dst_pool_size)
    dst_ips = _pool_addresses(pool_seed, slots)

    port_stream = Stream(derive_seed(seed, 4))
    on_target = port_stream.uniform_block(k) < profile.target_port_share
    tgt = sorted(ports.ports)
    tgt_pick = np.asarray(tgt, dtype=np.uint16)[port_stream.choice_block(k, len(tgt))]
    other_pick = np.asarray(_BENIGN_SERVICE_PORTS, dtype=np.uint16)[
        port_stream.choice_block(k, len(_BENIGN_SERVICE_PORTS))]
    dports = np.where(on_target, tgt_pick, other_pick)

    sports = (_EPHEMERAL_LO + Stream(derive_seed(seed, 5)).choice_block(
        k, _EPHEMERAL_HI - _EPHEMERAL_LO + 1)).astype(np.uint16)
    payloads = (50 + Stream(derive_seed(seed, 6)).choice_block(k, 1351)).astype(np.uint32)

    t_us = np.floor(arrive * 1e6).astype(np.int64)
    out = empty_packets(4 * k)
    out["ip_proto"] = PROTO_TCP
    sl_syn = slice(0, None, 4)
    sl_synack = slice(1, None, 4)
    sl_ack = slice(2, None, 4)
    sl_data = slice(3, None, 4)

    for sl in (sl_syn, sl_ack, sl_data):
        out["src_ip"][sl] = src_ips
        out["dst_ip"][sl] = dst_ips
        out["src_port"][sl] = sports
        out["dst_port"][sl] = dports
    out["src_ip"][sl_synack] = dst_ips
    out["dst_ip"][sl_synack] = src_ips
    out["src_port"][sl_synack] = dports
    out["dst_port"][sl_synack] = sports

    out["ts_micros"][sl_syn] = t_us
    out["ts_micros"][sl_synack] = t_us + 1000
    out["ts_micros"][sl_ack] = t_us + 2000
    out["ts_micros"][sl_data] = t_us + 5000
    out["tcp_flags"][sl_syn] = FLAG_SYN
    out["tcp_flags"][sl_synack] = FLAG_SYN | FLAG_ACK
    out["tcp_flags"][sl_ack] = FLAG_ACK
    out["tcp_flags"][sl_data] = FLAG_ACK | FLAG_PSH
    out["payload_len"][sl_data] = payloads

    return out[np.argsort(out["ts_micros"], kind="stable")]


def synth_scan(profile: ScanProfile, duration_s: float, seed: int) -> np.ndarray:
    """The scanning stream alone: one SYN per probe, sorted by time."""
    if duration_s <= 0:
        raise InvalidProfile(f"duration_s must be > 0, got {duration_s}")
    arrive = _arrival_times(Stream(derive_seed(seed, 0)), profile.scan_rate_pps, duration_s)
    k = arrive.shape[0]
    if k == 0:
        return empty_packets()

    fresh = _routable_block(Stream(derive_seed(seed, 1)), k)
    u_rep = Stream(derive_seed(seed, 2)).uniform_block(k)
    u_idx = Stream(derive_seed(seed, 3)).uniform_block(k)
    dst = np.empty(k, dtype=np.uint32)
    for i in range(k):
        # probe i revisits one of the first i targets with prob repeat_prob
        if i > 0 and u_rep[i] < profile.repeat_prob:
            dst[i] = dst[min(int(u_idx[i] * i), i - 1)]
        else:
            dst[i] = fresh[i]

    ports = sorted(TargetPortList.default(profile.category).ports)
    dports = _weighted_ports(Stream(derive_seed(seed, 4)), ports, profile.port_choice, k)
    sports = (_EPHEMERAL_LO + Stream(derive_seed(seed, 5)).choice_block(
        k, _EPHEMERAL_HI - _EPHEMERAL_LO + 1)).astype(np.uint16)

    out = empty_packets(k)
    out["ts_micros"] = np.floor(arrive * 1e6).astype(np.int64)
    out["ip_proto"] = PROTO_TCP
    out["src_ip"] = np.uint32(ip_to_int(profile.source_ip))
    out["dst_ip"] = dst
    out["src_port"] = sports
    out["dst_port"] = dports
    out["tcp_flags"] = FLAG_SYN
    return out


def synth_malicious(scan: ScanProfile, benign: Optional[BenignProfile],
                    duration_s: float, seed: int) -> np.ndarray:
    """Scan stream merged over a benign stream (pass benign=None to skip it)."""
    streams = [synth_scan(scan, duration_s, derive_seed(seed, 1))]
    if benign is not None:
        ports = TargetPortList.default(scan.category)
        streams.append(synth_benign(benign, ports, duration_s, derive_seed(seed, 0)))
    merged = np.concatenate(streams[::-1])  # benign first so ties keep it ahead
    return merged[np.argsort(merged["ts_micros"], kind="stable")]


def build_corpus(n_benign: int, n_malicious: int, category: MalwareCategory,
                 benign_profile: Optional[BenignProfile] = None,
                 scan_profile: Optional[ScanProfile] = None,
                 duration_s: float = 900.0, seed: int = 0,
                 outdir=".") -> tuple:
    """Write per-session pcaps plus labels.jsonl; returns (paths, labels path).

    Session i uses seed derive_seed(seed, i); benign sessions take the
    low indices. Layout: <outdir>/benign_<i>.pcap, <outdir>/malicious_<i>.pcap.
    """
    if n_benign < 0 or n_malicious < 0:
        raise InvalidProfile("session counts must be >= 0")
    benign_profile = benign_profile if benign_profile is not None else BenignProfile()
    scan_profile = scan_profile if scan_profile is not None else ScanProfile(category)
    ports = TargetPortList.default(category)

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    labels_path = outdir / "labels.jsonl"
    with open(labels_path, "w", encoding="utf-8") as labels:
        for i in range(n_benign + n_malicious):
            session_seed = derive_seed(seed, i)
            if i < n_benign:
                name = f"benign_{i}.pcap"
                pks = synth_benign(benign_profile, ports, duration_s, session_seed)
                label = "benign"
            else:
                name = f"malicious_{i - n_benign}.pcap"
                pks = synth_malicious(scan_profile, benign_profile, duration_s, session_seed)
                label = "malicious"
            path = outdir / name
            path.write_bytes(write_pcap(pks))
            paths.append(path)
            labels.write(json.dumps(
                {"file": name, "label": label, "category": category.value,
                 "seed": session_seed},
                sort_keys=True, separators=(",", ":")) + "\n")
    return paths, labels_path
