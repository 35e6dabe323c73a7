"""Fixed-window sessions, the scan-probe filter, and packet sub-sampling.

A traffic session is every frame one gateway saw inside one tumbling
window (default 15 minutes). Malicious scanning is looked for only among
TCP connection attempts (SYN set, ACK clear) aimed at the destination ports
known to be targeted by each malware category.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidProbability, UnsortedInput
from .packets import ACK, PACKET_DTYPE, PROTO_TCP, SYN, empty_packets, ip_to_int, is_sorted
from .rng import Stream

DEFAULT_WINDOW_MICROS = 900_000_000  # 15 minutes


class MalwareCategory(enum.Enum):
    """The three families of IoT malware grouped by the vulnerability probed."""

    TELNET = "telnet"
    HTTP_POST = "http-post"
    HTTP_GET = "http-get"

    @classmethod
    def from_wire(cls, name: str) -> "MalwareCategory":
        for member in cls:
            if member.value == name:
                return member
        raise ValueError(f"unknown category {name!r}; expected one of "
                         f"{[m.value for m in cls]}")


DEFAULT_TARGET_PORTS = {
    MalwareCategory.TELNET: frozenset({23, 2323}),
    MalwareCategory.HTTP_POST: frozenset({37215, 80, 20736, 36895}),
    MalwareCategory.HTTP_GET: frozenset({80}),
}


@dataclass(frozen=True)
class TargetPortList:
    category: MalwareCategory
    ports: frozenset[int]

    def __post_init__(self):
        if not self.ports:
            raise ValueError("target port list must not be empty")
        if any(p < 0 or p > 65535 for p in self.ports):
            raise ValueError("ports must be in 0..65535")

    @classmethod
    def default(cls, category: MalwareCategory) -> "TargetPortList":
        return cls(category, DEFAULT_TARGET_PORTS[category])


@dataclass
class TrafficSession:
    gateway_id: str
    window_start_micros: int
    window_len_micros: int = DEFAULT_WINDOW_MICROS
    packets: np.ndarray = field(default_factory=empty_packets)

    def __post_init__(self):
        if self.window_len_micros <= 0:
            raise ValueError("window_len_micros must be positive")
        self.packets = np.asarray(self.packets, dtype=PACKET_DTYPE)

    def __len__(self) -> int:
        return len(self.packets)


def slice_sessions(records: np.ndarray, gateway_id: str,
                   window_len_micros: int = DEFAULT_WINDOW_MICROS) -> list[TrafficSession]:
    """Partition an ordered packet stream into tumbling windows.

    Windows are anchored at the first packet's timestamp; window k covers
    [t0 + k*W, t0 + (k+1)*W). Empty windows between occupied ones are
    returned as empty sessions so downstream stages see a gapless timeline.
    """
    if window_len_micros <= 0:
        raise ValueError("window_len_micros must be positive")
    records = np.asarray(records, dtype=PACKET_DTYPE)
    if not is_sorted(records):
        raise UnsortedInput("records must be ordered by ts_micros")
    if len(records) == 0:
        return []

    ts = records["ts_micros"]
    t0 = int(ts[0])
    last_window = int(ts[-1] - t0) // window_len_micros
    sessions = []
    for k in range(last_window + 1):
        start = t0 + k * window_len_micros
        lo = np.searchsorted(ts, start, side="left")
        hi = np.searchsorted(ts, start + window_len_micros, side="left")
        sessions.append(TrafficSession(gateway_id, start, window_len_micros,
                                       records[lo:hi].copy()))
    return sessions


def filter_session(session: TrafficSession, ports: TargetPortList) -> TrafficSession:
    """Keep only outbound connection probes on the category's target ports.

    A probe is a TCP packet with SYN set and ACK clear; requiring ACK clear
    drops the SYN+ACK replies that local devices send back to scanners.
    Window metadata and relative packet order are unchanged.
    """
    pk = session.packets
    flags = pk["tcp_flags"]
    mask = ((pk["ip_proto"] == PROTO_TCP)
            & (flags & SYN != 0)
            & (flags & ACK == 0)
            & np.isin(pk["dst_port"], list(ports.ports)))
    return replace(session, packets=pk[mask].copy())


def subsample(session: TrafficSession, p: float,
              device_keep: set | None = None, seed: int = 0) -> TrafficSession:
    """Thin a session across devices and along time.

    When device_keep is given, packets from other source IPs are dropped
    first. Each surviving packet is then kept independently with
    probability p, decided by the splitmix64 stream for `seed` (draw i
    belongs to surviving packet i), so results are identical across runs
    and backends.
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidProbability(f"p must be in [0, 1], got {p}")
    pk = session.packets
    if device_keep is not None:
        keep_ips = np.asarray(
            [ip_to_int(ip) if isinstance(ip, str) else int(ip) for ip in device_keep],
            dtype=np.uint32)
        pk = pk[np.isin(pk["src_ip"], keep_ips)]
    if len(pk):
        u = Stream(seed).uniform_block(len(pk))
        pk = pk[u < p]
    return replace(session, packets=pk.copy())
