"""Classic pcap reading and writing over columnar packet records.

Format on disk: 24-byte global header (magic 0xA1B2C3D4, microsecond
timestamps, version 2.4, link type 1 = Ethernet), then per frame a 16-byte
record header followed by the captured bytes. Both byte orders are accepted
on read; files are always written little-endian. pcapng is out of scope.
"""

from __future__ import annotations

import struct
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import BadMagic, TruncatedHeader, UnsortedInput, UnsupportedLinkType
from .packets import PACKET_DTYPE, empty_packets, is_sorted

MAGIC_MICROS = 0xA1B2C3D4
LINKTYPE_ETHERNET = 1
GLOBAL_HEADER_LEN = 24
SNAPLEN = 65535


class ParseResult(NamedTuple):
    packets: np.ndarray
    skipped: int


def parse_pcap(data: bytes) -> ParseResult:
    """Decode every Ethernet/IPv4 frame of a classic pcap byte stream.

    Frames that are not IPv4, are malformed, or are cut short only increase
    the skip count; everything else raises.
    """
    if len(data) >= 4:
        magic = struct.unpack_from("<I", data, 0)[0]
        if magic == MAGIC_MICROS:
            swapped = False
        elif magic == struct.unpack("<I", struct.pack(">I", MAGIC_MICROS))[0]:
            swapped = True
        else:
            raise BadMagic(f"not a classic microsecond pcap magic: 0x{magic:08X}")
    if len(data) < GLOBAL_HEADER_LEN:
        raise TruncatedHeader(
            f"file is {len(data)} bytes, global header needs {GLOBAL_HEADER_LEN}")
    endian = ">" if swapped else "<"
    _, _, _, _, _, network = struct.unpack_from(endian + "HHiIII", data, 4)
    if network != LINKTYPE_ETHERNET:
        raise UnsupportedLinkType(f"link type {network}, only Ethernet (1) is supported")

    buf = np.frombuffer(data, dtype=np.uint8)
    ts, src, dst, proto, sport, dport, flags, plen, skipped = kernels.parse_frames(
        buf, swapped)

    packets = empty_packets(len(ts))
    packets["ts_micros"] = ts
    packets["src_ip"] = src
    packets["dst_ip"] = dst
    packets["ip_proto"] = proto
    packets["src_port"] = sport
    packets["dst_port"] = dport
    packets["tcp_flags"] = flags
    packets["payload_len"] = plen
    return ParseResult(packets, int(skipped))


def write_pcap(records: np.ndarray) -> bytes:
    """Encode packet records as a classic pcap byte stream.

    Frames are synthesized with fixed MACs derived from the IP addresses and
    zero-filled payloads; re-parsing the output reproduces the records
    field for field.
    """
    records = np.asarray(records, dtype=PACKET_DTYPE)
    if not is_sorted(records):
        raise UnsortedInput("records must be ordered by ts_micros")
    if len(records) and int(records["ts_micros"].min()) < 0:
        raise UnsortedInput("negative timestamps are not representable")

    header = struct.pack("<IHHiIII", MAGIC_MICROS, 2, 4, 0, 0, SNAPLEN,
                         LINKTYPE_ETHERNET)
    body = kernels.assemble_frames(
        records["ts_micros"], records["src_ip"], records["dst_ip"],
        records["ip_proto"], records["src_port"], records["dst_port"],
        records["tcp_flags"], records["payload_len"])
    return header + body.tobytes()
