"""Pure-numpy implementations of the hot kernels.

Every function here has a numba twin in numba_impl.py with the same name,
signature and bit-identical output. Float expressions are written so both
backends evaluate the same operations in the same order: elementwise only,
never a float reduction whose association order could differ.
"""

from __future__ import annotations

import struct

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64_block(seed, start, n):
    """Draws [start, start+n) of the splitmix64 stream for `seed`."""
    idx = np.arange(np.int64(start) + 1, np.int64(start) + np.int64(n) + 1).astype(np.uint64)
    z = np.uint64(seed) + idx * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


# pcap record area layout: 16-byte record header, Ethernet II frame,
# IPv4 header (no options on write), then TCP/UDP header and payload.

_ETH_HLEN = 14
_ETHERTYPE_IPV4 = 0x0800


def parse_frames(buf: np.ndarray, swapped: bool):
    """Walk the record area of a classic pcap buffer (starting at offset 24).

    Returns (ts, src, dst, proto, sport, dport, flags, plen, skipped) with one
    entry per parseable Ethernet/IPv4 frame, in file order. Frames that are
    non-IPv4, malformed or truncated only bump the skip count.
    """
    total = buf.shape[0]
    fmt = ">IIII" if swapped else "<IIII"
    offs, incls, secs, usecs = [], [], [], []
    skipped = 0
    pos = 24
    while pos < total:
        if total - pos < 16:
            skipped += 1
            break
        sec, usec, incl, _orig = struct.unpack_from(fmt, buf, pos)
        data = pos + 16
        if data + incl > total:
            skipped += 1
            break
        offs.append(data)
        incls.append(incl)
        secs.append(sec)
        usecs.append(usec)
        pos = data + incl

    n = len(offs)
    if n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return (empty, empty.astype(np.uint32), empty.astype(np.uint32),
                empty.astype(np.uint8), empty.astype(np.uint16),
                empty.astype(np.uint16), empty.astype(np.uint8),
                empty.astype(np.uint32), skipped)

    o = np.asarray(offs, dtype=np.int64)
    incl = np.asarray(incls, dtype=np.int64)
    ts = np.asarray(secs, dtype=np.int64) * 1_000_000 + np.asarray(usecs, dtype=np.int64)

    def g(idx):
        return buf[np.minimum(idx, total - 1)].astype(np.int64)

    ethertype = (g(o + 12) << 8) | g(o + 13)
    ver_ihl = g(o + 14)
    ihl = ver_ihl & 0xF
    tot_len = (g(o + 16) << 8) | g(o + 17)
    proto = g(o + 23)
    src = (g(o + 26) << 24) | (g(o + 27) << 16) | (g(o + 28) << 8) | g(o + 29)
    dst = (g(o + 30) << 24) | (g(o + 31) << 16) | (g(o + 32) << 8) | g(o + 33)

    l4 = o + _ETH_HLEN + 4 * ihl
    l4_need = np.where(proto == 6, 20, np.where(proto == 17, 8, 0))
    ok = ((incl >= _ETH_HLEN + 20)
          & (ethertype == _ETHERTYPE_IPV4)
          & ((ver_ihl >> 4) == 4)
          & (ihl >= 5)
          & (incl >= _ETH_HLEN + 4 * ihl + l4_need))

    sport = np.where(l4_need > 0, (g(l4) << 8) | g(l4 + 1), 0)
    dport = np.where(l4_need > 0, (g(l4 + 2) << 8) | g(l4 + 3), 0)

    doff = g(l4 + 12) >> 4
    flags = np.where(proto == 6, g(l4 + 13) & 0x3F, 0)
    udp_len = (g(l4 + 4) << 8) | g(l4 + 5)
    plen = np.where(
        proto == 6, tot_len - 4 * ihl - 4 * doff,
        np.where(proto == 17, udp_len - 8, tot_len - 4 * ihl))
    plen = np.maximum(plen, 0)

    skipped += int(n - np.count_nonzero(ok))
    return (ts[ok], src[ok].astype(np.uint32), dst[ok].astype(np.uint32),
            proto[ok].astype(np.uint8), sport[ok].astype(np.uint16),
            dport[ok].astype(np.uint16), flags[ok].astype(np.uint8),
            plen[ok].astype(np.uint32), skipped)


def _scatter16be(out, idx, vals):
    out[idx] = (vals >> 8) & 0xFF
    out[idx + 1] = vals & 0xFF


def _scatter32be(out, idx, vals):
    out[idx] = (vals >> 24) & 0xFF
    out[idx + 1] = (vals >> 16) & 0xFF
    out[idx + 2] = (vals >> 8) & 0xFF
    out[idx + 3] = vals & 0xFF


def _scatter32le(out, idx, vals):
    out[idx] = vals & 0xFF
    out[idx + 1] = (vals >> 8) & 0xFF
    out[idx + 2] = (vals >> 16) & 0xFF
    out[idx + 3] = (vals >> 24) & 0xFF


def _fold_checksum(s):
    s = (s & 0xFFFF) + (s >> 16)
    s = (s & 0xFFFF) + (s >> 16)
    return ~s & 0xFFFF


def assemble_frames(ts, src, dst, proto, sport, dport, flags, plen):
    """Record area bytes (everything after the 24-byte global header).

    One little-endian record header plus one Ethernet/IPv4 frame per input
    packet; payload bytes are zero-filled. IPv4 and TCP checksums are valid.
    """
    n = ts.shape[0]
    proto = proto.astype(np.int64)
    plen64 = plen.astype(np.int64)
    l4len = np.where(proto == 6, 20, np.where(proto == 17, 8, 0))
    frame = _ETH_HLEN + 20 + l4len + plen64
    reclen = 16 + frame
    ends = np.cumsum(reclen)
    out = np.zeros(int(ends[-1]) if n else 0, dtype=np.uint8)
    if n == 0:
        return out
    o = ends - reclen

    sec = ts // 1_000_000
    usec = ts % 1_000_000
    _scatter32le(out, o, sec)
    _scatter32le(out, o + 4, usec)
    _scatter32le(out, o + 8, frame)
    _scatter32le(out, o + 12, frame)

    d = o + 16
    src64 = src.astype(np.int64)
    dst64 = dst.astype(np.int64)
    # locally administered MACs derived from the IPv4 addresses
    out[d] = 0x02
    _scatter32be(out, d + 2, dst64)
    out[d + 6] = 0x02
    _scatter32be(out, d + 8, src64)
    _scatter16be(out, d + 12, np.full(n, _ETHERTYPE_IPV4, dtype=np.int64))

    ip = d + _ETH_HLEN
    tot_len = 20 + l4len + plen64
    out[ip] = 0x45
    _scatter16be(out, ip + 2, tot_len)
    out[ip + 8] = 64
    out[ip + 9] = proto
    ip_sum = (0x4500 + tot_len + ((64 << 8) | proto)
              + (src64 >> 16) + (src64 & 0xFFFF)
              + (dst64 >> 16) + (dst64 & 0xFFFF))
    _scatter16be(out, ip + 10, _fold_checksum(ip_sum))
    _scatter32be(out, ip + 12, src64)
    _scatter32be(out, ip + 16, dst64)

    l4 = ip + 20
    sport64 = sport.astype(np.int64)
    dport64 = dport.astype(np.int64)
    is_tcp = proto == 6
    is_udp = proto == 17

    if np.any(is_tcp):
        t = l4[is_tcp]
        fl = flags.astype(np.int64)[is_tcp]
        tcp_len = 20 + plen64[is_tcp]
        _scatter16be(out, t, sport64[is_tcp])
        _scatter16be(out, t + 2, dport64[is_tcp])
        out[t + 12] = 0x50
        out[t + 13] = fl
        _scatter16be(out, t + 14, np.full(fl.shape, 0x2000, dtype=np.int64))
        pseudo = ((src64[is_tcp] >> 16) + (src64[is_tcp] & 0xFFFF)
                  + (dst64[is_tcp] >> 16) + (dst64[is_tcp] & 0xFFFF)
                  + 6 + tcp_len)
        hdr = (sport64[is_tcp] + dport64[is_tcp] + ((0x50 << 8) | fl) + 0x2000)
        _scatter16be(out, t + 16, _fold_checksum(pseudo + hdr))

    if np.any(is_udp):
        u = l4[is_udp]
        _scatter16be(out, u, sport64[is_udp])
        _scatter16be(out, u + 2, dport64[is_udp])
        _scatter16be(out, u + 4, 8 + plen64[is_udp])
        # UDP checksum 0 means "not computed" for IPv4

    return out


def group_counts(vals: np.ndarray):
    """(unique count, max run, min run) over the multiset of values."""
    if vals.shape[0] == 0:
        return 0, 0, 0
    _, counts = np.unique(vals, return_counts=True)
    return int(counts.shape[0]), int(counts.max()), int(counts.min())


def knn_votes(xq: np.ndarray, xt: np.ndarray, y: np.ndarray, k):
    """Per query, the number of label-1 rows among the k nearest training rows.

    Nearest means smallest squared Euclidean distance, ties broken by the
    lower training-row index.
    """
    m = xq.shape[0]
    n = xt.shape[0]
    d = xq.shape[1]
    d2 = np.zeros((m, n), dtype=np.float64)
    for j in range(d):
        t = xq[:, j].reshape(m, 1) - xt[:, j].reshape(1, n)
        d2 += t * t
    order = np.argsort(d2, axis=1, kind="stable")
    votes = y[order[:, :k]].astype(np.int64).sum(axis=1)
    return votes


def best_split(vals: np.ndarray, labels: np.ndarray):
    """Best binary split of one feature column under the Gini criterion.

    Returns (score, threshold, valid); score is the split quality
    sum(count_class^2)/n_side summed over both sides, strictly increasing in
    purity, so the caller maximizes it. Threshold is chosen such that
    `value <= threshold` sends a row left. valid is False when the column
    is constant or has fewer than 2 rows.
    """
    n = vals.shape[0]
    if n < 2:
        return 0.0, 0.0, False
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    sl = labels[order].astype(np.int64)
    c1 = np.cumsum(sl)
    cut = np.nonzero(sv[1:] > sv[:-1])[0]
    if cut.shape[0] == 0:
        return 0.0, 0.0, False
    tot1 = int(c1[-1])
    tot0 = n - tot1
    n_l = cut + 1
    c1l = c1[cut]
    c0l = n_l - c1l
    n_r = n - n_l
    c1r = tot1 - c1l
    c0r = tot0 - c0l
    score = (c0l * c0l + c1l * c1l) / n_l + (c0r * c0r + c1r * c1r) / n_r
    best = int(np.argmax(score))
    i = int(cut[best])
    thr = (sv[i] + sv[i + 1]) / 2.0
    if thr >= sv[i + 1]:
        thr = sv[i]
    return float(score[best]), float(thr), True
