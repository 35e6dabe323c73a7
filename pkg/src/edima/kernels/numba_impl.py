"""Numba-compiled implementations of the hot kernels.

Each function mirrors its twin in numpy_impl.py and must return bit-identical
results; float math is kept elementwise with the same evaluation order and
fastmath stays off.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(**_JIT)
def splitmix64_block(seed, start, n):
    out = np.empty(n, dtype=np.uint64)
    s = np.uint64(seed)
    for i in range(n):
        z = s + np.uint64(start + i + 1) * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        out[i] = z ^ (z >> np.uint64(31))
    return out


@njit(**_JIT)
def _u32_at(buf, pos, swapped):
    b0 = np.int64(buf[pos])
    b1 = np.int64(buf[pos + 1])
    b2 = np.int64(buf[pos + 2])
    b3 = np.int64(buf[pos + 3])
    if swapped:
        return (b0 << 24) | (b1 << 16) | (b2 << 8) | b3
    return (b3 << 24) | (b2 << 16) | (b1 << 8) | b0


@njit(**_JIT)
def _be16(buf, pos):
    return (np.int64(buf[pos]) << 8) | np.int64(buf[pos + 1])


@njit(**_JIT)
def parse_frames(buf, swapped):
    total = buf.shape[0]
    nmax = (total - 24) // 16
    if nmax < 0:
        nmax = 0
    ts = np.empty(nmax, dtype=np.int64)
    src = np.empty(nmax, dtype=np.uint32)
    dst = np.empty(nmax, dtype=np.uint32)
    proto = np.empty(nmax, dtype=np.uint8)
    sport = np.empty(nmax, dtype=np.uint16)
    dport = np.empty(nmax, dtype=np.uint16)
    flags = np.empty(nmax, dtype=np.uint8)
    plen = np.empty(nmax, dtype=np.uint32)

    count = 0
    skipped = 0
    pos = 24
    while pos < total:
        if total - pos < 16:
            skipped += 1
            break
        sec = _u32_at(buf, pos, swapped)
        usec = _u32_at(buf, pos + 4, swapped)
        incl = _u32_at(buf, pos + 8, swapped)
        data = pos + 16
        if data + incl > total:
            skipped += 1
            break
        pos = data + incl

        if incl < 34:
            skipped += 1
            continue
        if _be16(buf, data + 12) != 0x0800:
            skipped += 1
            continue
        ver_ihl = np.int64(buf[data + 14])
        ihl = ver_ihl & 0xF
        if (ver_ihl >> 4) != 4 or ihl < 5:
            skipped += 1
            continue
        p = np.int64(buf[data + 23])
        l4_need = 0
        if p == 6:
            l4_need = 20
        elif p == 17:
            l4_need = 8
        if incl < 14 + 4 * ihl + l4_need:
            skipped += 1
            continue

        tot_len = _be16(buf, data + 16)
        l4 = data + 14 + 4 * ihl
        sp = 0
        dp = 0
        fl = 0
        if p == 6:
            sp = _be16(buf, l4)
            dp = _be16(buf, l4 + 2)
            doff = np.int64(buf[l4 + 12]) >> 4
            fl = np.int64(buf[l4 + 13]) & 0x3F
            pl = tot_len - 4 * ihl - 4 * doff
        elif p == 17:
            sp = _be16(buf, l4)
            dp = _be16(buf, l4 + 2)
            pl = _be16(buf, l4 + 4) - 8
        else:
            pl = tot_len - 4 * ihl
        if pl < 0:
            pl = 0

        ts[count] = sec * 1_000_000 + usec
        src[count] = np.uint32(_u32_at(buf, data + 26, True))
        dst[count] = np.uint32(_u32_at(buf, data + 30, True))
        proto[count] = np.uint8(p)
        sport[count] = np.uint16(sp)
        dport[count] = np.uint16(dp)
        flags[count] = np.uint8(fl)
        plen[count] = np.uint32(pl)
        count += 1

    return (ts[:count].copy(), src[:count].copy(), dst[:count].copy(),
            proto[:count].copy(), sport[:count].copy(), dport[:count].copy(),
            flags[:count].copy(), plen[:count].copy(), skipped)


@njit(**_JIT)
def _put16be(out, pos, v):
    out[pos] = np.uint8((v >> 8) & 0xFF)
    out[pos + 1] = np.uint8(v & 0xFF)


@njit(**_JIT)
def _put32be(out, pos, v):
    out[pos] = np.uint8((v >> 24) & 0xFF)
    out[pos + 1] = np.uint8((v >> 16) & 0xFF)
    out[pos + 2] = np.uint8((v >> 8) & 0xFF)
    out[pos + 3] = np.uint8(v & 0xFF)


@njit(**_JIT)
def _put32le(out, pos, v):
    out[pos] = np.uint8(v & 0xFF)
    out[pos + 1] = np.uint8((v >> 8) & 0xFF)
    out[pos + 2] = np.uint8((v >> 16) & 0xFF)
    out[pos + 3] = np.uint8((v >> 24) & 0xFF)


@njit(**_JIT)
def _fold(s):
    s = (s & 0xFFFF) + (s >> 16)
    s = (s & 0xFFFF) + (s >> 16)
    return (~s) & 0xFFFF


@njit(**_JIT)
def assemble_frames(ts, src, dst, proto, sport, dport, flags, plen):
    n = ts.shape[0]
    total = 0
    for i in range(n):
        p = np.int64(proto[i])
        l4len = 20 if p == 6 else (8 if p == 17 else 0)
        total += 16 + 14 + 20 + l4len + np.int64(plen[i])
    out = np.zeros(total, dtype=np.uint8)

    o = 0
    for i in range(n):
        p = np.int64(proto[i])
        l4len = 20 if p == 6 else (8 if p == 17 else 0)
        pl = np.int64(plen[i])
        frame = 14 + 20 + l4len + pl
        t = ts[i]
        _put32le(out, o, t // 1_000_000)
        _put32le(out, o + 4, t % 1_000_000)
        _put32le(out, o + 8, frame)
        _put32le(out, o + 12, frame)

        d = o + 16
        s64 = np.int64(src[i])
        d64 = np.int64(dst[i])
        out[d] = 0x02
        _put32be(out, d + 2, d64)
        out[d + 6] = 0x02
        _put32be(out, d + 8, s64)
        _put16be(out, d + 12, 0x0800)

        ip = d + 14
        tot_len = 20 + l4len + pl
        out[ip] = 0x45
        _put16be(out, ip + 2, tot_len)
        out[ip + 8] = 64
        out[ip + 9] = np.uint8(p)
        ip_sum = (0x4500 + tot_len + ((64 << 8) | p)
                  + (s64 >> 16) + (s64 & 0xFFFF)
                  + (d64 >> 16) + (d64 & 0xFFFF))
        _put16be(out, ip + 10, _fold(ip_sum))
        _put32be(out, ip + 12, s64)
        _put32be(out, ip + 16, d64)

        l4 = ip + 20
        sp = np.int64(sport[i])
        dp = np.int64(dport[i])
        if p == 6:
            fl = np.int64(flags[i])
            tcp_len = 20 + pl
            _put16be(out, l4, sp)
            _put16be(out, l4 + 2, dp)
            out[l4 + 12] = 0x50
            out[l4 + 13] = np.uint8(fl)
            _put16be(out, l4 + 14, 0x2000)
            pseudo = ((s64 >> 16) + (s64 & 0xFFFF)
                      + (d64 >> 16) + (d64 & 0xFFFF) + 6 + tcp_len)
            hdr = sp + dp + ((0x50 << 8) | fl) + 0x2000
            _put16be(out, l4 + 16, _fold(pseudo + hdr))
        elif p == 17:
            _put16be(out, l4, sp)
            _put16be(out, l4 + 2, dp)
            _put16be(out, l4 + 4, 8 + pl)

        o += 16 + frame
    return out


@njit(**_JIT)
def group_counts(vals):
    n = vals.shape[0]
    if n == 0:
        return 0, 0, 0
    sv = np.sort(vals)
    uniq = 1
    run = 1
    max_run = 1
    min_run = n
    for i in range(1, n):
        if sv[i] == sv[i - 1]:
            run += 1
        else:
            if run > max_run:
                max_run = run
            if run < min_run:
                min_run = run
            uniq += 1
            run = 1
    if run > max_run:
        max_run = run
    if run < min_run:
        min_run = run
    return uniq, max_run, min_run


@njit(**_JIT)
def knn_votes(xq, xt, y, k):
    m = xq.shape[0]
    n = xt.shape[0]
    d = xq.shape[1]
    votes = np.empty(m, dtype=np.int64)
    d2 = np.empty(n, dtype=np.float64)
    taken = np.empty(n, dtype=np.uint8)
    for q in range(m):
        for t in range(n):
            acc = 0.0
            for j in range(d):
                diff = xq[q, j] - xt[t, j]
                acc += diff * diff
            d2[t] = acc
            taken[t] = 0
        v = 0
        for _ in range(k):
            best = -1
            best_d = 0.0
            for t in range(n):
                if taken[t] == 1:
                    continue
                if best < 0 or d2[t] < best_d:
                    best = t
                    best_d = d2[t]
            taken[best] = 1
            v += np.int64(y[best])
        votes[q] = v
    return votes


@njit(**_JIT)
def best_split(vals, labels):
    n = vals.shape[0]
    if n < 2:
        return 0.0, 0.0, False
    order = np.argsort(vals)
    tot1 = 0
    for i in range(n):
        tot1 += np.int64(labels[i])
    tot0 = n - tot1

    best_score = -1.0
    best_i = -1
    c1l = 0
    for i in range(n - 1):
        c1l += np.int64(labels[order[i]])
        if vals[order[i + 1]] <= vals[order[i]]:
            continue
        n_l = i + 1
        n_r = n - n_l
        c0l = n_l - c1l
        c1r = tot1 - c1l
        c0r = tot0 - c0l
        score = (c0l * c0l + c1l * c1l) / n_l + (c0r * c0r + c1r * c1r) / n_r
        if score > best_score:
            best_score = score
            best_i = i
    if best_i < 0:
        return 0.0, 0.0, False
    lo = vals[order[best_i]]
    hi = vals[order[best_i + 1]]
    thr = (lo + hi) / 2.0
    if thr >= hi:
        thr = lo
    return best_score, thr, True
