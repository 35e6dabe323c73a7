"""Times the numba kernels against their pure-numpy twins.

Each kernel exists in both backends with identical semantics, so this
is a straight wall-clock comparison on representative workloads. The
numba column includes a warmup call so compilation time is not counted.

Usage: python3 benchmarks/bench_kernels.py [--packets 200000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from edima.kernels import numba_impl, numpy_impl
from edima.packets import PROTO_TCP
from edima.pcap import write_pcap
from edima.rng import Stream
from edima.sessions import MalwareCategory, TargetPortList
from edima.synth import ScanProfile, synth_scan


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--packets", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    n = args.packets
    # one big scan stream gives realistic field distributions
    profile = ScanProfile(MalwareCategory.TELNET, scan_rate_pps=float(n) / 900.0)
    pks = synth_scan(profile, 900.0, seed=1)[:n]
    pks["ip_proto"] = PROTO_TCP
    blob = write_pcap(pks)
    buf = np.frombuffer(blob, dtype=np.uint8)

    st = Stream(7)
    xt = st.uniform_block(2000 * 4).reshape(2000, 4)
    yt = (st.uniform_block(2000) < 0.5).astype(np.int64)
    xq = st.uniform_block(500 * 4).reshape(500, 4)
    col = st.uniform_block(20_000)
    lab = (st.uniform_block(20_000) < 0.5).astype(np.int64)

    fields = (pks["ts_micros"], pks["src_ip"], pks["dst_ip"], pks["ip_proto"],
              pks["src_port"], pks["dst_port"], pks["tcp_flags"], pks["payload_len"])

    cases = [
        ("splitmix64_block 1M", lambda m: m.splitmix64_block(np.uint64(5), np.int64(0), np.int64(1_000_000))),
        (f"parse_frames {n // 1000}K pkts", lambda m: m.parse_frames(buf, False)),
        (f"assemble_frames {n // 1000}K pkts", lambda m: m.assemble_frames(*fields)),
        (f"group_counts {n // 1000}K", lambda m: m.group_counts(pks["dst_ip"])),
        ("knn_votes 500x2000", lambda m: m.knn_votes(xq, xt, yt, np.int64(5))),
        ("best_split 20K", lambda m: m.best_split(col, lab)),
    ]

    print(f"{'kernel':<28} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, call in cases:
        call(numba_impl)  # warmup / compile
        t_np = timeit(lambda: call(numpy_impl), args.repeat)
        t_nb = timeit(lambda: call(numba_impl), args.repeat)
        ratio = t_np / t_nb if t_nb > 0 else float("inf")
        print(f"{name:<28} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms {ratio:>7.1f}x")


if __name__ == "__main__":
    main()
