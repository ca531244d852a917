"""Compare the numba kernels with their pure-numpy twins (and the FFT convolution).

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel is run once to warm the JIT, then timed ``--repeat`` times; the
best time is reported together with the max deviation between the two paths.
"""

import argparse
import json
import sys
import time

import numpy as np

from expsums import _accel
from expsums import kernels as Kn
from expsums import tracefn as T
from expsums.ffield import build_prime_field


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases():
    rng = np.random.default_rng(0)
    for q in (1009, 4001):
        n = q - 1
        a = rng.normal(size=n) + 1j * rng.normal(size=n)
        b = rng.normal(size=n) + 1j * rng.normal(size=n)
        yield f"cyclic_convolve n={n}", (
            lambda a=a, b=b: Kn.cyclic_convolve_nb(a, b),
            lambda a=a, b=b: Kn.cyclic_convolve_np(a, b),
            lambda a=a, b=b: Kn.cyclic_convolve_fft(a, b),
        )
    for q, n in ((101, 2000), (401, 200)):
        ctx = build_prime_field(q)
        K = T.kloosterman(ctx, 2)
        kext = K.extended()
        pw = np.arange(q, dtype=np.int64)
        tup = rng.integers(0, q, size=(n, 4)).astype(np.int64)
        yield f"sigma1_batch q={q} tuples={n}", (
            lambda k=kext, p=pw, t=tup, q=q: Kn.sigma1_batch_nb(k, p, t, 2, q),
            lambda k=kext, p=pw, t=tup, q=q: Kn.sigma1_batch_np(k, p, t, 2, q),
            None,
        )
        tup1 = rng.integers(1, q, size=(n, 4)).astype(np.int64)
        kv = np.ascontiguousarray(K.values)
        yield f"sop_batch q={q} tuples={n}", (
            lambda k=kv, t=tup1, q=q: Kn.sop_batch_nb(k, t, 2, q),
            lambda k=kv, t=tup1, q=q: Kn.sop_batch_np(k, t, 2, q),
            None,
        )


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba disabled in this process; both columns time the same code", file=sys.stderr)
    rows = []
    print(f"{'kernel':36s} {'numba':>10s} {'numpy':>10s} {'fft':>10s} {'speedup':>8s} {'max dev':>9s}")
    for name, (nb, npy, fft) in cases():
        t_nb, r_nb = best_of(nb, args.repeat)
        t_np, r_np = best_of(npy, args.repeat)
        t_fft = best_of(fft, args.repeat)[0] if fft else float("nan")
        dev = float(np.max(np.abs(np.asarray(r_nb) - np.asarray(r_np))))
        rows.append(dict(kernel=name, numba=t_nb, numpy=t_np, fft=t_fft, max_dev=dev))
        print(f"{name:36s} {t_nb:10.4f} {t_np:10.4f} {t_fft:10.4f} {t_np / t_nb:8.1f} {dev:9.1e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
