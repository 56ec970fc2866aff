"""Compare the numba and numpy backends of the typicality kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times three workloads with each backend: a full homologous decode, the
per-message Marton covering scan, and a raw pair scan over random tables.
Numba compile time is excluded by a warm-up call.
"""
import argparse
import time

import numpy as np

from homlab import _accel
from homlab.channels import additive_mac, sample_mac
from homlab.errors import DecodingFailure
from homlab.homocode import HomologousParams, encode, generate_homologous_codebook, jt_decode
from homlab.kernels import scan_pairs, typical_pair_mask
from homlab.prob import JointPmf, Pmf


def best_of(fn, repeat):
    fn()  # warm-up (JIT compile for numba)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def homologous_decode():
    spec = additive_mac(2, [0.95, 0.05], px1=[0.8, 0.2], px2=[0.8, 0.2])
    px = Pmf([0.8, 0.2])
    cb = generate_homologous_codebook(HomologousParams(2, 16, 5, 5, eps=0.01, seed=1), px, px)
    rng = np.random.default_rng(0)
    x1, x2 = encode(cb, 1, [1, 0, 1, 1, 0]), encode(cb, 2, [0, 1, 1, 0, 0])
    y = sample_mac(spec, x1, x2, rng)

    def run(backend):
        try:
            jt_decode(cb, y, 1.5, (1, 1), spec, backend=backend)
        except DecodingFailure:
            pass
    return "homologous decode (n=16, 2^10 x 2^10 rows)", run


def marton_covering():
    pu = JointPmf(("U1", "U2"), [[0.5, 0.25], [0.0, 0.25]])
    rng = np.random.default_rng(1)
    A = rng.choice(2, p=[0.75, 0.25], size=(256, 16))
    B = rng.choice(2, p=[0.5, 0.5], size=(256, 16))
    return ("covering mask (n=16, 256 x 256 rows)",
            lambda backend: typical_pair_mask(A, B, pu.table, 0.05, backend=backend))


def raw_scan():
    rng = np.random.default_rng(2)
    n = 24
    table = rng.dirichlet(np.ones(2 * 2 * 3)).reshape(2, 2, 3)
    A = rng.integers(0, 2, (2048, n))
    B = rng.integers(0, 2, (2048, n))
    y = rng.integers(0, 3, n)
    d = np.zeros((2048, 1), dtype=np.int64)
    return ("pair scan, no early exit (n=24, 2048 x 2048 rows)",
            lambda backend: scan_pairs(A, B, y, table.shape, table, 0.05, d, d, 1, 1, 2,
                                       backend=backend))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    print(f"{'workload':52s} " + " ".join(f"{b:>10s}" for b in backends) + "   speedup")
    for make in (homologous_decode, marton_covering, raw_scan):
        label, fn = make()
        t = {b: best_of(lambda b=b: fn(b), args.repeat) for b in backends}
        cols = " ".join(f"{t[b] * 1e3:8.1f}ms" for b in backends)
        speed = f"{t['numpy'] / t['numba']:8.1f}x" if "numba" in t else "       -"
        print(f"{label:52s} {cols} {speed}")


if __name__ == "__main__":
    main()
