"""Time the numba kernels against their pure-numpy counterparts.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from spectral_gate import _kernels as K


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    N = 200_000
    a, c = rng.random(N) * 10, rng.random(N) * 10
    b = rng.normal(size=N) + 1j * rng.normal(size=N)
    P = rng.normal(size=(4096, 3, 3))
    P = P @ P.transpose(0, 2, 1)
    vec = rng.normal(size=3)
    u2 = rng.normal(size=(512, 512))
    f2 = (rng.random((512, 512)) > 0.1).astype(float)
    u3 = rng.normal(size=(64, 64, 64))
    f3 = (rng.random((64, 64, 64)) > 0.1).astype(float)
    return {
        "herm2_eigvals N=2e5": ("herm2_eigvals", (a, b, c)),
        "section_step 4096x3x3": ("section_step", (P, vec)),
        "masked_laplacian 512^2": ("masked_laplacian", (u2, f2)),
        "masked_laplacian 64^3": ("masked_laplacian", (u3, f3)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}  max|diff|")
    for label, (name, argv) in cases(rng).items():
        f_np, f_nb = getattr(K, name + "_numpy"), getattr(K, name + "_numba")
        r_nb = f_nb(*argv)  # compile outside the timed region
        r_np = f_np(*argv)
        diff = max(float(np.max(np.abs(np.asarray(x) - np.asarray(y))))
                   for x, y in zip(np.atleast_1d(r_np) if not isinstance(r_np, tuple) else r_np,
                                   np.atleast_1d(r_nb) if not isinstance(r_nb, tuple) else r_nb))
        t_np = best_of(lambda: f_np(*argv), args.repeat)
        t_nb = best_of(lambda: f_nb(*argv), args.repeat)
        print(f"{label:<26}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>10.2f}  {diff:.2e}")


if __name__ == "__main__":
    main()
