"""Time the numba and pure-numpy kernel paths side by side.

    python benchmarks/bench_kernels.py [--repeat 5]

Both paths are imported from the same module, so the environment flag is
not needed here; it only selects the default path used by the library.
"""
import argparse
import time

import numpy as np

from kdvlab import _kernels as k


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    if k.conv_trapezoid_numba is None:
        raise SystemExit("numba is not importable; nothing to compare")

    print(f"{'kernel':<28}{'size':>10}{'numba [ms]':>14}{'numpy [ms]':>14}{'speedup':>10}")
    for n in (256, 1024, 2048):
        f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        tn = best_of(lambda: k.conv_trapezoid_numba(f, g, 0.1), args.repeat)
        tp = best_of(lambda: k.conv_trapezoid_numpy(f, g, 0.1), args.repeat)
        print(f"{'conv_trapezoid':<28}{n:>10}{1e3 * tn:>14.3f}{1e3 * tp:>14.3f}{tp / tn:>10.2f}")

    for n in (32, 64, 128):
        F = rng.standard_normal((96, n)) + 1j * rng.standard_normal((96, n))
        tn = best_of(lambda: k.conv_rows_numba(F, F, 0.1), args.repeat)
        tp = best_of(lambda: np.stack([k.conv_trapezoid_numpy(x, y, 0.1) for x, y in zip(F, F)]), args.repeat)
        print(f"{'conv_trapezoid_rows (96)':<28}{n:>10}{1e3 * tn:>14.3f}{1e3 * tp:>14.3f}{tp / tn:>10.2f}")

    for nk, nj in ((257, 258), (1024, 258)):
        t = 0.1
        phi_out = -rng.random(nk) * 10
        phi_pair = -rng.random((nk, nj)) * 1e4
        res = rng.standard_normal((nk, nj)) * 1e3
        phase = np.fmod(t * res, 2 * np.pi)
        a = rng.standard_normal(nj) + 0j
        b = rng.standard_normal((nk, nj)) + 0j
        mult = np.ones((nk, nj), dtype=complex)
        args_ = (t, phi_out, phi_pair, res, phase, a, b, mult)
        tn = best_of(lambda: k.pair_sum_numba(*args_), args.repeat)
        tp = best_of(lambda: k._pair_sum_numpy(*args_), args.repeat)
        print(f"{'pair_sum':<28}{f'{nk}x{nj}':>10}{1e3 * tn:>14.3f}{1e3 * tp:>14.3f}{tp / tn:>10.2f}")


if __name__ == "__main__":
    main()
