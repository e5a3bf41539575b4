"""Compare the numba and numpy kernels on the same inputs.

Run with ``python3 benchmarks/bench_kernels.py [--size N] [--repeat R]``.
The first numba call (compilation or cache load) is timed separately.
"""
import argparse
import time
from fractions import Fraction

import numpy as np

from puzzle_forge.numerics import kernels

AIRPLANE_C = -1.7548776662466927


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def escape_inputs(size):
    re = np.linspace(-2.0, 2.0, size)
    im = np.linspace(-1.5, 1.5, size)
    return re[None, :] + 1j * im[:, None]


def newton_inputs(count, n=8):
    # targets on the circle of potential 2^-n seen through the Bottcher map
    angles = np.array([float(Fraction(k, count)) for k in range(count)])
    w = np.exp(2.0 ** -n + 2j * np.pi * angles) ** (2**n)
    z = np.exp(2.0 ** -n + 2j * np.pi * angles) * 1.01
    return z, w, n


def run(size, rays, repeat):
    if kernels.numba is None:
        raise SystemExit("numba is not importable; nothing to compare")
    rows = []

    z0 = escape_inputs(size)
    c = np.full(z0.shape, AIRPLANE_C, dtype=np.complex128)
    args = (z0, c, 500, 1e10)
    start = time.perf_counter()
    kernels._escape_numba(*args)
    first = time.perf_counter() - start
    t_numba, a = best_of(lambda: kernels._escape_numba(*args), repeat)
    t_numpy, b = best_of(lambda: kernels._escape_numpy(*args), repeat)
    scale = np.maximum(np.abs(b), 1e-300)
    rows.append(("escape_potential", f"{size}x{size}", first, t_numba, t_numpy,
                 float(np.max(np.abs(a - b) / scale))))

    z, w, n = newton_inputs(rays)
    args = (z, w, complex(AIRPLANE_C), n, False, 60, 1e-14)
    start = time.perf_counter()
    kernels._newton_numba(*args)
    first = time.perf_counter() - start
    t_numba, (a, ok_a) = best_of(lambda: kernels._newton_numba(*args), repeat)
    t_numpy, (b, ok_b) = best_of(lambda: kernels._newton_numpy(*args), repeat)
    both = ok_a & ok_b
    diff = float(np.max(np.abs(a[both] - b[both]))) if both.any() else float("nan")
    rows.append(("newton_bundle", f"{rays} rays", first, t_numba, t_numpy, diff))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=400, help="escape grid side")
    ap.add_argument("--rays", type=int, default=4096, help="Newton lanes")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rows = run(args.size, args.rays, args.repeat)
    print(f"{'kernel':18s} {'input':>10s} {'first':>9s} {'numba':>9s} {'numpy':>9s} {'speedup':>8s} {'max diff':>9s}")
    for name, shape, first, t_nb, t_np, diff in rows:
        print(f"{name:18s} {shape:>10s} {first:9.4f} {t_nb:9.4f} {t_np:9.4f} {t_np / t_nb:8.1f} {diff:9.2e}")
    return rows


if __name__ == "__main__":
    main()
