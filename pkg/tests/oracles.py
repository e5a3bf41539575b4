"""Independent reference computations used to cross-check the package.

Nothing here imports puzzle_forge; angles are handled as integer
numerator/denominator pairs and as bit strings.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np


def doubling_orbit(num: int, den: int) -> tuple[int, int, list[Fraction]]:
    """(preperiod, period, orbit) of num/den under x -> 2x mod 1, on integers."""
    g = gcd(num, den)
    num, den = (num // g) % (den // g), den // g
    first = {}
    seq = []
    x = num
    while x not in first:
        first[x] = len(seq)
        seq.append(x)
        x = (2 * x) % den
    pre = first[x]
    return pre, len(seq) - pre, [Fraction(v, den) for v in seq]


def binary_digits(x: Fraction) -> tuple[str, str]:
    """(prefix, repetend) of the binary expansion of x by long division."""
    num, den = x.numerator % x.denominator, x.denominator
    seen = {}
    bits = []
    while num not in seen:
        seen[num] = len(bits)
        num *= 2
        bits.append("1" if num >= den else "0")
        num %= den
    start = seen[num]
    return "".join(bits[:start]), "".join(bits[start:])


def value_of(prefix: str, repetend: str) -> Fraction:
    """Sum of the binary series .prefix(repetend)..."""
    total = Fraction(0)
    for i, b in enumerate(prefix):
        total += Fraction(int(b), 2 ** (i + 1))
    k = len(repetend)
    block = sum(Fraction(int(b), 2 ** (i + 1)) for i, b in enumerate(repetend))
    total += block / 2 ** len(prefix) * Fraction(2**k, 2**k - 1)
    return total % 1


def tune_by_words(theta: Fraction, w0: str, w1: str) -> Fraction:
    prefix, rep = binary_digits(theta)
    sub = {"0": w0, "1": w1}
    return value_of("".join(sub[b] for b in prefix), "".join(sub[b] for b in rep))


def rotation_cycles(p: int) -> list[tuple[tuple[Fraction, ...], int]]:
    """All period-p doubling cycles that rotate rigidly, with their q."""
    den = 2**p - 1
    out = []
    done = set()
    for k in range(1, den):
        if k in done:
            continue
        orbit = []
        x = k
        while x not in orbit:
            orbit.append(x)
            x = (2 * x) % den
        done.update(orbit)
        if len(orbit) != p or x != k:
            continue
        ordered = sorted(orbit)
        shifts = {(ordered.index((2 * v) % den) - i) % p for i, v in enumerate(ordered)}
        if len(shifts) == 1:
            out.append((tuple(Fraction(v, den) for v in ordered), shifts.pop()))
    return out


def portrait_of(theta: Fraction, pmax: int = 12):
    """(p, q, cycle, arc) of the rotation cycle whose shortest gap holds theta."""
    hits = []
    for p in range(2, pmax + 1):
        for cycle, q in rotation_cycles(p):
            for i, a in enumerate(cycle):
                b = cycle[(i + 1) % p] if i + 1 < p else cycle[0] + 1
                if b - a == Fraction(1, 2**p - 1) and a < theta < b:
                    hits.append((p, q, cycle, (a, b)))
    return hits


def airplane_center() -> complex:
    """Real root of c^3 + 2c^2 + c + 1 (f^3(0) = 0 with f^k(0) != 0 for k < 3)."""
    roots = np.roots([1, 2, 1, 1])
    return complex(roots[np.argmin(np.abs(roots.imag))].real, 0.0)


def superattracting_period(c: complex, kmax: int = 64, tol: float = 1e-9) -> int | None:
    z = 0j
    for k in range(1, kmax + 1):
        z = z * z + c
        if abs(z) < tol:
            return k
    return None


def julia_fixed_points(c: complex) -> tuple[complex, complex]:
    """Both roots of z^2 - z + c, the one with larger real part first."""
    r = np.roots([1, -1, c])
    r = sorted(r, key=lambda z: -z.real)
    return complex(r[0]), complex(r[1])


def newton_center(period: int, c0: complex, iters: int = 100) -> tuple[complex, float]:
    """Newton on c -> f_c^period(0) from ``c0``; returns the root and |f_c^period(0)|."""
    c = complex(c0)
    for _ in range(iters):
        z, dz = 0j, 0j
        for _ in range(period):
            z, dz = z * z + c, 2 * z * dz + 1
        if dz == 0:
            break
        step = z / dz
        c -= step
        if abs(step) < 1e-16:
            break
    z = 0j
    for _ in range(period):
        z = z * z + c
    return c, abs(z)
