"""Green function and Böttcher argument of ``z -> z^2 + c``.

Scalar routines in plain Python complex arithmetic; the escape-time grids in
:mod:`.kernels` are the vectorized counterparts.
"""
from __future__ import annotations

import cmath
import math

TWO_PI = 2.0 * math.pi
BAILOUT = 1e10


def escape_radius(c: complex) -> float:
    """Radius beyond which every orbit escapes and the Böttcher product converges."""
    return 2.0 + abs(c)


def green(c: complex, z: complex, max_iter: int = 20000, bailout: float = BAILOUT) -> float:
    """``G_c(z) = lim 2^-n log|f^n z|``; ``0`` when the orbit does not escape."""
    scale = 1.0
    for _ in range(max_iter):
        r = abs(z)
        if r > bailout:
            return math.log(r) * scale
        z = z * z + c
        scale *= 0.5
    return 0.0


def green_parameter(c: complex, max_iter: int = 20000, bailout: float = BAILOUT) -> float:
    """Parameter-plane Green function ``G_M(c) = G_c(c)``."""
    return green(c, c, max_iter, bailout)


def _product_arg(c: complex, z: complex) -> float:
    """``arg B_c(z)`` in turns from the infinite product, valid for large ``|z|``."""
    total = cmath.phase(z)
    scale = 0.5
    for _ in range(200):
        q = c / (z * z)
        if abs(q) < 1e-18:
            break
        total += scale * cmath.phase(1.0 + q)
        z = z * z + c
        scale *= 0.5
    return (total / TWO_PI) % 1.0


def bottcher_arg(c: complex, z: complex, max_iter: int = 20000) -> float:
    """External argument of ``z`` in turns.

    Exact (up to rounding) for ``|z| > 2 + |c|``.  Closer to ``K(f)`` the orbit
    is followed out to that radius and the argument is halved back step by
    step, each time choosing the preimage branch nearest the product estimate
    at that point; this is reliable only well outside ``K(f)``.
    """
    R = escape_radius(c)
    orbit = [z]
    while abs(orbit[-1]) <= R:
        if len(orbit) > max_iter:
            raise ValueError("point does not escape; no external argument")
        w = orbit[-1]
        orbit.append(w * w + c)
    t = _product_arg(c, orbit[-1])
    for w in reversed(orbit[:-1]):
        guess = _product_arg(c, w)
        cands = (t / 2.0, t / 2.0 + 0.5)
        t = min(cands, key=lambda s: _circle_dist(s, guess))
    return t


def _circle_dist(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)
