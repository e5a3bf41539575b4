"""The two fixed points of ``z^2 + c`` and which one is α."""
from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction

from ..errors import DegenerateCase
from .rays import trace_dynamical_ray

REPELLING_TOL = 1e-9


@dataclass(frozen=True)
class FixedPointInfo:
    alpha: complex
    beta: complex
    multipliers: tuple[complex, complex]  # (at alpha, at beta)
    dividing: str = "alpha"


def fixed_points(c: complex, tol: float = REPELLING_TOL) -> FixedPointInfo:
    """Fixed points with β picked as the landing point of the ray of angle 0.

    Raises :class:`DegenerateCase` unless both fixed points are repelling.
    """
    c = complex(c)
    s = cmath.sqrt(1.0 - 4.0 * c)
    roots = ((1.0 + s) / 2.0, (1.0 - s) / 2.0)
    for z in roots:
        if abs(2.0 * z) <= 1.0 + tol:
            raise DegenerateCase(
                f"fixed point {z:.6g} has multiplier of modulus {abs(2 * z):.6g} <= 1",
                point=z,
            )
    land = trace_dynamical_ray(c, Fraction(0), pot_min=1e-6).landing
    beta = min(roots, key=lambda z: abs(z - land))
    alpha = roots[1] if beta == roots[0] else roots[0]
    return FixedPointInfo(alpha, beta, (2.0 * alpha, 2.0 * beta))
