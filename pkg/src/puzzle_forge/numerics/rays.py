"""External rays by potential continuation with Newton correction.

A point of the ray of angle ``θ`` at potential ``h`` solves
``f^n(z) = exp(2^n h + 2πi 2^n θ)`` once ``2^n h`` is large enough for the
Böttcher map to be the identity up to rounding.  The potential is lowered on
the geometric schedule ``h_j = H0 2^(-j/S)`` and each point seeds the next
solve.  In the parameter plane the unknown is ``c`` and the equation is
``f_c^n(c) = exp(...)``.

For rational angles the landing point is also polished: a periodic or
preperiodic point (dynamical rays), a parabolic root or a Misiurewicz point
(parameter rays) is solved for by Newton from the last traced sample and
accepted only when the trace is visibly converging to it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..angles import angle, orbit_info
from ..errors import DegenerateCase, NumericalFailure
from .green import escape_radius, green
from .kernels import newton_bundle

LOG_R = 12.0  # log of the radius where the Böttcher map is taken as the identity
SHARPNESS = 8  # samples per halving of the potential
POT_MIN = 1e-8
STALL = 1e-10
MAX_REFINE = 6
CONNECTED_HORIZON = 10_000  # critical-orbit iterates checked before tracing dynamical rays


class NewtonDiverged(NumericalFailure):
    pass


@dataclass
class RayPath:
    """A traced ray: samples, their potentials, and the landing estimate.

    ``raw_landing`` is the last sample; ``landing`` is the polished landing
    point when the polish was accepted, otherwise the raw one.
    """

    angle: Fraction
    kind: str
    c: complex | None
    points: np.ndarray
    potentials: np.ndarray
    raw_landing: complex
    landing: complex
    polished: bool = False
    meta: dict = field(default_factory=dict)


def _start_potential(size: float) -> float:
    """A power of two above ``log(size) + 1``, so schedules share grid values."""
    return 2.0 ** math.ceil(math.log2(math.log(max(size, 2.0)) + 1.0))


def _schedule(h0: float, h_min: float, sharpness: int) -> np.ndarray:
    steps = int(math.floor(sharpness * math.log2(h0 / h_min) + 1e-9))
    hs = h0 * 2.0 ** (-np.arange(steps + 1) / sharpness)
    if hs[-1] > h_min * (1 + 1e-12):
        hs = np.append(hs, h_min)
    return hs


def _iterate_count(h: float) -> int:
    return max(0, math.ceil(math.log2(LOG_R / h)))


def _targets(angles: Sequence[Fraction], n: int, h: float) -> np.ndarray:
    """``exp(2^n h + 2πi 2^n θ)`` with the angle doubled exactly."""
    args = np.array(
        [float((a.numerator * pow(2, n, a.denominator)) % a.denominator) / a.denominator for a in angles]
    )
    return np.exp(2.0**n * h) * np.exp(2j * np.pi * args)


def _solve_step(z, angles, c, h_prev, h, param):
    """Newton solve at potential ``h`` from ``z`` (solutions at ``h_prev``).

    Lanes that fail are retried with the potential step halved repeatedly.
    """
    n = _iterate_count(h)
    sol, ok = newton_bundle(z, _targets(angles, n, h), c, n, param)
    if ok.all():
        return sol, ok
    bad = np.flatnonzero(~ok)
    sub_angles = [angles[i] for i in bad]
    zb = z[bad].copy()
    okb = np.zeros(bad.size, dtype=bool)
    for level in range(1, MAX_REFINE + 1):
        pieces = 2**level
        zz = z[bad].copy()
        good = np.ones(bad.size, dtype=bool)
        for k in range(1, pieces + 1):
            hk = h_prev * (h / h_prev) ** (k / pieces)
            nk = _iterate_count(hk)
            zz, okk = newton_bundle(zz, _targets(sub_angles, nk, hk), c, nk, param)
            good &= okk
        take = good & ~okb
        zb[take] = zz[take]
        okb |= good
        if okb.all():
            break
    sol[bad] = zb
    ok[bad] = okb
    return sol, ok


def trace_bundle(
    angles: Sequence[Fraction],
    c: complex | None = None,
    pot_min: float = POT_MIN,
    sharpness: int = SHARPNESS,
    h0: float | None = None,
):
    """Trace several rays at once on a shared potential schedule.

    ``c`` given: dynamical rays of ``z^2 + c``; ``c`` omitted: parameter rays.
    Returns ``(potentials, points, ok)`` with ``points[j, i]`` the sample of
    ray ``i`` at potential ``potentials[j]``; a lane whose Newton solve fails
    is frozen (``ok[i]`` false) at its last good sample.
    """
    angles = [angle(a) for a in angles]
    param = c is None
    cc = 0j if param else complex(c)
    # rays are smooth only above the critical potential, which is 0 when K is connected
    if not param and green(cc, 0j, max_iter=CONNECTED_HORIZON) >= pot_min:
        raise DegenerateCase(
            f"the Julia set of z^2 + {cc} is disconnected above potential {pot_min:g}"
        )
    if h0 is None:
        h0 = _start_potential(4.0 + 2.0 * abs(cc)) if not param else 4.0
    hs = _schedule(h0, pot_min, sharpness)
    args = np.array([float(a) for a in angles])
    z = np.exp(hs[0] + 2j * np.pi * args)
    z, ok = newton_bundle(z, _targets(angles, _iterate_count(hs[0]), hs[0]), cc, _iterate_count(hs[0]), param)
    pts = np.empty((hs.size, len(angles)), dtype=np.complex128)
    pts[0] = z
    alive = ok.copy()
    for j in range(1, hs.size):
        idx = np.flatnonzero(alive)
        if idx.size:
            sol, okj = _solve_step(z[idx], [angles[i] for i in idx], cc, hs[j - 1], hs[j], param)
            good = idx[okj]
            z[good] = sol[okj]
            alive[idx[~okj]] = False
        pts[j] = z
    return hs, pts, alive


def _polish_dynamical(c: complex, a: Fraction, z: complex, iters: int = 80) -> complex | None:
    info = orbit_info(a)
    l, k = info.preperiod, info.period
    x = z
    for _ in range(iters):
        y, dy = x, 1.0 + 0j
        yl, dyl = x, 1.0 + 0j
        for i in range(l + k):
            if i == l:
                yl, dyl = y, dy
            dy = 2.0 * y * dy
            y = y * y + c
        if l == 0:
            yl, dyl = x, 1.0 + 0j
        f, df = y - yl, dy - dyl
        if df == 0 or not np.isfinite(abs(f)):
            return None
        step = f / df
        x -= step
        if abs(step) < 1e-15 * max(1.0, abs(x)):
            return x
    return x if abs(step) < 1e-10 else None


def _polish_root(a: Fraction, c0: complex, z0: complex, iters: int = 400) -> complex | None:
    """Parabolic root: ``f_c^k(z) = z`` and ``(f_c^k)'(z) = 1`` by Newton in ``(z, c)``."""
    k = orbit_info(a).period
    z, c = z0, c0
    for _ in range(iters):
        y, a_, b_ = z, 1.0 + 0j, 0j
        az, ac = 0j, 0j
        for _i in range(k):
            az, ac = 2.0 * a_ * a_ + 2.0 * y * az, 2.0 * b_ * a_ + 2.0 * y * ac
            a_, b_ = 2.0 * y * a_, 2.0 * y * b_ + 1.0
            y = y * y + c
        F1, F2 = y - z, a_ - 1.0
        J = np.array([[a_ - 1.0, b_], [az, ac]], dtype=np.complex128)
        try:
            dz, dc = np.linalg.solve(J, -np.array([F1, F2]))
        except np.linalg.LinAlgError:
            break
        z, c = z + dz, c + dc
        if abs(dc) < 1e-15 and abs(dz) < 1e-15:
            break
    return c if abs(F1) < 1e-9 and abs(F2) < 1e-6 else None


def _polish_misiurewicz(a: Fraction, c0: complex, iters: int = 100) -> complex | None:
    info = orbit_info(a)
    l, k = info.preperiod, info.period
    c = c0
    for _ in range(iters):
        y, dy = c, 1.0 + 0j
        yl, dyl = c, 1.0 + 0j
        for i in range(l + k):
            if i == l:
                yl, dyl = y, dy
            dy = 2.0 * y * dy + 1.0
            y = y * y + c
        if l == 0:
            yl, dyl = c, 1.0 + 0j
        f, df = y - yl, dy - dyl
        if df == 0:
            return None
        step = f / df
        c -= step
        if abs(step) < 1e-15 * max(1.0, abs(c)):
            return c
    return None


def _accept(points: np.ndarray, cand: complex | None, sharpness: int, radius: float = 0.1) -> bool:
    """The trace must approach ``cand``: distances shrink over the last halvings.

    Parabolic landings are approached only logarithmically in the potential,
    so parameter rays get a generous ``radius``; the monotone approach is
    what rules out a neighbouring solution.
    """
    if cand is None or points.size < 3 * sharpness + 1:
        return False
    d = [abs(points[-1 - i * sharpness] - cand) for i in range(4)]
    return d[0] < d[1] < d[2] < d[3] and d[0] < radius


def _finish(a, kind, c, hs, pts, ok, sharpness) -> RayPath:
    last = pts.shape[0]
    for j in range(1, pts.shape[0]):
        if abs(pts[j] - pts[j - 1]) < STALL:
            last = j + 1
            break
    points = pts[:last].copy()
    raw = complex(points[-1])
    cand = None
    if kind == "dynamical":
        cand = _polish_dynamical(c, a, raw)
    elif orbit_info(a).preperiod == 0:
        # the dynamical ray of the same angle for the endpoint parameter seeds the root polish
        floor = max(1e-6, 2.0 * green(raw, 0j, max_iter=CONNECTED_HORIZON))
        try:
            z_land = trace_dynamical_ray(raw, a, pot_min=floor, polish=True).landing
        except (NumericalFailure, DegenerateCase):
            z_land = None
        cand = None if z_land is None else _polish_root(a, raw, z_land)
    else:
        cand = _polish_misiurewicz(a, raw)
    polished = _accept(points, cand, sharpness, 0.1 if kind == "dynamical" else 0.5)
    return RayPath(
        a, kind, c, points, hs[:last].copy(), raw, cand if polished else raw, polished,
        {"converged": bool(ok)},
    )


def trace_dynamical_ray(
    c: complex, theta, pot_min: float = POT_MIN, sharpness: int = SHARPNESS, polish: bool = True
) -> RayPath:
    """The dynamical ray of angle ``theta`` for ``z^2 + c``."""
    a = angle(theta)
    hs, pts, ok = trace_bundle([a], complex(c), pot_min, sharpness)
    if not ok[0]:
        raise NewtonDiverged(f"ray {a} diverged", last=complex(pts[-1, 0]))
    if not polish:
        raw = complex(pts[-1, 0])
        return RayPath(a, "dynamical", complex(c), pts[:, 0].copy(), hs, raw, raw)
    return _finish(a, "dynamical", complex(c), hs, pts[:, 0], ok[0], sharpness)


def trace_parameter_ray(theta, pot_min: float = POT_MIN, sharpness: int = SHARPNESS) -> RayPath:
    """The parameter ray of angle ``theta``."""
    a = angle(theta)
    hs, pts, ok = trace_bundle([a], None, pot_min, sharpness)
    if not ok[0]:
        raise NewtonDiverged(f"parameter ray {a} diverged", last=complex(pts[-1, 0]))
    return _finish(a, "parameter", None, hs, pts[:, 0], ok[0], sharpness)


# -- centers ----------------------------------------------------------------


def find_center(period: int, c0: complex, iters: int = 200, tol: float = 1e-15) -> tuple[complex, float]:
    """Newton on ``f_c^period(0) = 0``; returns the center and the residual."""
    c = complex(c0)
    for _ in range(iters):
        z, dz = 0j, 0j
        for _i in range(period):
            dz = 2.0 * z * dz + 1.0
            z = z * z + c
        if dz == 0:
            break
        step = z / dz
        c -= step
        if abs(step) < tol * max(1.0, abs(c)):
            break
    z = 0j
    for _i in range(period):
        z = z * z + c
    return c, abs(z)


def critical_period(c: complex, max_period: int = 64, tol: float = 1e-9) -> int | None:
    """Least ``k`` with ``|f_c^k(0)| < tol``."""
    z = 0j
    for k in range(1, max_period + 1):
        z = z * z + c
        if abs(z) < tol:
            return k
    return None


def center_for_angle(theta, period: int | None = None) -> tuple[complex, float]:
    """Center of the component whose root the periodic parameter ray ``theta`` lands at."""
    a = angle(theta)
    info = orbit_info(a)
    if info.preperiod:
        raise ValueError("only periodic angles land at roots of components")
    ray = trace_parameter_ray(a)
    return find_center(period or info.period, ray.landing)


def escape_bound(c: complex) -> float:
    return escape_radius(c)
