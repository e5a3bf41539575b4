"""Planar puzzle pieces from traced rays and equipotentials.

A piece of depth ``d`` with angle arcs ``(a_1, b_1), ..., (a_k, b_k)`` is
bounded by the equipotential of level ``h / 2^d`` over each arc, by the ray
``b_i`` down to its landing point and by the ray ``a_(i+1)`` back up (the two
land together).  All cut rays of the requested depth are traced in one
bundle; the equipotentials come from a second bundle of rays on a fine angle
grid that contains every cut angle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..angles import angle, halves
from ..puzzle import Piece, Puzzle
from .rays import (
    POT_MIN,
    SHARPNESS,
    _accept,
    _polish_dynamical,
    trace_bundle,
)


def cut_angles(puzzle: Puzzle, depth: int) -> list[Fraction]:
    """All angles ``x`` with ``2^depth x`` on the α-cycle (``p 2^depth`` of them)."""
    layer = set(puzzle.portrait.cycle)
    out = set(layer)
    for _ in range(depth):
        layer = {h for x in layer for h in halves(x)}
        out |= layer
    return sorted(out)


@dataclass
class PuzzleGeometry:
    """Traced rays, landing points and equipotential samples for one map."""

    puzzle: Puzzle
    c: complex
    depth: int
    level: float
    h0: float
    sharpness: int
    ray_potentials: np.ndarray
    rays: dict[Fraction, np.ndarray]
    landing: dict[Fraction, complex]
    raw_landing: dict[Fraction, complex]
    polished: dict[Fraction, bool]
    grid: int
    equipotentials: dict[int, np.ndarray] = field(default_factory=dict)

    def level_potential(self, d: int) -> float:
        return self.level / 2.0**d

    def _index(self, h: float) -> int:
        return int(round(self.sharpness * math.log2(self.h0 / h)))

    def ray_segment(self, a: Fraction, d: int) -> np.ndarray:
        """Samples of ray ``a`` from the depth-``d`` equipotential down (landing excluded)."""
        j = self._index(self.level_potential(d))
        return self.rays[a][j:]

    def equipotential_arc(self, lo: Fraction, hi: Fraction, d: int) -> np.ndarray:
        """Equipotential samples of depth ``d`` over the angle arc ``(lo, hi)``."""
        ring = self.equipotentials[d]
        M = self.grid
        i0, i1 = int(lo * M), int(hi * M)
        if lo * M != i0 or hi * M != i1:
            raise ValueError("arc ends are not on the equipotential grid")
        return ring[np.arange(i0, i1 + 1) % M]

    def polygon(self, piece: Piece) -> np.ndarray:
        """Closed boundary (first vertex not repeated) of a piece at its own depth."""
        d = piece.depth
        arcs = piece.arcs
        parts = []
        for i, (lo, hi) in enumerate(arcs):
            parts.append(self.equipotential_arc(lo, hi, d))
            b = angle(hi)
            a_next = angle(arcs[(i + 1) % len(arcs)][0])
            # the pair lands at one point; a single shared vertex keeps the ring simple
            land = 0.5 * (self.landing[b] + self.landing[a_next])
            parts.append(self.ray_segment(b, d))
            parts.append(np.array([land]))
            parts.append(self.ray_segment(a_next, d)[::-1])
        ring = np.concatenate(parts)
        keep = np.ones(ring.size, dtype=bool)
        keep[1:] = np.abs(np.diff(ring)) > 0
        ring = ring[keep]
        if ring.size > 1 and ring[0] == ring[-1]:
            ring = ring[:-1]
        return ring


def build_geometry(
    theta,
    c: complex,
    depth: int,
    level: float = 1.0,
    pot_min: float = POT_MIN,
    sharpness: int = SHARPNESS,
    min_grid: int = 2048,
    puzzle: Puzzle | None = None,
) -> PuzzleGeometry:
    """Trace every cut ray up to ``depth`` and the equipotentials of depths ``0..depth``."""
    pz = puzzle or Puzzle(angle(theta))
    c = complex(c)
    need = math.log(4.0 + 2.0 * abs(c)) + 1.0
    h0 = level * 2.0 ** max(0, math.ceil(math.log2(need / level)))
    cuts = cut_angles(pz, depth)
    hs, pts, ok = trace_bundle(cuts, c, pot_min, sharpness, h0=h0)
    rays, landing, raw, polished = {}, {}, {}, {}
    for i, a in enumerate(cuts):
        path = pts[:, i]
        rays[a] = path
        end = complex(path[-1])
        cand = _polish_dynamical(c, a, end) if ok[i] else None
        good = _accept(path, cand, sharpness)
        raw[a] = end
        landing[a] = cand if good else end
        polished[a] = good
    base = (2**pz.p - 1) * 2**depth
    grid = base * max(1, math.ceil(min_grid / base))
    grid_angles = [Fraction(k, grid) for k in range(grid)]
    h_last = level / 2.0**depth
    ehs, epts, _ = trace_bundle(grid_angles, c, h_last, sharpness, h0=h0)
    geo = PuzzleGeometry(pz, c, depth, level, h0, sharpness, hs, rays, landing, raw, polished, grid)
    for d in range(depth + 1):
        j = int(round(sharpness * math.log2(h0 / geo.level_potential(d))))
        geo.equipotentials[d] = epts[j].copy()
    return geo
