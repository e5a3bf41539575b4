"""Geometric cross-check of the symbolic puzzle.

Three families of checks, each reported item by item:

* every piece of the requested depth is a simple polygon and distinct pieces
  overlap in no more than a sliver of area;
* the critical orbit ``f^k(0)`` lies in the polygon of the piece predicted by
  the orbit of the parameter angle;
* consecutive pieces of the principal nest are nested with boundaries a
  positive distance apart.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from shapely import STRtree
from shapely.geometry import LinearRing, Point, Polygon
from shapely.ops import polylabel

from ..angles import angle, double_n, format_angle, orbit_info
from ..nest import build_nest
from ..puzzle import Puzzle
from .fixed_points import fixed_points
from .geometry import PuzzleGeometry, build_geometry

OVERLAP_TOL = 1e-6  # allowed overlap area relative to the smaller piece
INSIDE_TOL = 1e-6  # allowed distance outside, relative to the inradius
GAP_RATIO = 0.005  # nest boundaries must be this fraction of the diameter apart
LANDING_TOL = 1e-6


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""
    where: complex | None = None


@dataclass
class ValidationReport:
    theta: Fraction
    c: complex
    depth: int
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(ch.ok for ch in self.checks)

    def failures(self) -> list[Check]:
        return [ch for ch in self.checks if not ch.ok]

    def to_json(self) -> dict:
        return {
            "theta": format_angle(self.theta),
            "c": [self.c.real, self.c.imag],
            "depth": self.depth,
            "passed": self.passed,
            "checks": [
                {
                    "name": ch.name,
                    "ok": ch.ok,
                    "detail": ch.detail,
                    "where": None if ch.where is None else [ch.where.real, ch.where.imag],
                }
                for ch in self.checks
            ],
        }


def _shape(ring: np.ndarray) -> Polygon:
    return Polygon(np.column_stack([ring.real, ring.imag]))


def _diameter(poly: Polygon) -> float:
    hull = np.asarray(poly.convex_hull.exterior.coords)
    diff = hull[:, None, :] - hull[None, :, :]
    return float(np.sqrt((diff**2).sum(-1)).max())


def critical_orbit(c: complex, n: int) -> list[complex]:
    z, out = 0j, [0j]
    for _ in range(n):
        z = z * z + c
        out.append(z)
    return out


def validate(
    theta,
    c: complex,
    depth: int,
    geometry: PuzzleGeometry | None = None,
    orbit_length: int | None = None,
) -> ValidationReport:
    """Run all geometric checks; refuses maps whose fixed points are not repelling."""
    theta = angle(theta)
    c = complex(c)
    fp = fixed_points(c)  # raises DegenerateCase when a fixed point is not repelling
    pz = Puzzle(theta)
    geo = geometry or build_geometry(theta, c, depth, puzzle=pz)
    report = ValidationReport(theta, c, depth)
    add = report.checks.append

    for a in pz.portrait.cycle:
        d = abs(geo.landing[a] - fp.alpha)
        add(Check(f"ray {format_angle(a)} lands at alpha", d < LANDING_TOL, f"distance {d:.3g}", geo.landing[a]))

    pieces = pz.pieces_at_depth(depth)
    shapes = []
    for piece in pieces:
        ring = geo.polygon(piece)
        poly = _shape(ring)
        simple = LinearRing(poly.exterior.coords).is_simple and poly.is_valid
        label = "piece " + "+".join(f"({format_angle(lo)},{format_angle(hi)})" for lo, hi in piece.arcs)
        add(Check(f"{label} is simple", bool(simple), f"{ring.size} vertices"))
        shapes.append(poly)
    tree = STRtree(shapes)
    worst = 0.0
    where = None
    for i, j in zip(*tree.query(shapes, predicate="intersects")):
        if i >= j:
            continue
        a, b = shapes[i], shapes[j]
        if not (a.is_valid and b.is_valid):
            continue
        ratio = a.intersection(b).area / min(a.area, b.area)
        if ratio > worst:
            worst, where = ratio, a.intersection(b).centroid
    add(Check(
        f"pieces of depth {depth} are disjoint", worst <= OVERLAP_TOL,
        f"largest relative overlap {worst:.3g}",
        None if where is None else complex(where.x, where.y),
    ))

    info = orbit_info(theta)
    n = orbit_length or info.preperiod + info.period + 1
    index = {piece: k for k, piece in enumerate(pieces)}
    for k, z in enumerate(critical_orbit(c, n)):
        target = pz.critical_piece(depth) if k == 0 else pz.piece_of(double_n(theta, k - 1), depth)
        poly = shapes[index[target]]
        inradius = poly.exterior.distance(polylabel(poly, tolerance=1e-6))
        outside = poly.exterior.distance(Point(z.real, z.imag)) if not poly.contains(Point(z.real, z.imag)) else 0.0
        add(Check(
            f"f^{k}(0) in its predicted piece", outside <= INSIDE_TOL * inradius,
            f"distance outside {outside:.3g}, inradius {inradius:.3g}", z,
        ))

    nest = build_nest(theta, puzzle=pz)
    chain = [lv for lv in nest.levels if lv.depth <= depth]
    for outer_lv, inner_lv in zip(chain, chain[1:]):
        outer = _shape(geo.polygon(pz.critical_piece(outer_lv.depth)))
        inner = _shape(geo.polygon(pz.critical_piece(inner_lv.depth)))
        gap = outer.exterior.distance(inner.exterior)
        diam = _diameter(outer)
        ok = outer.contains(inner) and gap > GAP_RATIO * diam
        add(Check(
            f"V^{outer_lv.n} strictly contains V^{inner_lv.n}", ok,
            f"boundary distance {gap:.3g}, diameter {diam:.3g}",
        ))
    if len(chain) < 2:
        add(Check("nest pairs within depth", True, "fewer than two nest pieces up to this depth"))
    return report
