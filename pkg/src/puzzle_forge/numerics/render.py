"""Escape-time pictures of the Julia set with the puzzle drawn on top.

The raster is a smooth escape-potential shading (black on the filled Julia
set).  Overlays are the traced cut rays of the requested depth, the
equipotential bounding the pieces of that depth and the piece polygons; the
frame is fitted to that equipotential.  The raster goes to a
binary PPM (and optionally PNG), the overlays to JSON polylines in the
complex plane together with the pixel mapping.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ..angles import angle, format_angle, orbit_info
from ..errors import NumericalFailure
from ..puzzle import Puzzle
from .geometry import PuzzleGeometry, build_geometry
from .kernels import escape_potential
from .rays import POT_MIN, center_for_angle, trace_parameter_ray

OVERLAY_FORMAT = "puzzle_forge.overlay/1"
MARGIN = 0.05

RAY_RGB = (230, 60, 40)
EQUI_RGB = (40, 120, 230)
PIECE_RGB = (250, 210, 60)


@dataclass
class View:
    """Affine map between the complex plane and pixel coordinates (row 0 on top)."""

    center: complex
    scale: float  # plane units per pixel
    width: int
    height: int

    def to_pixel(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=np.complex128)
        col = (z.real - self.center.real) / self.scale + (self.width - 1) / 2.0
        row = (self.center.imag - z.imag) / self.scale + (self.height - 1) / 2.0
        return col, row

    def grid(self) -> np.ndarray:
        cols = (np.arange(self.width) - (self.width - 1) / 2.0) * self.scale + self.center.real
        rows = self.center.imag - (np.arange(self.height) - (self.height - 1) / 2.0) * self.scale
        return cols[None, :] + 1j * rows[:, None]

    def to_json(self) -> dict:
        return {
            "center": [self.center.real, self.center.imag],
            "scale": self.scale,
            "width": self.width,
            "height": self.height,
        }


@dataclass
class Rendering:
    theta: Fraction
    c: complex
    depth: int
    level: float
    view: View
    image: np.ndarray  # (height, width, 3) uint8
    geometry: PuzzleGeometry
    polygons: list[tuple[tuple, np.ndarray]] = field(default_factory=list)
    landing_pairs: list[tuple[Fraction, Fraction, float]] = field(default_factory=list)

    @property
    def ray_count(self) -> int:
        return len(self.geometry.rays)

    def overlay_json(self) -> dict:
        geo = self.geometry
        j = geo._index(geo.level_potential(0))
        return {
            "format": OVERLAY_FORMAT,
            "theta": format_angle(self.theta),
            "c": [self.c.real, self.c.imag],
            "depth": self.depth,
            "equipotential_level": self.level,
            "view": self.view.to_json(),
            "rays": [
                {
                    "angle": format_angle(a),
                    "points": _pairs(np.append(geo.rays[a][j:], geo.landing[a])),
                    "polished": bool(geo.polished[a]),
                }
                for a in sorted(geo.rays)
            ],
            "equipotential": {
                "potential": geo.level_potential(self.depth),
                "points": _pairs(np.append(geo.equipotentials[self.depth], geo.equipotentials[self.depth][:1])),
            },
            "pieces": [
                {
                    "arcs": [[format_angle(lo), format_angle(hi)] for lo, hi in arcs],
                    "polygon": _pairs(ring),
                }
                for arcs, ring in self.polygons
            ],
            "landing_pairs": [
                {"angles": [format_angle(a), format_angle(b)], "pixel_distance": d}
                for a, b, d in self.landing_pairs
            ],
        }


def _pairs(z: np.ndarray) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in z]


def estimate_parameter(theta) -> complex:
    """A parameter for ``theta``: the center behind a periodic root, else the ray landing."""
    a = angle(theta)
    if orbit_info(a).preperiod == 0:
        c, residual = center_for_angle(a)
        if residual > 1e-9:
            raise NumericalFailure(f"no center found for {format_angle(a)} (residual {residual:.3g})")
        return c
    ray = trace_parameter_ray(a)
    if not ray.polished:
        raise NumericalFailure(f"parameter ray {format_angle(a)} did not converge to a landing point")
    return ray.landing


def potential_shading(pot: np.ndarray) -> np.ndarray:
    """Grey bands in ``log2`` of the potential; the filled Julia set stays black."""
    out = np.zeros(pot.shape + (3,), dtype=np.uint8)
    esc = pot > 0
    t = np.log2(pot[esc])
    band = 0.5 + 0.5 * np.cos(4.0 * math.pi * t)
    grey = (90 + 140 * band).astype(np.uint8)
    out[esc] = grey[:, None]
    return out


def draw_polyline(img: np.ndarray, view: View, z: np.ndarray, rgb) -> None:
    """Rasterize a polyline by dense sampling of each segment (clipped to the frame)."""
    if len(z) < 2:
        return
    col, row = view.to_pixel(z)
    n = np.maximum(1, np.ceil(np.maximum(np.abs(np.diff(col)), np.abs(np.diff(row))))).astype(int)
    n = np.minimum(n, 4 * (view.width + view.height))
    t = np.concatenate([np.arange(k) / k for k in n])
    seg = np.repeat(np.arange(len(n)), n)
    x = np.rint(col[seg] + t * (col[seg + 1] - col[seg])).astype(np.int64)
    y = np.rint(row[seg] + t * (row[seg + 1] - row[seg])).astype(np.int64)
    keep = (x >= 0) & (x < view.width) & (y >= 0) & (y < view.height)
    img[y[keep], x[keep]] = rgb


def _fit_view(geo: PuzzleGeometry, width: int, height: int) -> View:
    ring = geo.equipotentials[geo.depth]
    lo = complex(ring.real.min(), ring.imag.min())
    hi = complex(ring.real.max(), ring.imag.max())
    center = 0.5 * (lo + hi)
    span_x = (hi.real - lo.real) * (1 + 2 * MARGIN)
    span_y = (hi.imag - lo.imag) * (1 + 2 * MARGIN)
    scale = max(span_x / max(width - 1, 1), span_y / max(height - 1, 1))
    return View(center, scale, width, height)


def render(
    theta,
    c: complex | None = None,
    depth: int = 2,
    equipotential_level: float = 1.0,
    size: tuple[int, int] = (512, 512),
    pot_min: float = POT_MIN,
    max_iter: int = 1000,
    geometry: PuzzleGeometry | None = None,
) -> Rendering:
    """Picture of the depth-``depth`` puzzle of ``theta`` for ``z^2 + c``.

    ``c`` defaults to :func:`estimate_parameter`.  ``size`` is ``(width, height)``.
    """
    a = angle(theta)
    width, height = (int(size[0]), int(size[1]))
    if width < 1 or height < 1:
        raise ValueError("image size must be positive")
    c = estimate_parameter(a) if c is None else complex(c)
    pz = Puzzle(a)
    geo = geometry or build_geometry(a, c, depth, level=equipotential_level, pot_min=pot_min, puzzle=pz)
    view = _fit_view(geo, width, height)
    pot = escape_potential(view.grid(), c, max_iter=max_iter)
    img = potential_shading(pot)

    polygons = []
    pairs: dict[tuple[Fraction, Fraction], float] = {}
    for piece in pz.pieces_at_depth(depth):
        ring = geo.polygon(piece)
        polygons.append((piece.arcs, ring))
        draw_polyline(img, view, np.append(ring, ring[:1]), PIECE_RGB)
        arcs = piece.arcs
        for i, (_lo, hi) in enumerate(arcs):
            b, a_next = angle(hi), angle(arcs[(i + 1) % len(arcs)][0])
            key = (min(b, a_next), max(b, a_next))
            if key[0] != key[1] and key not in pairs:
                pb = np.array(view.to_pixel(np.array([geo.landing[b]])))
                pa = np.array(view.to_pixel(np.array([geo.landing[a_next]])))
                pairs[key] = float(np.hypot(*(pb - pa)).max())
    j = geo._index(geo.level_potential(0))
    for ang in sorted(geo.rays):
        draw_polyline(img, view, np.append(geo.rays[ang][j:], geo.landing[ang]), RAY_RGB)
    equi = geo.equipotentials[depth]
    draw_polyline(img, view, np.append(equi, equi[:1]), EQUI_RGB)
    landing = [(x, y, d) for (x, y), d in sorted(pairs.items())]
    return Rendering(a, c, depth, equipotential_level, view, img, geo, polygons, landing)


# -- output -----------------------------------------------------------------


def write_ppm(path, image: np.ndarray) -> None:
    """Binary PPM (P6), 8 bits per channel."""
    image = np.ascontiguousarray(image, dtype=np.uint8)
    h, w, _ = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def read_ppm(path) -> np.ndarray:
    """Read back a binary PPM written by :func:`write_ppm`."""
    data = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end : end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != b"P6" or int(fields[3]) != 255:
        raise ValueError("not an 8-bit binary PPM")
    w, h = int(fields[1]), int(fields[2])
    pixels = np.frombuffer(data[pos + 1 :], dtype=np.uint8)
    if pixels.size != w * h * 3:
        raise ValueError(f"expected {w * h * 3} pixel bytes, found {pixels.size}")
    return pixels.reshape(h, w, 3)


def write_png(path, image: np.ndarray) -> None:
    try:
        from PIL import Image
    except ImportError as exc:  # optional dependency
        raise RuntimeError("PNG output needs Pillow (pip install puzzle-forge[png])") from exc
    Image.fromarray(np.ascontiguousarray(image, dtype=np.uint8), "RGB").save(path)


def save(rendering: Rendering, out, png: bool = False, overlay: bool = True) -> list[Path]:
    """Write ``out`` (P6), optionally ``out`` with ``.png`` and the ``.json`` overlay."""
    out = Path(out)
    written = [out]
    write_ppm(out, rendering.image)
    if png:
        write_png(out.with_suffix(".png"), rendering.image)
        written.append(out.with_suffix(".png"))
    if overlay:
        path = out.with_suffix(".json")
        path.write_text(json.dumps(rendering.overlay_json(), indent=1) + "\n")
        written.append(path)
    return written
