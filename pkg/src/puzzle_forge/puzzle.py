"""Symbolic Yoccoz puzzle.

A puzzle piece of depth ``n`` is stored as the exact set of external angles
whose rays enter it: a finite union of open arcs on R/Z.  Pieces are
generated by pulling back through the doubling map.  The preimage of a
piece either contains the critical value angle (one critical piece made of
both halves) or splits along the critical diameter ``{θ/2, θ/2 + 1/2}``.

For questions that only need membership ("are ``x`` and ``y`` in the same
depth-``n`` piece?") we avoid building arcs and use :meth:`Puzzle.agreement`,
which returns the largest such ``n`` (possibly infinite) by a finite search
over pairs of rational angles.
"""
from __future__ import annotations

from bisect import bisect_right
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import inf
from typing import Iterable, Sequence

from .angles import (
    Portrait,
    alpha_portrait,
    angle,
    double,
    double_n,
    format_angle,
    in_open_arc,
    orbit_info,
)
from .errors import CombinatorialRejection, PuzzleError

HALF = Fraction(1, 2)

Arc = tuple[Fraction, Fraction]


class OnCut(CombinatorialRejection):
    """An orbit hit a boundary ray of the puzzle."""


# -- arc helpers -----------------------------------------------------------


def _norm_arc(lo: Fraction, hi: Fraction) -> Arc:
    shift = lo.numerator // lo.denominator
    return lo - shift, hi - shift


def arc_halves(a: Arc) -> tuple[Arc, Arc]:
    lo, hi = a
    return (lo / 2, hi / 2), (lo / 2 + HALF, hi / 2 + HALF)


def arc_double(a: Arc) -> Arc:
    lo, hi = a
    return _norm_arc(2 * lo, 2 * hi)


def arcs_contain(arcs: Sequence[Arc], x: Fraction) -> bool:
    return any(in_open_arc(x, lo, hi) for lo, hi in arcs)


def arc_inside(inner: Arc, outer: Arc) -> bool:
    """Closed containment of ``inner`` in ``outer`` on the circle."""
    lo, hi = outer
    d = angle(inner[0] - lo)
    return d + (inner[1] - inner[0]) <= hi - lo


def arcs_measure(arcs: Iterable[Arc]) -> Fraction:
    return sum((hi - lo for lo, hi in arcs), Fraction(0))


def arcs_endpoints(arcs: Iterable[Arc]) -> frozenset[Fraction]:
    pts = set()
    for lo, hi in arcs:
        pts.add(angle(lo))
        pts.add(angle(hi))
    return frozenset(pts)


def canonical_arcs(arcs: Iterable[Arc]) -> tuple[Arc, ...]:
    return tuple(sorted(_norm_arc(lo, hi) for lo, hi in arcs))


def merge_arcs(arcs: Iterable[Arc]) -> tuple[Arc, ...]:
    """Union of arcs as a canonical tuple, fusing arcs that overlap.

    Arcs that only touch at an endpoint are kept apart: a shared endpoint is
    a boundary ray, which belongs to no piece.
    """
    items = sorted(_norm_arc(lo, hi) for lo, hi in arcs)
    out: list[list[Fraction]] = []
    for lo, hi in items:
        if out and lo < out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    if len(out) > 1 and out[-1][1] > 1 + out[0][0]:
        # wraparound overlap
        first = out.pop(0)
        out[-1][1] = max(out[-1][1], first[1] + 1)
    return tuple((lo, hi) for lo, hi in out)


# -- data types ------------------------------------------------------------


@dataclass(frozen=True)
class Sector0:
    index: int
    arc: Arc
    is_critical_sector: bool


@dataclass(frozen=True)
class Piece:
    """A puzzle piece: its depth, its exact angle set, and its itinerary word.

    Two pieces are equal when depth and angle set agree.  The word records the
    depth-0 sector of each forward image; it is carried along for reporting
    but does not by itself single out a piece.
    """

    depth: int
    arcs: tuple[Arc, ...]
    word: tuple[int, ...] = field(compare=False)
    critical: bool = field(compare=False, default=False)

    @property
    def cuts(self) -> frozenset[Fraction]:
        return arcs_endpoints(self.arcs)

    @property
    def measure(self) -> Fraction:
        return arcs_measure(self.arcs)

    def contains_angle(self, x: Fraction) -> bool:
        return arcs_contains_sorted(self.arcs, angle(x))

    def contains(self, other: "Piece") -> bool:
        """Set containment of angle sets (``other`` at least as deep)."""
        if other.depth < self.depth:
            return False
        return all(any(arc_inside(a, b) for b in self.arcs) for a in other.arcs)

    def disjoint(self, other: "Piece") -> bool:
        for a in self.arcs:
            for b in other.arcs:
                if _arcs_overlap(a, b):
                    return False
        return True

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "word": list(self.word),
            "critical": self.critical,
            "arcs": [[format_angle(lo), format_angle(hi)] for lo, hi in self.arcs],
        }


def _arcs_overlap(a: Arc, b: Arc) -> bool:
    # open arcs overlap iff one starts strictly inside the other or they share a start
    return (
        angle(a[0]) == angle(b[0])
        or in_open_arc(b[0], a[0], a[1])
        or in_open_arc(a[0], b[0], b[1])
    )


def arcs_contains_sorted(arcs: Sequence[Arc], x: Fraction) -> bool:
    """Membership test for canonical (sorted, disjoint) arcs."""
    if not arcs:
        return False
    i = bisect_right(arcs, (x, Fraction(2))) - 1
    if i >= 0:
        lo, hi = arcs[i]
        if lo < x < hi:
            return True
    # an arc running through 0 sits last and covers small x
    lo, hi = arcs[-1]
    return hi > 1 and x + 1 < hi and x + 1 > lo


# -- the puzzle ------------------------------------------------------------


class Puzzle:
    """Combinatorial puzzle of the quadratic map with parameter angle ``theta``.

    ``portrait`` may be supplied to skip the portrait search (it must be the
    portrait of ``theta``).
    """

    def __init__(self, theta: Fraction, portrait: Portrait | None = None):
        self.theta = angle(theta)
        self.portrait = portrait if portrait is not None else alpha_portrait(self.theta)
        self.p = self.portrait.p
        self.diameter = (self.theta / 2, self.theta / 2 + HALF)
        self.sectors = self._build_sectors()
        self._sector_starts = [s.arc[0] for s in self.sectors]
        info = orbit_info(self.theta)
        self.theta_orbit = info
        # an angle standing for the critical point: a periodic preimage of
        # theta when theta is periodic, otherwise theta/2
        if info.preperiod == 0:
            self.critical_angle = info.orbit[-1]
        else:
            self.critical_angle = self.theta / 2
        self._agreement_cache: dict[tuple[Fraction, Fraction], float] = {}
        self._piece_cache: dict[tuple[Fraction, int], Piece] = {}

    # depth 0 ---------------------------------------------------------------

    def _build_sectors(self) -> tuple[Sector0, ...]:
        cyc = sorted(self.portrait.cycle)
        p = len(cyc)
        arcs = []
        for i, lo in enumerate(cyc):
            hi = cyc[(i + 1) % p]
            if hi <= lo:
                hi += 1
            arcs.append((lo, hi))
        # index dynamically: 1 is the characteristic sector, k+1 = image of k
        char = next(a for a in arcs if in_open_arc(self.theta, *a))
        order = {char: 1}
        cur = char
        for k in range(2, p + 1):
            img = arc_double(cur)
            cur = next(a for a in arcs if angle(a[0]) == img[0])
            order[cur] = k % p
        sectors = [
            Sector0(order[a], a, (a[1] - a[0]) > HALF) for a in arcs
        ]
        sectors.sort(key=lambda s: s.index)
        if sum(s.is_critical_sector for s in sectors) != 1 or not sectors[0].is_critical_sector:
            raise PuzzleError("portrait does not have a unique long sector")
        return tuple(sectors)

    def sector_of(self, x: Fraction) -> int | None:
        """Index of the depth-0 sector containing ``x``; ``None`` on a cut."""
        x = angle(x)
        for s in self.sectors:
            if in_open_arc(x, *s.arc):
                return s.index
        return None

    def side(self, x: Fraction) -> int | None:
        """Which half-circle cut out by the critical diameter holds ``x``."""
        lo, hi = self.diameter
        x = angle(x)
        if x == lo or x == hi:
            return None
        return 0 if lo < x < hi else 1

    # agreement depth ------------------------------------------------------

    def agreement(self, x: Fraction, y: Fraction) -> float:
        """Largest ``n`` with ``x`` and ``y`` in one depth-``n`` piece.

        ``-1`` when they lie in different sectors (or on a cut), ``inf``
        when they share a piece at every depth.
        """
        x, y = angle(x), angle(y)
        key = (x, y) if x <= y else (y, x)
        cached = self._agreement_cache.get(key)
        if cached is not None:
            return cached
        value = self._agreement_bfs(key)
        self._agreement_cache[key] = value
        return value

    def _agreement_bfs(self, start: tuple[Fraction, Fraction]) -> float:
        theta = self.theta
        seen = {start}
        frontier = deque([(start, 0)])
        # a coincident pair agrees until its orbit hits a cut
        best = inf
        while frontier:
            (u, v), dist = frontier.popleft()
            if dist - 1 >= best:
                return best
            if u == v:
                best = min(best, dist + self._cut_step(u) - 1)
                continue
            su, sv = self.sector_of(u), self.sector_of(v)
            if su is None or sv is None or su != sv:
                return min(best, dist - 1)
            du, dv = double(u), double(v)
            children = [(du, dv)]
            a, b = self.side(u), self.side(v)
            if a is None or b is None or a != b:
                children.append((du, theta))
            for cu, cv in children:
                node = (cu, cv) if cu <= cv else (cv, cu)
                if node not in seen:
                    seen.add(node)
                    frontier.append((node, dist + 1))
        return best

    def _cut_step(self, x: Fraction) -> float:
        """First ``k`` with ``2^k x`` on a depth-0 cut (``inf`` if never)."""
        for k, y in enumerate(orbit_info(x).orbit):
            if self.sector_of(y) is None:
                return k
        return inf

    def same_piece(self, x: Fraction, y: Fraction, depth: int) -> bool:
        return self.agreement(x, y) >= depth

    # explicit pieces ------------------------------------------------------

    def sector_piece(self, index: int) -> Piece:
        s = self.sectors[index]
        return Piece(0, (s.arc,), (index,), index == 0)

    def word_of(self, x: Fraction, depth: int) -> tuple[int, ...]:
        word = []
        for k in range(depth + 1):
            s = self.sector_of(double_n(angle(x), k))
            if s is None:
                raise OnCut(f"orbit of {format_angle(x)} hits a cut at step {k}")
            word.append(s)
        return tuple(word)

    def pullback(self, q: Piece, toward: Fraction | None = None) -> list[Piece]:
        """Components of the preimage of ``q``.

        With ``toward`` given, only the component containing that angle is
        returned (raising :class:`OnCut` if it sits on a boundary).
        """
        halves = [h for a in q.arcs for h in arc_halves(a)]
        if arcs_contains_sorted(q.arcs, self.theta):
            arcs = canonical_arcs(halves)
            comps = [arcs]
            crit = [True]
        else:
            groups: dict[int, list[Arc]] = {0: [], 1: []}
            for h in halves:
                mid = (h[0] + h[1]) / 2
                groups[self.side(mid)].append(h)
            comps = [canonical_arcs(groups[0]), canonical_arcs(groups[1])]
            crit = [False, False]
        out = []
        for arcs, c in zip(comps, crit):
            if not arcs:
                continue
            s = self.sector_of((arcs[0][0] + arcs[0][1]) / 2)
            out.append(Piece(q.depth + 1, arcs, (s,) + q.word, c))
        if toward is None:
            return out
        x = angle(toward)
        for piece in out:
            if arcs_contains_sorted(piece.arcs, x):
                return [piece]
        raise OnCut(f"{format_angle(x)} lies on a cut of depth {q.depth + 1}")

    def piece_of(self, x: Fraction, depth: int) -> Piece:
        """The depth-``depth`` piece whose angle set contains ``x``."""
        x = angle(x)
        key = (x, depth)
        hit = self._piece_cache.get(key)
        if hit is not None:
            return hit
        s = self.sector_of(double_n(x, depth))
        if s is None:
            raise OnCut(f"orbit of {format_angle(x)} hits a cut at step {depth}")
        piece = self.sector_piece(s)
        for k in range(depth - 1, -1, -1):
            piece = self.pullback(piece, double_n(x, k))[0]
        if len(self._piece_cache) > 4096:
            self._piece_cache.clear()
        self._piece_cache[key] = piece
        return piece

    def arc_count(self, x: Fraction, depth: int) -> int:
        """Number of arcs of ``piece_of(x, depth)`` without building it."""
        count = 1
        for k in range(depth - 1, -1, -1):
            if self.agreement(double_n(x, k + 1), self.theta) >= depth - k - 1:
                count *= 2
        return count

    def critical_arc_count(self, depth: int) -> int:
        return 1 if depth == 0 else 2 * self.arc_count(self.theta, depth - 1)

    def critical_piece(self, depth: int) -> Piece:
        if depth == 0:
            return self.sector_piece(0)
        inner = self.piece_of(self.theta, depth - 1)
        (piece,) = self.pullback(inner, self.diameter[0])
        return piece

    def map_piece(self, piece: Piece) -> tuple[Piece, int]:
        """Image of a piece one depth up, together with the local degree."""
        if piece.depth < 1:
            raise ValueError("depth-0 sectors have no image piece")
        image = merge_arcs(arc_double(a) for a in piece.arcs)
        degree = int(2 * piece.measure / arcs_measure(image))
        return Piece(piece.depth - 1, image, piece.word[1:], None), degree

    def pullback_chain(self, piece: Piece, x: Fraction, length: int) -> list[Piece]:
        """Pieces ``W_0 = piece, W_-1, ..., W_-length`` along the orbit of ``x``.

        ``double^length(x)`` must lie in ``piece``; ``W_-k`` is the piece of
        depth ``piece.depth + k`` containing ``double^(length-k)(x)``.
        """
        x = angle(x)
        if not arcs_contains_sorted(piece.arcs, double_n(x, length)):
            raise OnCut("orbit does not enter the piece at the given time")
        chain = [piece]
        for k in range(1, length + 1):
            chain.append(self.pullback(chain[-1], double_n(x, length - k))[0])
        return chain

    def pieces_at_depth(self, depth: int) -> list[Piece]:
        level = [self.sector_piece(i) for i in range(self.p)]
        for _ in range(depth):
            level = [c for q in level for c in self.pullback(q)]
        return level

    def depth1_structure(self) -> dict:
        """Depth-1 pieces with their roles: one critical, p-1 at α, p-1 at α'."""
        pieces = self.pieces_at_depth(1)
        crit = [q for q in pieces if q.critical]
        at_alpha = {}
        at_coalpha = {}
        for i in range(1, self.p):
            arc = self.sectors[i].arc
            shifted = _norm_arc(arc[0] + HALF, arc[1] + HALF)
            for q in pieces:
                if q.arcs == (arc,):
                    at_alpha[i] = q
                elif q.arcs == (shifted,):
                    at_coalpha[i] = q
        if len(crit) != 1 or len(at_alpha) != self.p - 1 or len(at_coalpha) != self.p - 1:
            raise PuzzleError("depth-1 pieces do not match the expected roles")
        if len(pieces) != 2 * self.p - 1:
            raise PuzzleError(f"{len(pieces)} depth-1 pieces, expected {2 * self.p - 1}")
        return {"critical": crit[0], "Y": at_alpha, "Z": at_coalpha}


def depth0_partition(portrait: Portrait) -> tuple[Sector0, ...]:
    """Sectors cut out by the rays of the portrait.

    Indexing needs a parameter angle; the left endpoint of the characteristic
    arc nudged inward serves since every angle of the arc gives the same
    portrait.
    """
    lo, hi = portrait.characteristic_arc
    return Puzzle((lo + hi) / 2, portrait).sectors


# -- Markov audit ----------------------------------------------------------


@dataclass
class AuditReport:
    theta: Fraction
    max_depth: int
    passed: bool
    pieces_checked: int
    counterexample: str | None = None

    def to_json(self) -> dict:
        return {
            "theta": format_angle(self.theta),
            "max_depth": self.max_depth,
            "passed": self.passed,
            "pieces_checked": self.pieces_checked,
            "counterexample": self.counterexample,
        }


def markov_audit(theta: Fraction, max_depth: int, puzzle: Puzzle | None = None) -> AuditReport:
    """Check nesting/disjointness and the image property on every realized piece.

    At each depth the pieces must partition the circle up to finitely many
    cut angles, each piece must sit inside exactly one piece of the previous
    depth with its word extending that piece's word, and the doubling image
    of each piece must be a realized piece of the previous depth, covered
    twice exactly when the piece is critical.
    """
    pz = puzzle or Puzzle(theta)
    count = 0
    den = 2**pz.p - 1

    def fail(msg: str) -> AuditReport:
        return AuditReport(pz.theta, max_depth, False, count, msg)

    prev = [pz.sector_piece(i) for i in range(pz.p)]
    count += len(prev)
    if arcs_measure(a for q in prev for a in q.arcs) != 1:
        return fail("depth-0 sectors do not cover the circle")
    for depth in range(1, max_depth + 1):
        level = [c for q in prev for c in pz.pullback(q)]
        count += len(level)
        crit = [q for q in level if q.critical]
        if len(crit) != 1:
            return fail(f"depth {depth}: {len(crit)} critical pieces")
        if not arcs_contains_sorted(crit[0].arcs, pz.diameter[0]):
            return fail(f"depth {depth}: critical piece misses the critical point")
        flat = sorted((a, i) for i, q in enumerate(level) for a in q.arcs)
        total = arcs_measure(a for a, _ in flat)
        if total != 1:
            return fail(f"depth {depth}: pieces cover measure {total}")
        for (a, i), (b, j) in zip(flat, flat[1:]):
            if b[0] < a[1]:
                return fail(f"depth {depth}: pieces {i} and {j} overlap")
        if flat[-1][0][1] > 1 + flat[0][0][0]:
            return fail(f"depth {depth}: wraparound overlap")
        modulus = 2**depth * den
        parent_arcs = sorted((a, i) for i, q in enumerate(prev) for a in q.arcs)
        starts = [a[0] for a, _ in parent_arcs]
        prev_index = {(q.depth, q.arcs): q for q in prev}
        for q in level:
            for pt in q.cuts:
                if (modulus % pt.denominator) != 0:
                    return fail(f"depth {depth}: cut {format_angle(pt)} has a stray denominator")
            owners = set()
            for a in q.arcs:
                k = bisect_right(starts, a[0]) - 1
                cands = [parent_arcs[k % len(parent_arcs)], parent_arcs[-1]]
                owner = next((i for b, i in cands if arc_inside(a, b)), None)
                if owner is None:
                    return fail(f"depth {depth}: arc {a} not inside a parent piece")
                owners.add(owner)
            if len(owners) != 1:
                return fail(f"depth {depth}: piece straddles {len(owners)} parents")
            parent = prev[owners.pop()]
            if q.word[:-1] != parent.word:
                return fail(f"depth {depth}: word of {q.arcs} does not extend its parent's")
            image, degree = pz.map_piece(q)
            target = prev_index.get((image.depth, image.arcs))
            if target is None:
                return fail(f"depth {depth}: image of {q.arcs} is not a realized piece")
            if image.word != target.word:
                return fail(f"depth {depth}: shifted word disagrees with image word")
            if (degree == 2) != q.critical or degree not in (1, 2):
                return fail(f"depth {depth}: degree {degree} on piece critical={q.critical}")
        prev = level
    return AuditReport(pz.theta, max_depth, True, count)
