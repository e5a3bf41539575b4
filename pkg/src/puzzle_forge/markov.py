"""Markov and Bernoulli maps built from puzzle pieces.

Two constructions live here:

* the initial Markov partition of the critical sector, with the map ``G``
  sending every piece onto the critical sector (or onto ``V^0``);
* the standard Bernoulli scheme attached to a cascade of the principal nest,
  obtained by pulling the non-critical first-return domains into the annuli
  of the cascade.

Branch iterate counts are recorded explicitly and checked by pushing the
exact angle sets forward.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import inf

from .angles import double_n, format_angle
from .errors import HorizonExhausted, PuzzleError
from .nest import Cascade, CriticalOrbit, NestReport, Verdict, build_nest, escape_time
from .puzzle import Piece, Puzzle, arcs_measure, arc_double, merge_arcs

DEFAULT_HORIZON = 4096


def push_forward(piece: Piece, n: int) -> tuple[tuple, int]:
    """Angle set of ``f^n(piece)`` and the degree of ``f^n`` on it."""
    arcs = piece.arcs
    for _ in range(n):
        arcs = merge_arcs(arc_double(a) for a in arcs)
        if arcs_measure(arcs) >= 1:
            break
    measure = arcs_measure(arcs)
    degree = (piece.measure * 2**n) / measure
    return arcs, int(degree) if degree.denominator == 1 else degree


def pullback_into(
    pz: Puzzle, target: Piece, steps: int, container_depth: int, orbit: CriticalOrbit
) -> list[Piece]:
    """Components of ``f^-steps(target)`` inside the critical piece of ``container_depth``.

    The intermediate preimages are kept inside the forward images of the
    container, which are the pieces around the critical orbit.
    """
    if target.depth < container_depth - steps:
        raise ValueError("target is too shallow for the requested pull-back")
    layer = [target]
    for i in range(1, steps + 1):
        j = steps - i
        nxt = []
        for q in layer:
            for comp in pz.pullback(q):
                rep = _rep(comp)
                if j == 0:
                    ok = pz.agreement(rep, orbit.z0) >= container_depth
                else:
                    ok = pz.agreement(rep, orbit.point(j)) >= container_depth - j
                if ok:
                    nxt.append(comp)
        layer = nxt
    return sorted(layer, key=lambda q: q.arcs)


def _rep(piece: Piece) -> Fraction:
    lo, hi = piece.arcs[0]
    x = (lo + hi) / 2
    return x - (x.numerator // x.denominator)


# -- initial Markov partition ------------------------------------------------


@dataclass(frozen=True)
class PartitionPiece:
    """A piece of the initial partition with its ``G`` branch.

    ``kind`` is ``"Z"``, ``"V0"``, ``"X"`` or ``"Q"``; ``level`` is the
    ``s`` of ``Z^(1+sp)`` or the ``k`` of ``X^(kp)``.  ``iterates`` is the
    number of ``f`` steps of ``G`` on the piece and ``target`` names its
    image (``"Y0"`` for the critical sector, ``"V0"`` for the first nest piece).
    """

    kind: str
    level: int
    piece: Piece
    iterates: int | None
    degree: int
    target: str | None


@dataclass
class InitialPartition:
    theta: Fraction
    p: int
    t: int
    nu: int
    central_nest: list[Piece]
    V0: PartitionPiece
    Z: list[PartitionPiece]
    Q: list[Piece]
    horizon: int
    puzzle: Puzzle = field(repr=False)
    orbit: CriticalOrbit = field(repr=False)

    def locate(self, x: Fraction) -> PartitionPiece:
        """The partition piece containing ``x`` (an angle of the critical sector)."""
        pz = self.puzzle
        if pz.sector_of(x) != 0:
            raise PuzzleError(f"{format_angle(x)} is outside the critical sector")
        if pz.agreement(x, self.orbit.z0) >= self.V0.piece.depth:
            return self.V0
        for z in self.Z:
            if pz.agreement(x, _rep(z.piece)) >= z.piece.depth:
                return z
        # x lies in Q1 or Q2: iterate f^p until it escapes
        p, t = self.p, self.t
        y = x
        seen = set()
        for k in range(1, self.horizon + 1):
            y = double_n(y, p)
            if y in seen:
                return PartitionPiece("K", k, pz.piece_of(x, 1 + t * p), None, 1, None)
            seen.add(y)
            if pz.agreement(y, self.orbit.z0) >= self.V0.piece.depth:
                piece = pz.piece_of(x, self.V0.piece.depth + k * p)
                return PartitionPiece("X", k, piece, k * p, 1, "V0")
            for z in self.Z:
                if z.level == t and pz.agreement(y, _rep(z.piece)) >= z.piece.depth:
                    s = t + k
                    piece = pz.piece_of(x, 1 + s * p)
                    i = self._z1_index(double_n(x, s * p))
                    return PartitionPiece("Z", s, piece, s * p + (p - i), 1, "Y0")
        raise HorizonExhausted(
            f"{format_angle(x)} does not leave Q1 and Q2 within {self.horizon} iterates"
        )

    def _z1_index(self, y: Fraction) -> int:
        for i, z in self.puzzle.depth1_structure()["Z"].items():
            if z.contains_angle(y):
                return i
        raise PuzzleError(f"{format_angle(y)} is in no depth-1 piece at α'")

    def G(self, x: Fraction) -> tuple[Fraction, PartitionPiece]:
        piece = self.locate(x)
        if piece.iterates is None:
            raise PuzzleError(f"{format_angle(x)} never escapes Q1 and Q2")
        return double_n(x, piece.iterates), piece

    def first_return_via_G(self, max_steps: int = 10_000) -> int | None:
        """``f``-time of the first return of the critical point to ``V^0``, by iterating ``G``.

        ``None`` when the ``G``-orbit cycles without entering ``V^0``.
        """
        total = self.V0.iterates
        y = double_n(self.orbit.z0, total)
        seen = set()
        for _ in range(max_steps):
            if self.puzzle.agreement(y, self.orbit.z0) >= self.V0.piece.depth:
                return total
            if y in seen:
                return None
            seen.add(y)
            y_next, piece = self.G(y)
            if piece.target == "V0":
                # the X branch lands in V0, first entrance is at its end
                return total + piece.iterates
            total += piece.iterates
            y = y_next
        raise HorizonExhausted("G-orbit too long")


def initial_markov_partition(
    theta: Fraction, horizon: int = DEFAULT_HORIZON, puzzle: Puzzle | None = None
) -> InitialPartition:
    """Partition of the critical sector into ``V^0``, ``Z`` and ``X`` pieces.

    With ``t`` the escape time, the central pieces ``Y^(1+sp)`` for ``s < t``
    form the initial central nest and ``f^p(0)`` lies in a piece of depth
    ``1+(t-1)p`` that maps onto some ``Z^(1)``.  Its pull-back is ``V^0``
    (depth ``1+tp``); the other pieces of that depth pull back to
    ``Z^(1+tp)`` and the last central piece pulls back to ``Q1`` and ``Q2``.
    Pieces met by iterating ``f^p`` on ``Q1 ∪ Q2`` are found lazily by
    :meth:`InitialPartition.locate`.
    """
    pz = puzzle or Puzzle(theta)
    esc = escape_time(pz.theta, pz)
    if esc is None:
        raise PuzzleError("immediately renormalizable: no initial partition")
    p, t, nu = pz.p, esc.t, esc.nu
    orbit = CriticalOrbit(pz)
    roles = pz.depth1_structure()
    central = [pz.critical_piece(1 + s * p) for s in range(t)]
    zs = [PartitionPiece("Z", 0, roles["Z"][i], p - i, 1, "Y0") for i in sorted(roles["Z"])]
    current = [z.piece for z in zs]
    for s in range(1, t + 1):
        sources = current
        if s == t:
            escaping = _containing(pz, current, orbit.point(p))
            sources = [z for z in current if z != escaping]
        pulled = [c for z in sources for c in pullback_into(pz, z, p, 1 + (s - 1) * p, orbit)]
        for piece in pulled:
            i = _z1_of(pz, roles, double_n(_rep(piece), s * p))
            zs.append(PartitionPiece("Z", s, piece, s * p + (p - i), 1, "Y0"))
        current = pulled
    V0_piece = pz.critical_piece(1 + t * p)
    V0 = PartitionPiece("V0", 0, V0_piece, t * p + (p - nu), 2, "Y0")
    Q = [q for q in pullback_into(pz, central[-1], p, 1 + (t - 1) * p, orbit) if q != V0_piece]
    return InitialPartition(pz.theta, p, t, nu, central, V0, zs, Q, horizon, pz, orbit)


def _containing(pz: Puzzle, pieces: list[Piece], x: Fraction) -> Piece:
    for z in pieces:
        if pz.agreement(x, _rep(z)) >= z.depth:
            return z
    raise PuzzleError(f"{format_angle(x)} lies in none of the given pieces")


def _z1_of(pz: Puzzle, roles: dict, y: Fraction) -> int:
    for i, z in roles["Z"].items():
        if z.contains_angle(y):
            return i
    raise PuzzleError(f"{format_angle(y)} is not in a depth-1 piece at α'")


def audit_partition(part: InitialPartition) -> list[str]:
    """Push every explicit branch forward and report mismatches."""
    pz = part.puzzle
    sector0 = pz.sector_piece(0).arcs
    problems = []
    for zp in part.Z + [part.V0]:
        arcs, degree = push_forward(zp.piece, zp.iterates)
        if arcs != sector0:
            problems.append(f"{zp.kind}^{zp.level} {zp.piece.arcs[:1]}: image is not the critical sector")
        if degree != zp.degree:
            problems.append(f"{zp.kind}^{zp.level}: degree {degree} != {zp.degree}")
    total = sum(zp.piece.measure for zp in part.Z) + part.V0.piece.measure
    total += sum(q.measure for q in part.Q)
    if total != arcs_measure(sector0):
        problems.append(f"pieces cover measure {total}, the critical sector has {arcs_measure(sector0)}")
    for q in part.Q:
        arcs, degree = push_forward(q, part.p)
        if arcs != part.central_nest[-1].arcs or degree != 1:
            problems.append(f"Q piece {q.arcs[:1]} does not map onto the last central piece")
    return problems


# -- cascade Bernoulli scheme -------------------------------------------------


@dataclass(frozen=True)
class Branch:
    """``G`` on ``W^k_j``: ``g^(k-m-1)`` onto the level-``m+1`` domain ``source`` then its return."""

    k: int
    j: int
    piece: Piece
    source: int
    g_steps: int
    iterates: int
    degree: int


@dataclass
class BernoulliScheme:
    cascade: Cascade
    branches: list[Branch]
    report: NestReport = field(repr=False)

    def locate(self, x: Fraction) -> Branch | None:
        for b in self.branches:
            if b.piece.contains_angle(x):
                return b
        return None

    def g_time(self, n_plus_1: int, index: int) -> int:
        """Steps of the scheme for ``V^(m+N+1)_index``: one move by the cascade map, then ``G`` until ``V^(m+N)``."""
        c = self.cascade
        m, N = c.start, c.length
        if n_plus_1 != m + N + 1:
            raise ValueError("G-times are defined for the level just below the cascade")
        rep = self.report
        pz = rep.puzzle
        dom = rep.levels[n_plus_1].domains[index]
        y = double_n(dom.representative, c.l)
        steps = 1
        goal = rep.levels[m + N].depth
        for _ in range(10_000):
            if pz.agreement(y, pz.critical_angle) >= goal:
                return steps
            b = self.locate(y)
            if b is None:
                raise PuzzleError(f"{format_angle(y)} lies in no Bernoulli piece")
            y = double_n(y, b.iterates)
            steps += 1
        raise HorizonExhausted("G-orbit does not return")


def cascade_bernoulli(report: NestReport, cascade: Cascade, max_layers: int | None = None) -> BernoulliScheme:
    """Pull the non-critical domains of level ``m+1`` into the annuli of the cascade."""
    pz = report.puzzle
    orbit = CriticalOrbit(pz)
    m, N, l = cascade.start, cascade.length, cascade.l
    if l is None:
        return BernoulliScheme(cascade, [], report)
    top = min(m + N, len(report.levels) - 1)
    if max_layers is not None:
        top = min(top, m + max_layers)
    if m + 1 > top:
        return BernoulliScheme(cascade, [], report)
    sources = {d.index: d for d in report.levels[m + 1].domains if d.index != 0}
    branches: list[Branch] = []
    layer: list[tuple[Piece, int]] = [
        (report.domain_piece(m + 1, i), i) for i in sorted(sources)
    ]
    for k in range(m + 1, top + 1):
        if k > m + 1:
            container = report.levels[k - 1].depth
            nxt = []
            for piece, i in layer:
                for comp in pullback_into(pz, piece, l, container, orbit):
                    nxt.append((comp, i))
            layer = nxt
        for j, (piece, i) in enumerate(layer):
            g_steps = k - m - 1
            iterates = l * g_steps + sources[i].return_time
            branches.append(Branch(k, j, piece, i, g_steps, iterates, 1))
    return BernoulliScheme(cascade, branches, report)


def audit_bernoulli(scheme: BernoulliScheme) -> list[str]:
    """Replay every branch: ``f^iterates`` must map ``W`` univalently onto ``V^m``."""
    rep = scheme.report
    m = scheme.cascade.start
    vm = rep.level_piece(m).arcs
    problems = []
    for b in scheme.branches:
        arcs, degree = push_forward(b.piece, b.iterates)
        if arcs != vm:
            problems.append(f"W^{b.k}_{b.j}: image is not V^{m}")
        if degree != 1:
            problems.append(f"W^{b.k}_{b.j}: degree {degree}")
        lo = rep.levels[b.k - 1].depth
        hi = rep.levels[b.k].depth if b.k < len(rep.levels) else inf
        a = rep.puzzle.agreement(_rep(b.piece), rep.puzzle.critical_angle)
        if not lo <= a < hi:
            problems.append(f"W^{b.k}_{b.j} is not in the annulus A^{b.k}")
    return problems
