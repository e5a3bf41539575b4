"""Principal nest, first-return maps and their combinatorics.

Everything is decided on the orbit of the critical value angle ``θ``.
``f^k(0)`` is represented by the angle ``2^(k-1) θ`` and the critical point
by :attr:`Puzzle.critical_angle`; a point lies in the critical piece of depth
``D`` exactly when its agreement depth with the critical angle is at least
``D``.  Because rational angles have finite orbits, every question below is
answered by a finite computation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import inf
from typing import Sequence

from .angles import Portrait, angle, double_n, format_angle, orbit_info
from .errors import NonRecurrent, PuzzleError
from .puzzle import Piece, Puzzle

DEFAULT_MAX_LEVELS = 64
DEFAULT_TAIL = 2


class Verdict(str, Enum):
    IMMEDIATE = "ImmediatelyRenormalizable"
    RENORMALIZABLE = "Renormalizable"
    NONRECURRENT = "NonRecurrent"
    TRUNCATED = "Truncated"


@dataclass(frozen=True)
class Escape:
    """First ``t`` with ``f^(tp) 0`` in the ``ν``-th piece attached to α'."""

    t: int
    nu: int


@dataclass(frozen=True)
class ReturnDomain:
    """A domain of the first return map to the previous nest piece.

    ``depth`` is the puzzle depth of the domain, ``representative`` a marked
    angle inside it.  ``itinerary`` lists the previous-level domains visited
    under the previous return map (``None`` on level 1, where the previous
    map is ``f`` itself).
    """

    index: int
    depth: int
    return_time: int
    itinerary: tuple[int, ...] | None
    degree: int
    representative: Fraction
    marked: tuple[Fraction, ...]

    @property
    def critical(self) -> bool:
        return self.index == 0


@dataclass(frozen=True)
class NestLevel:
    m: int
    n: int
    depth: int
    l: int | None
    central: bool
    domains: tuple[ReturnDomain, ...] = ()

    @property
    def critical_domain(self) -> ReturnDomain | None:
        return self.domains[0] if self.domains else None


@dataclass(frozen=True)
class Cascade:
    """Levels ``start .. start+length-1`` sharing one return map of time ``l``.

    ``terminal`` cascades are infinite; ``length`` then counts the levels
    that were materialized.
    """

    start: int
    length: int
    l: int | None
    terminal: bool = False

    @property
    def levels(self) -> range:
        return range(self.start, self.start + self.length)


@dataclass
class NestReport:
    theta: Fraction
    portrait: Portrait
    verdict: Verdict
    escape: Escape | None
    levels: list[NestLevel]
    cascades: list[Cascade]
    height: int | None
    dh_level: int | None = None
    per: int | None = None
    stage: int = 0
    puzzle: Puzzle | None = field(default=None, repr=False, compare=False)

    @property
    def return_times(self) -> list[int]:
        return [lv.l for lv in self.levels if lv.l is not None]

    @property
    def terminal_level(self) -> int:
        return self.levels[-1].n if self.levels else -1

    def level_piece(self, n: int) -> Piece:
        """Explicit angle set of ``V^n`` (may be large for deep levels)."""
        return self.puzzle.critical_piece(self.levels[n].depth)

    def domain_piece(self, n: int, index: int) -> Piece:
        dom = self.levels[n].domains[index]
        return self.puzzle.piece_of(dom.representative, dom.depth)

    def depth_of(self, n: int) -> int:
        """Puzzle depth of ``V^n``; ``V^-1`` stands for the whole plane."""
        return self.levels[n].depth if n >= 0 else 0

    def to_json(self) -> dict:
        return {
            "stage": self.stage,
            "theta": format_angle(self.theta),
            "portrait": {
                "p": self.portrait.p,
                "q": self.portrait.q,
                "cycle": [format_angle(a) for a in self.portrait.cycle],
                "characteristic_arc": [format_angle(a) for a in self.portrait.characteristic_arc],
            },
            "verdict": self.verdict.value,
            "escape": None if self.escape is None else {"t": self.escape.t, "nu": self.escape.nu},
            "height": self.height,
            "dh_level": self.dh_level,
            "per": self.per,
            "levels": [
                {
                    "n": lv.n,
                    "depth": lv.depth,
                    "l": lv.l,
                    "central": lv.central,
                    "domains": [
                        {
                            "index": d.index,
                            "depth": d.depth,
                            "return_time": d.return_time,
                            "degree": d.degree,
                            "itinerary": None if d.itinerary is None else list(d.itinerary),
                            "representative": format_angle(d.representative),
                        }
                        for d in lv.domains
                    ],
                }
                for lv in self.levels
            ],
            "cascades": [
                {"start": c.start, "length": c.length, "l": c.l, "terminal": c.terminal}
                for c in self.cascades
            ],
        }


class CriticalOrbit:
    """The critical orbit of a puzzle together with membership queries."""

    def __init__(self, puzzle: Puzzle):
        self.puzzle = puzzle
        info = orbit_info(puzzle.theta)
        self.preperiod = info.preperiod
        self.period = info.period
        self.z0 = puzzle.critical_angle
        # f^k(0) for k = 1 .. preperiod + period covers every orbit angle
        self.horizon = info.preperiod + info.period
        self.values = (self.z0,) + info.orbit
        if info.preperiod == 0:
            omega = set(info.orbit)
        else:
            omega = set(info.orbit[info.preperiod:])
        self.omega = frozenset(omega)
        # marked points: the critical point and its forward orbit
        self.marked = tuple(sorted(set(self.values)))

    def point(self, k: int) -> Fraction:
        """Angle standing for ``f^k(0)``."""
        if k == 0:
            return self.z0
        return double_n(self.puzzle.theta, k - 1)

    def in_critical(self, x: Fraction, depth: int) -> bool:
        return self.puzzle.agreement(x, self.z0) >= depth

    def first_return(self, x: Fraction, depth: int, limit: int | None = None) -> int | None:
        """Least ``r >= 1`` with ``2^r x`` in the critical piece of ``depth``."""
        limit = limit or (orbit_info(x).preperiod + orbit_info(x).period)
        y = angle(x)
        for r in range(1, limit + 1):
            y = double_n(y, 1)
            if self.in_critical(y, depth):
                return r
        return None


# -- depth one and the escape time ------------------------------------------


def depth1_structure(theta: Fraction, puzzle: Puzzle | None = None) -> dict:
    """The ``2p - 1`` depth-1 pieces with roles (critical, at α, at α')."""
    return (puzzle or Puzzle(theta)).depth1_structure()


def escape_time(theta: Fraction, puzzle: Puzzle | None = None) -> Escape | None:
    """First escape of the critical orbit through a piece attached to α'.

    Returns ``None`` when ``f^(kp) 0`` stays in the critical depth-1 piece for
    every ``k`` (immediate renormalization).
    """
    pz = puzzle or Puzzle(theta)
    roles = pz.depth1_structure()
    p = pz.p
    seen = set()
    t = 0
    while True:
        t += 1
        x = double_n(pz.theta, t * p - 1)
        if x in seen:
            return None
        seen.add(x)
        for nu, piece in roles["Z"].items():
            if piece.contains_angle(x):
                return Escape(t, nu)
        if not roles["critical"].contains_angle(x):
            raise PuzzleError(
                f"f^{t * p}(0) left the critical depth-1 piece without escaping"
            )


# -- the nest ---------------------------------------------------------------


def _cascades_from_returns(ls: Sequence[int], terminal: bool, n_levels: int) -> list[Cascade]:
    """Split levels ``0 .. n_levels-1`` into maximal cascades.

    Level ``k`` belongs to the cascade of the return map ``g_(k+1)``; levels
    with equal consecutive return times share a cascade.
    """
    ls = list(ls)
    if terminal and ls:
        # the last materialized level still returns with the same map
        ls.append(ls[-1])
    out: list[Cascade] = []
    start = 0
    k = 0
    while k < n_levels:
        lk = ls[k] if k < len(ls) else None
        end = k
        while end + 1 < n_levels and lk is not None and end + 1 < len(ls) and ls[end + 1] == lk:
            end += 1
        is_last = end + 1 >= n_levels
        out.append(Cascade(start, end - start + 1, lk, terminal and is_last))
        start = k = end + 1
    return out


def build_nest(
    theta: Fraction,
    max_levels: int = DEFAULT_MAX_LEVELS,
    tail: int = DEFAULT_TAIL,
    puzzle: Puzzle | None = None,
    stage: int = 0,
) -> NestReport:
    """Principal nest of the map with parameter angle ``theta``.

    ``tail`` extra levels of a terminal infinite cascade are materialized so
    that the vertical part of the return graph is visible.
    """
    pz = puzzle or Puzzle(theta)
    esc = escape_time(pz.theta, pz)
    if esc is None:
        return NestReport(
            pz.theta, pz.portrait, Verdict.IMMEDIATE, None, [], [], -1,
            dh_level=None, per=pz.p, stage=stage, puzzle=pz,
        )
    orbit = CriticalOrbit(pz)
    depths = [1 + esc.t * pz.p]
    ls: list[int] = []
    verdict = Verdict.TRUNCATED
    dh_level = None
    while len(depths) <= max_levels:
        d = depths[-1]
        l = next(
            (k for k in range(1, orbit.horizon + 1) if orbit.in_critical(orbit.point(k), d)),
            None,
        )
        if l is None:
            verdict = Verdict.NONRECURRENT
            break
        ls.append(l)
        depths.append(d + l)
        if pz.agreement(orbit.point(l), orbit.z0) == inf:
            verdict = Verdict.RENORMALIZABLE
            dh_level = len(ls) - 1
            for _ in range(tail):
                ls.append(l)
                depths.append(depths[-1] + l)
            break
    if verdict is Verdict.TRUNCATED:
        depths = depths[: max_levels + 1]
        ls = ls[:max_levels]

    levels = []
    for n, d in enumerate(depths):
        l = ls[n - 1] if n >= 1 else None
        central = n >= 1 and pz.agreement(orbit.point(l), orbit.z0) >= d
        levels.append(NestLevel(stage, n, d, l, central))
    levels = _attach_domains(pz, orbit, levels)

    terminal = verdict is Verdict.RENORMALIZABLE
    cascades = _cascades_from_returns(ls, terminal, len(levels))
    if verdict is Verdict.RENORMALIZABLE:
        height = len(cascades)
        per = ls[dh_level]
    else:
        height = None
        per = None
    return NestReport(
        pz.theta, pz.portrait, verdict, esc, levels, cascades, height,
        dh_level=dh_level, per=per, stage=stage, puzzle=pz,
    )


def _attach_domains(pz: Puzzle, orbit: CriticalOrbit, levels: list[NestLevel]) -> list[NestLevel]:
    """Fill in the first-return domains of every level after the top one."""
    out = [levels[0]]
    for n in range(1, len(levels)):
        prev_depth = levels[n - 1].depth
        here = levels[n]
        inside = [w for w in orbit.marked if orbit.in_critical(w, prev_depth)]
        groups: list[list[Fraction]] = []
        times: list[int] = []
        for w in inside:
            r = orbit.first_return(w, prev_depth)
            if r is None:
                continue
            for g, t in zip(groups, times):
                if t == r and pz.agreement(w, g[0]) >= prev_depth + r:
                    g.append(w)
                    break
            else:
                groups.append([w])
                times.append(r)
        crit_idx = next(i for i, g in enumerate(groups) if orbit.z0 in g)
        order = [crit_idx] + sorted(
            (i for i in range(len(groups)) if i != crit_idx),
            key=lambda i: (times[i], min(groups[i])),
        )
        domains = []
        for new_index, i in enumerate(order):
            rep = orbit.z0 if new_index == 0 else min(groups[i])
            if new_index == 0 and times[i] != here.l:
                raise PuzzleError(f"critical domain of level {n} has return {times[i]} != l")
            itinerary = None
            if n >= 2:
                itinerary = _itinerary(pz, orbit, out[n - 1], levels[n - 2].depth, rep)
            domains.append(
                ReturnDomain(
                    new_index, prev_depth + times[i], times[i], itinerary,
                    2 if new_index == 0 else 1, rep, tuple(sorted(groups[i])),
                )
            )
        out.append(NestLevel(here.m, here.n, here.depth, here.l, here.central, tuple(domains)))
    return out


def _itinerary(
    pz: Puzzle, orbit: CriticalOrbit, prev_level: NestLevel, prev_prev_depth: int, x: Fraction
) -> tuple[int, ...]:
    """Indices of previous-level domains visited by ``x`` until it is back in ``V^(n-1)``."""
    seq = [0]
    y = x
    while True:
        r = orbit.first_return(y, prev_prev_depth)
        if r is None:
            raise PuzzleError("orbit leaves the nest while computing an itinerary")
        y = double_n(y, r)
        idx = locate_domain(pz, prev_level, y)
        seq.append(idx)
        if idx == 0:
            return tuple(seq)
        if len(seq) > 4 * (orbit.horizon + 2):
            raise PuzzleError("itinerary does not close")


def locate_domain(pz: Puzzle, level: NestLevel, x: Fraction) -> int:
    for dom in level.domains:
        if pz.agreement(x, dom.representative) >= dom.depth:
            return dom.index
    raise PuzzleError(
        f"{format_angle(x)} lies in no marked domain of level {level.n}"
    )


def return_map(report: NestReport, n: int) -> tuple[ReturnDomain, ...]:
    """Domains of the ``n``-th first-return map meeting the marked set."""
    if not 1 <= n < len(report.levels):
        raise IndexError(f"level {n} is not in the nest")
    return report.levels[n].domains


def direct_time(report: NestReport, n_plus_1: int, index: int, m: int) -> int:
    """Return time of ``V^(n+1)_index`` to ``V^n`` under iterates of ``g_m``.

    Computed straight from the orbit of a marked point: count the visits of
    the ``f``-orbit to ``V^(m-1)`` up to the first return to ``V^n``.
    """
    pz = report.puzzle
    dom = report.levels[n_plus_1].domains[index]
    n = n_plus_1 - 1
    target = report.depth_of(n)
    gate = report.depth_of(m - 1)
    x = dom.representative
    count = 0
    for k in range(1, dom.return_time + 1):
        y = double_n(x, k)
        if m == 0 or pz.agreement(y, pz.critical_angle) >= gate:
            count += 1
    if pz.agreement(double_n(x, dom.return_time), pz.critical_angle) < target:
        raise PuzzleError("recorded return time does not land in the nest piece")
    return count


def nest_pieces_strictly_nested(report: NestReport, max_arcs: int = 1 << 14) -> list[tuple[int, bool]]:
    """For consecutive nest pieces, do boundary cut angles avoid each other?

    Levels whose pieces would exceed ``max_arcs`` arcs are skipped.
    """
    pz = report.puzzle
    out = []
    prev = None
    for lv in report.levels:
        if pz.critical_arc_count(lv.depth) > max_arcs:
            break
        piece = pz.critical_piece(lv.depth)
        if prev is not None:
            ok = prev.contains(piece) and not (prev.cuts & piece.cuts)
            out.append((lv.n, ok))
        prev = piece
    return out


def replay_count(
    report: NestReport,
    level: int,
    index: int,
    m: int,
    skip: frozenset = frozenset(),
) -> int:
    """Count ``f``-moments of ``V^level_index`` up to level ``m`` by replaying orbits.

    Every landing of the ``g_(k-1)``-orbit in a domain of level ``k-1`` is
    followed recursively until level ``m``.  Landings whose edge
    ``((k, j), (k-1, i))`` is in ``skip`` are dropped, which replays the
    reduced graph.  The cost grows with the count itself.
    """
    pz = report.puzzle
    orbit = CriticalOrbit(pz)

    def count(x: Fraction, k: int, j: int) -> int:
        if k == m:
            return 1
        if k == 1:
            r = orbit.first_return(x, report.depth_of(0))
            if r is None:
                raise PuzzleError("orbit never returns to the top piece")
            return 0 if ((1, j), (0, 0)) in skip else r
        gate = report.depth_of(k - 2)
        y, total = x, 0
        while True:
            r = orbit.first_return(y, gate)
            if r is None:
                raise PuzzleError("orbit leaves the nest during replay")
            y = double_n(y, r)
            i = locate_domain(pz, report.levels[k - 1], y)
            if ((k, j), (k - 1, i)) not in skip:
                total += count(y, k - 1, i)
            if i == 0:
                return total

    dom = report.levels[level].domains[index]
    return count(dom.representative, level, index)
