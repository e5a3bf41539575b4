"""Graded return graph of the principal nest.

Vertices of level ``n`` are the first-return domains of that level (the
critical one has index 0).  A vertex of level ``n+1`` is joined to a vertex
``i`` of level ``n`` by as many edges as ``i`` occurs in its itinerary; a
level-1 vertex is joined to the top vertex by its ``f``-return time.  Path
counts are exact Python integers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .angles import double_n, format_angle
from .errors import PuzzleError
from .nest import Cascade, NestReport, Verdict

Vertex = tuple[int, int]  # (global level, index)


class NotRenormalizable(PuzzleError):
    pass


class NoPathToCritical(PuzzleError):
    pass


class PullbackUnsupported(PuzzleError):
    """The path leaves one stage or runs through an immediate stage."""


@dataclass(frozen=True)
class ReturnGraph:
    """Immutable graded multigraph.

    ``up[v]`` lists ``(u, multiplicity)`` for the edges from ``v`` to the
    level above.  ``stage_of[n]`` and ``local_level[n]`` map a global level to
    the renormalization stage and the level inside that stage's nest.
    """

    levels: tuple[tuple[int, ...], ...]
    up: dict[Vertex, tuple[tuple[Vertex, int], ...]]
    cascades: tuple[Cascade, ...]
    stage_of: tuple[int, ...]
    local_level: tuple[int, ...]
    central: tuple[bool, ...]
    bottom: Vertex | None
    reduced: bool = False
    removed: frozenset[tuple[Vertex, Vertex]] = frozenset()
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def vertices(self) -> list[Vertex]:
        return [(n, j) for n, idx in enumerate(self.levels) for j in idx]

    @property
    def edge_count(self) -> int:
        return sum(mult for edges in self.up.values() for _, mult in edges)

    def edges(self) -> list[tuple[Vertex, Vertex, int]]:
        return [(v, u, k) for v in sorted(self.up) for u, k in self.up[v]]

    def depth(self) -> int:
        return len(self.levels) - 1


def _stage_edges(nest: NestReport, offset: int, last_level: int) -> dict[Vertex, list[tuple[Vertex, int]]]:
    up: dict[Vertex, list[tuple[Vertex, int]]] = {}
    for n in range(1, last_level + 1):
        for dom in nest.levels[n].domains:
            v = (offset + n, dom.index)
            if n == 1:
                up[v] = [((offset, 0), dom.return_time)]
                continue
            counts: dict[int, int] = {}
            for i in dom.itinerary[1:]:
                counts[i] = counts.get(i, 0) + 1
            up[v] = [((offset + n - 1, i), k) for i, k in sorted(counts.items())]
    return up


def build_graph(nest: NestReport | Sequence[NestReport]) -> ReturnGraph:
    """Return graph of a nest, or of a chain of renormalization stages.

    For a chain, every non-final stage is cut just below its DH level and its
    bottom vertex is joined by one edge to the top of the next stage.  An
    immediately renormalizable stage contributes the top piece and the
    critical depth-1 piece joined by ``p`` edges.
    """
    stages = [nest] if isinstance(nest, NestReport) else list(nest)
    if not stages:
        raise ValueError("no nest given")
    levels: list[tuple[int, ...]] = []
    up: dict[Vertex, list[tuple[Vertex, int]]] = {}
    cascades: list[Cascade] = []
    stage_of: list[int] = []
    local: list[int] = []
    central: list[bool] = []
    bottom: Vertex | None = None
    for s, st in enumerate(stages):
        offset = len(levels)
        final = s == len(stages) - 1
        if offset:
            # join the top of this stage to the bottom of the previous one
            up[(offset, 0)] = [(bottom, 1)]
        if st.verdict is Verdict.IMMEDIATE:
            levels += [(0,), (0,)]
            stage_of += [s, s]
            local += [0, 1]
            central += [False, True]
            up[(offset + 1, 0)] = [((offset, 0), st.per)]
            cascades.append(Cascade(offset, 2, st.per, terminal=True))
            bottom = (offset + 1, 0)
            continue
        if final or st.dh_level is None:
            last = len(st.levels) - 1
        else:
            last = st.dh_level + 1
        for n in range(last + 1):
            lv = st.levels[n]
            levels.append(tuple(d.index for d in lv.domains) if n else (0,))
            stage_of.append(s)
            local.append(n)
            central.append(lv.central)
        stage_up = _stage_edges(st, offset, last)
        if offset:
            stage_up.pop((offset, 0), None)
        up.update(stage_up)
        for c in st.cascades:
            if c.start > last:
                continue
            length = min(c.length, last - c.start + 1)
            cascades.append(Cascade(offset + c.start, length, c.l, c.terminal))
        bottom = (offset + st.dh_level + 1, 0) if st.dh_level is not None else None
    frozen = {v: tuple(e) for v, e in up.items()}
    return ReturnGraph(
        tuple(levels), frozen, tuple(cascades), tuple(stage_of), tuple(local),
        tuple(central), bottom, meta={"stages": tuple(stages)},
    )


def _path_counter(graph: ReturnGraph, m: int):
    @lru_cache(maxsize=None)
    def count(v: Vertex) -> int:
        if v[0] == m:
            return 1
        return sum(k * count(u) for u, k in graph.up.get(v, ()))

    return count


def time_of(graph: ReturnGraph, vertex: Vertex, m: int) -> int:
    """Number of upward paths from ``vertex`` to level ``m``."""
    if m > vertex[0]:
        raise ValueError("target level lies below the vertex")
    return _path_counter(graph, m)(vertex)


def period(graph: ReturnGraph) -> int:
    """Total number of paths from the bottom vertex to the top."""
    if graph.bottom is None:
        raise NotRenormalizable("the nest has no renormalization level")
    return time_of(graph, graph.bottom, 0)


def reduce(graph: ReturnGraph) -> ReturnGraph:
    """Drop the edges that record landings on intermediate cascade levels.

    Inside a cascade ``V^m ⊃ ... ⊃ V^(m+N)`` with ``N >= 2`` the edges from
    non-critical ``V^(k+1)_j`` to the critical ``V^k_0`` are removed for
    ``k = m+1 .. m+N-1``.
    """
    removed = set()
    for c in graph.cascades:
        if c.length < 2:
            continue
        m, N = c.start, c.length
        for k in range(m + 1, m + N):
            if k + 1 >= len(graph.levels):
                break
            for j in graph.levels[k + 1]:
                if j == 0:
                    continue
                v = (k + 1, j)
                for u, _ in graph.up.get(v, ()):
                    if u == (k, 0):
                        removed.add((v, u))
    up = {
        v: tuple((u, k) for u, k in edges if (v, u) not in removed)
        for v, edges in graph.up.items()
    }
    return ReturnGraph(
        graph.levels, up, graph.cascades, graph.stage_of, graph.local_level,
        graph.central, graph.bottom, True, frozenset(removed), dict(graph.meta),
    )


def reduced_period(graph: ReturnGraph) -> int:
    return period(graph if graph.reduced else reduce(graph))


# -- rank and pull-backs ----------------------------------------------------


def _down_edges(graph: ReturnGraph) -> dict[Vertex, list[tuple[Vertex, int]]]:
    down: dict[Vertex, list[tuple[Vertex, int]]] = {}
    for v, edges in graph.up.items():
        for u, k in edges:
            down.setdefault(u, []).append((v, k))
    return down


def shortest_path_to_critical(graph: ReturnGraph, vertex: Vertex) -> list[Vertex]:
    """Downward path from ``vertex`` to a critical vertex minimizing non-central levels.

    Ties are broken by length and then by vertex order, so the result is
    deterministic.
    """
    if vertex[1] == 0:
        return [vertex]
    down = _down_edges(graph)
    import heapq

    heap = [(0, 0, [vertex])]
    best: dict[Vertex, tuple[int, int]] = {}
    while heap:
        cost, length, path = heapq.heappop(heap)
        v = path[-1]
        if v[1] == 0:
            return path
        if best.get(v, (1 << 60, 0)) <= (cost, length):
            continue
        best[v] = (cost, length)
        for w, _ in sorted(down.get(v, ())):
            step = 0 if graph.central[w[0]] else 1
            heapq.heappush(heap, (cost + step, length + 1, path + [w]))
    raise NoPathToCritical(f"no downward path from {vertex} to a critical vertex")


def rank(graph: ReturnGraph, vertex: Vertex) -> int:
    """Non-central levels on the best downward path to a critical piece."""
    path = shortest_path_to_critical(graph, vertex)
    return sum(0 if graph.central[v[0]] else 1 for v in path[1:])


@dataclass(frozen=True)
class PulledPiece:
    """A puzzle piece given by a marked angle inside it and its depth."""

    level: int
    representative: Fraction
    depth: int
    degree: int


def _stage_for(graph: ReturnGraph, path: Sequence[Vertex]) -> tuple[NestReport, int]:
    stages = graph.meta.get("stages")
    if not stages:
        raise PullbackUnsupported("graph carries no nest to pull back in")
    s = graph.stage_of[path[0][0]]
    if any(graph.stage_of[v[0]] != s for v in path):
        raise PullbackUnsupported("pull-backs across renormalization stages are not supported")
    if stages[s].verdict is Verdict.IMMEDIATE:
        raise PullbackUnsupported("an immediately renormalizable stage has no nest to pull back in")
    return stages[s], path[0][0] - graph.local_level[path[0][0]]


def _vertex_piece(report: NestReport, n: int, j: int) -> tuple[Fraction, int]:
    if n == 0:
        return report.puzzle.critical_angle, report.depth_of(0)
    dom = report.levels[n].domains[j]
    return dom.representative, dom.depth


def pull_back_along(
    graph: ReturnGraph, path: Sequence[Vertex], D: tuple[Fraction, int] | None = None
) -> PulledPiece:
    """Pull a piece ``D`` back along a downward path of the graph.

    ``D`` is given as ``(angle, depth)`` and defaults to the first vertex's
    own piece.  Along the edge ``V^n_i -> V^(n+1)_j`` the piece is pulled back
    by ``g_n^t`` with ``t`` the first moment ``g_n^t V^(n+1)_j ⊂ V^n_i``.
    The degree of the composed map is accumulated exactly.
    """
    path = list(path)
    if not path:
        raise ValueError("empty path")
    report, offset = _stage_for(graph, path)
    pz = report.puzzle
    z0 = pz.critical_angle
    n0, i0 = path[0][0] - offset, path[0][1]
    rep, depth = D if D is not None else _vertex_piece(report, n0, i0)
    degree = 1
    for (na, i), (nb, j) in zip(path, path[1:]):
        n, n1 = na - offset, nb - offset
        if n1 != n + 1:
            raise ValueError("paths go down one level per edge")
        x, _ = _vertex_piece(report, n1, j)
        total = _first_landing(report, n, i, x)
        if pz.agreement(double_n(x, total), rep) < depth:
            raise PuzzleError(f"edge {(na, i)} -> {(nb, j)} does not land in the piece")
        new_depth = depth + total
        crit = sum(
            1 for k in range(total) if pz.agreement(double_n(x, k), z0) >= new_depth - k
        )
        degree *= 2**crit
        rep, depth = x, new_depth
    return PulledPiece(path[-1][0], rep, depth, degree)


def _first_landing(report: NestReport, n: int, i: int, x: Fraction) -> int:
    """``f``-time of the first ``g_n`` iterate of ``x`` inside ``V^n_i``."""
    from .nest import CriticalOrbit, locate_domain

    pz = report.puzzle
    orbit = CriticalOrbit(pz)
    y, total = x, 0
    for _ in range(4 * (orbit.horizon + 2)):
        if n == 0:
            r = orbit.first_return(y, report.depth_of(0))
        else:
            r = orbit.first_return(y, report.depth_of(n - 1))
        if r is None:
            break
        y = double_n(y, r)
        total += r
        if n == 0 or locate_domain(pz, report.levels[n], y) == i:
            return total
    raise PuzzleError(f"orbit of {format_angle(x)} never enters V^{n}_{i}")


def sandwich_holds(graph: ReturnGraph, vertex: Vertex) -> tuple[bool, list[Vertex], PulledPiece]:
    """Check ``V^(n+t) ⊂ D^(n+t) ⊂ V^(n+t-1)`` with a degree-2 covering.

    ``D^n`` is the vertex's piece and the path is the shortest one down to a
    critical piece (for a critical vertex, the edge to the next critical one).
    """
    path = shortest_path_to_critical(graph, vertex)
    if len(path) == 1:
        nxt = (vertex[0] + 1, 0)
        if nxt[0] >= len(graph.levels):
            raise NoPathToCritical(f"{vertex} is on the last level")
        path = [vertex, nxt]
    report, offset = _stage_for(graph, path)
    pz = report.puzzle
    piece = pull_back_along(graph, path)
    n = path[-1][0] - offset
    a = pz.agreement(piece.representative, pz.critical_angle)
    inner = report.depth_of(n)
    outer = report.depth_of(n - 1)
    ok = outer <= piece.depth <= inner and a >= piece.depth and piece.degree == 2
    return ok, path, piece


# -- export -----------------------------------------------------------------


def to_json(graph: ReturnGraph) -> dict:
    return {
        "reduced": graph.reduced,
        "levels": [list(idx) for idx in graph.levels],
        "stage_of": list(graph.stage_of),
        "local_level": list(graph.local_level),
        "central": list(graph.central),
        "bottom": None if graph.bottom is None else list(graph.bottom),
        "edges": [
            {"from": list(v), "to": list(u), "multiplicity": k} for v, u, k in graph.edges()
        ],
        "cascades": [
            {"start": c.start, "length": c.length, "l": c.l, "terminal": c.terminal}
            for c in graph.cascades
        ],
    }


def export_dot(graph: ReturnGraph, mode: str = "full") -> str:
    """Graded DOT text; ``mode`` is ``"full"`` or ``"reduced"``."""
    if mode not in ("full", "reduced"):
        raise ValueError(f"unknown mode {mode!r}")
    g = reduce(graph) if mode == "reduced" and not graph.reduced else graph
    name = "return_graph_reduced" if mode == "reduced" else "return_graph"
    lines = [f"digraph {name} {{", "  rankdir=BT;", "  node [shape=circle];"]
    for ci, c in enumerate(g.cascades):
        members = [n for n in c.levels if n < len(g.levels)]
        if not members:
            continue
        lines.append(f"  subgraph cluster_cascade_{ci} {{")
        lines.append(f'    label="cascade l={c.l}{" (terminal)" if c.terminal else ""}";')
        for n in members:
            for j in g.levels[n]:
                lines.append(f"    {_node(n, j)};")
        lines.append("  }")
    for n, idx in enumerate(g.levels):
        for j in idx:
            style = ' style=filled fillcolor="#f4c542"' if j == 0 else ""
            lines.append(f'  {_node(n, j)} [label="V{n}_{j}"{style}];')
    for v, u, k in g.edges():
        lines.append(f'  {_node(*v)} -> {_node(*u)} [label="{k}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _node(n: int, j: int) -> str:
    return f"v{n}_{j}"
