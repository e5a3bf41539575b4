"""Douady-Hubbard renormalization and the full principal nest.

The first renormalization is identified by a root pair of angles: the two
rays bounding the little Julia set around the critical value.  Untuning
against that pair gives the angle of the renormalized map, whose own nest is
the next stage of the full principal nest.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor, inf
from typing import Iterable

from .angles import (
    LimbAddress,
    PORTRAIT_BOUND,
    angle,
    classify_limb,
    double_n,
    format_angle,
    orbit_info,
    untune,
)
from .errors import (
    CombinatorialRejection,
    NoPortraitFound,
    NotInCopy,
    OnWakeBoundary,
    PuzzleError,
)
from .nest import DEFAULT_MAX_LEVELS, NestReport, Verdict, build_nest
from .puzzle import Puzzle

#: brute-force scan limit (number of period-``L`` angles) for the fallback
FALLBACK_LIMIT = 1 << 22


class CopyIdentificationFailed(PuzzleError):
    pass


class StageNotRenormalizable(CombinatorialRejection):
    pass


@dataclass(frozen=True)
class Renormalization:
    """Result of one renormalization step.

    ``root_pair`` bounds the copy, ``theta_prime`` is the untuned angle and
    ``per`` the ``f``-return time of the renormalization domain.
    """

    theta: Fraction
    theta_prime: Fraction
    root_pair: tuple[Fraction, Fraction]
    per: int
    immediate: bool


def _period_angles_in(arcs: Iterable[tuple[Fraction, Fraction]], L: int) -> list[Fraction]:
    den = 2**L - 1
    out = []
    for lo, hi in arcs:
        for k in range(ceil(lo * den), floor(hi * den) + 1):
            out.append(angle(k, den))
    return out


def copy_root_pair(report: NestReport) -> tuple[Fraction, Fraction]:
    """Root angles of the copy found by a terminal cascade.

    The candidates are the angles of period ``L`` (the cascade return time)
    sharing every puzzle piece with the critical value; the root pair is the
    outermost two.  The search is restricted to the critical-value piece just
    above the renormalization level, with a full scan as fallback.
    """
    if report.verdict is not Verdict.RENORMALIZABLE:
        raise CopyIdentificationFailed("no terminal cascade to read a copy from")
    pz = report.puzzle
    L = report.per
    theta = pz.theta
    depth = report.levels[report.dh_level].depth
    piece = pz.piece_of(theta, max(depth - 1, 0))

    def admissible(xs):
        return sorted(
            x for x in set(xs) if orbit_info(x).period == L and pz.agreement(x, theta) == inf
        )

    found = admissible(_period_angles_in(piece.arcs, L))
    if len(found) < 2:
        if 2**L > FALLBACK_LIMIT:
            raise CopyIdentificationFailed(
                f"{len(found)} root candidates of period {L} near {format_angle(theta)}",
                candidates=found,
            )
        found = admissible(angle(k, 2**L - 1) for k in range(1, 2**L - 1))
    if len(found) < 2:
        raise CopyIdentificationFailed(
            f"no root pair of period {L} for {format_angle(theta)}", candidates=found
        )
    return found[0], found[-1]


def renormalize(theta: Fraction | NestReport) -> Renormalization:
    """Angle combinatorics of the first renormalization."""
    report = theta if isinstance(theta, NestReport) else build_nest(angle(theta))
    if report.verdict is Verdict.IMMEDIATE:
        pair = report.portrait.root_pair
        per = report.portrait.p
        immediate = True
    elif report.verdict is Verdict.RENORMALIZABLE:
        pair = copy_root_pair(report)
        per = report.per
        immediate = False
    else:
        raise StageNotRenormalizable(
            f"{format_angle(report.theta)} is {report.verdict.value}", verdict=report.verdict
        )
    try:
        inner = untune(report.theta, pair)
    except NotInCopy as exc:
        raise CopyIdentificationFailed(
            f"{format_angle(report.theta)} does not untune against "
            f"({format_angle(pair[0])}, {format_angle(pair[1])})",
            root_pair=pair,
        ) from exc
    return Renormalization(report.theta, inner, pair, per, immediate)


@dataclass
class FullNest:
    """Chain of renormalization stages.

    ``stages[m]`` is the nest of ``R^m f``; ``renorms[m]`` links it to the
    next stage.  ``stop`` says why the chain ended.
    """

    theta: Fraction
    stages: list[NestReport]
    renorms: list[Renormalization]
    stop: str
    per: int | None
    thetas: list[Fraction] = field(default_factory=list)

    @property
    def verdict(self) -> Verdict:
        return self.stages[0].verdict

    def to_json(self) -> dict:
        return {
            "theta": format_angle(self.theta),
            "stop": self.stop,
            "per": self.per,
            "thetas": [format_angle(t) for t in self.thetas],
            "root_pairs": [[format_angle(a) for a in r.root_pair] for r in self.renorms],
            "stages": [s.to_json() for s in self.stages],
        }


def full_nest(
    theta: Fraction, stages: int = 8, max_levels: int = DEFAULT_MAX_LEVELS
) -> FullNest:
    """Concatenate the principal nests of ``f, Rf, R^2 f, ...``.

    The chain stops at a non-renormalizable stage, at the cusp angle ``0``,
    at a parabolic root angle (counted as one more satellite step), or
    after ``stages`` stages.  ``per`` is the product of the stage periods when
    the last stage is renormalizable or ends at a root.
    """
    theta = angle(theta)
    reports: list[NestReport] = []
    renorms: list[Renormalization] = []
    thetas = [theta]
    per = 1
    stop = "max stages"
    current = theta
    for m in range(stages):
        try:
            pz = Puzzle(current)
        except OnWakeBoundary as exc:
            # a root angle: one more satellite period, then nothing is left
            if m == 0:
                raise
            per *= exc.portrait.p
            stop = "parabolic root"
            break
        except NoPortraitFound:
            stop = "no portrait"
            break
        rep = build_nest(current, max_levels=max_levels, puzzle=pz, stage=m)
        reports.append(rep)
        if rep.verdict not in (Verdict.IMMEDIATE, Verdict.RENORMALIZABLE):
            stop = rep.verdict.value
            per = None
            break
        r = renormalize(rep)
        renorms.append(r)
        per *= r.per
        current = r.theta_prime
        thetas.append(current)
        if current == 0:
            stop = "main cardioid"
            break
    return FullNest(theta, reports, renorms, stop, per, thetas)


# -- special families -------------------------------------------------------


TAU_KINDS = ("height", "reduced_period")


def tau_value(theta: Fraction, kind: str) -> int | None:
    """Height or reduced period of ``theta`` (``None`` when undefined)."""
    if kind == "height":
        return build_nest(angle(theta)).height
    if kind == "reduced_period":
        from .graph import build_graph, reduced_period

        chain = full_nest(theta)
        if chain.per is None:
            return None
        return reduced_period(build_graph(chain.stages))
    raise ValueError(f"unknown tau {kind!r}; expected one of {TAU_KINDS}")


@dataclass
class FamilyFilter:
    groups: dict[str, list[Fraction]]
    values: dict[Fraction, int | None]
    diagnostics: dict[Fraction, str]


def special_family_filter(
    thetas: Iterable[Fraction], tau: str, bound: int, portrait_bound: int = PORTRAIT_BOUND
) -> FamilyFilter:
    """Angles whose ``tau`` is at least ``bound``, grouped by limb address.

    A bound of ``0`` or less keeps every classifiable angle.  Per-angle
    failures are collected in ``diagnostics`` instead of being raised.
    """
    groups: dict[str, list[Fraction]] = {}
    values: dict[Fraction, int | None] = {}
    diagnostics: dict[Fraction, str] = {}
    for t in thetas:
        t = angle(t)
        try:
            address: LimbAddress = classify_limb(t, portrait_bound)
            value = tau_value(t, tau) if bound > 0 else None
        except PuzzleError as exc:
            diagnostics[t] = f"{type(exc).__name__}: {exc}"
            continue
        values[t] = value
        if bound > 0 and (value is None or value < bound):
            continue
        groups.setdefault(str(address), []).append(t)
    return FamilyFilter(groups, values, diagnostics)
