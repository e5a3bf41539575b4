"""Exact arithmetic on the circle R/Z under the doubling map.

Angles are plain :class:`fractions.Fraction` values reduced into ``[0, 1)``.
Everything here is pure and exact; no floating point is involved.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

from .errors import (
    NoPortraitFound,
    NotARotationCycle,
    NotInCopy,
    OnWakeBoundary,
    OrbitHitsAlpha,
    PuzzleError,
)

Angle = Fraction

#: default bound on the period searched by :func:`alpha_portrait`
PORTRAIT_BOUND = 24


def angle(x, den: int | None = None) -> Fraction:
    """Build a normalized angle from a number, a ``Fraction`` or ``"num/den"`` text."""
    if den is not None:
        if den == 0:
            raise ValueError("zero denominator")
        x = Fraction(x, den)
    elif isinstance(x, str):
        x = parse_angle(x)
    else:
        x = Fraction(x)
    return x - (x.numerator // x.denominator)


def parse_angle(text: str) -> Fraction:
    text = text.strip()
    if "/" in text:
        num, _, den = text.partition("/")
        if int(den) == 0:
            raise ValueError(f"zero denominator in angle {text!r}")
        value = Fraction(int(num), int(den))
    else:
        value = Fraction(int(text))
    return value - (value.numerator // value.denominator)


def format_angle(a: Fraction) -> str:
    a = angle(a)
    return f"{a.numerator}/{a.denominator}"


def double(a: Fraction) -> Fraction:
    a = 2 * a
    return a - (a.numerator // a.denominator)


def double_n(a: Fraction, n: int) -> Fraction:
    """``2**n * a mod 1`` without building a huge numerator."""
    den = a.denominator
    return Fraction(a.numerator * pow(2, n, den) % den, den)


def halves(a: Fraction) -> tuple[Fraction, Fraction]:
    """The two preimages of ``a`` under doubling, smaller one first."""
    a = angle(a)
    return a / 2, a / 2 + Fraction(1, 2)


def in_open_arc(x: Fraction, lo: Fraction, hi: Fraction) -> bool:
    """Is ``x`` in the counterclockwise open arc from ``lo`` to ``hi``?

    ``hi`` may exceed 1 to denote an arc through 0; ``lo == hi`` is empty.
    """
    x = angle(x)
    lo_n = angle(lo)
    span = hi - lo
    if span <= 0:
        return False
    d = angle(x - lo_n)
    return 0 < d < span


@dataclass(frozen=True)
class OrbitInfo:
    preperiod: int
    period: int
    orbit: tuple[Fraction, ...]


def orbit_info(a: Fraction) -> OrbitInfo:
    """Minimal preperiod and period of ``a`` under doubling."""
    a = angle(a)
    seen: dict[Fraction, int] = {}
    orbit: list[Fraction] = []
    x = a
    while x not in seen:
        seen[x] = len(orbit)
        orbit.append(x)
        x = double(x)
    pre = seen[x]
    return OrbitInfo(pre, len(orbit) - pre, tuple(orbit))


def binary_expansion(a: Fraction) -> tuple[str, str]:
    """Return ``(prefix, repetend)`` of the binary expansion of ``a``.

    The expansion is the one produced by iterating doubling, so dyadic
    rationals end in a repeating ``0``.  Works on the integer numerator so
    that long periods stay cheap.
    """
    a = angle(a)
    den = a.denominator
    pre = (den & -den).bit_length() - 1
    x = a.numerator
    bits = []

    def step():
        nonlocal x
        x *= 2
        if x >= den:
            x -= den
            bits.append("1")
        else:
            bits.append("0")

    for _ in range(pre):
        step()
    start = x
    step()
    while x != start:
        step()
    return "".join(bits[:pre]), "".join(bits[pre:])


def from_binary(prefix: str, repetend: str) -> Fraction:
    """Inverse of :func:`binary_expansion` (``repetend`` must be non-empty)."""
    head = Fraction(int(prefix, 2), 2 ** len(prefix)) if prefix else Fraction(0)
    k = len(repetend)
    tail = Fraction(int(repetend, 2), (2**k - 1) * 2 ** len(prefix))
    return angle(head + tail)


def _circular_order(cycle: Iterable[Fraction]) -> list[Fraction]:
    return sorted(angle(x) for x in cycle)


def rotation_number(cycle: Sequence[Fraction]) -> Fraction:
    """Combinatorial rotation number ``q/p`` of a doubling cycle.

    Raises :class:`NotARotationCycle` if doubling does not advance every
    element by the same number of positions in circular order.
    """
    ordered = _circular_order(cycle)
    p = len(ordered)
    if p == 0 or len(set(ordered)) != p:
        raise NotARotationCycle("cycle must hold distinct angles")
    pos = {x: i for i, x in enumerate(ordered)}
    offsets = set()
    for i, x in enumerate(ordered):
        y = double(x)
        if y not in pos:
            raise NotARotationCycle(f"{format_angle(x)} doubles outside the cycle")
        offsets.add((pos[y] - i) % p)
    if len(offsets) != 1:
        raise NotARotationCycle(
            "offsets under doubling disagree: " + ",".join(map(str, sorted(offsets)))
        )
    return Fraction(offsets.pop(), p)


@dataclass(frozen=True)
class Portrait:
    """Rays landing at the dividing fixed point, in circular order.

    ``characteristic_arc`` is the shortest complementary arc; it contains
    the angle of the critical value.
    """

    p: int
    q: int
    cycle: tuple[Fraction, ...]
    characteristic_arc: tuple[Fraction, Fraction]

    @property
    def coalpha_angles(self) -> tuple[Fraction, ...]:
        return tuple(angle(x + Fraction(1, 2)) for x in self.cycle)

    @property
    def rotation(self) -> Fraction:
        return Fraction(self.q, self.p)

    @property
    def root_pair(self) -> tuple[Fraction, Fraction]:
        return self.characteristic_arc


def _rotation_cycle_through(a: Fraction, p: int) -> tuple[Fraction, ...] | None:
    info = orbit_info(a)
    if info.preperiod or info.period != p:
        return None
    try:
        rotation_number(info.orbit)
    except NotARotationCycle:
        return None
    return tuple(sorted(info.orbit))


def _wake_at(theta: Fraction, p: int):
    """Locate ``theta`` relative to the period-``p`` rotation-cycle wakes.

    Returns ``("inside", portrait)``, ``("boundary", portrait)`` or ``None``.
    Only the two period-``p`` angles adjacent to ``theta`` can bound a wake
    containing it, since every characteristic arc has width ``1/(2**p - 1)``.
    """
    den = 2**p - 1
    k = theta.numerator * den // theta.denominator
    exact = theta * den == k
    candidates = [(k - 1, k), (k, k + 1)] if exact else [(k, k + 1)]
    for lo_k, hi_k in candidates:
        lo, hi = Fraction(lo_k % den, den), Fraction(hi_k % den, den)
        cyc = _rotation_cycle_through(lo, p)
        if cyc is None or hi not in cyc:
            continue
        q = int(rotation_number(cyc) * p)
        portrait = Portrait(p, q, cyc, (lo, lo + Fraction(1, den)))
        if exact:
            return "boundary", portrait
        return "inside", portrait
    return None


def find_wake(theta: Fraction, bound: int = PORTRAIT_BOUND) -> Portrait:
    """Portrait whose characteristic arc contains ``theta``, without the orbit check."""
    theta = angle(theta)
    found = []
    for p in range(2, bound + 1):
        hit = _wake_at(theta, p)
        if hit is None:
            continue
        kind, portrait = hit
        if kind == "boundary":
            raise OnWakeBoundary(
                f"{format_angle(theta)} bounds the {portrait.q}/{portrait.p} wake",
                portrait=portrait,
            )
        found.append(portrait)
    if not found:
        raise NoPortraitFound(f"no wake with p <= {bound} contains {format_angle(theta)}")
    if len(found) > 1:
        # primary wakes are pairwise disjoint; reaching this is a defect
        raise PuzzleError(
            f"{format_angle(theta)} lies in several primary wakes: "
            + ", ".join(f"{w.q}/{w.p}" for w in found)
        )
    return found[0]


def alpha_portrait(theta: Fraction, bound: int = PORTRAIT_BOUND) -> Portrait:
    """Rays portrait of the dividing fixed point for parameter angle ``theta``."""
    theta = angle(theta)
    portrait = find_wake(theta, bound)
    cycle = set(portrait.cycle)
    if any(x in cycle for x in orbit_info(theta).orbit):
        raise OrbitHitsAlpha(
            f"orbit of {format_angle(theta)} lands on the alpha cycle", portrait=portrait
        )
    return portrait


def enumerate_rotation_cycles(p: int) -> list[tuple[Fraction, ...]]:
    """Brute-force list of period-``p`` rotation cycles (one per admissible ``q``)."""
    den = 2**p - 1
    seen: set[Fraction] = set()
    cycles = []
    for k in range(1, den):
        a = Fraction(k, den)
        if a in seen:
            continue
        info = orbit_info(a)
        seen.update(info.orbit)
        if info.period != p:
            continue
        try:
            rotation_number(info.orbit)
        except NotARotationCycle:
            continue
        cycles.append(tuple(sorted(info.orbit)))
    return cycles


# -- tuning ----------------------------------------------------------------


def _root_words(root_pair: tuple[Fraction, Fraction]) -> tuple[str, str]:
    a, b = (angle(x) for x in root_pair)
    pa, wa = binary_expansion(a)
    pb, wb = binary_expansion(b)
    if pa or pb:
        raise ValueError("root angles must be periodic")
    n = max(len(wa), len(wb))
    if n % len(wa) or n % len(wb):
        raise ValueError("root angles must share a period")
    return wa * (n // len(wa)), wb * (n // len(wb))


def tune(theta_prime: Fraction, root_pair: tuple[Fraction, Fraction]) -> Fraction:
    """Replace the bits 0/1 of ``theta_prime`` by the root words of ``root_pair``."""
    w0, w1 = _root_words(root_pair)
    prefix, rep = binary_expansion(angle(theta_prime))
    sub = {"0": w0, "1": w1}
    return from_binary("".join(sub[b] for b in prefix), "".join(sub[b] for b in rep))


def untune(theta: Fraction, root_pair: tuple[Fraction, Fraction]) -> Fraction:
    """Inverse of :func:`tune`; raises :class:`NotInCopy` if the blocks do not parse."""
    w0, w1 = _root_words(root_pair)
    n = len(w0)
    theta = angle(theta)
    prefix, rep = binary_expansion(theta)
    P, R = len(prefix), len(rep)

    # long enough for a block starting anywhere before the second repetend
    seq = prefix + rep * (n // R + 2)

    # a position in the expansion is an angle of the orbit; in the periodic
    # part positions are identified modulo the (minimal) period
    pos: dict[int, int] = {}
    symbols: list[str] = []
    i = 0
    while True:
        key = i if i < P else P + (i - P) % R
        if key in pos:
            break
        pos[key] = len(symbols)
        block = seq[key : key + n]
        if block == w0:
            symbols.append("0")
        elif block == w1:
            symbols.append("1")
        else:
            raise NotInCopy(
                f"{format_angle(theta)} has block {block} outside {{{w0}, {w1}}}"
            )
        i += n
    start = pos[key]
    return from_binary("".join(symbols[:start]), "".join(symbols[start:]))


def primary_root_pair(q: int, p: int) -> tuple[Fraction, Fraction]:
    """Root angles of the ``q/p`` satellite of the main cardioid."""
    if gcd(q, p) != 1 or not 0 < q < p:
        raise ValueError(f"{q}/{p} is not a reduced rotation number")
    for cyc in enumerate_rotation_cycles(p):
        if int(rotation_number(cyc) * p) == q:
            ordered = sorted(cyc)
            for i, x in enumerate(ordered):
                y = ordered[(i + 1) % p]
                if angle(y - x) == Fraction(1, 2**p - 1):
                    return x, y
    raise AssertionError("rotation cycle without a characteristic arc")


#: small built-in table of primary-limb root pairs keyed by rotation number
PRIMARY_ROOT_PAIRS: dict[Fraction, tuple[Fraction, Fraction]] = {
    Fraction(q, p): primary_root_pair(q, p)
    for p in range(2, 8)
    for q in range(1, p)
    if gcd(q, p) == 1
}


@dataclass(frozen=True)
class LimbAddress:
    primary: Fraction
    secondary: Fraction | None = None

    def __str__(self) -> str:
        s = f"{self.primary.numerator}/{self.primary.denominator}"
        if self.secondary is not None:
            s += f" > {self.secondary.numerator}/{self.secondary.denominator}"
        return s


def classify_limb(theta: Fraction, bound: int = PORTRAIT_BOUND) -> LimbAddress:
    """Primary limb of ``theta`` and, inside the satellite copy, its secondary limb."""
    portrait = alpha_portrait(theta, bound)
    primary = portrait.rotation
    try:
        inner = untune(theta, portrait.root_pair)
    except NotInCopy:
        return LimbAddress(primary)
    if inner == 0:
        return LimbAddress(primary)
    try:
        secondary = find_wake(inner, bound).rotation
    except OnWakeBoundary as exc:
        secondary = exc.portrait.rotation
    except NoPortraitFound:
        return LimbAddress(primary)
    return LimbAddress(primary, secondary)
