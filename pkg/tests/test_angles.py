from fractions import Fraction as F

import pytest
from hypothesis import assume, given, strategies as st

from puzzle_forge.angles import (
    PRIMARY_ROOT_PAIRS,
    alpha_portrait,
    angle,
    binary_expansion,
    classify_limb,
    double,
    enumerate_rotation_cycles,
    find_wake,
    format_angle,
    from_binary,
    halves,
    orbit_info,
    parse_angle,
    primary_root_pair,
    rotation_number,
    tune,
    untune,
)
from puzzle_forge.errors import (
    NoPortraitFound,
    NotARotationCycle,
    NotInCopy,
    OnWakeBoundary,
    OrbitHitsAlpha,
)

from oracles import binary_digits, doubling_orbit, portrait_of, rotation_cycles, tune_by_words
from strategies import eventually_periodic, periodic_angles, rationals


def test_double_examples():
    assert double(F(1, 3)) == F(2, 3)
    assert double(F(2, 3)) == F(1, 3)
    assert double(F(0)) == 0


def test_halves_examples():
    assert halves(F(1, 3)) == (F(1, 6), F(2, 3))
    assert halves(F(0)) == (0, F(1, 2))
    assert halves(F(3, 7)) == (F(3, 14), F(5, 7))


@given(rationals())
def test_double_of_halves_is_identity(a):
    for h in halves(a):
        assert double(h) == a


def test_parse_and_format():
    assert parse_angle("6/14") == F(3, 7)
    assert parse_angle(" 9/7 ") == F(2, 7)
    assert format_angle(F(4, 8)) == "1/2"
    with pytest.raises(ValueError):
        parse_angle("1/0")
    assert angle(5, 3) == F(2, 3)


def test_orbit_info_examples():
    o = orbit_info(F(1, 7))
    assert (o.preperiod, o.period, o.orbit) == (0, 3, (F(1, 7), F(2, 7), F(4, 7)))
    o = orbit_info(F(1, 6))
    assert (o.preperiod, o.period, o.orbit) == (1, 2, (F(1, 6), F(1, 3), F(2, 3)))
    o = orbit_info(F(0))
    assert (o.preperiod, o.period) == (0, 1)


@given(rationals())
def test_orbit_info_matches_integer_orbit(a):
    pre, per, orbit = doubling_orbit(a.numerator, a.denominator)
    o = orbit_info(a)
    assert (o.preperiod, o.period, list(o.orbit)) == (pre, per, orbit)


@given(rationals())
def test_period_divides_order_of_two(a):
    odd = a.denominator
    while odd % 2 == 0:
        odd //= 2
    order = 1
    if odd > 1:
        x = 2 % odd
        while x != 1:
            x = (2 * x) % odd
            order += 1
    assert order % orbit_info(a).period == 0


@given(rationals())
def test_binary_expansion_roundtrip(a):
    pre, rep = binary_expansion(a)
    assert from_binary(pre, rep) == a
    assert (pre, rep) == binary_digits(a)


def test_rotation_number_examples():
    assert rotation_number([F(1, 7), F(2, 7), F(4, 7)]) == F(1, 3)
    assert rotation_number([F(1, 3), F(2, 3)]) == F(1, 2)
    # doubling advances each of 1/15, 2/15, 4/15, 8/15 by one slot
    assert rotation_number([F(1, 15), F(2, 15), F(4, 15), F(8, 15)]) == F(1, 4)
    with pytest.raises(NotARotationCycle):
        rotation_number([F(3, 15), F(6, 15), F(12, 15), F(9, 15)])
    with pytest.raises(NotARotationCycle):
        rotation_number([F(1, 7), F(2, 7)])


@pytest.mark.parametrize("p", range(2, 9))
def test_rotation_cycles_match_brute_force(p):
    mine = sorted(enumerate_rotation_cycles(p))
    ref = sorted(c for c, _ in rotation_cycles(p))
    assert mine == ref
    for cyc, q in rotation_cycles(p):
        assert rotation_number(cyc) == F(q, p)


def test_alpha_portrait_examples():
    pt = alpha_portrait(F(1, 6))
    assert (pt.p, pt.q) == (3, 1)
    assert pt.cycle == (F(1, 7), F(2, 7), F(4, 7))
    assert pt.characteristic_arc == (F(1, 7), F(2, 7))
    pt = alpha_portrait(F(3, 7))
    assert (pt.p, pt.q, pt.cycle) == (2, 1, (F(1, 3), F(2, 3)))
    with pytest.raises(OnWakeBoundary):
        alpha_portrait(F(1, 3))


def test_alpha_portrait_errors():
    with pytest.raises(NoPortraitFound):
        alpha_portrait(F(0))
    with pytest.raises(NoPortraitFound):
        alpha_portrait(F(1, 2 ** 30 - 1), bound=6)
    # 5/12 -> 5/6 -> 2/3 lands on the cycle of its own wake
    with pytest.raises(OrbitHitsAlpha):
        alpha_portrait(F(5, 12))


@given(eventually_periodic())
def test_alpha_portrait_matches_brute_force(theta):
    hits = portrait_of(theta, pmax=10)
    try:
        pt = find_wake(theta, bound=10)
    except OnWakeBoundary:
        assert any(theta in cyc for p in range(2, 11) for cyc, _ in rotation_cycles(p))
        return
    except NoPortraitFound:
        assert hits == []
        return
    assert len(hits) == 1
    p, q, cycle, arc = hits[0]
    assert (pt.p, pt.q, pt.cycle) == (p, q, cycle)
    lo, hi = pt.characteristic_arc
    assert lo < theta < hi
    assert all((2**pt.p - 1) % a.denominator == 0 for a in pt.cycle)
    assert rotation_number(pt.cycle) == F(pt.q, pt.p)


@given(st.integers(2, 8), st.data())
def test_portrait_constant_across_a_wake(p, data):
    cycles = rotation_cycles(p)
    cycle, _ = data.draw(st.sampled_from(cycles))
    den = 2**p - 1
    lo = next(a for a in cycle if a + F(1, den) in cycle or a + F(1, den) - 1 in cycle)
    xs = [lo + F(data.draw(st.integers(1, 999)), 1000 * den) for _ in range(3)]
    portraits = {find_wake(x).cycle for x in xs}
    assert portraits == {cycle}


def test_tune_examples():
    pair = (F(1, 3), F(2, 3))
    assert tune(F(0), pair) == F(1, 3)
    assert tune(F(1, 3), pair) == F(2, 5)
    assert untune(F(2, 5), pair) == F(1, 3)
    assert tune(F(3, 7), pair) == tune_by_words(F(3, 7), "01", "10")


@given(rationals(max_den=2000), st.sampled_from(sorted(PRIMARY_ROOT_PAIRS)))
def test_untune_inverts_tune(x, rot):
    pair = PRIMARY_ROOT_PAIRS[rot]
    y = tune(x, pair)
    pre0, w0 = binary_digits(pair[0])
    pre1, w1 = binary_digits(pair[1])
    assert y == tune_by_words(x, w0, w1)
    assert untune(y, pair) == x


def test_untune_rejects_outside_copy():
    with pytest.raises(NotInCopy):
        untune(F(1, 6), PRIMARY_ROOT_PAIRS[F(1, 3)])
    with pytest.raises(NotInCopy):
        untune(F(3, 7), (F(1, 3), F(2, 3)))


def test_primary_root_pairs_are_characteristic_arcs():
    for rot, (a, b) in PRIMARY_ROOT_PAIRS.items():
        assert b - a == F(1, 2**rot.denominator - 1)
        assert rotation_number(orbit_info(a).orbit) == rot
    assert primary_root_pair(1, 3) == (F(1, 7), F(2, 7))


def test_classify_limb_examples():
    a = classify_limb(F(1, 6))
    assert a.primary == F(1, 3) and a.secondary is None
    a = classify_limb(F(2, 5))
    assert a.primary == F(1, 2) and a.secondary == F(1, 2)
    a = classify_limb(F(3, 7))
    assert a.primary == F(1, 2) and a.secondary is None
    assert str(classify_limb(F(2, 5))) == "1/2 > 1/2"


def test_untune_long_period():
    x = F(11, 3989)  # period 3988
    pair = PRIMARY_ROOT_PAIRS[F(2, 5)]
    pre0, w0 = binary_digits(pair[0])
    pre1, w1 = binary_digits(pair[1])
    y = tune(x, pair)
    assert y == tune_by_words(x, w0, w1)
    assert untune(y, pair) == x
