from fractions import Fraction as F

import pytest
from hypothesis import assume, given, strategies as st

from puzzle_forge.angles import PRIMARY_ROOT_PAIRS, classify_limb, orbit_info, tune
from puzzle_forge.errors import PuzzleError
from puzzle_forge.nest import Verdict, build_nest
from puzzle_forge.renorm import (
    StageNotRenormalizable,
    full_nest,
    renormalize,
    special_family_filter,
    tau_value,
)

from strategies import periodic_angles

AIRPLANE_PAIR = (F(3, 7), F(4, 7))


def test_renormalize_examples():
    r = renormalize(F(2, 5))
    assert r.theta_prime == F(1, 3) and r.immediate and r.per == 2
    r = renormalize(F(3, 7))
    assert r.per == 3 and r.root_pair == AIRPLANE_PAIR and r.theta_prime == 0
    with pytest.raises(StageNotRenormalizable):
        renormalize(F(1, 6))


@pytest.mark.parametrize("x", [F(1, 7), F(2, 5), F(1, 6), F(3, 7), F(5, 31), F(9, 56)])
def test_renormalize_inverts_tuning(x):
    for pair in (AIRPLANE_PAIR, PRIMARY_ROOT_PAIRS[F(1, 2)], PRIMARY_ROOT_PAIRS[F(1, 3)]):
        y = tune(x, pair)
        try:
            r = renormalize(y)
        except PuzzleError:
            continue
        assert r.root_pair == pair
        assert r.theta_prime == x


def test_full_nest_examples():
    one = full_nest(F(3, 7), stages=1)
    assert len(one.stages) == 1
    assert one.stages[0].to_json() == build_nest(F(3, 7)).to_json()
    tuned = tune(F(3, 7), (F(1, 3), F(2, 3)))
    chain = full_nest(tuned)
    assert chain.thetas[:2] == [tuned, F(3, 7)]
    assert chain.stages[0].verdict is Verdict.IMMEDIATE
    assert chain.stages[1].to_json()["levels"] == build_nest(F(3, 7)).to_json()["levels"]
    assert chain.per == 6 and chain.stop == "main cardioid"
    chain = full_nest(F(2, 5))
    assert chain.stop == "parabolic root" and chain.per == 4
    chain = full_nest(F(1, 6))
    assert chain.per is None and chain.stop == "NonRecurrent"


@given(periodic_angles(max_period=11), st.integers(1, 4))
def test_full_nest_period_is_orbit_period(theta, M):
    try:
        chain = full_nest(theta, stages=M)
    except PuzzleError:
        assume(False)
    assert len(chain.stages) <= M
    if chain.stop in ("main cardioid", "parabolic root"):
        assert chain.per == orbit_info(theta).period


def test_special_family_filter():
    thetas = [F(2, 5), F(3, 7), F(1, 6), F(11, 31), F(1, 3)]
    ident = special_family_filter(thetas, "height", 0)
    assert sorted(x for g in ident.groups.values() for x in g) == sorted(set(thetas) - {F(1, 3)})
    assert F(1, 3) in ident.diagnostics
    for key, members in ident.groups.items():
        assert all(str(classify_limb(x)) == key for x in members)
    filt = special_family_filter(thetas, "height", 1)
    kept = {x for g in filt.groups.values() for x in g}
    assert F(2, 5) not in kept and F(3, 7) in kept and F(1, 6) not in kept
    assert filt.values[F(2, 5)] == -1
    assert tau_value(F(3, 7), "reduced_period") == 3
    with pytest.raises(ValueError):
        tau_value(F(3, 7), "modulus")
