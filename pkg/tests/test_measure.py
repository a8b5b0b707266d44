import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraktal import (
    IfsSpec,
    IntervalSet,
    ValidationError,
    box_counting_dimension,
    build_prefractal,
    mass_distribution,
    mass_ladder,
    staircase,
)

from conftest import LOG2_LOG3
from oracles import boxes_brute, cantor_exact

CANTOR = IfsSpec.cantor()


def brute_mass(level, alpha, delta, a, b):
    """Mass from the exact-rational set and a brute-force box sweep."""
    k_hi = int(math.ceil(1 / delta)) + 1
    n = len(boxes_brute(cantor_exact(level), Fraction(delta), -1, k_hi, Fraction(a), Fraction(b)))
    return n * float(delta) ** alpha


# -- mass_distribution ---------------------------------------------------------


def test_level_one_unit_mass(cantor1):
    assert mass_distribution(cantor1, LOG2_LOG3, 1 / 3, 0.0, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_level_four_mass_against_brute_force(cantor4):
    expected = brute_mass(4, 0.6309, Fraction(1, 100), 0, 1)
    assert expected == pytest.approx(34 * 0.01**0.6309, rel=1e-15)
    assert mass_distribution(cantor4, 0.6309, 0.01, 0.0, 1.0) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize(
    "a,b",
    [("0", "0.5"), ("0.1", "0.9"), ("1/3", "2/3"), ("0.25", "0.26"), ("0.7", "1"), ("0.02", "0.03")],
)
def test_partial_masses_against_brute_force(cantor4, a, b):
    # decimal endpoints are exact rationals for the oracle; the package snaps
    # float endpoints lying within rounding of a box boundary onto it
    a, b = Fraction(a), Fraction(b)
    expected = brute_mass(4, 0.6309, Fraction(1, 100), a, b)
    got = mass_distribution(cantor4, 0.6309, 0.01, float(a), float(b))
    assert got == pytest.approx(expected, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-0.2, 1.2), delta=st.floats(0.004, 0.5), alpha=st.floats(0.05, 1.0))
def test_degenerate_range_holds_at_most_one_box(cantor4, a, delta, alpha):
    m = mass_distribution(cantor4, alpha, delta, a, a)
    assert m in (0.0, pytest.approx(delta**alpha))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(alpha=0.0, delta=0.1, a=0, b=1),
        dict(alpha=1.5, delta=0.1, a=0, b=1),
        dict(alpha=0.5, delta=0.0, a=0, b=1),
        dict(alpha=0.5, delta=0.1, a=1, b=0),
    ],
)
def test_mass_validation(cantor1, kwargs):
    with pytest.raises(ValidationError):
        mass_distribution(cantor1, **kwargs)


@settings(max_examples=80, deadline=None)
@given(
    n=st.integers(1, 6),
    k=st.integers(3, 300),
    i=st.integers(0, 300),
    j=st.integers(0, 300),
    m=st.integers(0, 300),
    alpha=st.floats(0.1, 1.0),
)
def test_additivity_at_box_boundaries(n, k, i, j, m, alpha):
    s = build_prefractal(CANTOR, n)
    delta = 1.0 / k
    ia, ib, ic = sorted(v % (k + 1) for v in (i, j, m))
    a, b, c = ia * delta, ib * delta, ic * delta
    whole = mass_distribution(s, alpha, delta, a, c)
    parts = mass_distribution(s, alpha, delta, a, b) + mass_distribution(s, alpha, delta, b, c)
    assert whole == pytest.approx(parts, rel=1e-12, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 6),
    delta=st.floats(0.003, 0.3),
    alpha=st.floats(0.05, 0.5),
    a=st.floats(0.0, 1.0),
    w=st.floats(0.0, 1.0),
)
def test_doubling_alpha_shrinks_nonzero_mass(n, delta, alpha, a, w):
    s = build_prefractal(CANTOR, n)
    m1 = mass_distribution(s, alpha, delta, a, a + w)
    m2 = mass_distribution(s, 2 * alpha, delta, a, a + w)
    if m1 > 0:
        assert m2 < m1
    else:
        assert m2 == 0


# -- staircase -------------------------------------------------------------------


def test_staircase_level_one(cantor1):
    grid = np.linspace(0, 1, 7)
    S = staircase(cantor1, LOG2_LOG3, 1 / 3, 0.0, grid)
    assert S.values[0] == 0.0
    assert S.values[-1] == pytest.approx(1.0, abs=1e-12)


def test_staircase_base_point_is_zero(cantor4):
    grid = np.linspace(0, 1, 11)
    S = staircase(cantor4, 0.6309, 0.01, grid[3], grid)
    assert S.values[3] == 0.0
    assert S(grid[3]) == 0.0


def test_staircase_matches_mass_distribution(cantor4, grid1001):
    S = staircase(cantor4, 0.6309, 0.01, 0.0, grid1001)
    for i in range(0, 1001, 37):
        assert S.values[i] == mass_distribution(cantor4, 0.6309, 0.01, 0.0, grid1001[i])


def test_staircase_end_value(cantor4, grid1001):
    S = staircase(cantor4, 0.6309, 0.01, 0.0, grid1001)
    assert S.values[-1] == pytest.approx(34 * 0.01**0.6309, rel=1e-12)


def test_staircase_rises_on_both_sides_of_base_point(cantor4):
    grid = np.linspace(0, 1, 201)
    S = staircase(cantor4, 0.6309, 0.01, 1.0, grid)
    assert S.values[-1] == 0.0
    assert np.all(np.diff(S.values) <= 0)
    # the Cantor set is symmetric about 1/2, so the mirrored staircase agrees
    forward = staircase(cantor4, 0.6309, 0.01, 0.0, grid)
    np.testing.assert_allclose(S.values[::-1], forward.values, rtol=1e-12, atol=1e-15)


def test_staircase_call_off_grid(cantor4):
    S = staircase(cantor4, 0.6309, 0.01, 0.0, np.linspace(0, 1, 11))
    assert S(0.555) == S(0.4)  # inside the middle gap
    assert S(0.335) == mass_distribution(cantor4, 0.6309, 0.01, 0.0, 0.335)


def test_staircase_validation(cantor4):
    with pytest.raises(ValidationError):
        staircase(cantor4, 0.6309, 0.01, 0.0, [])
    with pytest.raises(ValidationError):
        staircase(cantor4, 0.6309, 0.01, 0.0, [0.0, 0.5, 0.4])


def test_staircase_csv(tmp_path, cantor1):
    S = staircase(cantor1, LOG2_LOG3, 1 / 3, 0.0, [0.0, 0.5, 1.0])
    path = tmp_path / "s.csv"
    S.to_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "x,S"
    assert [float(r.split(",")[1]) for r in rows[1:]] == list(S.values)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(0, 6),
    delta=st.floats(0.002, 0.5),
    alpha=st.floats(0.05, 1.0),
    a0=st.floats(-0.1, 1.1),
)
def test_staircase_monotone_away_from_base(n, delta, alpha, a0):
    s = build_prefractal(CANTOR, n)
    grid = np.linspace(-0.1, 1.1, 241)
    S = staircase(s, alpha, delta, a0, grid)
    right = grid >= a0
    assert np.all(np.diff(S.values[right]) >= 0)
    assert np.all(np.diff(S.values[~right]) <= 0)
    assert np.all(S.values >= 0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 7), delta=st.floats(0.001, 0.15), alpha=st.floats(0.05, 1.0))
def test_gap_flatness(n, delta, alpha):
    s = build_prefractal(CANTOR, n)
    lo, hi = 1 / 3 + delta, 2 / 3 - delta
    grid = np.linspace(lo, hi, 50)
    S = staircase(s, alpha, delta, 0.0, grid)
    assert np.all(S.values == S.values[0])


# -- box_counting_dimension ------------------------------------------------------


def test_aligned_cantor_dimension_is_exact():
    s = build_prefractal(CANTOR, 6)
    est = box_counting_dimension(s, [3.0**-k for k in range(1, 7)])
    assert [n for _, n in est.pairs] == [2**k for k in range(1, 7)]
    assert est.alpha_hat == pytest.approx(LOG2_LOG3, abs=1e-12)
    assert est.stderr < 1e-12


def test_full_interval_dimension_is_one():
    est = box_counting_dimension(IntervalSet([0.0], [1.0]), [2.0**-k for k in range(1, 9)])
    assert est.alpha_hat == pytest.approx(1.0, abs=1e-12)


def test_level_four_dimension_in_range(cantor4):
    deltas = [0.1, 0.05, 0.02, 0.01]
    est = box_counting_dimension(cantor4, deltas)
    brute = [len(boxes_brute(cantor_exact(4), Fraction(d).limit_denominator(1000), -1, 101)) for d in deltas]
    assert [n for _, n in est.pairs] == brute == [8, 12, 20, 34]
    slope = np.polyfit(np.log(1 / np.array(deltas)), np.log(brute), 1)[0]
    assert est.alpha_hat == pytest.approx(slope, rel=1e-12)
    assert 0.55 <= est.alpha_hat <= 0.70


def test_dimension_json(tmp_path, cantor4):
    est = box_counting_dimension(cantor4, [0.1, 0.01])
    path = tmp_path / "d.json"
    est.to_json(path)
    data = json.loads(path.read_text())
    assert set(data) == {"alpha_hat", "stderr", "pairs"}
    assert data["pairs"] == [[0.1, 8], [0.01, 34]]


@pytest.mark.parametrize("deltas", [[0.1], [0.1, 0.1], [0.1, -0.2], [0.1, math.nan]])
def test_dimension_validation(cantor4, deltas):
    with pytest.raises(ValidationError):
        box_counting_dimension(cantor4, deltas)


# -- mass_ladder -----------------------------------------------------------------


def test_mass_ladder_extrapolates_linear_masses():
    # on [0, 1] with alpha = 1 every mass is exactly 1
    ladder = mass_ladder(IntervalSet([0.0], [1.0]), 1.0, [0.1, 0.05, 0.025])
    assert ladder.masses == (1.0, 1.0, 1.0)
    assert ladder.extrapolated == pytest.approx(1.0, abs=1e-12)
    assert ladder.deltas == (0.1, 0.05, 0.025)
