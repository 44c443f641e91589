import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellsim.core import (
    PAIRS,
    AngleSettings,
    DomainError,
    EmptyCountsError,
    EventCounts,
    chsh_combination,
    correlator_from_counts,
    lemma_abs_sum_bound,
    lemma_abs_sum_margins,
    original_bell_check,
    q_quantity,
    q_quantity_array,
)
from bellsim.montecarlo import estimate_chsh

unit = st.floats(-1.0, 1.0, allow_nan=False)
angle = st.floats(-20.0, 20.0, allow_nan=False)


def _counts(row):
    return EventCounts({p: row for p in PAIRS})


# -- correlator_from_counts ----------------------------------------------------

def test_correlator_symmetric_counts_is_zero():
    assert correlator_from_counts(_counts((250000,) * 4), "ab") == 0.0


def test_correlator_all_plus_plus():
    assert correlator_from_counts(_counts((500, 0, 0, 0)), "a'b'") == 1.0


def test_correlator_from_cos_pi_over_4_counts():
    # counts built from (1 - ab*cos(pi/4))/4 with N = 10^6
    row = (73223, 426777, 426777, 73223)
    expected = Fraction(73223 + 73223 - 426777 - 426777, 10**6)
    xi = correlator_from_counts(_counts(row), "ab")
    assert xi == float(expected)
    assert xi == pytest.approx(-0.70711, abs=5e-6)


def test_empty_counts_raise_and_name_the_pair():
    counts = EventCounts({"ab": (1, 0, 0, 0), "ab'": (0, 0, 0, 0), "a'b": (1, 0, 0, 0), "a'b'": (1, 0, 0, 0)})
    with pytest.raises(EmptyCountsError) as err:
        correlator_from_counts(counts, "ab'")
    assert err.value.pair == "ab'"
    with pytest.raises(EmptyCountsError, match="ab'"):
        estimate_chsh(counts)


def test_event_counts_reject_negative_and_unknown_pairs():
    with pytest.raises(ValueError):
        _counts((1, -1, 0, 0))
    with pytest.raises(KeyError):
        EventCounts({**{p: (1, 0, 0, 0) for p in PAIRS}, "cc": (1, 0, 0, 0)})


@given(st.lists(st.integers(0, 10**6), min_size=4, max_size=4).filter(lambda r: sum(r) > 0))
def test_correlator_in_unit_interval(row):
    assert -1.0 <= correlator_from_counts(_counts(tuple(row)), "ab") <= 1.0


@pytest.mark.parametrize("delta", [0.0, 0.3, math.pi / 4, 1.1, math.pi / 2, 2.5, math.pi])
def test_counts_from_exact_law_reproduce_correlator(delta):
    # dyadic approximation of cos(delta) so that N * P(a, b) is an exact integer
    n = 2**20
    c = Fraction(round(math.cos(delta) * 2**12), 2**12)
    law = [(1 - c) / 4, (1 + c) / 4, (1 + c) / 4, (1 - c) / 4]
    row = tuple(int(p * n) for p in law)
    assert all(Fraction(x) == p * n for x, p in zip(row, law))
    assert correlator_from_counts(_counts(row), "ab") == float(-c)


# -- chsh_combination ----------------------------------------------------------

def test_chsh_maximal_violation_value():
    r = math.sqrt(0.5)
    assert chsh_combination(-r, r, -r, -r) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    # inputs rounded to 5 decimals carry up to 4 * 5e-6 of rounding
    assert chsh_combination(-0.70711, 0.70711, -0.70711, -0.70711) == pytest.approx(2.82843, abs=2e-5)


def test_chsh_trivial_values():
    assert chsh_combination(1, 1, 1, 1) == 2.0
    assert chsh_combination(0, 0, 0, 0) == 0.0


def test_chsh_domain_error():
    with pytest.raises(DomainError):
        chsh_combination(1.5, 0, 0, 0)
    with pytest.raises(DomainError):
        chsh_combination(0, 0, math.nan, 0)


@given(unit, unit, unit, unit)
def test_chsh_range_and_first_index_sign_flip(x1, x2, x3, x4):
    b = chsh_combination(x1, x2, x3, x4)
    assert 0.0 <= b <= 4.0
    # a -> -a flips xi(a, .), a' -> -a' flips xi(a', .)
    assert chsh_combination(-x1, -x2, x3, x4) == b
    assert chsh_combination(x1, x2, -x3, -x4) == b
    assert chsh_combination(-x1, -x2, -x3, -x4) == b


# -- original Bell form --------------------------------------------------------

@pytest.mark.parametrize("x", [-1.0, -0.3, 0.0, 1.0])
def test_original_identical_correlators(x):
    res = original_bell_check(-1.0, -1.0, x)
    assert res.lhs == 0.0 and res.satisfied


def test_original_bell_singlet_violation():
    # singlet xi = -cos(difference); a, b, c at 0, 60, 120 degrees
    def xi(t1, t2):
        return -math.cos(math.radians(t1 - t2))

    res = original_bell_check(xi(0, 60), xi(0, 120), xi(120, 60))
    assert res.lhs == pytest.approx(1.0, abs=1e-12)
    assert res.rhs == pytest.approx(0.5, abs=1e-12)
    assert not res.satisfied


def test_original_bell_equality_boundary():
    res = original_bell_check(0.5, 0.5, -1.0)
    assert (res.lhs, res.rhs, res.satisfied) == (0.0, 0.0, True)


# -- lemmas ----------------------------------------------------------------------

def test_lemma_examples():
    assert lemma_abs_sum_bound(1.0, -1.0) == (True, True)
    assert lemma_abs_sum_bound(0.5, 0.5) == (True, True)
    with pytest.raises(DomainError):
        lemma_abs_sum_bound(1.01, 0.0)


@given(unit, unit)
def test_lemma_holds_on_domain(y, yp):
    assert lemma_abs_sum_bound(y, yp) == (True, True)


def test_lemma_margin_identity():
    # |y +- y'|^2 - (1 +- y y')^2 = -(1 - y^2)(1 - y'^2): squared-form oracle
    rng = np.random.default_rng(3)
    y, yp = rng.uniform(-1, 1, size=(2, 10_000))
    for sign in (1.0, -1.0):
        diff = (y + sign * yp) ** 2 - (1 + sign * y * yp) ** 2
        np.testing.assert_allclose(diff, -(1 - y**2) * (1 - yp**2), atol=1e-14)
    plus, minus = lemma_abs_sum_margins(y, yp)
    assert plus.min() >= 0 and minus.min() >= 0


def test_q_examples():
    assert q_quantity(1, 1, 1, 1) == 2.0
    assert q_quantity(0, 0, 0.3, -0.9) == 0.0
    with pytest.raises(DomainError):
        q_quantity(0, 0, 2, 0)


@given(unit, unit, unit, unit)
def test_q_bounded_by_two(x, xp, y, yp):
    q = q_quantity(x, xp, y, yp)
    assert q <= 2.0 + 1e-12
    # the chain behind the bound, term by term
    assert abs(x * y - x * yp) <= 1 - y * yp + 1e-12
    assert abs(xp * y + xp * yp) <= 1 + y * yp + 1e-12


def test_q_array_matches_scalar():
    rng = np.random.default_rng(11)
    x = rng.uniform(-1, 1, size=(4, 200))
    arr = q_quantity_array(*x)
    assert all(arr[i] == q_quantity(*x[:, i]) for i in range(200))


# -- AngleSettings -----------------------------------------------------------------

@given(angle, angle, angle, angle)
def test_canonical_range_and_correlators_unchanged(a, ap, b, bp):
    s = AngleSettings(a, ap, b, bp)
    c = s.canonical()
    for x in c.as_tuple():
        assert 0.0 <= x < 2 * math.pi
    for p in PAIRS:
        (x1, y1), (x2, y2) = s.pair_angles(p), c.pair_angles(p)
        assert -math.cos(x1 - y1) == pytest.approx(-math.cos(x2 - y2), abs=1e-12)


def test_settings_reject_non_finite():
    with pytest.raises(DomainError):
        AngleSettings(0, math.inf, 0, 0)


def test_from_degrees():
    s = AngleSettings.from_degrees(0, 90, 45, 135)
    assert s.beta_prime == pytest.approx(3 * math.pi / 4)
