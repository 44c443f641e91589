import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellsim.core import MAXIMAL_VIOLATION_SETTINGS, AngleSettings
from bellsim.quantum import (
    DOWN,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    UP,
    QuantumState,
    StateError,
    chsh_qm,
    commutator,
    commutator_frobenius_norm,
    correlator_qm,
    correlators_qm,
    joint_outcome_distribution,
    local_commutator_norm,
    observable_from_angle,
    observable_from_vector,
    product_state,
    singlet_state,
    spin_operator,
)

angle = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


def test_singlet_amplitudes():
    r = 1 / math.sqrt(2)
    np.testing.assert_allclose(singlet_state().amplitudes, [0, r, -r, 0], atol=0)


def test_state_validation():
    with pytest.raises(StateError):
        QuantumState(np.array([1.0, 1.0, 0.0, 0.0]))
    with pytest.raises(StateError):
        QuantumState(np.array([1.0, 0.0]))


def test_pauli_algebra():
    # sigma_x sigma_y = i sigma_z
    np.testing.assert_allclose(SIGMA_X @ SIGMA_Y, 1j * SIGMA_Z)
    np.testing.assert_allclose(spin_operator((0, 0, 1)), SIGMA_Z)


@given(angle)
def test_observable_is_hermitian_involution(t):
    for wing in ("first", "second"):
        o = observable_from_angle(wing, t)
        assert o.hermiticity_residual() <= 1e-15
        assert o.square_residual() <= 1e-12


def test_observable_along_z_and_x():
    np.testing.assert_allclose(observable_from_angle("first", 0.0).local, SIGMA_Z, atol=1e-15)
    np.testing.assert_allclose(observable_from_angle("first", math.pi / 2).local, SIGMA_X, atol=1e-15)
    np.testing.assert_allclose(
        observable_from_angle("second", 0.3).local,
        observable_from_vector("second", (math.sin(0.3), 0, math.cos(0.3))).local,
        atol=1e-15,
    )
    with pytest.raises(ValueError):
        observable_from_angle("third", 0.0)


def test_singlet_correlator_grid():
    grid = np.linspace(-math.pi, math.pi, 100)
    psi = singlet_state()
    worst = max(abs(correlator_qm(psi, a, b) + math.cos(a - b)) for a in grid for b in grid)
    assert worst <= 1e-12


@pytest.mark.parametrize("delta, expected", [(0.0, -1.0), (math.pi / 2, 0.0), (math.pi, 1.0)])
def test_singlet_special_differences(delta, expected):
    assert correlator_qm(singlet_state(), delta, 0.0) == pytest.approx(expected, abs=1e-15)


@given(angle, angle)
def test_joint_distribution_closed_form(a, b):
    table = joint_outcome_distribution(singlet_state(), a, b)
    c = math.cos(a - b)
    expected = np.array([[1 - c, 1 + c], [1 + c, 1 - c]]) / 4
    np.testing.assert_allclose(table, expected, atol=1e-12)
    np.testing.assert_allclose(table.sum(axis=0), [0.5, 0.5], atol=1e-12)
    # correlator from the table equals the operator expectation
    xi = table[0, 0] + table[1, 1] - table[0, 1] - table[1, 0]
    assert xi == pytest.approx(correlator_qm(singlet_state(), a, b), abs=1e-12)


def test_product_state_correlator():
    # up x down measured along z on both wings: (+1)(-1)
    psi = product_state(UP, DOWN)
    assert correlator_qm(psi, 0.0, 0.0) == pytest.approx(-1.0)
    assert correlator_qm(psi, math.pi / 2, 0.0) == pytest.approx(0.0, abs=1e-15)


@given(angle, angle, angle, angle, st.floats(0, math.pi), st.floats(0, math.pi))
def test_product_states_never_violate(a, ap, b, bp, t1, t2):
    psi = product_state([math.cos(t1 / 2), math.sin(t1 / 2)], [math.cos(t2 / 2), math.sin(t2 / 2)])
    assert chsh_qm(psi, AngleSettings(a, ap, b, bp)) <= 2.0 + 1e-12


# -- commutators -----------------------------------------------------------------

@given(angle, angle)
def test_opposite_wings_commute(a, b):
    o1, o2 = observable_from_angle("first", a), observable_from_angle("second", b)
    assert commutator_frobenius_norm(o1, o2) <= 1e-12
    assert local_commutator_norm(o1, o2) <= 1e-12


@given(angle, angle)
def test_same_wing_commutator_norms(t1, t2):
    for wing in ("first", "second"):
        o1, o2 = observable_from_angle(wing, t1), observable_from_angle(wing, t2)
        s = abs(math.sin(t1 - t2))
        assert local_commutator_norm(o1, o2) == pytest.approx(2 * math.sqrt(2) * s, abs=1e-12)
        assert commutator_frobenius_norm(o1, o2) == pytest.approx(4 * s, abs=1e-12)


def test_commutator_at_quarter_turn():
    o1, o2 = observable_from_angle("first", 0.0), observable_from_angle("first", math.pi / 4)
    # [Z, X] = 2iY locally; scaled by sin(pi/4)
    np.testing.assert_allclose(o1.local @ o2.local - o2.local @ o1.local, math.sqrt(2) * 1j * SIGMA_Y, atol=1e-15)
    assert local_commutator_norm(o1, o2) == pytest.approx(2.0, abs=1e-12)
    assert commutator(o1, o2).shape == (4, 4)


# -- CHSH ------------------------------------------------------------------------

def test_maximal_violation():
    xi = correlators_qm(singlet_state(), MAXIMAL_VIOLATION_SETTINGS)
    r = math.sqrt(0.5)
    np.testing.assert_allclose(xi, [-r, r, -r, -r], atol=1e-15)
    assert chsh_qm(singlet_state(), MAXIMAL_VIOLATION_SETTINGS) == pytest.approx(2 * math.sqrt(2), abs=1e-12)


def test_tsirelson_bound_random_settings():
    rng = np.random.default_rng(12)
    psi = singlet_state()
    values = [chsh_qm(psi, AngleSettings(*rng.uniform(0, 2 * math.pi, 4))) for _ in range(5000)]
    assert max(values) <= 2 * math.sqrt(2) + 1e-12


@given(angle)
def test_common_rotation_invariance(delta):
    psi = singlet_state()
    s = MAXIMAL_VIOLATION_SETTINGS
    assert chsh_qm(psi, s.shifted(delta)) == pytest.approx(chsh_qm(psi, s), abs=1e-12)
