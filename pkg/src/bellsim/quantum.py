"""Exact two-qubit predictions for spin measurements in the x-z plane.

Basis order is (up-up, up-down, down-up, down-down) with the first wing as
the major index. The measurement direction for angle ``t`` is
``n = (sin t, 0, cos t)`` so that ``sigma . n = cos t * Z + sin t * X``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PAIRS, TOL, AngleSettings, chsh_combination

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

WINGS = ("first", "second")


class StateError(ValueError):
    pass


@dataclass(frozen=True)
class QuantumState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amp.shape != (4,):
            raise StateError(f"two-qubit state needs 4 amplitudes, got {amp.shape}")
        norm = float(np.sum(np.abs(amp) ** 2))
        if abs(norm - 1.0) > TOL:
            raise StateError(f"state is not normalized: <psi|psi> = {norm!r}")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.vdot(self.amplitudes, op @ self.amplitudes))


def singlet_state() -> QuantumState:
    r = 1.0 / math.sqrt(2.0)
    return QuantumState(np.array([0.0, r, -r, 0.0]))


def product_state(first: np.ndarray, second: np.ndarray) -> QuantumState:
    return QuantumState(np.kron(np.asarray(first, dtype=complex), np.asarray(second, dtype=complex)))


UP = np.array([1.0, 0.0])
DOWN = np.array([0.0, 1.0])


def spin_operator(direction) -> np.ndarray:
    """sigma . n for a 3-vector n; normalised so the spectrum is {+1, -1}."""
    n = np.asarray(direction, dtype=float)
    length = float(np.linalg.norm(n))
    if n.shape != (3,) or not math.isfinite(length) or length == 0.0:
        raise ValueError(f"direction must be a non-zero finite 3-vector, got {direction!r}")
    n = n / length
    return n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z


def direction(angle: float) -> np.ndarray:
    return np.array([math.sin(angle), 0.0, math.cos(angle)])


def _plane_spin(angle: float) -> np.ndarray:
    # exact cos/sin entries; avoids renormalising the direction vector
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, s], [s, -c]], dtype=complex)


def _embed(local: np.ndarray, wing: str) -> np.ndarray:
    if wing == "first":
        return np.kron(local, I2)
    if wing == "second":
        return np.kron(I2, local)
    raise ValueError(f"wing must be one of {WINGS}, got {wing!r}")


@dataclass(frozen=True)
class Observable:
    matrix: np.ndarray
    wing: str
    angle: float | None = None
    local: np.ndarray | None = None  # the 2x2 factor acting on ``wing``

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def square_residual(self) -> float:
        return float(np.max(np.abs(self.matrix @ self.matrix - np.eye(4))))


def observable_from_angle(wing: str, angle: float) -> Observable:
    local = _plane_spin(angle)
    return Observable(_embed(local, wing), wing, float(angle), local)


def observable_from_vector(wing: str, direction_vector) -> Observable:
    """Spin observable along an arbitrary 3D direction (outside the x-z convention)."""
    local = spin_operator(direction_vector)
    return Observable(_embed(local, wing), wing, None, local)


def correlator_qm(state: QuantumState, alpha: float, beta: float) -> float:
    op = np.kron(_plane_spin(alpha), _plane_spin(beta))
    value = state.expectation(op)
    if abs(value.imag) > TOL:
        raise ArithmeticError(f"expectation has imaginary part {value.imag!r}")
    return value.real


def _projector(angle: float, outcome: int) -> np.ndarray:
    return (I2 + outcome * _plane_spin(angle)) / 2.0


def joint_outcome_distribution(state: QuantumState, alpha: float, beta: float) -> np.ndarray:
    """2x2 array P[a_idx, b_idx] of outcome probabilities, index 0 = +1, 1 = -1."""
    table = np.empty((2, 2))
    for i, a in enumerate((1, -1)):
        pa = _projector(alpha, a)
        for j, b in enumerate((1, -1)):
            table[i, j] = state.expectation(np.kron(pa, _projector(beta, b))).real
    return table


def commutator(o1: Observable, o2: Observable) -> np.ndarray:
    return o1.matrix @ o2.matrix - o2.matrix @ o1.matrix


def commutator_frobenius_norm(o1: Observable, o2: Observable) -> float:
    """Frobenius norm of [O1, O2] on the full 4-dimensional space."""
    return float(np.linalg.norm(commutator(o1, o2), "fro"))


def local_commutator_norm(o1: Observable, o2: Observable) -> float:
    """Frobenius norm of the commutator of the single-wing factors.

    Operators on opposite wings commute, giving 0. For two operators on the
    same wing this is the 2x2 norm ``2*sqrt(2)*|sin(t1 - t2)|``; the 4x4
    norm is larger by a factor sqrt(2) from the identity on the idle wing.
    """
    if o1.wing != o2.wing:
        return commutator_frobenius_norm(o1, o2)
    x, y = o1.local, o2.local
    return float(np.linalg.norm(x @ y - y @ x, "fro"))


def correlators_qm(state: QuantumState, settings: AngleSettings) -> tuple[float, float, float, float]:
    return tuple(correlator_qm(state, *settings.pair_angles(p)) for p in PAIRS)


def chsh_qm(state: QuantumState, settings: AngleSettings) -> float:
    return chsh_combination(*correlators_qm(state, settings))
