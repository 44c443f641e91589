"""CHSH combination, coincidence-rate estimation and the inequality lemmas.

Outcomes are the integers +1/-1 throughout. Setting pairs are labelled
``"ab"``, ``"ab'"``, ``"a'b"`` and ``"a'b'"`` in the order the CHSH
combination consumes them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

TOL = 1e-12

PAIRS = ("ab", "ab'", "a'b", "a'b'")
OUTCOMES = (1, -1)
# count layout inside a pair: N(+,+), N(+,-), N(-,+), N(-,-)
OUTCOME_PAIRS = ((1, 1), (1, -1), (-1, 1), (-1, -1))

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """An argument lies outside the hypothesis of an inequality or estimator."""


class EmptyCountsError(ValueError):
    """A setting pair has no recorded trials."""

    def __init__(self, pair: str):
        super().__init__(f"empty counts for setting pair {pair!r}: N_tot = 0")
        self.pair = pair


def check_unit_interval(*values: float, name: str = "value") -> None:
    for v in values:
        if not math.isfinite(v) or abs(v) > 1.0 + TOL:
            raise DomainError(f"{name} {v!r} is outside [-1, 1]")


@dataclass(frozen=True)
class AngleSettings:
    """Analyzer angles in radians for the two settings on each wing."""

    alpha: float
    alpha_prime: float
    beta: float
    beta_prime: float

    def __post_init__(self):
        for name in ("alpha", "alpha_prime", "beta", "beta_prime"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"angle {name} must be finite, got {v!r}")

    @classmethod
    def from_degrees(cls, alpha, alpha_prime, beta, beta_prime) -> "AngleSettings":
        return cls(*(math.radians(x) for x in (alpha, alpha_prime, beta, beta_prime)))

    def canonical(self) -> "AngleSettings":
        """Same settings with every angle reduced into [0, 2*pi)."""
        return AngleSettings(*(_wrap(x) for x in self.as_tuple()))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.alpha_prime, self.beta, self.beta_prime)

    def degrees(self) -> tuple[float, float, float, float]:
        return tuple(math.degrees(x) for x in self.as_tuple())

    def pair_angles(self, pair: str) -> tuple[float, float]:
        """(first-wing angle, second-wing angle) for a setting-pair label."""
        return {
            "ab": (self.alpha, self.beta),
            "ab'": (self.alpha, self.beta_prime),
            "a'b": (self.alpha_prime, self.beta),
            "a'b'": (self.alpha_prime, self.beta_prime),
        }[_check_pair(pair)]

    def shifted(self, delta: float) -> "AngleSettings":
        return AngleSettings(*(x + delta for x in self.as_tuple()))


def _wrap(x: float) -> float:
    y = math.fmod(x, TWO_PI)
    if y < 0.0:
        y += TWO_PI
    # fmod of a tiny negative number can round up to exactly 2*pi
    return 0.0 if y >= TWO_PI else y


def _check_pair(pair: str) -> str:
    if pair not in PAIRS:
        raise KeyError(f"unknown setting pair {pair!r}; expected one of {PAIRS}")
    return pair


# canonical representative of the maximal-violation pattern:
# |alpha - beta'| = 3pi/4, the other three differences pi/4
MAXIMAL_VIOLATION_SETTINGS = AngleSettings(0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4)


@dataclass(frozen=True)
class EventCounts:
    """Joint outcome counts per setting pair.

    ``counts[pair]`` is ``(N(+,+), N(+,-), N(-,+), N(-,-))``.
    """

    counts: Mapping[str, tuple[int, int, int, int]]

    def __post_init__(self):
        clean = {}
        for pair in PAIRS:
            if pair not in self.counts:
                raise KeyError(f"missing setting pair {pair!r}")
            row = tuple(int(n) for n in self.counts[pair])
            if len(row) != 4:
                raise ValueError(f"pair {pair!r} needs 4 counts, got {len(row)}")
            if any(n < 0 for n in row):
                raise ValueError(f"negative count in pair {pair!r}: {row}")
            clean[pair] = row
        extra = set(self.counts) - set(PAIRS)
        if extra:
            raise KeyError(f"unknown setting pairs {sorted(extra)}")
        object.__setattr__(self, "counts", clean)

    def __getitem__(self, pair: str) -> tuple[int, int, int, int]:
        return self.counts[_check_pair(pair)]

    def total(self, pair: str) -> int:
        return sum(self[pair])

    def merge(self, other: "EventCounts") -> "EventCounts":
        return EventCounts({p: tuple(x + y for x, y in zip(self[p], other[p])) for p in PAIRS})

    @classmethod
    def from_joint(cls, tables: Mapping[str, np.ndarray], n: int) -> "EventCounts":
        """Counts ``round(n * P(a, b))`` for 2x2 tables indexed ``[a_idx, b_idx]``."""
        return cls({p: tuple(int(round(n * x)) for x in np.asarray(tables[p]).ravel()) for p in PAIRS})


def correlator_from_counts(counts: EventCounts, pair: str) -> float:
    """Coincidence rate sum(a*b*N(a,b)) / N_tot, with integer sums and a single division."""
    npp, npm, nmp, nmm = counts[pair]
    total = npp + npm + nmp + nmm
    if total <= 0:
        raise EmptyCountsError(pair)
    return (npp + nmm - npm - nmp) / total


def chsh_combination(xi_ab: float, xi_abp: float, xi_apb: float, xi_apbp: float) -> float:
    check_unit_interval(xi_ab, xi_abp, xi_apb, xi_apbp, name="correlator")
    return abs(xi_ab - xi_abp) + abs(xi_apb + xi_apbp)


@dataclass(frozen=True)
class BellCheck:
    lhs: float
    rhs: float
    satisfied: bool


def original_bell_check(xi_ab: float, xi_ac: float, xi_cb: float) -> BellCheck:
    """|xi(a,b) - xi(a,c)| <= 1 + xi(c,b).

    This is the CHSH bound with a' = b' = c for sources perfectly
    anticorrelated at equal settings (xi(c,c) = -1), such as the singlet.
    """
    check_unit_interval(xi_ab, xi_ac, xi_cb, name="correlator")
    lhs = abs(xi_ab - xi_ac)
    rhs = 1.0 + xi_cb
    return BellCheck(lhs, rhs, lhs <= rhs + TOL)


def lemma_abs_sum_bound(y: float, y_prime: float) -> tuple[bool, bool]:
    """Check |y + y'| <= 1 + y*y' and |y - y'| <= 1 - y*y' for |y|, |y'| <= 1."""
    check_unit_interval(y, y_prime, name="lemma argument")
    prod = y * y_prime
    return (abs(y + y_prime) <= 1.0 + prod + TOL, abs(y - y_prime) <= 1.0 - prod + TOL)


def q_quantity(x: float, x_prime: float, y: float, y_prime: float) -> float:
    check_unit_interval(x, x_prime, y, y_prime, name="Q argument")
    return abs(x * y - x * y_prime) + abs(x_prime * y + x_prime * y_prime)


# Vectorised forms for sweeps; same formulas, arrays in, arrays out.

def lemma_abs_sum_margins(y: np.ndarray, y_prime: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Slack (rhs - lhs) of both sign branches; non-negative where the lemma holds."""
    prod = y * y_prime
    return (1.0 + prod - np.abs(y + y_prime), 1.0 - prod - np.abs(y - y_prime))


def q_quantity_array(x, x_prime, y, y_prime) -> np.ndarray:
    return np.abs(x * y - x * y_prime) + np.abs(x_prime * y + x_prime * y_prime)


@dataclass(frozen=True)
class ChshReport:
    """Estimated correlators with binomial standard errors.

    ``B`` and ``B_se`` are derived from the stored correlators on access.
    """

    correlators: Mapping[str, float]
    standard_errors: Mapping[str, float]
    totals: Mapping[str, int] = field(default_factory=dict)

    @property
    def B(self) -> float:
        return chsh_combination(*(self.correlators[p] for p in PAIRS))

    @property
    def B_se(self) -> float:
        return math.sqrt(math.fsum(self.standard_errors[p] ** 2 for p in PAIRS))

    def violates(self) -> bool:
        return self.B > 2.0 + TOL


def correlator_standard_error(xi: float, n: int) -> float:
    """sqrt((1 - xi^2) / N); exactly zero at xi = +-1."""
    return math.sqrt(max(0.0, 1.0 - xi * xi) / n)
