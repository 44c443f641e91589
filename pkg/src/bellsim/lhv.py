"""Hidden-variable model families and the bound chains that go with them.

Three families are covered:

* possessed values equal to measured values: a distribution over the 16
  sign assignments of (a, b, a', b');
* factorizable models, where each wing's response depends only on its own
  angle and the shared label lambda;
* setting-independent joint models, where one joint table over (A, B)
  serves all four setting pairs.

``quantum_mimic_joint`` is the non-factorizable counterexample: a joint law
with uniform marginals that reaches 2*sqrt(2).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from .core import PAIRS, TOL, AngleSettings, DomainError, chsh_combination, q_quantity_array


class ModelValidationError(ValueError):
    pass


# -- 16 deterministic assignments ---------------------------------------------

@dataclass(frozen=True)
class OutcomeAssignment:
    row_index: int
    a: int
    b: int
    a_prime: int
    b_prime: int

    @property
    def signs(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.a_prime, self.b_prime)

    @property
    def products(self) -> tuple[int, int, int, int]:
        """(ab, ab', a'b, a'b')"""
        return (self.a * self.b, self.a * self.b_prime, self.a_prime * self.b, self.a_prime * self.b_prime)


def enumerate_assignments() -> list[OutcomeAssignment]:
    """All 16 rows, + before -, column order (a, b, a', b'); row 1 is ++++."""
    rows = itertools.product((1, -1), repeat=4)
    return [OutcomeAssignment(i, *signs) for i, signs in enumerate(rows, start=1)]


_PRODUCTS = np.array([r.products for r in enumerate_assignments()], dtype=float)  # (16, 4)
_SIGNS = np.array([r.signs for r in enumerate_assignments()], dtype=np.int64)  # (16, 4)


def format_table_row(row: OutcomeAssignment) -> str:
    """One line of the table: index, four signs, four products."""
    sym = {1: "+", -1: "-"}
    return " ".join([str(row.row_index)] + [sym[s] for s in row.signs] + [sym[s] for s in row.products])


def as_p16(p: Sequence[float]) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape != (16,):
        raise ModelValidationError(f"probability vector needs 16 entries, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelValidationError("probability vector has non-finite entries")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ModelValidationError("probability entries must lie in [0, 1]")
    if abs(math.fsum(arr) - 1.0) > TOL:
        raise ModelValidationError(f"probabilities sum to {math.fsum(arr)!r}, not 1")
    return arr


def point_mass(row_index: int) -> np.ndarray:
    p = np.zeros(16)
    p[row_index - 1] = 1.0
    return p


def correlators_from_p16(p: Sequence[float]) -> tuple[float, float, float, float]:
    """(xi(a,b), xi(a,b'), xi(a',b), xi(a',b')) as sum_i product_i * p_i."""
    arr = as_p16(p)
    return tuple(math.fsum(_PRODUCTS[:, k] * arr) for k in range(4))


def chsh_of_p16(p: Sequence[float]) -> float:
    return chsh_combination(*correlators_from_p16(p))


def chsh_of_p16_batch(ps: np.ndarray) -> np.ndarray:
    """Vectorised CHSH value for an (n, 16) array of probability vectors."""
    xi = ps @ _PRODUCTS
    return np.abs(xi[:, 0] - xi[:, 1]) + np.abs(xi[:, 2] + xi[:, 3])


# rows whose (ab - ab') and (a'b + a'b') terms are non-zero; the sign of each
# row's contribution drops out once every p_i is replaced by |p_i|
_FIRST_TERM_ROWS = np.flatnonzero(_PRODUCTS[:, 0] != _PRODUCTS[:, 1])
_SECOND_TERM_ROWS = np.flatnonzero(_PRODUCTS[:, 2] == _PRODUCTS[:, 3])


@dataclass(frozen=True)
class WignerChain:
    """Stepwise terms of the 16-row bound for one probability vector."""

    first_term: float  # |xi(a,b) - xi(a,b')|
    first_bound: float  # 2 * sum of p_i over the rows where ab != ab'
    second_term: float  # |xi(a',b) + xi(a',b')|
    second_bound: float  # 2 * sum of p_i over the rows where a'b == a'b'
    total_bound: float  # 2 * sum_i p_i

    @property
    def B(self) -> float:
        return self.first_term + self.second_term

    def holds(self, tol: float = TOL) -> bool:
        return (
            self.first_term <= self.first_bound + tol
            and self.second_term <= self.second_bound + tol
            and self.B <= self.first_bound + self.second_bound + tol
            and self.first_bound + self.second_bound <= self.total_bound + tol
            and self.total_bound <= 2.0 + tol
        )


def wigner_chain(p: Sequence[float]) -> WignerChain:
    arr = as_p16(p)
    xi = [math.fsum(_PRODUCTS[:, k] * arr) for k in range(4)]
    return WignerChain(
        first_term=abs(xi[0] - xi[1]),
        first_bound=2.0 * math.fsum(arr[_FIRST_TERM_ROWS]),
        second_term=abs(xi[2] + xi[3]),
        second_bound=2.0 * math.fsum(arr[_SECOND_TERM_ROWS]),
        total_bound=2.0 * math.fsum(arr),
    )


# -- factorizable models ------------------------------------------------------

Response = Callable[[float, Hashable], float]


def _check_weights(weights: Sequence[float]) -> tuple[float, ...]:
    w = tuple(float(x) for x in weights)
    if not w:
        raise ModelValidationError("model needs at least one lambda")
    if any(not math.isfinite(x) or x < 0.0 for x in w):
        raise ModelValidationError("lambda weights must be finite and non-negative")
    if abs(math.fsum(w) - 1.0) > TOL:
        raise ModelValidationError(f"lambda weights sum to {math.fsum(w)!r}, not 1")
    return w


@dataclass(frozen=True)
class HiddenVariableModel:
    """Factorizable model: per-wing value and probability weight for each (angle, lambda).

    The effective responses are value * probability on each wing, and the
    correlator is the lambda-average of their product.
    """

    lambdas: tuple
    weights: tuple
    value_A: Response
    value_B: Response
    prob_A: Response
    prob_B: Response

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(self.lambdas))
        object.__setattr__(self, "weights", _check_weights(self.weights))
        if len(self.lambdas) != len(self.weights):
            raise ModelValidationError("lambdas and weights differ in length")

    def effective_A(self, angle: float, lam) -> float:
        return _effective(self.value_A(angle, lam), self.prob_A(angle, lam), "A", angle, lam)

    def effective_B(self, angle: float, lam) -> float:
        return _effective(self.value_B(angle, lam), self.prob_B(angle, lam), "B", angle, lam)

    def effective_arrays(self, settings: AngleSettings) -> tuple[np.ndarray, ...]:
        """Effective responses at alpha, alpha', beta, beta' as arrays over lambda."""
        s = settings
        return (
            np.array([self.effective_A(s.alpha, l) for l in self.lambdas]),
            np.array([self.effective_A(s.alpha_prime, l) for l in self.lambdas]),
            np.array([self.effective_B(s.beta, l) for l in self.lambdas]),
            np.array([self.effective_B(s.beta_prime, l) for l in self.lambdas]),
        )

    @classmethod
    def from_tables(
        cls,
        lambdas: Sequence,
        weights: Sequence[float],
        table_A: Mapping[Hashable, Mapping[float, tuple[float, float]]],
        table_B: Mapping[Hashable, Mapping[float, tuple[float, float]]],
        angle_atol: float = 1e-9,
    ) -> "HiddenVariableModel":
        """Model whose responses are looked up in ``{lambda: {angle: (value, prob)}}`` tables."""

        def lookup(table, wing):
            def find(angle, lam):
                for key, entry in table[lam].items():
                    if _angles_match(key, angle, angle_atol):
                        return entry
                raise ModelValidationError(f"no {wing}-response for lambda {lam!r} at angle {angle!r}")

            return (lambda a, l: find(a, l)[0]), (lambda a, l: find(a, l)[1])

        vA, pA = lookup(table_A, "A")
        vB, pB = lookup(table_B, "B")
        return cls(tuple(lambdas), tuple(weights), vA, vB, pA, pB)


def _angles_match(a: float, b: float, atol: float) -> bool:
    d = math.remainder(float(a) - float(b), 2.0 * math.pi)
    return abs(d) <= atol


def _effective(value: float, prob: float, wing: str, angle, lam) -> float:
    if not (math.isfinite(value) and abs(value) <= 1.0):
        raise ModelValidationError(f"{wing}-value {value!r} at ({angle!r}, {lam!r}) outside [-1, 1]")
    if not (math.isfinite(prob) and 0.0 <= prob <= 1.0):
        raise ModelValidationError(f"{wing}-probability {prob!r} at ({angle!r}, {lam!r}) outside [0, 1]")
    return value * prob


def correlator_factorizable(model: HiddenVariableModel, wing_angles: tuple[float, float]) -> float:
    alpha, beta = wing_angles
    return math.fsum(
        model.effective_A(alpha, lam) * model.effective_B(beta, lam) * w
        for lam, w in zip(model.lambdas, model.weights)
    )


def chsh_factorizable(model: HiddenVariableModel, settings: AngleSettings) -> float:
    xi = [correlator_factorizable(model, settings.pair_angles(p)) for p in PAIRS]
    return chsh_combination(*xi)


@dataclass(frozen=True)
class FactorizableChain:
    B: float
    averaged_q: float  # sum_lambda p(lambda) * Q(lambda)
    max_q: float  # max_lambda Q(lambda)

    def holds(self, tol: float = TOL) -> bool:
        return self.B <= self.averaged_q + tol and self.averaged_q <= self.max_q + tol and self.max_q <= 2.0 + tol


def factorizable_chain(model: HiddenVariableModel, settings: AngleSettings) -> FactorizableChain:
    """B <= sum_lambda Q(lambda) p(lambda) <= Q_max <= 2, term by term."""
    a, ap, b, bp = model.effective_arrays(settings)
    w = np.asarray(model.weights)
    q = q_quantity_array(a, ap, b, bp)
    return FactorizableChain(
        B=chsh_factorizable(model, settings),
        averaged_q=math.fsum(q * w),
        max_q=float(q.max()),
    )


# -- setting-independent joint models ------------------------------------------

@dataclass(frozen=True)
class JointDistributionModel:
    """One joint table over (A, B) value pairs per lambda, shared by all setting pairs.

    ``tables[k][i, j]`` is P(A = values[i], B = values[j] | lambda_k).
    """

    lambdas: tuple
    weights: tuple
    tables: tuple
    values: tuple = (1.0, -1.0)

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(self.lambdas))
        object.__setattr__(self, "weights", _check_weights(self.weights))
        vals = tuple(float(v) for v in self.values)
        if not vals or any(not math.isfinite(v) or abs(v) > 1.0 for v in vals):
            raise ModelValidationError("value grid must be non-empty and inside [-1, 1]")
        object.__setattr__(self, "values", vals)
        n = len(vals)
        tabs = []
        for lam, t in zip(self.lambdas, self.tables):
            arr = np.array(t, dtype=float)
            if arr.shape != (n, n):
                raise ModelValidationError(f"table for {lam!r} has shape {arr.shape}, expected {(n, n)}")
            if np.any(~np.isfinite(arr)) or np.any(arr < 0.0):
                raise ModelValidationError(f"table for {lam!r} has negative or non-finite entries")
            if abs(math.fsum(arr.ravel()) - 1.0) > TOL:
                raise ModelValidationError(f"table for {lam!r} sums to {math.fsum(arr.ravel())!r}")
            arr.setflags(write=False)
            tabs.append(arr)
        if len(tabs) != len(self.lambdas) or len(self.lambdas) != len(self.weights):
            raise ModelValidationError("lambdas, weights and tables differ in length")
        object.__setattr__(self, "tables", tuple(tabs))

    def mixed_table(self) -> np.ndarray:
        """P(A, B) after averaging over lambda."""
        return sum(w * t for w, t in zip(self.weights, self.tables))

    def random_variables(self) -> tuple[np.ndarray, np.ndarray]:
        """Outcome space of (A_alpha, A_alpha', B_beta, B_beta') with probabilities.

        The shared table means each wing's two settings read the same value,
        so A_alpha = A_alpha' and B_beta = B_beta' on every outcome.
        """
        v = np.asarray(self.values)
        n = len(v)
        A = np.repeat(v, n)
        B = np.tile(v, n)
        outcomes = np.stack([A, A, B, B], axis=1)
        return outcomes, self.mixed_table().ravel()


def correlator_joint_model(model: JointDistributionModel, pair: str) -> float:
    if pair not in PAIRS:
        raise KeyError(f"unknown setting pair {pair!r}")
    v = np.asarray(model.values)
    prod = np.outer(v, v)
    return math.fsum(w * math.fsum((prod * t).ravel()) for w, t in zip(model.weights, model.tables))


def chsh_joint_model(model: JointDistributionModel) -> float:
    return chsh_combination(*(correlator_joint_model(model, p) for p in PAIRS))


@dataclass(frozen=True)
class ExpectationChain:
    """The expectation-value chain for four random variables, one field per line.

    ``lines[0]`` is B computed from the four expectations; each later entry is
    the next expression in the chain. The chain holds when the equalities
    match and the inequalities go the right way.
    """

    lines: tuple[float, ...]
    relations: tuple[str, ...] = ("=", "<=", "=", "<=", "<=")
    abs_expectation_ok: bool = True  # |E(X)| <= E(|X|) on each bracket
    max_bound_ok: bool = True  # E(Y) <= Y_max

    def holds(self, tol: float = TOL) -> bool:
        ok = self.abs_expectation_ok and self.max_bound_ok
        for lhs, rel, rhs in zip(self.lines, self.relations, self.lines[1:]):
            ok &= abs(lhs - rhs) <= tol if rel == "=" else lhs <= rhs + tol
        return bool(ok)

    @property
    def B(self) -> float:
        return self.lines[0]


def expectation_chain(outcomes: np.ndarray, probs: np.ndarray) -> ExpectationChain:
    """Evaluate each step for a finite joint law of (A_alpha, A_alpha', B_beta, B_beta').

    ``outcomes`` is (n, 4) with entries in [-1, 1]; ``probs`` has length n.
    """
    outcomes = np.asarray(outcomes, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if outcomes.ndim != 2 or outcomes.shape[1] != 4 or len(probs) != len(outcomes):
        raise ModelValidationError("outcomes must be (n, 4) with one probability per row")
    if np.any(np.abs(outcomes) > 1.0):
        raise DomainError("random variables must take values in [-1, 1]")
    if np.any(probs < 0.0) or abs(math.fsum(probs) - 1.0) > TOL:
        raise ModelValidationError("outcome probabilities must be non-negative and sum to 1")

    def E(x):
        return math.fsum(x * probs)

    a, ap, b, bp = outcomes.T
    X1 = a * b - a * bp
    X2 = ap * b + ap * bp
    Y = np.abs(X1) + np.abs(X2)

    line1 = abs(E(a * b) - E(a * bp)) + abs(E(ap * b) + E(ap * bp))
    line2 = abs(E(X1)) + abs(E(X2))
    line3 = E(np.abs(X1)) + E(np.abs(X2))
    line4 = E(Y)
    # Y_max over the support actually reachable
    support = probs > 0.0
    line5 = float(Y[support].max())
    line6 = 2.0
    abs_ok = abs(E(X1)) <= E(np.abs(X1)) + TOL and abs(E(X2)) <= E(np.abs(X2)) + TOL
    max_ok = line4 <= line5 + TOL
    return ExpectationChain((line1, line2, line3, line4, line5, line6), abs_expectation_ok=abs_ok, max_bound_ok=max_ok)


def joint_model_chain(model: JointDistributionModel) -> ExpectationChain:
    outcomes, probs = model.random_variables()
    chain = expectation_chain(outcomes, probs)
    # the pair-label route must agree with the random-variable route
    if abs(chain.B - chsh_joint_model(model)) > 1e-12:
        raise AssertionError("joint-model B disagrees between correlator and random-variable routes")
    return chain


# -- non-factorizable counterexample ------------------------------------------

def quantum_mimic_joint(pair_angle_difference: float) -> np.ndarray:
    """P(a, b) = (1 - a*b*cos(delta)) / 4, as a 2x2 array indexed [a_idx, b_idx] (+1 first)."""
    c = math.cos(pair_angle_difference)
    return np.array([[(1.0 - c) / 4.0, (1.0 + c) / 4.0], [(1.0 + c) / 4.0, (1.0 - c) / 4.0]])


def correlator_from_table(table: np.ndarray) -> float:
    t = np.asarray(table, dtype=float)
    return math.fsum((t * np.array([[1.0, -1.0], [-1.0, 1.0]])).ravel())


def chsh_quantum_mimic(settings: AngleSettings) -> float:
    xi = []
    for p in PAIRS:
        al, be = settings.pair_angles(p)
        xi.append(correlator_from_table(quantum_mimic_joint(al - be)))
    return chsh_combination(*xi)


# -- random model generators for sweeps ----------------------------------------

def random_simplex(rng: np.random.Generator, k: int, size: int | None = None) -> np.ndarray:
    """Uniform draws on the probability simplex via normalised exponentials."""
    shape = (k,) if size is None else (size, k)
    e = rng.exponential(size=shape)
    return e / e.sum(axis=-1, keepdims=True)


def random_p16(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    return random_simplex(rng, 16, size)


def random_settings(rng: np.random.Generator) -> AngleSettings:
    return AngleSettings(*rng.uniform(0.0, 2.0 * math.pi, size=4))


def random_factorizable_model(
    rng: np.random.Generator, settings: AngleSettings, n_lambda: int | None = None
) -> HiddenVariableModel:
    """Random tabulated model responding at the four given angles.

    Values are uniform in [-1, 1], probability weights uniform in [0, 1].
    """
    if n_lambda is None:
        n_lambda = int(rng.integers(1, 9))
    weights = random_simplex(rng, n_lambda)
    # renormalise through fsum so the weights pass the 1e-12 sum check
    weights = weights / math.fsum(weights)
    lambdas = tuple(range(n_lambda))
    table_A, table_B = {}, {}
    for lam in lambdas:
        v = rng.uniform(-1.0, 1.0, size=4)
        q = rng.uniform(0.0, 1.0, size=4)
        table_A[lam] = {settings.alpha: (v[0], q[0]), settings.alpha_prime: (v[1], q[1])}
        table_B[lam] = {settings.beta: (v[2], q[2]), settings.beta_prime: (v[3], q[3])}
        # coinciding angles on one wing must answer identically
        if _angles_match(settings.alpha, settings.alpha_prime, 1e-9):
            table_A[lam] = {settings.alpha: (v[0], q[0])}
        if _angles_match(settings.beta, settings.beta_prime, 1e-9):
            table_B[lam] = {settings.beta: (v[2], q[2])}
    return HiddenVariableModel.from_tables(lambdas, weights, table_A, table_B)


def random_joint_model(
    rng: np.random.Generator,
    n_lambda: int | None = None,
    values: Sequence[float] | None = None,
) -> JointDistributionModel:
    if n_lambda is None:
        n_lambda = int(rng.integers(1, 9))
    if values is None:
        values = (1.0, -1.0) if rng.random() < 0.5 else tuple(rng.uniform(-1.0, 1.0, size=int(rng.integers(2, 5))))
    n = len(values)
    weights = random_simplex(rng, n_lambda)
    weights = weights / math.fsum(weights)
    tables = []
    for _ in range(n_lambda):
        t = random_simplex(rng, n * n)
        t = t / math.fsum(t)
        tables.append(t.reshape(n, n))
    return JointDistributionModel(tuple(range(n_lambda)), tuple(weights), tuple(tables), tuple(values))


def random_four_variable_law(rng: np.random.Generator, n_outcomes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Random finite joint law of four [-1, 1]-valued variables with distinct settings."""
    if n_outcomes is None:
        n_outcomes = int(rng.integers(1, 17))
    outcomes = rng.uniform(-1.0, 1.0, size=(n_outcomes, 4))
    # mix in some dichotomic rows so the bound is approached
    dich = rng.random(n_outcomes) < 0.5
    outcomes[dich] = np.sign(outcomes[dich])
    probs = random_simplex(rng, n_outcomes)
    return outcomes, probs / math.fsum(probs)
