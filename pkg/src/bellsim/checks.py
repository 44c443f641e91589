"""Named oracle checks run by ``bellsim verify``.

Each check returns the smallest slack (bound minus value) it observed, so a
negative ``worst_margin`` beyond the tolerance is a failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .core import TOL, lemma_abs_sum_margins, q_quantity_array
from .lhv import (
    enumerate_assignments,
    expectation_chain,
    factorizable_chain,
    format_table_row,
    joint_model_chain,
    point_mass,
    random_factorizable_model,
    random_four_variable_law,
    random_joint_model,
    random_p16,
    random_settings,
    wigner_chain,
    _PRODUCTS,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst_margin: float
    samples: int
    detail: str = ""


def golden_table() -> list[str]:
    text = resources.files("bellsim").joinpath("data/sign_table.txt").read_text()
    return [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")]


def check_wigner_table(golden: list[str] | None = None) -> CheckResult:
    golden = golden_table() if golden is None else golden
    rows = [format_table_row(r) for r in enumerate_assignments()]
    bad = [i + 1 for i, (g, r) in enumerate(zip(golden, rows)) if g.split() != r.split()]
    if len(golden) != len(rows):
        bad.append(len(rows) + 1)
    return CheckResult("wigner-table", not bad, 0.0 if not bad else -1.0, len(rows), f"mismatched rows {bad}" if bad else "")


def check_vertices() -> CheckResult:
    values = []
    for i in range(1, 17):
        values.append(wigner_chain(point_mass(i)).B)
    ok = set(values) <= {0.0, 2.0} and max(values) == 2.0
    return CheckResult("wigner-vertices", ok, 2.0 - max(values), 16, f"values {sorted(set(values))}")


def wigner_margins(ps: np.ndarray) -> np.ndarray:
    """Vectorised slack of each step of the 16-row bound; shape (n,)."""
    xi = ps @ _PRODUCTS
    first = np.abs(xi[:, 0] - xi[:, 1])
    second = np.abs(xi[:, 2] + xi[:, 3])
    first_bound = 2.0 * ps[:, _PRODUCTS[:, 0] != _PRODUCTS[:, 1]].sum(axis=1)
    second_bound = 2.0 * ps[:, _PRODUCTS[:, 2] == _PRODUCTS[:, 3]].sum(axis=1)
    total = 2.0 * ps.sum(axis=1)
    return np.minimum.reduce([first_bound - first, second_bound - second, total - (first_bound + second_bound), 2.0 - total, 2.0 - first - second])


def check_p16_sweep(n: int, rng: np.random.Generator) -> CheckResult:
    worst = math.inf
    done = 0
    while done < n:
        batch = min(n - done, 100_000)
        worst = min(worst, float(wigner_margins(random_p16(rng, batch)).min()))
        done += batch
    return CheckResult("p16-sweep", worst >= -TOL, worst, n)


def check_lemma(n: int, rng: np.random.Generator) -> CheckResult:
    y, yp = rng.uniform(-1.0, 1.0, size=(2, n))
    # include the corners, where equality holds
    corners = np.array([-1.0, 1.0])
    y = np.concatenate([y, np.repeat(corners, 2)])
    yp = np.concatenate([yp, np.tile(corners, 2)])
    plus, minus = lemma_abs_sum_margins(y, yp)
    worst = float(min(plus.min(), minus.min()))
    return CheckResult("lemma-abs-sum", worst >= -TOL, worst, len(y))


def check_q_bound(n: int, rng: np.random.Generator) -> CheckResult:
    x = rng.uniform(-1.0, 1.0, size=(4, n))
    q = q_quantity_array(*x)
    worst = float(2.0 - q.max())
    return CheckResult("q-bound", worst >= -TOL, worst, n)


def check_factorizable(n_models: int, rng: np.random.Generator) -> CheckResult:
    worst = math.inf
    for _ in range(n_models):
        settings = random_settings(rng)
        model = random_factorizable_model(rng, settings)
        chain = factorizable_chain(model, settings)
        if not chain.holds():
            return CheckResult("factorizable-sweep", False, 2.0 - chain.B, n_models, f"chain broken: {chain}")
        worst = min(worst, 2.0 - chain.B)
    return CheckResult("factorizable-sweep", worst >= -TOL, worst, n_models)


def check_joint_chain(n_models: int, rng: np.random.Generator) -> CheckResult:
    worst = math.inf
    for i in range(n_models):
        chain = joint_model_chain(random_joint_model(rng))
        general = expectation_chain(*random_four_variable_law(rng))
        for c in (chain, general):
            if not c.holds():
                return CheckResult("joint-chain", False, 2.0 - c.B, i, f"chain broken: {c.lines}")
            worst = min(worst, 2.0 - c.B)
    return CheckResult("joint-chain", worst >= -TOL, worst, 2 * n_models)


def check_original_bell(n: int, rng: np.random.Generator) -> CheckResult:
    """Three-correlator form from rows with b' = -a' (perfect anticorrelation at c).

    With xi(c, c) = -1 the CHSH bound becomes |xi(a,b) - xi(a,c)| <= 1 + xi(c,b),
    where xi(a,c) is read from the (a, b') column and xi(c,b) from (a', b).
    """
    rows = [r.row_index - 1 for r in enumerate_assignments() if r.a_prime == -r.b_prime]
    ps = np.zeros((n, 16))
    ps[:, rows] = random_p16(rng, n)[:, : len(rows)]
    ps /= ps.sum(axis=1, keepdims=True)
    xi = ps @ _PRODUCTS  # columns ab, ac, cb, cc = -1
    lhs = np.abs(xi[:, 0] - xi[:, 1])
    rhs = 1.0 + xi[:, 2]
    worst = float((rhs - lhs).min())
    return CheckResult("original-bell", worst >= -TOL, worst, n)


def run_all(samples: int = 100_000, models: int = 10_000, seed: int = 0, corrupt_table: bool = False) -> list[CheckResult]:
    root = np.random.SeedSequence(seed)
    rngs = [np.random.default_rng(s) for s in root.spawn(6)]
    golden = golden_table()
    if corrupt_table:
        golden = list(golden)
        golden[6] = golden[6].replace("+", "#", 1)
    return [
        check_wigner_table(golden),
        check_vertices(),
        check_p16_sweep(samples, rngs[0]),
        check_lemma(samples, rngs[1]),
        check_q_bound(samples, rngs[2]),
        check_original_bell(samples, rngs[3]),
        check_factorizable(models, rngs[4]),
        check_joint_chain(models, rngs[5]),
    ]
