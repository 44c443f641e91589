"""Finite-statistics Bell tests.

Every source maps one setting pair to a sampler of joint (a, b) outcomes.
Trials are drawn in fixed-size chunks; chunk ``c`` of pair ``k`` draws from
its own Philox stream keyed by ``SeedSequence(seed, spawn_key=(k, c))``, so
the counts depend only on the seed and the plan, never on how many worker
threads ran the chunks or in what order.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .core import (
    MAXIMAL_VIOLATION_SETTINGS,
    PAIRS,
    AngleSettings,
    ChshReport,
    EventCounts,
    chsh_combination,
    correlator_from_counts,
    correlator_standard_error,
)
from .lhv import (
    HiddenVariableModel,
    JointDistributionModel,
    as_p16,
    correlator_factorizable,
    correlator_joint_model,
    correlators_from_p16,
    enumerate_assignments,
)
from .quantum import QuantumState, correlator_qm, joint_outcome_distribution, singlet_state

DEFAULT_CHUNK = 1 << 16
SCHEMA = "bellsim.mc/1"

# photon cascade Bell test: prediction with apparatus imperfections, and measurement
ASPECT_PREDICTION = (2.70, 0.05)
ASPECT_MEASUREMENT = (2.6970, 0.015)

_PAIR_INDEX = {p: i for i, p in enumerate(PAIRS)}
# probabilities below this are treated as exact zeros (matrix round-off)
_ZERO_CUTOFF = 1e-15


def substream(seed: int, pair_index: int, chunk_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(pair_index, chunk_index))
    return np.random.Generator(np.random.Philox(ss))


def _cdf(probs: np.ndarray) -> np.ndarray:
    p = np.where(np.asarray(probs, dtype=float) < _ZERO_CUTOFF, 0.0, probs)
    cdf = np.cumsum(p) / p.sum()
    # categories after the last positive one must have empty intervals
    cdf[np.flatnonzero(p)[-1]:] = 1.0
    return cdf


def _categorical(rng: np.random.Generator, cdf: np.ndarray, n: int) -> np.ndarray:
    return np.searchsorted(cdf, rng.random(n), side="right")


def _table_counts(rng: np.random.Generator, table: np.ndarray, n: int) -> np.ndarray:
    idx = _categorical(rng, _cdf(np.asarray(table).ravel()), n)
    return np.bincount(idx, minlength=4)


def _pair_counts(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Counts (N++, N+-, N-+, N--) from arrays of +1/-1 outcomes."""
    idx = 2 * (a < 0) + (b < 0)
    return np.bincount(idx, minlength=4)


def _dichotomise(rng: np.random.Generator, x: np.ndarray) -> np.ndarray:
    """+1 with probability (1 + x)/2, else -1; exact for x = +-1."""
    return np.where(rng.random(x.shape) < (1.0 + x) / 2.0, 1, -1)


class Source(Protocol):
    name: str

    def sample(self, rng: np.random.Generator, n: int, settings: AngleSettings, pair: str) -> np.ndarray: ...

    def correlator(self, settings: AngleSettings, pair: str) -> float: ...


@dataclass(frozen=True)
class QuantumSource:
    state: QuantumState = field(default_factory=singlet_state)
    name: str = "quantum"

    def sample(self, rng, n, settings, pair):
        return _table_counts(rng, joint_outcome_distribution(self.state, *settings.pair_angles(pair)), n)

    def correlator(self, settings, pair):
        return correlator_qm(self.state, *settings.pair_angles(pair))


@dataclass(frozen=True)
class VisibilityModel:
    """Singlet correlations scaled by a visibility V in [0, 1]."""

    V: float

    def __post_init__(self):
        if not (math.isfinite(self.V) and 0.0 <= self.V <= 1.0):
            raise ValueError(f"visibility must lie in [0, 1], got {self.V!r}")

    def correlator(self, alpha: float, beta: float) -> float:
        return -self.V * math.cos(alpha - beta)

    def joint(self, alpha: float, beta: float) -> np.ndarray:
        c = self.V * math.cos(alpha - beta)
        return np.array([[(1.0 - c) / 4.0, (1.0 + c) / 4.0], [(1.0 + c) / 4.0, (1.0 - c) / 4.0]])


def visibility_correlator(V, alpha: float, beta: float) -> float:
    model = V if isinstance(V, VisibilityModel) else VisibilityModel(float(V))
    return model.correlator(alpha, beta)


def visibility_for_chsh(target: float) -> float:
    """Visibility whose ideal-angle CHSH value is ``target``."""
    return target / (2.0 * math.sqrt(2.0))


def chsh_visibility(V, settings: AngleSettings = MAXIMAL_VIOLATION_SETTINGS) -> float:
    return chsh_combination(*(visibility_correlator(V, *settings.pair_angles(p)) for p in PAIRS))


@dataclass(frozen=True)
class VisibilitySource:
    model: VisibilityModel
    name: str = "visibility"

    def sample(self, rng, n, settings, pair):
        return _table_counts(rng, self.model.joint(*settings.pair_angles(pair)), n)

    def correlator(self, settings, pair):
        return self.model.correlator(*settings.pair_angles(pair))


_ROW_SIGNS = np.array([r.signs for r in enumerate_assignments()])
# which sign columns (a, b, a', b') each pair reads
_PAIR_COLUMNS = {"ab": (0, 1), "ab'": (0, 3), "a'b": (2, 1), "a'b'": (2, 3)}


@dataclass(frozen=True)
class P16Source:
    """Each trial draws one row of the 16-row table and reads the pair's two signs."""

    p: np.ndarray
    name: str = "p16"

    def __post_init__(self):
        object.__setattr__(self, "p", as_p16(self.p))

    def sample(self, rng, n, settings, pair):
        rows = _categorical(rng, _cdf(self.p), n)
        i, j = _PAIR_COLUMNS[pair]
        return _pair_counts(_ROW_SIGNS[rows, i], _ROW_SIGNS[rows, j])

    def correlator(self, settings, pair):
        return correlators_from_p16(self.p)[_PAIR_INDEX[pair]]


@dataclass(frozen=True)
class FactorizableSource:
    """Draw lambda, then each wing independently: +1 with probability (1 + effective)/2."""

    model: HiddenVariableModel
    name: str = "factorizable"

    def sample(self, rng, n, settings, pair):
        alpha, beta = settings.pair_angles(pair)
        m = self.model
        eff_a = np.array([m.effective_A(alpha, l) for l in m.lambdas])
        eff_b = np.array([m.effective_B(beta, l) for l in m.lambdas])
        lam = _categorical(rng, _cdf(np.asarray(m.weights)), n)
        return _pair_counts(_dichotomise(rng, eff_a[lam]), _dichotomise(rng, eff_b[lam]))

    def correlator(self, settings, pair):
        return correlator_factorizable(self.model, settings.pair_angles(pair))


@dataclass(frozen=True)
class JointSource:
    """Draw lambda, then an (A, B) cell of its table, then dichotomise each value."""

    model: JointDistributionModel
    name: str = "joint"

    def sample(self, rng, n, settings, pair):
        m = self.model
        vals = np.asarray(m.values)
        k = len(vals)
        lam = _categorical(rng, _cdf(np.asarray(m.weights)), n)
        cells = np.empty(n, dtype=np.int64)
        for li, table in enumerate(m.tables):
            sel = np.flatnonzero(lam == li)
            if sel.size:
                cells[sel] = _categorical(rng, _cdf(table.ravel()), sel.size)
        return _pair_counts(_dichotomise(rng, vals[cells // k]), _dichotomise(rng, vals[cells % k]))

    def correlator(self, settings, pair):
        return correlator_joint_model(self.model, pair)


@dataclass(frozen=True)
class TrialPlan:
    n_per_pair: int
    settings: AngleSettings
    source: Source
    seed: int
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self):
        if int(self.n_per_pair) < 1:
            raise ValueError(f"n_per_pair must be >= 1, got {self.n_per_pair!r}")
        if int(self.chunk_size) < 1:
            raise ValueError("chunk_size must be >= 1")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not hasattr(self.source, "sample"):
            raise TypeError(f"unresolvable source {self.source!r}")

    def tasks(self) -> list[tuple[int, int, int]]:
        """(pair index, chunk index, trials in chunk) for every unit of work."""
        out = []
        full, rest = divmod(int(self.n_per_pair), int(self.chunk_size))
        sizes = [self.chunk_size] * full + ([rest] if rest else [])
        for k in range(len(PAIRS)):
            out.extend((k, c, n) for c, n in enumerate(sizes))
        return out


def sample_events(plan: TrialPlan, threads: int = 1) -> EventCounts:
    def run(task):
        k, c, n = task
        rng = substream(plan.seed, k, c)
        return k, plan.source.sample(rng, n, plan.settings, PAIRS[k])

    totals = [[0, 0, 0, 0] for _ in PAIRS]
    tasks = plan.tasks()
    if threads <= 1:
        results = map(run, tasks)
        for k, counts in results:
            _accumulate(totals[k], counts)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for k, counts in pool.map(run, tasks):
                _accumulate(totals[k], counts)
    return EventCounts({p: tuple(totals[k]) for k, p in enumerate(PAIRS)})


def _accumulate(acc: list[int], counts: np.ndarray) -> None:
    for i in range(4):
        acc[i] += int(counts[i])


def estimate_chsh(counts: EventCounts) -> ChshReport:
    xi, se, n = {}, {}, {}
    for p in PAIRS:
        xi[p] = correlator_from_counts(counts, p)
        n[p] = counts.total(p)
        se[p] = correlator_standard_error(xi[p], n[p])
    return ChshReport(xi, se, n)


@dataclass(frozen=True)
class AspectComparison:
    B_pred: float
    B_est: float
    B_est_se: float
    compatible: bool
    report: ChshReport


def aspect_comparison(
    V,
    n_per_pair: int,
    seed: int,
    settings: AngleSettings = MAXIMAL_VIOLATION_SETTINGS,
    threads: int = 1,
) -> AspectComparison:
    model = V if isinstance(V, VisibilityModel) else VisibilityModel(float(V))
    B_pred = chsh_visibility(model, settings)
    counts = sample_events(TrialPlan(n_per_pair, settings, VisibilitySource(model), seed), threads=threads)
    report = estimate_chsh(counts)
    compatible = abs(report.B - B_pred) <= 3.0 * report.B_se
    return AspectComparison(B_pred, report.B, report.B_se, compatible, report)


def measured_value_compatible(B_pred: float, measured: tuple[float, float] = ASPECT_MEASUREMENT, k: float = 3.0) -> bool:
    value, sigma = measured
    return abs(value - B_pred) <= k * sigma


# -- output records ---------------------------------------------------------------

def counts_csv(counts: EventCounts, report: ChshReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pair", "n_pp", "n_pm", "n_mp", "n_mm", "xi", "se"])
    for p in PAIRS:
        w.writerow([p, *counts[p], repr(report.correlators[p]), repr(report.standard_errors[p])])
    return buf.getvalue()


def report_record(counts: EventCounts, report: ChshReport, **meta) -> dict:
    return {
        "schema": SCHEMA,
        **meta,
        "pairs": {
            p: {
                "counts": dict(zip(("pp", "pm", "mp", "mm"), counts[p])),
                "xi": report.correlators[p],
                "se": report.standard_errors[p],
            }
            for p in PAIRS
        },
        "B": report.B,
        "B_se": report.B_se,
    }


def exact_chsh(source: Source, settings: AngleSettings) -> float:
    return chsh_combination(*(source.correlator(settings, p) for p in PAIRS))

