"""Measurement-angle search for the largest CHSH value a correlator source allows."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import TWO_PI, AngleSettings, chsh_combination
from .lhv import chsh_of_p16_batch, point_mass, random_p16

CorrelatorSource = Callable[[float, float], float]

DEFAULT_GRID = 24
DEFAULT_TOL = 1e-7
MAX_ITERATIONS = 100_000


@dataclass(frozen=True)
class OptimizationResult:
    settings: AngleSettings
    B: float
    iterations: int
    converged: bool


def chsh_from_source(source: CorrelatorSource, settings: AngleSettings) -> float:
    s = settings
    xi = [source(s.alpha, s.beta), source(s.alpha, s.beta_prime), source(s.alpha_prime, s.beta), source(s.alpha_prime, s.beta_prime)]
    for x in xi:
        if not math.isfinite(x):
            raise ValueError(f"source returned non-finite correlator {x!r}")
    return chsh_combination(*xi)


def _grid_search(source: CorrelatorSource, grid_n: int, fix_alpha: bool) -> tuple[float, ...]:
    grid = TWO_PI * np.arange(grid_n) / grid_n
    table = np.array([[source(a, b) for b in grid] for a in grid], dtype=float)
    if not np.all(np.isfinite(table)):
        raise ValueError("source returned non-finite correlators on the search grid")
    first = table[:1] if fix_alpha else table  # rows for alpha
    # B[i, j, k, l] over (alpha_i, alpha'_j, beta_k, beta'_l)
    B = np.abs(first[:, None, :, None] - first[:, None, None, :]) + np.abs(
        table[None, :, :, None] + table[None, :, None, :]
    )
    # argmax returns the first maximum in C order: the lexicographically smallest tuple
    i, j, k, l = np.unravel_index(int(np.argmax(B)), B.shape)
    return (grid[i], grid[j], grid[k], grid[l])


def maximize_chsh(
    source: CorrelatorSource,
    grid_n: int = DEFAULT_GRID,
    refine_tol: float = DEFAULT_TOL,
    fix_alpha: bool = True,
) -> OptimizationResult:
    """Coarse grid over the four angles, then coordinate ascent with a halving step.

    With ``fix_alpha`` the first angle stays at 0, which is exact for sources
    that depend on angle differences only.
    """
    if grid_n < 8:
        raise ValueError("grid_n must be at least 8")
    if not refine_tol > 0:
        raise ValueError("refine_tol must be positive")

    x = list(_grid_search(source, grid_n, fix_alpha))
    free = [1, 2, 3] if fix_alpha else [0, 1, 2, 3]

    def value(angles):
        return chsh_from_source(source, AngleSettings(*angles))

    best = value(x)
    step = TWO_PI / grid_n / 2.0
    iterations = 0
    while step >= refine_tol and iterations < MAX_ITERATIONS:
        iterations += 1
        improved = False
        for idx in free:
            for direction in (1.0, -1.0):
                trial = list(x)
                trial[idx] += direction * step
                v = value(trial)
                if v > best:
                    x, best, improved = trial, v, True
                    break
        if not improved:
            step /= 2.0
    settings = AngleSettings(*x).canonical()
    return OptimizationResult(settings, chsh_from_source(source, settings), iterations, step < refine_tol)


def lhv_ceiling_search(n_models: int, seed: int) -> float:
    """Largest CHSH value over the 16 vertices plus ``n_models`` random mixtures."""
    if n_models < 0:
        raise ValueError("n_models must be non-negative")
    vertices = np.stack([point_mass(i) for i in range(1, 17)])
    best = float(chsh_of_p16_batch(vertices).max())
    rng = np.random.default_rng(seed)
    remaining = n_models
    while remaining > 0:
        batch = min(remaining, 100_000)
        best = max(best, float(chsh_of_p16_batch(random_p16(rng, batch)).max()))
        remaining -= batch
    return best


def slice_alpha_beta(source: CorrelatorSource, settings: AngleSettings, grid_n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """CHSH over an (alpha, beta) grid with alpha' and beta' held at ``settings``.

    The grid is anchored at the given alpha and beta, so ``settings`` itself is
    the point (0, 0). Returns alpha values, beta values (both in [0, 2*pi))
    and ``B[i, j]`` at ``(alphas[i], betas[j])``.
    """
    steps = TWO_PI * np.arange(grid_n) / grid_n
    alphas = np.mod(settings.alpha + steps, TWO_PI)
    betas = np.mod(settings.beta + steps, TWO_PI)
    ap, bp = settings.alpha_prime, settings.beta_prime
    xi_ab = np.array([[source(a, b) for b in betas] for a in alphas])
    xi_abp = np.array([source(a, bp) for a in alphas])
    xi_apb = np.array([source(ap, b) for b in betas])
    xi_apbp = source(ap, bp)
    B = np.abs(xi_ab - xi_abp[:, None]) + np.abs(xi_apb[None, :] + xi_apbp)
    return alphas, betas, B
