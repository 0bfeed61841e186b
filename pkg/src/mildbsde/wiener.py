"""Truncated cylindrical Wiener ensembles and least-squares conditional expectations.

Conditional expectations given the path history are realized as ridge-regularized
least-squares projections onto polynomial features of the current Brownian
coordinates (the standard regression Monte Carlo construction).  Everything is
deterministic given (seed, M, grid): paths are drawn in fixed blocks of 1024,
block b seeded by child b of ``SeedSequence(seed)``, so enlarging M appends new
paths without redrawing existing ones.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "TimeGrid",
    "WienerEnsemble",
    "RegressionBasis",
    "Regression",
    "sample_ensemble",
    "save_ensemble",
    "load_ensemble",
    "conditional_expectation",
    "martingale_z_estimate",
]

_PATH_BLOCK = 1024


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing grid 0 = t_0 < ... < t_L = T."""

    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("grid needs at least two nodes")
        if times[0] != 0.0:
            raise ValueError("grid must start at 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("grid times must be strictly increasing")

    @classmethod
    def uniform(cls, horizon: float, steps: int) -> "TimeGrid":
        if horizon <= 0 or steps < 1:
            raise ValueError("need positive horizon and at least one step")
        return cls(np.linspace(0.0, horizon, steps + 1))

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    @property
    def deltas(self) -> np.ndarray:
        return np.diff(self.times)


@dataclass
class WienerEnsemble:
    """M sampled paths of a K-truncated cylindrical Wiener process.

    ``increments[m, l, k]`` ~ Normal(0, dt_l), independent across all indices.
    """

    grid: TimeGrid
    increments: np.ndarray
    seed: int
    _paths: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def n_paths(self) -> int:
        return self.increments.shape[0]

    @property
    def n_noise(self) -> int:
        return self.increments.shape[2]

    def paths(self) -> np.ndarray:
        """Cumulative coordinates W_{t_l}, shape (M, L+1, K); W_0 = 0."""
        if self._paths is None:
            m, l, k = self.increments.shape
            w = np.zeros((m, l + 1, k))
            np.cumsum(self.increments, axis=1, out=w[:, 1:, :])
            self._paths = w
        return self._paths


def sample_ensemble(grid: TimeGrid, k: int, m: int, seed: int) -> WienerEnsemble:
    """Draw a reproducible ensemble; identical seeds give bit-identical arrays."""
    if k < 1 or m < 1:
        raise ValueError("need at least one path and one noise coordinate")
    n_steps = grid.n_steps
    scale = np.sqrt(grid.deltas)[None, :, None]
    out = np.empty((m, n_steps, k))
    children = np.random.SeedSequence(seed).spawn((m + _PATH_BLOCK - 1) // _PATH_BLOCK)
    for b, child in enumerate(children):
        rng = np.random.default_rng(child)
        draw = rng.standard_normal((_PATH_BLOCK, n_steps, k))
        lo = b * _PATH_BLOCK
        hi = min(lo + _PATH_BLOCK, m)
        out[lo:hi] = draw[: hi - lo]
    out *= scale
    return WienerEnsemble(grid=grid, increments=out, seed=int(seed))


def save_ensemble(path, ensemble: WienerEnsemble) -> None:
    """Checkpoint: binary arrays plus a (seed, M, L, K) header for reuse across runs."""
    np.savez(
        path,
        times=ensemble.grid.times,
        increments=ensemble.increments,
        seed=np.array([ensemble.seed], dtype=np.int64),
        shape_mlk=np.array(ensemble.increments.shape, dtype=np.int64),
    )


def load_ensemble(path) -> WienerEnsemble:
    with np.load(path) as data:
        grid = TimeGrid(data["times"])
        inc = data["increments"]
        seed = int(data["seed"][0])
        if tuple(data["shape_mlk"]) != inc.shape:
            raise ValueError("checkpoint header does not match array shape")
    return WienerEnsemble(grid=grid, increments=inc, seed=seed)


# ---------------------------------------------------------------------------
# regression bases and conditional expectations


@dataclass(frozen=True)
class RegressionBasis:
    """Adapted feature map: monomials of the first ``n_coords`` Brownian coordinates.

    Features at node l depend only on increments with index < l, which is what
    makes regression on them a conditional expectation given the time-l history.
    ``ridge`` is scaled by trace(Phi' Phi)/B to stabilize near-collinear designs.
    A custom ``feature_fn(ensemble, t_index) -> (M, B)`` overrides the default.
    """

    degree: int = 2
    n_coords: int | None = None
    ridge: float = 1e-8
    feature_fn: Callable[[WienerEnsemble, int], np.ndarray] | None = None

    def __post_init__(self):
        if self.degree < 0 or self.ridge < 0:
            raise ValueError("degree and ridge must be nonnegative")

    def design(self, ensemble: WienerEnsemble, t_index: int) -> np.ndarray:
        if self.feature_fn is not None:
            return np.asarray(self.feature_fn(ensemble, t_index), dtype=float)
        k = ensemble.n_noise if self.n_coords is None else min(self.n_coords, ensemble.n_noise)
        w = ensemble.paths()[:, t_index, :k]
        cols = [np.ones(w.shape[0])]
        for deg in range(1, self.degree + 1):
            for combo in itertools.combinations_with_replacement(range(k), deg):
                col = w[:, combo[0]].copy()
                for j in combo[1:]:
                    col = col * w[:, j]
                cols.append(col)
        return np.stack(cols, axis=1)


@dataclass(frozen=True)
class Regression:
    fitted: np.ndarray
    coef: np.ndarray
    rank_deficient: bool


def conditional_expectation(
    ensemble: WienerEnsemble,
    basis: RegressionBasis,
    t_index: int,
    targets: np.ndarray,
) -> Regression:
    """L^2 projection of per-path targets onto the adapted feature span.

    Returns fitted values (functions of time-t_index features only) and the
    coefficient matrix.  With ridge = 0 a rank-deficient design falls back to
    the pseudo-inverse and is flagged.
    """
    targets = np.asarray(targets, dtype=float)
    squeeze = targets.ndim == 1
    if squeeze:
        targets = targets[:, None]
    if not np.all(np.isfinite(targets)):
        raise ValueError("regression targets must be finite")
    phi = basis.design(ensemble, t_index)
    if phi.shape[0] != targets.shape[0]:
        raise ValueError("targets and design have different path counts")
    b = phi.shape[1]
    rank_deficient = False
    if basis.ridge > 0:
        gram = phi.T @ phi
        lam = basis.ridge * np.trace(gram) / b
        coef = np.linalg.solve(gram + lam * np.eye(b), phi.T @ targets)
    else:
        coef, _, rank, _ = np.linalg.lstsq(phi, targets, rcond=None)
        rank_deficient = rank < b
    fitted = phi @ coef
    if squeeze:
        fitted = fitted[:, 0]
        coef = coef[:, 0]
    return Regression(fitted=fitted, coef=coef, rank_deficient=rank_deficient)


def martingale_z_estimate(
    ensemble: WienerEnsemble,
    basis: RegressionBasis,
    t_index: int,
    next_value: np.ndarray,
) -> np.ndarray:
    """Per-path estimate of the stochastic-integral density Z at node t_index.

    Regresses next_value (x) dW_l / dt_l onto time-l features.  The next value
    is first centered by its own fitted conditional expectation; the centering
    term is uncorrelated with dW_l, so the estimand is unchanged while the
    regression noise drops (deterministic next values give Z at ridge-bias
    scale instead of one Monte Carlo standard error).  Returns shape (M, N, K).
    """
    next_value = np.asarray(next_value, dtype=float)
    if next_value.ndim == 1:
        next_value = next_value[:, None]
    m, n = next_value.shape
    if t_index >= ensemble.grid.n_steps:
        raise ValueError("no increment lies to the right of the final node")
    dw = ensemble.increments[:, t_index, :]
    dt = float(ensemble.grid.deltas[t_index])
    centered = next_value - conditional_expectation(ensemble, basis, t_index, next_value).fitted
    targets = (centered[:, :, None] * dw[:, None, :] / dt).reshape(m, -1)
    fit = conditional_expectation(ensemble, basis, t_index, targets)
    return fit.fitted.reshape(m, n, ensemble.n_noise)
