"""Mild-form backward SDE solver on a truncated Hilbert space.

The solved object is the integral equation

    Y_t - int_t^T exp((s-t)A) [f0(s, Y_s) + f1(s, Y_s, Z_s)] ds
        + int_t^T exp((s-t)A) Z_s dW_s  =  exp((T-t)A) xi

with A diagonal dissipative, f0 dissipative with polynomial growth on the
alpha interpolation space, and f1 bounded Lipschitz.  The construction mirrors
the analytic existence proof so that its quantitative ingredients can be
measured:

* a Picard iteration on a terminal window whose length comes from the
  operator constants (contraction factor 1/2 in theory),
* right-to-left pasting of windows, with the radius of the invariant ball for
  later windows supplied by a fitted blow-up envelope,
* an outer fixed point for the (y, z)-coupled driver, contracting in an
  exp(beta t)-weighted norm with beta = 4 K^2 + 1,
* an exponential change of variables removing a positive monotonicity
  constant from f0 before anything else runs.

Bochner integrals against the semigroup are exact per component for the
piecewise-constant interpolant of the integrand, so no singular quadrature is
ever needed.  Conditional expectations are least-squares regressions from
``mildbsde.wiener``; given (problem, ensemble, basis) every map here is
deterministic, and Picard distances therefore decay to zero without a Monte
Carlo noise floor.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .spectral import (
    DiagonalOperator,
    EmpiricalConstants,
    estimate_constants,
    h_alpha_norm_batch,
    _step_factors,
)
from .wiener import (
    RegressionBasis,
    TimeGrid,
    WienerEnsemble,
    conditional_expectation,
    martingale_z_estimate,
    sample_ensemble,
)

__all__ = [
    "DissipativeDrift",
    "BoundedDriver",
    "BsdeProblem",
    "SolutionPair",
    "SolverConfig",
    "SolverReport",
    "WindowSelection",
    "SolverError",
    "RadiusExceeded",
    "WindowCollapse",
    "PicardDivergence",
    "OuterDivergence",
    "GridTooCoarse",
    "zero_drift",
    "exponential_shift",
    "unshift_solution",
    "apriori_h_bound",
    "blowup_bound",
    "select_local_radius_and_delta",
    "picard_map",
    "local_solve",
    "global_solve",
    "general_solve",
    "residual",
]

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class RadiusExceeded(SolverError):
    """A drift evaluation left the invariant ball; the window is too long."""


class WindowCollapse(SolverError):
    """The window-length formulas returned a nonpositive length."""


class PicardDivergence(SolverError):
    """Successive-iterate distances stopped contracting."""


class OuterDivergence(SolverError):
    """The weighted outer fixed point stopped contracting."""


class GridTooCoarse(SolverError):
    """A window shorter than one grid step was requested and refinement is off."""

    def __init__(self, message: str, factor: int = 2):
        super().__init__(message)
        self.factor = factor


# ---------------------------------------------------------------------------
# problem data


@dataclass
class DissipativeDrift:
    """Nonlinearity f0(t, y) defined on the alpha-space ball, with its constants.

    growth:      |f0(t,y)|_H <= growth_scale (1 + ||y||_alpha^growth_power)
    lipschitz:   |f0(t,y1)-f0(t,y2)|_H <= lipschitz(R) ||y1-y2||_alpha on the ball R
    monotonicity:<f0(t,y1)-f0(t,y2), y1-y2>_H <= monotonicity |y1-y2|_H^2
    """

    fn: Callable[[float, np.ndarray], np.ndarray]
    growth_scale: float
    growth_power: float
    monotonicity: float = 0.0
    lipschitz: Callable[[float], float] | float = 0.0

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        return self.fn(t, y)

    def lipschitz_at(self, radius: float) -> float:
        if callable(self.lipschitz):
            return float(self.lipschitz(radius))
        return float(self.lipschitz)

    @property
    def is_zero(self) -> bool:
        return self.growth_scale == 0.0 and not callable(self.lipschitz) and self.lipschitz == 0.0


def zero_drift() -> DissipativeDrift:
    return DissipativeDrift(fn=lambda t, y: np.zeros_like(y), growth_scale=0.0, growth_power=2.0)


@dataclass
class BoundedDriver:
    """Driver f1(t, y, z), bounded by ``bound`` and Lipschitz in (y, z) with one constant."""

    fn: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    lipschitz_const: float
    bound: float

    def __call__(self, t: float, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        return self.fn(t, y, z)


@dataclass
class BsdeProblem:
    """Terminal data, drift pair, operator and exponents of one backward equation.

    ``terminal`` maps a Wiener ensemble to per-path terminal states (M, N) and
    must be measurable with respect to the full path; ``terminal_bound`` is the
    declared essential bound of its alpha norm (may be inf for test problems
    with Gaussian tails).  ``terminal_bound_h`` optionally sharpens the H-norm
    bound used by the a-priori estimate; it defaults to ``terminal_bound``.
    """

    operator: DiagonalOperator
    horizon: float
    alpha: float
    terminal: Callable[[WienerEnsemble], np.ndarray]
    terminal_bound: float
    f0: DissipativeDrift | None = None
    f1: BoundedDriver | None = None
    noise_dim: int = 1
    terminal_bound_h: float | None = None
    label: str = ""
    validated: bool = False

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")
        if self.f0 is None:
            self.f0 = zero_drift()
        if self.f0.growth_power <= 1.0:
            raise ValueError("growth power must exceed 1")
        if self.alpha > 0.0 and not self.f0.is_zero and self.f0.growth_power * self.alpha >= 1.0:
            raise ValueError(
                "growth-exponent constraint violated: need growth_power < 1/alpha "
                f"(got {self.f0.growth_power} * {self.alpha} >= 1)"
            )
        if self.terminal_bound_h is None:
            self.terminal_bound_h = self.terminal_bound

    @property
    def theta(self) -> float:
        """Blow-up space order alpha * gamma; degenerates to alpha without a drift."""
        if self.f0.is_zero:
            return self.alpha
        return self.alpha * self.f0.growth_power

    @property
    def driver_bound(self) -> float:
        return 0.0 if self.f1 is None else self.f1.bound

    @property
    def driver_lipschitz(self) -> float:
        return 0.0 if self.f1 is None else self.f1.lipschitz_const


@dataclass
class SolutionPair:
    """Adapted grid processes: y at every node, z on left nodes of each step."""

    grid: TimeGrid
    y: np.ndarray  # (L+1, M, N)
    z: np.ndarray | None = None  # (L, M, N, K)


@dataclass
class SolverConfig:
    tol: float | None = None
    tol_outer: float | None = None
    max_iter: int = 50
    min_iter: int = 2
    max_outer: int = 25
    safety_margin: float = 1.2
    window_override: float | None = None
    require_validated: bool = True
    auto_shift: bool = True
    auto_refine_grid: bool = True
    constants_trials: int = 192
    compute_residual: bool = True

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class WindowSelection:
    """Ball radius and window length from the local-existence formulas.

    delta_lip keeps the Picard map a 1/2-contraction, delta_ball keeps it
    inside the ball of radius 2 M_alpha ||terminal||; delta is their minimum.
    """

    radius: float
    delta: float
    delta_lip: float
    delta_ball: float

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "delta": self.delta,
            "delta_lip": self.delta_lip,
            "delta_ball": self.delta_ball,
        }


@dataclass
class WindowStats:
    start_index: int
    end_index: int
    radius: float
    iterations: int
    distances: list
    factors: list
    halvings: int = 0
    ball_clipped: int = 0

    def to_dict(self) -> dict:
        return {
            "start_index": self.start_index,
            "end_index": self.end_index,
            "radius": self.radius,
            "iterations": self.iterations,
            "distances": list(self.distances),
            "factors": list(self.factors),
            "halvings": self.halvings,
            "ball_clipped": self.ball_clipped,
        }


@dataclass
class SolverReport:
    """Everything measured during a solve, for bound checks and reproduction."""

    alpha: float = 0.0
    theta: float = 0.0
    lambda_shift: float = 0.0
    seed: int = 0
    n_paths: int = 0
    n_steps: int = 0
    n_noise: int = 0
    constants: dict = field(default_factory=dict)
    selection: dict = field(default_factory=dict)
    selection_paste: dict = field(default_factory=dict)
    delta_schedule: list = field(default_factory=list)
    window_count_formula: int = 0
    grid_refined: int = 1
    windows: list = field(default_factory=list)
    picard_factors: list = field(default_factory=list)
    residual_value: float = math.nan
    c1_bound: float = math.nan
    max_y_h: float = math.nan
    c2_fit: float = math.nan
    blowup_margin: float = math.nan
    times: list = field(default_factory=list)
    mean_y_h: list = field(default_factory=list)
    max_y_h_per_node: list = field(default_factory=list)
    max_y_theta_per_node: list = field(default_factory=list)
    blowup_bound_per_node: list = field(default_factory=list)
    rank_deficient_count: int = 0
    outer: dict | None = None
    messages: list = field(default_factory=list)
    runtime_seconds: float = 0.0

    def to_dict(self) -> dict:
        out = {}
        for key in self.__dataclass_fields__:
            val = getattr(self, key)
            if isinstance(val, list) and val and isinstance(val[0], WindowStats):
                val = [w.to_dict() for w in val]
            out[key] = val
        return out


# ---------------------------------------------------------------------------
# closed-form bounds


def apriori_h_bound(terminal_h_bound: float, s: float, c: float, horizon: float) -> float:
    """Uniform H-norm bound for the solved process (monotonicity constant 0).

    C_1 = sqrt((||xi||_H^2 + (S^2 + C^2) T) (1 + 2 T e^(2T))).
    """
    if min(terminal_h_bound, s, c, horizon) < 0:
        raise ValueError("inputs must be nonnegative")
    return math.sqrt(
        (terminal_h_bound ** 2 + (s ** 2 + c ** 2) * horizon)
        * (1.0 + 2.0 * horizon * math.exp(2.0 * horizon))
    )


def blowup_bound(c2: float, theta: float, alpha: float, horizon: float, t: float) -> float:
    """Envelope C_2 (T-t)^(-(theta-alpha)) for the theta-space norm near the terminal."""
    if t >= horizon:
        raise ValueError("t must lie strictly before the horizon")
    if theta < alpha:
        raise ValueError("theta must be at least alpha")
    return c2 * (horizon - t) ** (-(theta - alpha))


# ---------------------------------------------------------------------------
# exponential change of variables


def exponential_shift(problem: BsdeProblem, lam: float) -> BsdeProblem:
    """Rescale the unknowns by exp(lam t); lam equal to the monotonicity
    constant makes the shifted f0 dissipative with constant zero.

    The shifted data are terminal' = exp(lam T) xi, f0'(t, y) =
    exp(lam t) f0(t, exp(-lam t) y) - lam y and f1'(t, y, z) =
    exp(lam t) f1(t, exp(-lam t) y, exp(-lam t) z); the declared constants are
    transported conservatively.
    """
    if lam == 0.0:
        return problem
    T = problem.horizon
    f0 = problem.f0

    def shifted_f0(t, y, _f0=f0, _lam=lam):
        return math.exp(_lam * t) * _f0(t, math.exp(-_lam * t) * y) - _lam * y

    growth_scale = (
        f0.growth_scale
        * max(math.exp(max(lam, 0.0) * T), math.exp(max(-lam, 0.0) * (f0.growth_power - 1.0) * T))
        + abs(lam)
    )
    inner_radius_factor = math.exp(max(-lam, 0.0) * T)
    outer_factor = math.exp(max(lam, 0.0) * T)

    def shifted_lipschitz(radius, _f0=f0):
        return outer_factor * _f0.lipschitz_at(radius * inner_radius_factor) + abs(lam)

    new_f0 = DissipativeDrift(
        fn=shifted_f0,
        growth_scale=growth_scale,
        growth_power=f0.growth_power,
        monotonicity=f0.monotonicity - lam,
        lipschitz=shifted_lipschitz,
    )
    new_f1 = None
    if problem.f1 is not None:
        f1 = problem.f1

        def shifted_f1(t, y, z, _f1=f1, _lam=lam):
            scale = math.exp(-_lam * t)
            return math.exp(_lam * t) * _f1(t, scale * y, scale * z)

        new_f1 = BoundedDriver(
            fn=shifted_f1,
            lipschitz_const=f1.lipschitz_const,
            bound=outer_factor * f1.bound,
        )
    terminal_scale = math.exp(lam * T)
    old_terminal = problem.terminal
    return replace(
        problem,
        terminal=lambda ens, _t=old_terminal: terminal_scale * _t(ens),
        terminal_bound=problem.terminal_bound * terminal_scale,
        terminal_bound_h=problem.terminal_bound_h * terminal_scale,
        f0=new_f0,
        f1=new_f1,
        label=problem.label + f"[shift {lam:g}]" if problem.label else f"[shift {lam:g}]",
    )


def unshift_solution(solution: SolutionPair, lam: float) -> SolutionPair:
    """Undo the exponential rescaling path by path: (Y, Z) -> exp(-lam t)(Y, Z)."""
    if lam == 0.0:
        return solution
    times = solution.grid.times
    y = solution.y * np.exp(-lam * times)[:, None, None]
    z = None
    if solution.z is not None:
        z = solution.z * np.exp(-lam * times[:-1])[:, None, None, None]
    return SolutionPair(grid=solution.grid, y=y, z=z)


# ---------------------------------------------------------------------------
# window selection


def select_local_radius_and_delta(
    problem: BsdeProblem,
    terminal_bound: float,
    constants: EmpiricalConstants,
) -> WindowSelection:
    """Ball radius R = 2 M_alpha ||terminal|| and the admissible window length.

    delta_lip = (2 G L_R)^(-1/(1-alpha)) keeps the contraction constant at 1/2;
    delta_ball is the largest delta with
    C_alpha S ((1 + R^gamma) + C) / (1 - alpha) * delta^(1-alpha) <= R / 2.
    Safety enters through the inflated constants, not through the formulas.
    """
    f0 = problem.f0
    alpha = problem.alpha
    radius = 2.0 * constants.m_alpha * terminal_bound
    exponent = 1.0 / (1.0 - alpha)
    lip = f0.lipschitz_at(radius) if math.isfinite(radius) else f0.lipschitz_at(1.0)
    if math.isinf(radius) and f0.growth_scale > 0.0:
        raise WindowCollapse("unbounded terminal with a nonzero drift: no window length works")
    gl = 2.0 * constants.g_holder * lip
    delta_lip = math.inf if gl <= 0 else gl ** (-exponent)
    s = f0.growth_scale
    if s > 0.0:
        denom = 2.0 * constants.c_alpha * s * ((1.0 + radius ** f0.growth_power) + problem.driver_bound)
        delta_ball = (radius * (1.0 - alpha) / denom) ** exponent
    else:
        delta_ball = math.inf
    delta = min(delta_lip, delta_ball)
    if not delta > 0 or math.isnan(delta):
        raise WindowCollapse(
            f"window length collapsed: radius={radius:g}, L_R={lip:g}, "
            f"G={constants.g_holder:g}, C_alpha={constants.c_alpha:g}"
        )
    return WindowSelection(radius=radius, delta=delta, delta_lip=delta_lip, delta_ball=delta_ball)


# ---------------------------------------------------------------------------
# Picard machinery


class _Propagator:
    """Per-step semigroup decays and exact one-step kernel integrals for a grid."""

    def __init__(self, op: DiagonalOperator, grid: TimeGrid):
        self.decay, self.kernel_int = _step_factors(op, grid.deltas)  # (L, N) each


def _ball_check(problem: BsdeProblem, u: np.ndarray, radius: float) -> float:
    """Largest alpha norm among the supplied states; raises when it leaves the ball."""
    norms = h_alpha_norm_batch(problem.operator, problem.alpha, u)
    worst = float(norms.max()) if norms.size else 0.0
    if worst > radius:
        raise RadiusExceeded(
            f"radius exceeded: drift evaluated at alpha norm {worst:g} > ball {radius:g} "
            "(window too long)"
        )
    return worst


def _picard_targets(
    problem: BsdeProblem,
    prop: _Propagator,
    times: np.ndarray,
    start: int,
    end: int,
    terminal_values: np.ndarray,
    u: np.ndarray | None,
    f1_path: np.ndarray | None,
    radius: float,
) -> np.ndarray:
    """Raw conditional-expectation targets of the window map, shape (W+1, M, N).

    target_l = exp(-(t_end - t_l) a) terminal
               + sum_{j=l}^{end-1} exp(-(t_j - t_l) a) I_j [f0(t_j, U_j) + f1_j],
    accumulated by one backward recursion (exact for the piecewise-constant
    interpolant of the integrand).  ``u = None`` means drift-free.
    """
    width = end - start
    targets = np.empty((width + 1,) + terminal_values.shape)
    targets[width] = terminal_values
    f0 = problem.f0
    drift_on = u is not None and not f0.is_zero
    if drift_on and math.isfinite(radius):
        _ball_check(problem, u[:width], radius)
    acc = targets[width]
    for j in range(width - 1, -1, -1):
        l = start + j
        f_val = 0.0
        if drift_on:
            f_val = f0(float(times[l]), u[j])
        if f1_path is not None:
            f_val = f_val + f1_path[l]
        acc = prop.kernel_int[l] * f_val + prop.decay[l] * acc
        targets[j] = acc
    return targets


def _regress_window(
    ensemble: WienerEnsemble,
    basis: RegressionBasis,
    start: int,
    end: int,
    targets: np.ndarray,
) -> tuple[np.ndarray, int]:
    """Project each interior target onto its adapted features; terminal kept exact."""
    y = np.empty_like(targets)
    y[-1] = targets[-1]
    flagged = 0
    for j in range(end - start):
        fit = conditional_expectation(ensemble, basis, start + j, targets[j])
        y[j] = fit.fitted
        flagged += int(fit.rank_deficient)
    return y, flagged


def _project_to_ball(problem: BsdeProblem, y: np.ndarray, radius: float) -> int:
    """Rescale interior states radially onto the alpha ball, in place.

    Polynomial regression can overshoot a bounded target on tail paths; the
    true conditional expectation lies in the (convex) ball, so pulling the
    estimate back onto it never increases the pathwise error.  Returns the
    number of rescaled states.
    """
    if not math.isfinite(radius):
        return 0
    norms = h_alpha_norm_batch(problem.operator, problem.alpha, y[:-1])
    mask = norms > radius
    count = int(np.count_nonzero(mask))
    if count:
        scale = np.where(mask, radius / np.maximum(norms, 1e-300), 1.0)
        y[:-1] *= scale[..., None]
    return count


def picard_map(
    problem: BsdeProblem,
    ensemble: WienerEnsemble,
    basis: RegressionBasis,
    start: int,
    end: int,
    terminal_values: np.ndarray,
    u: np.ndarray | None,
    f1_path: np.ndarray | None = None,
    radius: float = math.inf,
    with_z: bool = True,
) -> SolutionPair:
    """One application of the window map: regression of the propagated terminal
    plus the exactly integrated drift of the frozen input process.

    ``u`` holds the input process on window nodes (W+1, M, N); its drift is
    evaluated on left nodes only.  The returned y matches ``terminal_values``
    exactly at the window end.  ``with_z`` recovers the integrand of the
    stochastic integral on the window's steps.
    """
    prop = _Propagator(problem.operator, ensemble.grid)
    targets = _picard_targets(
        problem, prop, ensemble.grid.times, start, end, terminal_values, u, f1_path, radius
    )
    y, _ = _regress_window(ensemble, basis, start, end, targets)
    z = None
    if with_z:
        z = _recover_z(problem, ensemble, basis, prop, start, end, y)
    window_grid = TimeGrid(ensemble.grid.times[start : end + 1] - ensemble.grid.times[start])
    return SolutionPair(grid=window_grid, y=y, z=z)


def _recover_z(problem, ensemble, basis, prop, start, end, y) -> np.ndarray:
    """Martingale-representation estimate of Z on [start, end): regression of
    the semigroup-weighted next value against the step's increments."""
    m, n = y.shape[1], y.shape[2]
    z = np.empty((end - start, m, n, ensemble.n_noise))
    for j in range(end - start):
        l = start + j
        next_val = prop.decay[l] * y[j + 1]
        z[j] = martingale_z_estimate(ensemble, basis, l, next_val)
    return z


@dataclass
class LocalSolveResult:
    y: np.ndarray  # (W+1, M, N)
    stats: WindowStats
    rank_flags: int = 0


def local_solve(
    problem: BsdeProblem,
    ensemble: WienerEnsemble,
    basis: RegressionBasis,
    start: int,
    end: int,
    terminal_values: np.ndarray,
    radius: float,
    tol: float,
    max_iter: int = 50,
    min_iter: int = 2,
    f1_path: np.ndarray | None = None,
    initial: str = "terminal",
) -> LocalSolveResult:
    """Fixed point of the window map by Picard iteration.

    Starts from the drift-free solution (conditional expectation of the
    propagated terminal) or from zero, and stops when the sup-over-nodes
    ensemble-L2 alpha-norm distance of successive iterates drops below tol.
    Distances and their ratios are recorded; two consecutive ratios above one
    raise ``PicardDivergence`` (the caller may then halve the window).
    """
    prop = _Propagator(problem.operator, ensemble.grid)
    times = ensemble.grid.times
    op, alpha = problem.operator, problem.alpha
    width = end - start
    rank_flags = 0
    clipped = 0

    if initial == "zero":
        u = np.zeros((width + 1,) + terminal_values.shape)
        u[width] = terminal_values
    else:
        targets = _picard_targets(
            problem, prop, times, start, end, terminal_values, None, f1_path, radius
        )
        u, flagged = _regress_window(ensemble, basis, start, end, targets)
        rank_flags += flagged
        clipped += _project_to_ball(problem, u, radius)

    distances: list[float] = []
    factors: list[float] = []
    bad_streak = 0
    for it in range(1, max_iter + 1):
        targets = _picard_targets(
            problem, prop, times, start, end, terminal_values, u, f1_path, radius
        )
        y, flagged = _regress_window(ensemble, basis, start, end, targets)
        rank_flags += flagged
        clipped += _project_to_ball(problem, y, radius)
        diff = y[:width] - u[:width]
        # sup over window nodes of the ensemble-L2 alpha norm
        node_norms = h_alpha_norm_batch(op, alpha, diff)  # (W, M)
        dist = float(np.sqrt(np.mean(node_norms ** 2, axis=1)).max())
        if distances:
            factor = dist / distances[-1] if distances[-1] > 0 else 0.0
            factors.append(factor)
            bad_streak = bad_streak + 1 if factor > 1.0 else 0
            if bad_streak >= 2:
                raise PicardDivergence(
                    f"distance ratio above one twice in a row (last {factor:.3f})"
                )
        distances.append(dist)
        u = y
        if dist == 0.0 or (dist < tol and it >= min_iter):
            stats = WindowStats(start, end, radius, it, distances, factors,
                                ball_clipped=clipped)
            return LocalSolveResult(y=u, stats=stats, rank_flags=rank_flags)
    raise PicardDivergence(
        f"no convergence within {max_iter} iterations (last distance {distances[-1]:.3e})"
    )


# ---------------------------------------------------------------------------
# global solve: windows pasted right to left


def _auto_tol(terminal_values: np.ndarray) -> float:
    """Three Monte Carlo standard errors of the terminal estimate, with a floor."""
    m = terminal_values.shape[0]
    norms = np.linalg.norm(terminal_values - terminal_values.mean(axis=0), axis=-1)
    se = float(np.sqrt(np.mean(norms ** 2) / m))
    scale = float(np.linalg.norm(terminal_values) / math.sqrt(m))
    return max(3.0 * se, 1e-12 * max(scale, 1.0), 1e-14)


class _NeedsFinerGrid(Exception):
    def __init__(self, factor: int):
        self.factor = factor


def _estimator_rng(seed: int) -> np.random.Generator:
    # distinct stream from the path blocks, which use spawn keys 0..n_blocks-1
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(2 ** 20,)))


def global_solve(
    problem: BsdeProblem,
    ensemble: WienerEnsemble,
    basis: RegressionBasis,
    config: SolverConfig | None = None,
    f1_path: np.ndarray | None = None,
) -> tuple[SolutionPair, SolverReport]:
    """Solve the equation with a path-frozen (or absent) driver on [0, T].

    The first window ends at T with the declared terminal bound; its solution
    fits the blow-up constant C_2, which supplies the radius
    R_2 = 2 M_alpha C_2 / delta_1^(theta-alpha) and the constant window length
    delta_2 = delta_3 = ... for all remaining windows.  Windows are pasted
    right to left; the pasted values agree at the joins by construction.  A
    positive monotonicity constant is removed by the exponential shift first
    and the returned solution is shifted back.
    """
    config = config or SolverConfig()
    if problem.f1 is not None and f1_path is None:
        raise SolverError("y/z-dependent driver: use general_solve or pass f1_path")
    if config.require_validated and not problem.validated:
        raise SolverError(
            "problem has not passed hypothesis validation; run validate_problem "
            "or set require_validated=False"
        )
    t0 = time.perf_counter()
    base_steps = ensemble.grid.n_steps
    for attempt in range(3):
        try:
            solution, report = _global_solve_once(problem, ensemble, basis, config, f1_path)
            report.grid_refined = ensemble.grid.n_steps // base_steps
            report.runtime_seconds = time.perf_counter() - t0
            return solution, report
        except _NeedsFinerGrid as need:
            if not config.auto_refine_grid:
                raise GridTooCoarse(
                    "window length below one grid step; rerun with at least "
                    f"{need.factor}x steps",
                    factor=need.factor,
                )
            grid = TimeGrid.uniform(ensemble.grid.horizon, ensemble.grid.n_steps * need.factor)
            log.info("refining grid x%d and resampling (seed %d)", need.factor, ensemble.seed)
            ensemble = sample_ensemble(grid, ensemble.n_noise, ensemble.n_paths, ensemble.seed)
            if f1_path is not None:
                f1_path = np.repeat(f1_path, need.factor, axis=0)
    raise GridTooCoarse("grid refinement did not reach the required window resolution")


def _global_solve_once(problem, ensemble, basis, config, f1_path):
    report = SolverReport(
        alpha=problem.alpha,
        theta=problem.theta,
        seed=ensemble.seed,
        n_paths=ensemble.n_paths,
        n_steps=ensemble.grid.n_steps,
        n_noise=ensemble.n_noise,
    )
    lam = problem.f0.monotonicity
    work = problem
    if config.auto_shift and lam > 0.0:
        work = exponential_shift(problem, lam)
        work.validated = problem.validated
        report.lambda_shift = lam
        if f1_path is not None:
            f1_path = f1_path * np.exp(lam * ensemble.grid.times[:-1])[:, None, None]
    else:
        lam = 0.0

    op, alpha = work.operator, work.alpha
    grid = ensemble.grid
    times = grid.times
    n_steps = grid.n_steps
    dt = float(times[1] - times[0])
    if not np.allclose(grid.deltas, dt, rtol=1e-9):
        raise SolverError("window scheduling requires a uniform time grid")

    rng = _estimator_rng(ensemble.seed)
    raw = estimate_constants(
        op, alpha, work.horizon, theta=work.theta if work.theta > alpha else None,
        rng=rng, trials=config.constants_trials,
    )
    consts = raw.scaled(config.safety_margin)
    report.constants = {"raw": raw.to_dict(), "scaled": consts.to_dict()}

    if ensemble.n_noise != problem.noise_dim:
        raise SolverError(
            f"ensemble carries {ensemble.n_noise} noise coordinates, problem declares "
            f"{problem.noise_dim}"
        )
    terminal_values = np.asarray(work.terminal(ensemble), dtype=float)
    if terminal_values.shape != (ensemble.n_paths, op.dimension):
        raise SolverError("terminal map returned the wrong shape")
    term_norms = h_alpha_norm_batch(op, alpha, terminal_values)
    if math.isfinite(work.terminal_bound) and float(term_norms.max()) > work.terminal_bound * (
        1.0 + 1e-9
    ):
        raise SolverError(
            f"terminal alpha norm {term_norms.max():g} exceeds the declared bound "
            f"{work.terminal_bound:g} on some path"
        )

    sel1 = select_local_radius_and_delta(work, work.terminal_bound, consts)
    report.selection = sel1.to_dict()
    delta1 = sel1.delta
    if config.window_override is not None:
        delta1 = min(delta1, config.window_override)
    if delta1 < dt:
        raise _NeedsFinerGrid(max(2, math.ceil(dt / delta1)))
    n1 = n_steps if math.isinf(delta1) else min(
        n_steps, max(1, int(math.floor(delta1 / dt + 1e-12)))
    )

    tol = config.tol if config.tol is not None else _auto_tol(terminal_values)

    y_full = np.empty((n_steps + 1,) + terminal_values.shape)
    y_full[n_steps] = terminal_values
    windows: list[WindowStats] = []
    rank_flags = 0

    end = n_steps
    term_vals = terminal_values
    radius = sel1.radius
    n2 = None
    c2 = math.nan
    delta1_actual = None
    while end > 0:
        first = delta1_actual is None
        steps = n1 if first else n2
        steps = min(steps, end)
        halvings = 0
        while True:
            try:
                result = local_solve(
                    work, ensemble, basis, end - steps, end, term_vals, radius,
                    tol=tol, max_iter=config.max_iter, min_iter=config.min_iter,
                    f1_path=f1_path,
                )
                break
            except (PicardDivergence, RadiusExceeded) as err:
                halvings += 1
                steps //= 2
                report.messages.append(f"window ending at node {end}: {err}; halving")
                if steps < 1:
                    raise
        result.stats.halvings = halvings
        windows.append(result.stats)
        rank_flags += result.rank_flags
        y_full[end - steps : end + 1] = result.y
        term_vals = y_full[end - steps]
        end -= steps

        if first:
            delta1_actual = steps * dt
            window_nodes = slice(end, n_steps + 1)
            theta_gap = work.theta - alpha
            theta_norms = h_alpha_norm_batch(op, work.theta, y_full[window_nodes]) \
                if work.theta > 0 else np.linalg.norm(y_full[window_nodes], axis=-1)
            weights = (times[-1] - times[window_nodes]) ** theta_gap
            c2 = float((theta_norms.max(axis=1) * weights).max())
            report.c2_fit = c2
            if end > 0:
                bound2 = c2 / delta1_actual ** theta_gap if theta_gap > 0 else c2
                sel2 = select_local_radius_and_delta(work, bound2, consts)
                report.selection_paste = sel2.to_dict()
                radius = sel2.radius
                delta2 = sel2.delta
                if config.window_override is not None:
                    delta2 = min(delta2, config.window_override)
                if delta2 < dt:
                    raise _NeedsFinerGrid(max(2, math.ceil(dt / delta2)))
                n2 = n_steps if math.isinf(delta2) else min(
                    n_steps, max(1, int(math.floor(delta2 / dt + 1e-12)))
                )

    report.windows = windows
    report.picard_factors = [f for w in windows for f in w.factors]
    report.rank_deficient_count = rank_flags
    report.delta_schedule = [(w.end_index - w.start_index) * dt for w in windows]
    if n2 is not None:
        remaining = n_steps - int(round(delta1_actual / dt))
        report.window_count_formula = 1 + math.ceil(remaining / n2) if remaining > 0 else 1
    else:
        report.window_count_formula = 1

    prop = _Propagator(op, grid)
    z_full = _recover_z(work, ensemble, basis, prop, 0, n_steps, y_full)
    shifted_solution = SolutionPair(grid=grid, y=y_full, z=z_full)

    _record_bound_checks(work, report, shifted_solution)
    solution = unshift_solution(shifted_solution, lam)
    if config.compute_residual:
        unshifted_f1_path = None
        if f1_path is not None:
            unshifted_f1_path = f1_path * np.exp(-lam * times[:-1])[:, None, None]
        report.residual_value = residual(problem, solution, ensemble, f1_path=unshifted_f1_path)
    return solution, report


def _record_bound_checks(work: BsdeProblem, report: SolverReport, sol: SolutionPair) -> None:
    """Fill the per-node norm columns and the closed-form bound values."""
    op, alpha, theta = work.operator, work.alpha, work.theta
    times = sol.grid.times
    h_norms = np.linalg.norm(sol.y, axis=-1)  # (L+1, M)
    report.times = times.tolist()
    report.mean_y_h = h_norms.mean(axis=1).tolist()
    report.max_y_h_per_node = h_norms.max(axis=1).tolist()
    report.max_y_h = float(h_norms.max())
    report.c1_bound = apriori_h_bound(
        work.terminal_bound_h, work.f0.growth_scale, work.driver_bound, work.horizon
    )
    theta_norms = (
        h_alpha_norm_batch(op, theta, sol.y) if theta > 0 else h_norms
    )
    report.max_y_theta_per_node = theta_norms.max(axis=1).tolist()
    gap = theta - alpha
    with np.errstate(divide="ignore"):
        bounds = report.c2_fit * (times[-1] - times) ** (-gap) if gap > 0 else np.full(
            times.shape, report.c2_fit
        )
    report.blowup_bound_per_node = np.asarray(bounds).tolist()
    finite = np.isfinite(bounds) & (bounds > 0)
    if np.any(finite):
        margins = theta_norms.max(axis=1)[finite] / np.asarray(bounds)[finite]
        report.blowup_margin = float(margins.max())


# ---------------------------------------------------------------------------
# outer fixed point for the coupled driver


def _weighted_distance(grid: TimeGrid, beta: float, dy: np.ndarray, dz: np.ndarray) -> float:
    """Square root of the exp(beta t)-weighted squared L2 norm of (dy, dz)."""
    w = np.exp(beta * grid.times[:-1]) * grid.deltas  # (L,)
    y_part = float((w * np.square(dy[:-1]).sum(axis=-1).mean(axis=1)).sum())
    z_part = float((w * np.square(dz).sum(axis=(-1, -2)).mean(axis=1)).sum())
    return math.sqrt(y_part + z_part)


def general_solve(
    problem: BsdeProblem,
    ensemble: WienerEnsemble,
    basis: RegressionBasis,
    config: SolverConfig | None = None,
) -> tuple[SolutionPair, SolverReport]:
    """Solve the (y, z)-coupled equation by the weighted outer fixed point.

    Each outer step freezes f1 along the current iterate's paths and calls
    ``global_solve``; distances between successive (Y, Z) are measured in the
    exp(beta t)-weighted ensemble norm with beta = 4 K^2 + 1, under which the
    squared distances contract by 1/2 in theory.  A driver independent of
    (y, z) (K = 0) finishes in a single outer iteration.
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    if problem.f1 is None:
        solution, report = global_solve(problem, ensemble, basis, config)
        report.runtime_seconds = time.perf_counter() - t0
        return solution, report
    if config.require_validated and not problem.validated:
        raise SolverError(
            "problem has not passed hypothesis validation; run validate_problem "
            "or set require_validated=False"
        )

    k_lip = problem.driver_lipschitz
    beta = 4.0 * k_lip ** 2 + 1.0
    lam = problem.f0.monotonicity
    work = problem
    if config.auto_shift and lam > 0.0:
        work = exponential_shift(problem, lam)
        work.validated = problem.validated
    else:
        lam = 0.0

    # the outer iterate arrays live on one fixed grid, so refinement requests
    # from the window formulas are handled here by restarting on a finer grid
    inner_config = replace(
        config, auto_shift=False, compute_residual=False, auto_refine_grid=False
    )
    f1 = work.f1
    base_steps = ensemble.grid.n_steps
    outcome = None
    for grid_attempt in range(3):
        try:
            outcome = _outer_iteration(
                work, ensemble, basis, config, inner_config, f1, beta, k_lip
            )
            break
        except GridTooCoarse as need:
            if not config.auto_refine_grid:
                raise
            grid = TimeGrid.uniform(ensemble.grid.horizon, ensemble.grid.n_steps * need.factor)
            log.info("outer loop: refining grid x%d (seed %d)", need.factor, ensemble.seed)
            ensemble = sample_ensemble(grid, ensemble.n_noise, ensemble.n_paths, ensemble.seed)
    if outcome is None:
        raise GridTooCoarse("grid refinement did not reach the required window resolution")
    u, v, distances, sq_factors, inner_report = outcome
    grid = ensemble.grid

    report = inner_report
    report.lambda_shift = lam
    report.grid_refined = grid.n_steps // base_steps
    report.outer = {
        "beta": beta,
        "lipschitz": k_lip,
        "iterations": len(distances),
        "distances": distances,
        "squared_factors": sq_factors,
    }
    shifted = SolutionPair(grid=grid, y=u, z=v)
    solution = unshift_solution(shifted, lam)
    if config.compute_residual:
        report.residual_value = residual(problem, solution, ensemble)
    report.runtime_seconds = time.perf_counter() - t0
    return solution, report


def _outer_iteration(work, ensemble, basis, config, inner_config, f1, beta, k_lip):
    """Iterate the frozen-driver map on one fixed grid until the weighted
    distance of successive (Y, Z) pairs drops below the outer tolerance."""
    grid = ensemble.grid
    times = grid.times
    m, n = ensemble.n_paths, work.operator.dimension
    u = np.zeros((grid.n_steps + 1, m, n))
    v = np.zeros((grid.n_steps, m, n, ensemble.n_noise))
    distances: list[float] = []
    sq_factors: list[float] = []
    inner_report = None
    bad_streak = 0
    for it in range(1, config.max_outer + 1):
        f1_path = np.empty((grid.n_steps, m, n))
        for l in range(grid.n_steps):
            f1_path[l] = f1(float(times[l]), u[l], v[l])
        frozen = replace(work, f1=None)
        frozen.validated = work.validated
        sol, inner_report = global_solve(frozen, ensemble, basis, inner_config, f1_path=f1_path)
        dist = _weighted_distance(grid, beta, sol.y - u, sol.z - v)
        if distances:
            prev = distances[-1]
            sq = (dist / prev) ** 2 if prev > 0 else 0.0
            sq_factors.append(sq)
            bad_streak = bad_streak + 1 if sq >= 1.0 else 0
            if bad_streak >= 2:
                raise OuterDivergence(
                    f"weighted squared factor at or above one twice (last {sq:.3f})"
                )
        distances.append(dist)
        u, v = sol.y, sol.z
        tol_outer = config.tol_outer
        if tol_outer is None:
            tol_outer = max(1e-9, 0.02 * distances[0])
        if dist == 0.0 or dist < tol_outer or k_lip == 0.0:
            return u, v, distances, sq_factors, inner_report
    raise OuterDivergence(f"outer iteration did not converge within {config.max_outer} steps")


# ---------------------------------------------------------------------------
# residual of the mild equation


def residual(
    problem: BsdeProblem,
    solution: SolutionPair,
    ensemble: WienerEnsemble,
    f1_path: np.ndarray | None = None,
) -> float:
    """Ensemble-L2 defect of the integral equation along the solved paths.

    At every node the defect
        Y_t - int_t^T exp((s-t)A) f ds + sum_s exp((s-t)A) Z_s dW_s - exp((T-t)A) xi
    is accumulated with the solver's own quadrature; the result is the square
    root of its squared H norm averaged over paths and integrated in t/T.
    Deterministic-terminal linear problems produce machine-size residuals.
    """
    grid = solution.grid
    times = grid.times
    y, z = solution.y, solution.z
    if z is None:
        raise SolverError("residual needs the stochastic-integral component")
    op = problem.operator
    prop = _Propagator(op, grid)
    n_steps = grid.n_steps

    f_vals = np.zeros((n_steps,) + y.shape[1:])
    f0 = problem.f0
    for l in range(n_steps):
        t = float(times[l])
        val = 0.0
        if not f0.is_zero:
            val = f0(t, y[l])
        if problem.f1 is not None:
            val = val + problem.f1(t, y[l], z[l])
        if f1_path is not None:
            val = val + f1_path[l]
        f_vals[l] = val

    xi = y[-1]
    int_f = np.zeros_like(xi)
    int_z = np.zeros_like(xi)
    prop_term = xi.copy()
    weights = grid.deltas
    total = 0.0
    for l in range(n_steps - 1, -1, -1):
        zdw = np.einsum("mnk,mk->mn", z[l], ensemble.increments[:, l, :])
        int_f = prop.kernel_int[l] * f_vals[l] + prop.decay[l] * int_f
        int_z = zdw + prop.decay[l] * int_z
        prop_term = prop.decay[l] * prop_term
        defect = y[l] - int_f + int_z - prop_term
        total += float(weights[l]) * float(np.mean(np.sum(defect ** 2, axis=-1)))
    return math.sqrt(total / grid.horizon)
