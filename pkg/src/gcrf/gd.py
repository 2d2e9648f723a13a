"""Steepest descent on the GCRF objective with backtracking line search."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ModelParams,
    NotPositiveDefiniteError,
    SufficientStats,
    gradients,
    objective,
)

MAX_BACKTRACKS = 60


class StalledLineSearch(RuntimeError):
    """No admissible step was found within the backtracking budget."""


@dataclass(frozen=True)
class SolverConfig:
    """Controls shared by the gradient-descent and ADMM solvers.

    ``max_iter=None`` selects a solver-specific cap (10000 for gradient
    descent, 5000 for ADMM). ``mu0``, ``beta`` and ``mu_max`` drive the ADMM
    penalty schedule ``mu <- min(mu_max, beta * mu)``.
    """

    max_iter: int | None = None
    grad_tol: float = 1e-7
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: float = 1.0
    l1_weight: float = 0.0
    mu0: float = 1e-2
    beta: float = 1.1
    mu_max: float = 20.0
    primal_tol: float = 1e-6
    dual_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.max_iter is not None and self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        for name in ("grad_tol", "initial_step", "mu0", "mu_max", "primal_tol", "dual_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("armijo_c", "backtrack_factor"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.l1_weight < 0:
            raise ValueError("l1_weight must be nonnegative")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.mu0 > self.mu_max:
            raise ValueError("mu0 must not exceed mu_max")

    def iteration_cap(self, default: int) -> int:
        return default if self.max_iter is None else self.max_iter


@dataclass
class TraceRecord:
    iteration: int
    objective: float
    grad_norm: float | None = None
    primal_residual: float | None = None
    dual_residual: float | None = None
    mu: float | None = None
    elapsed_ms: float = 0.0


@dataclass
class FitResult:
    params: ModelParams
    trace: list[TraceRecord] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.trace])


def soft_threshold(matrix, t: float, skip_diagonal: bool = False) -> np.ndarray:
    """Elementwise ``sign(a) * max(|a| - t, 0)``."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    a = np.asarray(matrix, dtype=float)
    out = np.sign(a) * np.maximum(np.abs(a) - t, 0.0)
    if skip_diagonal:
        np.fill_diagonal(out, np.diag(a))
    return out


def l1_penalty(params: ModelParams, weight: float) -> float:
    if weight == 0:
        return 0.0
    lam_off = params.lam - np.diag(np.diag(params.lam))
    return weight * (np.abs(params.theta).sum() + np.abs(lam_off).sum())


def _prox(params: ModelParams, t: float) -> ModelParams:
    return ModelParams(
        soft_threshold(params.lam, t, skip_diagonal=True),
        soft_threshold(params.theta, t),
    )


def _stepped(params, g_lam, g_theta, eta):
    return ModelParams(params.lam - eta * g_lam, params.theta - eta * g_theta)


def _merit_or_inf(merit, candidate):
    try:
        value = merit(candidate)
    except NotPositiveDefiniteError:
        return np.inf
    return value if np.isfinite(value) else np.inf


def backtrack(merit, params, g_lam, g_theta, f_current, config: SolverConfig):
    """Largest ``initial_step * backtrack_factor**k`` passing the Armijo test.

    ``merit`` maps ModelParams to a scalar and may raise
    NotPositiveDefiniteError, which counts as a rejected step. Returns
    ``(step, candidate, merit_value)``.
    """
    sq_norm = float(np.sum(g_lam * g_lam) + np.sum(g_theta * g_theta))
    eta = config.initial_step
    for _ in range(MAX_BACKTRACKS + 1):
        candidate = _stepped(params, g_lam, g_theta, eta)
        value = _merit_or_inf(merit, candidate)
        if value <= f_current - config.armijo_c * eta * sq_norm:
            return eta, candidate, value
        eta *= config.backtrack_factor
    raise StalledLineSearch(f"no admissible step after {MAX_BACKTRACKS} backtracks")


def prox_backtrack(smooth, params, g_lam, g_theta, f_current, config: SolverConfig):
    """Backtracking for the L1-regularized step.

    Accepts the thresholded point ``z`` once ``smooth(z)`` lies below the
    quadratic upper model ``f + <g, z - x> + |z - x|^2 / (2 eta)``.
    """
    eta = config.initial_step
    for _ in range(MAX_BACKTRACKS + 1):
        candidate = _prox(_stepped(params, g_lam, g_theta, eta), eta * config.l1_weight)
        value = _merit_or_inf(smooth, candidate)
        d_lam = candidate.lam - params.lam
        d_theta = candidate.theta - params.theta
        model = (
            f_current
            + np.sum(g_lam * d_lam)
            + np.sum(g_theta * d_theta)
            + (np.sum(d_lam**2) + np.sum(d_theta**2)) / (2 * eta)
        )
        if value <= model:
            return eta, candidate, value
        eta *= config.backtrack_factor
    raise StalledLineSearch(f"no admissible step after {MAX_BACKTRACKS} backtracks")


def line_search(stats, params, grad_lambda, grad_theta, f_current, config: SolverConfig) -> float:
    """Armijo backtracking on the objective with a positive-definiteness guard."""
    step, _, _ = backtrack(
        lambda q: objective(stats, q), params, grad_lambda, grad_theta, f_current, config
    )
    return step


def _grad_norm(g_lam, g_theta):
    return float(np.sqrt(np.sum(g_lam**2) + np.sum(g_theta**2)))


def _prepare_init(stats: SufficientStats, init: ModelParams | None) -> ModelParams:
    if init is None:
        return ModelParams.default(stats.n, stats.p)
    stats.check_shapes(init)
    init.validate()
    return init


def fit_gd(
    stats: SufficientStats,
    config: SolverConfig | None = None,
    init: ModelParams | None = None,
    callback=None,
) -> FitResult:
    """Minimize the objective by joint steepest descent on ``(lam, theta)``.

    With ``l1_weight > 0`` every step is a proximal gradient step that
    soft-thresholds ``theta`` and the off-diagonal of ``lam``; the traced
    objective then includes the L1 penalty. ``callback(k, params)``, if
    given, sees every accepted iterate.
    """
    config = config or SolverConfig()
    max_iter = config.iteration_cap(10000)
    params = _prepare_init(stats, init)
    weight = config.l1_weight
    smooth = lambda q: objective(stats, q)  # noqa: E731

    start = time.perf_counter()
    f = smooth(params)
    if not np.isfinite(f):
        raise FloatingPointError("objective is not finite at the initial point")
    g_lam, g_theta = gradients(stats, params)
    result = FitResult(params)
    result.trace.append(
        TraceRecord(0, f + l1_penalty(params, weight), _grad_norm(g_lam, g_theta))
    )
    # For the L1 case the stationarity measure is the prox-gradient mapping.
    measure = _grad_norm(g_lam, g_theta)

    def done(value, norm):
        return norm <= config.grad_tol * (1.0 + abs(value))

    for k in range(1, max_iter + 1):
        if done(result.trace[-1].objective, measure):
            result.converged = True
            break
        try:
            if weight > 0:
                eta, params_new, f_new = prox_backtrack(smooth, params, g_lam, g_theta, f, config)
                measure = _grad_norm(params.lam - params_new.lam, params.theta - params_new.theta) / eta
            else:
                eta, params_new, f_new = backtrack(smooth, params, g_lam, g_theta, f, config)
        except StalledLineSearch:
            break
        if np.array_equal(params_new.lam, params.lam) and np.array_equal(params_new.theta, params.theta):
            # rounding floor: further steps cannot move the iterate
            break
        params, f = params_new, f_new
        g_lam, g_theta = gradients(stats, params)
        norm = _grad_norm(g_lam, g_theta)
        if weight == 0:
            measure = norm
        result.params = params
        if callback is not None:
            callback(k, params)
        result.trace.append(
            TraceRecord(
                k,
                f + l1_penalty(params, weight),
                norm,
                elapsed_ms=1e3 * (time.perf_counter() - start),
            )
        )
    else:
        if max_iter > 0:
            result.converged = done(result.trace[-1].objective, measure)
    return result
