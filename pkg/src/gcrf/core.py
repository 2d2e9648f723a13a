"""Model types, sufficient statistics and the negative log-likelihood.

The conditional density is

    p(y | x) ∝ exp(-y' Lam y - 2 x' Theta y)

and fitting minimizes

    f(Lam, Theta) = -log|Lam| + tr(Syy Lam + 2 Syx Theta + Lam^-1 Theta' Sxx Theta)

over symmetric positive-definite ``Lam`` and unconstrained ``Theta``.
Every application of ``Lam^-1`` goes through a Cholesky factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

SYMMETRY_TOL = 1e-10
DEGENERACY_RTOL = 1e-12


class NotPositiveDefiniteError(ValueError):
    """Raised when a matrix that must be positive definite is not."""


class DimensionError(ValueError):
    pass


def _as_matrix(a, name):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D array, got shape {a.shape}")
    return a


def _cholesky(matrix):
    try:
        return linalg.cho_factor(matrix, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc


def _symmetrize(a):
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class ModelParams:
    """Output precision ``lam`` (p x p) and input-to-output map ``theta`` (n x p)."""

    lam: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        lam = _as_matrix(self.lam, "lam")
        theta = _as_matrix(self.theta, "theta")
        if lam.shape[0] != lam.shape[1]:
            raise DimensionError(f"lam must be square, got {lam.shape}")
        if theta.shape[1] != lam.shape[0]:
            raise DimensionError(
                f"theta has {theta.shape[1]} columns but lam is {lam.shape[0]}x{lam.shape[0]}"
            )
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "theta", theta)

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    @property
    def p(self) -> int:
        return self.lam.shape[0]

    @classmethod
    def default(cls, n: int, p: int) -> "ModelParams":
        """Identity precision, zero coupling."""
        return cls(np.eye(p), np.zeros((n, p)))

    def validate(self) -> None:
        """Check symmetry and positive definiteness of ``lam``."""
        asym = np.max(np.abs(self.lam - self.lam.T))
        if asym > SYMMETRY_TOL:
            raise ValueError(f"lam is not symmetric (max asymmetry {asym:.3g})")
        _cholesky(self.lam)


@dataclass(frozen=True)
class Dataset:
    """Raw samples; rows of ``x`` (m x n) and ``y`` (m x p) are paired."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = _as_matrix(self.x, "x")
        y = _as_matrix(self.y, "y")
        if x.shape[0] != y.shape[0]:
            raise DimensionError(
                f"x has {x.shape[0]} rows but y has {y.shape[0]}"
            )
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite entries")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.x.shape[0]

    def centered(self) -> "Dataset":
        return Dataset(self.x - self.x.mean(axis=0), self.y - self.y.mean(axis=0))


@dataclass(frozen=True)
class SufficientStats:
    s_yy: np.ndarray
    s_yx: np.ndarray
    s_xx: np.ndarray
    m: int = 1

    def __post_init__(self):
        s_yy = _as_matrix(self.s_yy, "s_yy")
        s_yx = _as_matrix(self.s_yx, "s_yx")
        s_xx = _as_matrix(self.s_xx, "s_xx")
        p, n = s_yx.shape
        if s_yy.shape != (p, p) or s_xx.shape != (n, n):
            raise DimensionError(
                f"inconsistent shapes s_yy={s_yy.shape}, s_yx={s_yx.shape}, s_xx={s_xx.shape}"
            )
        if int(self.m) < 1:
            raise ValueError("sample count m must be positive")
        object.__setattr__(self, "s_yy", s_yy)
        object.__setattr__(self, "s_yx", s_yx)
        object.__setattr__(self, "s_xx", s_xx)
        object.__setattr__(self, "m", int(self.m))

    @property
    def n(self) -> int:
        return self.s_xx.shape[0]

    @property
    def p(self) -> int:
        return self.s_yy.shape[0]

    def check_shapes(self, params: ModelParams) -> None:
        if params.n != self.n or params.p != self.p:
            raise DimensionError(
                f"params are n={params.n}, p={params.p} but stats are n={self.n}, p={self.p}"
            )


def compute_stats(data: Dataset) -> SufficientStats:
    """Uncentered second moments ``Y'Y/m``, ``Y'X/m``, ``X'X/m``."""
    x, y, m = data.x, data.y, data.m
    if m < 1:
        raise ValueError("dataset has no samples")
    s_yy = _symmetrize(y.T @ y) / m
    s_xx = _symmetrize(x.T @ x) / m
    s_yx = (y.T @ x) / m
    return SufficientStats(s_yy, s_yx, s_xx, m)


def log_det_pd(matrix) -> float:
    """Log-determinant of a symmetric positive-definite matrix via Cholesky.

    Raises :class:`NotPositiveDefiniteError` instead of returning NaN.
    """
    c, _ = _cholesky(_as_matrix(matrix, "matrix"))
    return 2.0 * float(np.sum(np.log(np.diag(c))))


def _factor(params: ModelParams):
    # Only the symmetric part of lam enters the model.
    lam = _symmetrize(params.lam)
    return lam, _cholesky(lam)


def coupling(params: ModelParams, factor=None) -> np.ndarray:
    """``Theta Lam^-1 Theta'`` (n x n), returned exactly symmetric."""
    if factor is None:
        _, factor = _factor(params)
    w = linalg.cho_solve(factor, params.theta.T)
    return _symmetrize(params.theta @ w)


def objective(stats: SufficientStats, params: ModelParams) -> float:
    stats.check_shapes(params)
    lam, factor = _factor(params)
    theta = params.theta
    logdet = 2.0 * np.sum(np.log(np.diag(factor[0])))
    w = linalg.cho_solve(factor, theta.T)  # Lam^-1 Theta'
    quad = np.sum(w * (stats.s_xx @ theta).T)
    lin = np.sum(stats.s_yy * lam) + 2.0 * np.sum(stats.s_yx * theta.T)
    return float(-logdet + lin + quad)


def gradients(stats: SufficientStats, params: ModelParams):
    """Analytic gradients ``(grad_lam, grad_theta)`` of :func:`objective`.

    ``grad_lam = -Lam^-1 + Syy - Lam^-1 Theta' Sxx Theta Lam^-1``
    ``grad_theta = 2 Syx' + 2 Sxx Theta Lam^-1``
    """
    stats.check_shapes(params)
    lam, factor = _factor(params)
    theta = params.theta
    p = lam.shape[0]
    lam_inv = linalg.cho_solve(factor, np.eye(p))
    theta_lam_inv = linalg.cho_solve(factor, theta.T).T  # Theta Lam^-1
    sxx_t = stats.s_xx @ theta_lam_inv
    grad_lam = -lam_inv + stats.s_yy - theta_lam_inv.T @ sxx_t
    grad_theta = 2.0 * stats.s_yx.T + 2.0 * sxx_t
    return _symmetrize(grad_lam), grad_theta


def predict(params: ModelParams, x) -> np.ndarray:
    """Conditional mean ``-Lam^-1 Theta' x``.

    ``x`` may be a single n-vector or an m x n matrix of row samples.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.n:
        raise DimensionError(f"x has {x.shape[-1]} features but model expects {params.n}")
    _, factor = _factor(params)
    return -linalg.cho_solve(factor, params.theta.T @ x.T).T


def default_ridge(stats: SufficientStats) -> float:
    """Zero when ``s_xx`` is nonsingular, ``1e-8 tr(s_xx)/n`` otherwise."""
    try:
        linalg.cho_factor(stats.s_xx, lower=True)
        return 0.0
    except linalg.LinAlgError:
        pass
    return 1e-8 * float(np.trace(stats.s_xx)) / stats.n


def closed_form_mle(stats: SufficientStats, ridge: float | None = 0.0) -> ModelParams:
    """Stationary point of :func:`objective`.

    ``Lam* = (Syy - Syx (Sxx + rI)^-1 Syx')^-1`` and
    ``Theta* = -(Sxx + rI)^-1 Syx' Lam*``. Passing ``ridge=None`` picks
    :func:`default_ridge`.
    """
    if ridge is None:
        ridge = default_ridge(stats)
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    sxx = stats.s_xx + ridge * np.eye(stats.n)
    try:
        sxx_factor = linalg.cho_factor(sxx, lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("s_xx is singular; use a positive ridge") from exc
    b = linalg.cho_solve(sxx_factor, stats.s_yx.T)  # (Sxx + rI)^-1 Syx'
    schur = _symmetrize(stats.s_yy - stats.s_yx @ b)
    scale = max(float(np.trace(stats.s_yy)) / stats.p, np.finfo(float).tiny)
    if np.linalg.eigvalsh(schur)[0] <= DEGENERACY_RTOL * scale:
        raise NotPositiveDefiniteError("Schur complement is numerically singular (degenerate data)")
    try:
        schur_factor = linalg.cho_factor(schur, lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("Schur complement is not positive definite") from exc
    lam = _symmetrize(linalg.cho_solve(schur_factor, np.eye(stats.p)))
    return ModelParams(lam, -b @ lam)
