"""Synthetic ground truth and samples for recovery experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import Dataset, DimensionError, ModelParams

MIN_EIGENVALUE = 0.1
SUPPORT_THRESHOLD = 1e-3

# Output noise conventions. "objective" draws y | x with covariance Lam^-1,
# the convention under which the fitted objective's minimizer recovers the
# generating parameters. "density" uses (2 Lam)^-1, read off the exponent of
# the conditional density exactly as written; fits then converge to
# (2 Lam, 2 Theta).
NOISE_CONVENTIONS = ("objective", "density")


@dataclass(frozen=True)
class GroundTruth:
    params: ModelParams
    sigma_x: np.ndarray
    seed: int


def sample_ground_truth(
    n: int,
    p: int,
    diag_dominance: float | None = None,
    theta_density: float = 1.0,
    seed: int = 0,
    sigma_x=None,
) -> GroundTruth:
    """Draw a random positive-definite ``Lam`` and a sparse ``Theta``.

    ``Lam = A + (diag_dominance + r) I`` with ``A`` symmetric uniform on
    [-1, 1] and ``r`` the shift lifting the smallest eigenvalue to at least
    0.1. ``diag_dominance`` defaults to ``p``, which bounds every eigenvalue of
    ``A + p I`` below by zero. Each entry of ``Theta`` is nonzero with
    probability ``theta_density``.
    """
    if diag_dominance is None:
        diag_dominance = float(p)
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    if not 0 < theta_density <= 1:
        raise ValueError("theta_density must lie in (0, 1]")
    if diag_dominance < 0:
        raise ValueError("diag_dominance must be nonnegative")
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1.0, 1.0, size=(p, p))
    a = np.triu(a) + np.triu(a, 1).T
    shift = max(0.0, MIN_EIGENVALUE - diag_dominance - np.linalg.eigvalsh(a)[0])
    lam = a + (diag_dominance + shift) * np.eye(p)
    mask = rng.random((n, p)) < theta_density
    values = rng.uniform(-1.0, 1.0, size=(n, p))
    # uniform draws are nonzero almost surely; keep masked entries off zero anyway
    values[values == 0.0] = 0.5
    theta = np.where(mask, values, 0.0)
    if sigma_x is None:
        sigma_x = np.eye(n)
    sigma_x = np.asarray(sigma_x, dtype=float)
    if sigma_x.shape != (n, n):
        raise DimensionError(f"sigma_x must be {n}x{n}")
    return GroundTruth(ModelParams(lam, theta), sigma_x, seed)


def sample_dataset(gt: GroundTruth, m: int, seed: int = 0, noise: str = "objective") -> Dataset:
    """Draw ``m`` rows ``x ~ N(0, sigma_x)``, ``y | x ~ N(-Lam^-1 Theta' x, C)``.

    ``C`` is ``Lam^-1`` for ``noise="objective"`` and ``(2 Lam)^-1`` for
    ``noise="density"``.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if noise not in NOISE_CONVENTIONS:
        raise ValueError(f"noise must be one of {NOISE_CONVENTIONS}")
    params = gt.params
    rng = np.random.default_rng(seed)
    n, p = params.n, params.p
    lx = linalg.cholesky(gt.sigma_x, lower=True)
    x = rng.standard_normal((m, n)) @ lx.T
    # lam = U'U, so U^-1 U^-T = lam^-1 and U^-1 z has covariance lam^-1
    u = linalg.cholesky(params.lam, lower=False)
    scale = 1.0 if noise == "objective" else np.sqrt(0.5)
    eps = scale * linalg.solve_triangular(u, rng.standard_normal((p, m)), lower=False).T
    mean = -linalg.cho_solve((u, False), params.theta.T @ x.T).T
    return Dataset(x, mean + eps)


@dataclass(frozen=True)
class RecoveryError:
    rel_frobenius_lambda: float
    rel_frobenius_theta: float
    support_f1_theta: float


def _rel_err(truth, est):
    denom = np.linalg.norm(truth)
    diff = np.linalg.norm(est - truth)
    if denom == 0:
        return 0.0 if diff == 0 else float("inf")
    return float(diff / denom)


def support_f1(truth, est, threshold: float = SUPPORT_THRESHOLD) -> float:
    true_mask = np.abs(truth) > threshold
    est_mask = np.abs(est) > threshold
    tp = np.sum(true_mask & est_mask)
    if not true_mask.any() and not est_mask.any():
        return 1.0
    if tp == 0:
        return 0.0
    precision = tp / est_mask.sum()
    recall = tp / true_mask.sum()
    return float(2 * precision * recall / (precision + recall))


def recovery_error(truth: ModelParams, estimate: ModelParams) -> RecoveryError:
    if truth.lam.shape != estimate.lam.shape or truth.theta.shape != estimate.theta.shape:
        raise DimensionError("truth and estimate dimensions differ")
    return RecoveryError(
        _rel_err(truth.lam, estimate.lam),
        _rel_err(truth.theta, estimate.theta),
        support_f1(truth.theta, estimate.theta),
    )
