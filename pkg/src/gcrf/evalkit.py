"""AUC and solver convergence comparisons."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import stats as sps

from .core import SufficientStats, closed_form_mle, compute_stats, objective
from .datagen import sample_dataset, sample_ground_truth
from .gd import SolverConfig, fit_gd
from .admm import fit_admm

AGREE_TOL = 1e-4
CONVERGENCE_EPS = 1e-6


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied (positive, negative) pairs count one half."""
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    if not np.all(np.isin(labels, (0, 1))):
        raise ValueError("labels must be 0 or 1")
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined with a single class")
    # midranks give exactly (wins + ties/2) after subtracting the positives' own ranks
    ranks = sps.rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def iterations_to_tolerance(trace, f_star: float, eps: float = CONVERGENCE_EPS):
    """First iteration whose objective is within ``eps`` of ``f_star``, else None."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    for record in trace:
        if record.objective <= f_star + eps:
            return record.iteration
    return None


def params_distance(a, b) -> float:
    return float(np.sqrt(np.sum((a.lam - b.lam) ** 2) + np.sum((a.theta - b.theta) ** 2)))


@dataclass(frozen=True)
class Comparison:
    gd_iters: int | None
    admm_iters: int | None
    f_star: float
    agree: bool
    distance: float
    f_gd: float
    f_admm: float


def compare_solvers(stats: SufficientStats, config: SolverConfig | None = None, init=None) -> Comparison:
    """Run both solvers from the same start and score them against the optimum."""
    config = config or SolverConfig()
    if config.l1_weight != 0:
        config = replace(config, l1_weight=0.0)
    f_star = objective(stats, closed_form_mle(stats, ridge=None))
    gd = fit_gd(stats, config, init)
    admm = fit_admm(stats, config, init)
    distance = params_distance(gd.params, admm.params)
    return Comparison(
        iterations_to_tolerance(gd.trace, f_star),
        iterations_to_tolerance(admm.trace, f_star),
        f_star,
        distance <= AGREE_TOL,
        distance,
        gd.trace[-1].objective,
        admm.trace[-1].objective,
    )


@dataclass(frozen=True)
class SuiteCell:
    seed: int
    n: int
    p: int
    m: int

    def stats(self) -> SufficientStats:
        gt = sample_ground_truth(self.n, self.p, seed=self.seed)
        return compute_stats(sample_dataset(gt, self.m, seed=1000 + self.seed))


def standard_suite(seeds=5, n: int = 5, p: int = 3, m: int = 1000) -> list[SuiteCell]:
    """The benchmark instances: seeds ``0..seeds-1`` at fixed ``(n, p, m)``."""
    if isinstance(seeds, int):
        seeds = range(seeds)
    return [SuiteCell(int(s), n, p, m) for s in seeds]
