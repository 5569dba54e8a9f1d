"""Recovery metrics: bias and RMSE per parameter family.

Families group estimates that share a generating distribution: a1..aD
are the loading slopes of each dimension block, b1..b{C-1} the intercept
columns across all items. With estimates X_hat and truths X over a
family of size K,

    bias = sum(X_hat - X) / K
    rmse = sqrt(sum((X_hat - X)^2) / K)

Values stay at full precision here; rounding happens only at the
reporting boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import Condition
from .estimation import FitResult
from .grm import TestForm


def bias(estimates: np.ndarray, truths: np.ndarray) -> float:
    """Mean signed error over one parameter family."""
    est, tru = _paired(estimates, truths)
    return float(np.mean(est - tru))


def rmse(estimates: np.ndarray, truths: np.ndarray) -> float:
    """Root mean squared error over one parameter family."""
    est, tru = _paired(estimates, truths)
    return float(np.sqrt(np.mean((est - tru) ** 2)))


def _paired(estimates, truths) -> tuple[np.ndarray, np.ndarray]:
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truths, dtype=float)
    if est.ndim != 1 or tru.ndim != 1:
        raise ValueError("estimates and truths must be 1-D")
    if est.size != tru.size:
        raise ValueError(f"length mismatch: {est.size} estimates, {tru.size} truths")
    if est.size == 0:
        raise ValueError("families must be non-empty")
    return est, tru


def family_names(n_dims: int, n_categories: int) -> list[str]:
    """Canonical family order: slopes by dimension, then intercept columns."""
    return [f"a{d + 1}" for d in range(n_dims)] + [
        f"b{k + 1}" for k in range(n_categories - 1)
    ]


def evaluate_replication(
    result: FitResult,
    truth: TestForm,
    allocation: tuple[int, ...],
) -> dict[str, tuple[float, float]]:
    """Per-family (bias, rmse) for one calibrated replication.

    Estimated and true forms must describe the same block-ordered test;
    items 0..k1-1 load dimension 1, and so on.
    """
    est_form = result.estimates
    if est_form.n_items != truth.n_items:
        raise ValueError(
            f"estimated form has {est_form.n_items} items, truth has {truth.n_items}"
        )
    if est_form.n_dims != truth.n_dims or est_form.n_categories != truth.n_categories:
        raise ValueError("estimated and true forms disagree on dimensions or categories")
    allocation = tuple(int(k) for k in allocation)
    if sum(allocation) != truth.n_items or len(allocation) != truth.n_dims:
        raise ValueError(f"allocation {allocation} does not match the forms")
    expected_loading = np.repeat(np.arange(truth.n_dims), allocation)
    if not np.array_equal(est_form.loading_dims, expected_loading) or not np.array_equal(
        truth.loading_dims, expected_loading
    ):
        raise ValueError("forms are not block-ordered by the given allocation")

    est_a = np.array([it.slopes[it.loading_dim] for it in est_form.items])
    tru_a = np.array([it.slopes[it.loading_dim] for it in truth.items])
    est_d = est_form.intercept_matrix
    tru_d = truth.intercept_matrix

    out: dict[str, tuple[float, float]] = {}
    start = 0
    for dim, k_d in enumerate(allocation):
        block = slice(start, start + k_d)
        out[f"a{dim + 1}"] = (
            bias(est_a[block], tru_a[block]),
            rmse(est_a[block], tru_a[block]),
        )
        start += k_d
    for k in range(truth.n_categories - 1):
        out[f"b{k + 1}"] = (
            bias(est_d[:, k], tru_d[:, k]),
            rmse(est_d[:, k], tru_d[:, k]),
        )
    return out


@dataclass
class RecoveryMetrics:
    """Replication-averaged recovery for one condition.

    families maps family name to (mean bias, mean RMSE) at full
    precision. n_nonconverged counts replications whose EM hit the cycle
    limit; they are still included in the averages.
    """

    condition: Condition
    families: dict[str, tuple[float, float]]
    n_reps: int
    n_nonconverged: int = 0

    def __post_init__(self):
        if self.n_reps < 1:
            raise ValueError("aggregation needs at least one replication")
        if not self.families:
            raise ValueError("no parameter families")
        if not 0 <= self.n_nonconverged <= self.n_reps:
            raise ValueError("n_nonconverged out of range")


def aggregate(
    condition: Condition,
    per_replication: list[dict[str, tuple[float, float]]],
    n_nonconverged: int = 0,
) -> RecoveryMetrics:
    """Average per-replication family metrics for one condition."""
    if not per_replication:
        raise ValueError("aggregation needs at least one replication")
    names = list(per_replication[0])
    for i, rep in enumerate(per_replication):
        if list(rep) != names:
            raise ValueError(f"replication {i} reports different families")
    families = {}
    for name in names:
        b = np.array([rep[name][0] for rep in per_replication])
        r = np.array([rep[name][1] for rep in per_replication])
        families[name] = (float(b.mean()), float(r.mean()))
    return RecoveryMetrics(
        condition=condition,
        families=families,
        n_reps=len(per_replication),
        n_nonconverged=n_nonconverged,
    )
