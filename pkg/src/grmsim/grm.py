"""Core graded response model in slope-intercept form.

An item with C ordered categories (0..C-1) has one slope per latent
dimension and C-1 strictly decreasing intercepts d_1 > ... > d_{C-1}.
Boundary probabilities follow the logistic form

    P*(X >= k | theta) = sigmoid(a . theta + d_k),  1 <= k <= C-1,

with P*(X >= 0) = 1 and P*(X >= C) = 0. Category probabilities are
differences of adjacent boundaries. Intercepts are intercepts throughout;
no difficulty transform b = -d/a is ever applied. The reporting layer
labels intercept families b1/b2/b3, which is a naming convention only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

# Probabilities are floored at this value before logs are taken.
PROB_FLOOR = 1e-300

# Intercepts beyond this magnitude are treated as divergence.
INTERCEPT_BOUND = 25.0


@dataclass
class ItemParams:
    """Parameters of a single graded item under simple structure.

    slopes: length-D vector, nonzero only at loading_dim.
    intercepts: length C-1, strictly decreasing, |d_k| <= 25.
    loading_dim: index of the dimension the item measures.

    The loading slope is positive for generated forms and for fitted
    forms after reflection fixing; a negative loading slope is allowed
    so that pre-fix reflected states remain representable.
    """

    slopes: np.ndarray
    intercepts: np.ndarray
    loading_dim: int

    def __post_init__(self):
        self.slopes = np.asarray(self.slopes, dtype=float)
        self.intercepts = np.asarray(self.intercepts, dtype=float)
        if self.slopes.ndim != 1 or self.slopes.size == 0:
            raise ValueError("slopes must be a non-empty 1-D vector")
        if not np.all(np.isfinite(self.slopes)):
            raise ValueError("slopes must be finite")
        if not 0 <= self.loading_dim < self.slopes.size:
            raise ValueError(
                f"loading_dim {self.loading_dim} out of range for "
                f"{self.slopes.size} dimensions"
            )
        if self.slopes[self.loading_dim] == 0.0:
            raise ValueError("loading slope must be nonzero")
        off = np.delete(self.slopes, self.loading_dim)
        if np.any(off != 0.0):
            raise ValueError("simple structure requires zero off-loading slopes")
        if self.intercepts.ndim != 1 or self.intercepts.size == 0:
            raise ValueError("intercepts must be a non-empty 1-D vector")
        if not np.all(np.isfinite(self.intercepts)):
            raise ValueError("intercepts must be finite")
        if np.any(np.abs(self.intercepts) > INTERCEPT_BOUND):
            raise ValueError(f"intercepts must satisfy |d_k| <= {INTERCEPT_BOUND}")
        if self.intercepts.size > 1 and not np.all(np.diff(self.intercepts) < 0):
            raise ValueError("intercepts must be strictly decreasing")

    @property
    def n_dims(self) -> int:
        return self.slopes.size

    @property
    def n_categories(self) -> int:
        return self.intercepts.size + 1


@dataclass
class TestForm:
    """A fixed collection of items sharing D dimensions and C categories."""

    # not a pytest class, despite the name
    __test__ = False

    items: list[ItemParams]
    n_dims: int
    n_categories: int

    def __post_init__(self):
        if not self.items:
            raise ValueError("a test form needs at least one item")
        for j, item in enumerate(self.items):
            if item.n_dims != self.n_dims:
                raise ValueError(f"item {j} has {item.n_dims} dims, form has {self.n_dims}")
            if item.n_categories != self.n_categories:
                raise ValueError(
                    f"item {j} has {item.n_categories} categories, "
                    f"form has {self.n_categories}"
                )
        loaded = {item.loading_dim for item in self.items}
        missing = sorted(set(range(self.n_dims)) - loaded)
        if missing:
            raise ValueError(f"no item loads on dimension(s) {missing}")

    @property
    def n_items(self) -> int:
        return len(self.items)

    @property
    def slope_matrix(self) -> np.ndarray:
        """(K, D) slope matrix, zero off the loading dimension."""
        return np.stack([item.slopes for item in self.items])

    @property
    def intercept_matrix(self) -> np.ndarray:
        """(K, C-1) intercept matrix."""
        return np.stack([item.intercepts for item in self.items])

    @property
    def loading_dims(self) -> np.ndarray:
        return np.array([item.loading_dim for item in self.items])


def _linear_predictor(item: ItemParams, thetas: np.ndarray) -> np.ndarray:
    """a . theta at many ability points, accumulated dimension by dimension.

    The explicit loop fixes the summation order so scalar and vectorized
    callers produce bit-identical values on every platform.
    """
    lin = np.zeros(thetas.shape[0])
    for d in range(thetas.shape[1]):
        lin += item.slopes[d] * thetas[:, d]
    return lin


def _boundary_matrix(item: ItemParams, thetas: np.ndarray) -> np.ndarray:
    """(N, C+1) boundary probabilities P*(X >= k) for k = 0..C."""
    n = thetas.shape[0]
    z = _linear_predictor(item, thetas)[:, None] + item.intercepts[None, :]
    pstar = expit(z)
    return np.concatenate([np.ones((n, 1)), pstar, np.zeros((n, 1))], axis=1)


def category_prob_matrix(item: ItemParams, thetas: np.ndarray) -> np.ndarray:
    """(N, C) category probabilities at many ability points."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 2 or thetas.shape[1] != item.n_dims:
        raise ValueError(f"thetas must be (N, {item.n_dims})")
    bounds = _boundary_matrix(item, thetas)
    return np.maximum(bounds[:, :-1] - bounds[:, 1:], 0.0)


def boundary_prob(item: ItemParams, theta: np.ndarray, k: int) -> float:
    """P*(X >= k | theta) with the conventions P*(>=0) = 1, P*(>=C) = 0."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (item.n_dims,):
        raise ValueError(f"theta must have shape ({item.n_dims},)")
    c = item.n_categories
    if not 0 <= k <= c:
        raise ValueError(f"boundary index k={k} outside 0..{c}")
    return float(_boundary_matrix(item, theta[None, :])[0, k])


def category_probs(item: ItemParams, theta: np.ndarray) -> np.ndarray:
    """Probabilities of the C categories at one ability point.

    Entries are clipped at zero against rounding in the boundary
    differences; they sum to 1 within 1e-12.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (item.n_dims,):
        raise ValueError(f"theta must have shape ({item.n_dims},)")
    return category_prob_matrix(item, theta[None, :])[0]


def response_loglik(item: ItemParams, theta: np.ndarray, x: int) -> float:
    """Log probability of response x, floored at log(1e-300)."""
    if not 0 <= x < item.n_categories:
        raise ValueError(f"response {x} outside 0..{item.n_categories - 1}")
    p = category_probs(item, theta)[x]
    return float(np.log(max(p, PROB_FLOOR)))


def sample_category(probs: np.ndarray, u: float) -> int:
    """Map one uniform draw to a category under the cumulative convention.

    Returns the smallest k with u < cumsum(probs)[k], capped at C-1.
    simulate_dataset consumes its uniforms through the same arithmetic,
    so the two routes agree cell by cell.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or probs.size < 2:
        raise ValueError("probs must be a 1-D vector with at least 2 entries")
    if np.any(probs < 0.0):
        raise ValueError("probabilities must be nonnegative")
    if abs(float(probs.sum()) - 1.0) > 1e-9:
        raise ValueError("probabilities must sum to 1 within 1e-9")
    if not 0.0 <= u < 1.0:
        raise ValueError("u must lie in [0, 1)")
    cdf = np.cumsum(probs)[:-1]
    return int(np.sum(u >= cdf))
