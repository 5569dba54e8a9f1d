"""Marginal maximum likelihood estimation of graded items by EM.

The latent prior is a tensor-product rectangular quadrature: equally
spaced points per dimension over fixed bounds, weighted by the standard
normal density and renormalized. Estimation uses an orthogonal prior by
default (prior_correlation = 0) even when the generating abilities were
correlated; that mismatch is part of the study design.

With an orthogonal prior and simple structure the person posterior
factorizes across dimensions, so each dimension can run its E-step on a
one-dimensional grid (the `factorize` switch, on by default). The full
tensor grid path evaluates the joint posterior over all nodes and then
marginalizes it per dimension; both paths feed identical M-steps and
agree to numerical precision.

The M-step maximizes each item's expected complete-data log-likelihood
Q_j over (loading slope, intercepts) by Newton's method with analytic
gradient and Hessian, halving steps that break intercept ordering, slope
positivity, or monotone improvement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .design import ResponseMatrix, equicorrelation_cholesky
from .errors import CalibrationError, EstimationError, GridSizeError
from .grm import INTERCEPT_BOUND, PROB_FLOOR, ItemParams, TestForm

# Newton: gradient 2-norm at return, iteration cap, halvings per step.
_NEWTON_GTOL = 1e-6
_NEWTON_MAX_ITER = 100
_MAX_HALVINGS = 20
# Q_j may drop by at most this much per accepted step (float noise allowance).
_Q_SLACK = 1e-10


@dataclass
class EmConfig:
    """Estimation settings.

    points_per_dim >= 3 is required for calibration; 1 or 2 stay legal so
    degenerate grids can be built for diagnostics. `factorize` only takes
    effect when prior_correlation is 0; a correlated prior forces the
    full tensor grid because its weights do not factor.
    """

    points_per_dim: int = 15
    bounds: tuple[float, float] = (-6.0, 6.0)
    tol: float = 1e-4
    max_cycles: int = 500
    prior_correlation: float = 0.0
    factorize: bool = True
    max_grid_nodes: int = 50_000

    def __post_init__(self):
        self.bounds = (float(self.bounds[0]), float(self.bounds[1]))
        if self.points_per_dim < 1:
            raise ValueError("points_per_dim must be >= 1")
        if not self.bounds[0] < self.bounds[1]:
            raise ValueError(f"empty quadrature bounds {self.bounds}")
        if self.tol <= 0.0:
            raise ValueError("tol must be > 0")
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be >= 1")
        if not -1.0 < self.prior_correlation < 1.0:
            raise ValueError("prior_correlation must lie in (-1, 1)")
        if self.max_grid_nodes < 1:
            raise ValueError("max_grid_nodes must be >= 1")


@dataclass
class QuadratureGrid:
    """Prior support points and normalized weights."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.nodes.ndim != 2:
            raise ValueError("nodes must be (M, D)")
        if self.weights.shape != (self.nodes.shape[0],):
            raise ValueError("weights must be (M,)")
        if np.any(self.weights < 0.0):
            raise ValueError("weights must be nonnegative")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_dims(self) -> int:
        return self.nodes.shape[1]


@dataclass
class FitResult:
    """Estimates plus EM diagnostics for one calibration."""

    estimates: TestForm
    loglik: float
    loglik_trace: list[float]
    n_cycles: int
    converged: bool


def _axis_points(config: EmConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension grid points and normalized normal weights."""
    lo, hi = config.bounds
    p = config.points_per_dim
    if p == 1:
        t = np.array([(lo + hi) / 2.0])
    else:
        t = np.linspace(lo, hi, p)
    w = np.exp(-0.5 * t**2)
    return t, w / w.sum()


def build_quadrature(config: EmConfig, n_dims: int) -> QuadratureGrid:
    """Tensor-product grid over n_dims dimensions.

    Weights come from the independent standard normal when
    prior_correlation is 0, otherwise from the equicorrelated
    multivariate normal density; either way they are renormalized.
    First dimension varies slowest in the node ordering.
    """
    if n_dims < 1:
        raise ValueError("n_dims must be >= 1")
    m = config.points_per_dim**n_dims
    if m > config.max_grid_nodes:
        raise GridSizeError(
            f"grid of {m} nodes exceeds max_grid_nodes={config.max_grid_nodes}; "
            f"enable factorize (orthogonal prior) or reduce points_per_dim"
        )
    t, w = _axis_points(config)
    axes = np.meshgrid(*([t] * n_dims), indexing="ij")
    nodes = np.stack([ax.ravel() for ax in axes], axis=1)
    if config.prior_correlation == 0.0 or n_dims == 1:
        weights = np.ones(m)
        for ax in np.meshgrid(*([w] * n_dims), indexing="ij"):
            weights *= ax.ravel()
    else:
        lower = equicorrelation_cholesky(config.prior_correlation, n_dims)
        sigma = lower @ lower.T
        quad = np.einsum("md,dm->m", nodes, np.linalg.solve(sigma, nodes.T))
        weights = np.exp(-0.5 * quad)
    return QuadratureGrid(nodes=nodes, weights=weights / weights.sum())


def _log_prob_tables(a: np.ndarray, d: np.ndarray, t: np.ndarray) -> np.ndarray:
    """(K, M, C) log category probabilities for K items over M points.

    `t` is (K, M): each item's loading coordinate at every node.
    """
    z = a[:, None] * t
    zz = z[:, :, None] + d[:, None, :]
    pstar = expit(zz)
    k, m = z.shape
    bounds = np.concatenate(
        [np.ones((k, m, 1)), pstar, np.zeros((k, m, 1))], axis=2
    )
    probs = np.maximum(bounds[..., :-1] - bounds[..., 1:], 0.0)
    return np.log(np.maximum(probs, PROB_FLOOR))


def _posterior(
    x_cols: np.ndarray, log_tables: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, float]:
    """Posterior node weights per person and the marginal log-likelihood.

    Works in log space with per-person max rescaling, so underflow can
    only surface as a non-finite row, which is reported by person index.
    """
    n = x_cols.shape[0]
    log_w = np.log(weights)
    logl = np.tile(log_w, (n, 1))
    for jj in range(x_cols.shape[1]):
        logl += log_tables[jj].T[x_cols[:, jj]]
    row_max = logl.max(axis=1)
    post = np.exp(logl - row_max[:, None])
    norm = post.sum(axis=1)
    bad = ~np.isfinite(norm) | (norm <= 0.0)
    if np.any(bad):
        raise EstimationError(
            f"person {int(np.flatnonzero(bad)[0])}: all-zero likelihood row"
        )
    post /= norm[:, None]
    loglik = float(np.sum(row_max + np.log(norm)))
    if not np.isfinite(loglik):
        raise EstimationError("non-finite marginal log-likelihood")
    return post, loglik


def _category_counts(post: np.ndarray, x_col: np.ndarray, c: int) -> np.ndarray:
    """(M, C) expected response counts for one item."""
    counts = np.empty((post.shape[1], c))
    for k in range(c):
        counts[:, k] = post[x_col == k].sum(axis=0)
    return counts


def _collapse_nodes(t: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge nodes sharing a loading coordinate; Q_j only sees that axis."""
    tq, inverse = np.unique(t, return_inverse=True)
    if tq.size == t.size:
        return t, counts
    merged = np.zeros((tq.size, counts.shape[1]))
    np.add.at(merged, inverse, counts)
    return tq, merged


def _q_grad_hess(
    x: np.ndarray, t: np.ndarray, counts: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Q_j and its analytic gradient and Hessian at x = (a, d_1..d_{C-1}).

    Derivatives chain through the boundary logits z_i = a t + d_i. In z
    space the Hessian is tridiagonal:

        H_ii     = w'_i (r_i - r_{i-1}) - w_i^2 (n_i / P_i^2 + n_{i-1} / P_{i-1}^2)
        H_i,i+1  = w_i w_{i+1} n_i / P_i^2

    with w_i = sigma_i (1 - sigma_i), r_k = n_k / P_k, category k matching
    boundary i on P_i = sigma_i - sigma_{i+1}.
    """
    a, d = x[0], x[1:]
    cm1 = d.size
    # Clip logits so saturated boundaries keep w > 0; otherwise the
    # w^2 * n / P^2 term becomes 0 * inf at extreme nodes.
    z = np.clip(a * t[:, None] + d[None, :], -35.0, 35.0)
    sig = expit(z)
    w = sig * (1.0 - sig)
    wp = w * (1.0 - 2.0 * sig)
    q = t.size
    bounds = np.concatenate([np.ones((q, 1)), sig, np.zeros((q, 1))], axis=1)
    probs = np.maximum(bounds[:, :-1] - bounds[:, 1:], PROB_FLOOR)
    qval = float(np.sum(counts * np.log(probs)))
    # Near-zero floored probabilities can overflow the curvature ratios;
    # cap them finite so fallback directions stay computable. Steps into
    # such regions are rejected by the Q comparison anyway.
    with np.errstate(over="ignore"):
        r = counts / probs
        n_over_p2 = np.minimum(r / probs, 1e300)

    gz = w * (r[:, 1:] - r[:, :-1])
    grad = np.empty(cm1 + 1)
    grad[0] = float(np.sum(t * gz.sum(axis=1)))
    grad[1:] = gz.sum(axis=0)

    hz_diag = wp * (r[:, 1:] - r[:, :-1]) - w**2 * (
        n_over_p2[:, 1:] + n_over_p2[:, :-1]
    )
    hz_off = w[:, :-1] * w[:, 1:] * n_over_p2[:, 1:-1]

    hess = np.zeros((cm1 + 1, cm1 + 1))
    hess[1:, 1:][np.diag_indices(cm1)] = hz_diag.sum(axis=0)
    if cm1 > 1:
        off = hz_off.sum(axis=0)
        idx = np.arange(cm1 - 1)
        hess[1 + idx, 2 + idx] = off
        hess[2 + idx, 1 + idx] = off
    row_sum = hz_diag.copy()
    if cm1 > 1:
        row_sum[:, :-1] += hz_off
        row_sum[:, 1:] += hz_off
    hess[0, 1:] = (t[:, None] * row_sum).sum(axis=0)
    hess[1:, 0] = hess[0, 1:]
    hess[0, 0] = float(np.sum(t**2 * (hz_diag.sum(axis=1) + 2.0 * hz_off.sum(axis=1))))
    return qval, grad, hess


def _feasible(x: np.ndarray) -> bool:
    a, d = x[0], x[1:]
    if a <= 0.0 or not np.all(np.isfinite(x)):
        return False
    if np.any(np.abs(d) > INTERCEPT_BOUND):
        return False
    return d.size < 2 or bool(np.all(np.diff(d) < 0.0))


def _ascent_direction(grad: np.ndarray, hess: np.ndarray) -> np.ndarray:
    """Newton direction, ridged toward gradient ascent when indefinite."""
    try:
        step = np.linalg.solve(hess, -grad)
        if float(grad @ step) > 0.0:
            return step
    except np.linalg.LinAlgError:
        pass
    lam = 1e-3 * max(1.0, float(np.abs(np.diag(hess)).max()))
    eye = np.eye(grad.size)
    for _ in range(30):
        try:
            step = np.linalg.solve(hess - lam * eye, -grad)
            if float(grad @ step) > 0.0:
                return step
        except np.linalg.LinAlgError:
            pass
        lam *= 10.0
    return grad.copy()


def _maximize_item(
    t: np.ndarray,
    counts: np.ndarray,
    a0: float,
    d0: np.ndarray,
    item_index: int | None = None,
) -> tuple[float, np.ndarray]:
    """Newton ascent of Q_j from (a0, d0); returns the maximizer."""
    label = "item" if item_index is None else f"item {item_index}"
    totals = counts.sum(axis=0)
    empty = np.flatnonzero(totals <= 0.0)
    if empty.size:
        raise CalibrationError(
            f"{label}: category {int(empty[0])} has zero expected count"
        )
    x = np.concatenate([[a0], d0])
    if not _feasible(x):
        raise CalibrationError(f"{label}: infeasible start values")
    qval, grad, hess = _q_grad_hess(x, t, counts)
    for _ in range(_NEWTON_MAX_ITER):
        if float(np.linalg.norm(grad)) < _NEWTON_GTOL:
            break
        step = _ascent_direction(grad, hess)
        slack = _Q_SLACK * (1.0 + abs(qval))
        accepted = False
        for h in range(_MAX_HALVINGS + 1):
            xn = x + step * 0.5**h
            if not _feasible(xn):
                continue
            qn, gn, hn = _q_grad_hess(xn, t, counts)
            if qn >= qval - slack:
                x, qval, grad, hess = xn, qn, gn, hn
                accepted = True
                break
        if not accepted:
            raise CalibrationError(
                f"{label}: M-step diverged (no feasible improving step after "
                f"{_MAX_HALVINGS} halvings)"
            )
    else:
        if float(np.linalg.norm(grad)) >= _NEWTON_GTOL:
            raise CalibrationError(
                f"{label}: Newton did not reach gradient tolerance in "
                f"{_NEWTON_MAX_ITER} iterations"
            )
    return float(x[0]), x[1:].copy()


def _one_hot_slopes(a: float, loading_dim: int, n_dims: int) -> np.ndarray:
    slopes = np.zeros(n_dims)
    slopes[loading_dim] = a
    return slopes


def e_step(
    responses: ResponseMatrix | np.ndarray,
    form: TestForm,
    grid: QuadratureGrid,
) -> tuple[np.ndarray, float]:
    """Expected counts per (item, node, category) and the marginal loglik.

    Reference implementation over the grid exactly as given; `fit` uses
    equivalent per-dimension kernels internally.
    """
    x = responses.values if isinstance(responses, ResponseMatrix) else np.asarray(responses)
    if x.ndim != 2 or x.shape[1] != form.n_items:
        raise ValueError(f"responses must be (N, {form.n_items})")
    if grid.n_dims != form.n_dims:
        raise ValueError(f"grid has {grid.n_dims} dims, form has {form.n_dims}")
    c = form.n_categories
    if x.min() < 0 or x.max() >= c:
        raise ValueError(f"responses must lie in 0..{c - 1}")
    t_rows = np.stack([grid.nodes[:, item.loading_dim] for item in form.items])
    a = np.array([item.slopes[item.loading_dim] for item in form.items])
    d = form.intercept_matrix
    tables = _log_prob_tables(a, d, t_rows)
    post, loglik = _posterior(x, tables, grid.weights)
    counts = np.stack(
        [_category_counts(post, x[:, j], c) for j in range(form.n_items)]
    )
    return counts, loglik


def marginal_loglik(
    responses: ResponseMatrix | np.ndarray,
    form: TestForm,
    grid: QuadratureGrid,
) -> float:
    """Quadrature marginal log-likelihood of a form on a dataset."""
    x = responses.values if isinstance(responses, ResponseMatrix) else np.asarray(responses)
    if x.ndim != 2 or x.shape[1] != form.n_items:
        raise ValueError(f"responses must be (N, {form.n_items})")
    if grid.n_dims != form.n_dims:
        raise ValueError(f"grid has {grid.n_dims} dims, form has {form.n_dims}")
    t_rows = np.stack([grid.nodes[:, item.loading_dim] for item in form.items])
    a = np.array([item.slopes[item.loading_dim] for item in form.items])
    tables = _log_prob_tables(a, form.intercept_matrix, t_rows)
    _, loglik = _posterior(x, tables, grid.weights)
    return loglik


def m_step_item(
    expected_counts: np.ndarray,
    grid: QuadratureGrid,
    current: ItemParams,
    item_index: int | None = None,
) -> ItemParams:
    """Maximize one item's expected complete-data log-likelihood.

    The returned parameters satisfy the ItemParams invariants and leave
    the gradient 2-norm below 1e-6.
    """
    counts = np.asarray(expected_counts, dtype=float)
    if counts.shape != (grid.n_nodes, current.n_categories):
        raise ValueError(
            f"expected_counts must be ({grid.n_nodes}, {current.n_categories})"
        )
    if np.any(counts < 0.0):
        raise ValueError("expected counts must be nonnegative")
    t_full = grid.nodes[:, current.loading_dim]
    t, merged = _collapse_nodes(t_full, counts)
    a0 = float(current.slopes[current.loading_dim])
    a1, d1 = _maximize_item(t, merged, a0, current.intercepts, item_index)
    return ItemParams(
        _one_hot_slopes(a1, current.loading_dim, current.n_dims),
        d1,
        current.loading_dim,
    )


def _start_values(x: np.ndarray, c: int) -> tuple[np.ndarray, np.ndarray]:
    """Slope 1.0 and logit cumulative proportions per item."""
    k = x.shape[1]
    a = np.ones(k)
    d = np.empty((k, c - 1))
    for j in range(k):
        props = np.mean(x[:, j][:, None] >= np.arange(1, c)[None, :], axis=0)
        d[j] = np.log(props / (1.0 - props))
    return a, d


class _FullGridState:
    """Joint-posterior E-step over the tensor grid, marginalized per dim."""

    def __init__(self, x, loading, config, n_dims):
        self.x = x
        self.loading = loading
        self.grid = build_quadrature(config, n_dims)
        p = config.points_per_dim
        self.t1, _ = _axis_points(config)
        self.n_dims = n_dims
        m = self.grid.n_nodes
        self.maps = [
            (np.arange(m) // p ** (n_dims - 1 - dim)) % p for dim in range(n_dims)
        ]
        self.log_w = np.log(self.grid.weights)
        self.shape = (x.shape[0],) + (p,) * n_dims

    def run(self, a, d, c, want_counts):
        n = self.x.shape[0]
        tables = _log_prob_tables(
            a, d, np.broadcast_to(self.t1, (a.size, self.t1.size))
        )
        # Per-dimension person log-likelihood over the shared axis points.
        per_dim = []
        for dim in range(self.n_dims):
            items = np.flatnonzero(self.loading == dim)
            logl = np.zeros((n, self.t1.size))
            for j in items:
                logl += tables[j].T[self.x[:, j]]
            per_dim.append(logl)
        logw = np.tile(self.log_w, (n, 1))
        for dim in range(self.n_dims):
            logw += per_dim[dim][:, self.maps[dim]]
        row_max = logw.max(axis=1)
        post = np.exp(logw - row_max[:, None])
        norm = post.sum(axis=1)
        bad = ~np.isfinite(norm) | (norm <= 0.0)
        if np.any(bad):
            raise EstimationError(
                f"person {int(np.flatnonzero(bad)[0])}: all-zero likelihood row"
            )
        loglik = float(np.sum(row_max + np.log(norm)))
        if not want_counts:
            return None, loglik
        post /= norm[:, None]
        cube = post.reshape(self.shape)
        marginals = []
        for dim in range(self.n_dims):
            axes = tuple(ax for ax in range(1, self.n_dims + 1) if ax != dim + 1)
            marginals.append(cube.sum(axis=axes))
        counts = [
            _category_counts(marginals[self.loading[j]], self.x[:, j], c)
            for j in range(self.x.shape[1])
        ]
        return counts, loglik


class _FactorizedState:
    """Independent per-dimension E-steps on one-dimensional grids."""

    def __init__(self, x, loading, config, n_dims):
        self.x = x
        self.loading = loading
        self.n_dims = n_dims
        self.t1, w1 = _axis_points(config)
        self.w1 = w1
        self.blocks = [np.flatnonzero(loading == dim) for dim in range(n_dims)]

    def run(self, a, d, c, want_counts):
        loglik = 0.0
        counts = [None] * self.x.shape[1] if want_counts else None
        for dim in range(self.n_dims):
            items = self.blocks[dim]
            x_d = self.x[:, items]
            tables = _log_prob_tables(
                a[items], d[items], np.broadcast_to(self.t1, (items.size, self.t1.size))
            )
            if want_counts:
                post, ll = _posterior(x_d, tables, self.w1)
                for jj, j in enumerate(items):
                    counts[j] = _category_counts(post, x_d[:, jj], c)
            else:
                _, ll = _posterior(x_d, tables, self.w1)
            loglik += ll
        return counts, loglik


def fit(
    responses: ResponseMatrix | np.ndarray,
    allocation: tuple[int, ...],
    config: EmConfig | None = None,
    n_categories: int | None = None,
) -> FitResult:
    """Calibrate a simple-structure graded form by EM.

    Items are assumed block-ordered by dimension according to
    `allocation`. Start values are slope 1.0 and logit cumulative
    proportions. Cycles stop when the largest absolute parameter change
    falls below config.tol; hitting max_cycles is reported through
    `converged=False`, not an error. The trace holds the marginal
    log-likelihood before each M-step plus a final evaluation, and is
    non-decreasing within numerical tolerance.
    """
    config = config if config is not None else EmConfig()
    if config.points_per_dim < 3:
        raise ValueError("calibration requires points_per_dim >= 3")
    if isinstance(responses, ResponseMatrix):
        x = responses.values
        if n_categories is None:
            n_categories = responses.n_categories
    else:
        x = np.asarray(responses)
    if x.ndim != 2:
        raise ValueError("responses must be (N, K)")
    if not np.issubdtype(x.dtype, np.integer):
        raise ValueError("responses must be integers")
    allocation = tuple(int(k) for k in allocation)
    if any(k < 1 for k in allocation):
        raise ValueError("allocation entries must be positive")
    if sum(allocation) != x.shape[1]:
        raise ValueError(
            f"allocation sums to {sum(allocation)}, data has {x.shape[1]} items"
        )
    c = int(n_categories) if n_categories is not None else int(x.max()) + 1
    if c < 2:
        raise ValueError("need at least 2 categories")
    if x.min() < 0 or x.max() >= c:
        raise ValueError(f"responses must lie in 0..{c - 1}")
    for j in range(x.shape[1]):
        seen = np.bincount(x[:, j], minlength=c)
        if np.any(seen == 0):
            raise CalibrationError(
                f"item {j}: category {int(np.flatnonzero(seen == 0)[0])} "
                f"never observed; cannot calibrate"
            )

    n_dims = len(allocation)
    loading = np.repeat(np.arange(n_dims), allocation)
    a, d = _start_values(x, c)
    factorized = config.factorize and config.prior_correlation == 0.0
    state_cls = _FactorizedState if factorized else _FullGridState
    state = state_cls(x, loading, config, n_dims)

    trace: list[float] = []
    converged = False
    n_cycles = 0
    for cycle in range(1, config.max_cycles + 1):
        counts, loglik = state.run(a, d, c, want_counts=True)
        trace.append(loglik)
        new_a = a.copy()
        new_d = d.copy()
        for j in range(x.shape[1]):
            tq, cq = _collapse_nodes(state.t1, counts[j])
            new_a[j], new_d[j] = _maximize_item(tq, cq, a[j], d[j], item_index=j)
        delta = max(
            float(np.max(np.abs(new_a - a))), float(np.max(np.abs(new_d - d)))
        )
        a, d = new_a, new_d
        n_cycles = cycle
        if delta < config.tol:
            converged = True
            break
    _, final_ll = state.run(a, d, c, want_counts=False)
    trace.append(final_ll)

    # Reflection guard: flip any dimension whose slope sum went negative.
    for dim in range(n_dims):
        block = loading == dim
        if a[block].sum() < 0.0:
            a[block] *= -1.0

    items = [
        ItemParams(_one_hot_slopes(a[j], loading[j], n_dims), d[j], int(loading[j]))
        for j in range(x.shape[1])
    ]
    estimates = TestForm(items, n_dims=n_dims, n_categories=c)
    return FitResult(
        estimates=estimates,
        loglik=final_ll,
        loglik_trace=trace,
        n_cycles=n_cycles,
        converged=converged,
    )


def fix_reflection(result: FitResult) -> FitResult:
    """Flip slope signs per dimension until each dimension sums positive.

    Reflecting theta_d and every slope on dimension d together leaves the
    likelihood unchanged; this picks the positive representative.
    """
    form = result.estimates
    sums = np.zeros(form.n_dims)
    for item in form.items:
        sums[item.loading_dim] += item.slopes[item.loading_dim]
    if np.all(sums >= 0.0):
        return result
    items = []
    for item in form.items:
        if sums[item.loading_dim] < 0.0:
            items.append(
                ItemParams(-item.slopes, item.intercepts.copy(), item.loading_dim)
            )
        else:
            items.append(item)
    fixed = TestForm(items, n_dims=form.n_dims, n_categories=form.n_categories)
    return FitResult(
        estimates=fixed,
        loglik=result.loglik,
        loglik_trace=list(result.loglik_trace),
        n_cycles=result.n_cycles,
        converged=result.converged,
    )
