"""Simulation design: conditions, parameter draws, abilities, responses.

All randomness flows through a numpy Generator handed in by the caller.
Within one replication the draw order is fixed and documented: item slopes
(dimension blocks in order), then intercepts (first boundary, then one
decrement round per remaining boundary), then abilities (one N x D uniform
block, row-major), then response uniforms (one N x K block, row-major).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .grm import ItemParams, TestForm, category_prob_matrix

# Built-in item allocations over three dimensions.
_ALLOCATIONS = {20: (7, 7, 6), 40: (13, 13, 14)}


def _check_rho(rho: float, n_dims: int) -> None:
    """Positive definiteness bound for an equicorrelation matrix."""
    if n_dims == 1:
        if rho != 0.0:
            raise ValueError("rho must be 0 for a single dimension")
        return
    lo = -1.0 / (n_dims - 1)
    if not lo < rho < 1.0:
        raise ValueError(
            f"rho={rho} outside ({lo:.6g}, 1); equicorrelation matrix "
            f"not positive definite for {n_dims} dimensions"
        )


@dataclass
class Condition:
    """One cell of the simulation design."""

    test_length: int
    rho: float
    n_persons: int
    n_reps: int
    allocation: tuple[int, ...]

    def __post_init__(self):
        self.allocation = tuple(int(k) for k in self.allocation)
        if not self.allocation or any(k < 1 for k in self.allocation):
            raise ValueError("allocation entries must be positive")
        if sum(self.allocation) != self.test_length:
            raise ValueError(
                f"allocation {self.allocation} sums to {sum(self.allocation)}, "
                f"expected test_length {self.test_length}"
            )
        if self.n_persons < 1:
            raise ValueError("n_persons must be >= 1")
        if self.n_reps < 1:
            raise ValueError("n_reps must be >= 1")
        _check_rho(self.rho, self.n_dims)

    @property
    def n_dims(self) -> int:
        return len(self.allocation)

    def label(self) -> str:
        """Stable directory-name label, e.g. 'tl20_rho0.3'."""
        return f"tl{self.test_length}_rho{self.rho:g}"


@dataclass
class SimulationDesign:
    """Factor levels and generating distributions for the whole study.

    Defaults reproduce the reference design: test lengths 20 and 40 over
    three dimensions, interdimensional correlations 0.3 and 0.7, 2000
    persons, 100 replications, master seed 1234, and uniform generating
    ranges per dimension. 40-item forms reuse the same slope ranges.
    """

    test_lengths: tuple[int, ...] = (20, 40)
    rhos: tuple[float, ...] = (0.3, 0.7)
    n_persons: int = 2000
    n_reps: int = 100
    master_seed: int = 1234
    slope_ranges: tuple[tuple[float, float], ...] = (
        (0.44, 0.75),
        (0.58, 0.98),
        (0.75, 1.33),
    )
    intercept_range: tuple[float, float] = (0.67, 1.34)
    n_categories: int = 4

    def __post_init__(self):
        self.test_lengths = tuple(int(t) for t in self.test_lengths)
        self.rhos = tuple(float(r) for r in self.rhos)
        self.slope_ranges = tuple((float(a), float(b)) for a, b in self.slope_ranges)
        self.intercept_range = (
            float(self.intercept_range[0]),
            float(self.intercept_range[1]),
        )
        if not self.test_lengths:
            raise ValueError("test_lengths must be non-empty")
        if not self.rhos:
            raise ValueError("rhos must be non-empty")
        if any(t < self.n_dims for t in self.test_lengths):
            raise ValueError("test lengths must cover every dimension")
        if self.n_persons < 1:
            raise ValueError("n_persons must be >= 1")
        if self.n_reps < 1:
            raise ValueError("n_reps must be >= 1")
        if self.n_categories < 2:
            raise ValueError("n_categories must be >= 2")
        if not self.slope_ranges:
            raise ValueError("slope_ranges must be non-empty")
        for d, (lo, hi) in enumerate(self.slope_ranges):
            if lo <= 0.0:
                raise ValueError(f"slope range {d} lower bound must be > 0")
            if hi < lo:
                raise ValueError(f"slope range {d} is empty: ({lo}, {hi})")
        ilo, ihi = self.intercept_range
        if ilo <= 0.0:
            raise ValueError("intercept range lower bound must be > 0")
        if ihi < ilo:
            raise ValueError(f"intercept range is empty: ({ilo}, {ihi})")
        for r in self.rhos:
            _check_rho(r, self.n_dims)

    @property
    def n_dims(self) -> int:
        return len(self.slope_ranges)


@dataclass
class AbilityMatrix:
    """Latent abilities for one sample, with their target covariance."""

    values: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("values must be (N, D)")
        d = self.values.shape[1]
        if self.sigma.shape != (d, d):
            raise ValueError(f"sigma must be ({d}, {d})")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("ability values must be finite")
        if not np.allclose(np.diag(self.sigma), 1.0, atol=1e-12):
            raise ValueError("sigma must have unit diagonal")
        off = self.sigma[~np.eye(d, dtype=bool)]
        if off.size and not np.allclose(off, off[0], atol=1e-12):
            raise ValueError("sigma must be equicorrelated")

    @property
    def n_persons(self) -> int:
        return self.values.shape[0]

    @property
    def n_dims(self) -> int:
        return self.values.shape[1]


@dataclass
class ResponseMatrix:
    """Integer responses in 0..C-1 plus replication provenance."""

    values: np.ndarray
    n_categories: int
    condition: Condition | None = None
    replication: int = 0
    seed: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 2:
            raise ValueError("values must be (N, K)")
        if not np.issubdtype(self.values.dtype, np.integer):
            raise ValueError("responses must be integers")
        if self.n_categories < 2:
            raise ValueError("n_categories must be >= 2")
        if self.values.size and (
            self.values.min() < 0 or self.values.max() >= self.n_categories
        ):
            raise ValueError(f"responses must lie in 0..{self.n_categories - 1}")
        if self.condition is not None:
            expected = (self.condition.n_persons, self.condition.test_length)
            if self.values.shape != expected:
                raise ValueError(
                    f"values shape {self.values.shape} does not match "
                    f"condition shape {expected}"
                )

    @property
    def n_persons(self) -> int:
        return self.values.shape[0]

    @property
    def n_items(self) -> int:
        return self.values.shape[1]


def allocate_items(
    test_length: int,
    n_dims: int = 3,
    custom: tuple[int, ...] | None = None,
) -> tuple[int, ...]:
    """Items per dimension for a given test length.

    Built-in allocations exist for 20 -> (7, 7, 6) and 40 -> (13, 13, 14)
    over three dimensions; anything else needs an explicit custom split.
    """
    if custom is not None:
        custom = tuple(int(k) for k in custom)
        if len(custom) != n_dims:
            raise ValueError(f"custom allocation must have {n_dims} entries")
        if any(k < 1 for k in custom):
            raise ValueError("custom allocation entries must be positive")
        if sum(custom) != test_length:
            raise ValueError(
                f"custom allocation sums to {sum(custom)}, expected {test_length}"
            )
        return custom
    if n_dims == 3 and test_length in _ALLOCATIONS:
        return _ALLOCATIONS[test_length]
    raise ValueError(
        f"no built-in allocation for test_length={test_length} over "
        f"{n_dims} dimensions; pass custom=(k_1, ..., k_{n_dims})"
    )


def expand_conditions(design: SimulationDesign) -> list[Condition]:
    """Cross factor levels, test length major, correlation minor."""
    out = []
    for tl, rho in itertools.product(design.test_lengths, design.rhos):
        out.append(
            Condition(
                test_length=tl,
                rho=rho,
                n_persons=design.n_persons,
                n_reps=design.n_reps,
                allocation=allocate_items(tl, design.n_dims),
            )
        )
    return out


def equicorrelation_cholesky(rho: float, n_dims: int) -> np.ndarray:
    """Lower Cholesky factor of the D x D equicorrelation matrix."""
    _check_rho(rho, n_dims)
    sigma = np.full((n_dims, n_dims), rho)
    np.fill_diagonal(sigma, 1.0)
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - bound checks first
        raise ValueError(f"equicorrelation matrix with rho={rho} is not positive definite") from exc


def draw_item_parameters(
    condition: Condition,
    design: SimulationDesign,
    rng: np.random.Generator,
) -> TestForm:
    """Draw a simple-structure test form for one replication.

    Slopes come uniform per dimension block. Intercepts start from
    d_1 ~ U(intercept_range) and subtract an independent U(intercept_range)
    decrement per further boundary, which makes rows strictly decreasing by
    construction; the descending sort afterwards is a no-op safeguard.
    """
    if condition.n_dims != design.n_dims:
        raise ValueError(
            f"condition has {condition.n_dims} dims, design has {design.n_dims}"
        )
    k_total = condition.test_length
    c = design.n_categories
    slopes_by_dim = [
        rng.uniform(lo, hi, size=k_d)
        for (lo, hi), k_d in zip(design.slope_ranges, condition.allocation)
    ]
    ilo, ihi = design.intercept_range
    intercepts = np.empty((k_total, c - 1))
    intercepts[:, 0] = rng.uniform(ilo, ihi, size=k_total)
    for k in range(1, c - 1):
        intercepts[:, k] = intercepts[:, k - 1] - rng.uniform(ilo, ihi, size=k_total)
    intercepts = -np.sort(-intercepts, axis=1)

    items = []
    j = 0
    for dim, block in enumerate(slopes_by_dim):
        for a in block:
            slopes = np.zeros(condition.n_dims)
            slopes[dim] = a
            items.append(ItemParams(slopes, intercepts[j], loading_dim=dim))
            j += 1
    return TestForm(items, n_dims=condition.n_dims, n_categories=c)


def draw_abilities(condition: Condition, rng: np.random.Generator) -> AbilityMatrix:
    """Sample N x D equicorrelated standard normal abilities.

    Normals come from the inverse CDF applied to one row-major uniform
    block (the documented deterministic method), then gain correlation
    through the Cholesky factor: values = Z L'.
    """
    n, d = condition.n_persons, condition.n_dims
    u = rng.random((n, d))
    z = ndtri(np.clip(u, 1e-300, 1.0 - 1e-16))
    lower = equicorrelation_cholesky(condition.rho, d)
    values = np.zeros((n, d))
    for col in range(d):
        for e in range(col + 1):
            values[:, col] += lower[col, e] * z[:, e]
    sigma = np.full((d, d), condition.rho)
    np.fill_diagonal(sigma, 1.0)
    return AbilityMatrix(values=values, sigma=sigma)


def simulate_dataset(
    form: TestForm,
    abilities: AbilityMatrix,
    rng: np.random.Generator,
    condition: Condition | None = None,
    replication: int = 0,
    seed: int = 0,
) -> ResponseMatrix:
    """Draw one response matrix from the model.

    Consumes a single N x K uniform block in row-major order (person by
    person, item by item). Each cell equals
    sample_category(category_probs(item_j, theta_n), u[n, j]) exactly.
    """
    if form.n_dims != abilities.n_dims:
        raise ValueError(
            f"form has {form.n_dims} dims, abilities have {abilities.n_dims}"
        )
    n, k = abilities.n_persons, form.n_items
    u = rng.random((n, k))
    values = np.empty((n, k), dtype=np.int64)
    for j, item in enumerate(form.items):
        probs = category_prob_matrix(item, abilities.values)
        cdf = np.cumsum(probs, axis=1)[:, :-1]
        values[:, j] = np.sum(u[:, j][:, None] >= cdf, axis=1)
    return ResponseMatrix(
        values=values,
        n_categories=form.n_categories,
        condition=condition,
        replication=replication,
        seed=seed,
    )
