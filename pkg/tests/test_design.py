"""Design expansion, parameter/ability draws, and response simulation."""

import numpy as np
import pytest

from grmsim import (
    AbilityMatrix,
    Condition,
    ResponseMatrix,
    SimulationDesign,
    allocate_items,
    category_probs,
    derive_stream,
    draw_abilities,
    draw_item_parameters,
    equicorrelation_cholesky,
    expand_conditions,
    sample_category,
    simulate_dataset,
)

from conftest import tiny_condition


class TestCondition:
    def test_allocation_must_sum(self):
        with pytest.raises(ValueError, match="sums to"):
            Condition(20, 0.3, 100, 1, (7, 7, 7))

    def test_rho_positive_definite_bound(self):
        # -1/(D-1) = -0.5 for three dimensions
        with pytest.raises(ValueError, match="positive definite"):
            Condition(20, -0.5, 100, 1, (7, 7, 6))
        with pytest.raises(ValueError, match="positive definite"):
            Condition(20, 1.0, 100, 1, (7, 7, 6))
        Condition(20, -0.49, 100, 1, (7, 7, 6))

    def test_label(self):
        assert Condition(20, 0.3, 100, 1, (7, 7, 6)).label() == "tl20_rho0.3"


class TestSimulationDesign:
    def test_defaults_match_reference_study(self):
        d = SimulationDesign()
        assert d.test_lengths == (20, 40)
        assert d.rhos == (0.3, 0.7)
        assert d.n_persons == 2000
        assert d.n_reps == 100
        assert d.master_seed == 1234
        assert d.slope_ranges == ((0.44, 0.75), (0.58, 0.98), (0.75, 1.33))
        assert d.intercept_range == (0.67, 1.34)
        assert d.n_categories == 4

    def test_rejects_nonpositive_range_bounds(self):
        with pytest.raises(ValueError, match="lower bound"):
            SimulationDesign(slope_ranges=((0.0, 0.5), (0.5, 1.0), (0.5, 1.0)))
        with pytest.raises(ValueError, match="lower bound"):
            SimulationDesign(intercept_range=(-0.1, 1.0))

    def test_rejects_empty_factors(self):
        with pytest.raises(ValueError, match="test_lengths"):
            SimulationDesign(test_lengths=())
        with pytest.raises(ValueError, match="rhos"):
            SimulationDesign(rhos=())


class TestAllocateItems:
    def test_builtin_allocations(self):
        assert allocate_items(20) == (7, 7, 6)
        assert allocate_items(40) == (13, 13, 14)

    def test_custom_passthrough(self):
        assert allocate_items(30, custom=(10, 10, 10)) == (10, 10, 10)

    def test_unknown_length_needs_custom(self):
        with pytest.raises(ValueError, match="custom"):
            allocate_items(30)

    def test_custom_validated(self):
        with pytest.raises(ValueError, match="sums to"):
            allocate_items(30, custom=(10, 10, 11))
        with pytest.raises(ValueError, match="entries"):
            allocate_items(30, custom=(10, 10))


class TestExpandConditions:
    def test_order_is_test_length_major(self):
        conds = expand_conditions(SimulationDesign())
        got = [(c.test_length, c.rho) for c in conds]
        assert got == [(20, 0.3), (20, 0.7), (40, 0.3), (40, 0.7)]

    def test_allocations_attached(self):
        conds = expand_conditions(SimulationDesign())
        assert conds[0].allocation == (7, 7, 6)
        assert conds[2].allocation == (13, 13, 14)


class TestEquicorrelationCholesky:
    def test_reconstructs_sigma(self):
        for rho in (-0.4, 0.0, 0.3, 0.7, 0.95):
            lower = equicorrelation_cholesky(rho, 3)
            sigma = np.full((3, 3), rho)
            np.fill_diagonal(sigma, 1.0)
            np.testing.assert_allclose(lower @ lower.T, sigma, atol=1e-12)
            assert np.allclose(lower, np.tril(lower))

    def test_out_of_bounds_rho(self):
        with pytest.raises(ValueError, match="positive definite"):
            equicorrelation_cholesky(1.0, 3)
        with pytest.raises(ValueError, match="positive definite"):
            equicorrelation_cholesky(-0.6, 3)


class TestDrawItemParameters:
    def test_ranges_and_structure(self):
        design = SimulationDesign()
        cond = expand_conditions(design)[0]
        rng = derive_stream(design.master_seed, 0, 0)
        form = draw_item_parameters(cond, design, rng)
        assert form.n_items == 20
        np.testing.assert_array_equal(
            form.loading_dims, np.repeat([0, 1, 2], [7, 7, 6])
        )
        slopes = form.slope_matrix
        for dim, (lo, hi) in enumerate(design.slope_ranges):
            block = slopes[form.loading_dims == dim, dim]
            assert np.all((block > lo) & (block < hi))

    def test_bulk_range_check(self):
        # many replications: every drawn value respects its range and the
        # third intercept lands in [d1_min - 2*dec_max, d1_max - 2*dec_min]
        design = SimulationDesign()
        cond = expand_conditions(design)[0]
        d1_all, d3_all = [], []
        for rep in range(300):
            rng = derive_stream(7, 0, rep)
            form = draw_item_parameters(cond, design, rng)
            inter = form.intercept_matrix
            assert np.all(np.diff(inter, axis=1) < 0)
            d1_all.append(inter[:, 0])
            d3_all.append(inter[:, 2])
        d1 = np.concatenate(d1_all)
        d3 = np.concatenate(d3_all)
        assert d1.min() > 0.67 and d1.max() < 1.34
        assert d3.min() > -2.0100000000000002 and d3.max() < 0.0

    def test_decrement_spacing(self):
        design = SimulationDesign()
        cond = expand_conditions(design)[0]
        rng = derive_stream(11, 0, 0)
        inter = draw_item_parameters(cond, design, rng).intercept_matrix
        gaps = -np.diff(inter, axis=1)
        assert np.all((gaps > 0.67) & (gaps < 1.34))

    def test_dimension_mismatch_rejected(self):
        design = SimulationDesign()
        cond = tiny_condition(allocation=(2,))
        with pytest.raises(ValueError, match="dims"):
            draw_item_parameters(cond, design, np.random.default_rng(0))


class TestDrawAbilities:
    def test_shape_and_sigma(self):
        cond = Condition(20, 0.7, 500, 1, (7, 7, 6))
        ab = draw_abilities(cond, np.random.default_rng(3))
        assert ab.values.shape == (500, 3)
        assert ab.sigma[0, 1] == 0.7

    def test_moments_at_scale(self):
        # 3 sigma bounds: mean ~ 3/sqrt(N), correlation ~ 3(1-rho^2)/sqrt(N)
        n = 20000
        for rho in (0.3, 0.7):
            cond = Condition(20, rho, n, 1, (7, 7, 6))
            ab = draw_abilities(cond, np.random.default_rng(int(rho * 10)))
            assert np.all(np.abs(ab.values.mean(axis=0)) < 3 / np.sqrt(n))
            corr = np.corrcoef(ab.values.T)
            bound = 3 * (1 - rho**2) / np.sqrt(n)
            for i in range(3):
                for j in range(i + 1, 3):
                    assert abs(corr[i, j] - rho) < bound
            assert np.all(np.abs(ab.values.std(axis=0) - 1.0) < 3 / np.sqrt(2 * n))

    def test_deterministic_given_stream(self):
        cond = Condition(20, 0.3, 50, 1, (7, 7, 6))
        a = draw_abilities(cond, derive_stream(1234, 0, 0))
        b = draw_abilities(cond, derive_stream(1234, 0, 0))
        np.testing.assert_array_equal(a.values, b.values)

    def test_validation(self):
        with pytest.raises(ValueError, match="unit diagonal"):
            AbilityMatrix(np.zeros((4, 2)), np.array([[2.0, 0.0], [0.0, 1.0]]))
        with pytest.raises(ValueError, match="equicorrelated"):
            AbilityMatrix(
                np.zeros((4, 3)),
                np.array([[1.0, 0.2, 0.3], [0.2, 1.0, 0.2], [0.3, 0.2, 1.0]]),
            )


class TestSimulateDataset:
    def _setup(self, seed=5, n=400):
        design = SimulationDesign()
        cond = Condition(20, 0.3, n, 1, (7, 7, 6))
        rng = derive_stream(seed, 0, 0)
        form = draw_item_parameters(cond, design, rng)
        abilities = draw_abilities(cond, rng)
        return form, abilities, rng

    def test_shape_and_range(self):
        form, abilities, rng = self._setup()
        resp = simulate_dataset(form, abilities, rng)
        assert resp.values.shape == (400, 20)
        assert resp.values.min() >= 0 and resp.values.max() <= 3
        assert resp.n_categories == 4

    def test_matches_scalar_sampling_path(self):
        # vectorized cells equal sample_category(category_probs(...), u)
        form, abilities, rng = self._setup(n=60)
        u_probe = derive_stream(5, 0, 0)
        # consume the same stream state: redraw params and abilities
        _ = draw_item_parameters(
            Condition(20, 0.3, 60, 1, (7, 7, 6)), SimulationDesign(), u_probe
        )
        _ = draw_abilities(Condition(20, 0.3, 60, 1, (7, 7, 6)), u_probe)
        u = u_probe.random((60, 20))
        resp = simulate_dataset(form, abilities, rng)
        for n in range(0, 60, 7):
            for j in range(0, 20, 3):
                probs = category_probs(form.items[j], abilities.values[n])
                assert resp.values[n, j] == sample_category(probs, u[n, j])

    def test_bitwise_reproducible(self):
        form, abilities, _ = self._setup()
        a = simulate_dataset(form, abilities, derive_stream(9, 1, 2))
        b = simulate_dataset(form, abilities, derive_stream(9, 1, 2))
        np.testing.assert_array_equal(a.values, b.values)

    def test_distinct_streams_differ(self):
        form, abilities, _ = self._setup()
        a = simulate_dataset(form, abilities, derive_stream(9, 1, 2))
        b = simulate_dataset(form, abilities, derive_stream(9, 1, 3))
        assert np.any(a.values != b.values)

    def test_category_frequencies_track_probabilities(self):
        # one item, many persons at theta = 0
        form, _, _ = self._setup()
        n = 40000
        abilities = AbilityMatrix(np.zeros((n, 3)), np.eye(3))
        resp = simulate_dataset(form, abilities, np.random.default_rng(0))
        probs = category_probs(form.items[0], np.zeros(3))
        freq = np.bincount(resp.values[:, 0], minlength=4) / n
        bound = 5 * np.sqrt(probs * (1 - probs) / n)
        assert np.all(np.abs(freq - probs) < bound)

    def test_dimension_mismatch_rejected(self):
        form, abilities, rng = self._setup()
        bad = AbilityMatrix(np.zeros((10, 2)), np.eye(2))
        with pytest.raises(ValueError, match="dims"):
            simulate_dataset(form, bad, rng)


class TestResponseMatrix:
    def test_range_validation(self):
        with pytest.raises(ValueError, match="0..3"):
            ResponseMatrix(np.array([[0, 4]]), n_categories=4)

    def test_requires_integers(self):
        with pytest.raises(ValueError, match="integers"):
            ResponseMatrix(np.array([[0.5, 1.0]]), n_categories=4)

    def test_condition_shape_check(self):
        cond = tiny_condition(n_persons=3, allocation=(2,))
        with pytest.raises(ValueError, match="shape"):
            ResponseMatrix(np.zeros((2, 2), dtype=int), 4, condition=cond)
