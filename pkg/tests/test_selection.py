import numpy as np
import pytest

from gscpd.graph import GraphSignalStream, build_laplacian, eigendecompose, gft
from gscpd.segmentation import build_prefix, dp_segment
from gscpd.selection import (
    CalibrationError,
    ModelGrid,
    VarSelConfig,
    default_dmax,
    default_lambda_grid,
    fit_slope,
    lasso_support,
    lse_cost_matrices,
    lse_segment_cost,
    select_model,
    slope_heuristic,
    sweep,
    variable_selection_detector,
)
from gscpd.segmentation import segment_means
from gscpd.spectral import Psd
from gscpd.synthetic import gen_er
from oracles import brute_force, direct_lse_cost


def spectral(values):
    return GraphSignalStream(np.asarray(values, dtype=float), "spectral")


def synthetic_grid(T, dims, dmax, coefs, alpha=10.0, noise=0.0, seed=0):
    """Grid whose costs are an exact linear function of the penalty features."""
    rng = np.random.default_rng(seed)
    k = len(dims)
    grid = ModelGrid(
        T=T,
        lambdas=np.linspace(1.0, 0.1, k),
        dims=np.asarray(dims),
        costs=np.zeros((k, dmax)),
        supports=np.zeros((k, 1), dtype=bool),
        support_id=np.arange(k),
        segmentations=[[None] * dmax for _ in range(k)],
    )
    f1, f2, f3 = grid.features()
    a, b, c = coefs
    grid.costs = alpha - (a * f1 + b * f2 + c * f3) + noise * rng.standard_normal((k, dmax))
    return grid


class TestLassoSupport:
    y = spectral(np.random.default_rng(0).normal(size=(40, 12)) * np.linspace(0.5, 3, 12))

    def test_zero_lambda_keeps_everything(self):
        mask, dm = lasso_support(self.y, 0.0)
        assert mask.all() and dm == 12

    def test_large_lambda_drops_everything(self):
        lam = 2 * np.max(np.abs(self.y.values)) / self.y.T * 1.001
        assert lasso_support(self.y, lam)[1] == 0

    def test_entrywise_threshold(self):
        lam = 0.08
        mask, dm = lasso_support(self.y, lam)
        colmax = np.max(np.abs(self.y.values), axis=0)
        level = lam * self.y.T / 2
        assert np.all(colmax[mask] > level) and np.all(colmax[~mask] <= level)
        assert 0 < dm < 12

    def test_nested_along_grid(self):
        masks = [lasso_support(self.y, lam)[0] for lam in default_lambda_grid(self.y)]
        for small, large in zip(masks, masks[1:]):
            assert np.all(large <= small)


class TestLseCost:
    def test_constant_segment_full_support(self):
        pre = build_prefix(np.full((6, 3), 2.0))
        assert lse_segment_cost(1, 5, np.ones(3, bool), pre) == pytest.approx(0.0, abs=1e-12)

    def test_empty_support(self):
        y = np.random.default_rng(1).normal(size=(6, 3))
        assert lse_segment_cost(1, 5, np.zeros(3, bool), build_prefix(y)) == pytest.approx(np.sum(y[1:5] ** 2) / 6)

    def test_matches_direct_computation(self):
        rng = np.random.default_rng(2)
        y = rng.normal(size=(15, 5)) + rng.normal(size=5) * 3
        supports = rng.random((4, 5)) < 0.5
        mats = lse_cost_matrices(y, supports)
        pre = build_prefix(y)
        for s, mat in zip(supports, mats):
            for a in range(15):
                for b in range(a + 1, 16):
                    ref = direct_lse_cost(y, a, b, s)
                    assert abs(mat[a, b] - ref) <= 1e-9
                    assert abs(lse_segment_cost(a, b, s, pre) - ref) <= 1e-9


class TestSweep:
    y = spectral(np.random.default_rng(3).normal(size=(30, 8)) + np.repeat([[0.0] * 8, [2.0] * 4 + [0.0] * 4], 15, axis=0))

    def test_dimensions(self):
        lambdas = default_lambda_grid(self.y, 7)
        grid = sweep(self.y, lambdas, 5)
        assert grid.costs.shape == (7, 5)
        assert len(grid.segmentations) == 7 and all(len(r) == 5 for r in grid.segmentations)
        assert all(f.shape == (7, 5) for f in grid.features())

    def test_zero_lambda_is_plain_least_squares(self):
        grid = sweep(self.y, [0.0], 3)
        for d in (1, 2, 3):
            best, tau = brute_force(lambda a, b: direct_lse_cost(self.y.values, a, b, np.ones(8, bool)), 30, d)
            assert grid.costs[0, d - 1] == pytest.approx(best, abs=1e-9)
            assert grid.segmentations[0][d - 1].tau == tau

    def test_nested_supports_cost_more(self):
        grid = sweep(self.y, default_lambda_grid(self.y, 12), 6)
        order = np.argsort(grid.lambdas)
        for j, k in zip(order, order[1:]):
            assert np.all(grid.costs[k] >= grid.costs[j] - 1e-12)

    def test_deduplicates_supports(self):
        grid = sweep(self.y, [0.0, 0.0, 1e-9, 10.0], 2)
        assert len(grid.supports) == 2
        assert grid.support_id.tolist() == [0, 0, 0, 1]

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            sweep(self.y, [], 2)


class TestSlopeHeuristic:
    T, dmax = 300, 60
    dims = np.arange(0, 100, 5)

    def test_recovers_constants(self):
        coefs = (1.5, 4.0, 0.8)
        fit = slope_heuristic(synthetic_grid(self.T, self.dims, self.dmax, coefs, noise=1e-6), cutoff="strict")
        for got, c in zip(fit.constants, coefs):
            assert got == pytest.approx(2 * c, rel=0.01)
        assert fit.cutoff == pytest.approx(0.6 * 300 / np.log(300))

    def test_constant_costs_give_zero(self):
        fit = slope_heuristic(synthetic_grid(self.T, self.dims, self.dmax, (0, 0, 0)))
        assert fit.constants == (0.0, 0.0, 0.0)

    def test_negative_slopes_clamped(self):
        fit = slope_heuristic(synthetic_grid(self.T, self.dims, self.dmax, (-1.0, 2.0, 0.5), noise=1e-6))
        assert fit.constants[0] == 0.0 and fit.constants[1] > 0

    def test_duplicates_do_not_change_fit(self):
        grid = synthetic_grid(self.T, self.dims, self.dmax, (1.0, 2.0, 0.5), noise=1e-3, seed=4)
        doubled = synthetic_grid(self.T, np.concatenate([self.dims, self.dims]), self.dmax, (0, 0, 0))
        doubled.costs = np.vstack([grid.costs, grid.costs])
        a, b = slope_heuristic(grid), slope_heuristic(doubled)
        assert a.constants == b.constants and a.num_models == b.num_models

    def test_too_few_models(self):
        with pytest.raises(CalibrationError, match="increase dmax"):
            fit_slope(np.arange(3.0), (np.arange(3.0),), np.array([50, 51, 52]), 300)

    def test_auto_cutoff_falls_back_below_threshold(self):
        grid = synthetic_grid(300, self.dims, 15, (1.0, 2.0, 0.5), noise=1e-6)
        fit = slope_heuristic(grid)
        assert fit.cutoff == pytest.approx(0.6 * 15)
        with pytest.raises(CalibrationError):
            slope_heuristic(grid, cutoff="strict")

    @pytest.mark.parametrize("method", ["lad", "ols"])
    def test_alternative_regressions(self, method):
        coefs = (1.5, 4.0, 0.8)
        fit = slope_heuristic(synthetic_grid(self.T, self.dims, self.dmax, coefs, noise=1e-6), method=method, cutoff="strict")
        assert np.allclose(fit.constants, [2 * c for c in coefs], rtol=0.01)

    def test_unknown_regression(self):
        with pytest.raises(ValueError):
            slope_heuristic(synthetic_grid(self.T, self.dims, self.dmax, (1, 1, 1), noise=1e-6), method="ransac")


class TestSelectModel:
    y = TestSweep.y

    def test_no_penalty_takes_smallest_d_at_minimum(self):
        grid = sweep(self.y, [0.0], 4)
        grid.costs[0] = [3.0, 1.0, 1.0, 1.0]
        sel = select_model(grid, 0, 0, 0)
        assert sel.d == 2

    def test_no_penalty_matches_global_minimum(self):
        grid = sweep(self.y, default_lambda_grid(self.y, 5), 6)
        sel = select_model(grid, 0, 0, 0)
        assert sel.criterion == np.min(grid.costs)

    def test_huge_penalty_gives_one_segment(self):
        grid = sweep(self.y, default_lambda_grid(self.y, 5), 6)
        assert select_model(grid, 0, 1e9, 1e9).d == 1

    def test_ties_prefer_smaller_support_then_lambda(self):
        grid = sweep(self.y, [0.0, 10.0], 2)
        grid.costs[:] = 1.0
        sel = select_model(grid, 0, 0, 0)
        assert sel.dim == 0 and sel.lam == 10.0

    def test_invariant_to_grid_order(self):
        grid = sweep(self.y, default_lambda_grid(self.y, 9), 5)
        perm = np.random.default_rng(0).permutation(9)
        shuffled = ModelGrid(
            grid.T, grid.lambdas[perm], grid.dims[perm], grid.costs[perm], grid.supports,
            grid.support_id[perm], [grid.segmentations[j] for j in perm],
        )
        a, b = select_model(grid, 0.5, 1.0, 0.2), select_model(shuffled, 0.5, 1.0, 0.2)
        assert (a.lam, a.d, a.segmentation) == (b.lam, b.d, b.segmentation)

    def test_empty_grid(self):
        grid = sweep(self.y, [0.0], 2)
        grid.costs = np.zeros((0, 2))
        with pytest.raises(ValueError):
            select_model(grid, 0, 0, 0)


class TestDetector:
    graph = gen_er(12, 0.4, 0)

    def step_stream(self, noise=0.0, seed=0):
        y = np.zeros((60, 12))
        y[30:, :4] = 3.0
        return GraphSignalStream(y + noise * np.random.default_rng(seed).normal(size=y.shape))

    def test_noiseless_single_shift(self):
        res = variable_selection_detector(self.step_stream(), self.graph, VarSelConfig(psd_mode="exact", psd=np.ones(12)))
        assert res.change_points == [30, 60]

    def test_full_support_grid(self):
        y = self.step_stream(0.3)
        res = variable_selection_detector(y, self.graph, VarSelConfig(lambdas=[0.0], w=20))
        assert res.diagnostics["support_size"] == 12
        assert res.change_points == [30, 60]

    def test_means_are_soft_thresholded_raw_spectral_means(self):
        y = self.step_stream(0.5, seed=1)
        res = variable_selection_detector(y, self.graph, VarSelConfig(w=20))
        basis = eigendecompose(build_laplacian(self.graph))
        psd = Psd(np.array(res.diagnostics["psd"]))
        expected = segment_means(gft(basis, y), res.segmentation, res.lam, psd)
        assert np.array_equal(res.means, expected)
        assert res.means.shape == (res.selected_d, 12)

    def test_deterministic(self):
        y = self.step_stream(1.0, seed=2)
        cfg = VarSelConfig(psd_mode="filterbank", w=20, num_filters=20, seed=5)
        a = variable_selection_detector(y, self.graph, cfg)
        b = variable_selection_detector(y, self.graph, cfg)
        assert a.change_points == b.change_points and np.array_equal(a.means, b.means)
        assert a.diagnostics == b.diagnostics

    def test_exact_mode_needs_psd(self):
        with pytest.raises(ValueError, match="true PSD"):
            variable_selection_detector(self.step_stream(), self.graph, VarSelConfig(psd_mode="exact"))

    def test_unknown_psd_mode(self):
        with pytest.raises(ValueError):
            variable_selection_detector(self.step_stream(), self.graph, VarSelConfig(psd_mode="oracle"))

    def test_default_dmax(self):
        assert default_dmax(300) == int(np.ceil(300 / np.log(300)))
        assert default_dmax(1) == 1 and default_dmax(2) == 2
