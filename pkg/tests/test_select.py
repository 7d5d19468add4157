import warnings

import numpy as np
import pytest

from conftest import make_data
from oracles import ols_case_deletion_residuals
from robust_tps import (Dataset, LossSpec, NoConvergenceWarning, fit, loo_residuals, predict,
                        rcv, select_lambda)
from robust_tps.errors import AllFailed, LeverageOne
from robust_tps.select import deflate, default_grid
from robust_tps.simulate import test_function


class TestDeflate:
    def test_values(self):
        assert deflate([1.0], [0.0])[0] == 1.0
        assert deflate([1.0], [0.5])[0] == 2.0

    def test_leverage_one(self):
        with pytest.raises(LeverageOne):
            deflate([1.0, 1.0], [0.2, 1.0 - 1e-10])


class TestLooResiduals:
    def test_case_deletion_in_plane_limit(self):
        data = make_data(n=20, seed=6)[0]
        model = fit(data, 2, 1e8)
        exact = ols_case_deletion_residuals(data.points, data.responses)
        for method in ("newton", "hat"):
            np.testing.assert_allclose(loo_residuals(model, method), exact, atol=1e-6)

    def test_case_deletion_for_smoothing_spline(self):
        # the square-loss deflation is exact for any lambda
        data = make_data(n=25, seed=2)[0]
        lam = 1e-3
        model = fit(data, 2, lam)
        exact = []
        for i in range(data.n):
            keep = np.arange(data.n) != i
            sub = fit(Dataset(data.points[keep], data.responses[keep]), 2, lam * data.n / (data.n - 1))
            exact.append(data.responses[i] - predict(sub, data.points[i]))
        np.testing.assert_allclose(loo_residuals(model), exact, atol=1e-8)

    def test_methods_agree_for_square_loss(self, small_data):
        model = fit(small_data, 2, 1e-3)
        np.testing.assert_allclose(loo_residuals(model, "newton"), loo_residuals(model, "hat"),
                                   rtol=1e-10)

    def test_unknown_method(self, small_data):
        with pytest.raises(ValueError):
            loo_residuals(fit(small_data, 2, 1e-3), "exact")


class TestRcv:
    def test_exact_plane_gives_zero(self):
        x = np.random.default_rng(0).uniform(size=(20, 2))
        data = Dataset(x, 3 - x[:, 0] + 0.5 * x[:, 1])
        assert rcv(data, 2, 1e-2) <= 1e-16

    def test_response_scaling(self, small_data):
        c = 3.7
        scaled = Dataset(small_data.points, c * small_data.responses)
        assert rcv(scaled, 2, 1e-3) == pytest.approx(c * c * rcv(small_data, 2, 1e-3), rel=1e-9)


class TestSelectLambda:
    def test_single_point_grid(self, small_data):
        res = select_lambda(small_data, 2, grid=[0.01])
        assert res.chosen_lambda == 0.01 and res.chosen_index == 0

    def test_criteria_match_rcv(self, small_data):
        grid = np.logspace(-8, 0, 9)
        res = select_lambda(small_data, 2, LossSpec("huber"), grid=grid)
        assert np.all(np.isfinite(res.criteria))
        for lam, crit in zip(grid, res.criteria):
            assert crit == pytest.approx(rcv(small_data, 2, lam, LossSpec("huber")), rel=1e-12)
        assert res.criteria[res.chosen_index] == res.criteria.min()
        assert res.model.lam == res.chosen_lambda

    def test_bad_grid(self, small_data):
        for grid in ([], [1.0, 0.5], [-1.0]):
            with pytest.raises(ValueError):
                select_lambda(small_data, 2, grid=grid)

    def test_all_failed(self):
        data = make_data(n=10, seed=0)[0]
        with pytest.raises(AllFailed):
            select_lambda(data, 2, grid=[1e-14])

    def test_default_grid(self, small_data):
        g = default_grid(small_data, 2)
        assert g.size == 30 and np.all(np.diff(np.log(g)) > 0)
        assert g[-1] / g[0] == pytest.approx(1e10)

    def test_lad_with_gross_outliers_near_oracle(self):
        rng = np.random.default_rng(2024)
        x = rng.uniform(size=(100, 2))
        f = test_function("f1", x)
        y = f + 0.1 * rng.standard_normal(100)
        y[rng.choice(100, 15, replace=False)] += 10.0
        data = Dataset(x, y)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NoConvergenceWarning)
            res = select_lambda(data, 2, LossSpec("lad"))
            mses = []
            for lam in res.grid:
                m = fit(data, 2, lam, LossSpec("lad"))
                mses.append(np.mean((predict(m, x) - f) ** 2))
        chosen = mses[res.chosen_index]
        assert chosen <= 2 * min(mses)
