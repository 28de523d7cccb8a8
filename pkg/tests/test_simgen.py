import numpy as np
import pytest

from mbsts.simgen import (B_7, SIGMA_EPS_2, SIGMA_EPS_3, _apply_correlation,
                          _simulate_states, generate_custom, generate_model,
                          shuffle_second_half)
from mbsts.statespace import (ComponentConfig, ComponentCovariances,
                              ModelSpec, state_layout)


class TestGenerateModel:
    @pytest.mark.parametrize("model_id", [1, 2, 3, 4, 5, 6, 7])
    def test_same_seed_is_identical(self, model_id):
        a = generate_model(model_id, 40, seed=3)
        b = generate_model(model_id, 40, seed=3)
        assert np.array_equal(a.Y, b.Y)
        assert all(np.array_equal(x, y) for x, y in zip(a.X_blocks, b.X_blocks))

    @pytest.mark.parametrize("model_id", [1, 2, 3, 4, 5, 6, 7])
    def test_truth_gamma_matches_zero_pattern(self, model_id):
        ds = generate_model(model_id, 30, seed=1)
        for b, g in zip(ds.B, ds.gamma_true):
            assert np.array_equal(g, (np.asarray(b) != 0).astype(int))

    def test_model_1_zero_coefficients(self):
        ds = generate_model(1, 30, seed=2)
        assert ds.B[0][3] == 0.0
        assert ds.B[1][2] == 0.0

    def test_model_5_covariance(self):
        ds = generate_model(5, 30, seed=2)
        assert np.array_equal(ds.sigma_eps, SIGMA_EPS_3)
        assert ds.m == 3

    def test_unknown_id(self):
        with pytest.raises(ValueError):
            generate_model(8, 30, seed=0)

    def test_n_too_small(self):
        with pytest.raises(ValueError):
            generate_model(1, 1, seed=0)

    def test_predictor_distributions(self):
        ds = generate_model(7, 20000, seed=5)
        x = ds.X_blocks[0]
        assert x[:, 0].mean() == pytest.approx(5.0, abs=0.2)
        assert x[:, 2].mean() == pytest.approx(0.5, abs=0.02)   # Bernoulli
        assert x[:, 5].mean() == pytest.approx(15.0, abs=0.2)   # Poisson
        assert x[:, 3].std() == pytest.approx(5.0, rel=0.05)


class TestModelSeven:
    def test_decoy_columns_have_zero_coefficients(self):
        ds = generate_model(7, 50, seed=4)
        assert ds.shuffled_columns == {0: [1, 4], 1: [4, 7]}
        assert ds.B[0][[1, 4]].tolist() == [0.0, 0.0]
        assert ds.B[1][[4, 7]].tolist() == [0.0, 0.0]
        # the non-decoy coefficients keep the benchmark values
        assert np.array_equal(ds.B[0][[0, 2, 5, 7]], B_7[0][[0, 2, 5, 7]])
        assert np.array_equal(ds.B[1][[0, 1, 3, 6]], B_7[1][[0, 1, 3, 6]])

    def test_both_series_share_the_pool(self):
        ds = generate_model(7, 50, seed=4)
        assert np.array_equal(ds.X_blocks[0], ds.X_blocks[1])
        assert ds.X_blocks[0].shape == (50, 8)


class TestShuffleSecondHalf:
    def test_first_half_untouched(self, rng):
        col = rng.normal(size=21)
        out = shuffle_second_half(col, np.random.default_rng(0))
        half = col.size // 2
        assert np.array_equal(out[:half], col[:half])
        assert sorted(out[half:]) == sorted(col[half:])

    def test_actually_permutes(self):
        col = np.arange(100, dtype=float)
        out = shuffle_second_half(col, np.random.default_rng(1))
        assert not np.array_equal(out, col)


class TestGenerateCustom:
    def test_pure_regression_residual_covariance(self):
        spec = ModelSpec(per_series=[ComponentConfig(has_trend=False)] * 2,
                         predictor_counts=(2, 2))
        B = [np.array([1.0, -2.0]), np.array([0.5, 0.0])]
        sigma = np.array([[1.0, 0.3], [0.3, 0.5]])
        theta = ComponentCovariances.from_dict(2, {})
        n = 10000
        ds = generate_custom(spec, B, sigma, theta, n, seed=8)
        resid = ds.Y - np.column_stack([x @ b for x, b in zip(ds.X_blocks, B)])
        emp = np.cov(resid, rowvar=False)
        se = 3 * np.abs(sigma) / np.sqrt(n) + 3 / np.sqrt(n)
        assert np.all(np.abs(emp - sigma) < se)

    def test_correlation_override(self):
        spec = ModelSpec(per_series=[ComponentConfig(has_trend=False)] * 2,
                         predictor_counts=(0, 0))
        theta = ComponentCovariances.from_dict(2, {})
        n = 10000
        ds = generate_custom(spec, [np.zeros(0), np.zeros(0)], SIGMA_EPS_2,
                             theta, n, seed=9, correlation_override=0.8)
        corr = np.corrcoef(ds.Y[:, 0], ds.Y[:, 1])[0, 1]
        assert abs(corr - 0.8) < 3 * (1 - 0.8 ** 2) / np.sqrt(n)

    def test_zero_correlation_override(self):
        spec = ModelSpec(per_series=[ComponentConfig(has_trend=False)] * 2,
                         predictor_counts=(0, 0))
        theta = ComponentCovariances.from_dict(2, {})
        n = 10000
        ds = generate_custom(spec, [np.zeros(0), np.zeros(0)], SIGMA_EPS_2,
                             theta, n, seed=10, correlation_override=0.0)
        corr = np.corrcoef(ds.Y[:, 0], ds.Y[:, 1])[0, 1]
        assert abs(corr) < 3 / np.sqrt(n)

    def test_override_must_keep_spd(self):
        with pytest.raises(ValueError):
            _apply_correlation(SIGMA_EPS_2, 1.2)

    def test_supplied_predictors_are_kept(self):
        spec = ModelSpec(per_series=(ComponentConfig(has_trend=False),),
                         predictor_counts=(1,))
        theta = ComponentCovariances.from_dict(1, {})
        X = [np.arange(12, dtype=float).reshape(12, 1)]
        ds = generate_custom(spec, [np.array([2.0])], np.eye(1), theta, 12,
                             seed=0, X_blocks=X)
        assert np.array_equal(ds.X_blocks[0], X[0])


class TestStateSimulation:
    def test_seasonal_window_mean_is_small(self):
        ds_spec = ModelSpec(per_series=(ComponentConfig(
            has_trend=False, seasonal_period=4),), predictor_counts=(0,))
        theta = ComponentCovariances.from_dict(1, {"seasonal": {0: 0.01 ** 2}})
        rng = np.random.default_rng(12)
        alpha = _simulate_states(ds_spec, theta, 400, rng)
        idx = state_layout(ds_spec)[0]["seasonal"][0]
        seasonal = alpha[:, idx]
        window_means = seasonal[:400 - 400 % 4].reshape(-1, 4).mean(axis=1)
        # after the initial transient the window means shrink to noise scale
        assert np.abs(window_means[5:]).max() < 10 * 0.01 + np.abs(window_means[0])
