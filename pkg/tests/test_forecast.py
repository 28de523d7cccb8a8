import numpy as np
import pytest

from mbsts import TrainConfig, elicit_priors, train
from mbsts.forecast import (ForecastResult, one_step_error, predict,
                            summarize)
from mbsts.gibbs import PosteriorDraws
from mbsts.statespace import ComponentConfig, ModelSpec


def regression_only_draws(beta_rows, sigma, counts=(1,)):
    """Hand-built draw store with no state component (d = 0)."""
    beta_rows = np.atleast_2d(np.asarray(beta_rows, dtype=float))
    r = beta_rows.shape[0]
    m = np.atleast_2d(sigma).shape[0]
    spec = ModelSpec(per_series=[ComponentConfig(has_trend=False)] * m,
                     predictor_counts=counts)
    return PosteriorDraws(
        alpha=np.zeros((r, 4, 0)),
        theta={u: np.full((r, m), np.nan)
               for u in ("level", "slope", "seasonal", "cycle")},
        gamma=(beta_rows != 0).astype(int),
        beta=beta_rows,
        sigma_eps=np.repeat(np.atleast_2d(sigma)[None, :, :], r, axis=0),
        flip_counts=np.zeros(r, dtype=int),
        chain_id=np.zeros(r, dtype=int),
        spec=spec,
        config=TrainConfig(total_draws=r + 1, burn_in=1),
    )


def trained_draws(seed=0, n=50):
    rng = np.random.default_rng(seed)
    spec = ModelSpec(per_series=(ComponentConfig(has_trend=True),),
                     predictor_counts=(1,), initial_state_variance=1.0)
    X = [rng.normal(size=(n, 1))]
    Y = (np.cumsum(rng.normal(0, 0.2, n)) + 1.5 * X[0][:, 0]
         + rng.normal(0, 0.4, n)).reshape(n, 1)
    priors = elicit_priors([1.0], (1,), 0.8, v0=3.0,
                           Sigma_y=np.atleast_2d(np.var(np.diff(Y, axis=0))))
    return train(Y, X, spec, priors, TrainConfig(60, 20, seed=seed))


class TestPredict:
    def test_horizon_one_moments_regression_only(self):
        """With a single fixed parameter draw the horizon-1 predictive is
        exactly Gaussian; sample moments must match within 3 SE."""
        sigma = np.array([[0.49]])
        reps = 4000
        draws = regression_only_draws(np.full((reps, 1), 2.0), sigma)
        rng = np.random.default_rng(1)
        result = predict(draws, [np.array([[3.0]])], horizon=1, rng=rng)
        samples = result.samples[:, 0, 0]
        mean, sd = 6.0, 0.7
        assert abs(samples.mean() - mean) < 3 * sd / np.sqrt(reps)
        assert abs(samples.std() - sd) < 3 * sd / np.sqrt(2 * reps)

    def test_independent_series_factorize(self):
        sigma = np.diag([0.25, 1.0])
        reps = 4000
        beta = np.column_stack([np.full(reps, 1.0), np.full(reps, -1.0)])
        draws = regression_only_draws(beta, sigma, counts=(1, 1))
        result = predict(draws, [np.ones((1, 1)), np.ones((1, 1))],
                         horizon=1, rng=np.random.default_rng(2))
        s = result.samples[:, 0, :]
        corr = np.corrcoef(s[:, 0], s[:, 1])[0, 1]
        assert abs(corr) < 3 / np.sqrt(reps)

    def test_state_model_paths(self):
        draws = trained_draws()
        X_future = [np.array([[0.5], [0.2], [0.1]])]
        result = predict(draws, X_future, horizon=3,
                         rng=np.random.default_rng(3))
        assert result.samples.shape == (draws.num_draws, 3, 1)
        assert np.isfinite(result.samples).all()

    def test_deterministic_given_rng(self):
        draws = trained_draws()
        X_future = [np.array([[0.5]])]
        a = predict(draws, X_future, 1, np.random.default_rng(4)).samples
        b = predict(draws, X_future, 1, np.random.default_rng(4)).samples
        assert np.array_equal(a, b)

    def test_horizon_zero(self):
        draws = trained_draws()
        result = predict(draws, [np.zeros((0, 1))], 0, np.random.default_rng(0))
        assert result.samples.shape == (draws.num_draws, 0, 1)

    def test_insufficient_future_rows(self):
        draws = trained_draws()
        with pytest.raises(ValueError, match="future rows"):
            predict(draws, [np.array([[0.5]])], 2, np.random.default_rng(0))


class TestSummarize:
    def test_band_levels(self):
        samples = np.linspace(0, 1, 101).reshape(101, 1, 1)
        result = summarize(ForecastResult(samples=samples), [0.4, 1.0])
        band = result.quantiles[0.4]
        assert band["lower"][0, 0] == pytest.approx(0.3)
        assert band["upper"][0, 0] == pytest.approx(0.7)
        env = result.quantiles[1.0]
        assert env["lower"][0, 0] == 0.0 and env["upper"][0, 0] == 1.0

    def test_bad_level(self):
        samples = np.zeros((10, 1, 1))
        with pytest.raises(ValueError):
            summarize(ForecastResult(samples=samples), [1.5])

    def test_empty_samples_rejected(self):
        with pytest.raises(ValueError):
            summarize(ForecastResult(samples=np.zeros((0, 2, 1))), [0.5])


class TestOneStepError:
    def test_identical_is_zero(self):
        assert one_step_error([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_sum_of_absolute_gaps(self):
        assert one_step_error([1.0, 2.0], [0.0, 4.0]) == 3.0

    def test_matches_recomputation(self, rng):
        y = rng.normal(size=4)
        f = rng.normal(size=4)
        assert one_step_error(y, f) == pytest.approx(sum(abs(a - b)
                                                         for a, b in zip(y, f)))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            one_step_error([1.0], [1.0, 2.0])
