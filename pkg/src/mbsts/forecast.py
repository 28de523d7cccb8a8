"""Posterior-predictive forecasting by forward simulation.

Each retained posterior draw contributes one simulated path: the state
equations are rolled forward from that draw's final state with fresh
component and observation noise, and the regression term uses that
draw's coefficients.  Averaging over draws integrates out both the
parameters and the selected predictor subset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gibbs import PosteriorDraws
from .statespace import COMPONENTS, ComponentCovariances, build_state_space


@dataclass
class ForecastResult:
    samples: np.ndarray                      # (draws, horizon, m)
    mean: np.ndarray = None                  # (horizon, m)
    quantiles: dict = field(default_factory=dict)   # prob level -> (horizon, m)

    def __post_init__(self):
        if self.mean is None and self.samples.size:
            self.mean = self.samples.mean(axis=0)
        elif self.mean is None:
            self.mean = np.zeros(self.samples.shape[1:])


def _theta_for_draw(draws: PosteriorDraws, r: int) -> ComponentCovariances:
    values = {}
    for u in COMPONENTS:
        row = draws.theta[u][r]
        values[u] = {i: row[i] for i in range(row.size) if np.isfinite(row[i])}
    return ComponentCovariances.from_dict(draws.sigma_eps.shape[1], values)


def predict(draws: PosteriorDraws, X_future_blocks, horizon: int,
            rng: np.random.Generator) -> ForecastResult:
    """Simulate ``horizon`` steps ahead once per retained draw."""
    m = draws.sigma_eps.shape[1]
    if horizon == 0:
        return ForecastResult(samples=np.zeros((draws.num_draws, 0, m)))
    counts = draws.spec.predictor_counts
    X_future_blocks = [np.asarray(x, dtype=float).reshape(-1, counts[i])
                       for i, x in enumerate(X_future_blocks)]
    for i, x in enumerate(X_future_blocks):
        if x.shape[0] < horizon:
            raise ValueError(
                f"predictor block {i} supplies {x.shape[0]} future rows, "
                f"horizon needs {horizon}")
    offs = np.concatenate([[0], np.cumsum(counts)])
    xi_future = np.zeros((draws.num_draws, horizon, m))
    for i in range(m):
        xi_future[:, :, i] = draws.beta[:, offs[i]:offs[i + 1]] @ X_future_blocks[i][:horizon].T

    samples = np.zeros((draws.num_draws, horizon, m))
    d = draws.alpha.shape[2]
    for r in range(draws.num_draws):
        sigma_eps = draws.sigma_eps[r]
        L_eps = np.linalg.cholesky(sigma_eps)
        if d > 0:
            ss = build_state_space(draws.spec, _theta_for_draw(draws, r))
            eta_sd = np.sqrt(np.diag(ss.Q))
            alpha = draws.alpha[r, -1]
            for h in range(horizon):
                eta = eta_sd * rng.standard_normal(ss.disturbance_dim)
                alpha = ss.T @ alpha + ss.intercept + ss.R @ eta
                eps = L_eps @ rng.standard_normal(m)
                samples[r, h] = ss.Z.T @ alpha + xi_future[r, h] + eps
        else:
            eps = rng.standard_normal((horizon, m)) @ L_eps.T
            samples[r] = xi_future[r] + eps
    return ForecastResult(samples=samples)


def summarize(result: ForecastResult, levels) -> ForecastResult:
    """Fill the mean and central quantile bands for the given levels.

    A level of 0.4 yields the 30th and 70th percentiles; level 1.0 the
    min/max envelope.
    """
    if result.samples.size == 0 and result.samples.shape[1] > 0:
        raise ValueError("forecast has no samples to summarize")
    result.mean = result.samples.mean(axis=0) if result.samples.size else result.mean
    for level in levels:
        if not 0.0 < level <= 1.0:
            raise ValueError(f"band level {level} outside (0, 1]")
        lo_p = (1.0 - level) / 2.0
        result.quantiles[level] = {
            "lower": np.quantile(result.samples, lo_p, axis=0),
            "upper": np.quantile(result.samples, 1.0 - lo_p, axis=0),
        }
    return result


def one_step_error(y_true_row, forecast_mean_row) -> float:
    """Sum over series of absolute one-step forecast errors."""
    y = np.asarray(y_true_row, dtype=float)
    f = np.asarray(forecast_mean_row, dtype=float)
    if y.shape != f.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {f.shape}")
    return float(np.abs(y - f).sum())
