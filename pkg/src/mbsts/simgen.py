"""Seedable generators for the benchmark simulation models.

Models 1-4 are bivariate with a shared four-predictor pool and
increasingly rich structure (local trend, mean-reverting slope,
seasonality, cycle); Models 5 and 6 extend the trend-plus-slope design
to three and four series; Model 7 is the eight-predictor selection
benchmark whose training pool swaps three columns for partially shuffled
copies, two of which per series are signal-free decoys.  All draws flow
from one Generator so a seed pins the dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .statespace import (ComponentCovariances, ComponentConfig, ModelSpec,
                         build_state_space)

SIGMA_EPS_2 = np.array([[1.1, 0.7], [0.7, 0.9]])
SIGMA_EPS_3 = np.array([[1.1, 0.7, 0.7], [0.7, 0.9, 0.7], [0.7, 0.7, 1.0]])
SIGMA_EPS_4 = np.array([[1.1, 0.7, 0.7, 0.7], [0.7, 0.9, 0.7, 0.7],
                        [0.7, 0.7, 1.0, 0.7], [0.7, 0.7, 0.7, 1.2]])

B_4 = np.array([[2.0, -1.0, -0.5, 0.0],
                [-1.5, 4.0, 0.0, 2.5]])
B_5 = np.array([[2.0, -1.0, -0.5, 0.0],
                [-1.5, 4.0, 0.0, 2.5],
                [3.0, 0.0, 3.5, -2.0]])
B_6 = np.array([[2.0, -1.0, -0.5, 0.0],
                [-1.5, 4.0, 0.0, 2.5],
                [3.0, 0.0, 3.5, -2.0],
                [0.0, 1.0, 1.5, -0.5]])
B_7 = np.array([[2.0, -1.0, -0.5, 0.0, 1.5, -2.0, 0.0, 3.5],
                [-1.5, 4.0, 0.0, 2.5, -1.0, 0.0, -3.0, 0.5]])

CYCLE_FREQUENCY = np.pi / 10.0


@dataclass
class SyntheticDataset:
    Y: np.ndarray                 # n x m
    X_blocks: list                # per-series n x k_i training predictors
    spec: ModelSpec               # matching fit specification
    B: list                       # per-series generating coefficient vectors
    gamma_true: list              # per-series 0/1 arrays (zero pattern of B)
    sigma_eps: np.ndarray
    theta: ComponentCovariances
    seed: int
    shuffled_columns: dict = field(default_factory=dict)  # series -> columns

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def m(self) -> int:
        return self.Y.shape[1]


def _apply_correlation(sigma: np.ndarray, rho: float) -> np.ndarray:
    """Replace off-diagonals with rho scaled by the variance geometric
    means; rejects non-positive-definite results."""
    sigma = np.array(sigma, dtype=float)
    sd = np.sqrt(np.diag(sigma))
    out = rho * np.outer(sd, sd)
    np.fill_diagonal(out, np.diag(sigma))
    try:
        np.linalg.cholesky(out)
    except np.linalg.LinAlgError:
        raise ValueError(f"correlation override {rho} makes Sigma_eps indefinite")
    return out


def _simulate_states(spec: ModelSpec, theta: ComponentCovariances, n: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Forward-simulate the state path; initial states are N(0, 1)."""
    ss = build_state_space(spec, theta)
    d, q = ss.state_dim, ss.disturbance_dim
    alpha = np.zeros((n, d))
    if d == 0:
        return alpha
    alpha[0] = rng.standard_normal(d)
    eta_sd = np.sqrt(np.diag(ss.Q))
    for t in range(n - 1):
        eta = eta_sd * rng.standard_normal(q)
        alpha[t + 1] = ss.T @ alpha[t] + ss.intercept + ss.R @ eta
    return alpha


def _assemble(spec, theta, B_gen_blocks, X_train_blocks, sigma_eps, n, seed,
              rng, B_record, shuffled) -> SyntheticDataset:
    ss = build_state_space(spec, theta)
    alpha = _simulate_states(spec, theta, n, rng)
    L = np.linalg.cholesky(sigma_eps)
    eps = rng.standard_normal((n, spec.m)) @ L.T
    Y = alpha @ ss.Z + eps
    for i in range(spec.m):
        Y[:, i] += B_gen_blocks[i][1] @ np.asarray(B_gen_blocks[i][0])
    gamma_true = [(np.asarray(B_record[i]) != 0).astype(int) for i in range(spec.m)]
    return SyntheticDataset(Y=Y, X_blocks=X_train_blocks, spec=spec,
                            B=[np.asarray(b, dtype=float) for b in B_record],
                            gamma_true=gamma_true,
                            sigma_eps=np.asarray(sigma_eps, dtype=float),
                            theta=theta, seed=seed, shuffled_columns=shuffled)


def _base_predictors(rng: np.random.Generator, n: int) -> np.ndarray:
    x = np.zeros((n, 4))
    x[:, 0] = rng.normal(5.0, 5.0, n)
    x[:, 1] = rng.poisson(10.0, n)
    x[:, 2] = (rng.random(n) < 0.5).astype(float)
    x[:, 3] = rng.normal(-2.0, 5.0, n)
    return x


def _extra_predictors(rng: np.random.Generator, n: int) -> np.ndarray:
    x = np.zeros((n, 4))
    x[:, 0] = rng.normal(-5.0, 5.0, n)
    x[:, 1] = rng.poisson(15.0, n)
    x[:, 2] = rng.poisson(20.0, n)
    x[:, 3] = rng.normal(0.0, 10.0, n)
    return x


def shuffle_second_half(column: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Partially shuffled copy: the second half of the values is permuted."""
    out = np.array(column, dtype=float)
    half = out.size // 2
    idx = rng.permutation(out.size - half) + half
    out[half:] = out[idx]
    return out


def _trend_slope_config(rho, D):
    return ComponentConfig(has_trend=True, has_slope=True,
                           slope_learning_rate=rho, long_term_slope=D)


def _theta_models_1_4(model_id: int, m: int) -> dict:
    level = {0: 0.25, 1: 1.0}
    values = {"level": level}
    if model_id == 1:
        values["slope"] = {0: 0.08 ** 2}
    else:
        values["slope"] = {0: 0.08 ** 2, 1: 0.16 ** 2}
    if model_id >= 3:
        values["seasonal"] = {0: 0.01 ** 2}
    if model_id >= 4:
        values["cycle"] = {1: 0.01 ** 2}
    return values


def _spec_models_1_4(model_id: int) -> ModelSpec:
    if model_id == 1:
        s1 = _trend_slope_config(1.0, 0.0)
        s2 = ComponentConfig(has_trend=True)
    else:
        s1 = _trend_slope_config(0.6, 0.02)
        s2 = _trend_slope_config(1.0, 0.0)
    if model_id >= 3:
        s1 = ComponentConfig(has_trend=True, has_slope=True,
                             slope_learning_rate=s1.slope_learning_rate,
                             long_term_slope=s1.long_term_slope,
                             seasonal_period=4)
    if model_id >= 4:
        s2 = ComponentConfig(has_trend=True, has_slope=True,
                             slope_learning_rate=1.0, long_term_slope=0.0,
                             cycle_frequency=CYCLE_FREQUENCY, cycle_damping=0.5)
    return ModelSpec(per_series=(s1, s2), predictor_counts=(4, 4))


def _spec_model_5() -> ModelSpec:
    return ModelSpec(
        per_series=(_trend_slope_config(0.6, 0.02),
                    _trend_slope_config(1.0, 0.0),
                    _trend_slope_config(0.3, 0.01)),
        predictor_counts=(4, 4, 4))


def _spec_model_6() -> ModelSpec:
    return ModelSpec(
        per_series=(_trend_slope_config(0.6, 0.02),
                    _trend_slope_config(1.0, 0.0),
                    _trend_slope_config(0.3, 0.01),
                    _trend_slope_config(0.5, 0.0)),
        predictor_counts=(4, 4, 4, 4))


def _spec_model_7() -> ModelSpec:
    s1 = ComponentConfig(has_trend=True, has_slope=True,
                         slope_learning_rate=0.6, long_term_slope=0.02,
                         seasonal_period=4)
    s2 = ComponentConfig(has_trend=True, has_slope=True,
                         slope_learning_rate=1.0, long_term_slope=0.0,
                         cycle_frequency=CYCLE_FREQUENCY, cycle_damping=0.5)
    return ModelSpec(per_series=(s1, s2), predictor_counts=(8, 8))


def generate_model(model_id: int, n: int, seed: int,
                   correlation_override: float | None = None) -> SyntheticDataset:
    """Reproduce one of the seven benchmark generating processes."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))

    if model_id in (1, 2, 3, 4):
        spec = _spec_models_1_4(model_id)
        theta = ComponentCovariances.from_dict(2, _theta_models_1_4(model_id, 2))
        sigma = SIGMA_EPS_2
        B = B_4
        x = _base_predictors(rng, n)
        X_blocks = [x.copy(), x.copy()]
        gen_blocks = [(B[i], X_blocks[i]) for i in range(2)]
        shuffled = {}
    elif model_id == 5:
        spec = _spec_model_5()
        theta = ComponentCovariances.from_dict(3, {
            "level": {0: 0.25, 1: 1.0, 2: 0.7 ** 2},
            "slope": {0: 0.08 ** 2, 1: 0.16 ** 2, 2: 0.12 ** 2}})
        sigma = SIGMA_EPS_3
        B = B_5
        x = _base_predictors(rng, n)
        X_blocks = [x.copy() for _ in range(3)]
        gen_blocks = [(B[i], X_blocks[i]) for i in range(3)]
        shuffled = {}
    elif model_id == 6:
        spec = _spec_model_6()
        theta = ComponentCovariances.from_dict(4, {
            "level": {0: 0.25, 1: 1.0, 2: 0.7 ** 2, 3: 0.6 ** 2},
            "slope": {0: 0.08 ** 2, 1: 0.16 ** 2, 2: 0.12 ** 2, 3: 0.10 ** 2}})
        sigma = SIGMA_EPS_4
        B = B_6
        x = _base_predictors(rng, n)
        X_blocks = [x.copy() for _ in range(4)]
        gen_blocks = [(B[i], X_blocks[i]) for i in range(4)]
        shuffled = {}
    elif model_id == 7:
        spec = _spec_model_7()
        theta = ComponentCovariances.from_dict(2, {
            "level": {0: 0.25, 1: 1.0},
            "slope": {0: 0.08 ** 2, 1: 0.16 ** 2},
            "seasonal": {0: 0.01 ** 2},
            "cycle": {1: 0.01 ** 2}})
        sigma = SIGMA_EPS_2
        x = np.hstack([_base_predictors(rng, n), _extra_predictors(rng, n)])
        x2s = shuffle_second_half(x[:, 1], rng)
        x5s = shuffle_second_half(x[:, 4], rng)
        x8s = shuffle_second_half(x[:, 7], rng)
        # the shared training pool carries the partially shuffled copies
        train = x.copy()
        train[:, 1] = x2s
        train[:, 4] = x5s
        train[:, 7] = x8s
        X_blocks = [train.copy(), train.copy()]
        # Series 1 depends on x8*, series 2 on x2*; the remaining shuffled
        # copies (x2*, x5* for series 1 and x5*, x8* for series 2) are
        # decoys with zero generating coefficient, so selection is tested
        # against corrupted columns that carry no signal.
        shuffled = {0: [1, 4], 1: [4, 7]}
        B = [B_7[i].copy() for i in range(2)]
        for i, cols in shuffled.items():
            B[i][cols] = 0.0
        gen_blocks = [(B[0], train), (B[1], train)]
    else:
        raise ValueError(f"unknown simulation model id {model_id}")

    if correlation_override is not None:
        sigma = _apply_correlation(sigma, correlation_override)
    return _assemble(spec, theta, gen_blocks, X_blocks, sigma, n, seed, rng,
                     B, shuffled)


def generate_custom(spec: ModelSpec, B, sigma_eps, theta: ComponentCovariances,
                    n: int, seed: int,
                    correlation_override: float | None = None,
                    X_blocks=None) -> SyntheticDataset:
    """Simulate an arbitrary configured process; predictors default to
    standard normal columns."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    sigma = np.atleast_2d(np.asarray(sigma_eps, dtype=float))
    if correlation_override is not None:
        sigma = _apply_correlation(sigma, correlation_override)
    B = [np.asarray(b, dtype=float) for b in B]
    if X_blocks is None:
        X_blocks = [rng.standard_normal((n, k)) for k in spec.predictor_counts]
    else:
        X_blocks = [np.asarray(x, dtype=float) for x in X_blocks]
    gen_blocks = [(B[i], X_blocks[i]) for i in range(spec.m)]
    return _assemble(spec, theta, gen_blocks, X_blocks, sigma, n, seed, rng,
                     B, {})
