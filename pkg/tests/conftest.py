import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mbsts.statespace import ComponentConfig, ModelSpec, build_state_space


def random_system(rng, m=None, initial_variance=None):
    """A random small model: per-series components drawn at random."""
    m = m if m is not None else int(rng.integers(1, 4))
    configs = []
    total_d = 0
    for k in range(m):
        # leave at least one state slot for every series still to come
        budget = 6 - (m - k - 1)
        while True:
            has_trend = bool(rng.random() < 0.8)
            has_slope = has_trend and bool(rng.random() < 0.5)
            seasonal = int(rng.choice([0, 3])) if rng.random() < 0.3 else 0
            cycle = bool(rng.random() < 0.3)
            d = has_trend + has_slope + (seasonal - 1 if seasonal else 0) + 2 * cycle
            if 0 < d and total_d + d <= budget:
                break
        total_d += d
        configs.append(ComponentConfig(
            has_trend=has_trend, has_slope=has_slope,
            slope_learning_rate=float(rng.uniform(0.2, 1.0)) if has_slope else 1.0,
            long_term_slope=float(rng.normal(0, 0.1)) if has_slope else 0.0,
            seasonal_period=seasonal or None,
            cycle_frequency=float(rng.uniform(0.2, 2.0)) if cycle else None,
            cycle_damping=float(rng.uniform(0.3, 0.9)) if cycle else None))
    iv = initial_variance if initial_variance is not None else float(rng.uniform(0.5, 3.0))
    spec = ModelSpec(per_series=configs, predictor_counts=[0] * m,
                     initial_state_variance=iv)
    theta_values = {"level": {}, "slope": {}, "seasonal": {}, "cycle": {}}
    for i, cfg in enumerate(configs):
        if cfg.has_trend:
            theta_values["level"][i] = float(rng.uniform(0.05, 1.0))
        if cfg.has_slope:
            theta_values["slope"][i] = float(rng.uniform(0.01, 0.3))
        if cfg.has_seasonal:
            theta_values["seasonal"][i] = float(rng.uniform(0.01, 0.3))
        if cfg.has_cycle:
            theta_values["cycle"][i] = float(rng.uniform(0.01, 0.3))
    from mbsts.statespace import ComponentCovariances
    theta = ComponentCovariances.from_dict(m, theta_values)
    ss = build_state_space(spec, theta)
    a = rng.normal(size=(m, m))
    sigma_eps = a @ a.T + 0.3 * np.eye(m)
    return spec, theta, ss, sigma_eps


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
