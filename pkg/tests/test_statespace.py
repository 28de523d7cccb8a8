import math

import numpy as np
import pytest

from mbsts.statespace import (ComponentConfig, ComponentCovariances,
                              ModelSpec, build_state_space, observe,
                              propagate, state_contribution, state_layout)


def full_config():
    return ComponentConfig(has_trend=True, has_slope=True,
                           slope_learning_rate=0.6, long_term_slope=0.02,
                           seasonal_period=4, cycle_frequency=0.3,
                           cycle_damping=0.5)


def full_spec():
    return ModelSpec(per_series=(full_config(), ComponentConfig(has_trend=True)),
                     predictor_counts=(3, 2), initial_state_variance=2.0)


def full_theta():
    return ComponentCovariances.from_dict(2, {
        "level": {0: 0.25, 1: 1.0}, "slope": {0: 0.04},
        "seasonal": {0: 0.01}, "cycle": {0: 0.09}})


class TestComponentConfig:
    def test_slope_requires_trend(self):
        with pytest.raises(ValueError):
            ComponentConfig(has_trend=False, has_slope=True)

    def test_learning_rate_bounds(self):
        with pytest.raises(ValueError):
            ComponentConfig(has_slope=True, slope_learning_rate=1.5)

    def test_seasonal_period_minimum(self):
        with pytest.raises(ValueError):
            ComponentConfig(seasonal_period=1)

    def test_cycle_params_must_pair(self):
        with pytest.raises(ValueError):
            ComponentConfig(cycle_frequency=0.3)
        with pytest.raises(ValueError):
            ComponentConfig(cycle_damping=0.5)

    def test_cycle_param_ranges(self):
        with pytest.raises(ValueError):
            ComponentConfig(cycle_frequency=math.pi, cycle_damping=0.5)
        with pytest.raises(ValueError):
            ComponentConfig(cycle_frequency=0.3, cycle_damping=1.0)

    def test_state_dim_accounting(self):
        assert ComponentConfig().state_dim() == 1
        assert full_config().state_dim() == 1 + 1 + 3 + 2
        assert full_config().disturbance_dim() == 1 + 1 + 1 + 2


class TestModelSpec:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ModelSpec(per_series=(ComponentConfig(),), predictor_counts=(1, 2))

    def test_needs_a_series(self):
        with pytest.raises(ValueError):
            ModelSpec(per_series=(), predictor_counts=())

    def test_negative_predictor_count(self):
        with pytest.raises(ValueError):
            ModelSpec(per_series=(ComponentConfig(),), predictor_counts=(-1,))

    def test_single_series(self):
        spec = full_spec()
        sub = spec.single_series(1)
        assert sub.m == 1
        assert sub.predictor_counts == (2,)
        assert sub.per_series[0] == spec.per_series[1]
        assert sub.initial_state_variance == spec.initial_state_variance


class TestComponentCovariances:
    def test_require_missing(self):
        theta = full_theta()
        with pytest.raises(ValueError, match="missing"):
            theta.require("slope", 1)

    def test_require_negative(self):
        theta = ComponentCovariances.from_dict(1, {"level": {0: -1.0}})
        with pytest.raises(ValueError, match="negative"):
            theta.require("level", 0)

    def test_nan_marks_absent(self):
        theta = full_theta()
        assert np.isnan(theta.get("cycle")[1])
        assert theta.require("cycle", 0) == 0.09


class TestBuildStateSpace:
    def test_dimensions_and_layout(self):
        ss = build_state_space(full_spec(), full_theta())
        assert ss.state_dim == 7 + 1
        assert ss.disturbance_dim == 5 + 1
        layout = state_layout(full_spec())
        assert layout == ss.state_slices
        assert layout[0]["seasonal"] == [2, 3, 4]
        assert layout[1]["level"] == [7]

    def test_observation_selectors(self):
        ss = build_state_space(full_spec(), full_theta())
        # series 0 observes level, first seasonal state, first cycle state
        assert ss.Z[:, 0].tolist() == [1, 0, 1, 0, 0, 1, 0, 0]
        assert ss.Z[:, 1].tolist() == [0, 0, 0, 0, 0, 0, 0, 1]

    def test_transition_blocks(self):
        ss = build_state_space(full_spec(), full_theta())
        T = ss.T
        assert T[0, 0] == 1.0 and T[0, 1] == 1.0          # level + slope
        assert T[1, 1] == 0.6                             # mean reversion
        assert ss.intercept[1] == pytest.approx(0.4 * 0.02)
        assert T[2, 2:5].tolist() == [-1, -1, -1]         # seasonal top row
        assert T[3, 2] == 1.0 and T[4, 3] == 1.0          # seasonal shift
        r, lam = 0.5, 0.3
        assert T[5, 5] == pytest.approx(r * math.cos(lam))
        assert T[5, 6] == pytest.approx(r * math.sin(lam))
        assert T[6, 5] == pytest.approx(-r * math.sin(lam))

    def test_disturbance_mapping(self):
        ss = build_state_space(full_spec(), full_theta())
        # R maps each disturbance to one state, Q holds the variances
        assert np.diag(ss.Q).tolist() == [0.25, 0.04, 0.01, 0.09, 0.09, 1.0]
        owners = ss.stochastic_state_index
        assert owners[0] == (0, "level")
        assert owners[3] == (0, "cycle") and owners[4] == (0, "cycle_star")
        assert (ss.R.sum(axis=0) == 1).all()

    def test_initial_gaussian(self):
        ss = build_state_space(full_spec(), full_theta())
        assert np.array_equal(ss.initial_mean, np.zeros(8))
        assert np.array_equal(ss.initial_cov, 2.0 * np.eye(8))

    def test_missing_variance_rejected(self):
        theta = ComponentCovariances.from_dict(2, {"level": {0: 0.25, 1: 1.0}})
        with pytest.raises(ValueError):
            build_state_space(full_spec(), theta)


class TestEvolution:
    def test_propagate_matches_matrices(self, rng):
        ss = build_state_space(full_spec(), full_theta())
        a = rng.normal(size=ss.state_dim)
        e = rng.normal(size=ss.disturbance_dim)
        expected = ss.T @ a + ss.intercept + ss.R @ e
        assert np.allclose(propagate(ss, a, e), expected)

    def test_propagate_shape_checks(self):
        ss = build_state_space(full_spec(), full_theta())
        with pytest.raises(ValueError):
            propagate(ss, np.zeros(3), np.zeros(ss.disturbance_dim))
        with pytest.raises(ValueError):
            propagate(ss, np.zeros(ss.state_dim), np.zeros(2))

    def test_observe(self, rng):
        ss = build_state_space(full_spec(), full_theta())
        a = rng.normal(size=ss.state_dim)
        xi = rng.normal(size=2)
        assert np.allclose(observe(ss, a, xi), ss.Z.T @ a + xi)
        with pytest.raises(ValueError):
            observe(ss, a, np.zeros(3))

    def test_state_contribution_matches_loop(self, rng):
        ss = build_state_space(full_spec(), full_theta())
        path = rng.normal(size=(5, ss.state_dim))
        expected = np.array([ss.Z.T @ a for a in path])
        assert np.allclose(state_contribution(ss, path), expected)
