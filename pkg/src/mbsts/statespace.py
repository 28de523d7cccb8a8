"""Block state-space assembly for multivariate structural time series.

Each target series contributes its own blocks (level, slope, seasonal,
cycle) to a single joint system.  The assembled matrices are time
invariant; the mean-reverting slope offset is carried as a deterministic
state intercept so the transition matrix never changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_DIFFUSE_VARIANCE = 1e6

COMPONENTS = ("level", "slope", "seasonal", "cycle")


@dataclass(frozen=True)
class ComponentConfig:
    """Structural components for one target series.

    ``slope_learning_rate`` and ``long_term_slope`` parameterize the
    mean-reverting slope; ``cycle_frequency``/``cycle_damping`` the damped
    stochastic cycle.  All four are fixed hyperparameters, never sampled.
    """

    has_trend: bool = True
    has_slope: bool = False
    slope_learning_rate: float = 1.0
    long_term_slope: float = 0.0
    seasonal_period: int | None = None
    cycle_frequency: float | None = None
    cycle_damping: float | None = None

    def __post_init__(self):
        if self.has_slope and not self.has_trend:
            raise ValueError("a slope requires a trend (level) component")
        if not 0.0 <= self.slope_learning_rate <= 1.0:
            raise ValueError("slope_learning_rate must lie in [0, 1]")
        if self.seasonal_period is not None and self.seasonal_period < 2:
            raise ValueError(f"seasonal_period must be >= 2, got {self.seasonal_period}")
        if (self.cycle_frequency is None) != (self.cycle_damping is None):
            raise ValueError("cycle_frequency and cycle_damping must be set together")
        if self.cycle_frequency is not None:
            if not 0.0 < self.cycle_frequency < math.pi:
                raise ValueError("cycle_frequency must lie strictly in (0, pi)")
            if not 0.0 < self.cycle_damping < 1.0:
                raise ValueError("cycle_damping must lie strictly in (0, 1)")

    @property
    def has_seasonal(self) -> bool:
        return self.seasonal_period is not None

    @property
    def has_cycle(self) -> bool:
        return self.cycle_frequency is not None

    def state_dim(self) -> int:
        d = int(self.has_trend) + int(self.has_slope)
        if self.has_seasonal:
            d += self.seasonal_period - 1
        if self.has_cycle:
            d += 2
        return d

    def disturbance_dim(self) -> int:
        q = int(self.has_trend) + int(self.has_slope)
        if self.has_seasonal:
            q += 1
        if self.has_cycle:
            q += 2
        return q


@dataclass(frozen=True)
class ModelSpec:
    """Joint model: per-series components plus predictor-pool sizes."""

    per_series: tuple[ComponentConfig, ...]
    predictor_counts: tuple[int, ...]
    initial_state_variance: float = DEFAULT_DIFFUSE_VARIANCE

    def __init__(self, per_series, predictor_counts,
                 initial_state_variance=DEFAULT_DIFFUSE_VARIANCE):
        object.__setattr__(self, "per_series", tuple(per_series))
        object.__setattr__(self, "predictor_counts", tuple(int(k) for k in predictor_counts))
        object.__setattr__(self, "initial_state_variance", float(initial_state_variance))
        if len(self.per_series) != len(self.predictor_counts):
            raise ValueError("per_series and predictor_counts lengths differ")
        if len(self.per_series) == 0:
            raise ValueError("at least one target series is required")
        if any(k < 0 for k in self.predictor_counts):
            raise ValueError("predictor counts must be nonnegative")

    @property
    def m(self) -> int:
        return len(self.per_series)

    @property
    def total_predictors(self) -> int:
        return sum(self.predictor_counts)

    def state_dim(self) -> int:
        return sum(cfg.state_dim() for cfg in self.per_series)

    def single_series(self, i: int) -> "ModelSpec":
        """Spec for series i alone (the univariate special case)."""
        return ModelSpec((self.per_series[i],), (self.predictor_counts[i],),
                         self.initial_state_variance)


@dataclass
class ComponentCovariances:
    """Diagonal component variances, one entry per series; NaN marks a
    series that lacks the component."""

    level: np.ndarray
    slope: np.ndarray
    seasonal: np.ndarray
    cycle: np.ndarray

    @classmethod
    def from_dict(cls, m: int, values: dict) -> "ComponentCovariances":
        arrays = {}
        for name in COMPONENTS:
            arr = np.full(m, np.nan)
            for i, v in (values.get(name) or {}).items():
                arr[i] = v
            arrays[name] = arr
        return cls(**arrays)

    def get(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def require(self, name: str, series: int) -> float:
        v = self.get(name)[series]
        if not np.isfinite(v):
            raise ValueError(f"missing {name} variance for series {series}")
        if v < 0:
            raise ValueError(f"{name} variance for series {series} is negative")
        return float(v)


@dataclass
class StateSpaceSystem:
    """Assembled system matrices plus layout bookkeeping.

    Immutable by convention once built; ``state_slices[i][component]``
    gives the state indices of that component for series i, and
    ``stochastic_state_index[r]`` names the (series, component) owning
    disturbance slot r.
    """

    Z: np.ndarray           # d x m selector
    T: np.ndarray           # d x d transition
    R: np.ndarray           # d x q disturbance loading
    Q: np.ndarray           # q x q diagonal disturbance covariance
    intercept: np.ndarray   # d, deterministic state intercept
    state_dim: int
    disturbance_dim: int
    initial_mean: np.ndarray
    initial_cov: np.ndarray
    stochastic_state_index: list = field(default_factory=list)
    state_slices: list = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.Z.shape[1]


def state_layout(spec: ModelSpec) -> list:
    """Per-series state indices by component, independent of variances."""
    layout = []
    pos = 0
    for cfg in spec.per_series:
        slices = {}
        if cfg.has_trend:
            slices["level"] = [pos]
            pos += 1
            if cfg.has_slope:
                slices["slope"] = [pos]
                pos += 1
        if cfg.has_seasonal:
            slices["seasonal"] = list(range(pos, pos + cfg.seasonal_period - 1))
            pos += cfg.seasonal_period - 1
        if cfg.has_cycle:
            slices["cycle"] = [pos, pos + 1]
            pos += 2
        layout.append(slices)
    return layout


def build_state_space(spec: ModelSpec, theta: ComponentCovariances) -> StateSpaceSystem:
    """Assemble Z, T, R, Q and the initial Gaussian for the joint model.

    The seasonal block is (S-1)x(S-1) with -1 along the top row and 1 on
    the subdiagonal; the cycle block is the damped rotation
    [[r cos, r sin], [-r sin, r cos]] with only the first cycle state
    observed.
    """
    d = spec.state_dim()
    m = spec.m
    Z = np.zeros((d, m))
    T = np.zeros((d, d))
    intercept = np.zeros(d)
    stochastic = []      # (state index, variance, (series, component label))
    state_slices = []

    pos = 0
    for i, cfg in enumerate(spec.per_series):
        slices = {}
        if cfg.has_trend:
            lv = pos
            slices["level"] = [lv]
            Z[lv, i] = 1.0
            T[lv, lv] = 1.0
            stochastic.append((lv, theta.require("level", i), (i, "level")))
            pos += 1
            if cfg.has_slope:
                sl = pos
                slices["slope"] = [sl]
                T[lv, sl] = 1.0
                rho = cfg.slope_learning_rate
                T[sl, sl] = rho
                intercept[sl] = (1.0 - rho) * cfg.long_term_slope
                stochastic.append((sl, theta.require("slope", i), (i, "slope")))
                pos += 1
        if cfg.has_seasonal:
            s = cfg.seasonal_period
            idx = list(range(pos, pos + s - 1))
            slices["seasonal"] = idx
            Z[idx[0], i] = 1.0
            T[idx[0], idx] = -1.0
            for j in range(1, s - 1):
                T[idx[j], idx[j - 1]] = 1.0
            stochastic.append((idx[0], theta.require("seasonal", i), (i, "seasonal")))
            pos += s - 1
        if cfg.has_cycle:
            c0, c1 = pos, pos + 1
            slices["cycle"] = [c0, c1]
            Z[c0, i] = 1.0
            rho_c = cfg.cycle_damping
            lam = cfg.cycle_frequency
            cos, sin = math.cos(lam), math.sin(lam)
            T[c0, c0] = rho_c * cos
            T[c0, c1] = rho_c * sin
            T[c1, c0] = -rho_c * sin
            T[c1, c1] = rho_c * cos
            var = theta.require("cycle", i)
            stochastic.append((c0, var, (i, "cycle")))
            stochastic.append((c1, var, (i, "cycle_star")))
            pos += 2
        state_slices.append(slices)

    q = len(stochastic)
    R = np.zeros((d, q))
    Q = np.zeros((q, q))
    index = []
    for r, (state_idx, var, owner) in enumerate(stochastic):
        R[state_idx, r] = 1.0
        Q[r, r] = var
        index.append(owner)

    return StateSpaceSystem(
        Z=Z, T=T, R=R, Q=Q, intercept=intercept,
        state_dim=d, disturbance_dim=q,
        initial_mean=np.zeros(d),
        initial_cov=spec.initial_state_variance * np.eye(d),
        stochastic_state_index=index,
        state_slices=state_slices,
    )


def propagate(ss: StateSpaceSystem, alpha_t: np.ndarray, eta_t: np.ndarray) -> np.ndarray:
    """One transition step: T a + intercept + R eta."""
    alpha_t = np.asarray(alpha_t, dtype=float)
    eta_t = np.asarray(eta_t, dtype=float)
    if alpha_t.shape != (ss.state_dim,):
        raise ValueError(f"state has shape {alpha_t.shape}, expected ({ss.state_dim},)")
    if eta_t.shape != (ss.disturbance_dim,):
        raise ValueError(f"disturbance has shape {eta_t.shape}, expected ({ss.disturbance_dim},)")
    return ss.T @ alpha_t + ss.intercept + ss.R @ eta_t


def observe(ss: StateSpaceSystem, alpha_t: np.ndarray, xi_t: np.ndarray) -> np.ndarray:
    """Noiseless observation mean: Z' a plus the regression contribution."""
    alpha_t = np.asarray(alpha_t, dtype=float)
    xi_t = np.asarray(xi_t, dtype=float)
    if alpha_t.shape != (ss.state_dim,):
        raise ValueError(f"state has shape {alpha_t.shape}, expected ({ss.state_dim},)")
    if xi_t.shape != (ss.m,):
        raise ValueError(f"regression term has shape {xi_t.shape}, expected ({ss.m},)")
    return ss.Z.T @ alpha_t + xi_t


def state_contribution(ss: StateSpaceSystem, alpha_path: np.ndarray) -> np.ndarray:
    """Z' alpha_t for every t: the (n, m) structural part of the fit."""
    return np.asarray(alpha_path) @ ss.Z
