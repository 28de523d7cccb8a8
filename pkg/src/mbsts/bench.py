"""Growing-window one-step-ahead evaluation harness.

Compares the joint multivariate model against independent per-series
fits of the same engine (the univariate special case) by retraining at
every step on all data revealed so far and scoring the one-step
posterior-predictive mean with the summed absolute error across series.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import forecast as fc
from . import gibbs, regression
from .gibbs import TrainConfig
from .simgen import SyntheticDataset
from .statespace import ModelSpec

VARIANT_JOINT = "joint"
VARIANT_INDEPENDENT = "independent"


@dataclass(frozen=True)
class EvalConfig:
    initial_train_len: int
    horizon_steps: int
    train_cfg: TrainConfig
    model_variants: tuple = (VARIANT_JOINT, VARIANT_INDEPENDENT)
    expected_r2: float = 0.8
    expected_model_size_fraction: float = 0.5
    kappa: float = regression.DEFAULT_KAPPA
    omega: float = regression.DEFAULT_OMEGA
    warm_start: bool = False

    def __post_init__(self):
        if self.initial_train_len < 2:
            raise ValueError("initial_train_len must be at least 2")
        if self.horizon_steps < 0:
            raise ValueError("horizon_steps must be nonnegative")


@dataclass
class VariantTrace:
    pe: np.ndarray                # per-step prediction errors
    cumulative: np.ndarray        # running sums (nondecreasing)
    point_forecasts: np.ndarray   # steps x m
    refit_seconds: np.ndarray


@dataclass
class EvalReport:
    variants: dict = field(default_factory=dict)   # label -> VariantTrace
    horizon_steps: int = 0


class EvalError(RuntimeError):
    def __init__(self, step, variant, cause):
        super().__init__(f"step {step}, variant {variant}: {cause}")
        self.step = step
        self.variant = variant


def make_priors(Y_train: np.ndarray, predictor_counts, cfg: EvalConfig) -> regression.PriorSet:
    """Data-driven prior: expected model size as a pool fraction, expected
    R^2 against the sample covariance of the differenced targets (raw
    target variance overstates the noise scale when a trend is present)."""
    m = Y_train.shape[1]
    scale_rows = np.diff(Y_train, axis=0) if Y_train.shape[0] >= 3 else Y_train
    sigma_y = np.atleast_2d(np.cov(scale_rows, rowvar=False))
    sizes = [max(1.0, cfg.expected_model_size_fraction * k) if k else 0.0
             for k in predictor_counts]
    return regression.elicit_priors(sizes, predictor_counts, cfg.expected_r2,
                                    v0=m + 2.0, Sigma_y=sigma_y,
                                    kappa=cfg.kappa, omega=cfg.omega)


def _fit_predict(Y_train, X_train, X_next, spec: ModelSpec, cfg: EvalConfig,
                 seed_key, init=None):
    priors = make_priors(Y_train, spec.predictor_counts, cfg)
    train_cfg = TrainConfig(total_draws=cfg.train_cfg.total_draws,
                            burn_in=cfg.train_cfg.burn_in,
                            seed=int(np.random.SeedSequence(seed_key).generate_state(1)[0]),
                            chains=cfg.train_cfg.chains)
    draws = gibbs.train(Y_train, X_train, spec, priors, train_cfg, init=init)
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(seed_key + [1])))
    result = fc.predict(draws, X_next, horizon=1, rng=rng)
    last = -1
    warm = None
    if cfg.warm_start:
        theta = fc._theta_for_draw(draws, draws.num_draws - 1)
        gamma = regression.split_bits(draws.gamma[last], spec.predictor_counts)
        warm = (theta, gamma, draws.beta[last], draws.sigma_eps[last])
    return result.mean[0], warm


def growing_window_eval(dataset: SyntheticDataset, cfg: EvalConfig,
                        forecaster=None) -> EvalReport:
    """Run the growing-window comparison; ``forecaster`` optionally
    replaces model training with a callable
    (Y_train, X_train, X_next, variant, step) -> length-m forecast."""
    Y = dataset.Y
    X_blocks = dataset.X_blocks
    n, m = Y.shape
    if cfg.initial_train_len + cfg.horizon_steps > n:
        raise ValueError("initial_train_len + horizon_steps exceeds dataset length")
    report = EvalReport(horizon_steps=cfg.horizon_steps)
    base_seed = cfg.train_cfg.seed
    for v_idx, variant in enumerate(cfg.model_variants):
        pe = np.zeros(cfg.horizon_steps)
        points = np.zeros((cfg.horizon_steps, m))
        secs = np.zeros(cfg.horizon_steps)
        warm_joint = None
        warm_indep = [None] * m
        for s in range(cfg.horizon_steps):
            train_len = cfg.initial_train_len + s
            Y_train = Y[:train_len]
            X_train = [x[:train_len] for x in X_blocks]
            X_next = [x[train_len:train_len + 1] for x in X_blocks]
            t0 = time.perf_counter()
            try:
                if forecaster is not None:
                    point = np.asarray(
                        forecaster(Y_train, X_train, X_next, variant, s), dtype=float)
                elif variant == VARIANT_JOINT:
                    point, warm_joint = _fit_predict(
                        Y_train, X_train, X_next, dataset.spec, cfg,
                        [base_seed, v_idx, s],
                        init=warm_joint if cfg.warm_start else None)
                elif variant == VARIANT_INDEPENDENT:
                    point = np.zeros(m)
                    for i in range(m):
                        sub_spec = dataset.spec.single_series(i)
                        p_i, warm_indep[i] = _fit_predict(
                            Y_train[:, [i]], [X_train[i]], [X_next[i]],
                            sub_spec, cfg, [base_seed, v_idx, s, i],
                            init=warm_indep[i] if cfg.warm_start else None)
                        point[i] = p_i[0]
                else:
                    raise ValueError(f"unknown variant {variant!r}")
            except Exception as exc:
                raise EvalError(s, variant, exc) from exc
            secs[s] = time.perf_counter() - t0
            points[s] = point
            pe[s] = fc.one_step_error(Y[train_len], point)
        report.variants[variant] = VariantTrace(
            pe=pe, cumulative=np.cumsum(pe), point_forecasts=points,
            refit_seconds=secs)
    return report


def compare_report(reports) -> dict:
    """Align cumulative PE across reports/variants into one table."""
    if not reports:
        raise ValueError("no reports to compare")
    steps = reports[0].horizon_steps
    for rep in reports:
        if rep.horizon_steps != steps:
            raise ValueError("reports have different horizon lengths")
    columns = {}
    for r_idx, rep in enumerate(reports):
        for label, trace in rep.variants.items():
            key = label if len(reports) == 1 else f"{r_idx}:{label}"
            columns[key] = trace.cumulative
    labels = list(columns)
    finals = {k: float(v[-1]) if steps else 0.0 for k, v in columns.items()}
    ref = finals[labels[0]] if labels else 0.0
    gaps = {k: (f - ref) / ref if ref else 0.0 for k, f in finals.items()}
    return {"step": list(range(1, steps + 1)),
            "cumulative_pe": {k: v.tolist() for k, v in columns.items()},
            "final": finals,
            "relative_gap_vs_first": gaps}


def report_rows(report: EvalReport):
    """Long-format rows (step, variant, pe, cumulative_pe) for CSV export."""
    rows = []
    for label, trace in report.variants.items():
        for s in range(report.horizon_steps):
            rows.append({"step": s + 1, "variant": label,
                         "pe": float(trace.pe[s]),
                         "cumulative_pe": float(trace.cumulative[s])})
    return rows
