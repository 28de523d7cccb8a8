"""Five-step Gibbs sampler: states, component variances, inclusion bits,
coefficients, observation covariance.

One iteration draws, in order: the latent state path by simulation
smoothing, the diagonal component variances from their inverse-gamma
conditionals, an SSVS sweep over inclusion bits, the coefficients, and
the observation covariance.  The component-adjusted targets are
recomputed after every state draw; the whitening caches are rebuilt once
per iteration since the observation covariance is held fixed through the
inclusion and coefficient steps.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kalman, regression, statespace
from .regression import PriorSet, RegressionData, SufficientStats
from .statespace import ComponentCovariances, ModelSpec, build_state_space, state_layout


class GibbsError(RuntimeError):
    """A sampler step failed; carries the iteration index and step name."""

    def __init__(self, iteration, step, cause):
        super().__init__(f"iteration {iteration}, step {step}: {cause}")
        self.iteration = iteration
        self.step = step


@dataclass(frozen=True)
class TrainConfig:
    total_draws: int = 2000
    burn_in: int = 200
    seed: int = 0
    chains: int = 1

    def __post_init__(self):
        if self.burn_in >= self.total_draws:
            raise ValueError("burn_in must be smaller than total_draws")
        if self.chains < 1:
            raise ValueError("at least one chain is required")

    def to_dict(self):
        return {"total_draws": self.total_draws, "burn_in": self.burn_in,
                "seed": self.seed, "chains": self.chains}


@dataclass
class PosteriorDraws:
    """Retained draws, stacked across chains along the first axis."""

    alpha: np.ndarray             # (r, n, d)
    theta: dict                   # component -> (r, m), NaN where absent
    gamma: np.ndarray             # (r, K) of 0/1
    beta: np.ndarray              # (r, K)
    sigma_eps: np.ndarray         # (r, m, m)
    flip_counts: np.ndarray       # (r,) SSVS bits changed that sweep
    chain_id: np.ndarray          # (r,)
    spec: ModelSpec
    config: TrainConfig

    @property
    def num_draws(self) -> int:
        return self.beta.shape[0]

    def inclusion_frequency(self) -> np.ndarray:
        """Per-coordinate share of retained draws with the bit set."""
        return self.gamma.mean(axis=0)

    def beta_interval(self, level: float = 0.9) -> tuple:
        lo = np.quantile(self.beta, (1 - level) / 2, axis=0)
        hi = np.quantile(self.beta, 1 - (1 - level) / 2, axis=0)
        return lo, hi


def _prior_point(weight: float, scale: float) -> float:
    """Inverse-gamma prior mean when it exists, otherwise the mode."""
    if weight > 2.0:
        return scale / (weight - 2.0)
    return scale / (weight + 2.0)


def _theta_prior_point(spec: ModelSpec, priors: PriorSet) -> ComponentCovariances:
    values = {u: {} for u in statespace.COMPONENTS}
    for i, cfg in enumerate(spec.per_series):
        present = {"level": cfg.has_trend, "slope": cfg.has_slope,
                   "seasonal": cfg.has_seasonal, "cycle": cfg.has_cycle}
        for u, here in present.items():
            if here:
                values[u][i] = _prior_point(priors.component_weight[u],
                                            _scale_for(priors, u, i))
    return ComponentCovariances.from_dict(spec.m, values)


def _scale_for(priors: PriorSet, u: str, series: int) -> float:
    w = priors.component_scale[u]
    if np.isscalar(w):
        return float(w)
    return float(np.asarray(w)[series])


def _draw_inv_gamma(rng: np.random.Generator, shape: float, scale: float) -> float:
    return scale / rng.gamma(shape)


def component_residuals(alpha_path: np.ndarray, spec: ModelSpec) -> dict:
    """Transition residuals per (component, series): (sum of squares, count).

    The cycle pools both recursion lines, which share a variance.
    """
    alpha_path = np.asarray(alpha_path, dtype=float)
    n = alpha_path.shape[0]
    if n == 0:
        raise ValueError("state path is empty")
    layout = state_layout(spec)
    out = {}
    for i, cfg in enumerate(spec.per_series):
        slices = layout[i]
        if cfg.has_trend:
            mu = alpha_path[:, slices["level"][0]]
            drift = alpha_path[:-1, slices["slope"][0]] if cfg.has_slope else 0.0
            r = mu[1:] - mu[:-1] - drift
            out[("level", i)] = (float(r @ r), n - 1)
        if cfg.has_slope:
            delta = alpha_path[:, slices["slope"][0]]
            rho, D = cfg.slope_learning_rate, cfg.long_term_slope
            r = delta[1:] - rho * delta[:-1] - (1.0 - rho) * D
            out[("slope", i)] = (float(r @ r), n - 1)
        if cfg.has_seasonal:
            block = alpha_path[:, slices["seasonal"]]
            r = block[1:, 0] + block[:-1].sum(axis=1)
            out[("seasonal", i)] = (float(r @ r), n - 1)
        if cfg.has_cycle:
            w = alpha_path[:, slices["cycle"][0]]
            ws = alpha_path[:, slices["cycle"][1]]
            rc = cfg.cycle_damping * np.cos(cfg.cycle_frequency)
            rs = cfg.cycle_damping * np.sin(cfg.cycle_frequency)
            k = w[1:] - rc * w[:-1] - rs * ws[:-1]
            ks = ws[1:] + rs * w[:-1] - rc * ws[:-1]
            out[("cycle", i)] = (float(k @ k + ks @ ks), 2 * (n - 1))
    return out


def draw_component_covariances(alpha_path: np.ndarray, spec: ModelSpec,
                               priors: PriorSet,
                               rng: np.random.Generator) -> ComponentCovariances:
    """Inverse-gamma draws for every diagonal component variance."""
    residuals = component_residuals(alpha_path, spec)
    values = {u: {} for u in statespace.COMPONENTS}
    for (u, i), (ss_sum, count) in residuals.items():
        w = priors.component_weight[u]
        W = _scale_for(priors, u, i)
        values[u][i] = _draw_inv_gamma(rng, (w + count) / 2.0, (W + ss_sum) / 2.0)
    return ComponentCovariances.from_dict(spec.m, values)


def initialize_chain(spec: ModelSpec, priors: PriorSet, rng: np.random.Generator):
    """Starting point: prior-centered variances, Bernoulli(pi) bits, zero
    coefficients, prior-mean observation covariance."""
    theta = _theta_prior_point(spec, priors)
    gamma = [np.asarray(rng.random(p.size) < np.asarray(p), dtype=int)
             for p in priors.pi]
    beta = np.zeros(int(sum(p.size for p in priors.pi)))
    m = priors.V0.shape[0]
    sigma_eps = priors.V0 / (priors.v0 - m - 1)
    return theta, gamma, beta, sigma_eps


def _run_chain(Y, X_blocks, spec, priors, cfg, rng, chain_id, init=None):
    n, m = Y.shape
    d = spec.state_dim()
    design = RegressionData(np.zeros((n, m)), X_blocks)   # reused for fitted()
    if init is None:
        theta, gamma, beta, sigma_eps = initialize_chain(spec, priors, rng)
    else:
        theta, gamma, beta, sigma_eps = init
    kept = cfg.total_draws - cfg.burn_in
    rec_alpha = np.zeros((kept, n, d))
    rec_theta = {u: np.full((kept, m), np.nan) for u in statespace.COMPONENTS}
    rec_gamma = np.zeros((kept, design.K), dtype=int)
    rec_beta = np.zeros((kept, design.K))
    rec_sigma = np.zeros((kept, m, m))
    rec_flips = np.zeros(kept, dtype=int)

    prev_flat = regression.join_bits(gamma)
    for it in range(cfg.total_draws):
        if d > 0:
            try:
                ss = build_state_space(spec, theta)
                design.Y_star = np.zeros((n, m))
                y_adj = Y - design.fitted(beta)
                alpha = kalman.simulation_smoother(ss, sigma_eps, ss.Q, y_adj, rng)
            except Exception as exc:
                raise GibbsError(it, "state simulation", exc) from exc
            try:
                theta = draw_component_covariances(alpha, spec, priors, rng)
            except Exception as exc:
                raise GibbsError(it, "component covariances", exc) from exc
            y_star = Y - statespace.state_contribution(ss, alpha)
        else:
            alpha = np.zeros((n, 0))
            y_star = Y
        data = RegressionData(y_star, X_blocks)
        try:
            stats = SufficientStats(data, sigma_eps)
            gamma = regression.draw_gamma(gamma, sigma_eps, data, priors, rng, stats)
        except Exception as exc:
            raise GibbsError(it, "inclusion sweep", exc) from exc
        try:
            beta = regression.draw_beta_from_stats(stats, gamma, priors, rng)
        except Exception as exc:
            raise GibbsError(it, "coefficient draw", exc) from exc
        try:
            sigma_eps = regression.draw_sigma_eps(data, beta, gamma, priors, rng)
        except Exception as exc:
            raise GibbsError(it, "observation covariance", exc) from exc

        flat = regression.join_bits(gamma)
        flips = int(np.sum(flat != prev_flat))
        prev_flat = flat
        if it >= cfg.burn_in:
            r = it - cfg.burn_in
            rec_alpha[r] = alpha
            for u in statespace.COMPONENTS:
                rec_theta[u][r] = theta.get(u)
            rec_gamma[r] = flat
            rec_beta[r] = beta
            rec_sigma[r] = sigma_eps
            rec_flips[r] = flips
    return (rec_alpha, rec_theta, rec_gamma, rec_beta, rec_sigma, rec_flips,
            np.full(kept, chain_id, dtype=int))


def train(Y, X_blocks, spec: ModelSpec, priors: PriorSet,
          cfg: TrainConfig, init=None) -> PosteriorDraws:
    """Run the sampler and return retained draws (burn-in discarded).

    ``init`` optionally warm-starts every chain from a
    (theta, gamma, beta, sigma_eps) tuple instead of the prior."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] == 0:
        raise ValueError("Y is empty")
    if Y.shape[1] != spec.m:
        raise ValueError(f"Y has {Y.shape[1]} series, spec declares {spec.m}")
    for i, (cfg_i, k_i) in enumerate(zip(spec.per_series, spec.predictor_counts)):
        if cfg_i.state_dim() == 0 and k_i == 0:
            raise ValueError(f"series {i} has neither components nor predictors")
    streams = [np.random.Generator(np.random.Philox(s))
               for s in np.random.SeedSequence(cfg.seed).spawn(cfg.chains)]
    parts = [_run_chain(Y, X_blocks, spec, priors, cfg, rng, c, init=init)
             for c, rng in enumerate(streams)]
    return PosteriorDraws(
        alpha=np.concatenate([p[0] for p in parts]),
        theta={u: np.concatenate([p[1][u] for p in parts])
               for u in statespace.COMPONENTS},
        gamma=np.concatenate([p[2] for p in parts]),
        beta=np.concatenate([p[3] for p in parts]),
        sigma_eps=np.concatenate([p[4] for p in parts]),
        flip_counts=np.concatenate([p[5] for p in parts]),
        chain_id=np.concatenate([p[6] for p in parts]),
        spec=spec, config=cfg,
    )


# --- draw-store serialization -------------------------------------------

def _format_matrix(a: np.ndarray) -> str:
    rows = []
    for row in np.atleast_2d(a):
        rows.append(",".join(repr(float(v)) for v in row))
    return "\n".join(rows) + "\n"


def _parse_matrix(text: str) -> np.ndarray:
    rows = [line.split(",") for line in text.strip().splitlines() if line]
    return np.array([[float(v) for v in r] for r in rows])


def spec_to_dict(spec: ModelSpec) -> dict:
    return {
        "per_series": [
            {"has_trend": c.has_trend, "has_slope": c.has_slope,
             "slope_learning_rate": c.slope_learning_rate,
             "long_term_slope": c.long_term_slope,
             "seasonal_period": c.seasonal_period,
             "cycle_frequency": c.cycle_frequency,
             "cycle_damping": c.cycle_damping}
            for c in spec.per_series],
        "predictor_counts": list(spec.predictor_counts),
        "initial_state_variance": spec.initial_state_variance,
    }


def spec_from_dict(payload: dict) -> ModelSpec:
    return ModelSpec(
        per_series=[statespace.ComponentConfig(**c) for c in payload["per_series"]],
        predictor_counts=payload["predictor_counts"],
        initial_state_variance=payload.get("initial_state_variance",
                                           statespace.DEFAULT_DIFFUSE_VARIANCE),
    )


def config_hash(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def save_draws(draws: PosteriorDraws, path) -> None:
    """Write one flat column file per parameter group plus a manifest."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    r, n, d = draws.alpha.shape
    m = draws.sigma_eps.shape[1]
    groups = {
        "alpha": draws.alpha.reshape(r * n, d) if d else np.zeros((0, 1)),
        "gamma": draws.gamma,
        "beta": draws.beta,
        "sigma_eps": draws.sigma_eps.reshape(r, m * m),
        "flip_counts": draws.flip_counts.reshape(-1, 1),
        "chain_id": draws.chain_id.reshape(-1, 1),
    }
    for u in statespace.COMPONENTS:
        groups[f"theta_{u}"] = draws.theta[u]
    for name, arr in groups.items():
        (path / f"{name}.csv").write_text(_format_matrix(np.asarray(arr, dtype=float)))
    manifest = {
        "dims": {"draws": r, "n": n, "d": d, "m": m, "K": int(draws.beta.shape[1])},
        "seed": draws.config.seed,
        "train_config": draws.config.to_dict(),
        "spec": spec_to_dict(draws.spec),
        "config_hash": config_hash({"train": draws.config.to_dict(),
                                    "spec": spec_to_dict(draws.spec)}),
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_draws(path) -> PosteriorDraws:
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    dims = manifest["dims"]
    r, n, d, m = dims["draws"], dims["n"], dims["d"], dims["m"]
    read = lambda name: _parse_matrix((path / f"{name}.csv").read_text())
    alpha = (read("alpha").reshape(r, n, d) if d else np.zeros((r, n, 0)))
    theta = {u: read(f"theta_{u}").reshape(r, m) for u in statespace.COMPONENTS}
    return PosteriorDraws(
        alpha=alpha,
        theta=theta,
        gamma=read("gamma").astype(int).reshape(r, dims["K"]),
        beta=read("beta").reshape(r, dims["K"]),
        sigma_eps=read("sigma_eps").reshape(r, m, m),
        flip_counts=read("flip_counts").astype(int).ravel(),
        chain_id=read("chain_id").astype(int).ravel(),
        spec=spec_from_dict(manifest["spec"]),
        config=TrainConfig(**manifest["train_config"]),
    )
