"""Spike-and-slab regression conditionals for the multivariate model.

Targets enter with the structural components already subtracted; the
stacked block-diagonal design is whitened by the inverse square root of
the observation covariance so the coefficient and inclusion draws reduce
to conjugate Gaussian algebra.  The SSVS inclusion sweep scores each
coordinate with the coefficients integrated out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .statespace import COMPONENTS

DEFAULT_KAPPA = 1.0
DEFAULT_OMEGA = 0.5
DEFAULT_COMPONENT_PRIOR_WEIGHT = 0.01
DEFAULT_COMPONENT_PRIOR_SCALE = 0.01


class SingularDesignError(ValueError):
    """A selected design block cannot produce a proper slab prior."""


@dataclass
class PriorSet:
    """Spike, slab, observation-covariance and component priors."""

    pi: list                      # per-series arrays of inclusion probabilities
    b: np.ndarray                 # prior coefficient mean, length K
    kappa: float
    omega: float
    v0: float
    V0: np.ndarray                # m x m
    component_weight: dict = field(default_factory=dict)   # u -> w_u
    component_scale: dict = field(default_factory=dict)    # u -> per-series W_u

    def __post_init__(self):
        m = self.V0.shape[0]
        if self.v0 <= m + 1:
            raise ValueError(f"v0 must exceed m+1 = {m + 1}, got {self.v0}")
        if not 0.0 < self.omega <= 1.0:
            raise ValueError("omega must lie in (0, 1]")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        for arr in self.pi:
            a = np.asarray(arr, dtype=float)
            if ((a < 0) | (a > 1)).any():
                raise ValueError("inclusion probabilities must lie in [0, 1]")
        for u in COMPONENTS:
            self.component_weight.setdefault(u, DEFAULT_COMPONENT_PRIOR_WEIGHT)
            self.component_scale.setdefault(u, DEFAULT_COMPONENT_PRIOR_SCALE)

    @property
    def pi_flat(self) -> np.ndarray:
        return np.concatenate([np.asarray(p, dtype=float) for p in self.pi])


@dataclass
class RegressionData:
    """Component-adjusted targets and per-series predictor blocks."""

    Y_star: np.ndarray            # n x m
    X_blocks: list                # X_i of shape n x k_i

    def __post_init__(self):
        self.Y_star = np.atleast_2d(np.asarray(self.Y_star, dtype=float))
        self.X_blocks = [np.asarray(x, dtype=float).reshape(self.Y_star.shape[0], -1)
                         for x in self.X_blocks]
        if len(self.X_blocks) != self.Y_star.shape[1]:
            raise ValueError("one predictor block per target series is required")

    @property
    def n(self) -> int:
        return self.Y_star.shape[0]

    @property
    def m(self) -> int:
        return self.Y_star.shape[1]

    @property
    def predictor_counts(self) -> tuple:
        return tuple(x.shape[1] for x in self.X_blocks)

    @property
    def K(self) -> int:
        return sum(self.predictor_counts)

    def block_offsets(self):
        offs = np.concatenate([[0], np.cumsum(self.predictor_counts)])
        return offs

    def fitted(self, beta: np.ndarray) -> np.ndarray:
        """Per-series regression contribution X_i beta_i, shape (n, m)."""
        offs = self.block_offsets()
        out = np.zeros((self.n, self.m))
        for i, X in enumerate(self.X_blocks):
            out[:, i] = X @ beta[offs[i]:offs[i + 1]]
        return out


def split_bits(flat: np.ndarray, predictor_counts) -> list:
    offs = np.concatenate([[0], np.cumsum(predictor_counts)])
    return [np.asarray(flat[offs[i]:offs[i + 1]], dtype=int)
            for i in range(len(predictor_counts))]


def join_bits(bits) -> np.ndarray:
    return np.concatenate([np.asarray(b, dtype=int) for b in bits])


def elicit_priors(expected_model_sizes, predictor_counts, expected_r2, v0,
                  Sigma_y, kappa=DEFAULT_KAPPA, omega=DEFAULT_OMEGA,
                  b=None, component_weight=None, component_scale=None) -> PriorSet:
    """Turn expected model sizes and an expected R^2 into a full prior.

    pi_ij = q_i / k_i and V0 = (v0 - m - 1)(1 - R^2) Sigma_y; the prior
    coefficient mean defaults to zero.
    """
    Sigma_y = np.atleast_2d(np.asarray(Sigma_y, dtype=float))
    m = Sigma_y.shape[0]
    if not 0.0 < expected_r2 < 1.0:
        raise ValueError("expected R^2 must lie in (0, 1)")
    if len(expected_model_sizes) != len(predictor_counts):
        raise ValueError("one expected model size per series is required")
    pi = []
    for q_i, k_i in zip(expected_model_sizes, predictor_counts):
        if q_i > k_i:
            raise ValueError(f"expected model size {q_i} exceeds pool size {k_i}")
        pi.append(np.full(k_i, q_i / k_i if k_i else 0.0))
    K = int(sum(predictor_counts))
    b = np.zeros(K) if b is None else np.asarray(b, dtype=float)
    V0 = (v0 - m - 1) * (1.0 - expected_r2) * Sigma_y
    return PriorSet(pi=pi, b=b, kappa=kappa, omega=omega, v0=v0, V0=V0,
                    component_weight=dict(component_weight or {}),
                    component_scale=dict(component_scale or {}))


def _try_cholesky(a):
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return None


def _slab_from_gram(gram: np.ndarray, kappa: float, omega: float, n: int,
                    columns=None) -> np.ndarray:
    """Slab information matrix from the (unwhitened) Gram of the selected
    columns, with the diagonal-shrinkage fallback when the Gram is
    singular."""
    k = gram.shape[0]
    if k == 0:
        return np.zeros((0, 0))
    A = kappa * gram / n
    if _try_cholesky(A) is not None:
        return A
    A = kappa * (omega * gram + (1.0 - omega) * np.diag(np.diag(gram))) / n
    if _try_cholesky(A) is not None:
        return A
    labels = columns if columns is not None else list(range(k))
    dead = [str(labels[i]) for i in range(k) if gram[i, i] <= 0]
    what = f"zero columns {dead}" if dead else "collinear columns"
    raise SingularDesignError(f"slab information matrix is singular: {what}")


def slab_information_matrix(X_gamma: np.ndarray, kappa: float, omega: float,
                            n: int) -> np.ndarray:
    X_gamma = np.asarray(X_gamma, dtype=float)
    if X_gamma.ndim != 2:
        raise ValueError("X_gamma must be a matrix")
    return _slab_from_gram(X_gamma.T @ X_gamma, kappa, omega, n)


def whiten(data: RegressionData, Sigma_eps: np.ndarray):
    """Stack and whiten: returns (Y_hat of length nm, X_hat of nm x K).

    The whitener is the inverse transpose of the upper Cholesky factor of
    Sigma_eps, applied blockwise across series so the Kronecker product
    is never materialized.
    """
    Sigma_eps = np.atleast_2d(np.asarray(Sigma_eps, dtype=float))
    L = _try_cholesky(Sigma_eps)
    if L is None:
        raise ValueError("Sigma_eps is not positive definite")
    W = solve_triangular(L, np.eye(data.m), lower=True)   # (U^{-1})^T
    n, m, K = data.n, data.m, data.K
    offs = data.block_offsets()
    Y_hat = np.zeros(n * m)
    X_hat = np.zeros((n * m, K))
    for i in range(m):
        for j in range(m):
            w = W[i, j]
            if w == 0.0:
                continue
            Y_hat[i * n:(i + 1) * n] += w * data.Y_star[:, j]
            X_hat[i * n:(i + 1) * n, offs[j]:offs[j + 1]] += w * data.X_blocks[j]
    return Y_hat, X_hat


def unwhiten(Y_hat: np.ndarray, Sigma_eps: np.ndarray, n: int) -> np.ndarray:
    """Inverse of the target-side whitening; returns the (n, m) matrix."""
    Sigma_eps = np.atleast_2d(np.asarray(Sigma_eps, dtype=float))
    m = Sigma_eps.shape[0]
    L = np.linalg.cholesky(Sigma_eps)
    stacked = Y_hat.reshape(m, n)
    return (L @ stacked).T


class SufficientStats:
    """Gram-matrix cache for one (Y_star, Sigma_eps) conditioning state.

    Everything the SSVS scores and the coefficient draw need reduces to
    submatrices of these K x K arrays, so a full sweep never rebuilds the
    stacked design.
    """

    def __init__(self, data: RegressionData, Sigma_eps: np.ndarray):
        Sigma_eps = np.atleast_2d(np.asarray(Sigma_eps, dtype=float))
        L = _try_cholesky(Sigma_eps)
        if L is None:
            raise ValueError("Sigma_eps is not positive definite")
        Sig_inv = solve_triangular(
            L, solve_triangular(L, np.eye(data.m), lower=True),
            lower=True, trans="T")
        K = data.K
        offs = data.block_offsets()
        self.n = data.n
        self.offsets = offs
        self.xtx_hat = np.zeros((K, K))
        self.xty_hat = np.zeros(K)
        self.prior_gram = np.zeros((K, K))
        for a, Xa in enumerate(data.X_blocks):
            sa = slice(offs[a], offs[a + 1])
            self.prior_gram[sa, sa] = Xa.T @ Xa
            self.xty_hat[sa] = Xa.T @ (data.Y_star @ Sig_inv[:, a])
            for c, Xc in enumerate(data.X_blocks):
                sc = slice(offs[c], offs[c + 1])
                self.xtx_hat[sa, sc] = Sig_inv[a, c] * (Xa.T @ Xc)


def log_prior_gamma(flat_gamma: np.ndarray, pi_flat: np.ndarray) -> float:
    """Independent-Bernoulli log prior; pinned coordinates contribute 0 or
    -inf."""
    total = 0.0
    for g, p in zip(flat_gamma, pi_flat):
        if g:
            if p == 0.0:
                return -np.inf
            total += np.log(p)
        else:
            if p == 1.0:
                return -np.inf
            total += np.log1p(-p)
    return total


def _score_from_stats(flat_gamma, stats: SufficientStats, priors: PriorSet) -> float:
    idx = np.flatnonzero(flat_gamma)
    lp = log_prior_gamma(flat_gamma, priors.pi_flat)
    if idx.size == 0 or not np.isfinite(lp):
        return lp
    A = _slab_from_gram(stats.prior_gram[np.ix_(idx, idx)],
                        priors.kappa, priors.omega, stats.n, columns=idx)
    prec = stats.xtx_hat[np.ix_(idx, idx)] + A
    L_A = np.linalg.cholesky(A)
    L_p = _try_cholesky(prec)
    if L_p is None:
        raise SingularDesignError("posterior precision is not positive definite")
    b_g = priors.b[idx]
    z = stats.xty_hat[idx] + A @ b_g
    half = solve_triangular(L_p, z, lower=True)
    quad = b_g @ (A @ b_g) - half @ half
    logdet_A = 2.0 * np.log(np.diag(L_A)).sum()
    logdet_p = 2.0 * np.log(np.diag(L_p)).sum()
    return 0.5 * logdet_A - 0.5 * logdet_p + lp - 0.5 * quad


def gamma_log_score(gamma, Sigma_eps, data: RegressionData, priors: PriorSet,
                    stats: SufficientStats | None = None) -> float:
    """Log of the unnormalized inclusion-vector conditional given the
    observation covariance (coefficients integrated out)."""
    if stats is None:
        stats = SufficientStats(data, Sigma_eps)
    flat = join_bits(gamma) if isinstance(gamma, (list, tuple)) else np.asarray(gamma, int)
    return _score_from_stats(flat, stats, priors)


def draw_gamma(gamma_current, Sigma_eps, data: RegressionData, priors: PriorSet,
               rng: np.random.Generator, stats: SufficientStats | None = None):
    """One full SSVS sweep in a freshly shuffled coordinate order.

    Returns per-series bit arrays.  Coordinates with pi in {0, 1} are
    pinned without scoring.
    """
    if stats is None:
        stats = SufficientStats(data, Sigma_eps)
    flat = (join_bits(gamma_current) if isinstance(gamma_current, (list, tuple))
            else np.asarray(gamma_current, int).copy())
    flat = flat.copy()
    pi = priors.pi_flat
    flat[pi == 0.0] = 0
    flat[pi == 1.0] = 1
    free = np.flatnonzero((pi > 0.0) & (pi < 1.0))
    for j in rng.permutation(free):
        flat[j] = 1
        s1 = _score_from_stats(flat, stats, priors)
        flat[j] = 0
        s0 = _score_from_stats(flat, stats, priors)
        # Bernoulli on the normalized pair, computed stably in log space
        p1 = 1.0 / (1.0 + np.exp(np.clip(s0 - s1, -700, 700)))
        flat[j] = 1 if rng.random() < p1 else 0
    return split_bits(flat, data.predictor_counts)


def _gaussian_coefficient_draw(idx, gram_hat, xty_hat, prior_gram, n_time,
                               priors: PriorSet, rng: np.random.Generator,
                               K: int) -> np.ndarray:
    beta = np.zeros(K)
    if idx.size == 0:
        return beta
    A = _slab_from_gram(prior_gram, priors.kappa, priors.omega, n_time,
                        columns=idx)
    prec = gram_hat + A
    L = _try_cholesky(prec)
    if L is None:
        raise SingularDesignError("posterior precision is not positive definite")
    rhs = xty_hat + A @ priors.b[idx]
    mean = solve_triangular(L.T, solve_triangular(L, rhs, lower=True), lower=False)
    noise = solve_triangular(L.T, rng.standard_normal(idx.size), lower=False)
    beta[idx] = mean + noise
    return beta


def draw_beta(Y_hat: np.ndarray, X_hat: np.ndarray, gamma, priors: PriorSet,
              rng: np.random.Generator, prior_gram: np.ndarray | None = None,
              n_time: int | None = None) -> np.ndarray:
    """Gaussian coefficient draw on the support of gamma, zeros elsewhere.

    ``prior_gram`` is the full unwhitened X'X backing the slab
    information matrix (defaults to the whitened Gram, exact when
    Sigma_eps = I); ``n_time`` is the number of time rows (defaults to
    the stacked row count, exact for a single series).
    """
    flat = join_bits(gamma) if isinstance(gamma, (list, tuple)) else np.asarray(gamma, int)
    idx = np.flatnonzero(flat)
    Xg = X_hat[:, idx]
    gram_prior = (prior_gram[np.ix_(idx, idx)] if prior_gram is not None
                  else Xg.T @ Xg)
    if n_time is None:
        n_time = X_hat.shape[0]
    return _gaussian_coefficient_draw(idx, Xg.T @ Xg, Xg.T @ Y_hat, gram_prior,
                                      n_time, priors, rng, flat.size)


def draw_beta_from_stats(stats: SufficientStats, gamma, priors: PriorSet,
                         rng: np.random.Generator) -> np.ndarray:
    """Coefficient draw using cached Gram matrices (Gibbs inner loop)."""
    flat = join_bits(gamma) if isinstance(gamma, (list, tuple)) else np.asarray(gamma, int)
    idx = np.flatnonzero(flat)
    return _gaussian_coefficient_draw(
        idx, stats.xtx_hat[np.ix_(idx, idx)], stats.xty_hat[idx],
        stats.prior_gram[np.ix_(idx, idx)], stats.n, priors, rng, flat.size)


def draw_inverse_wishart(rng: np.random.Generator, df: float,
                         scale: np.ndarray) -> np.ndarray:
    """IW(df, scale) via the Bartlett decomposition of the inverse."""
    scale = np.atleast_2d(np.asarray(scale, dtype=float))
    m = scale.shape[0]
    if df <= m - 1:
        raise ValueError("degrees of freedom too small for inverse Wishart")
    L = _try_cholesky(scale)
    if L is None:
        raise ValueError("inverse Wishart scale is not positive definite")
    A = np.zeros((m, m))
    for i in range(m):
        A[i, i] = np.sqrt(rng.chisquare(df - i))
        for j in range(i):
            A[i, j] = rng.standard_normal()
    # Sigma^{-1} = L^{-T} (A A^T) L^{-1} ~ Wishart(df, scale^{-1}),
    # hence Sigma = (A^{-1} L^T)^T (A^{-1} L^T) ~ IW(df, scale).
    half = solve_triangular(A, L.T, lower=True)
    sigma = half.T @ half
    return 0.5 * (sigma + sigma.T)


def draw_sigma_eps(data: RegressionData, beta: np.ndarray, gamma,
                   priors: PriorSet, rng: np.random.Generator) -> np.ndarray:
    """Observation-covariance draw: IW(v0 + n, E'E + V0)."""
    flat = join_bits(gamma) if isinstance(gamma, (list, tuple)) else np.asarray(gamma, int)
    if np.any((flat == 0) & (beta != 0.0)):
        raise ValueError("beta has nonzero entries outside the gamma support")
    E = data.Y_star - data.fitted(beta)
    scale = E.T @ E + priors.V0
    scale = 0.5 * (scale + scale.T)
    if _try_cholesky(scale) is None:
        raise ValueError("posterior scale matrix is not positive definite")
    return draw_inverse_wishart(rng, priors.v0 + data.n, scale)
