"""Gaussian filtering, smoothing and posterior state simulation.

The observation model is y_t = Z' a_t + e_t with e_t ~ N(0, Sigma_eps);
the first state carries the initial prior N(mu0, Sigma0) directly and
transitions a_{t+1} = T a_t + intercept + R eta_t apply between
observations.  Inputs must already have the regression contribution
subtracted.  Hot loops are numba-compiled; covariance updates use the
Joseph form and are re-symmetrized every step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .statespace import StateSpaceSystem

MAX_RELATIVE_ASYMMETRY = 1e-10
_JITTER_SCALE = 1e-10
_MAX_JITTER_ESCALATIONS = 3


class NumericalError(RuntimeError):
    """Raised when a covariance cannot be factorized even with jitter."""


@dataclass
class FilterResult:
    predicted_means: np.ndarray   # (n, d)
    predicted_covs: np.ndarray    # (n, d, d)
    filtered_means: np.ndarray    # (n, d)
    filtered_covs: np.ndarray     # (n, d, d)
    log_likelihood: float


@njit(cache=True)
def _chol(a):
    """Lower Cholesky with a success flag instead of an exception."""
    n = a.shape[0]
    L = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s = a[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                if s <= 0.0:
                    return L, False
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    return L, True


@njit(cache=True)
def _chol_jittered(a):
    """Cholesky with escalating diagonal jitter (scaled by trace/m)."""
    m = a.shape[0]
    L, ok = _chol(a)
    if ok:
        return L, True
    tr = 0.0
    for i in range(m):
        tr += a[i, i]
    base = _JITTER_SCALE * max(tr / m, 1.0)
    work = a.copy()
    for _ in range(_MAX_JITTER_ESCALATIONS):
        for i in range(m):
            work[i, i] += base
        L, ok = _chol(work)
        if ok:
            return L, True
        base *= 10.0
    return L, False


@njit(cache=True)
def _chol_solve(L, b):
    """Solve (L L') x = b for a matrix right-hand side."""
    n = L.shape[0]
    k = b.shape[1]
    x = b.copy()
    for col in range(k):
        for i in range(n):
            s = x[i, col]
            for j in range(i):
                s -= L[i, j] * x[j, col]
            x[i, col] = s / L[i, i]
        for i in range(n - 1, -1, -1):
            s = x[i, col]
            for j in range(i + 1, n):
                s -= L[j, i] * x[j, col]
            x[i, col] = s / L[i, i]
    return x


@njit(cache=True)
def _symmetrize(p):
    """Symmetrize in place; returns the relative asymmetry removed."""
    n = p.shape[0]
    worst = 0.0
    scale = 1.0
    for i in range(n):
        for j in range(n):
            if abs(p[i, j]) > scale:
                scale = abs(p[i, j])
    for i in range(n):
        for j in range(i + 1, n):
            diff = abs(p[i, j] - p[j, i])
            if diff / scale > worst:
                worst = diff / scale
            avg = 0.5 * (p[i, j] + p[j, i])
            p[i, j] = avg
            p[j, i] = avg
    return worst


@njit(cache=True)
def _filter_core(Zt, T, intercept, RQR, H, Y, a0, P0):
    """Forward recursion. Returns (pred/filt moments, loglik, asym, ok)."""
    n = Y.shape[0]
    m = Y.shape[1]
    d = T.shape[0]
    pred_means = np.zeros((n, d))
    pred_covs = np.zeros((n, d, d))
    filt_means = np.zeros((n, d))
    filt_covs = np.zeros((n, d, d))
    loglik = 0.0
    max_asym = 0.0
    a = a0.copy()
    P = P0.copy()
    eye_d = np.eye(d)
    log2pi = 1.8378770664093453
    for t in range(n):
        pred_means[t] = a
        pred_covs[t] = P
        v = Y[t] - Zt @ a
        PZ = P @ Zt.T                      # d x m
        F = Zt @ PZ + H
        asym = _symmetrize(F)
        if asym > max_asym:
            max_asym = asym
        L, ok = _chol_jittered(F)
        if not ok:
            return pred_means, pred_covs, filt_means, filt_covs, 0.0, max_asym, False
        Finv_v = _chol_solve(L, v.reshape(m, 1))[:, 0]
        K = _chol_solve(L, PZ.T).T          # d x m
        af = a + K @ v
        IKZ = eye_d - K @ Zt
        Pf = IKZ @ P @ IKZ.T + K @ H @ K.T
        asym = _symmetrize(Pf)
        if asym > max_asym:
            max_asym = asym
        filt_means[t] = af
        filt_covs[t] = Pf
        logdet = 0.0
        quad = 0.0
        for i in range(m):
            logdet += 2.0 * np.log(L[i, i])
            quad += v[i] * Finv_v[i]
        loglik += -0.5 * (m * log2pi + logdet + quad)
        a = T @ af + intercept
        P = T @ Pf @ T.T + RQR
        asym = _symmetrize(P)
        if asym > max_asym:
            max_asym = asym
    return pred_means, pred_covs, filt_means, filt_covs, loglik, max_asym, True


@njit(cache=True)
def _rts_core(pred_means, pred_covs, filt_means, filt_covs, T):
    """Fixed-interval smoother; pinv handles degenerate predicted covs."""
    n = filt_means.shape[0]
    d = filt_means.shape[1]
    sm = np.zeros((n, d))
    sc = np.zeros((n, d, d))
    sm[n - 1] = filt_means[n - 1]
    sc[n - 1] = filt_covs[n - 1]
    for t in range(n - 2, -1, -1):
        Ppred = pred_covs[t + 1]
        J = filt_covs[t] @ T.T @ np.linalg.pinv(Ppred)
        sm[t] = filt_means[t] + J @ (sm[t + 1] - pred_means[t + 1])
        sc[t] = filt_covs[t] + J @ (sc[t + 1] - Ppred) @ J.T
        _symmetrize(sc[t])
    return sm, sc


def _validate_inputs(ss: StateSpaceSystem, Sigma_eps, Q, Y):
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    Sigma_eps = np.asarray(Sigma_eps, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if Y.size and Y.shape[1] != ss.m:
        raise ValueError(f"Y has {Y.shape[1]} columns, expected {ss.m}")
    if np.isnan(Y).any():
        raise ValueError("Y contains NaN; missing observations are not supported")
    if Sigma_eps.shape != (ss.m, ss.m):
        raise ValueError("Sigma_eps has wrong shape")
    _, ok = _chol(Sigma_eps)
    if not ok:
        raise NumericalError("Sigma_eps is not positive definite")
    if Q.shape != (ss.disturbance_dim, ss.disturbance_dim):
        raise ValueError("Q has wrong shape")
    return Sigma_eps, Q, Y


def kalman_filter(ss: StateSpaceSystem, Sigma_eps, Q, Y) -> FilterResult:
    """Exact Gaussian forward pass over regression-adjusted observations."""
    Sigma_eps, Q, Y = _validate_inputs(ss, Sigma_eps, Q, Y)
    n = Y.shape[0] if Y.size else 0
    d = ss.state_dim
    if n == 0:
        empty = np.zeros((0, d))
        empty_c = np.zeros((0, d, d))
        return FilterResult(empty, empty_c, empty.copy(), empty_c.copy(), 0.0)
    RQR = ss.R @ Q @ ss.R.T
    pm, pc, fm, fc, ll, asym, ok = _filter_core(
        np.ascontiguousarray(ss.Z.T), ss.T, ss.intercept, RQR, Sigma_eps,
        np.ascontiguousarray(Y), ss.initial_mean, ss.initial_cov)
    if not ok:
        raise NumericalError("innovation covariance not positive definite after jitter")
    if asym > MAX_RELATIVE_ASYMMETRY:
        raise NumericalError(f"covariance asymmetry {asym:.3e} exceeds tolerance")
    return FilterResult(pm, pc, fm, fc, float(ll))


def kalman_smoother(fr: FilterResult, ss: StateSpaceSystem):
    """Fixed-interval smoothed means and covariances, shape (n,d) / (n,d,d)."""
    n = fr.filtered_means.shape[0]
    if fr.predicted_means.shape[0] != n:
        raise ValueError("filter result has mismatched lengths")
    if n == 0:
        return fr.filtered_means.copy(), fr.filtered_covs.copy()
    return _rts_core(fr.predicted_means, fr.predicted_covs,
                     fr.filtered_means, fr.filtered_covs, ss.T)


def _smoothed_means(ss, Sigma_eps, Q, Y, initial_mean, intercept):
    """Smoothed state means for an override of (mu0, intercept)."""
    RQR = ss.R @ Q @ ss.R.T
    pm, pc, fm, fc, _, asym, ok = _filter_core(
        np.ascontiguousarray(ss.Z.T), ss.T, intercept, RQR, Sigma_eps,
        np.ascontiguousarray(Y), initial_mean, ss.initial_cov)
    if not ok:
        raise NumericalError("innovation covariance not positive definite after jitter")
    if asym > MAX_RELATIVE_ASYMMETRY:
        raise NumericalError(f"covariance asymmetry {asym:.3e} exceeds tolerance")
    sm, _ = _rts_core(pm, pc, fm, fc, ss.T)
    return sm


def simulate_unconditional(ss: StateSpaceSystem, Sigma_eps, Q, n: int,
                           rng: np.random.Generator):
    """Draw a state path and observations from the prior model."""
    d, q, m = ss.state_dim, ss.disturbance_dim, ss.m
    L0, ok = _chol_jittered(ss.initial_cov + 0.0)
    if not ok:
        raise NumericalError("initial covariance not factorizable")
    alpha = np.zeros((n, d))
    alpha[0] = ss.initial_mean + L0 @ rng.standard_normal(d)
    eta_sd = np.sqrt(np.diag(Q))
    for t in range(n - 1):
        eta = eta_sd * rng.standard_normal(q)
        alpha[t + 1] = ss.T @ alpha[t] + ss.intercept + ss.R @ eta
    Le = np.linalg.cholesky(Sigma_eps)
    eps = rng.standard_normal((n, m)) @ Le.T
    Y = alpha @ ss.Z + eps
    return alpha, Y


def simulation_smoother(ss: StateSpaceSystem, Sigma_eps, Q, Y,
                        rng: np.random.Generator) -> np.ndarray:
    """One draw from p(alpha | Y) by Durbin-Koopman mean correction.

    A pseudo path and pseudo data are simulated from the prior; smoothing
    the data difference with a zero-mean, zero-intercept copy of the
    system yields the correction A (Y - Y+), which is exact because the
    smoothed mean is affine in the observations.
    """
    Sigma_eps, Q, Y = _validate_inputs(ss, Sigma_eps, Q, Y)
    n = Y.shape[0]
    if n == 0:
        return np.zeros((0, ss.state_dim))
    alpha_plus, Y_plus = simulate_unconditional(ss, Sigma_eps, Q, n, rng)
    correction = _smoothed_means(ss, Sigma_eps, Q, Y - Y_plus,
                                 np.zeros(ss.state_dim),
                                 np.zeros(ss.state_dim))
    return alpha_plus + correction
