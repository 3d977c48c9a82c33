"""Pareto-smoothed importance sampling for leave-one-out predictive densities."""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidInputError, NonFiniteError


def gpd_fit_pwm(x: np.ndarray) -> tuple[float, float]:
    """Generalized Pareto (shape k, scale sigma) from probability-weighted moments.

    ``x`` are positive exceedances sorted ascending.  Positive ``k`` means a
    heavy tail.  Uses plotting positions (i - 0.35) / n.
    """
    n = x.size
    p = (np.arange(1, n + 1) - 0.35) / n
    a0 = x.mean()
    a1 = np.mean((1.0 - p) * x)
    denom = a0 - 2.0 * a1
    if denom <= 0:
        return math.inf, math.nan
    k = 2.0 - a0 / denom
    sigma = 2.0 * a0 * a1 / denom
    return float(k), float(sigma)


def gpd_fit_zhang(x: np.ndarray, prior_k: bool = True) -> tuple[float, float]:
    """Empirical-Bayes GPD fit of Zhang and Stephens, as used by PSIS.

    Returns (k, sigma) with the same sign convention as :func:`gpd_fit_pwm`.
    With ``prior_k`` the shape is shrunk towards 0.5 by a weak prior.
    """
    n = x.size
    m = 30 + int(np.sqrt(n))
    prior = 3.0
    quart = x[int(n / 4 + 0.5) - 1]
    b = 1.0 - np.sqrt(m / (np.arange(1, m + 1) - 0.5))
    b = b / (prior * quart) + 1.0 / x[-1]
    k_b = np.log1p(-b[:, None] * x).mean(axis=1)
    L = n * (np.log(-b / k_b) - k_b - 1.0)
    w = np.exp(L - logsumexp(L))
    b_hat = float(np.sum(b * w))
    k = float(np.log1p(-b_hat * x).mean())
    sigma = -k / b_hat
    if prior_k:
        k = (n * k + 10 * 0.5) / (n + 10)
    return float(k), float(sigma)


def gpd_quantile(p, k: float, sigma: float):
    p = np.asarray(p, dtype=float)
    if abs(k) < 1e-12:
        return -sigma * np.log1p(-p)
    return sigma * np.expm1(-k * np.log1p(-p)) / k


def tail_length(S: int) -> int:
    return int(math.ceil(min(0.2 * S, 3.0 * math.sqrt(S))))


def psis_smooth(log_ratios: np.ndarray, method: str = "pwm") -> tuple[np.ndarray, float]:
    """Smooth one vector of log importance ratios.

    Returns normalized log weights and the fitted Pareto shape k-hat.
    The largest ``tail_length(S)`` ratios are replaced by expected order
    statistics of the fitted tail, truncated at the largest raw ratio.
    """
    lw = np.asarray(log_ratios, dtype=float).copy()
    if not np.all(np.isfinite(lw)):
        raise NonFiniteError("importance ratios must be finite")
    S = lw.size
    lw -= lw.max()
    M = tail_length(S)
    k = math.inf
    if M >= 5 and S > M + 1:
        order = np.argsort(lw, kind="stable")
        tail_idx = order[-M:]
        cutoff = lw[order[-M - 1]]
        tail = np.exp(lw[tail_idx])
        exc = tail - math.exp(cutoff)
        if np.all(exc <= 0):
            k = -math.inf
        else:
            fit = gpd_fit_zhang if method == "zhang" else gpd_fit_pwm
            if method not in ("pwm", "zhang"):
                raise InvalidInputError(f"unknown Pareto fit {method!r}")
            k, sigma = fit(np.sort(exc))
            if np.isfinite(k) and np.isfinite(sigma) and sigma > 0:
                probs = (np.arange(1, M + 1) - 0.5) / M
                smoothed = math.exp(cutoff) + gpd_quantile(probs, k, sigma)
                smoothed = np.minimum(smoothed, 1.0)  # largest raw ratio is exp(0)
                lw[tail_idx] = np.log(smoothed)
    lw -= logsumexp(lw)
    return lw, float(k)


def psis_loo_points(L: np.ndarray, method: str = "pwm", r_eff=None):
    """Leave-one-out log predictive density per point from an (S, P) matrix.

    Returns (elpd_i, k_hat, mcse_i) arrays.  ``mcse_i`` is a delta-method
    Monte Carlo standard error of elpd_i, inflated by ``1 / r_eff`` (relative
    efficiency of exp(L) draws) when given.
    """
    L = np.asarray(L, dtype=float)
    S, P = L.shape
    elpd = np.empty(P)
    khat = np.empty(P)
    mcse = np.empty(P)
    r_eff = np.ones(P) if r_eff is None else np.broadcast_to(r_eff, (P,))
    for p in range(P):
        col = L[:, p]
        if not np.all(np.isfinite(col)):
            raise NonFiniteError(f"point {p}: non-finite log-likelihood draws")
        lw, khat[p] = psis_smooth(-col, method)
        elpd[p] = logsumexp(lw + col)
        w = np.exp(lw)
        e = np.exp(col - elpd[p])  # densities relative to their weighted mean
        var = np.sum(w * w * (e - 1.0) ** 2)
        mcse[p] = np.sqrt(var / r_eff[p])
    bad = np.flatnonzero(khat > 0.7)
    if bad.size:
        warnings.warn(
            f"Pareto k-hat > 0.7 for {bad.size} point(s) (first: {bad[:5].tolist()}); "
            "importance-sampling estimates may be unreliable",
            RuntimeWarning,
            stacklevel=2,
        )
    return elpd, khat, mcse
