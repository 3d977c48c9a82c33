"""Convergence diagnostics: potential scale reduction and effective sample size."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError


def gelman_rubin(chains) -> float:
    """Potential scale reduction factor of a (n_chains, n_iter) array.

    Uses the classic between/within variance ratio.  Values below 1 caused
    by sampling noise are reported as 1.  Chains that are each constant
    return 1 when they agree and ``inf`` when they do not.
    """
    x = np.asarray(chains, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise InvalidInputError("gelman_rubin needs at least two chains as a 2-D array")
    n = x.shape[1]
    if n < 2:
        raise InvalidInputError("chains must have at least two iterations")
    means = x.mean(axis=1)
    W = x.var(axis=1, ddof=1).mean()
    B = n * means.var(ddof=1)
    if W == 0:
        return 1.0 if B == 0 else float("inf")
    var_plus = (n - 1) / n * W + B / n
    return float(max(1.0, np.sqrt(var_plus / W)))


def _autocov(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance of each row of ``x`` via FFT."""
    n = x.shape[-1]
    xc = x - x.mean(axis=-1, keepdims=True)
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, n=nfft, axis=-1)
    return np.fft.irfft(f * np.conj(f), n=nfft, axis=-1)[..., :n] / n


def effective_sample_size(series) -> float:
    """Effective sample size of a scalar quantity.

    ``series`` is either 1-D (one stream) or (n_chains, n_iter).  Chains are
    pooled through the multi-chain autocorrelation estimate and the sum of
    autocorrelations is truncated with Geyer's initial positive sequence,
    made monotone.  The result lies in (0, S]; a constant series returns S.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise InvalidInputError("series must be 1-D or (chains, iterations)")
    return float(ess_many(x[:, :, None])[0])


def ess_many(x, chunk: int = 256) -> np.ndarray:
    """Vectorized :func:`effective_sample_size` over the last axis of (C, T, P)."""
    x = np.asarray(x, dtype=float)
    m, n, P = x.shape
    if n < 4:
        raise InvalidInputError("effective_sample_size needs at least 4 draws per chain")
    out = np.empty(P)
    for start in range(0, P, chunk):
        out[start : start + chunk] = _ess_block(x[:, :, start : start + chunk])
    return out


def _ess_block(x):
    m, n, P = x.shape
    S = m * n
    acov = _autocov(np.moveaxis(x, 1, 2))  # (C, P, n)
    W = acov[:, :, 0].mean(axis=0) * n / (n - 1)
    var_plus = W * (n - 1) / n
    if m > 1:
        var_plus = var_plus + x.mean(axis=1).var(axis=0, ddof=1)
    const = ~(W > 0) | ~np.isfinite(W)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = 1.0 - (W[:, None] - acov.mean(axis=0)) / var_plus[:, None]  # (P, n)
    rho[:, 0] = 1.0
    n_pairs = n // 2
    pairs = rho[:, : 2 * n_pairs].reshape(P, n_pairs, 2).sum(axis=2)
    positive = np.cumprod(pairs > 0, axis=1).astype(bool)
    pairs = np.where(positive, pairs, np.inf)
    pairs = np.minimum.accumulate(pairs, axis=1)
    pairs = np.where(positive, pairs, 0.0)
    tau = -1.0 + 2.0 * pairs.sum(axis=1)
    tau = np.maximum(tau, 1.0 / np.log10(S)) if S > 1 else tau
    ess = np.minimum(S / tau, S)
    return np.where(const, float(S), ess)
