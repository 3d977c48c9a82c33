"""Monte Carlo errors of posterior means and variances.

For a posterior mean estimated from draws gamma_s the squared error is
var(gamma) / S_eff.  For a posterior variance, with
T_s = S/(S-1) (gamma_s - mean(gamma))^2 and v = mean(T), the squared error
is sum_s (T_s - v)^2 / (S_eff S).  ``S_eff`` defaults to the effective
sample size of ``gamma`` itself, pooled over chains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .sampler.diagnostics import ess_many


@dataclass(frozen=True)
class McErrorReport:
    estimate: float
    mcerr: float
    S: int
    S_eff: float


def _as_chains(series, chains: int):
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise InvalidInputError("series must be one-dimensional")
    if x.size % chains:
        raise InvalidInputError(f"{x.size} draws do not split into {chains} chains")
    return x


def _seff(x: np.ndarray, chains: int) -> float:
    S = x.size
    if S // chains < 4:
        return float(S)
    return float(ess_many(x.reshape(chains, -1, 1))[0])


def _check_seff(S_eff):
    if S_eff is not None and not S_eff > 0:
        raise InvalidInputError(f"S_eff must be positive, got {S_eff}")


def mcerr_mean(series, S_eff: float | None = None, chains: int = 1) -> McErrorReport:
    """Monte Carlo error of the sample mean of ``series``."""
    _check_seff(S_eff)
    x = _as_chains(series, chains)
    if x.size < 2:
        raise InvalidInputError("need at least two draws")
    S_eff = _seff(x, chains) if S_eff is None else float(S_eff)
    var = x.var(ddof=1)
    return McErrorReport(float(x.mean()), float(np.sqrt(var / S_eff)), x.size, S_eff)


def mcerr_variance(series, S_eff: float | None = None, chains: int = 1) -> McErrorReport:
    """Monte Carlo error of the sample variance (denominator S-1) of ``series``."""
    _check_seff(S_eff)
    x = _as_chains(series, chains)
    S = x.size
    if S < 3:
        raise InvalidInputError("need at least three draws")
    S_eff = _seff(x, chains) if S_eff is None else float(S_eff)
    T = S / (S - 1) * (x - x.mean()) ** 2
    v = T.mean()
    return McErrorReport(float(v), float(np.sqrt(((T - v) ** 2).sum() / (S_eff * S))), S, S_eff)


def mcerr_p_spiegelhalter(deviance, S_eff=None, chains: int = 1) -> McErrorReport:
    """Error of p_D, attributing all of it to the mean deviance."""
    return mcerr_mean(deviance, S_eff, chains)


def mcerr_p_plummer(pair_series, S_eff=None, chains: int = 1) -> McErrorReport:
    """Error of p_D^P from per-pair half sums of log density ratios."""
    return mcerr_mean(pair_series, S_eff, chains)


def pointwise_variance_errors(L, S_eff=None, chains: int = 1):
    """Per-point variances and their Monte Carlo errors for an (S, P) matrix.

    Returns (v, mcerr, S_eff) arrays of length P.
    """
    L = np.asarray(L, dtype=float)
    S, P = L.shape
    if S < 3:
        raise InvalidInputError("need at least three draws")
    if S % chains:
        raise InvalidInputError(f"{S} draws do not split into {chains} chains")
    if S_eff is None:
        S_eff = ess_many(L.reshape(chains, S // chains, P)) if S // chains >= 4 else np.full(P, float(S))
    S_eff = np.broadcast_to(np.asarray(S_eff, dtype=float), (P,))
    if np.any(S_eff <= 0):
        raise InvalidInputError("S_eff must be positive")
    T = S / (S - 1) * (L - L.mean(axis=0)) ** 2
    v = T.mean(axis=0)
    err = np.sqrt(((T - v) ** 2).sum(axis=0) / (S_eff * S))
    return v, err, S_eff


def mcerr_p_waic(L, S_eff=None, chains: int = 1) -> McErrorReport:
    """Error of p_W: per-point variance errors combined as independent terms."""
    v, err, seff = pointwise_variance_errors(L, S_eff, chains)
    return McErrorReport(float(v.sum()), float(np.sqrt(np.sum(err * err))), L.shape[0], float(np.mean(seff)))


__all__ = [
    "McErrorReport", "mcerr_mean", "mcerr_variance", "mcerr_p_spiegelhalter",
    "mcerr_p_plummer", "mcerr_p_waic", "pointwise_variance_errors",
]
