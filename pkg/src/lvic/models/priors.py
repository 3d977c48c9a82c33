"""Prior densities.

Every prior evaluates on the parameter's stored scale via ``logpdf`` and
returns ``-inf`` outside the support.  Priors for variance-type
parameters also provide ``logpdf_logvar``: the log density of
``u = log(variance)``, Jacobian included, which is the scale the
samplers move on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

LOG_2PI = math.log(2.0 * math.pi)


def _support(x, ok, values):
    return np.where(ok, values, -np.inf)


@dataclass(frozen=True)
class Normal:
    mean: float = 0.0
    var: float = 1.0

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        if math.isinf(self.var):
            return np.zeros_like(x)
        return -0.5 * (LOG_2PI + math.log(self.var)) - 0.5 * (x - self.mean) ** 2 / self.var

    @property
    def precision(self) -> float:
        return 0.0 if math.isinf(self.var) else 1.0 / self.var


FLAT = Normal(0.0, math.inf)


@dataclass(frozen=True)
class StudentT:
    df: float = 1.0
    loc: float = 0.0
    scale: float = 1.0

    def logpdf(self, x):
        z = (np.asarray(x, dtype=float) - self.loc) / self.scale
        nu = self.df
        return (
            special.gammaln((nu + 1) / 2)
            - special.gammaln(nu / 2)
            - 0.5 * math.log(nu * math.pi)
            - math.log(self.scale)
            - (nu + 1) / 2 * np.log1p(z * z / nu)
        )


@dataclass(frozen=True)
class GammaPrecision:
    """Gamma(shape, rate) prior placed on the precision ``1/variance``.

    ``logpdf`` is the implied (inverse-gamma) log density of the variance.
    """

    shape: float
    rate: float

    def logpdf(self, var):
        var = np.asarray(var, dtype=float)
        ok = var > 0
        p = 1.0 / np.where(ok, var, 1.0)
        lp = (
            self.shape * math.log(self.rate)
            - special.gammaln(self.shape)
            + (self.shape + 1) * np.log(p)
            - self.rate * p
        )
        return _support(var, ok, lp)

    def logpdf_logvar(self, u):
        u = np.asarray(u, dtype=float)
        return self.logpdf(np.exp(u)) + u


@dataclass(frozen=True)
class ExponentialSD:
    """Exponential(rate) prior on a standard deviation."""

    rate: float

    def logpdf(self, sd):
        sd = np.asarray(sd, dtype=float)
        return _support(sd, sd >= 0, math.log(self.rate) - self.rate * sd)

    def logpdf_logvar(self, u):
        u = np.asarray(u, dtype=float)
        sd = np.exp(0.5 * u)
        return self.logpdf(sd) + 0.5 * u - math.log(2.0)


@dataclass(frozen=True)
class UniformSD:
    """Improper flat prior on a standard deviation over (0, inf)."""

    def logpdf(self, sd):
        sd = np.asarray(sd, dtype=float)
        return _support(sd, sd > 0, np.zeros_like(sd))

    def logpdf_logvar(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * u - math.log(2.0)


# Multi-group CFA prior sets.  Second Normal argument is a variance;
# Gamma priors are shape/rate on precisions.
CFA_PRIOR_SETS = {
    "default": dict(
        nu=Normal(0.0, 1000.0), lam=Normal(0.0, 100.0), sigma2=GammaPrecision(1.0, 0.5),
        alpha=Normal(0.0, 100.0), tau2=GammaPrecision(1.0, 1.0),
    ),
    "uninformative": dict(
        nu=Normal(0.0, 10000.0), lam=Normal(0.0, 1000.0), sigma2=GammaPrecision(0.01, 0.01),
        alpha=Normal(0.0, 1000.0), tau2=GammaPrecision(0.1, 0.1),
    ),
    "informative": dict(
        nu=Normal(7.0, 10.0), lam=Normal(0.0, 1.0), sigma2=GammaPrecision(2.5, 5.0),
        alpha=Normal(0.0, 1.0), tau2=GammaPrecision(2.5, 5.0),
    ),
}


def parse_prior(spec) -> object:
    """Build a prior from a config mapping such as ``{normal: [0, 9]}``."""
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError(f"prior must be a one-key mapping, got {spec!r}")
    (kind, args), = spec.items()
    kind = str(kind).lower()
    args = list(args) if isinstance(args, (list, tuple)) else [args]
    table = {
        "normal": Normal,
        "flat": lambda: FLAT,
        "t": StudentT,
        "gamma_precision": GammaPrecision,
        "exponential_sd": ExponentialSD,
        "uniform_sd": UniformSD,
    }
    if kind not in table:
        raise ValueError(f"unknown prior {kind!r}")
    return table[kind](*[float(a) for a in args])
