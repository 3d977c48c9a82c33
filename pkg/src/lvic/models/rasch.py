"""Rasch model with a latent regression on person covariates."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy.special import expit

from ..data import ClusteredDataset
from ..errors import InvalidInputError
from .base import LatentModel, as_draws
from .priors import ExponentialSD, Normal, StudentT


def bernoulli_logit_logpmf(y, eta):
    """log P(y | logit^-1(eta)) for y in {0, 1}, overflow-safe."""
    return -np.logaddexp(0.0, np.where(y > 0.5, -eta, eta))


def _is_rectangular(data: ClusteredDataset, n_items: int) -> bool:
    return bool(np.all(data.unit.reshape(-1, n_items) == np.arange(n_items)))


@dataclass(frozen=True)
class RaschLatentRegression(LatentModel):
    """y_ij ~ Bernoulli(logit^-1(x_j'gamma + zeta_j - delta_i)), zeta_j ~ N(0, tau^2).

    Parameters
    ----------
    n_items : int
        Number of items I.  Only I-1 difficulties are free; the last one is
        minus the sum of the others.
    terms : tuple of str
        Covariate terms besides the constant.  A term is a covariate name or
        a product of names joined by ``:`` (``"anger:male"``).
    scaling : tuple of (center, scale) pairs or None
        Standardization of each term used by the coefficient prior.  Set by
        :meth:`prepare`; binary terms are centered and divided by their
        range, other terms centered and divided by twice their SD.
    require_complete : bool
        Reject data where some person lacks some item.  Leave-one-out refits
        switch this off.
    """

    family: ClassVar[str] = "rasch"

    n_items: int = 5
    terms: tuple[str, ...] = ()
    delta_prior: Normal = Normal(0.0, 9.0)
    gamma_prior: StudentT = StudentT(1.0, 0.0, 1.0)
    tau_prior: ExponentialSD = ExponentialSD(0.1)
    scaling: tuple[tuple[float, float], ...] | None = None
    require_complete: bool = True

    def __post_init__(self):
        if self.n_items < 2:
            raise InvalidInputError("the Rasch model needs at least two items")
        if self.scaling is not None and len(self.scaling) != len(self.terms):
            raise InvalidInputError("one (center, scale) pair per covariate term is required")

    # --- layout -----------------------------------------------------------
    @property
    def omega_names(self):
        return (
            tuple(f"delta[{i + 1}]" for i in range(self.n_items - 1))
            + ("gamma[const]",)
            + tuple(f"gamma[{t}]" for t in self.terms)
        )

    @property
    def psi_names(self):
        return ("tau",)

    @property
    def n_gamma(self) -> int:
        return 1 + len(self.terms)

    def delta_full(self, theta) -> np.ndarray:
        theta = as_draws(theta, self.n_params)
        free = theta[:, : self.n_items - 1]
        return np.concatenate([free, -free.sum(axis=1, keepdims=True)], axis=1)

    def gamma(self, theta) -> np.ndarray:
        theta = as_draws(theta, self.n_params)
        k = self.n_items - 1
        return theta[:, k : k + self.n_gamma]

    def tau(self, theta) -> np.ndarray:
        return as_draws(theta, self.n_params)[:, -1]

    # --- data binding -----------------------------------------------------
    def design(self, data: ClusteredDataset) -> np.ndarray:
        """(J, K) design matrix on the original covariate scale, constant first."""
        cols = [np.ones(data.J)]
        for term in self.terms:
            col = np.ones(data.J)
            for name in term.split(":"):
                col = col * data.covariate(name.strip())
            cols.append(col)
        return np.column_stack(cols)

    def validate(self, data):
        data.check_binary()
        if self.require_complete:
            data.check_complete_items()
        else:
            keys = data.cluster * self.n_items + data.unit
            if np.unique(keys).size != data.N:
                raise InvalidInputError("duplicate (cluster, item) responses")
        if data.n_units > self.n_items or (self.require_complete and data.n_units != self.n_items):
            raise InvalidInputError(f"model has {self.n_items} items, data has {data.n_units}")
        self.design(data)

    def prepare(self, data):
        self.validate(data)
        if self.scaling is not None:
            return self
        X = self.design(data)[:, 1:]
        scaling = []
        for k, term in enumerate(self.terms):
            col = X[:, k]
            values = np.unique(col)
            center = float(col.mean())
            if values.size <= 2 and ":" not in term:
                scale = float(values.max() - values.min()) if values.size == 2 else 1.0
            else:
                sd = float(col.std())
                scale = 2.0 * sd if sd > 0 else 1.0
            scaling.append((center, scale))
        return dataclasses.replace(self, scaling=tuple(scaling))

    def standardized_gamma(self, theta) -> np.ndarray:
        """Coefficients on the standardized covariate scale (gamma*)."""
        g = self.gamma(theta)
        if not self.terms:
            return g.copy()
        if self.scaling is None:
            raise InvalidInputError("covariate scaling unset; call prepare(data) first")
        center = np.array([c for c, _ in self.scaling])
        scale = np.array([s for _, s in self.scaling])
        out = np.empty_like(g)
        out[:, 1:] = g[:, 1:] * scale
        out[:, 0] = g[:, 0] + g[:, 1:] @ center
        return out

    def gamma_from_standardized(self, gstar) -> np.ndarray:
        gstar = np.atleast_2d(np.asarray(gstar, dtype=float))
        if not self.terms:
            return gstar.copy()
        center = np.array([c for c, _ in self.scaling])
        scale = np.array([s for _, s in self.scaling])
        out = np.empty_like(gstar)
        out[:, 1:] = gstar[:, 1:] / scale
        out[:, 0] = gstar[:, 0] - out[:, 1:] @ center
        return out

    # --- densities --------------------------------------------------------
    def linear_predictor(self, data, theta, zeta) -> np.ndarray:
        eta = self.design(data) @ self.gamma(theta).T  # (J, S)
        eta = eta.T + np.atleast_2d(np.asarray(zeta, dtype=float))
        return eta[:, data.cluster] - self.delta_full(theta)[:, data.unit]

    def cond_loglik(self, data, theta, zeta):
        return bernoulli_logit_logpmf(data.y, self.linear_predictor(data, theta, zeta))

    def cluster_cond_loglik(self, data, theta, zeta):
        # complete rectangular responses: sum_i [y_ij (eta_j - d_i) - softplus(eta_j - d_i)]
        theta = as_draws(theta, self.n_params)
        J = data.J
        if data.N != J * self.n_items or not _is_rectangular(data, self.n_items):
            return super().cluster_cond_loglik(data, theta, zeta)
        Y = data.y.reshape(J, self.n_items)
        delta = self.delta_full(theta)
        eta = (self.design(data) @ self.gamma(theta).T).T + np.atleast_2d(np.asarray(zeta, dtype=float))
        lin = eta * Y.sum(axis=1) - delta @ Y.T
        return lin - np.logaddexp(0.0, eta[:, :, None] - delta[:, None, :]).sum(axis=2)

    def latent_prior(self, data, theta):
        tau = self.tau(theta)
        S = tau.shape[0]
        return np.zeros((S, data.J)), np.broadcast_to(tau[:, None], (S, data.J)).copy()

    def log_prior(self, theta):
        theta = as_draws(theta, self.n_params)
        lp = self.delta_prior.logpdf(theta[:, : self.n_items - 1]).sum(axis=1)
        lp = lp + self.gamma_prior.logpdf(self.standardized_gamma(theta)).sum(axis=1)
        return lp + self.tau_prior.logpdf(self.tau(theta))

    def sym_kl_conditional(self, data, theta1, zeta1, theta2, zeta2):
        e1 = self.linear_predictor(data, theta1, zeta1)
        e2 = self.linear_predictor(data, theta2, zeta2)
        return ((expit(e1) - expit(e2)) * (e1 - e2)).sum(axis=1)

    # --- simulation -------------------------------------------------------
    def draw_responses(self, data, theta, zeta, rng):
        p = expit(self.linear_predictor(data, theta[None, :], zeta)[0])
        return (rng.random(data.N) < p).astype(float)

    def template(self, J, n_j, rng):
        n_j = self.n_items
        names = sorted({n.strip() for t in self.terms for n in t.split(":")})
        cov = None
        if names:
            cols = []
            for name in names:
                if name == "male":
                    cols.append((rng.random(J) < 0.24).astype(float))
                elif name == "anger":
                    cols.append(np.clip(np.round(rng.normal(20.0, 4.9, J)), 11, 39))
                else:
                    cols.append(rng.standard_normal(J))
            cov = np.column_stack(cols)
        return ClusteredDataset(
            np.zeros(J * n_j), np.repeat(np.arange(J), n_j), np.tile(np.arange(n_j), J),
            covariates=cov, covariate_names=tuple(names),
        )

    def describe(self):
        return {"family": self.family, "n_items": self.n_items, "terms": list(self.terms)}
