"""Common interface of the latent variable model families.

All evaluators are vectorized over posterior draws: parameter arrays have
shape ``(S, P)`` in the order of ``model.names`` (omega first, then psi),
and latent variables have shape ``(S, J)``.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from ..data import ClusteredDataset
from ..errors import InvalidInputError, UnsupportedFamilyError


@dataclass(frozen=True, eq=False)
class ParamPoint:
    """One parameter point: measurement parameters, hyperparameters, latents."""

    omega: np.ndarray
    psi: np.ndarray
    zeta: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "omega", np.atleast_1d(np.asarray(self.omega, dtype=float)))
        object.__setattr__(self, "psi", np.atleast_1d(np.asarray(self.psi, dtype=float)))
        if self.zeta is not None:
            object.__setattr__(self, "zeta", np.atleast_1d(np.asarray(self.zeta, dtype=float)))

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([self.omega, self.psi])


def as_draws(theta, n_params: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 1:
        theta = theta[None, :]
    if theta.shape[-1] != n_params:
        raise InvalidInputError(f"expected {n_params} parameters per draw, got {theta.shape[-1]}")
    return theta


class LatentModel(abc.ABC):
    """A one-factor / random-intercept latent variable model family."""

    family: ClassVar[str]
    has_closed_marginal: ClassVar[bool] = False

    # --- parameter layout -------------------------------------------------
    @property
    @abc.abstractmethod
    def omega_names(self) -> tuple[str, ...]: ...

    @property
    @abc.abstractmethod
    def psi_names(self) -> tuple[str, ...]: ...

    @property
    def names(self) -> tuple[str, ...]:
        return self.omega_names + self.psi_names

    @property
    def n_params(self) -> int:
        return len(self.names)

    @property
    def n_free_marginal(self) -> int:
        """Number of free parameters of the marginal likelihood."""
        return self.n_params

    def split(self, theta: np.ndarray) -> ParamPoint:
        theta = np.asarray(theta, dtype=float)
        k = len(self.omega_names)
        return ParamPoint(theta[:k], theta[k:])

    # --- data binding -----------------------------------------------------
    def validate(self, data: ClusteredDataset) -> None:
        """Raise if ``data`` does not fit this family."""

    def prepare(self, data: ClusteredDataset) -> "LatentModel":
        """Validate ``data`` and bind any data-derived constants."""
        self.validate(data)
        return self

    def for_clusters(self, keep) -> "LatentModel":
        """The model for the sub-dataset holding clusters ``keep``."""
        return self

    # --- densities --------------------------------------------------------
    @abc.abstractmethod
    def cond_loglik(self, data: ClusteredDataset, theta, zeta) -> np.ndarray:
        """Unit-level log f_c(y_ij | omega, zeta_j), shape (S, N)."""

    def cluster_cond_loglik(self, data: ClusteredDataset, theta, zeta) -> np.ndarray:
        """Cluster-level log f_c(y_j | omega, zeta_j), shape (S, J)."""
        return data.cluster_sum(self.cond_loglik(data, theta, zeta))

    @abc.abstractmethod
    def latent_prior(self, data: ClusteredDataset, theta) -> tuple[np.ndarray, np.ndarray]:
        """Mean and SD of g(zeta_j | psi), each shape (S, J)."""

    def marg_loglik_closed(self, data: ClusteredDataset, theta) -> np.ndarray:
        raise UnsupportedFamilyError(f"{self.family} has no closed-form marginal likelihood")

    @abc.abstractmethod
    def log_prior(self, theta) -> np.ndarray:
        """Sum of log prior densities per draw; -inf outside the support."""

    # --- Kullback-Leibler divergences (exponential-family closed forms) ---
    def sym_kl_conditional(self, data, theta1, zeta1, theta2, zeta2) -> np.ndarray:
        raise UnsupportedFamilyError(f"{self.family}: no closed-form conditional KL")

    def sym_kl_marginal(self, data, theta1, theta2) -> np.ndarray:
        raise UnsupportedFamilyError(f"{self.family}: no closed-form marginal KL")

    # --- simulation -------------------------------------------------------
    def draw_latent(self, data: ClusteredDataset, theta: np.ndarray, rng) -> np.ndarray:
        mean, sd = self.latent_prior(data, theta[None, :])
        return mean[0] + sd[0] * rng.standard_normal(data.J)

    @abc.abstractmethod
    def draw_responses(self, data: ClusteredDataset, theta: np.ndarray, zeta: np.ndarray, rng) -> np.ndarray:
        """One replicate response vector given a single parameter point."""

    def template(self, J: int, n_j: int, rng) -> ClusteredDataset:
        """Response-free dataset skeleton used by ``simulate``."""
        return ClusteredDataset(
            np.zeros(J * n_j), np.repeat(np.arange(J), n_j), np.tile(np.arange(n_j), J)
        )

    def describe(self) -> dict:
        return {"family": self.family}
