"""Linear Gaussian one-factor families: variance components, eight schools,
and the multi-group factor model.

All three share the row-level measurement model

    y_r ~ N(nu_r + lambda_r * zeta_j(r), sigma2_r),   zeta_j ~ N(alpha_j, tau2_j)

and differ only in how the row and cluster quantities map onto free
parameters.  That mapping is a :class:`GaussianStructure`.
"""

from __future__ import annotations

import abc
import dataclasses
import functools
import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from ..data import ClusteredDataset
from ..errors import DomainError, InvalidInputError
from .base import LatentModel, as_draws
from .priors import CFA_PRIOR_SETS, FLAT, GammaPrecision, Normal, UniformSD

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class GaussianStructure:
    """Index maps from rows/clusters to parameter columns (-1 = fixed value)."""

    nu_index: np.ndarray
    nu_fixed: np.ndarray
    lam_index: np.ndarray
    lam_fixed: np.ndarray
    var_index: np.ndarray
    var_fixed: np.ndarray
    alpha_index: np.ndarray
    alpha_fixed: np.ndarray
    tau_index: np.ndarray
    tau_fixed: np.ndarray  # latent variances, not SDs
    tau_is_sd: bool = False


def _gather(theta: np.ndarray, index: np.ndarray, fixed: np.ndarray) -> np.ndarray:
    return np.where(index >= 0, theta[:, np.maximum(index, 0)], fixed)


@functools.lru_cache(maxsize=256)
def _structure(model: "LinearGaussianModel", data: ClusteredDataset) -> GaussianStructure:
    return model.build_structure(data)


class LinearGaussianModel(LatentModel):
    has_closed_marginal: ClassVar[bool] = True

    @abc.abstractmethod
    def build_structure(self, data: ClusteredDataset) -> GaussianStructure: ...

    @property
    @abc.abstractmethod
    def param_priors(self) -> tuple: ...

    def structure(self, data: ClusteredDataset) -> GaussianStructure:
        return _structure(self, data)

    # --- row and cluster quantities ---------------------------------------
    def row_params(self, data, theta):
        st = self.structure(data)
        theta = as_draws(theta, self.n_params)
        nu = _gather(theta, st.nu_index, st.nu_fixed)
        lam = _gather(theta, st.lam_index, st.lam_fixed)
        var = _gather(theta, st.var_index, st.var_fixed)
        if np.any(var <= 0):
            raise DomainError("unit variances must be positive")
        return nu, lam, var

    def latent_moments(self, data, theta):
        """Prior mean and variance of each cluster's latent variable, (S, J)."""
        st = self.structure(data)
        theta = as_draws(theta, self.n_params)
        alpha = _gather(theta, st.alpha_index, st.alpha_fixed)
        tau = _gather(theta, st.tau_index, st.tau_fixed)
        if st.tau_is_sd:
            tau = np.where(st.tau_index >= 0, tau * tau, tau)
        if np.any(tau < 0):
            raise DomainError("latent variances must be nonnegative")
        return alpha, tau

    def latent_prior(self, data, theta):
        alpha, tau2 = self.latent_moments(data, theta)
        return alpha, np.sqrt(tau2)

    # --- densities --------------------------------------------------------
    def cond_loglik(self, data, theta, zeta):
        nu, lam, var = self.row_params(data, theta)
        zeta = np.atleast_2d(np.asarray(zeta, dtype=float))
        resid = data.y - nu - lam * zeta[:, data.cluster]
        return -0.5 * (LOG_2PI + np.log(var) + resid * resid / var)

    def marg_loglik_closed(self, data, theta):
        """Cluster log densities of y_j ~ N(mean, lambda lambda' tau2 + diag(sigma2)).

        Uses the rank-one update identities, so cost is linear in n_j.
        """
        nu, lam, var = self.row_params(data, theta)
        alpha, tau2 = self.latent_moments(data, theta)
        resid = data.y - nu - lam * alpha[:, data.cluster]
        w = 1.0 / var
        a = data.cluster_sum(w * resid * resid)
        b = data.cluster_sum(w * lam * resid)
        c = data.cluster_sum(w * lam * lam)
        logdet_d = data.cluster_sum(np.log(var))
        denom = 1.0 + tau2 * c
        if np.any(denom <= 0):
            raise DomainError("implied covariance is not positive definite")
        return -0.5 * (data.n_j * LOG_2PI + logdet_d + np.log(denom) + a - tau2 * b * b / denom)

    def log_prior(self, theta):
        theta = as_draws(theta, self.n_params)
        total = np.zeros(theta.shape[0])
        for k, prior in enumerate(self.param_priors):
            total = total + prior.logpdf(theta[:, k])
        return total

    # --- divergences ------------------------------------------------------
    def sym_kl_conditional(self, data, theta1, zeta1, theta2, zeta2):
        nu1, lam1, v1 = self.row_params(data, theta1)
        nu2, lam2, v2 = self.row_params(data, theta2)
        m1 = nu1 + lam1 * np.atleast_2d(zeta1)[:, data.cluster]
        m2 = nu2 + lam2 * np.atleast_2d(zeta2)[:, data.cluster]
        d2 = (m1 - m2) ** 2
        terms = 0.5 * (v1 / v2 + v2 / v1) - 1.0 + 0.5 * d2 * (1.0 / v1 + 1.0 / v2)
        return terms.sum(axis=1)

    def _signatures(self, data):
        """Group clusters whose marginal distributions coincide for every theta."""
        st = self.structure(data)
        keys: dict = {}
        for j in range(data.J):
            rows = data.rows_of(j)
            key = (
                int(st.alpha_index[j]), float(st.alpha_fixed[j]),
                int(st.tau_index[j]), float(st.tau_fixed[j]),
                tuple(st.nu_index[rows]), tuple(st.nu_fixed[rows]),
                tuple(st.lam_index[rows]), tuple(st.lam_fixed[rows]),
                tuple(st.var_index[rows]), tuple(st.var_fixed[rows]),
            )
            keys.setdefault(key, []).append(j)
        return list(keys.values())

    def _cluster_mvn(self, data, theta, j):
        rows = data.rows_of(j)
        nu, lam, var = self.row_params(data, theta)
        alpha, tau2 = self.latent_moments(data, theta)
        nu, lam, var = nu[:, rows], lam[:, rows], var[:, rows]
        mean = nu + lam * alpha[:, j : j + 1]
        cov = tau2[:, j, None, None] * lam[:, :, None] * lam[:, None, :]
        idx = np.arange(lam.shape[1])
        cov[:, idx, idx] += var
        return mean, cov

    def sym_kl_marginal(self, data, theta1, theta2):
        theta1 = as_draws(theta1, self.n_params)
        theta2 = as_draws(theta2, self.n_params)
        total = np.zeros(theta1.shape[0])
        for members in self._signatures(data):
            j = members[0]
            m1, c1 = self._cluster_mvn(data, theta1, j)
            m2, c2 = self._cluster_mvn(data, theta2, j)
            n = m1.shape[1]
            i1 = np.linalg.inv(c1)
            i2 = np.linalg.inv(c2)
            d = m1 - m2
            tr = np.einsum("sij,sji->s", i2, c1) + np.einsum("sij,sji->s", i1, c2)
            quad = np.einsum("si,sij,sj->s", d, i1 + i2, d)
            total += len(members) * 0.5 * (tr - 2 * n + quad)
        return total

    # --- simulation -------------------------------------------------------
    def draw_responses(self, data, theta, zeta, rng):
        nu, lam, var = self.row_params(data, theta[None, :])
        mean = nu[0] + lam[0] * np.asarray(zeta)[data.cluster]
        return mean + np.sqrt(var[0]) * rng.standard_normal(data.N)


@dataclass(frozen=True)
class VarianceComponents(LinearGaussianModel):
    """Two-level random-intercept model.

    Version "B": y_ij ~ N(alpha + zeta_j, sigma2), zeta_j ~ N(0, tau2).
    Version "A": y_ij ~ N(zeta_j, sigma2),          zeta_j ~ N(alpha, tau2).
    Passing ``tau2`` fixes the latent variance (0 removes the random effect).
    """

    family: ClassVar[str] = "variance-components"

    parameterization: str = "B"
    tau2: float | None = None
    alpha_prior: Normal = Normal(0.0, 1.0e4)
    sigma2_prior: GammaPrecision = GammaPrecision(0.01, 0.01)
    tau2_prior: GammaPrecision = GammaPrecision(0.01, 0.01)

    def __post_init__(self):
        if self.parameterization not in ("A", "B"):
            raise InvalidInputError("parameterization must be 'A' or 'B'")
        if self.tau2 is not None and self.tau2 < 0:
            raise DomainError("tau2 must be nonnegative")
        if self.tau2 == 0 and self.parameterization == "A":
            raise InvalidInputError("a degenerate latent variance needs parameterization 'B'")

    @property
    def omega_names(self):
        return ("alpha", "sigma2") if self.parameterization == "B" else ("sigma2",)

    @property
    def psi_names(self):
        names = () if self.parameterization == "B" else ("alpha",)
        return names if self.tau2 is not None else names + ("tau2",)

    @property
    def param_priors(self):
        table = {"alpha": self.alpha_prior, "sigma2": self.sigma2_prior, "tau2": self.tau2_prior}
        return tuple(table[n] for n in self.names)

    def build_structure(self, data):
        N, J = data.N, data.J
        ix = {n: k for k, n in enumerate(self.names)}
        neg_n, neg_j = np.full(N, -1), np.full(J, -1)
        if self.parameterization == "B":
            nu_index, alpha_index = np.full(N, ix["alpha"]), neg_j
        else:
            nu_index, alpha_index = neg_n, np.full(J, ix["alpha"])
        tau_index = neg_j if self.tau2 is not None else np.full(J, ix["tau2"])
        return GaussianStructure(
            nu_index=nu_index, nu_fixed=np.zeros(N),
            lam_index=neg_n, lam_fixed=np.ones(N),
            var_index=np.full(N, ix["sigma2"]), var_fixed=np.ones(N),
            alpha_index=alpha_index, alpha_fixed=np.zeros(J),
            tau_index=tau_index, tau_fixed=np.full(J, 0.0 if self.tau2 is None else float(self.tau2)),
        )

    def describe(self):
        return {"family": self.family, "parameterization": self.parameterization, "tau2": self.tau2}


# Standard published eight-schools values (SAT coaching effects and SEs).
EIGHT_SCHOOLS_Y = (28.0, 8.0, -3.0, 7.0, -1.0, 1.0, 18.0, 12.0)
EIGHT_SCHOOLS_SIGMA = (15.0, 10.0, 16.0, 11.0, 9.0, 11.0, 10.0, 18.0)


@dataclass(frozen=True)
class EightSchools(LinearGaussianModel):
    """Meta-analysis model y_j ~ N(theta_j, sigma_j^2), theta_j ~ N(mu, tau^2).

    ``sigma`` are the known standard errors; ``scale`` multiplies the
    responses of the built-in dataset (the stress-test factor).  The prior
    on (mu, tau) is uniform.
    """

    family: ClassVar[str] = "eight-schools"

    sigma: tuple[float, ...] = EIGHT_SCHOOLS_SIGMA
    scale: float = 1.0
    mu_prior: Normal = FLAT
    tau_prior: UniformSD = UniformSD()

    @property
    def omega_names(self):
        return ()

    @property
    def psi_names(self):
        return ("mu", "tau")

    @property
    def param_priors(self):
        return (self.mu_prior, self.tau_prior)

    def validate(self, data):
        if data.J != len(self.sigma) or np.any(data.n_j != 1):
            raise InvalidInputError(f"eight-schools data needs {len(self.sigma)} clusters of one unit")

    def for_clusters(self, keep):
        return dataclasses.replace(self, sigma=tuple(self.sigma[int(j)] for j in keep))

    def build_structure(self, data):
        self.validate(data)
        N, J = data.N, data.J
        sig2 = np.asarray(self.sigma, dtype=float)[data.cluster] ** 2
        return GaussianStructure(
            nu_index=np.full(N, -1), nu_fixed=np.zeros(N),
            lam_index=np.full(N, -1), lam_fixed=np.ones(N),
            var_index=np.full(N, -1), var_fixed=sig2,
            alpha_index=np.zeros(J, dtype=np.int64), alpha_fixed=np.zeros(J),
            tau_index=np.ones(J, dtype=np.int64), tau_fixed=np.zeros(J),
            tau_is_sd=True,
        )

    def dataset(self) -> ClusteredDataset:
        y = self.scale * np.asarray(EIGHT_SCHOOLS_Y)
        J = len(self.sigma)
        return ClusteredDataset(y[:J], np.arange(J), np.zeros(J, dtype=np.int64))

    def template(self, J, n_j, rng):
        return ClusteredDataset(np.zeros(len(self.sigma)), np.arange(len(self.sigma)),
                                np.zeros(len(self.sigma), dtype=np.int64))

    def describe(self):
        return {"family": self.family, "scale": self.scale, "sigma": list(self.sigma)}


# --- multi-group factor model ---------------------------------------------

CFA_PATTERNS = ("2", "2a", "3", "3a", "4", "5", "5a", "5b", "6")
CFA_PARAM_COUNTS = {"2": 30, "2a": 31, "3": 22, "3a": 23, "4": 21, "5": 16, "5a": 17, "5b": 18, "6": 17}


def cfa_equality_classes(pattern: str, n_items: int = 3, n_groups: int = 4):
    """Equality-class labels for each parameter type under a restriction pattern.

    Returns a dict of label arrays: ``nu``, ``lam``, ``sigma2`` of shape
    (I, G) and ``alpha``, ``tau2`` of shape (G,).  Cells sharing a label
    are constrained equal; label -1 marks a fixed cell (lambda_1g = 1,
    alpha_g = 0).
    """
    if pattern not in CFA_PATTERNS:
        raise InvalidInputError(f"unknown restriction pattern {pattern!r}; expected one of {CFA_PATTERNS}")
    if n_items < 3 or n_groups != 4:
        raise InvalidInputError("restriction patterns are defined for >= 3 items and 4 groups")
    I, G = n_items, n_groups
    cell = np.arange(I * G).reshape(I, G)
    per_item = np.repeat(np.arange(I)[:, None], G, axis=1)
    order = CFA_PATTERNS.index(pattern)

    nu = cell.copy()
    lam = per_item.copy()
    lam[0, :] = -1
    sigma2 = cell.copy()
    alpha = np.full(G, -1)
    tau2 = np.arange(G)

    if order >= CFA_PATTERNS.index("2a"):
        lam[1, 3] = I  # lambda_24 freed
    if order >= CFA_PATTERNS.index("3"):
        sigma2 = per_item.copy()
    if order >= CFA_PATTERNS.index("3a"):
        sigma2[1, 3] = I  # sigma2_24 freed
    if order >= CFA_PATTERNS.index("4"):
        tau2 = np.array([0, 0, 1, 1])
    if order >= CFA_PATTERNS.index("5"):
        # invariant intercepts identify the factor means of groups 2..G
        nu = per_item.copy()
        nu[1, 3] = I  # nu_24 stays free
        alpha = np.array([-1, 1, 2, 3])
    if order >= CFA_PATTERNS.index("5a"):
        nu[2, 0] = I + 1  # nu_31
    if order >= CFA_PATTERNS.index("5b"):
        nu[2, 1] = I + 2  # nu_32
    if order >= CFA_PATTERNS.index("6"):
        alpha[2] = -1  # alpha_3 = alpha_1 = 0
    return dict(nu=nu, lam=lam, sigma2=sigma2, alpha=alpha, tau2=tau2)


def _class_name(prefix: str, cells: list[tuple[int, ...]], n_groups: int) -> str:
    if len(cells[0]) == 1:
        return f"{prefix}[{'+'.join(str(c[0] + 1) for c in cells)}]"
    items = {c[0] for c in cells}
    if len(cells) == 1:
        i, g = cells[0]
        return f"{prefix}[{i + 1},{g + 1}]"
    (i,) = items
    if len(cells) == n_groups:
        return f"{prefix}[{i + 1}]"
    return f"{prefix}[{i + 1},{'+'.join(str(c[1] + 1) for c in cells)}]"


def _index_classes(labels: np.ndarray):
    """Map label array to (param-local index array, list of cell lists)."""
    flat = labels.ravel()
    out = np.full(flat.shape, -1)
    cells: list[list[tuple[int, ...]]] = []
    seen: dict[int, int] = {}
    for pos, lab in enumerate(flat):
        if lab < 0:
            continue
        if lab not in seen:
            seen[lab] = len(cells)
            cells.append([])
        out[pos] = seen[lab]
        cells[seen[lab]].append(np.unravel_index(pos, labels.shape))
    return out.reshape(labels.shape), [[tuple(int(v) for v in c) for c in cl] for cl in cells]


@dataclass(frozen=True)
class MultiGroupFactor(LinearGaussianModel):
    """One-factor model for I indicators in G groups with restriction patterns.

    y_ijg ~ N(nu_ig + lambda_ig zeta_j, sigma2_ig), zeta_j ~ N(alpha_g, tau2_g),
    lambda_1g = 1 and alpha_1 = 0.
    """

    family: ClassVar[str] = "factor"

    pattern: str = "2"
    prior_set: str = "default"
    n_items: int = 3
    n_groups: int = 4

    def __post_init__(self):
        if self.prior_set not in CFA_PRIOR_SETS:
            raise InvalidInputError(f"unknown prior set {self.prior_set!r}")
        cfa_equality_classes(self.pattern, self.n_items, self.n_groups)

    @functools.cached_property
    def _layout(self):
        cls = cfa_equality_classes(self.pattern, self.n_items, self.n_groups)
        names: list[str] = []
        kinds: list[str] = []
        index = {}
        for kind in ("nu", "lam", "sigma2", "alpha", "tau2"):
            local, cells = _index_classes(cls[kind])
            offset = len(names)
            prefix = "lambda" if kind == "lam" else kind
            names += [_class_name(prefix, c, self.n_groups) for c in cells]
            kinds += [kind] * len(cells)
            index[kind] = np.where(local >= 0, local + offset, -1)
        n_omega = sum(k in ("nu", "lam", "sigma2") for k in kinds)
        return tuple(names), tuple(kinds), index, n_omega

    @property
    def omega_names(self):
        names, _, _, n_omega = self._layout
        return names[:n_omega]

    @property
    def psi_names(self):
        names, _, _, n_omega = self._layout
        return names[n_omega:]

    @property
    def param_kinds(self) -> tuple[str, ...]:
        return self._layout[1]

    @property
    def param_priors(self):
        priors = CFA_PRIOR_SETS[self.prior_set]
        return tuple(priors[k] for k in self.param_kinds)

    def validate(self, data):
        if data.group is None or data.G != self.n_groups:
            raise InvalidInputError(f"factor model needs group labels 1..{self.n_groups}")
        if data.n_units != self.n_items:
            raise InvalidInputError(f"factor model expects {self.n_items} indicators, data has {data.n_units}")

    def build_structure(self, data):
        self.validate(data)
        _, _, index, _ = self._layout
        item = data.unit
        grp = data.group[data.cluster]
        N, J = data.N, data.J
        return GaussianStructure(
            nu_index=index["nu"][item, grp], nu_fixed=np.zeros(N),
            lam_index=index["lam"][item, grp], lam_fixed=np.ones(N),
            var_index=index["sigma2"][item, grp], var_fixed=np.ones(N),
            alpha_index=index["alpha"][data.group], alpha_fixed=np.zeros(J),
            tau_index=index["tau2"][data.group], tau_fixed=np.ones(J),
        )

    def template(self, J, n_j, rng):
        n_j = self.n_items
        group = np.arange(J) % self.n_groups
        return ClusteredDataset(
            np.zeros(J * n_j), np.repeat(np.arange(J), n_j), np.tile(np.arange(n_j), J),
            group=group,
        )

    def describe(self):
        return {"family": self.family, "pattern": self.pattern, "prior_set": self.prior_set}
