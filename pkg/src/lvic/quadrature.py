"""Gauss-Hermite quadrature for cluster marginal likelihoods, adapted to
posterior moments of the latent variables.

For cluster j with adapted grid (mu_j, phi_j) the marginal likelihood at
draw s is approximated by

    f_m(y_j | theta_s) ~= sum_m w_jm^s f_c(y_j | theta_s, zeta = a_jm),
    a_jm   = mu_j + phi_j a_m,
    w_jm^s = sqrt(2 pi) phi_j exp(a_m^2 / 2) g(a_jm; mean_js, tau_js^2) w_m,

with (a_m, w_m) a probabilists' Gauss-Hermite rule.  Everything is kept on
the log scale.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import logsumexp

from .data import ClusteredDataset
from .errors import DegenerateGridError, InvalidInputError, QuadratureConvergenceError

log = logging.getLogger(__name__)

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Start at 7 and grow by about 50% while staying odd; capped at 111.
M_LADDER = (7, 11, 17, 25, 37, 55, 83, 111)

# cap on (draws x rows) held in memory per likelihood evaluation
CHUNK_ELEMENTS = 2_000_000


@dataclass(frozen=True, eq=False)
class GaussHermiteRule:
    """Nodes and weights integrating against the standard normal density."""

    M: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)

    def integrate(self, fn) -> float:
        return float(np.sum(self.weights * fn(self.nodes)))


@functools.lru_cache(maxsize=64)
def gh_rule(M: int) -> GaussHermiteRule:
    """M-point rule for N(0, 1) by Golub-Welsch.

    The Jacobi matrix of the probabilists' Hermite polynomials has zero
    diagonal and off-diagonal sqrt(k); its eigenvalues are the nodes and
    the squared first eigenvector components the weights.
    """
    M = int(M)
    if M < 1:
        raise InvalidInputError("quadrature needs at least one point")
    if M == 1:
        x, w = np.zeros(1), np.ones(1)
    else:
        x, v = eigh_tridiagonal(np.zeros(M), np.sqrt(np.arange(1.0, M)))
        w = v[0] ** 2
        x = 0.5 * (x - x[::-1])
        w = 0.5 * (w + w[::-1])
        w = w / w.sum()
        if M % 2:
            x[M // 2] = 0.0
    x.setflags(write=False)
    w.setflags(write=False)
    return GaussHermiteRule(M, x, w)


def gh_product_rule(M: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product rule for ``dim`` independent standard normals.

    Returns nodes (M**dim, dim) and weights (M**dim,).  Provided for
    multi-factor extensions; the bundled families use ``dim=1``.
    """
    if not 1 <= dim <= 3:
        raise InvalidInputError("tensor-product grids are limited to 1..3 dimensions")
    r = gh_rule(M)
    grids = np.meshgrid(*([r.nodes] * dim), indexing="ij")
    wts = np.meshgrid(*([r.weights] * dim), indexing="ij")
    return np.column_stack([g.ravel() for g in grids]), np.prod([w.ravel() for w in wts], axis=0)


@dataclass(frozen=True, eq=False)
class AdaptedGrid:
    """Per-cluster posterior mean and SD of the latent variable."""

    mu: np.ndarray
    phi: np.ndarray
    fallback: np.ndarray  # clusters using the prior-scale grid

    @property
    def J(self) -> int:
        return self.mu.size


def posterior_moments(zeta_draws) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and SD (denominator S-1) over draws (axis 0).

    Raises DegenerateGridError when some cluster's draws are constant.
    """
    z = np.asarray(zeta_draws, dtype=float)
    if z.shape[0] < 2:
        raise InvalidInputError("posterior moments need at least two draws")
    mu = z.mean(axis=0)
    phi = z.std(axis=0, ddof=1)
    bad = np.atleast_1d(phi <= 0)
    if bad.any():
        raise DegenerateGridError(np.flatnonzero(bad).tolist())
    return mu, phi


def build_grid(zeta_draws, prior_mean=None, prior_sd=None) -> AdaptedGrid:
    """Adapted grid from (S, J) latent draws.

    Clusters whose draws are constant fall back to the prior-scale grid
    centred at ``prior_mean`` with SD ``prior_sd`` (posterior means of the
    latent prior moments), with a warning.
    """
    z = np.asarray(zeta_draws, dtype=float)
    if z.ndim != 2 or z.shape[0] < 2:
        raise InvalidInputError("latent draws must be (S >= 2, J)")
    mu = z.mean(axis=0)
    phi = z.std(axis=0, ddof=1)
    bad = phi <= 0
    if bad.any():
        if prior_sd is None:
            raise DegenerateGridError(np.flatnonzero(bad).tolist())
        log.warning("zero posterior SD for %d cluster(s); using prior-scale grid", int(bad.sum()))
        mu = np.where(bad, 0.0 if prior_mean is None else prior_mean, mu)
        phi = np.where(bad, prior_sd, phi)
        if np.any(phi <= 0):
            raise DegenerateGridError(np.flatnonzero(phi <= 0).tolist())
    return AdaptedGrid(mu, phi, bad)


def adapt(rule: GaussHermiteRule, mu, phi, tau, prior_mean=0.0):
    """Adapted locations and log masses.

    Parameters
    ----------
    rule : base rule with nodes a_m and weights w_m.
    mu, phi : adapted centre and scale, broadcastable to (..., J).
    tau : latent prior SD per draw and cluster, broadcastable to (..., J).
    prior_mean : latent prior mean, same broadcasting as ``tau``.

    Returns
    -------
    loc : (..., M) locations a_jm.
    log_mass : (..., M) log w_jm^s; masses need not sum to one.
    """
    mu = np.asarray(mu, dtype=float)[..., None]
    phi = np.asarray(phi, dtype=float)[..., None]
    tau = np.asarray(tau, dtype=float)[..., None]
    m0 = np.asarray(prior_mean, dtype=float)[..., None]
    a = rule.nodes
    loc = mu + phi * a
    with np.errstate(divide="ignore"):
        z = (loc - m0) / tau
        log_g = -HALF_LOG_2PI - np.log(tau) - 0.5 * z * z
    log_mass = HALF_LOG_2PI + np.log(phi) + 0.5 * a * a + log_g + rule.log_weights
    return loc, log_mass


def _chunks(S: int, N: int, M: int = 1):
    step = max(1, CHUNK_ELEMENTS // max(1, N * M))
    for start in range(0, S, step):
        yield slice(start, min(S, start + step))


def marg_loglik_quad(model, data: ClusteredDataset, theta, grid: AdaptedGrid, rule: GaussHermiteRule):
    """Log marginal likelihood of every cluster at every draw, (S, J).

    Sums over quadrature points with log-sum-exp.  Entries whose summands
    all underflow come back as ``-inf``; callers decide how to report them.
    """
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    S = theta.shape[0]
    out = np.empty((S, data.J))
    for sl in _chunks(S, data.N):
        th = theta[sl]
        mean, sd = model.latent_prior(data, th)
        loc, log_mass = adapt(rule, grid.mu, grid.phi, sd, mean)
        # a prior narrower than the adapted grid starves every node; the
        # prior-scale rule is the better importance density there
        narrow = sd < grid.phi
        if narrow.any():
            loc = np.where(narrow[..., None], mean[..., None] + sd[..., None] * rule.nodes, loc)
            log_mass = np.where(narrow[..., None], rule.log_weights, log_mass)
        loc = np.broadcast_to(loc, log_mass.shape)
        terms = np.empty(log_mass.shape)
        for m in range(rule.M):
            terms[..., m] = model.cluster_cond_loglik(data, th, loc[..., m])
        terms += log_mass
        with np.errstate(invalid="ignore"):
            out[sl] = logsumexp(terms, axis=-1)
    return out


def marg_loglik_cluster_quad(model, data, theta, grid, rule):
    """Single-draw convenience wrapper returning a (J,) vector."""
    out = marg_loglik_quad(model, data, theta, grid, rule)
    return out[0] if np.ndim(theta) == 1 else out


@dataclass(frozen=True)
class TraceRow:
    M: int
    target_value: float
    delta: float


def select_M(
    model,
    data: ClusteredDataset,
    draws,
    target: str = "dic",
    ladder=M_LADDER,
    tol: float = 0.01,
):
    """Choose the number of quadrature points.

    Evaluates the marginal ``target`` (``"dic"`` or ``"waic"``) on the
    ladder until two successive values differ by less than ``tol``
    (absolute, deviance scale) and returns the smaller M of that pair with
    the trace of (M, value, delta).

    Raises QuadratureConvergenceError with the trace if the ladder runs out.
    """
    from .criteria import dic_spiegelhalter, waic

    if target not in ("dic", "waic"):
        raise InvalidInputError("target must be 'dic' or 'waic'")
    evaluator = MarginalEvaluator(model, data, draws, ladder[0])
    trace: list[TraceRow] = []
    prev = None
    for M in ladder:
        ev = evaluator.with_rule(M)
        if target == "dic":
            value = dic_spiegelhalter(ev.pointwise(), ev.plugin(), chains=draws.n_chains).value
        else:
            value = waic(ev.pointwise()).value
        delta = float("nan") if prev is None else value - prev
        trace.append(TraceRow(M, value, delta))
        if prev is not None and abs(delta) < tol:
            return trace[-2].M, trace
        prev = value
    raise QuadratureConvergenceError(
        f"{target} did not stabilise within tolerance {tol} up to M={ladder[-1]}", trace=trace
    )


def write_trace(trace, path) -> None:
    with Path(path).open("w") as fh:
        fh.write("M,target_value,delta\n")
        for r in trace:
            fh.write(f"{r.M},{r.target_value:.17g},{r.delta:.17g}\n")


class MarginalEvaluator:
    """Marginal log-likelihoods for a fit, closed form or by quadrature.

    Parameters
    ----------
    model, data : the fitted model and data.
    draws : DrawMatrix; latent draws are needed only for quadrature.
    M : quadrature points, or None for the closed form when the family has one.
    """

    def __init__(self, model, data, draws, M: int | None = None):
        self.model, self.data, self.draws = model, data, draws
        self.M = M
        if M is None and not model.has_closed_marginal:
            raise InvalidInputError(f"{model.family} needs quadrature (set M)")
        self._grid = None

    def with_rule(self, M: int | None) -> "MarginalEvaluator":
        ev = MarginalEvaluator.__new__(MarginalEvaluator)
        ev.__dict__.update(self.__dict__)
        ev.M = M
        return ev

    @property
    def grid(self) -> AdaptedGrid:
        if self._grid is None:
            from .errors import MissingLatentError

            if self.draws.zeta is None:
                raise MissingLatentError("quadrature needs latent draws to adapt the grid")
            mean, sd = self.model.latent_prior(self.data, self.draws.flat_theta)
            self._grid = build_grid(self.draws.flat_zeta, mean.mean(axis=0), sd.mean(axis=0))
        return self._grid

    def __call__(self, theta) -> np.ndarray:
        if self.M is None:
            return self.model.marg_loglik_closed(self.data, theta)
        return marg_loglik_quad(self.model, self.data, theta, self.grid, gh_rule(self.M))

    def pointwise(self) -> np.ndarray:
        return self(self.draws.flat_theta)

    def plugin(self) -> float:
        """Marginal log-likelihood at the posterior mean of (omega, psi)."""
        return float(self(self.draws.flat_theta.mean(axis=0)[None, :]).sum())
