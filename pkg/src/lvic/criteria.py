"""Conditional and marginal information criteria from posterior draws.

Every criterion works on a pointwise log-likelihood matrix ``L`` of shape
(S, P): units as points in conditional mode (f_c given zeta), clusters in
marginal mode (f_m with zeta integrated out).  Draws are chain-major so
Monte Carlo errors can pool autocorrelation across ``chains``.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import logsumexp

from .data import ClusteredDataset
from .errors import (
    ConvergenceError,
    InvalidComparisonError,
    InvalidInputError,
    MissingLatentError,
    NonFiniteError,
)
from .mc_error import mcerr_mean, mcerr_p_plummer, mcerr_p_spiegelhalter, pointwise_variance_errors
from .psis import psis_loo_points
from .quadrature import CHUNK_ELEMENTS, MarginalEvaluator, adapt, gh_rule
from .sampler import ChainConfig, DrawMatrix, run_mcmc
from .sampler.diagnostics import ess_many

MODES = ("conditional", "marginal")
WAIC_VARIANCE_LIMIT = 0.4


@dataclass
class CriterionResult:
    """Value and effective number of parameters of one criterion.

    ``value`` is on the deviance scale.  ``mcerr_p`` is the Monte Carlo
    error of ``p_eff``; ``mcerr_value`` that of ``value``.
    """

    name: str
    mode: str
    value: float
    p_eff: float
    mcerr_value: float
    mcerr_p: float
    pointwise: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self, pointwise: bool = False) -> dict:
        d = asdict(self)
        d["pointwise"] = self.pointwise.tolist() if (pointwise and self.pointwise is not None) else None
        d["diagnostics"] = _jsonable(self.diagnostics)
        return d

    @property
    def label(self) -> str:
        return f"{self.name}-{self.mode[0]}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _check_mode(mode):
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")


def _check_matrix(L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2:
        raise InvalidInputError("pointwise log-likelihood must be (draws, points)")
    if L.shape[0] < 2:
        raise InvalidInputError("need at least two draws")
    dead = np.flatnonzero(np.all(L == -np.inf, axis=0))
    if dead.size:
        raise NonFiniteError(f"point {int(dead[0])} has -inf log-likelihood at every draw")
    bad = np.flatnonzero(~np.all(np.isfinite(L), axis=0))
    if bad.size:
        raise NonFiniteError(f"point {int(bad[0])} has non-finite log-likelihood draws")
    return L


# --- pointwise evaluators -------------------------------------------------


def conditional_loglik(model, data: ClusteredDataset, draws: DrawMatrix) -> np.ndarray:
    """(S, N) unit log densities given each draw's latent variables."""
    if draws.zeta is None:
        raise MissingLatentError("conditional criteria need latent (zeta) draws")
    theta, zeta = draws.flat_theta, draws.flat_zeta
    S = theta.shape[0]
    out = np.empty((S, data.N))
    step = max(1, CHUNK_ELEMENTS // data.N)
    for a in range(0, S, step):
        out[a : a + step] = model.cond_loglik(data, theta[a : a + step], zeta[a : a + step])
    return out


def conditional_plugin(model, data, draws) -> float:
    """log f_c(y | posterior mean omega, posterior mean zeta)."""
    if draws.zeta is None:
        raise MissingLatentError("conditional criteria need latent (zeta) draws")
    th = draws.flat_theta.mean(axis=0)[None, :]
    z = draws.flat_zeta.mean(axis=0)[None, :]
    return float(model.cond_loglik(data, th, z).sum())


def plugin_deviance(loglik_fn, theta_mean, zeta_mean=None) -> float:
    """-2 log f(y | posterior mean) for a callable returning pointwise log densities."""
    out = loglik_fn(theta_mean) if zeta_mean is None else loglik_fn(theta_mean, zeta_mean)
    return float(-2.0 * np.sum(out))


# --- DIC --------------------------------------------------------------------


def dic_spiegelhalter(L, plugin_loglik: float, chains: int = 1, mode: str = "marginal") -> CriterionResult:
    """DIC with p_D = mean deviance - plug-in deviance.

    ``L`` is the (S, P) pointwise matrix or an (S,) vector of total
    log-likelihoods.  The Monte Carlo error covers p_D only (the plug-in
    term is treated as exact); the value error is twice that.
    """
    L = np.asarray(L, dtype=float)
    total = L.sum(axis=1) if L.ndim == 2 else L
    if total.size < 2:
        raise InvalidInputError("need at least two draws")
    if not np.all(np.isfinite(total)):
        raise NonFiniteError("non-finite deviance draws")
    dev = -2.0 * total
    mean_dev = float(dev.mean())
    plugin = -2.0 * float(plugin_loglik)
    p_d = mean_dev - plugin
    value = plugin + 2.0 * p_d
    assert abs(value - (mean_dev + p_d)) <= 1e-8 * max(1.0, abs(value))
    err = mcerr_p_spiegelhalter(dev, chains=chains)
    return CriterionResult(
        "dic-spiegelhalter", mode, value, p_d, 2.0 * err.mcerr, err.mcerr,
        pointwise=None,
        diagnostics={"plugin_deviance": plugin, "mean_deviance": mean_dev, "S_eff": err.S_eff},
    )


def _pair_indices(n_chains: int, n_iter: int):
    """Disjoint cross-chain pairs (0,1), (2,3), ...; same iteration index."""
    if n_chains < 2:
        raise InvalidInputError("Plummer's penalty needs independent draws from at least two chains")
    firsts = np.arange(0, n_chains - 1, 2)
    a = (firsts[:, None] * n_iter + np.arange(n_iter)).ravel()
    b = a + n_iter
    return a, b, firsts.size


def dic_plummer(
    model,
    data: ClusteredDataset,
    draws: DrawMatrix,
    mode: str = "marginal",
    method: str = "auto",
    evaluator: MarginalEvaluator | None = None,
    plugin_loglik: float | None = None,
    mean_loglik: float | None = None,
    jags: bool = False,
    seed: int = 0,
    n_pairs: int | None = None,
    replicate_M: int = 31,
) -> CriterionResult:
    """DIC with Plummer's penalty from cross-chain draw pairs.

    2 p_D^P is the average over pairs of the symmetric Kullback-Leibler
    divergence between the predictive densities at the two draws.  The
    closed form is used for exponential families (``method="closed"``),
    otherwise replicate data are drawn from each member of the pair
    (``method="replicate"``).  By default the value is
    plug-in deviance + 2 p_D^P; ``jags=True`` instead returns mean deviance
    + p_D^P, the substitution used by JAGS.
    """
    _check_mode(mode)
    theta, zeta = draws.flat_theta, draws.flat_zeta
    if mode == "conditional" and zeta is None:
        raise MissingLatentError("conditional criteria need latent (zeta) draws")
    a, b, pair_chains = _pair_indices(draws.n_chains, draws.n_iter)
    if n_pairs is not None and n_pairs < a.size:
        keep = np.linspace(0, a.size - 1, n_pairs).round().astype(int)
        a, b, pair_chains = a[keep], b[keep], 1
    if method == "auto":
        closed = mode == "conditional" or model.has_closed_marginal
        method = "closed" if closed else "replicate"
    if method == "closed":
        kl = _sym_kl_closed(model, data, theta, zeta, a, b, mode)
    elif method == "replicate":
        kl = _sym_kl_replicate(model, data, theta, zeta, a, b, mode, seed, replicate_M)
    else:
        raise InvalidInputError("method must be 'auto', 'closed' or 'replicate'")
    gamma = 0.5 * kl  # per-pair contribution to p_D^P
    p_d = float(gamma.mean())
    chains = pair_chains if gamma.size % max(pair_chains, 1) == 0 else 1
    err = mcerr_p_plummer(gamma, chains=chains)
    if plugin_loglik is None or (jags and mean_loglik is None):
        L = conditional_loglik(model, data, draws) if mode == "conditional" else evaluator.pointwise()
        mean_loglik = float(L.sum(axis=1).mean())
        plugin_loglik = (
            conditional_plugin(model, data, draws) if mode == "conditional" else evaluator.plugin()
        )
    plugin = -2.0 * plugin_loglik
    if jags:
        value = -2.0 * mean_loglik + p_d
        err_value = err.mcerr
    else:
        value = plugin + 2.0 * p_d
        err_value = 2.0 * err.mcerr
    return CriterionResult(
        "dic-plummer" + ("-jags" if jags else ""), mode, value, p_d, err_value, err.mcerr,
        diagnostics={"plugin_deviance": plugin, "method": method, "n_pairs": int(gamma.size), "S_eff": err.S_eff},
    )


def _sym_kl_closed(model, data, theta, zeta, a, b, mode):
    out = np.empty(a.size)
    step = max(1, CHUNK_ELEMENTS // max(data.N, 1))
    for s in range(0, a.size, step):
        ia, ib = a[s : s + step], b[s : s + step]
        if mode == "conditional":
            out[s : s + step] = model.sym_kl_conditional(data, theta[ia], zeta[ia], theta[ib], zeta[ib])
        else:
            out[s : s + step] = model.sym_kl_marginal(data, theta[ia], theta[ib])
    return out


def prior_grid_marginal(model, data, theta, M: int) -> np.ndarray:
    """(S, J) marginal log-likelihoods by non-adaptive quadrature at each draw's prior."""
    rule = gh_rule(M)
    theta = np.atleast_2d(theta)
    out = np.empty((theta.shape[0], data.J))
    step = max(1, CHUNK_ELEMENTS // max(data.N * M, 1))
    for s in range(0, theta.shape[0], step):
        th = theta[s : s + step]
        mean, sd = model.latent_prior(data, th)
        loc, log_mass = adapt(rule, mean, sd, sd, mean)
        terms = np.stack([model.cluster_cond_loglik(data, th, loc[..., m]) for m in range(M)], axis=-1)
        out[s : s + step] = logsumexp(terms + log_mass, axis=-1)
    return out


def _sym_kl_replicate(model, data, theta, zeta, a, b, mode, seed, M):
    """Single-replicate estimate of the symmetric KL for each pair.

    Draws y1 from the predictive at theta_a and y2 at theta_b and returns
    log f(y1|a) - log f(y1|b) + log f(y2|b) - log f(y2|a).
    """
    rng = np.random.default_rng(seed)
    n = a.size
    out = np.empty(n)
    for i in range(n):
        ta, tb = theta[a[i]], theta[b[i]]
        if mode == "conditional":
            za, zb = zeta[a[i]], zeta[b[i]]
            y1 = data.with_y(model.draw_responses(data, ta, za, rng))
            y2 = data.with_y(model.draw_responses(data, tb, zb, rng))
            ll = lambda d, t, z: model.cond_loglik(d, t[None], z[None]).sum()
            out[i] = ll(y1, ta, za) - ll(y1, tb, zb) + ll(y2, tb, zb) - ll(y2, ta, za)
        else:
            y1 = data.with_y(model.draw_responses(data, ta, model.draw_latent(data, ta, rng), rng))
            y2 = data.with_y(model.draw_responses(data, tb, model.draw_latent(data, tb, rng), rng))
            pair = np.stack([ta, tb])
            if model.has_closed_marginal:
                l1 = model.marg_loglik_closed(y1, pair).sum(axis=1)
                l2 = model.marg_loglik_closed(y2, pair).sum(axis=1)
            else:
                l1 = prior_grid_marginal(model, y1, pair, M).sum(axis=1)
                l2 = prior_grid_marginal(model, y2, pair, M).sum(axis=1)
            out[i] = l1[0] - l1[1] + l2[1] - l2[0]
    return out


# --- WAIC and PSIS-LOO ------------------------------------------------------


def _lppd_terms(L):
    lppd_i = logsumexp(L, axis=0) - math.log(L.shape[0])
    return lppd_i


def _lppd_mcerr(L, lppd_i, chains):
    """Delta-method error of each log posterior-mean density."""
    S, P = L.shape
    e = np.exp(L - lppd_i)  # mean one per column
    seff = ess_many(e.reshape(chains, S // chains, P)) if S // chains >= 4 else np.full(P, float(S))
    return np.sqrt(e.var(axis=0, ddof=1) / seff), seff


def waic(L, chains: int = 1, mode: str = "marginal") -> CriterionResult:
    """WAIC = -2 lppd + 2 p_W with p_W the sum of pointwise variances.

    Diagnostics report how many pointwise variances exceed 0.4.  The value
    error combines the p_W error with a delta-method error for lppd.
    """
    _check_mode(mode)
    L = _check_matrix(L)
    lppd_i = _lppd_terms(L)
    v, err_v, _ = pointwise_variance_errors(L, chains=chains)
    p_w = float(v.sum())
    lppd = float(lppd_i.sum())
    value = -2.0 * lppd + 2.0 * p_w
    err_l, _ = _lppd_mcerr(L, lppd_i, chains)
    mcerr_p = float(np.sqrt(np.sum(err_v**2)))
    mcerr_value = 2.0 * float(np.sqrt(np.sum(err_v**2) + np.sum(err_l**2)))
    over = np.flatnonzero(v > WAIC_VARIANCE_LIMIT)
    return CriterionResult(
        "waic", mode, value, p_w, mcerr_value, mcerr_p,
        pointwise=-2.0 * lppd_i + 2.0 * v,
        diagnostics={
            "lppd": lppd,
            "n_var_over_0.4": int(over.size),
            "points_var_over_0.4": over[:50].tolist(),
            "max_pointwise_var": float(v.max()),
        },
    )


def psis_loo(L, chains: int = 1, mode: str = "marginal", method: str = "pwm") -> CriterionResult:
    """PSIS-LOO on the deviance scale: leave-one-unit-out for conditional
    input, leave-one-cluster-out for marginal input.

    ``p_eff`` is lppd minus the LOO log predictive density.  Pareto k-hat
    values for every point are in the diagnostics.
    """
    _check_mode(mode)
    L = _check_matrix(L)
    S, P = L.shape
    lppd_i = _lppd_terms(L)
    _, seff = _lppd_mcerr(L, lppd_i, chains)
    elpd_i, khat, mcse_i = psis_loo_points(L, method=method, r_eff=seff / S)
    value = -2.0 * float(elpd_i.sum())
    p_loo = float(lppd_i.sum() - elpd_i.sum())
    mcerr = 2.0 * float(np.sqrt(np.sum(mcse_i**2)))
    return CriterionResult(
        "psis-loo", mode, value, p_loo, mcerr, mcerr / 2.0,
        pointwise=-2.0 * elpd_i,
        diagnostics={
            "pareto_k": khat.tolist(),
            "n_k_over_0.7": int(np.sum(khat > 0.7)),
            "n_k_over_0.5": int(np.sum(khat > 0.5)),
            "max_k": float(np.max(khat)),
            "pareto_fit": method,
        },
    )


# --- exact cross-validation -------------------------------------------------


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence((seed, fold)).generate_state(1)[0] % (2**31))


def _fold_config(config: ChainConfig, fold: int) -> ChainConfig:
    from dataclasses import replace

    return replace(config, seed=_fold_seed(config.seed, fold))


def _run_fold(args):
    model, data, config, fold_kind, k, M = args
    cfg = _fold_config(config, k)
    if fold_kind == "unit":
        fit_model = _refit_model(model)
        try:
            draws = run_mcmc(fit_model, data.drop_row(k), cfg)
        except ConvergenceError as exc:
            raise ConvergenceError(f"unit fold {k}: {exc}", exc.draws, exc.rhat) from None
        ll = _heldout_unit_loglik(fit_model, data, draws, k)
    else:
        try:
            keep = np.delete(np.arange(data.J), k)
            draws = run_mcmc(model.for_clusters(keep), data.drop_cluster(k), cfg)
        except ConvergenceError as exc:
            raise ConvergenceError(f"cluster fold {k}: {exc}", exc.draws, exc.rhat) from None
        ll = _heldout_cluster_loglik(model, data, draws.flat_theta, k, M)
    return ll, draws.n_chains


def _refit_model(model):
    from dataclasses import replace

    if getattr(model, "require_complete", False):
        return replace(model, require_complete=False)
    return model


def _heldout_unit_loglik(model, data, draws, row):
    """log f_c(y_row | theta_s, zeta_s); cluster indices survive a dropped row."""
    theta, zeta = draws.flat_theta, draws.flat_zeta
    out = np.empty(theta.shape[0])
    step = max(1, CHUNK_ELEMENTS // data.N)
    for s in range(0, theta.shape[0], step):
        out[s : s + step] = model.cond_loglik(data, theta[s : s + step], zeta[s : s + step])[:, row]
    return out


def _heldout_cluster_loglik(model, data, theta, j, M):
    """log f_m(y_j | theta_s) for a cluster excluded from the fit."""
    S = theta.shape[0]
    out = np.empty(S)
    step = max(1, CHUNK_ELEMENTS // max(data.N, 1))
    for s in range(0, S, step):
        th = theta[s : s + step]
        if model.has_closed_marginal:
            out[s : s + step] = model.marg_loglik_closed(data, th)[:, j]
        else:
            sub = data.select_clusters([j]) if data.group is None else data
            col = 0 if data.group is None else j
            out[s : s + step] = prior_grid_marginal(model, sub, th, M)[:, col]
    return out


def exact_loo_cv(
    model,
    data: ClusteredDataset,
    config: ChainConfig | None = None,
    fold: str = "cluster",
    folds=None,
    M: int = 31,
    workers: int | None = None,
) -> CriterionResult:
    """Exact leave-one-out cross-validation by refitting.

    ``fold="unit"`` leaves out single responses (the cluster keeps its
    latent variable, informed by its other units); ``fold="cluster"``
    leaves out whole clusters and scores them with the marginal density
    (closed form, or prior-grid quadrature with ``M`` points).  Fold seeds
    derive from ``(config.seed, fold index)``.  ``workers`` (default from
    ``LVIC_WORKERS``) runs folds in parallel processes.
    """
    if fold not in ("unit", "cluster"):
        raise InvalidInputError("fold must be 'unit' or 'cluster'")
    config = config or ChainConfig()
    model = model.prepare(data)
    n = data.N if fold == "unit" else data.J
    folds = list(range(n)) if folds is None else [int(f) for f in folds]
    if fold == "unit" and np.any(data.n_j[data.cluster[folds]] < 2):
        raise InvalidInputError("unit folds need clusters with at least two units")
    if fold == "cluster" and data.J < 2:
        raise InvalidInputError("cluster folds need at least two clusters")
    workers = workers if workers is not None else int(os.environ.get("LVIC_WORKERS", "1"))
    jobs = [(model, data, config, fold, k, M) for k in folds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_fold, jobs))
    else:
        results = [_run_fold(job) for job in jobs]
    elpd = np.empty(len(folds))
    err = np.empty(len(folds))
    for i, (ll, chains) in enumerate(results):
        elpd[i] = logsumexp(ll) - math.log(ll.size)
        e = np.exp(ll - elpd[i])
        rep = mcerr_mean(e, chains=chains if ll.size % chains == 0 else 1)
        err[i] = rep.mcerr  # relative error of the mean density = error of its log
    value = -2.0 * float(elpd.sum())
    mcerr = 2.0 * float(np.sqrt(np.sum(err**2)))
    return CriterionResult(
        "exact-loo", "conditional" if fold == "unit" else "marginal", value, math.nan, mcerr, math.nan,
        pointwise=-2.0 * elpd,
        diagnostics={"fold": fold, "folds": folds},
    )


# --- comparison -------------------------------------------------------------


@dataclass
class Comparison:
    names: list[str]
    results: list[CriterionResult]
    pairs: list[dict]

    def table(self) -> list[dict]:
        best = self.results[0].value
        return [
            {"model": n, "value": r.value, "delta": r.value - best, "p_eff": r.p_eff, "mcerr_value": r.mcerr_value}
            for n, r in zip(self.names, self.results)
        ]


def compare_models(results, names=None) -> Comparison:
    """Rank results of one criterion and mode, lowest value first.

    Each pair gets its difference, the combined Monte Carlo error
    sqrt(e1^2 + e2^2), and an ``indistinguishable`` flag when the
    difference is below twice the combined error.
    """
    results = list(results)
    if len(results) < 2:
        raise InvalidComparisonError("need at least two results to compare")
    if len({r.mode for r in results}) > 1:
        raise InvalidComparisonError("cannot compare conditional with marginal criteria")
    if len({r.name for r in results}) > 1:
        raise InvalidComparisonError("cannot compare different criteria")
    names = list(names) if names is not None else [f"model{i + 1}" for i in range(len(results))]
    order = sorted(range(len(results)), key=lambda i: results[i].value)
    rs = [results[i] for i in order]
    ns = [names[i] for i in order]
    pairs = []
    for i in range(len(rs)):
        for k in range(i + 1, len(rs)):
            d = rs[k].value - rs[i].value
            se = math.sqrt(rs[i].mcerr_value**2 + rs[k].mcerr_value**2)
            pairs.append(
                {"better": ns[i], "worse": ns[k], "delta": d, "mcerr": se, "indistinguishable": abs(d) < 2 * se}
            )
    return Comparison(ns, rs, pairs)


# --- one-stop evaluation ----------------------------------------------------

CRITERIA = ("dic-spiegelhalter", "dic-plummer", "waic", "psis-loo")
_ALIASES = {"dic": "dic-spiegelhalter", "dic-s": "dic-spiegelhalter", "loo": "psis-loo", "dic-p": "dic-plummer"}


def evaluate(
    model,
    data: ClusteredDataset,
    draws: DrawMatrix,
    criteria=CRITERIA,
    modes=MODES,
    M: int | None = None,
    seed: int = 0,
    jags: bool = False,
) -> list[CriterionResult]:
    """Compute the requested criteria in the requested modes from one fit.

    Marginal likelihoods use the closed form when the family has one and
    ``M`` is None, adaptive quadrature with ``M`` points otherwise.
    """
    model = model.prepare(data)
    out = []
    for mode in modes:
        _check_mode(mode)
        if mode == "conditional":
            L = conditional_loglik(model, data, draws)
            plugin = conditional_plugin(model, data, draws)
            ev = None
        else:
            if M is None and not model.has_closed_marginal:
                raise InvalidInputError(f"{model.family} marginal criteria need quadrature points M")
            ev = MarginalEvaluator(model, data, draws, M)
            L = ev.pointwise()
            plugin = ev.plugin()
        for name in criteria:
            name = _ALIASES.get(name, name)
            if name == "dic-spiegelhalter":
                out.append(dic_spiegelhalter(L, plugin, draws.n_chains, mode))
            elif name == "dic-plummer":
                out.append(
                    dic_plummer(
                        model, data, draws, mode, evaluator=ev, plugin_loglik=plugin,
                        mean_loglik=float(L.sum(axis=1).mean()), jags=jags, seed=seed,
                    )
                )
            elif name == "waic":
                out.append(waic(L, draws.n_chains, mode))
            elif name == "psis-loo":
                out.append(psis_loo(L, draws.n_chains, mode))
            else:
                raise InvalidInputError(f"unknown criterion {name!r}; choose from {CRITERIA}")
    return out


def results_to_json(results, path=None) -> str:
    text = json.dumps([r.to_dict() for r in results], indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def jensen_gap(model, data, draws, evaluator: MarginalEvaluator | None = None) -> tuple[float, float]:
    """Posterior means of total log f_m and log f_c; the first never exceeds the second."""
    ev = evaluator or MarginalEvaluator(model, data, draws, None if model.has_closed_marginal else 11)
    lm = float(ev.pointwise().sum(axis=1).mean())
    lc = float(conditional_loglik(model, data, draws).sum(axis=1).mean())
    return lm, lc


__all__ = [
    "CriterionResult", "Comparison", "MODES", "CRITERIA",
    "conditional_loglik", "conditional_plugin", "plugin_deviance",
    "dic_spiegelhalter", "dic_plummer", "waic", "psis_loo", "exact_loo_cv",
    "compare_models", "evaluate", "results_to_json", "jensen_gap", "prior_grid_marginal",
]
