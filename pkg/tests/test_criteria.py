import json

import numpy as np
import pytest
from scipy.special import logsumexp

from lvic.criteria import (
    compare_models,
    conditional_loglik,
    dic_plummer,
    dic_spiegelhalter,
    evaluate,
    exact_loo_cv,
    jensen_gap,
    psis_loo,
    results_to_json,
    waic,
)
from lvic.datasets import synthetic_vc
from lvic.errors import InvalidComparisonError, InvalidInputError, MissingLatentError, NonFiniteError
from lvic.models import build_model
from lvic.quadrature import MarginalEvaluator
from lvic.sampler import ChainConfig, DrawMatrix, run_mcmc

from .oracles import eight_schools_grid


@pytest.fixture(scope="module")
def eight_oracle():
    return eight_schools_grid(scale=4.0)


# --- formulas on fixed matrices -------------------------------------------


def test_waic_formula(rng):
    L = rng.normal(-1.0, 0.3, size=(400, 6))
    r = waic(L)
    lppd = np.sum(np.log(np.mean(np.exp(L), axis=0)))
    pw = np.sum(np.var(L, axis=0, ddof=1))
    assert r.value == pytest.approx(-2 * lppd + 2 * pw, rel=1e-12)
    assert r.p_eff == pytest.approx(pw, rel=1e-12)
    assert r.pointwise.sum() == pytest.approx(r.value, rel=1e-12)
    assert r.diagnostics["n_var_over_0.4"] == 0


def test_waic_flags_large_variances(rng):
    L = np.column_stack([rng.normal(0, 0.1, 500), rng.normal(0, 1.0, 500)])
    d = waic(L).diagnostics
    assert d["n_var_over_0.4"] == 1 and d["points_var_over_0.4"] == [1]


def test_waic_rejects_dead_column(rng):
    L = rng.standard_normal((50, 3))
    L[:, 2] = -np.inf
    with pytest.raises(NonFiniteError, match="point 2"):
        waic(L)


def test_dic_identity_and_formula(rng):
    L = rng.normal(-2.0, 0.5, size=(300, 5))
    plugin = float(L.mean(axis=0).sum()) + 0.7
    r = dic_spiegelhalter(L, plugin, chains=3)
    mean_dev = -2 * L.sum(1).mean()
    p_d = mean_dev + 2 * plugin
    assert r.p_eff == pytest.approx(p_d, rel=1e-12)
    assert r.value == pytest.approx(-2 * plugin + 2 * p_d, rel=1e-12)
    assert abs(r.value - (mean_dev + p_d)) < 1e-8
    assert r.mcerr_value == pytest.approx(2 * r.mcerr_p)
    # vector input of per-draw totals gives the same answer
    assert dic_spiegelhalter(L.sum(1), plugin, chains=3).value == pytest.approx(r.value, rel=1e-14)


def test_psis_loo_reports_all_k(rng):
    L = rng.normal(-1.0, 0.2, size=(1000, 7))
    r = psis_loo(L)
    assert len(r.diagnostics["pareto_k"]) == 7
    # small pointwise variances: LOO and WAIC agree to second order
    lppd = np.sum(logsumexp(L, axis=0) - np.log(1000))
    pw = np.sum(L.var(axis=0, ddof=1))
    assert r.value == pytest.approx(-2 * lppd + 2 * pw, abs=0.05)
    assert r.p_eff == pytest.approx(pw, abs=0.03)


def test_compare_models():
    a = waic(np.random.default_rng(1).normal(-1, 0.1, (100, 3)))
    b = waic(np.random.default_rng(2).normal(-1.5, 0.1, (100, 3)))
    cmp = compare_models([b, a], names=["B", "A"])
    assert cmp.names == ["A", "B"]
    assert cmp.pairs[0]["delta"] == pytest.approx(b.value - a.value)
    assert cmp.pairs[0]["indistinguishable"] is False
    with pytest.raises(InvalidComparisonError):
        compare_models([a, waic(np.zeros((10, 2)) - 1, mode="conditional")])
    with pytest.raises(InvalidComparisonError):
        compare_models([a, psis_loo(np.zeros((10, 2)) - 1)])
    with pytest.raises(InvalidComparisonError):
        compare_models([a])


def test_result_serialization(rng):
    r = waic(rng.normal(-1, 0.1, (100, 3)))
    d = json.loads(results_to_json([r]))[0]
    assert d["value"] == r.value and d["mode"] == "marginal" and "mcerr_p" in d


# --- eight schools against grid integration -----------------------------------


def test_eight_schools_waic_and_loo(eight4_fit, eight_oracle):
    model, data, draws = eight4_fit
    res = {r.label: r for r in evaluate(model, data, draws, criteria=("waic", "psis-loo"))}
    assert res["waic-m"].value == pytest.approx(eight_oracle["waic_m"], abs=0.5)
    assert res["waic-c"].value == pytest.approx(eight_oracle["waic_c"], abs=0.6)
    assert res["psis-loo-m"].value == pytest.approx(eight_oracle["loco"], abs=0.8)


def test_eight_schools_exact_loco(eight4_fit, eight_oracle):
    model, data, _ = eight4_fit
    r = exact_loo_cv(model, data, ChainConfig(n_keep=1000, seed=4), fold="cluster")
    assert r.pointwise.shape == (8,)
    assert r.value == pytest.approx(eight_oracle["loco"], abs=0.6)


def test_exact_loo_unit_folds_run():
    data = synthetic_vc(J=6, n=3, seed=2)
    model = build_model("vc", data)
    r = exact_loo_cv(model, data, ChainConfig(n_keep=200, n_warmup=200, seed=1), fold="unit", folds=[0, 5])
    assert r.mode == "conditional" and r.pointwise.shape == (2,) and np.all(np.isfinite(r.pointwise))
    with pytest.raises(InvalidInputError):
        exact_loo_cv(model, data, fold="item")


# --- fitted-model properties ------------------------------------------------------


def test_conditional_needs_latent_draws(vc_small_fit):
    model, data, draws = vc_small_fit
    bare = DrawMatrix(draws.theta, None, draws.names)
    with pytest.raises(MissingLatentError):
        conditional_loglik(model, data, bare)
    with pytest.raises(MissingLatentError):
        dic_plummer(model, data, bare, "conditional")


def test_plummer_needs_two_chains(vc_small_fit):
    model, data, draws = vc_small_fit
    one = draws.subset_chains([0])
    with pytest.raises(InvalidInputError):
        dic_plummer(model, data, one, "marginal", evaluator=MarginalEvaluator(model, data, one))


def test_plummer_closed_vs_replicate(vc_fit):
    model, data, draws = vc_fit
    ev = MarginalEvaluator(model, data, draws)
    for mode in ("conditional", "marginal"):
        closed = dic_plummer(model, data, draws, mode, method="closed", evaluator=ev)
        rep = dic_plummer(model, data, draws, mode, method="replicate", evaluator=ev, seed=3)
        se = np.hypot(closed.mcerr_p, rep.mcerr_p)
        assert abs(closed.p_eff - rep.p_eff) < 3 * se, mode


def test_plummer_jags_variant(vc_small_fit):
    model, data, draws = vc_small_fit
    ev = MarginalEvaluator(model, data, draws)
    std = dic_plummer(model, data, draws, "marginal", evaluator=ev)
    jags = dic_plummer(model, data, draws, "marginal", evaluator=ev, jags=True)
    mean_dev = -2 * ev.pointwise().sum(1).mean()
    assert jags.value == pytest.approx(mean_dev + jags.p_eff, rel=1e-12)
    assert std.value == pytest.approx(std.diagnostics["plugin_deviance"] + 2 * std.p_eff, rel=1e-12)


def test_jensen_and_ordering_vc(vc_fit):
    model, data, draws = vc_fit
    lm, lc = jensen_gap(model, data, draws)
    assert lm < lc
    res = {r.label: r for r in evaluate(model, data, draws, criteria=("dic", "waic"))}
    assert res["dic-spiegelhalter-c"].p_eff > res["dic-spiegelhalter-m"].p_eff
    assert res["waic-c"].p_eff > res["waic-m"].p_eff


def test_loco_harder_than_luo():
    data = synthetic_vc(J=20, n=5, seed=6)
    model = build_model("vc", data)
    draws = run_mcmc(model, data, ChainConfig(n_keep=1000, seed=2))
    res = {r.label: r for r in evaluate(model, data, draws, criteria=("psis-loo",))}
    assert res["psis-loo-m"].value >= res["psis-loo-c"].value


def test_rasch_marginal_requires_quadrature(small_rasch_fit):
    model, data, draws = small_rasch_fit
    with pytest.raises(InvalidInputError):
        evaluate(model, data, draws, criteria=("waic",), modes=("marginal",))
    r = evaluate(model, data, draws, criteria=("waic",), modes=("marginal",), M=11)[0]
    assert r.pointwise.shape == (data.J,)


def test_unknown_criterion(vc_small_fit):
    model, data, draws = vc_small_fit
    with pytest.raises(InvalidInputError):
        evaluate(model, data, draws, criteria=("bic",))
