import numpy as np
import pytest
from scipy import stats
from scipy.special import expit

from lvic import ClusteredDataset, from_matrix, read_csv, write_csv
from lvic.datasets import CFA_TRUTH, load_builtin, synthetic_cfa, synthetic_vc
from lvic.errors import DomainError, InvalidInputError, ParseError, UnsupportedFamilyError
from lvic.models import (
    CFA_PARAM_COUNTS,
    CFA_PATTERNS,
    EightSchools,
    ExponentialSD,
    GammaPrecision,
    MultiGroupFactor,
    Normal,
    RaschLatentRegression,
    StudentT,
    VarianceComponents,
    build_model,
    cond_loglik_cluster,
    cond_loglik_unit,
    log_priors,
    marg_loglik_cluster_closed,
    parse_prior,
    simulate,
)

from .oracles import gauss_kl, mvn_kl, random_intercept_mvn_logpdf


# --- data -------------------------------------------------------------------


def test_csv_round_trip(tmp_path):
    data = synthetic_cfa(seed=2)
    path = tmp_path / "d.csv"
    write_csv(data, path)
    back = read_csv(path)
    np.testing.assert_array_equal(back.y, data.y)
    np.testing.assert_array_equal(back.cluster, data.cluster)
    np.testing.assert_array_equal(back.group, data.group)


def test_csv_covariates_round_trip(tmp_path):
    data = load_builtin("synthetic-rasch")
    write_csv(data, tmp_path / "r.csv")
    back = read_csv(tmp_path / "r.csv")
    assert back.covariate_names == data.covariate_names
    np.testing.assert_array_equal(back.covariates, data.covariates)


@pytest.mark.parametrize(
    "body,line",
    [
        ("cluster,unit,response\n1,1,0.5\n1,2,abc\n", 3),
        ("cluster,unit,response\n1,1,0.5\n2,1\n", 3),
        ("cluster,unit,resp\n1,1,0.5\n", 1),
        ("cluster,unit,response,x\n1,1,0,1.0\n1,2,1,2.0\n", 3),
    ],
)
def test_csv_errors_report_line(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(ParseError) as exc:
        read_csv(path)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_dataset_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        ClusteredDataset(np.array([1.0, np.nan]), np.array([0, 0]), np.array([0, 1]))


def test_drop_row_and_cluster():
    data = from_matrix(np.arange(12.0).reshape(4, 3))
    d1 = data.drop_row(4)
    assert d1.N == 11 and d1.J == 4 and d1.n_j.tolist() == [3, 2, 3, 3]
    d2 = data.drop_cluster(1)
    assert d2.J == 3 and d2.y[:3].tolist() == [0.0, 1.0, 2.0] and d2.y[3] == 6.0
    single = from_matrix(np.ones((2, 1)))
    with pytest.raises(InvalidInputError):
        single.drop_row(0)


# --- priors -----------------------------------------------------------------


def test_prior_densities_match_scipy():
    x = np.array([-1.3, 0.2, 4.0])
    np.testing.assert_allclose(Normal(1.0, 4.0).logpdf(x), stats.norm(1, 2).logpdf(x))
    np.testing.assert_allclose(StudentT(1.0, 0.0, 1.0).logpdf(x), stats.cauchy().logpdf(x))
    v = np.array([0.3, 1.0, 5.0])
    # precision ~ Gamma(shape 2, rate 3) -> variance is inverse gamma(2, scale 3)
    np.testing.assert_allclose(GammaPrecision(2.0, 3.0).logpdf(v), stats.invgamma(2, scale=3).logpdf(v))
    np.testing.assert_allclose(ExponentialSD(0.1).logpdf(v), stats.expon(scale=10).logpdf(v))
    assert np.isneginf(GammaPrecision(1, 1).logpdf(np.array([-1.0]))).all()


def test_parse_prior():
    assert parse_prior({"normal": [0, 9]}) == Normal(0.0, 9.0)
    assert parse_prior({"gamma_precision": [1, 0.5]}) == GammaPrecision(1.0, 0.5)
    with pytest.raises(ValueError):
        parse_prior({"lognormal": [0, 1]})


# --- Gaussian families ---------------------------------------------------------


def test_vc_marginal_matches_mvn():
    data = synthetic_vc(J=6, n=4, seed=1)
    model = VarianceComponents()
    theta = np.array([[0.7, 1.3, 0.4], [-0.2, 0.5, 2.0]])
    got = model.marg_loglik_closed(data, theta)
    for s, (a, s2, t2) in enumerate(theta):
        for j in range(data.J):
            y = data.y[data.rows_of(j)]
            want = random_intercept_mvn_logpdf(y, np.full(4, a), np.ones(4), np.full(4, s2), 0.0, t2)
            assert got[s, j] == pytest.approx(want, rel=1e-12)


def test_vc_parameterizations_agree():
    data = synthetic_vc(J=5, n=3, seed=4)
    a = VarianceComponents("A").marg_loglik_closed(data, np.array([1.1, 0.8, 0.6]))  # sigma2, alpha, tau2
    b = VarianceComponents("B").marg_loglik_closed(data, np.array([0.8, 1.1, 0.6]))
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_vc_tau2_zero_is_conditional_at_zero():
    data = synthetic_vc(J=5, n=3, seed=4)
    model = VarianceComponents(tau2=0.0)
    theta = np.array([0.3, 1.7])
    np.testing.assert_allclose(
        model.marg_loglik_closed(data, theta)[0],
        cond_loglik_cluster(model, data, theta, np.zeros(data.J)),
        rtol=1e-12,
    )
    with pytest.raises(InvalidInputError):
        VarianceComponents("A", tau2=0.0)
    with pytest.raises(DomainError):
        VarianceComponents(tau2=-1.0)


def test_cond_loglik_matches_scipy():
    data = synthetic_vc(J=4, n=3, seed=0)
    model = VarianceComponents()
    theta = np.array([0.5, 2.0, 1.0])
    zeta = np.array([0.1, -0.3, 0.0, 1.2])
    want = stats.norm(0.5 + zeta[data.cluster], np.sqrt(2.0)).logpdf(data.y)
    np.testing.assert_allclose(cond_loglik_unit(model, data, theta, zeta), want, rtol=1e-12)


def test_cfa_marginal_matches_mvn():
    data = synthetic_cfa(seed=0)
    model = MultiGroupFactor("3a")
    rng = np.random.default_rng(0)
    theta = np.empty(model.n_params)
    for k, kind in enumerate(model.param_kinds):
        theta[k] = {"nu": 9.0, "lam": 1.0, "sigma2": 2.0, "alpha": 0.2, "tau2": 2.5}[kind] + 0.1 * rng.random()
    got = model.marg_loglik_closed(data, theta[None])[0]
    rp = model.row_params(data, theta[None])
    nu, lam, var = (np.asarray(a)[0] for a in rp)
    mean, sd = model.latent_prior(data, theta[None])
    for j in (0, 80, 160, 294):
        rows = data.rows_of(j)
        want = random_intercept_mvn_logpdf(data.y[rows], nu[rows], lam[rows], var[rows], mean[0, j], sd[0, j] ** 2)
        assert got[j] == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("pattern", CFA_PATTERNS)
def test_cfa_parameter_counts(pattern):
    # free-parameter counts of the nine restriction patterns
    assert MultiGroupFactor(pattern).n_params == CFA_PARAM_COUNTS[pattern]


def test_cfa_param_count_table():
    assert CFA_PARAM_COUNTS == {"2": 30, "2a": 31, "3": 22, "3a": 23, "4": 21, "5": 16, "5a": 17, "5b": 18, "6": 17}


def test_cfa_requires_groups():
    with pytest.raises(InvalidInputError):
        MultiGroupFactor("2").prepare(synthetic_vc(J=8, n=3))


def test_sym_kl_conditional_gaussian():
    data = synthetic_vc(J=3, n=2, seed=0)
    model = VarianceComponents()
    t1, t2 = np.array([[0.0, 1.0, 1.0]]), np.array([[0.5, 2.0, 1.0]])
    z1, z2 = np.array([[0.1, 0.2, 0.3]]), np.array([[0.0, -0.1, 0.4]])
    m1, m2 = 0.0 + z1[0][data.cluster], 0.5 + z2[0][data.cluster]
    want = np.sum(gauss_kl(m1, 1.0, m2, 2.0) + gauss_kl(m2, 2.0, m1, 1.0))
    assert model.sym_kl_conditional(data, t1, z1, t2, z2)[0] == pytest.approx(want, rel=1e-12)


def test_sym_kl_marginal_gaussian():
    data = synthetic_cfa(seed=1)
    model = MultiGroupFactor("2")
    rng = np.random.default_rng(1)
    base = np.array([{"nu": 9.0, "lam": 1.0, "sigma2": 2.0, "alpha": 0.1, "tau2": 2.5}[k] for k in model.param_kinds])
    t1 = base + 0.05 * rng.standard_normal(base.size)
    t2 = base + 0.05 * rng.standard_normal(base.size)
    got = model.sym_kl_marginal(data, t1[None], t2[None])[0]
    want = 0.0
    for j in range(data.J):
        (m1,), (S1,) = model._cluster_mvn(data, t1[None], j)
        (m2,), (S2,) = model._cluster_mvn(data, t2[None], j)
        want += mvn_kl(m1, S1, m2, S2) + mvn_kl(m2, S2, m1, S1)
    assert got == pytest.approx(want, rel=1e-9)


def test_eight_schools_marginal():
    model = EightSchools()
    data = model.dataset()
    theta = np.array([8.0, 6.0])
    want = stats.norm(8.0, np.sqrt(36 + np.array(model.sigma) ** 2)).logpdf(data.y)
    np.testing.assert_allclose(marg_loglik_cluster_closed(model, data, theta), want, rtol=1e-12)
    assert log_priors(model, np.array([0.0, -1.0])) == -np.inf


# --- Rasch ----------------------------------------------------------------------


def test_rasch_cond_loglik_manual():
    Y = np.array([[1, 0, 1], [0, 0, 1.0]])
    data = from_matrix(Y, covariates=np.array([[2.0], [5.0]]), covariate_names=("x",))
    model = RaschLatentRegression(n_items=3, terms=("x",)).prepare(data)
    theta = np.array([0.4, -0.1, 0.2, 0.3, 1.0])  # delta1, delta2, const, x, tau
    zeta = np.array([0.5, -0.5])
    delta = np.array([0.4, -0.1, -0.3])
    eta = 0.2 + 0.3 * np.array([2.0, 5.0]) + zeta
    p = expit(eta[:, None] - delta[None, :])
    want = (Y * np.log(p) + (1 - Y) * np.log1p(-p)).ravel()
    np.testing.assert_allclose(cond_loglik_unit(model, data, theta, zeta), want, rtol=1e-12)
    np.testing.assert_allclose(
        cond_loglik_cluster(model, data, theta, zeta), want.reshape(2, 3).sum(1), rtol=1e-12
    )


def test_rasch_extreme_logits_are_finite():
    data = from_matrix(np.array([[1.0, 0.0]]))
    model = RaschLatentRegression(n_items=2)
    out = cond_loglik_unit(model, data, np.array([0.0, 0.0, 1.0]), np.array([800.0]))
    assert np.all(np.isfinite(out)) and out[0] == 0.0 and out[1] == pytest.approx(-800.0)


def test_rasch_difficulties_sum_to_zero():
    model = RaschLatentRegression(n_items=4)
    theta = np.array([[0.3, -1.0, 0.2, 0.0, 1.0]])
    assert model.delta_full(theta).sum() == pytest.approx(0.0, abs=1e-15)


def test_rasch_coefficient_standardization():
    data = load_builtin("synthetic-rasch")
    model = build_model("rasch:4", data)
    anger, male = data.covariate("anger"), data.covariate("male")
    (c1, s1), (c2, s2) = model.scaling
    assert c1 == pytest.approx(anger.mean()) and s1 == pytest.approx(2 * anger.std())
    assert c2 == pytest.approx(male.mean()) and s2 == pytest.approx(1.0)
    g = np.array([[-1.4, 0.07, 0.3]])
    theta = np.concatenate([np.zeros((1, 23)), g, [[1.0]]], axis=1)
    back = model.gamma_from_standardized(model.standardized_gamma(theta))
    np.testing.assert_allclose(back, g, rtol=1e-12)
    # same linear predictor on both scales
    x = np.column_stack([np.ones(data.J), anger, male])
    xs = np.column_stack([np.ones(data.J), (anger - c1) / s1, (male - c2) / s2])
    np.testing.assert_allclose(x @ g[0], xs @ model.standardized_gamma(theta)[0], rtol=1e-12, atol=1e-12)


def test_rasch_rejects_non_binary_and_incomplete():
    with pytest.raises(InvalidInputError):
        RaschLatentRegression(n_items=2).prepare(from_matrix(np.array([[0.0, 2.0]])))
    ragged = ClusteredDataset(np.array([1.0, 0.0, 1.0]), np.array([0, 0, 1]), np.array([0, 1, 0]))
    with pytest.raises(InvalidInputError):
        RaschLatentRegression(n_items=2).prepare(ragged)
    RaschLatentRegression(n_items=2, require_complete=False).prepare(ragged)


def test_rasch_has_no_closed_marginal():
    data = load_builtin("small-rasch")
    model = build_model("rasch:1", data)
    with pytest.raises(UnsupportedFamilyError):
        model.marg_loglik_closed(data, np.zeros(model.n_params))


# --- building and simulation ------------------------------------------------


def test_build_model_specs():
    assert isinstance(build_model("vc"), VarianceComponents)
    assert build_model("vc:A").parameterization == "A"
    assert build_model("cfa:5b").n_params == 18
    assert build_model({"family": "vc", "priors": {"alpha": {"normal": [0, 100]}}}).alpha_prior == Normal(0.0, 100.0)
    with pytest.raises(InvalidInputError):
        build_model({"family": "vc", "bogus": 1})
    with pytest.raises(InvalidInputError):
        build_model("nope")


def test_simulate_recovers_moments():
    model = VarianceComponents()
    data = simulate(model, np.array([2.0, 1.0, 0.5]), J=4000, n_j=2, seed=5)
    y = data.y.reshape(-1, 2)
    assert y.mean() == pytest.approx(2.0, abs=0.05)
    # within-cluster covariance is tau2
    assert np.cov(y[:, 0], y[:, 1])[0, 1] == pytest.approx(0.5, abs=0.06)
    assert simulate(model, np.array([2.0, 1.0, 0.5]), J=3, n_j=2, seed=5).y.tolist() == \
        simulate(model, np.array([2.0, 1.0, 0.5]), J=3, n_j=2, seed=5).y.tolist()


def test_cfa_generator_truth():
    assert sum(CFA_TRUTH["group_sizes"]) == 295
    data = synthetic_cfa(seed=0)
    assert data.J == 295 and data.G == 4 and data.n_units == 3
