import numpy as np
import pytest

from lvic.datasets import load_builtin, synthetic_vc
from lvic.errors import ConvergenceError, InvalidInputError, ParseError
from lvic.models import VarianceComponents, build_model
from lvic.sampler import ChainConfig, DrawMatrix, effective_sample_size, gelman_rubin, run_mcmc
from lvic.sampler.diagnostics import ess_many
from lvic.sampler.kernels import INDEPENDENCE_BLOCKS

from .oracles import ar1, eight_schools_posterior_means, vc_posterior_means


# --- diagnostics ------------------------------------------------------------


def _psrf(x):
    m, n = x.shape
    W = np.mean([np.var(c, ddof=1) for c in x])
    B = n * np.var(x.mean(1), ddof=1)
    return np.sqrt(((n - 1) / n * W + B / n) / W)


def test_rhat_formula(rng):
    x = rng.standard_normal((4, 300)) + np.array([0.0, 0.1, 0.3, 0.0])[:, None]
    assert gelman_rubin(x) == pytest.approx(max(1.0, _psrf(x)), rel=1e-12)


def test_rhat_separated_chains(rng):
    x = np.vstack([rng.standard_normal(500), rng.standard_normal(500) + 5])
    assert gelman_rubin(x) > 3


def test_rhat_degenerate_cases():
    assert gelman_rubin(np.ones((2, 10))) == 1.0
    assert gelman_rubin(np.vstack([np.zeros(10), np.ones(10)])) == np.inf
    same = np.random.default_rng(0).standard_normal(50)
    assert gelman_rubin(np.vstack([same, same])) == 1.0
    with pytest.raises(InvalidInputError):
        gelman_rubin(np.ones((1, 10)))


@pytest.mark.parametrize("rho", [0.0, 0.5, 0.9])
def test_ess_ar1_matches_theory(rho):
    rng = np.random.default_rng(int(rho * 10))
    x = ar1(20000, rho, rng, chains=4)
    S = x.size
    want = S * (1 - rho) / (1 + rho)
    assert effective_sample_size(x) == pytest.approx(want, rel=0.15)


def test_ess_constant_and_bounds(rng):
    assert effective_sample_size(np.full((2, 50), 3.0)) == 100
    x = rng.standard_normal((3, 400))
    assert 0 < effective_sample_size(x) <= x.size


def test_ess_many_agrees_with_scalar(rng):
    x = rng.standard_normal((3, 200, 5)).cumsum(axis=1) * 0.1 + rng.standard_normal((3, 200, 5))
    many = ess_many(x, chunk=2)
    for p in range(5):
        assert many[p] == pytest.approx(effective_sample_size(x[:, :, p]), rel=1e-12)


# --- sampler ----------------------------------------------------------------


def test_eight_schools_posterior_means(eight4_fit):
    model, data, draws = eight4_fit
    mu_ref, tau_ref = eight_schools_posterior_means(scale=4.0)
    mu, tau = draws.param("mu").mean(), draws.param("tau").mean()
    ess = draws.ess()
    sd_mu, sd_tau = draws.param("mu").std(), draws.param("tau").std()
    assert abs(mu - mu_ref) < 4 * sd_mu / np.sqrt(ess["mu"])
    assert abs(tau - tau_ref) < 4 * sd_tau / np.sqrt(ess["tau"])


def test_vc_posterior_means(vc_fit):
    model, data, draws = vc_fit
    ref = vc_posterior_means(data.y.reshape(data.J, -1))
    ess = draws.ess()
    for name, r in zip(("alpha", "sigma2", "tau2"), ref):
        x = draws.param(name)
        assert abs(x.mean() - r) < 4 * x.std() / np.sqrt(ess[name]) + 1e-3 * abs(r), name


def test_fit_meets_default_gate(vc_fit, small_rasch_fit, eight4_fit):
    for _, _, draws in (vc_fit, small_rasch_fit, eight4_fit):
        assert draws.info["converged"]
        assert draws.info["max_rhat"] < 1.05
        assert draws.S == 10000


def test_acceptance_rates_in_range(small_rasch_fit, vc_fit, cfa_fit):
    for _, _, draws in (small_rasch_fit, vc_fit, cfa_fit):
        for block, rate in draws.info["acceptance"].items():
            if block in INDEPENDENCE_BLOCKS:
                assert rate >= 0.1, block
            else:
                assert 0.1 <= rate <= 0.9, block


def test_fixed_zero_latent_variance():
    data = synthetic_vc(J=10, n=4, seed=1)
    draws = run_mcmc(VarianceComponents(tau2=0.0), data, ChainConfig(n_keep=200, n_warmup=100, seed=2))
    assert np.abs(draws.zeta).max() < 1e-12


def test_same_seed_same_draws():
    data = synthetic_vc(J=10, n=3, seed=1)
    cfg = ChainConfig(n_keep=100, n_warmup=50, seed=9)
    a = run_mcmc(VarianceComponents(), data, cfg)
    b = run_mcmc(VarianceComponents(), data, cfg)
    np.testing.assert_array_equal(a.theta, b.theta)
    np.testing.assert_array_equal(a.zeta, b.zeta)
    c = run_mcmc(VarianceComponents(), data, ChainConfig(n_keep=100, n_warmup=50, seed=10))
    assert not np.array_equal(a.theta, c.theta)


def test_convergence_failure_keeps_draws():
    data = load_builtin("eight-schools", scale=4.0)
    cfg = ChainConfig(n_keep=8, n_warmup=0, seed=1, rhat_threshold=1.0001, max_extensions=1)
    with pytest.raises(ConvergenceError) as exc:
        run_mcmc(build_model("eight-schools:4"), data, cfg)
    assert exc.value.draws is not None and exc.value.draws.n_iter == 8
    assert max(exc.value.rhat.values()) >= 1.0001


def test_chain_config_validation():
    with pytest.raises(InvalidInputError):
        ChainConfig(n_chains=1)
    with pytest.raises(InvalidInputError):
        ChainConfig.from_mapping({"n_chainz": 3})
    assert ChainConfig.from_mapping({"n_keep": 10}).n_keep == 10


def test_draws_csv_round_trip(tmp_path, vc_small_fit):
    model, data, draws = vc_small_fit
    draws.to_csv(tmp_path / "d.csv")
    back = DrawMatrix.from_csv(tmp_path / "d.csv", model.names)
    np.testing.assert_array_equal(back.theta, draws.theta)
    np.testing.assert_array_equal(back.zeta, draws.zeta)


def test_draws_csv_errors(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("chain,iter,alpha\n1,1,0.5\n1,2,x\n")
    with pytest.raises(ParseError) as exc:
        DrawMatrix.from_csv(p)
    assert exc.value.line == 3
    p.write_text("chain,iter,alpha\n1,1,0.5\n")
    with pytest.raises(ParseError):
        DrawMatrix.from_csv(p, ("alpha", "sigma2"))
