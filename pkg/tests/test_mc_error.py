import numpy as np
import pytest

from lvic.errors import InvalidInputError
from lvic.mc_error import (
    mcerr_mean,
    mcerr_p_waic,
    mcerr_variance,
    pointwise_variance_errors,
)

from .oracles import ar1


def test_mcerr_mean_with_given_seff(rng):
    x = rng.standard_normal(1000) * 2 + 1
    rep = mcerr_mean(x, S_eff=250)
    assert rep.mcerr == pytest.approx(np.sqrt(x.var(ddof=1) / 250), rel=1e-12)
    assert rep.estimate == pytest.approx(x.mean()) and rep.S == 1000


def test_mcerr_mean_calibrated_on_ar1():
    # spread of sample means over replicates matches the reported error
    rng = np.random.default_rng(5)
    rho, n = 0.7, 2000
    means, errs = [], []
    for _ in range(300):
        x = ar1(n, rho, rng, chains=2).ravel()
        rep = mcerr_mean(x, chains=2)
        means.append(rep.estimate)
        errs.append(rep.mcerr)
    assert np.std(means) == pytest.approx(np.mean(errs), rel=0.12)


def test_mcerr_variance_matches_replication():
    rng = np.random.default_rng(8)
    S = 400
    vs, errs = [], []
    for _ in range(1500):
        x = rng.standard_normal(S) * 1.5
        rep = mcerr_variance(x, S_eff=S)
        vs.append(rep.estimate)
        errs.append(rep.mcerr)
    # estimate is the unbiased sample variance
    assert rep.estimate == pytest.approx(x.var(ddof=1), rel=1e-12)
    assert np.std(vs) == pytest.approx(np.mean(errs), rel=0.1)
    # iid normal: SD of the sample variance is sqrt(2 sigma^4 / (S - 1))
    assert np.mean(errs) == pytest.approx(np.sqrt(2 * 1.5**4 / (S - 1)), rel=0.1)


def test_pointwise_errors_agree_with_scalar(rng):
    L = rng.standard_normal((600, 4)) * np.array([1.0, 0.5, 2.0, 0.1])
    v, err, seff = pointwise_variance_errors(L, chains=3)
    for p in range(4):
        rep = mcerr_variance(L[:, p], chains=3)
        assert v[p] == pytest.approx(rep.estimate, rel=1e-12)
        assert err[p] == pytest.approx(rep.mcerr, rel=1e-12)
    total = mcerr_p_waic(L, chains=3)
    assert total.estimate == pytest.approx(v.sum()) and total.mcerr == pytest.approx(np.sqrt((err**2).sum()))


def test_invalid_inputs(rng):
    x = rng.standard_normal(10)
    with pytest.raises(InvalidInputError):
        mcerr_mean(x, S_eff=0)
    with pytest.raises(InvalidInputError):
        mcerr_mean(x, chains=3)
    with pytest.raises(InvalidInputError):
        mcerr_variance(x[:2])
    with pytest.raises(InvalidInputError):
        pointwise_variance_errors(rng.standard_normal((10, 2)), S_eff=np.array([1.0, -1.0]))
