"""Independent reference computations used by the tests.

Nothing here calls into ``lvic``; quantities come from brute-force grids,
dense linear algebra or scipy distributions.
"""

import numpy as np
from scipy.special import logsumexp
from scipy.stats import multivariate_normal, norm

EIGHT_Y = np.array([28, 8, -3, 7, -1, 1, 18, 12.0])
EIGHT_SIGMA = np.array([15, 10, 16, 11, 9, 11, 10, 18.0])


def eight_schools_grid(scale=4.0, n_mu=801, n_tau=1600):
    """WAIC_m, exact LOcO and WAIC_c under a flat prior on (mu, tau) by grid integration."""
    y = EIGHT_Y * scale
    s = EIGHT_SIGMA
    mu = np.linspace(-150, 250, n_mu) * max(scale / 4, 0.25)
    tau = np.linspace(0.01, 400, n_tau) * max(scale / 4, 0.25)
    M, T = np.meshgrid(mu, tau, indexing="ij")
    lm = norm.logpdf(y, M[..., None], np.sqrt(T[..., None] ** 2 + s**2))
    lp = lm.sum(-1)
    w = np.exp(lp - lp.max())
    w /= w.sum()
    W = w[..., None]
    lppd = np.log((W * np.exp(lm)).sum((0, 1))).sum()
    m1 = (W * lm).sum((0, 1))
    pw = ((W * lm**2).sum((0, 1)) - m1**2).sum()
    waic_m = -2 * lppd + 2 * pw
    loco = 2 * np.sum(np.log((W * np.exp(-lm)).sum((0, 1))))
    # theta_j | mu, tau, y is normal; average f_c and its log analytically
    v = 1 / (1 / T[..., None] ** 2 + 1 / s**2)
    m = v * (M[..., None] / T[..., None] ** 2 + y / s**2)
    lppd_c = np.log((W * norm.pdf(y, m, np.sqrt(v + s**2))).sum((0, 1))).sum()
    d = y - m
    e1 = -0.5 * np.log(2 * np.pi * s**2) - (d**2 + v) / (2 * s**2)
    e2 = e1**2 + (4 * d**2 * v + 2 * v**2) / (4 * s**4)
    pw_c = ((W * e2).sum((0, 1)) - (W * e1).sum((0, 1)) ** 2).sum()
    waic_c = -2 * lppd_c + 2 * pw_c
    return {"waic_m": waic_m, "loco": loco, "waic_c": waic_c}


def random_intercept_mvn_logpdf(y_j, nu, lam, sig2, alpha, tau2):
    """log N(y_j; nu + lam*alpha, diag(sig2) + tau2 lam lam') via scipy."""
    lam = np.asarray(lam, dtype=float)
    cov = np.diag(sig2) + tau2 * np.outer(lam, lam)
    return multivariate_normal(mean=nu + lam * alpha, cov=cov).logpdf(y_j)


def gauss_kl(m1, v1, m2, v2):
    return 0.5 * (np.log(v2 / v1) + (v1 + (m1 - m2) ** 2) / v2 - 1)


def mvn_kl(m1, S1, m2, S2):
    k = m1.size
    S2i = np.linalg.inv(S2)
    d = m2 - m1
    return 0.5 * (np.trace(S2i @ S1) + d @ S2i @ d - k + np.linalg.slogdet(S2)[1] - np.linalg.slogdet(S1)[1])


def rasch_cluster_marginal_brute(y_j, eta_fixed, delta, tau, n=20001, width=12.0):
    """log integral of prod_i Bern(y_i | logit^-1(eta + z - delta_i)) N(z; 0, tau^2) dz by the trapezoid rule."""
    z = np.linspace(-width * tau, width * tau, n)
    lin = eta_fixed + z[:, None] - delta[None, :]
    ll = (y_j * lin - np.logaddexp(0, lin)).sum(axis=1) + norm.logpdf(z, 0, tau)
    return logsumexp(ll) + np.log(z[1] - z[0])


def ar1(n, rho, rng, chains=1):
    x = np.empty((chains, n))
    x[:, 0] = rng.standard_normal(chains) / np.sqrt(1 - rho**2)
    e = rng.standard_normal((chains, n))
    for t in range(1, n):
        x[:, t] = rho * x[:, t - 1] + e[:, t]
    return x


def eight_schools_posterior_means(scale=1.0):
    """Posterior means of (mu, tau) under a flat prior, by grid integration."""
    y = EIGHT_Y * scale
    s = EIGHT_SIGMA
    mu = np.linspace(-60, 80, 701) * scale
    tau = np.linspace(1e-3, 150, 1500) * scale
    M, T = np.meshgrid(mu, tau, indexing="ij")
    lp = norm.logpdf(y, M[..., None], np.sqrt(T[..., None] ** 2 + s**2)).sum(-1)
    w = np.exp(lp - lp.max())
    w /= w.sum()
    return float((w * M).sum()), float((w * T).sum())


def vc_posterior_means(y_clusters, alpha_var=1e4, a=0.01, b=0.01, n=90):
    """Posterior means of (alpha, sigma2, tau2) for the balanced random-intercept model.

    Grid over (alpha, log sigma2, log tau2) with the closed-form marginal
    likelihood from within- and between-cluster sums of squares; the
    variance priors are inverse gamma (gamma on precisions).
    """
    from scipy.stats import invgamma

    Y = np.asarray(y_clusters)
    J, k = Y.shape
    ybar = Y.mean(1)
    ssw = ((Y - ybar[:, None]) ** 2).sum()
    g_mean, g_sd = ybar.mean(), ybar.std()
    alpha = np.linspace(g_mean - 8 * g_sd / np.sqrt(J), g_mean + 8 * g_sd / np.sqrt(J), n)
    s_hat = ssw / (J * (k - 1))
    ls2 = np.linspace(np.log(s_hat) - 1.2, np.log(s_hat) + 1.2, n)
    t_hat = max(ybar.var() - s_hat / k, 0.05)
    lt2 = np.linspace(np.log(t_hat) - 3.0, np.log(t_hat) + 2.5, n)
    A, L1, L2 = np.meshgrid(alpha, ls2, lt2, indexing="ij")
    s2, t2 = np.exp(L1), np.exp(L2)
    lam = s2 + k * t2  # eigenvalue along the ones direction
    ll = (
        -0.5 * J * k * np.log(2 * np.pi)
        - 0.5 * J * (k - 1) * np.log(s2)
        - 0.5 * J * np.log(lam)
        - 0.5 * ssw / s2
        - 0.5 * k * ((ybar[None, None, None, :] - A[..., None]) ** 2).sum(-1) / lam
    )
    lp = ll + norm.logpdf(A, 0, np.sqrt(alpha_var))
    lp += invgamma(a, scale=b).logpdf(s2) + L1 + invgamma(a, scale=b).logpdf(t2) + L2
    w = np.exp(lp - lp.max())
    w /= w.sum()
    return float((w * A).sum()), float((w * s2).sum()), float((w * t2).sum())
