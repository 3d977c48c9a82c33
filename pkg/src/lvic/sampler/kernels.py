"""Metropolis-within-Gibbs transition kernels.

Kernels advance all chains at once: state arrays carry a leading chain
axis, while every random number for chain ``c`` comes from that chain's
own generator so results do not depend on how many chains run together.
"""

from __future__ import annotations

import numpy as np

from ..data import ClusteredDataset
from ..models.gaussian import LinearGaussianModel
from ..models.rasch import RaschLatentRegression


def _normal(rngs, shape=()) -> np.ndarray:
    return np.stack([r.standard_normal(shape) for r in rngs])


def _uniform(rngs, shape=()) -> np.ndarray:
    return np.stack([r.random(shape) for r in rngs])


def _inv_gamma_proposal(rngs, n, ss):
    """Draw v with density proportional to v^(-n/2-1) exp(-ss/(2v)), per chain."""
    g = np.stack([r.standard_gamma(n / 2.0) for r in rngs])
    return 0.5 * ss / g


class _Adaptive:
    """Random-walk scales tuned by Robbins-Monro during warm-up only."""

    def __init__(self, shape, init: float, target: float):
        self.log_scale = np.full(shape, np.log(init))
        self.target = target
        self.accepted = np.zeros(shape)
        self.tried = 0

    @property
    def scale(self):
        return np.exp(self.log_scale)

    def update(self, accept: np.ndarray, t: int | None):
        self.accepted += accept
        self.tried += 1
        if t is not None:
            self.log_scale += (accept - self.target) * (t + 1.0) ** -0.6

    def reset_counts(self):
        self.accepted[:] = 0
        self.tried = 0

    def rate(self) -> float:
        return float(self.accepted.mean() / self.tried) if self.tried else float("nan")


class _Counter:
    def __init__(self):
        self.accepted = 0.0
        self.tried = 0

    def update(self, accept):
        self.accepted += float(np.mean(accept))
        self.tried += 1

    def reset_counts(self):
        self.accepted, self.tried = 0.0, 0

    def rate(self) -> float:
        return self.accepted / self.tried if self.tried else float("nan")


class GaussianKernel:
    """Sampler for the linear Gaussian families.

    One sweep:

    1. location parameters (free nu, lambda, alpha) | zeta, variances:
       joint conjugate normal draw;
    2. unit variances | zeta, locations: independence Metropolis with an
       inverse-gamma proposal matched to the likelihood;
    3. latent variances | locations, unit variances with zeta integrated
       out: random-walk Metropolis on the log scale;
    4. zeta | everything: conjugate normal draw.

    Steps 3 and 4 together draw (latent variances, zeta) jointly, which
    keeps the sampler mixing when latent variances approach zero.
    """

    def __init__(self, model: LinearGaussianModel, data: ClusteredDataset, rngs, config):
        self.model, self.data, self.rngs = model, data, rngs
        self.C = len(rngs)
        st = model.structure(data)
        self.st = st
        P = model.n_params
        priors = model.param_priors

        loc = np.unique(np.concatenate([st.nu_index, st.lam_index, st.alpha_index]))
        self.loc = loc[loc >= 0]
        pos = np.full(P, -1)
        pos[self.loc] = np.arange(self.loc.size)
        L = self.L = self.loc.size
        self.nu_loc = np.where(st.nu_index >= 0, pos[np.maximum(st.nu_index, 0)], -1)
        self.lam_loc = np.where(st.lam_index >= 0, pos[np.maximum(st.lam_index, 0)], -1)
        self.alpha_loc = np.where(st.alpha_index >= 0, pos[np.maximum(st.alpha_index, 0)], -1)
        self.prior_prec = np.array([priors[k].precision for k in self.loc])
        self.prior_mean = np.array([priors[k].mean for k in self.loc])
        off = (np.arange(self.C) * L * L)[:, None]
        r_nu = np.flatnonzero(self.nu_loc >= 0)
        r_lam = np.flatnonzero(self.lam_loc >= 0)
        r_both = np.flatnonzero((self.nu_loc >= 0) & (self.lam_loc >= 0))
        c_al = np.flatnonzero(self.alpha_loc >= 0)
        self.r_nu, self.r_lam, self.r_both, self.c_al = r_nu, r_lam, r_both, c_al
        self.q_nn = off + self.nu_loc[r_nu] * (L + 1)
        self.q_ll = off + self.lam_loc[r_lam] * (L + 1)
        self.q_nl = off + self.nu_loc[r_both] * L + self.lam_loc[r_both]
        self.q_ln = off + self.lam_loc[r_both] * L + self.nu_loc[r_both]
        self.q_aa = off + self.alpha_loc[c_al] * (L + 1)
        offb = (np.arange(self.C) * L)[:, None]
        self.b_nu = offb + self.nu_loc[r_nu]
        self.b_lam = offb + self.lam_loc[r_lam]
        self.b_al = offb + self.alpha_loc[c_al]

        self.var_params = np.unique(st.var_index[st.var_index >= 0])
        self.var_rows = [np.flatnonzero(st.var_index == k) for k in self.var_params]
        self.var_n = np.array([r.size for r in self.var_rows], dtype=float)
        self.tau_params = np.unique(st.tau_index[st.tau_index >= 0])
        tpos = np.full(P, -1)
        tpos[self.tau_params] = np.arange(self.tau_params.size)
        self.tau_loc = tpos[np.maximum(st.tau_index, 0)]
        self.tau_loc[st.tau_index < 0] = -1
        self.tau_offsets = (np.arange(self.C) * self.tau_params.size)[:, None]
        self.priors = priors
        scale0 = config.proposal_scales.get("tau2", 0.5)
        self.tau_rw = _Adaptive((self.C, self.tau_params.size), scale0, config.target_accept)
        self.var_acc = _Counter()

    # --- helpers ----------------------------------------------------------
    def _var_of(self, theta, k):
        v = theta[:, k]
        return v * v if (self.st.tau_is_sd and k in self.tau_params) else v

    def init(self):
        data, C = self.data, self.C
        y = data.y
        sd = float(y.std()) or 1.0
        theta = np.zeros((C, self.model.n_params))
        for c, r in enumerate(self.rngs):
            for k in self.loc:
                rows = self.st.nu_index == k
                if rows.any():
                    theta[c, k] = y[rows].mean() + 0.3 * sd * r.standard_normal()
                elif (self.st.lam_index == k).any():
                    theta[c, k] = np.exp(0.2 * r.standard_normal())
                else:
                    theta[c, k] = 0.3 * sd * r.standard_normal()
            for k in self.var_params:
                theta[c, k] = 0.5 * sd * sd * np.exp(0.5 * r.standard_normal())
            for k in self.tau_params:
                v = 0.5 * sd * sd * np.exp(0.5 * r.standard_normal())
                theta[c, k] = np.sqrt(v) if self.st.tau_is_sd else v
        self.theta = theta
        self.zeta = np.zeros((C, data.J))
        self._draw_zeta()

    # --- steps ------------------------------------------------------------
    def _draw_zeta(self):
        data = self.data
        nu, lam, var = self.model.row_params(data, self.theta)
        alpha, tau2 = self.model.latent_moments(data, self.theta)
        pos = tau2 > 0
        inv_t = np.where(pos, 1.0 / np.where(pos, tau2, 1.0), 0.0)
        prec = data.cluster_sum(lam * lam / var) + inv_t
        b = data.cluster_sum(lam * (data.y - nu) / var) + alpha * inv_t
        z = _normal(self.rngs, data.J)
        self.zeta = np.where(pos, b / prec + z / np.sqrt(prec), alpha)

    def _draw_locations(self):
        if self.L == 0:
            return
        data, C, L = self.data, self.C, self.L
        st, theta, zeta = self.st, self.theta, self.zeta
        _, _, var = self.model.row_params(data, theta)
        w = 1.0 / var
        zr = zeta[:, data.cluster]
        target = data.y - np.where(self.nu_loc < 0, st.nu_fixed, 0.0)
        target = target - np.where(self.lam_loc < 0, st.lam_fixed * zr, 0.0)
        size = C * L * L
        Q = np.zeros(size)
        Q += np.bincount(self.q_nn.ravel(), (w[:, self.r_nu]).ravel(), size)
        zl = zr[:, self.r_lam]
        Q += np.bincount(self.q_ll.ravel(), (w[:, self.r_lam] * zl * zl).ravel(), size)
        if self.r_both.size:
            cross = (w[:, self.r_both] * zr[:, self.r_both]).ravel()
            Q += np.bincount(self.q_nl.ravel(), cross, size) + np.bincount(self.q_ln.ravel(), cross, size)
        b = np.zeros(C * L)
        b += np.bincount(self.b_nu.ravel(), (w * target)[:, self.r_nu].ravel(), C * L)
        b += np.bincount(self.b_lam.ravel(), (w * target * zr)[:, self.r_lam].ravel(), C * L)
        if self.c_al.size:
            _, tau2 = self.model.latent_moments(data, theta)
            wc = 1.0 / tau2[:, self.c_al]
            Q += np.bincount(self.q_aa.ravel(), wc.ravel(), size)
            b += np.bincount(self.b_al.ravel(), (wc * zeta[:, self.c_al]).ravel(), C * L)
        Q = Q.reshape(C, L, L)
        b = b.reshape(C, L) + self.prior_prec * self.prior_mean
        Q[:, np.arange(L), np.arange(L)] += self.prior_prec
        chol = np.linalg.cholesky(Q)
        mean = np.linalg.solve(Q, b[..., None])[..., 0]
        z = _normal(self.rngs, L)
        noise = np.linalg.solve(np.swapaxes(chol, 1, 2), z[..., None])[..., 0]
        self.theta[:, self.loc] = mean + noise

    def _draw_unit_variances(self):
        if self.var_params.size == 0:
            return
        data = self.data
        nu, lam, _ = self.model.row_params(data, self.theta)
        resid = data.y - nu - lam * self.zeta[:, data.cluster]
        r2 = resid * resid
        ss = np.column_stack([r2[:, rows].sum(axis=1) for rows in self.var_rows])
        prop = _inv_gamma_proposal(self.rngs, self.var_n, ss)
        cur = self.theta[:, self.var_params]
        log_u = np.log(_uniform(self.rngs, self.var_params.size))
        accept = np.empty_like(cur, dtype=bool)
        for i, k in enumerate(self.var_params):
            pr = self.priors[k]
            ratio = pr.logpdf_logvar(np.log(prop[:, i])) - pr.logpdf_logvar(np.log(cur[:, i]))
            accept[:, i] = log_u[:, i] < ratio
        self.theta[:, self.var_params] = np.where(accept, prop, cur)
        self.var_acc.update(accept)

    def _tau_target(self, theta, u):
        ll = self.model.marg_loglik_closed(self.data, theta)
        K = self.tau_params.size
        sel = self.tau_loc >= 0
        idx = (self.tau_offsets + self.tau_loc[sel]).ravel()
        out = np.bincount(idx, ll[:, sel].ravel(), self.C * K).reshape(self.C, K)
        for i, k in enumerate(self.tau_params):
            out[:, i] += self.priors[k].logpdf_logvar(u[:, i])
        return out

    def _draw_latent_variances(self, t):
        if self.tau_params.size == 0:
            return
        K = self.tau_params.size
        cur = np.column_stack([self._var_of(self.theta, k) for k in self.tau_params])
        u = np.log(cur)
        u_new = u + self.tau_rw.scale * _normal(self.rngs, K)
        theta_new = self.theta.copy()
        v_new = np.exp(u_new)
        theta_new[:, self.tau_params] = np.sqrt(v_new) if self.st.tau_is_sd else v_new
        lp_cur = self._tau_target(self.theta, u)
        lp_new = self._tau_target(theta_new, u_new)
        log_u = np.log(_uniform(self.rngs, K))
        accept = log_u < lp_new - lp_cur
        self.theta[:, self.tau_params] = np.where(accept, theta_new[:, self.tau_params], self.theta[:, self.tau_params])
        self.tau_rw.update(accept, t)

    def step(self, t: int | None):
        """One sweep; ``t`` is the warm-up iteration (None once adaptation stops)."""
        self._draw_locations()
        self._draw_unit_variances()
        self._draw_latent_variances(t)
        self._draw_zeta()

    def reset_counts(self):
        self.tau_rw.reset_counts()
        self.var_acc.reset_counts()

    def acceptance(self) -> dict:
        out = {}
        if self.var_params.size:
            out["unit_variances"] = self.var_acc.rate()
        if self.tau_params.size:
            out["latent_variances"] = self.tau_rw.rate()
        return out


# blocks updated by independence proposals; high acceptance is the goal there
INDEPENDENCE_BLOCKS = frozenset({"unit_variances", "gamma", "tau"})


def _softplus(x):
    return np.logaddexp(0.0, x)


class RaschKernel:
    """Sampler for the Rasch latent regression, hierarchically centered.

    Works with eta_j = x_j'gamma + zeta_j.  One sweep:

    1. eta | rest: per-person random-walk Metropolis;
    2. delta_1..delta_{I-1} one at a time (each move also shifts delta_I);
    3. gamma | eta, tau: independence Metropolis proposing from the
       flat-prior regression posterior, so only the prior ratio remains;
    4. tau | zeta: independence Metropolis with an inverse-gamma proposal;
    5. tau in non-centred form: random-walk on log tau with zeta rescaled
       in proportion, which breaks the tau-zeta funnel on short tests.
    """

    def __init__(self, model: RaschLatentRegression, data: ClusteredDataset, rngs, config):
        self.model, self.data, self.rngs = model, data, rngs
        self.C = len(rngs)
        self.I = model.n_items
        J = data.J
        self.Y = np.zeros((J, self.I))
        self.mask = np.zeros((J, self.I))
        self.Y[data.cluster, data.unit] = data.y
        self.mask[data.cluster, data.unit] = 1.0
        self.complete = bool(self.mask.all())
        self.r = self.Y.sum(axis=1)
        self.item_tot = self.Y.sum(axis=0)
        self.X = model.design(data)
        XtX = self.X.T @ self.X
        self.proj = np.linalg.solve(XtX, self.X.T)
        self.chol_cov = np.linalg.cholesky(np.linalg.inv(XtX))
        K = self.X.shape[1]
        A = np.eye(K)
        if model.terms:
            A[0, 1:] = [c for c, _ in model.scaling]
            A[np.arange(1, K), np.arange(1, K)] = [s for _, s in model.scaling]
        self.std_map = A
        t = config.target_accept
        ps = config.proposal_scales
        self.eta_rw = _Adaptive((self.C, J), ps.get("latent", 1.0), t)
        self.delta_rw = _Adaptive((self.C, self.I - 1), ps.get("delta", 0.3), t)
        self.gamma_acc = _Counter()
        self.tau_acc = _Counter()
        self.scale_rw = _Adaptive((self.C,), ps.get("tau", 0.3), t)

    def _gamma_logprior(self, gamma):
        return self.model.gamma_prior.logpdf(gamma @ self.std_map.T).sum(axis=1)

    def init(self):
        Y, C, I = self.Y, self.C, self.I
        p = np.clip(Y.sum(axis=0) / self.mask.sum(axis=0), 0.02, 0.98)
        d0 = -np.log(p / (1 - p))
        d0 -= d0.mean()
        pbar = np.clip(Y.sum() / self.mask.sum(), 0.02, 0.98)
        self.delta = np.empty((C, I))
        self.gamma = np.zeros((C, self.X.shape[1]))
        self.tau = np.empty(C)
        self.eta = np.empty((C, self.data.J))
        for c, r in enumerate(self.rngs):
            d = d0 + 0.3 * r.standard_normal(I)
            self.delta[c] = d - d.mean()
            self.gamma[c, 0] = np.log(pbar / (1 - pbar)) + 0.3 * r.standard_normal()
            self.tau[c] = np.exp(0.3 * r.standard_normal())
            self.eta[c] = self.X @ self.gamma[c] + self.tau[c] * r.standard_normal(self.data.J)
        # start gamma at its regression value so zeta starts centred
        self.gamma = self.eta @ self.proj.T

    @property
    def theta(self):
        return np.column_stack([self.delta[:, :-1], self.gamma, self.tau])

    @property
    def zeta(self):
        return self.eta - self.gamma @ self.X.T

    def _eta_loglik(self, eta):
        sp = _softplus(eta[:, :, None] - self.delta[:, None, :])
        if not self.complete:
            sp = sp * self.mask
        return self.r * eta - sp.sum(axis=2)

    def _draw_eta(self, t):
        mean = self.gamma @ self.X.T
        inv_t2 = 1.0 / (self.tau * self.tau)[:, None]
        prop = self.eta + self.eta_rw.scale * _normal(self.rngs, self.data.J)
        lp_cur = self._eta_loglik(self.eta) - 0.5 * inv_t2 * (self.eta - mean) ** 2
        lp_new = self._eta_loglik(prop) - 0.5 * inv_t2 * (prop - mean) ** 2
        accept = np.log(_uniform(self.rngs, self.data.J)) < lp_new - lp_cur
        self.eta = np.where(accept, prop, self.eta)
        self.eta_rw.update(accept, t)

    def _item_loglik(self, i, d):
        """Log-likelihood of item i as a function of its difficulty d (C,)."""
        sp = _softplus(self.eta - d[:, None])
        if not self.complete:
            sp = sp * self.mask[:, i]
        return -self.item_tot[i] * d - sp.sum(axis=1)

    def _draw_delta(self, t):
        I, last = self.I, self.I - 1
        z = _normal(self.rngs, I - 1) * self.delta_rw.scale
        log_u = np.log(_uniform(self.rngs, I - 1))
        ll_last = self._item_loglik(last, self.delta[:, last])
        prior = self.model.delta_prior
        accept_all = np.zeros((self.C, I - 1), dtype=bool)
        for i in range(I - 1):
            d_cur = self.delta[:, i]
            d_new = d_cur + z[:, i]
            last_new = self.delta[:, last] - z[:, i]
            ll_cur = self._item_loglik(i, d_cur) + ll_last
            ll_last_new = self._item_loglik(last, last_new)
            ll_new = self._item_loglik(i, d_new) + ll_last_new
            ratio = ll_new - ll_cur + prior.logpdf(d_new) - prior.logpdf(d_cur)
            acc = log_u[:, i] < ratio
            self.delta[:, i] = np.where(acc, d_new, d_cur)
            self.delta[:, last] = np.where(acc, last_new, self.delta[:, last])
            ll_last = np.where(acc, ll_last_new, ll_last)
            accept_all[:, i] = acc
        self.delta_rw.update(accept_all, t)

    def _draw_gamma(self):
        ghat = self.eta @ self.proj.T
        K = ghat.shape[1]
        prop = ghat + self.tau[:, None] * (_normal(self.rngs, K) @ self.chol_cov.T)
        ratio = self._gamma_logprior(prop) - self._gamma_logprior(self.gamma)
        acc = np.log(_uniform(self.rngs)) < ratio
        self.gamma = np.where(acc[:, None], prop, self.gamma)
        self.gamma_acc.update(acc)

    def _draw_tau(self):
        ss = (self.zeta ** 2).sum(axis=1)
        v_new = _inv_gamma_proposal(self.rngs, float(self.data.J), ss)
        pr = self.model.tau_prior
        v_cur = self.tau * self.tau
        ratio = pr.logpdf_logvar(np.log(v_new)) - pr.logpdf_logvar(np.log(v_cur))
        acc = np.log(_uniform(self.rngs)) < ratio
        self.tau = np.where(acc, np.sqrt(v_new), self.tau)
        self.tau_acc.update(acc)

    def _rescale_tau(self, t):
        mean = self.gamma @ self.X.T
        step = self.scale_rw.scale * _normal(self.rngs)
        factor = np.exp(step)
        eta_new = mean + (self.eta - mean) * factor[:, None]
        tau_new = self.tau * factor
        pr = self.model.tau_prior
        ratio = (
            self._eta_loglik(eta_new).sum(axis=1) - self._eta_loglik(self.eta).sum(axis=1)
            + pr.logpdf_logvar(2 * np.log(tau_new)) - pr.logpdf_logvar(2 * np.log(self.tau))
        )
        acc = np.log(_uniform(self.rngs)) < ratio
        self.eta = np.where(acc[:, None], eta_new, self.eta)
        self.tau = np.where(acc, tau_new, self.tau)
        self.scale_rw.update(acc, t)

    def step(self, t: int | None):
        self._draw_eta(t)
        self._draw_delta(t)
        self._draw_gamma()
        self._draw_tau()
        self._rescale_tau(t)

    def reset_counts(self):
        for a in (self.eta_rw, self.delta_rw, self.gamma_acc, self.tau_acc, self.scale_rw):
            a.reset_counts()

    def acceptance(self) -> dict:
        return {
            "latent": self.eta_rw.rate(),
            "delta": self.delta_rw.rate(),
            "gamma": self.gamma_acc.rate(),
            "tau": self.tau_acc.rate(),
            "tau_rescale": self.scale_rw.rate(),
        }


def make_kernel(model, data, rngs, config):
    if isinstance(model, LinearGaussianModel):
        return GaussianKernel(model, data, rngs, config)
    if isinstance(model, RaschLatentRegression):
        return RaschKernel(model, data, rngs, config)
    raise TypeError(f"no sampler for {type(model).__name__}")
