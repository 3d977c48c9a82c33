"""Multi-chain MCMC for the model families with an R-hat convergence gate."""

from __future__ import annotations

import logging

import numpy as np

from ..data import ClusteredDataset
from ..errors import ConvergenceError
from ..models.base import LatentModel
from .diagnostics import effective_sample_size, gelman_rubin
from .draws import ChainConfig, DrawMatrix
from .kernels import make_kernel

log = logging.getLogger(__name__)


def _run_phase(kernel, n_iter, adapt, theta_out=None, zeta_out=None):
    for t in range(n_iter):
        kernel.step(t if adapt else None)
        if theta_out is not None:
            theta_out[:, t] = kernel.theta
            zeta_out[:, t] = kernel.zeta


def run_mcmc(model: LatentModel, data: ClusteredDataset, config: ChainConfig | None = None) -> DrawMatrix:
    """Draw from the joint posterior of (omega, psi, zeta).

    Chains start from jittered data-based values, adapt their random-walk
    scales during warm-up, then keep ``n_keep`` iterations each.  If any
    parameter's R-hat exceeds the threshold, the kept iterations are
    treated as further warm-up and a fresh block is drawn, up to
    ``max_extensions`` times.

    Raises
    ------
    ConvergenceError
        When the gate still fails; ``exc.draws`` holds the last block and
        ``exc.rhat`` the report.
    """
    config = config or ChainConfig()
    model = model.prepare(data)
    rngs = [np.random.default_rng(config.seed + c) for c in range(config.n_chains)]
    kernel = make_kernel(model, data, rngs, config)
    kernel.init()
    _run_phase(kernel, config.n_warmup, adapt=True)
    warmup = config.n_warmup
    C, T = config.n_chains, config.n_keep
    extensions = 0
    while True:
        kernel.reset_counts()
        theta = np.empty((C, T, model.n_params))
        zeta = np.empty((C, T, data.J))
        _run_phase(kernel, T, adapt=False, theta_out=theta, zeta_out=zeta)
        draws = DrawMatrix(theta, zeta, model.names, n_warmup=warmup)
        rhat = draws.rhat() if C > 1 else {}
        worst = max(rhat.values(), default=1.0)
        ok = worst < config.rhat_threshold
        if ok or not config.check_convergence or extensions >= config.max_extensions:
            break
        log.info("max R-hat %.3f >= %.3f; extending run", worst, config.rhat_threshold)
        extensions += 1
        warmup += T
    draws.info.update(
        acceptance=kernel.acceptance(),
        rhat=rhat,
        max_rhat=worst,
        converged=bool(ok),
        extensions=extensions,
        seed=config.seed,
    )
    for block, rate in draws.info["acceptance"].items():
        log.debug("acceptance %s: %.3f", block, rate)
    if config.check_convergence and not ok:
        bad = sorted((n for n, r in rhat.items() if r >= config.rhat_threshold), key=lambda n: -rhat[n])
        raise ConvergenceError(
            f"R-hat >= {config.rhat_threshold} for {bad[:5]} after {extensions} extension(s)",
            draws=draws,
            rhat=rhat,
        )
    return draws


__all__ = ["ChainConfig", "DrawMatrix", "run_mcmc", "gelman_rubin", "effective_sample_size"]
