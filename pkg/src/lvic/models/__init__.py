"""Model families and the draw-vectorized likelihood operations."""

from __future__ import annotations

import numpy as np

from ..data import ClusteredDataset
from ..errors import InvalidInputError
from .base import LatentModel, ParamPoint, as_draws
from .gaussian import (
    CFA_PARAM_COUNTS,
    CFA_PATTERNS,
    EightSchools,
    LinearGaussianModel,
    MultiGroupFactor,
    VarianceComponents,
    cfa_equality_classes,
)
from .priors import (
    CFA_PRIOR_SETS,
    FLAT,
    ExponentialSD,
    GammaPrecision,
    Normal,
    StudentT,
    UniformSD,
    parse_prior,
)
from .rasch import RaschLatentRegression, bernoulli_logit_logpmf


def _squeeze(out, theta):
    return out[0] if np.ndim(theta) == 1 else out


def cond_loglik_unit(model: LatentModel, data: ClusteredDataset, theta, zeta) -> np.ndarray:
    """Unit log densities log f_c(y_ij | omega, zeta_j); (S, N), or (N,) for one point."""
    return _squeeze(model.cond_loglik(data, theta, zeta), theta)


def cond_loglik_cluster(model: LatentModel, data: ClusteredDataset, theta, zeta) -> np.ndarray:
    return _squeeze(model.cluster_cond_loglik(data, theta, zeta), theta)


def marg_loglik_cluster_closed(model: LatentModel, data: ClusteredDataset, theta) -> np.ndarray:
    return _squeeze(model.marg_loglik_closed(data, theta), theta)


def log_priors(model: LatentModel, theta) -> np.ndarray | float:
    out = model.log_prior(theta)
    return float(out[0]) if np.ndim(theta) == 1 else out


def simulate(
    model: LatentModel,
    theta,
    J: int | None = None,
    n_j: int = 1,
    seed: int = 0,
    data: ClusteredDataset | None = None,
) -> ClusteredDataset:
    """Draw zeta_j from the latent prior and responses from f_c.

    ``data`` supplies the layout (clusters, items, covariates, groups); when
    omitted a template with ``J`` clusters of ``n_j`` units is built.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.n_params,):
        raise InvalidInputError(f"theta must have {model.n_params} entries {model.names}")
    rng = np.random.default_rng(seed)
    if data is None:
        if J is None or J < 1 or n_j < 1:
            raise InvalidInputError("simulate needs J >= 1 and n_j >= 1")
        data = model.template(J, n_j, rng)
    model = model.prepare(data) if isinstance(model, RaschLatentRegression) else model
    zeta = model.draw_latent(data, theta, rng)
    return data.with_y(model.draw_responses(data, theta, zeta, rng))


def rasch_model(index: int, n_items: int, **kw) -> RaschLatentRegression:
    from ..datasets import RASCH_MODEL_TERMS

    if index not in RASCH_MODEL_TERMS:
        raise InvalidInputError(f"Rasch covariate model must be 1..5, got {index}")
    return RaschLatentRegression(n_items=n_items, terms=RASCH_MODEL_TERMS[index], **kw)


def build_model(spec, data: ClusteredDataset | None = None) -> LatentModel:
    """Construct a model from a short name or a config mapping.

    Short names: ``eight-schools``, ``eight-schools:<scale>``, ``vc``,
    ``vc:A``, ``cfa:<pattern>``, ``rasch:<1..5>``.  Config mappings carry a
    ``family`` key plus family options and an optional ``priors`` mapping.
    The dataset, when given, fills in data-dependent structure (item count)
    and binds covariate scaling.
    """
    if isinstance(spec, str):
        head, _, arg = spec.partition(":")
        spec = {"family": head}
        if head == "cfa":
            spec["pattern"] = arg or "2"
        elif head == "rasch":
            spec["model"] = int(arg or 1)
        elif head == "vc" and arg:
            spec["parameterization"] = arg
        elif head == "eight-schools" and arg:
            spec["scale"] = float(arg)
    spec = dict(spec)
    family = str(spec.pop("family", "")).lower()
    priors = {k: parse_prior(v) for k, v in (spec.pop("priors", None) or {}).items()}

    if family in ("eight-schools", "eightschools"):
        spec.pop("scale", None)
        sigma = tuple(float(s) for s in spec.pop("sigma", EightSchools().sigma))
        model = EightSchools(sigma=sigma, **_pick(priors, mu="mu_prior", tau="tau_prior"))
    elif family in ("vc", "variance-components"):
        tau2 = spec.pop("tau2", None)
        model = VarianceComponents(
            parameterization=str(spec.pop("parameterization", "B")),
            tau2=None if tau2 is None else float(tau2),
            **_pick(priors, alpha="alpha_prior", sigma2="sigma2_prior", tau2="tau2_prior"),
        )
    elif family in ("cfa", "factor", "multigroupfactor"):
        model = MultiGroupFactor(
            pattern=str(spec.pop("pattern", "2")),
            prior_set=str(spec.pop("prior_set", "default")),
            n_items=int(spec.pop("n_items", data.n_units if data is not None else 3)),
        )
    elif family in ("rasch", "raschlatentregression"):
        n_items = int(spec.pop("n_items", data.n_units if data is not None else 24))
        kw = _pick(priors, delta="delta_prior", gamma="gamma_prior", tau="tau_prior")
        if "terms" in spec:
            model = RaschLatentRegression(n_items=n_items, terms=tuple(spec.pop("terms")), **kw)
        else:
            model = rasch_model(int(spec.pop("model", 1)), n_items, **kw)
    else:
        raise InvalidInputError(f"unknown model family {family!r}")
    spec.pop("name", None)
    if spec:
        raise InvalidInputError(f"unrecognized model options {sorted(spec)}")
    return model.prepare(data) if data is not None else model


def _pick(priors: dict, **mapping) -> dict:
    unknown = set(priors) - set(mapping)
    if unknown:
        raise InvalidInputError(f"no prior slot(s) {sorted(unknown)}; expected {sorted(mapping)}")
    return {mapping[k]: v for k, v in priors.items()}


__all__ = [
    "LatentModel", "LinearGaussianModel", "ParamPoint", "as_draws",
    "EightSchools", "MultiGroupFactor", "VarianceComponents", "RaschLatentRegression",
    "CFA_PATTERNS", "CFA_PARAM_COUNTS", "CFA_PRIOR_SETS", "cfa_equality_classes",
    "Normal", "StudentT", "GammaPrecision", "ExponentialSD", "UniformSD", "FLAT", "parse_prior",
    "bernoulli_logit_logpmf", "cond_loglik_unit", "cond_loglik_cluster",
    "marg_loglik_cluster_closed", "log_priors", "simulate", "build_model", "rasch_model",
]
