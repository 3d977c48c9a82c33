"""Built-in datasets and the synthetic generators that stand in for external data.

Generating parameters are module constants so fixtures are reproducible
from the seed alone.
"""

from __future__ import annotations

import numpy as np

from .data import ClusteredDataset, from_matrix
from .models.gaussian import EIGHT_SCHOOLS_Y

# variance components: (alpha, sigma2, tau2), version B layout
VC_TRUTH = {"alpha": 1.0, "sigma2": 1.0, "tau2": 0.5}

# factor model: three subscales, four groups, invariant intercepts
CFA_TRUTH = {
    "nu": (8.0, 9.0, 10.0),
    "lambda": (1.0, 0.9, 1.1),
    "sigma2": (2.0, 2.5, 2.0),
    "alpha": (0.0, 0.4, -0.3, 0.6),
    "tau2": (3.0, 3.0, 2.5, 2.5),
    "group_sizes": (74, 74, 74, 73),
}

# Rasch latent regression with anger and male covariates (model 4 layout)
RASCH_TRUTH = {
    "n_items": 24,
    "J": 316,
    "gamma": (-1.4, 0.07, 0.3),  # const, anger, male
    "tau": 1.0,
    "delta_range": (-1.5, 1.5),
}

SMALL_RASCH_TRUTH = {"n_items": 5, "J": 30, "delta": (-1.0, -0.5, 0.0, 0.5, 1.0), "tau": 1.0}

RASCH_MODEL_TERMS = {
    1: (),
    2: ("anger",),
    3: ("male",),
    4: ("anger", "male"),
    5: ("anger", "male", "anger:male"),
}


def eight_schools(scale: float = 1.0) -> ClusteredDataset:
    J = len(EIGHT_SCHOOLS_Y)
    return ClusteredDataset(
        scale * np.asarray(EIGHT_SCHOOLS_Y), np.arange(J), np.zeros(J, dtype=np.int64),
        cluster_labels=tuple("ABCDEFGH"),
    )


def synthetic_vc(J: int = 50, n: int = 5, seed: int = 0, **truth) -> ClusteredDataset:
    t = {**VC_TRUTH, **truth}
    rng = np.random.default_rng(seed)
    zeta = np.sqrt(t["tau2"]) * rng.standard_normal(J)
    y = t["alpha"] + np.repeat(zeta, n) + np.sqrt(t["sigma2"]) * rng.standard_normal(J * n)
    return ClusteredDataset(y, np.repeat(np.arange(J), n), np.tile(np.arange(n), J))


def synthetic_cfa(seed: int = 0, sizes=None) -> ClusteredDataset:
    t = CFA_TRUTH
    sizes = t["group_sizes"] if sizes is None else sizes
    rng = np.random.default_rng(seed)
    group = np.repeat(np.arange(len(sizes)), sizes)
    J = group.size
    zeta = np.asarray(t["alpha"])[group] + np.sqrt(np.asarray(t["tau2"])[group]) * rng.standard_normal(J)
    nu, lam, s2 = (np.asarray(t[k]) for k in ("nu", "lambda", "sigma2"))
    Y = nu + zeta[:, None] * lam + np.sqrt(s2) * rng.standard_normal((J, nu.size))
    return from_matrix(Y, group=group)


def _rasch_delta(n_items: int) -> np.ndarray:
    lo, hi = RASCH_TRUTH["delta_range"]
    d = np.linspace(lo, hi, n_items)
    return d - d.mean()


def synthetic_rasch(seed: int = 0, J: int | None = None, n_items: int | None = None) -> ClusteredDataset:
    """Verbal-aggression-like data: trait anger 11..39, male share about 0.24."""
    t = RASCH_TRUTH
    J = t["J"] if J is None else J
    n_items = t["n_items"] if n_items is None else n_items
    rng = np.random.default_rng(seed)
    anger = np.clip(np.round(rng.normal(20.0, 4.9, J)), 11, 39)
    male = (rng.random(J) < 0.24).astype(float)
    g0, g_anger, g_male = t["gamma"]
    eta = g0 + g_anger * anger + g_male * male + t["tau"] * rng.standard_normal(J)
    p = 1.0 / (1.0 + np.exp(-(eta[:, None] - _rasch_delta(n_items))))
    Y = (rng.random((J, n_items)) < p).astype(float)
    return from_matrix(Y, covariates=np.column_stack([anger, male]), covariate_names=("anger", "male"))


def small_rasch(seed: int = 0) -> ClusteredDataset:
    t = SMALL_RASCH_TRUTH
    rng = np.random.default_rng(seed)
    eta = t["tau"] * rng.standard_normal(t["J"])
    p = 1.0 / (1.0 + np.exp(-(eta[:, None] - np.asarray(t["delta"]))))
    Y = (rng.random((t["J"], t["n_items"])) < p).astype(float)
    return from_matrix(Y)


BUILTIN_DATA = {
    "eight-schools": eight_schools,
    "synthetic-cfa": synthetic_cfa,
    "synthetic-rasch": synthetic_rasch,
    "synthetic-vc": synthetic_vc,
    "small-rasch": small_rasch,
}


def load_builtin(name: str, seed: int = 0, scale: float = 1.0) -> ClusteredDataset:
    if name not in BUILTIN_DATA:
        raise KeyError(f"unknown built-in dataset {name!r}; choose from {sorted(BUILTIN_DATA)}")
    if name == "eight-schools":
        return eight_schools(scale)
    return BUILTIN_DATA[name](seed=seed)


__all__ = [
    "CFA_TRUTH", "RASCH_TRUTH", "SMALL_RASCH_TRUTH", "VC_TRUTH", "RASCH_MODEL_TERMS",
    "eight_schools", "synthetic_vc", "synthetic_cfa", "synthetic_rasch", "small_rasch",
    "load_builtin",
]
