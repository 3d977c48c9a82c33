"""Chain configuration and the retained-draw container."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InvalidInputError, ParseError
from .diagnostics import effective_sample_size, gelman_rubin


@dataclass(frozen=True)
class ChainConfig:
    """MCMC run settings.

    ``max_extensions`` bounds the extend-and-recheck loop: when the R-hat
    gate fails, the kept iterations are demoted to warm-up and another
    ``n_keep`` iterations are drawn, at most this many times.
    ``proposal_scales`` optionally seeds the initial random-walk scales by
    block name (``"latent"``, ``"delta"``, ``"tau2"``).
    """

    n_chains: int = 5
    n_warmup: int = 500
    n_keep: int = 2000
    seed: int = 0
    rhat_threshold: float = 1.05
    max_extensions: int = 2
    proposal_scales: dict = field(default_factory=dict, hash=False, compare=False)
    target_accept: float = 0.44
    check_convergence: bool = True

    def __post_init__(self):
        if self.n_chains < 1 or self.n_keep < 1 or self.n_warmup < 0:
            raise InvalidInputError("need n_chains >= 1, n_keep >= 1, n_warmup >= 0")
        if self.check_convergence and self.n_chains < 2:
            raise InvalidInputError("R-hat needs at least two chains")
        if any(v <= 0 for v in self.proposal_scales.values()):
            raise InvalidInputError("proposal scales must be positive")

    @classmethod
    def from_mapping(cls, cfg: dict | None) -> "ChainConfig":
        cfg = dict(cfg or {})
        known = {f for f in cls.__dataclass_fields__}
        bad = set(cfg) - known
        if bad:
            raise InvalidInputError(f"unknown chain settings {sorted(bad)}")
        return cls(**cfg)


@dataclass(eq=False)
class DrawMatrix:
    """Retained draws, chain-major.

    Attributes
    ----------
    theta : (C, T, P) parameter draws in ``names`` order (stored scale).
    zeta : (C, T, J) latent draws, or None when only parameters are known.
    names : parameter labels.
    n_warmup : warm-up iterations discarded per chain.
    info : sampler diagnostics (acceptance rates, R-hat, ESS ...).
    """

    theta: np.ndarray
    zeta: np.ndarray | None
    names: tuple[str, ...]
    n_warmup: int = 0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.ndim != 3 or self.theta.shape[2] != len(self.names):
            raise InvalidInputError("theta must be (chains, iterations, parameters)")
        if self.zeta is not None:
            self.zeta = np.asarray(self.zeta, dtype=float)
            if self.zeta.shape[:2] != self.theta.shape[:2]:
                raise InvalidInputError("zeta and theta must share (chains, iterations)")

    @property
    def n_chains(self) -> int:
        return self.theta.shape[0]

    @property
    def n_iter(self) -> int:
        return self.theta.shape[1]

    @property
    def S(self) -> int:
        return self.n_chains * self.n_iter

    @property
    def J(self) -> int | None:
        return None if self.zeta is None else self.zeta.shape[2]

    @property
    def flat_theta(self) -> np.ndarray:
        return self.theta.reshape(self.S, -1)

    @property
    def flat_zeta(self) -> np.ndarray | None:
        return None if self.zeta is None else self.zeta.reshape(self.S, -1)

    def param(self, name: str) -> np.ndarray:
        """(C, T) chains of one parameter."""
        return self.theta[:, :, self.names.index(name)]

    def chain_series(self, values: np.ndarray) -> np.ndarray:
        """Reshape a per-draw vector (S,) back to (C, T)."""
        return np.asarray(values).reshape(self.n_chains, self.n_iter)

    def rhat(self, include_latent: bool = False) -> dict[str, float]:
        out = {n: gelman_rubin(self.theta[:, :, k]) for k, n in enumerate(self.names)}
        if include_latent and self.zeta is not None:
            out.update({f"zeta[{j + 1}]": gelman_rubin(self.zeta[:, :, j]) for j in range(self.J)})
        return out

    def ess(self) -> dict[str, float]:
        return {n: effective_sample_size(self.theta[:, :, k]) for k, n in enumerate(self.names)}

    def summary(self) -> dict:
        rhat = self.rhat() if self.n_chains > 1 else {}
        ess = self.ess()
        flat = self.flat_theta
        return {
            n: {
                "mean": float(flat[:, k].mean()),
                "sd": float(flat[:, k].std(ddof=1)) if self.S > 1 else 0.0,
                "rhat": rhat.get(n),
                "ess": ess[n],
            }
            for k, n in enumerate(self.names)
        }

    def subset_chains(self, chains) -> "DrawMatrix":
        chains = list(chains)
        return DrawMatrix(
            self.theta[chains], None if self.zeta is None else self.zeta[chains],
            self.names, self.n_warmup, dict(self.info),
        )

    # --- CSV --------------------------------------------------------------
    def to_csv(self, path) -> None:
        """Write ``chain,iter,<names>,zeta[1..J]`` rows at round-trip precision."""
        header = ["chain", "iter", *self.names]
        if self.zeta is not None:
            header += [f"zeta[{j + 1}]" for j in range(self.J)]
        C, T = self.n_chains, self.n_iter
        idx = np.column_stack([np.repeat(np.arange(1, C + 1), T), np.tile(np.arange(1, T + 1), C)])
        body = self.flat_theta if self.zeta is None else np.hstack([self.flat_theta, self.flat_zeta])
        with Path(path).open("w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for i, row in zip(idx, body):
                fh.write(f"{i[0]},{i[1]}," + ",".join(f"{v:.17g}" for v in row) + "\n")

    @classmethod
    def from_csv(cls, path, names: tuple[str, ...] | None = None) -> "DrawMatrix":
        """Read draws written by :meth:`to_csv` or by an external sampler.

        Columns named ``zeta[...]`` are latent draws; all other columns after
        ``chain,iter`` are parameters.  ``names`` reorders/validates them.
        """
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise ParseError("empty draws file", line=1, path=str(path)) from None
            if header[:2] != ["chain", "iter"]:
                raise ParseError("draws header must start with chain,iter", line=1, path=str(path))
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                if len(rec) != len(header):
                    raise ParseError(f"expected {len(header)} fields, got {len(rec)}", line=lineno, path=str(path))
                try:
                    rows.append([float(v) for v in rec])
                except ValueError as exc:
                    raise ParseError(str(exc), line=lineno, path=str(path)) from None
        if not rows:
            raise ParseError("no draws", line=2, path=str(path))
        arr = np.array(rows)
        chain = arr[:, 0].astype(int)
        labels = np.unique(chain)
        counts = np.array([(chain == c).sum() for c in labels])
        if np.any(counts != counts[0]):
            raise ParseError("all chains must have the same number of draws", path=str(path))
        order = np.lexsort((arr[:, 1], chain))
        arr = arr[order]
        cols = header[2:]
        zcols = [k for k, h in enumerate(cols) if h.startswith("zeta[")]
        pcols = [k for k, h in enumerate(cols) if not h.startswith("zeta[")]
        pnames = tuple(cols[k] for k in pcols)
        if names is not None:
            missing = [n for n in names if n not in pnames]
            if missing:
                raise ParseError(f"draws file lacks parameter column(s) {missing}", line=1, path=str(path))
            pcols = [pcols[pnames.index(n)] for n in names]
            pnames = tuple(names)
        C, T = labels.size, int(counts[0])
        body = arr[:, 2:]
        theta = body[:, pcols].reshape(C, T, len(pcols))
        zeta = body[:, zcols].reshape(C, T, len(zcols)) if zcols else None
        return cls(theta, zeta, pnames)
