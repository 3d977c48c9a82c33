"""Clustered response data and its CSV representation.

Rows are stored in long format, sorted by cluster, so that cluster-level
sums are contiguous ``np.add.reduceat`` segments.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, ParseError


@dataclass(frozen=True, eq=False)
class ClusteredDataset:
    """Responses ``y`` for units nested in clusters.

    Attributes
    ----------
    y : (N,) float array of responses.
    cluster : (N,) int array, 0-based cluster index, nondecreasing.
    unit : (N,) int array, 0-based unit index (the item for IRT/CFA data).
    covariates : (J, P) float array of cluster covariates, without a constant.
    group : (J,) int array, 0-based group label, or None.
    """

    y: np.ndarray
    cluster: np.ndarray
    unit: np.ndarray
    covariates: np.ndarray | None = None
    group: np.ndarray | None = None
    covariate_names: tuple[str, ...] = ()
    cluster_labels: tuple[str, ...] | None = None
    unit_labels: tuple[str, ...] | None = None
    _starts: np.ndarray = field(init=False, repr=False)
    _n_j: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        cluster = np.asarray(self.cluster, dtype=np.int64)
        unit = np.asarray(self.unit, dtype=np.int64)
        if y.ndim != 1 or cluster.shape != y.shape or unit.shape != y.shape:
            raise InvalidInputError("y, cluster and unit must be 1-D arrays of equal length")
        if y.size == 0:
            raise InvalidInputError("dataset has no rows")
        if not np.all(np.isfinite(y)):
            raise InvalidInputError("responses must be finite (complete cases only)")
        if np.any(np.diff(cluster) < 0):
            order = np.lexsort((unit, cluster))
            y, cluster, unit = y[order], cluster[order], unit[order]
        n_clusters = int(cluster.max()) + 1
        n_j = np.bincount(cluster, minlength=n_clusters)
        if cluster.min() < 0 or np.any(n_j == 0):
            raise InvalidInputError("cluster indices must be contiguous 0..J-1 with n_j >= 1")
        if unit.min() < 0:
            raise InvalidInputError("unit indices must be nonnegative")
        for a in (y, cluster, unit):
            a.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "cluster", cluster)
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "_n_j", n_j)
        object.__setattr__(self, "_starts", np.concatenate([[0], np.cumsum(n_j)[:-1]]))
        if self.covariates is not None:
            x = np.asarray(self.covariates, dtype=float)
            if x.ndim == 1:
                x = x[:, None]
            if x.shape[0] != n_clusters:
                raise InvalidInputError("covariates must have one row per cluster")
            x.setflags(write=False)
            object.__setattr__(self, "covariates", x)
            if len(self.covariate_names) != x.shape[1]:
                names = tuple(f"cov{k + 1}" for k in range(x.shape[1]))
                object.__setattr__(self, "covariate_names", names)
        if self.group is not None:
            g = np.asarray(self.group, dtype=np.int64)
            if g.shape != (n_clusters,):
                raise InvalidInputError("group must have one label per cluster")
            if set(np.unique(g).tolist()) != set(range(int(g.max()) + 1)):
                raise InvalidInputError("group labels must form a contiguous set {1..G}")
            g.setflags(write=False)
            object.__setattr__(self, "group", g)

    @property
    def N(self) -> int:
        return int(self.y.size)

    @property
    def J(self) -> int:
        return int(self._n_j.size)

    @property
    def n_j(self) -> np.ndarray:
        return self._n_j

    @property
    def starts(self) -> np.ndarray:
        """Row offset of the first unit of each cluster."""
        return self._starts

    @property
    def n_units(self) -> int:
        return int(self.unit.max()) + 1

    @property
    def G(self) -> int:
        return 1 if self.group is None else int(self.group.max()) + 1

    def cluster_sum(self, values: np.ndarray) -> np.ndarray:
        """Sum row values within clusters along the last axis."""
        return np.add.reduceat(values, self._starts, axis=-1)

    def rows_of(self, j: int) -> slice:
        s = int(self._starts[j])
        return slice(s, s + int(self._n_j[j]))

    def covariate(self, name: str) -> np.ndarray:
        if self.covariates is None or name not in self.covariate_names:
            raise InvalidInputError(f"unknown covariate {name!r}")
        return self.covariates[:, self.covariate_names.index(name)]

    def check_binary(self) -> None:
        bad = np.flatnonzero((self.y != 0) & (self.y != 1))
        if bad.size:
            raise InvalidInputError(
                f"binary responses required; row {int(bad[0])} has y={self.y[bad[0]]!r}"
            )

    def check_complete_items(self) -> None:
        """Every cluster answers the same item set (Rasch/CFA ingestion rule)."""
        n_items = self.n_units
        if np.any(self._n_j != n_items):
            raise InvalidInputError("every cluster must have responses to the same item set")
        expect = np.tile(np.arange(n_items), self.J)
        if not np.array_equal(self.unit, expect):
            raise InvalidInputError("every cluster must have responses to the same item set")

    def with_y(self, y: np.ndarray) -> "ClusteredDataset":
        return ClusteredDataset(
            y, self.cluster, self.unit, self.covariates, self.group,
            self.covariate_names, self.cluster_labels, self.unit_labels,
        )

    def drop_row(self, row: int) -> "ClusteredDataset":
        """Dataset without one unit; fails if that empties its cluster."""
        j = int(self.cluster[row])
        if self._n_j[j] == 1:
            raise InvalidInputError(f"dropping row {row} would empty cluster {j}")
        keep = np.ones(self.N, dtype=bool)
        keep[row] = False
        return ClusteredDataset(
            self.y[keep], self.cluster[keep], self.unit[keep], self.covariates, self.group,
            self.covariate_names, self.cluster_labels, self.unit_labels,
        )

    def select_clusters(self, clusters: Sequence[int] | np.ndarray) -> "ClusteredDataset":
        """Subset of clusters, re-indexed 0..len-1 in the given order."""
        clusters = np.asarray(clusters, dtype=np.int64)
        remap = np.full(self.J, -1, dtype=np.int64)
        remap[clusters] = np.arange(clusters.size)
        rows = np.concatenate([np.arange(self.rows_of(j).start, self.rows_of(j).stop) for j in clusters])
        group = None
        if self.group is not None:
            group = self.group[clusters]
            # keep labels contiguous only if the subset still covers all groups
            if set(np.unique(group).tolist()) != set(range(self.G)):
                raise InvalidInputError("cluster subset drops a whole group")
        return ClusteredDataset(
            self.y[rows],
            remap[self.cluster[rows]],
            self.unit[rows],
            None if self.covariates is None else self.covariates[clusters],
            group,
            self.covariate_names,
            None if self.cluster_labels is None else tuple(self.cluster_labels[j] for j in clusters),
            self.unit_labels,
        )

    def drop_cluster(self, j: int) -> "ClusteredDataset":
        return self.select_clusters(np.delete(np.arange(self.J), j))


def read_csv(path: str | Path) -> ClusteredDataset:
    """Read long-format ``cluster,unit,response[,cov...][,group]`` CSV.

    Cluster and unit labels may be arbitrary strings; they are mapped to
    0-based indices in order of first appearance (numeric labels sort
    numerically).  Group labels must be the integers 1..G.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", line=1, path=str(path)) from None
        if header[:3] != ["cluster", "unit", "response"]:
            raise ParseError(
                "header must start with cluster,unit,response", line=1, path=str(path)
            )
        has_group = header[-1] == "group"
        cov_names = tuple(header[3:-1] if has_group else header[3:])
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(rec)}", line=lineno, path=str(path)
                )
            try:
                resp = float(rec[2])
                covs = [float(c) for c in rec[3 : 3 + len(cov_names)]]
                grp = int(rec[-1]) if has_group else None
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno, path=str(path)) from None
            rows.append((rec[0].strip(), rec[1].strip(), resp, covs, grp, lineno))
    if not rows:
        raise ParseError("no data rows", line=2, path=str(path))

    def _labels(values):
        uniq = list(dict.fromkeys(values))
        try:
            uniq.sort(key=float)
        except ValueError:
            pass
        return {v: i for i, v in enumerate(uniq)}

    cmap = _labels([r[0] for r in rows])
    umap = _labels([r[1] for r in rows])
    J = len(cmap)
    cov = np.full((J, len(cov_names)), np.nan) if cov_names else None
    grp = np.zeros(J, dtype=np.int64) if has_group else None
    seen_grp = np.zeros(J, dtype=bool)
    cl, un, ys = [], [], []
    for c, u, resp, covs, g, lineno in rows:
        j = cmap[c]
        cl.append(j)
        un.append(umap[u])
        ys.append(resp)
        if cov is not None:
            if np.all(np.isnan(cov[j])):
                cov[j] = covs
            elif not np.array_equal(cov[j], covs):
                raise ParseError(f"covariates vary within cluster {c!r}", line=lineno, path=str(path))
        if grp is not None:
            if g < 1:
                raise ParseError("group labels must be 1..G", line=lineno, path=str(path))
            if seen_grp[j] and grp[j] != g - 1:
                raise ParseError(f"group label varies within cluster {c!r}", line=lineno, path=str(path))
            grp[j] = g - 1
            seen_grp[j] = True
    try:
        return ClusteredDataset(
            np.array(ys), np.array(cl), np.array(un), cov, grp, cov_names,
            tuple(cmap), tuple(umap),
        )
    except InvalidInputError as exc:
        raise ParseError(str(exc), path=str(path)) from None


def write_csv(data: ClusteredDataset, path: str | Path) -> None:
    path = Path(path)
    clabels = data.cluster_labels or tuple(str(j + 1) for j in range(data.J))
    ulabels = data.unit_labels or tuple(str(i + 1) for i in range(data.n_units))
    header = ["cluster", "unit", "response", *data.covariate_names]
    if data.group is not None:
        header.append("group")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in range(data.N):
            j = int(data.cluster[r])
            rec = [clabels[j], ulabels[int(data.unit[r])], repr(float(data.y[r]))]
            if data.covariates is not None:
                rec += [repr(float(v)) for v in data.covariates[j]]
            if data.group is not None:
                rec.append(int(data.group[j]) + 1)
            w.writerow(rec)


def from_matrix(
    Y: np.ndarray,
    covariates: np.ndarray | None = None,
    group: np.ndarray | None = None,
    covariate_names: Sequence[str] = (),
) -> ClusteredDataset:
    """Build a dataset from a (J, I) complete response matrix."""
    Y = np.asarray(Y, dtype=float)
    J, n_items = Y.shape
    return ClusteredDataset(
        Y.ravel(),
        np.repeat(np.arange(J), n_items),
        np.tile(np.arange(n_items), J),
        covariates,
        group,
        tuple(covariate_names),
    )
