"""Seeded construction of instances for every preference kind, plus latency-file ingestion.

Campaign reproducibility rests on one declared splitting rule: the stream
for instance ``index`` of a campaign seeded with ``seed`` is
``numpy.random.SeedSequence(entropy=seed, spawn_key=(index,))``.  The rule
identifier :data:`SEED_RULE` is written into every run manifest so results
can be replayed instance by instance, in any order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterator

import numpy as np

from .core import (
    KIND_ACYCLIC,
    KIND_MATRIX,
    KIND_NODE,
    KIND_TORUS,
    KINDS,
    NORM_MAX,
    NORM_TAXICAB,
    NORMS,
    Adjacency,
    Instance,
)

SEED_RULE = "seedsequence-spawnkey-v1"


class LoadError(ValueError):
    """Raised when a latency-matrix file cannot be parsed."""


def edge_prob_from_degree(d: float, n_nodes: int) -> float:
    """Convert an expected degree d to the edge probability p = d / (N - 1)."""
    if n_nodes < 2:
        raise ValueError("need at least 2 nodes")
    p = d / (n_nodes - 1)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"degree {d} is not feasible for N={n_nodes}")
    return p


@dataclass(frozen=True)
class GenSpec:
    """Parameters of a seeded instance family."""

    n_nodes: int
    edge_prob: float
    quota: int = 1
    kind: str = KIND_ACYCLIC
    dim: int = 1
    norm: str = NORM_TAXICAB
    seed: int = 0

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError("n_nodes must be >= 2")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ValueError("edge_prob must lie in [0, 1]")
        if self.quota < 1:
            raise ValueError("quota must be >= 1")
        if self.kind not in KINDS:
            raise ValueError(f"unknown preference kind {self.kind!r}")
        if self.kind == KIND_MATRIX:
            raise ValueError("matrix instances are built from a loaded matrix, not a GenSpec")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.norm not in NORMS:
            raise ValueError(f"unknown norm {self.norm!r}")

    @property
    def expected_degree(self) -> float:
        return self.edge_prob * (self.n_nodes - 1)

    def stream(self, count: int, start: int = 0) -> Iterator[Instance]:
        return instance_stream(self, count, start)


def stream_rng(seed: int, index: int) -> np.random.Generator:
    """Per-instance generator under the declared splitting rule (SEED_RULE)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


@lru_cache(maxsize=4)
def _pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    iu, ju = np.triu_indices(n, 1)
    return iu.astype(np.int64), ju.astype(np.int64)


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def gen_acceptance(n_nodes: int, edge_prob: float, seed_or_rng) -> Adjacency:
    """Erdos-Renyi acceptance graph: each pair i<j kept independently with probability p."""
    rng = _as_rng(seed_or_rng)
    iu, ju = _pair_indices(n_nodes)
    keep = rng.random(iu.size) < edge_prob
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    return Adjacency.from_edges(n_nodes, edges)


def torus_distance(a: np.ndarray, b: np.ndarray, norm: str = NORM_TAXICAB) -> np.ndarray:
    """Distance on the unit torus between coordinate arrays of shape (..., dim)."""
    diff = np.abs(np.asarray(a) - np.asarray(b))
    diff = np.minimum(diff, 1.0 - diff)
    if norm == NORM_TAXICAB:
        return diff.sum(axis=-1)
    if norm == NORM_MAX:
        return diff.max(axis=-1)
    raise ValueError(f"unknown norm {norm!r}")


def _torus_marks(points: np.ndarray, norm: str) -> np.ndarray:
    n, dim = points.shape
    acc = np.zeros((n, n))
    for k in range(dim):  # one coordinate at a time keeps temporaries at N^2
        d = np.abs(points[:, k][:, None] - points[:, k][None, :])
        np.minimum(d, 1.0 - d, out=d)
        if norm == NORM_TAXICAB:
            acc += d
        else:
            np.maximum(acc, d, out=acc)
    return acc


def gen_marks(
    n_nodes: int,
    kind: str,
    seed_or_rng,
    dim: int = 1,
    norm: str = NORM_TAXICAB,
) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Marks (and torus points, for geometric instances) for one instance.

    Node-based preferences return (None, None): the labels are the marks.
    Random-acyclic marks are sampled once per unordered pair and mirrored,
    covering non-edges as well so complete rankings are always defined.
    """
    rng = _as_rng(seed_or_rng)
    if kind == KIND_NODE:
        return None, None
    if kind == KIND_TORUS:
        points = rng.random((n_nodes, dim))
        marks = _torus_marks(points, norm)
        np.fill_diagonal(marks, np.inf)
        return marks, points
    if kind == KIND_ACYCLIC:
        iu, ju = _pair_indices(n_nodes)
        vals = rng.random(iu.size)
        marks = np.full((n_nodes, n_nodes), np.inf)
        marks[iu, ju] = vals
        marks[ju, iu] = vals
        return marks, None
    raise ValueError(f"cannot generate marks for kind {kind!r}")


def make_instance(spec: GenSpec, rng: np.random.Generator | None = None) -> Instance:
    """Build one instance from a GenSpec; deterministic for a fixed spec.

    The acceptance graph is drawn before the marks, so the stream layout is
    part of the reproducibility contract.
    """
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    acceptance = gen_acceptance(spec.n_nodes, spec.edge_prob, rng)
    marks, points = gen_marks(spec.n_nodes, spec.kind, rng, spec.dim, spec.norm)
    return Instance(
        n_nodes=spec.n_nodes,
        quota=np.full(spec.n_nodes, spec.quota, dtype=np.int64),
        kind=spec.kind,
        acceptance=acceptance,
        marks=marks,
        points=points,
        dim=spec.dim if spec.kind == KIND_TORUS else None,
        norm=spec.norm if spec.kind == KIND_TORUS else None,
        edge_prob=spec.edge_prob,
    )


def instance_stream(spec: GenSpec, count: int, start: int = 0) -> Iterator[Instance]:
    """Instances ``start .. start+count-1`` of the campaign, one stream each."""
    for index in range(start, start + count):
        yield make_instance(spec, stream_rng(spec.seed, index))


def load_latency_matrix(path) -> np.ndarray:
    """Read an N x N latency matrix (whitespace- or comma-separated rows).

    Returns the symmetrized marks m(i,j) = (raw(i,j) + raw(j,i)) / 2 with the
    diagonal cleared to +inf.  Raises LoadError with the offending position
    for non-square or non-numeric content.
    """
    text = Path(path).read_text()
    rows: list[list[float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        cells = [c for c in (line.split(",") if "," in line else line.split()) if c.strip()]
        row = []
        for colno, cell in enumerate(cells, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise LoadError(
                    f"row {lineno}, column {colno}: could not parse {cell.strip()!r} as a number"
                ) from None
            if np.isnan(v) or v == -np.inf:
                raise LoadError(f"row {lineno}, column {colno}: NaN/-inf marks are not allowed")
            row.append(v)
        rows.append(row)
    n = len(rows)
    if n < 2:
        raise LoadError(f"matrix has {n} row(s); need at least 2 nodes")
    widths = {len(r) for r in rows}
    if widths != {n}:
        bad = next(i for i, r in enumerate(rows, start=1) if len(r) != n)
        raise LoadError(
            f"matrix is not square: {n} rows but row {bad} has {len(rows[bad - 1])} columns"
        )
    raw = np.asarray(rows, dtype=np.float64)
    marks = (raw + raw.T) / 2.0
    np.fill_diagonal(marks, np.inf)
    return marks


def subsample(marks: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Restrict marks to k nodes drawn uniformly without replacement."""
    n = marks.shape[0]
    if not 2 <= k <= n:
        raise ValueError(f"k must lie in 2..{n}, got {k}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=k, replace=False)
    return marks[np.ix_(idx, idx)].copy()


def matrix_instance(
    marks: np.ndarray,
    edge_prob: float,
    quota: int = 1,
    seed_or_rng=0,
) -> Instance:
    """Instance over a loaded mark matrix with a fresh Erdos-Renyi acceptance graph."""
    n = marks.shape[0]
    rng = _as_rng(seed_or_rng)
    acceptance = gen_acceptance(n, edge_prob, rng)
    return Instance(
        n_nodes=n,
        quota=np.full(n, quota, dtype=np.int64),
        kind=KIND_MATRIX,
        acceptance=acceptance,
        marks=marks,
        edge_prob=edge_prob,
    )


@dataclass(frozen=True)
class MatrixCampaign:
    """A seeded campaign over one loaded mark matrix.

    Each instance draws a fresh acceptance graph; when ``n_nodes`` is
    smaller than the matrix, a fresh uniform node subset is drawn first
    (the marks are restricted, the acceptance graph lives on the subset).
    """

    marks: np.ndarray
    n_nodes: int
    edge_prob: float
    quota: int = 1
    seed: int = 0
    kind: str = KIND_MATRIX

    def __post_init__(self):
        n_full = self.marks.shape[0]
        if not 2 <= self.n_nodes <= n_full:
            raise ValueError(f"n_nodes must lie in 2..{n_full}")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ValueError("edge_prob must lie in [0, 1]")
        if self.quota < 1:
            raise ValueError("quota must be >= 1")

    @property
    def expected_degree(self) -> float:
        return self.edge_prob * (self.n_nodes - 1)

    def stream(self, count: int, start: int = 0) -> Iterator[Instance]:
        n_full = self.marks.shape[0]
        for index in range(start, start + count):
            rng = stream_rng(self.seed, index)
            if self.n_nodes < n_full:
                idx = rng.choice(n_full, size=self.n_nodes, replace=False)
                marks = self.marks[np.ix_(idx, idx)].copy()
            else:
                marks = self.marks
            yield matrix_instance(marks, self.edge_prob, self.quota, rng)
