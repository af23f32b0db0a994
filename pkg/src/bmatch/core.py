"""Domain types for preference-based systems and the ranking algebra shared by all modules.

A preference-based system is a set of N nodes together with an undirected
acceptance graph (which pairs may be matched), a symmetric mark matrix
(lower mark = more preferred) and per-node quotas.  Node-based preferences
carry no explicit matrix: the node labels 1..N are the marks, label 1 being
globally best.

Node identifiers in the public API are 1-based to match the usual
recursion indices.  Arrays stored on the objects use 0-based layout; that
layout is an implementation detail.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

KIND_NODE = "node"
KIND_TORUS = "torus"
KIND_ACYCLIC = "acyclic"
KIND_MATRIX = "matrix"
KINDS = (KIND_NODE, KIND_TORUS, KIND_ACYCLIC, KIND_MATRIX)

NORM_TAXICAB = "taxicab"
NORM_MAX = "max"
NORMS = (NORM_TAXICAB, NORM_MAX)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Adjacency:
    """Undirected, non-reflexive acceptance graph over nodes 0..n-1 (internal ids).

    ``edges`` holds each undirected edge once as a row (u, v) with u < v.
    A CSR view (``indptr``/``neighbors``) is built for neighbor queries.
    """

    n_nodes: int
    edges: np.ndarray          # (E, 2) int64, u < v per row
    indptr: np.ndarray         # (n_nodes + 1,) int64
    neighbors: np.ndarray      # (2E,) int64, sorted within each row

    @classmethod
    def from_edges(cls, n_nodes: int, edges: np.ndarray) -> "Adjacency":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= n_nodes:
                raise ValueError("edge endpoint out of range")
            lo = edges.min(axis=1)
            hi = edges.max(axis=1)
            if np.any(lo == hi):
                raise ValueError("acceptance graph must not contain self-loops")
            edges = np.stack([lo, hi], axis=1)
            edges = np.unique(edges, axis=0)
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(n_nodes, _frozen(edges), _frozen(indptr), _frozen(dst))

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def degree(self, i: int) -> int:
        i0 = i - 1
        return int(self.indptr[i0 + 1] - self.indptr[i0])

    def neighbors_of(self, i: int) -> np.ndarray:
        """1-based neighbor labels of node i, ascending."""
        i0 = i - 1
        return self.neighbors[self.indptr[i0]:self.indptr[i0 + 1]] + 1

    def has_edge(self, i: int, j: int) -> bool:
        i0, j0 = i - 1, j - 1
        row = self.neighbors[self.indptr[i0]:self.indptr[i0 + 1]]
        pos = np.searchsorted(row, j0)
        return bool(pos < row.size and row[pos] == j0)


@dataclass(frozen=True)
class Instance:
    """An immutable preference-based system.

    ``marks`` is the full symmetric mark matrix with +inf on the diagonal
    (a node never ranks itself); it is None for node-based preferences,
    whose marks are the labels themselves.  ``points`` holds the torus
    coordinates for geometric instances.  ``edge_prob`` records the edge
    probability used at generation time, when known.
    """

    n_nodes: int
    quota: np.ndarray                 # (N,) int64, per-node quota b(i)
    kind: str
    acceptance: Adjacency
    marks: np.ndarray | None = None   # (N, N) float64, +inf diagonal
    points: np.ndarray | None = None  # (N, dim) float64, torus coordinates
    dim: int | None = None
    norm: str | None = None
    edge_prob: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown preference kind {self.kind!r}")
        if self.n_nodes < 2:
            raise ValueError("an instance needs at least 2 nodes")
        quota = np.asarray(self.quota, dtype=np.int64)
        if quota.shape != (self.n_nodes,):
            raise ValueError("quota must have one entry per node")
        if quota.min() < 1:
            raise ValueError("quotas must be positive")
        object.__setattr__(self, "quota", _frozen(quota))
        if self.kind == KIND_NODE:
            if self.marks is not None:
                raise ValueError("node-based instances carry no mark matrix")
        else:
            m = np.asarray(self.marks, dtype=np.float64)
            if m.shape != (self.n_nodes, self.n_nodes):
                raise ValueError("marks must be an N x N matrix")
            off = ~np.eye(self.n_nodes, dtype=bool)
            if np.isnan(m[off]).any() or np.isneginf(m[off]).any():
                raise ValueError("marks must be finite or +inf (no NaN, no -inf)")
            if not np.array_equal(m, m.T):
                raise ValueError("marks must be symmetric")
            m = m.copy()
            np.fill_diagonal(m, np.inf)
            object.__setattr__(self, "marks", _frozen(m))
        if self.points is not None:
            object.__setattr__(self, "points", _frozen(np.asarray(self.points, dtype=np.float64)))
        if self.norm is not None and self.norm not in NORMS:
            raise ValueError(f"unknown norm {self.norm!r}")

    @property
    def expected_degree(self) -> float | None:
        """d = p (N - 1) of the generating Erdos-Renyi law, when p is known."""
        if self.edge_prob is None:
            return None
        return self.edge_prob * (self.n_nodes - 1)

    def _check_pair(self, i: int, j: int) -> None:
        n = self.n_nodes
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"node labels must lie in 1..{n}")
        if i == j:
            raise ValueError("ranking is not reflexive: i and j must differ")


@dataclass(frozen=True)
class Configuration:
    """The stable matching of an instance: per-node mate lists, best mate first.

    ``mates[i0]`` is the tuple of 1-based mate labels of node i0+1, ordered
    by that node's preference; position c-1 holds the c-th best mate.
    """

    n_nodes: int
    quota: np.ndarray
    mates: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "quota", _frozen(np.asarray(self.quota, dtype=np.int64)))

    def mates_of(self, i: int) -> tuple[int, ...]:
        return self.mates[i - 1]

    @property
    def n_matched_nodes(self) -> int:
        return sum(1 for m in self.mates if m)

    def mate_pairs(self) -> np.ndarray:
        """All matched pairs once, as an (M, 2) array of 1-based labels, u < v."""
        pairs = [(i + 1, j) for i, ms in enumerate(self.mates) for j in ms if i + 1 < j]
        if not pairs:
            return np.empty((0, 2), dtype=np.int64)
        return np.asarray(pairs, dtype=np.int64)

    @cached_property
    def _slot_matrix(self) -> np.ndarray:
        """(N, max_slots) 0-based mate indices, -1 where the slot is unfilled."""
        width = max((len(m) for m in self.mates), default=0)
        out = np.full((self.n_nodes, max(width, 1)), -1, dtype=np.int64)
        for i0, ms in enumerate(self.mates):
            for c, j in enumerate(ms):
                out[i0, c] = j - 1
        return out

    def slot_indices(self, c: int) -> np.ndarray:
        """0-based mate index of each node's c-th mate, -1 where absent."""
        sm = self._slot_matrix
        if c > sm.shape[1]:
            return np.full(self.n_nodes, -1, dtype=np.int64)
        return sm[:, c - 1].copy()


def _tie_lt(i: int, a: int, b: int) -> bool:
    # tie-break for equal marks: the edge with the smaller (min, max) label
    # pair wins, keeping the broken order symmetric hence acyclic
    ka = (min(i, a), max(i, a))
    kb = (min(i, b), max(i, b))
    return ka < kb


def prefers(instance: Instance, i: int, j: int, k: int) -> bool:
    """True iff node i strictly prefers j to k under the tie-broken order."""
    instance._check_pair(i, j)
    instance._check_pair(i, k)
    if j == k:
        return False
    if instance.kind == KIND_NODE:
        return j < k
    mj = instance.marks[i - 1, j - 1]
    mk = instance.marks[i - 1, k - 1]
    if mj != mk:
        return bool(mj < mk)
    return _tie_lt(i, j, k)


def complete_rank(instance: Instance, i: int, j: int) -> int:
    """Rank of j in i's preference over all N-1 other nodes (1 = best)."""
    instance._check_pair(i, j)
    if instance.kind == KIND_NODE:
        return j if j < i else j - 1
    row = instance.marks[i - 1]
    v = row[j - 1]
    less = int((row < v).sum())
    eq = np.flatnonzero(row == v)
    ties_before = sum(1 for k0 in eq if k0 != j - 1 and _tie_lt(i, k0 + 1, j))
    return less + ties_before + 1


def acceptable_rank(instance: Instance, i: int, j: int) -> int | None:
    """Rank of j among i's acceptance-graph neighbors, or None if not acceptable."""
    instance._check_pair(i, j)
    if not instance.acceptance.has_edge(i, j):
        return None
    nbrs = instance.acceptance.neighbors_of(i)
    if instance.kind == KIND_NODE:
        return int((nbrs < j).sum()) + 1
    row = instance.marks[i - 1]
    v = row[j - 1]
    marks_n = row[nbrs - 1]
    less = int((marks_n < v).sum())
    ties_before = sum(1 for k in nbrs[marks_n == v] if k != j and _tie_lt(i, int(k), j))
    return less + ties_before + 1
