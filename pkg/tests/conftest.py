"""Shared test helpers: random instance factories and a brute-force matcher."""

from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest

from bmatch.core import Adjacency, Configuration, Instance
from bmatch.engine import symmetric_edge_key, verify_stability
from bmatch.generate import GenSpec, make_instance


KIND_PARAMS = [
    ("node", 1),
    ("torus", 1),
    ("torus", 3),
    ("acyclic", 1),
]


def random_instance(kind: str, n: int, p: float, b: int = 1, dim: int = 1, seed: int = 0) -> Instance:
    return make_instance(GenSpec(n_nodes=n, edge_prob=p, quota=b, kind=kind, dim=dim, seed=seed))


def explicit_instance(marks: np.ndarray, edges, quota: int = 1, kind: str = "matrix") -> Instance:
    """Instance with hand-written marks and edge list (1-based pairs)."""
    n = marks.shape[0]
    e = np.asarray([(a - 1, b - 1) for a, b in edges], dtype=np.int64).reshape(-1, 2)
    return Instance(
        n_nodes=n,
        quota=np.full(n, quota, dtype=np.int64),
        kind=kind,
        acceptance=Adjacency.from_edges(n, e),
        marks=marks,
    )


def complete_node_instance(n: int, b: int = 1) -> Instance:
    return random_instance("node", n, 1.0, b=b)


def all_stable_configurations(inst: Instance) -> list[Configuration]:
    """Exhaustive search over every quota-feasible matching (small N only).

    Enumerates nodewise: node i picks any feasible set of higher-labelled
    acceptance partners.  Each complete matching is checked with
    verify_stability, so this oracle is independent of the greedy engine.
    """
    n = inst.n_nodes
    quota = inst.quota
    higher = {
        i: [j for j in inst.acceptance.neighbors_of(i) if j > i] for i in range(1, n + 1)
    }
    mates: dict[int, list[int]] = {i: [] for i in range(1, n + 1)}
    stable: list[Configuration] = []

    def as_configuration() -> Configuration:
        ordered = []
        for i in range(1, n + 1):
            ms = sorted(mates[i], key=lambda j: symmetric_edge_key(inst, i, j))
            ordered.append(tuple(ms))
        return Configuration(n_nodes=n, quota=quota, mates=tuple(ordered))

    def rec(i: int) -> None:
        if i > n:
            conf = as_configuration()
            if not verify_stability(inst, conf):
                stable.append(conf)
            return
        room = quota[i - 1] - len(mates[i])
        avail = [j for j in higher[i] if len(mates[j]) < quota[j - 1]]
        for size in range(0, min(room, len(avail)) + 1):
            for chosen in combinations(avail, size):
                for j in chosen:
                    mates[i].append(j)
                    mates[j].append(i)
                rec(i + 1)
                for j in chosen:
                    mates[i].remove(j)
                    mates[j].remove(i)

    rec(1)
    return stable
