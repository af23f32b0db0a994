"""Stable configuration of an instance, and an independent stability checker.

Acyclic (symmetric-mark) preferences admit a single stable b-matching, and
it is produced by one greedy pass: sort the acceptance edges by a
symmetric key that all endpoints agree on, then accept each edge whose two
endpoints still have spare quota.  At the moment an edge is accepted it is
mutually best among the remaining options of both endpoints, which is
exactly the stability certificate.
"""

from __future__ import annotations

import numpy as np

from .core import KIND_NODE, Configuration, Instance


class InvalidConfigurationError(ValueError):
    """A configuration violating quota, mutuality, ordering or acceptance.

    Raised by verify_stability so that malformed input is reported
    distinctly from instability (which is a normal, non-empty result).
    """


def symmetric_edge_key(instance: Instance, i: int, j: int):
    """Totally ordered key of an acceptance edge, equal from both endpoints.

    For fixed i, key(i,j) < key(i,k) iff i prefers j to k.  Edge-mark kinds
    use the tuple (mark, min label, max label); node-based preferences use
    the composite integer N*min + max, which reproduces label order on both
    endpoints.
    """
    instance._check_pair(i, j)
    if not instance.acceptance.has_edge(i, j):
        raise ValueError(f"pair ({i}, {j}) is not an acceptance edge")
    lo, hi = min(i, j), max(i, j)
    if instance.kind == KIND_NODE:
        return instance.n_nodes * lo + hi
    return (float(instance.marks[i - 1, j - 1]), lo, hi)


def _edge_sort_order(instance: Instance) -> np.ndarray:
    """Indices of acceptance edges sorted ascending by symmetric key."""
    edges = instance.acceptance.edges
    u, v = edges[:, 0], edges[:, 1]
    if instance.kind == KIND_NODE:
        return np.lexsort((v, u))
    w = instance.marks[u, v]
    return np.lexsort((v, u, w))


def edge_preference_ranks(instance: Instance) -> np.ndarray:
    """Dense rank of every acceptance edge in the global symmetric-key order.

    ranks[e] is the position (0-based) of edge e of ``acceptance.edges`` in
    ascending key order.  For a fixed node, comparing the ranks of two
    incident edges decides its preference between the two partners.
    """
    order = _edge_sort_order(instance)
    ranks = np.empty(order.size, dtype=np.int64)
    ranks[order] = np.arange(order.size)
    return ranks


def stable_configuration(instance: Instance) -> Configuration:
    """The unique stable b-matching of the instance."""
    order = _edge_sort_order(instance)
    edges = instance.acceptance.edges
    us = edges[order, 0].tolist()
    vs = edges[order, 1].tolist()
    residual = instance.quota.tolist()
    mates: list[list[int]] = [[] for _ in range(instance.n_nodes)]
    for a, b in zip(us, vs):
        if residual[a] > 0 and residual[b] > 0:
            residual[a] -= 1
            residual[b] -= 1
            mates[a].append(b + 1)
            mates[b].append(a + 1)
    return Configuration(
        n_nodes=instance.n_nodes,
        quota=instance.quota,
        mates=tuple(tuple(m) for m in mates),
    )


def _edge_lookup(instance: Instance):
    """Maps (u0, v0) pairs to edge indices via an encoded sorted array."""
    edges = instance.acceptance.edges
    n = instance.n_nodes
    enc = edges[:, 0] * n + edges[:, 1]
    order = np.argsort(enc)
    return enc[order], order


def _pairs_to_edge_indices(instance: Instance, pairs: np.ndarray) -> np.ndarray:
    enc_sorted, enc_order = _edge_lookup(instance)
    n = instance.n_nodes
    q = (pairs[:, 0] - 1) * n + (pairs[:, 1] - 1)
    pos = np.searchsorted(enc_sorted, q)
    ok = (pos < enc_sorted.size) & (enc_sorted[np.minimum(pos, enc_sorted.size - 1)] == q)
    if not ok.all():
        bad = pairs[~ok][0]
        raise InvalidConfigurationError(
            f"matched pair ({bad[0]}, {bad[1]}) is not an acceptance edge"
        )
    return enc_order[pos]


def _validate_configuration(instance: Instance, conf: Configuration) -> None:
    n = instance.n_nodes
    if conf.n_nodes != n:
        raise InvalidConfigurationError("configuration size differs from instance size")
    for i0, ms in enumerate(conf.mates):
        i = i0 + 1
        if len(ms) > instance.quota[i0]:
            raise InvalidConfigurationError(f"node {i} exceeds its quota")
        if len(set(ms)) != len(ms):
            raise InvalidConfigurationError(f"node {i} lists a mate twice")
        for j in ms:
            if not 1 <= j <= n or j == i:
                raise InvalidConfigurationError(f"node {i} lists invalid mate {j}")
            if i not in conf.mates[j - 1]:
                raise InvalidConfigurationError(f"pair ({i}, {j}) is not mutual")
        for a, b in zip(ms, ms[1:]):  # best-first ordering
            if not symmetric_edge_key(instance, i, a) < symmetric_edge_key(instance, i, b):
                raise InvalidConfigurationError(f"mates of node {i} are not in preference order")


def verify_stability(instance: Instance, conf: Configuration) -> list[tuple[int, int]]:
    """All blocking pairs of a configuration; an empty list certifies stability.

    An acceptance edge {i,j} outside the matching blocks iff each endpoint
    either has spare quota or prefers the other to its own worst current
    mate.  Malformed configurations raise InvalidConfigurationError instead
    of being reported as unstable.
    """
    _validate_configuration(instance, conf)
    n = instance.n_nodes
    edges = instance.acceptance.edges
    if edges.size == 0:
        return []
    ranks = edge_preference_ranks(instance)
    big = np.int64(edges.shape[0])  # larger than any rank: "any partner gains"
    worst = np.full(n, big)
    pairs = conf.mate_pairs()
    matched_mask = np.zeros(edges.shape[0], dtype=bool)
    if pairs.size:
        idx = _pairs_to_edge_indices(instance, pairs)
        matched_mask[idx] = True
        full = np.asarray([len(m) for m in conf.mates]) >= instance.quota
        # the worst mate of a node is the last (best-first) entry of its list
        worst_pairs = np.asarray(
            [(i + 1, m[-1]) for i, m in enumerate(conf.mates) if full[i] and m],
            dtype=np.int64,
        )
        if worst_pairs.size:
            lo = worst_pairs.min(axis=1)
            hi = worst_pairs.max(axis=1)
            widx = _pairs_to_edge_indices(instance, np.stack([lo, hi], axis=1))
            worst[worst_pairs[:, 0] - 1] = ranks[widx]
        # full nodes with an empty list cannot happen (quota >= 1), but a
        # full node gains only by strict preference over its worst mate
    blocking = (~matched_mask) & (ranks < worst[edges[:, 0]]) & (ranks < worst[edges[:, 1]])
    out = edges[blocking] + 1
    out = out[np.lexsort((out[:, 1], out[:, 0]))]
    return [(int(a), int(b)) for a, b in out]
