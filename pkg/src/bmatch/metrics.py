"""Empirical estimators from Monte Carlo campaigns, and graph statistics.

Tallies are mergeable accumulators: per-instance updates combine
associatively and commutatively, so campaign reduction parallelizes and
the result does not depend on reduction order (given per-instance
seeding).  ``collect`` streams a campaign through a list of tallies,
optionally fanning instances out to worker processes.
"""

from __future__ import annotations

import copy
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import shortest_path

from .core import KIND_NODE, KIND_TORUS, Configuration, Instance, _tie_lt
from .engine import edge_preference_ranks, stable_configuration
from .fluid import torus_diameter


@dataclass(frozen=True)
class EmpiricalCurve:
    """An estimated distribution: CCDF samples on a support grid.

    ``mass`` (when present) is the per-point frequency whose suffix sums
    give ``ccdf``; any shortfall of ``sum(mass)`` from 1 is the unmatched
    deficit.  ``n_samples`` counts contributing observations (node-slots
    for rank curves, instances for pair curves).
    """

    support: np.ndarray
    ccdf: np.ndarray
    mass: np.ndarray | None
    n_samples: int
    meta: dict = field(default_factory=dict)


# --- per-instance vector helpers ----------------------------------------


def _slot_mates(conf: Configuration, c: int) -> np.ndarray:
    return conf.slot_indices(c)


def _complete_ranks_of_slot(inst: Instance, conf: Configuration, c: int):
    """(ranks, matched) with ranks[i0] = R_{i0+1}(c-th mate), valid where matched."""
    mate = _slot_mates(conf, c)
    matched = mate >= 0
    n = inst.n_nodes
    ranks = np.zeros(n, dtype=np.int64)
    if inst.kind == KIND_NODE:
        lab = mate + 1
        me = np.arange(1, n + 1)
        ranks[matched] = (lab - (lab > me))[matched]
        return ranks, matched
    safe = np.where(matched, mate, 0)
    v = inst.marks[np.arange(n), safe]
    less = (inst.marks < v[:, None]).sum(axis=1)
    eq_counts = (inst.marks == v[:, None]).sum(axis=1)
    ranks[matched] = less[matched] + 1
    # exact tie-break correction; float collisions are rare outside file data
    for i0 in np.flatnonzero(matched & (eq_counts > 1)):
        row = inst.marks[i0]
        for k0 in np.flatnonzero(row == v[i0]):
            if k0 != mate[i0] and _tie_lt(i0 + 1, k0 + 1, mate[i0] + 1):
                ranks[i0] += 1
    return ranks, matched


def _acceptable_ranks_of_slot(inst: Instance, conf: Configuration, c: int):
    """(ranks, matched) with ranks[i0] = r_{i0+1}(c-th mate) among neighbors."""
    mate = _slot_mates(conf, c)
    matched = mate >= 0
    n = inst.n_nodes
    edges = inst.acceptance.edges
    ranks_out = np.zeros(n, dtype=np.int64)
    if edges.size == 0 or not matched.any():
        return ranks_out, matched
    order_rank = edge_preference_ranks(inst)
    # per-node incident edge ranks, sorted: CSR over (node, rank) pairs
    node_ids = np.concatenate([edges[:, 0], edges[:, 1]])
    inc_rank = np.concatenate([order_rank, order_rank])
    srt = np.lexsort((inc_rank, node_ids))
    node_ids = node_ids[srt]
    inc_rank = inc_rank[srt]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, node_ids + 1, 1)
    np.cumsum(indptr, out=indptr)
    # rank of the matched edge within the incident list = acceptable rank - 1
    enc = edges[:, 0] * n + edges[:, 1]
    enc_order = np.argsort(enc)
    enc_sorted = enc[enc_order]
    mi = np.flatnonzero(matched)
    lo = np.minimum(mi, mate[mi])
    hi = np.maximum(mi, mate[mi])
    pos = np.searchsorted(enc_sorted, lo * n + hi)
    mate_rank = order_rank[enc_order[pos]]
    for idx, i0 in enumerate(mi):
        row = inc_rank[indptr[i0]:indptr[i0 + 1]]
        ranks_out[i0] = np.searchsorted(row, mate_rank[idx]) + 1
    return ranks_out, matched


# --- mergeable tallies ---------------------------------------------------


class RankTally:
    """Complete-rank histogram of the slot-c mate over a campaign."""

    def __init__(self, n_nodes: int, slot: int = 1):
        self.n_nodes = n_nodes
        self.slot = slot
        self.counts = np.zeros(n_nodes - 1, dtype=np.int64)  # ranks 1..N-1
        self.total = 0

    def update(self, inst: Instance, conf: Configuration) -> None:
        if inst.n_nodes != self.n_nodes:
            raise ValueError("instance size differs from the campaign's")
        ranks, matched = _complete_ranks_of_slot(inst, conf, self.slot)
        self.counts += np.bincount(ranks[matched] - 1, minlength=self.n_nodes - 1)
        self.total += inst.n_nodes

    def merge(self, other: "RankTally") -> None:
        self.counts += other.counts
        self.total += other.total

    def finalize(self) -> EmpiricalCurve:
        mass = self.counts / max(self.total, 1)
        ccdf = 1.0 - np.concatenate([[0.0], np.cumsum(mass)])
        return EmpiricalCurve(
            support=np.arange(1, self.n_nodes + 1),
            ccdf=ccdf,
            mass=mass,
            n_samples=self.total,
            meta={"curve": "rank", "slot": self.slot},
        )


class PairTally:
    """Frequency that the slot-c mate of one focal node is each other node."""

    def __init__(self, n_nodes: int, node: int, slot: int = 1):
        self.n_nodes = n_nodes
        self.node = node
        self.slot = slot
        self.counts = np.zeros(n_nodes, dtype=np.int64)
        self.n_instances = 0

    def update(self, inst: Instance, conf: Configuration) -> None:
        if inst.kind != KIND_NODE:
            raise ValueError("pair distributions are defined for node-based campaigns")
        mate = _slot_mates(conf, self.slot)[self.node - 1]
        if mate >= 0:
            self.counts[mate] += 1
        self.n_instances += 1

    def merge(self, other: "PairTally") -> None:
        self.counts += other.counts
        self.n_instances += other.n_instances

    def finalize(self) -> EmpiricalCurve:
        mass = self.counts / max(self.n_instances, 1)
        ccdf = 1.0 - np.concatenate([[0.0], np.cumsum(mass[:-1])])
        return EmpiricalCurve(
            support=np.arange(1, self.n_nodes + 1),
            ccdf=ccdf,
            mass=mass,
            n_samples=self.n_instances,
            meta={"curve": "pair", "node": self.node, "slot": self.slot},
        )


class DistanceTally:
    """CCDF of the slot-c mate distance on a fixed bin-edge grid."""

    def __init__(self, dim: int, norm: str, bins: int = 200, slot: int = 1):
        self.slot = slot
        self.edges = np.linspace(0.0, torus_diameter(dim, norm), bins + 1)
        self.ge_counts = np.zeros(self.edges.size, dtype=np.int64)
        self.total = 0

    def update(self, inst: Instance, conf: Configuration) -> None:
        if inst.kind != KIND_TORUS:
            raise ValueError("distance curves are defined for geometric campaigns")
        mate = _slot_mates(conf, self.slot)
        matched = mate >= 0
        n = inst.n_nodes
        dist = inst.marks[np.arange(n)[matched], mate[matched]]
        # counts of distances >= each edge; unmatched nodes count at every edge
        idx = np.searchsorted(np.sort(dist), self.edges, side="left")
        self.ge_counts += (dist.size - idx) + (n - dist.size)
        self.total += n

    def merge(self, other: "DistanceTally") -> None:
        self.ge_counts += other.ge_counts
        self.total += other.total

    def finalize(self) -> EmpiricalCurve:
        ccdf = self.ge_counts / max(self.total, 1)
        return EmpiricalCurve(
            support=self.edges.copy(),
            ccdf=ccdf,
            mass=None,
            n_samples=self.total,
            meta={"curve": "distance", "slot": self.slot},
        )


class AcceptableRankTally:
    """Acceptable-rank histogram of the slot-c mate over a campaign."""

    def __init__(self, n_nodes: int, slot: int = 1):
        self.n_nodes = n_nodes
        self.slot = slot
        self.counts = np.zeros(n_nodes - 1, dtype=np.int64)
        self.total = 0

    def update(self, inst: Instance, conf: Configuration) -> None:
        ranks, matched = _acceptable_ranks_of_slot(inst, conf, self.slot)
        self.counts += np.bincount(ranks[matched] - 1, minlength=self.n_nodes - 1)
        self.total += inst.n_nodes

    def merge(self, other: "AcceptableRankTally") -> None:
        self.counts += other.counts
        self.total += other.total

    def finalize(self) -> EmpiricalCurve:
        mass = self.counts / max(self.total, 1)
        ccdf = 1.0 - np.concatenate([[0.0], np.cumsum(mass)])
        return EmpiricalCurve(
            support=np.arange(1, self.n_nodes + 1),
            ccdf=ccdf,
            mass=mass,
            n_samples=self.total,
            meta={"curve": "acceptable_rank", "slot": self.slot},
        )


class GraphStatsTally:
    """Per-instance path-length and clustering statistics of the stable graph."""

    def __init__(self):
        self.rows: list[dict] = []

    def update(self, inst: Instance, conf: Configuration) -> None:
        dist = _distance_matrix(conf)
        a = _aspl_from(dist, conf.n_nodes)
        e = _eccentricity_from(dist)
        c = clustering(conf)
        self.rows.append(
            {
                "aspl": a.value,
                "disconnected_pairs": a.disconnected_pairs,
                "mean_eccentricity": e.mean_eccentricity,
                "diameter": e.diameter,
                "transitivity": c.transitivity,
                "mean_local": c.mean_local,
                "baseline": c.baseline,
            }
        )

    def merge(self, other: "GraphStatsTally") -> None:
        self.rows.extend(other.rows)

    def finalize(self) -> list[dict]:
        return list(self.rows)


# --- spec-level estimator entry points -----------------------------------


def _as_runs(instances) -> Iterable[tuple[Instance, Configuration]]:
    for item in instances:
        if isinstance(item, Instance):
            yield item, stable_configuration(item)
        else:
            yield item


def empirical_rank_dist(instances, slot: int = 1) -> EmpiricalCurve:
    """Empirical complete-rank distribution of the slot-c mate.

    ``instances`` is an iterable of Instance (configurations are computed)
    or of (Instance, Configuration) pairs; all must share one size.
    """
    tally = None
    for inst, conf in _as_runs(instances):
        if tally is None:
            tally = RankTally(inst.n_nodes, slot)
        tally.update(inst, conf)
    if tally is None:
        raise ValueError("empty campaign")
    return tally.finalize()


def empirical_pair_dist(instances, node: int, slot: int = 1) -> EmpiricalCurve:
    """Empirical distribution of which node fills slot c of the focal node."""
    tally = None
    for inst, conf in _as_runs(instances):
        if tally is None:
            tally = PairTally(inst.n_nodes, node, slot)
        tally.update(inst, conf)
    if tally is None:
        raise ValueError("empty campaign")
    return tally.finalize()


def empirical_distance_ccdf(instances, bins: int = 200, slot: int = 1) -> EmpiricalCurve:
    """Empirical mate-distance CCDF of a geometric campaign."""
    tally = None
    for inst, conf in _as_runs(instances):
        if tally is None:
            if inst.kind != KIND_TORUS:
                raise ValueError("distance curves are defined for geometric campaigns")
            tally = DistanceTally(inst.dim, inst.norm, bins, slot)
        tally.update(inst, conf)
    if tally is None:
        raise ValueError("empty campaign")
    return tally.finalize()


def empirical_acceptable_rank(instances, slot: int = 1) -> EmpiricalCurve:
    """Empirical acceptable-rank distribution of the slot-c mate."""
    tally = None
    for inst, conf in _as_runs(instances):
        if tally is None:
            tally = AcceptableRankTally(inst.n_nodes, slot)
        tally.update(inst, conf)
    if tally is None:
        raise ValueError("empty campaign")
    return tally.finalize()


# --- graph statistics -----------------------------------------------------


class AsplResult(NamedTuple):
    value: float | None          # None when no pair is connected
    disconnected_pairs: int      # ordered pairs of distinct nodes excluded


class EccentricityStats(NamedTuple):
    mean_eccentricity: float | None  # mean over nodes of max distance reached
    diameter: float | None           # largest finite distance


class ClusteringResult(NamedTuple):
    transitivity: float          # 3 * triangles / length-2 paths
    mean_local: float            # mean local coefficient, degree<2 counted 0
    baseline: float              # b / (N - 1) reference value


def _config_sparse(conf: Configuration) -> sp.csr_matrix:
    pairs = conf.mate_pairs() - 1
    n = conf.n_nodes
    if pairs.size == 0:
        return sp.csr_matrix((n, n))
    data = np.ones(pairs.shape[0] * 2)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def _distance_matrix(conf: Configuration) -> np.ndarray | None:
    a = _config_sparse(conf)
    if a.nnz == 0:
        return None
    dist = shortest_path(a, method="D", unweighted=True, directed=False)
    np.fill_diagonal(dist, np.inf)
    return dist


def _aspl_from(dist: np.ndarray | None, n: int) -> AsplResult:
    total_pairs = n * (n - 1)
    if dist is None:
        return AsplResult(None, total_pairs)
    finite = np.isfinite(dist)
    n_connected = int(finite.sum())
    if n_connected == 0:
        return AsplResult(None, total_pairs)
    return AsplResult(float(dist[finite].mean()), total_pairs - n_connected)


def _eccentricity_from(dist: np.ndarray | None) -> EccentricityStats:
    if dist is None:
        return EccentricityStats(None, None)
    reach = np.where(np.isfinite(dist), dist, -np.inf)
    ecc = reach.max(axis=1)
    ecc = ecc[np.isfinite(ecc)]  # isolated nodes reach nobody
    if ecc.size == 0:
        return EccentricityStats(None, None)
    return EccentricityStats(float(ecc.mean()), float(ecc.max()))


def aspl(conf: Configuration) -> AsplResult:
    """Average shortest path length over connected ordered pairs.

    Unreachable pairs are excluded from the average and returned as a
    count, so near-disconnection stays visible in reports.
    """
    return _aspl_from(_distance_matrix(conf), conf.n_nodes)


def eccentricity_stats(conf: Configuration) -> EccentricityStats:
    """Mean node eccentricity and diameter of the stable-configuration graph.

    A node's eccentricity is the largest BFS distance to any node it can
    reach; isolated nodes are skipped.  Reported alongside the pairwise
    average because published small-world tables often quote this hop
    radius rather than the pairwise mean.
    """
    return _eccentricity_from(_distance_matrix(conf))


def clustering(conf: Configuration) -> ClusteringResult:
    """Global transitivity of the stable graph, with mean-local and baseline.

    Transitivity = 3 * triangles / paths-of-length-2 (0 when no such path);
    the mean-local variant averages per-node coefficients with degree < 2
    counted as 0.  The baseline b/(N-1) is the edge density a random graph
    with the same quota would show.
    """
    n = conf.n_nodes
    baseline = float(conf.quota.mean() / (n - 1))
    a = _config_sparse(conf)
    deg = np.asarray(a.sum(axis=1)).ravel()
    paths2 = float((deg * (deg - 1)).sum())  # ordered pairs of neighbors: 2 * paths
    if paths2 == 0:
        return ClusteringResult(0.0, 0.0, baseline)
    a2 = a @ a
    closed = float(a2.multiply(a).sum())  # 6 * triangles
    transitivity = closed / paths2
    tri_per_node = np.asarray(a2.multiply(a).sum(axis=1)).ravel() / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        local = np.where(deg >= 2, tri_per_node / (deg * (deg - 1) / 2.0), 0.0)
    return ClusteringResult(float(transitivity), float(local.mean()), baseline)


# --- campaign driver -------------------------------------------------------


def _run_chunk(spec, start: int, count: int, tallies):
    for inst in spec.stream(count, start=start):
        conf = stable_configuration(inst)
        for t in tallies:
            t.update(inst, conf)
    return tallies


def collect(spec, n_instances: int, tallies, jobs: int = 1):
    """Stream a campaign (GenSpec or MatrixCampaign) through tallies.

    Returns the filled tallies.  With jobs > 1 the instance range is split
    across worker processes and the partial tallies merged on return (use
    the return value, not the passed-in objects); per-instance seeding
    makes the result independent of the split.
    """
    if n_instances < 1:
        raise ValueError("n_instances must be >= 1")
    jobs = max(1, min(jobs, n_instances, os.cpu_count() or 1))
    if jobs == 1:
        return _run_chunk(spec, 0, n_instances, tallies)
    bounds = np.linspace(0, n_instances, jobs + 1).astype(int)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [
            pool.submit(_run_chunk, spec, int(lo), int(hi - lo), copy.deepcopy(tallies))
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        parts = [f.result() for f in futures]
    merged = parts[0]
    for part in parts[1:]:
        for t, other in zip(merged, part):
            t.merge(other)
    return merged
