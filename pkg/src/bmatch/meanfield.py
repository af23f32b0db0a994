"""Discrete analytical solvers for stable-matching probabilities.

Three independent routes to the pair-matching law of node-based systems:

* the mean-field recursion  D(i,j) = p S(i,j) S(j,i)  and its b-slot
  generalization, solved exactly by dynamic programming in increasing
  order of i+j (every right-hand term has a strictly smaller index sum,
  so no fixed-point iteration is involved);
* the exact recursion obtained by conditioning on the mate of node 1,
  with boundary D(1,k) = p (1-p)^(k-2);
* a brute-force oracle that enumerates every acceptance graph.

Rank-based systems (random-acyclic / geometric) get the one-dimensional
recursion S_R(K+1) = S_R(K) - p S_R(K)^2 and its b-slot version.

All distributions are indexed 1-based in the accessors; the underlying
arrays are documented 0-based views.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_DOMINANCE_TOL = 1e-12


@dataclass(frozen=True)
class RankDistribution:
    """Distribution of a mate's rank: mass D(K) for K=1..N-1 and CCDF S(K) for K=1..N.

    S(K) is the probability that the slot's mate has rank >= K or the slot
    is unfilled; S(N) is therefore the probability the slot stays empty.
    ``d_vals[K-1] = D(K)`` and ``s_vals[K-1] = S(K)``.
    """

    n_nodes: int
    edge_prob: float
    quota: int
    slot: int
    d_vals: np.ndarray
    s_vals: np.ndarray

    def d(self, K: int) -> float:
        return float(self.d_vals[K - 1])

    def s(self, K: int) -> float:
        return float(self.s_vals[K - 1])

    @property
    def unmatched_prob(self) -> float:
        return float(self.s_vals[-1])


@dataclass(frozen=True)
class PairDistribution:
    """Slot-resolved mate probabilities D_c(i,j) for node-based preferences.

    ``d_vals[c-1, i-1, j-1] = D_c(i,j)`` and
    ``s_vals[c-1, i-1, j-1] = S_c(i,j)`` for j = 1..N+1, where
    S_c(i,j) = 1 - sum_{k<j} D_c(i,k); S_c(i, N+1) is the probability that
    slot c of node i stays empty.
    """

    n_nodes: int
    edge_prob: float
    quota: int
    d_vals: np.ndarray  # (b, N, N)
    s_vals: np.ndarray  # (b, N, N+1)

    def d(self, i: int, j: int, c: int = 1) -> float:
        return float(self.d_vals[c - 1, i - 1, j - 1])

    def s(self, i: int, j: int, c: int = 1) -> float:
        return float(self.s_vals[c - 1, i - 1, j - 1])

    def row(self, i: int, c: int = 1) -> np.ndarray:
        """D_c(i, .) as a vector over j = 1..N."""
        return self.d_vals[c - 1, i - 1].copy()

    def ccdf_row(self, i: int, c: int = 1) -> np.ndarray:
        """S_c(i, .) as a vector over j = 1..N+1."""
        return self.s_vals[c - 1, i - 1].copy()

    def unmatched_prob(self, i: int, c: int = 1) -> float:
        return float(self.s_vals[c - 1, i - 1, -1])


def _check_np(N: int, p: float) -> None:
    if N < 2:
        raise ValueError("N must be >= 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")


def solve_node_b1(N: int, p: float) -> PairDistribution:
    """Mean-field pair distribution for b=1: D(i,j) = p S(i,j) S(j,i)."""
    _check_np(N, p)
    S = np.ones((N + 2, N + 3))
    D = np.zeros((N + 1, N + 1))
    for s in range(2, 2 * N + 1):
        lo = max(1, s - N)
        hi = min(N, s - 1)
        I = np.arange(lo, hi + 1)
        J = s - I
        vals = p * S[I, J] * S[J, I]
        vals[I == J] = 0.0  # mating is not reflexive
        D[I, J] = vals
        S[I, J + 1] = S[I, J] - vals
    return PairDistribution(N, p, 1, D[1:, 1:][None, :, :], S[1:N + 1, 1:N + 2][None, :, :])


def solve_node_bmatch(N: int, p: float, b: int) -> PairDistribution:
    """Mean-field pair distributions for all slots c = 1..b, solved jointly.

    D_1 = p S_1(i,j) S_b(j,i) and D_c = p (S_c - S_{c-1})(i,j) S_b(j,i) for
    c > 1; the same index-sum dynamic program advances every slot together.
    Memory grows as b * N^2 doubles for each of D and S.
    """
    _check_np(N, p)
    if b < 1:
        raise ValueError("b must be >= 1")
    S = np.ones((b + 1, N + 2, N + 3))
    S[0] = 0.0  # virtual slot 0 unifies the c=1 case
    D = np.zeros((b, N + 1, N + 1))
    for s in range(2, 2 * N + 1):
        lo = max(1, s - N)
        hi = min(N, s - 1)
        I = np.arange(lo, hi + 1)
        J = s - I
        diag = I == J
        sb = S[b, J, I]
        for c in range(1, b + 1):
            vals = p * (S[c, I, J] - S[c - 1, I, J]) * sb
            vals[diag] = 0.0
            D[c - 1, I, J] = vals
            S[c, I, J + 1] = S[c, I, J] - vals
    return PairDistribution(N, p, b, D[:, 1:, 1:], S[1:, 1:N + 1, 1:N + 2].copy())


def solve_node_exact_b1(N: int, p: float) -> PairDistribution:
    """Exact pair distribution for b=1 by conditioning on the mate of node 1.

    D(1,k) = p (1-p)^(k-2) for k >= 2, and for 1 < i < j
    D(i,j) = A(i) D(i-2,j-2) + B(i,j) D(i-1,j-2) + C(j) D(i-1,j-1) with
    A(i) = 1-(1-p)^(i-2), B(i,j) = (1-p)^(i-1)-(1-p)^(j-2),
    C(j) = (1-p)^(j-1).  Entries with a first index 0 are defined as zero;
    the only reachable one is multiplied by A(2) = 0, so the convention is
    inert.  The lower triangle is filled by symmetry.
    """
    _check_np(N, p)
    q = 1.0 - p
    # powers of (1-p) by repeated multiplication, cached for the whole run
    qp = np.concatenate([[1.0], np.cumprod(np.full(N, q))])
    D = np.zeros((N + 1, N + 1))  # 1-based; row 0 stays zero
    ks = np.arange(2, N + 1)
    D[1, 2:] = p * qp[ks - 2]
    for i in range(2, N):
        js = np.arange(i + 1, N + 1)
        A = 1.0 - qp[i - 2]
        B = qp[i - 1] - qp[js - 2]
        C = qp[js - 1]
        D[i, js] = A * D[i - 2, js - 2] + B * D[i - 1, js - 2] + C * D[i - 1, js - 1]
    D = D + D.T  # upper triangle only so far; diagonal is zero
    d = D[1:, 1:]
    s = np.ones((N, N + 1))
    s[:, 1:] = 1.0 - np.cumsum(d, axis=1)
    return PairDistribution(N, p, 1, d[None, :, :], s[None, :, :])


_EXACT_ENUM_MAX = 7
_ENUM_MAX = 12


def brute_force_node_b1(
    N: int,
    p: float,
    mc_samples: int | None = None,
    seed: int = 0,
) -> PairDistribution:
    """Oracle for the node-based b=1 law by direct enumeration of acceptance graphs.

    Exact for N <= 7 (sums p^|E| (1-p)^(C(N,2)-|E|) over all 2^C(N,2)
    graphs).  Beyond that an explicit ``mc_samples`` count is required and
    a Monte Carlo estimate over that many sampled graphs is returned.
    """
    _check_np(N, p)
    if N > _ENUM_MAX:
        raise ValueError(f"brute force is limited to N <= {_ENUM_MAX}")
    iu, ju = np.triu_indices(N, 1)  # label-lex order == preference order
    M = iu.size
    if mc_samples is None:
        if N > _EXACT_ENUM_MAX:
            raise ValueError(
                f"exact enumeration is limited to N <= {_EXACT_ENUM_MAX}; "
                "pass mc_samples for a Monte Carlo estimate"
            )
        masks = np.arange(1 << M, dtype=np.int64)
        pop = np.bitwise_count(masks).astype(np.float64)
        weights = p ** pop * (1.0 - p) ** (M - pop)
        present = [(masks >> e) & 1 for e in range(M)]
        present = [x.astype(bool) for x in present]
    else:
        rng = np.random.default_rng(seed)
        draws = rng.random((mc_samples, M)) < p
        weights = np.full(mc_samples, 1.0 / mc_samples)
        present = [draws[:, e] for e in range(M)]
    n_worlds = weights.size
    matched = np.zeros((n_worlds, N), dtype=bool)
    D = np.zeros((N, N))
    for e in range(M):
        a, b_ = int(iu[e]), int(ju[e])
        free = present[e] & ~matched[:, a] & ~matched[:, b_]
        w = weights[free].sum()
        D[a, b_] += w
        D[b_, a] += w
        matched[free, a] = True
        matched[free, b_] = True
    s = np.ones((N, N + 1))
    s[:, 1:] = 1.0 - np.cumsum(D, axis=1)
    return PairDistribution(N, p, 1, D[None, :, :], s[None, :, :])


def solve_rank_b1(N: int, p: float) -> RankDistribution:
    """Rank CCDF recursion for b=1: S_R(1)=1, S_R(K+1) = S_R(K) - p S_R(K)^2."""
    _check_np(N, p)
    s = np.ones(N)
    for K in range(1, N):
        s[K] = s[K - 1] - p * s[K - 1] ** 2
    d = s[:-1] - s[1:]
    return RankDistribution(N, p, 1, 1, d, s)


def solve_rank_bmatch(N: int, p: float, b: int) -> list[RankDistribution]:
    """Rank CCDFs of all slots c = 1..b, advanced together in K.

    D_{R,1}(K) = p S_{R,1}(K) S_{R,b}(K) and
    D_{R,c}(K) = p (S_{R,c}(K) - S_{R,c-1}(K)) S_{R,b}(K) for c > 1.
    """
    _check_np(N, p)
    if b < 1:
        raise ValueError("b must be >= 1")
    S = np.ones((b + 1, N))
    S[0] = 0.0
    for K in range(N - 1):
        sb = S[b, K]
        d_step = p * (S[1:, K] - S[:-1, K]) * sb
        S[1:, K + 1] = S[1:, K] - d_step
    out = []
    for c in range(1, b + 1):
        s = S[c]
        d = s[:-1] - s[1:]
        out.append(RankDistribution(N, p, b, c, d, s))
    return out


def check_slot_dominance(dists) -> float:
    """Largest violation of S_c >= S_{c-1} across slots (negative means violation).

    Accepts either a list of RankDistributions (slots of one solve) or a
    PairDistribution.  The c-th mate is never better-ranked than the
    (c-1)-th, so slot CCDFs must be pointwise non-decreasing in c.
    """
    if isinstance(dists, PairDistribution):
        s = dists.s_vals
        if s.shape[0] == 1:
            return 0.0
        return float((s[1:] - s[:-1]).min())
    svals = np.stack([rd.s_vals for rd in dists])
    if svals.shape[0] == 1:
        return 0.0
    return float((svals[1:] - svals[:-1]).min())
