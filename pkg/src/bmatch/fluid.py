"""Continuous-limit laws: closed forms, special functions, and integrated systems.

Closed forms cover the node-based pair law
S(a,b) = 1 / (1 - e^(-d a) + e^(d (b - a))), its density, the rank law
1 / (d a + 1), and the distance law 1 / (d B_n(x) + 1) built on torus ball
volumes.  The b > 1 limit systems have no explicit solution; the rank
system is integrated by fixed-step classical Runge-Kutta and the
two-variable node system by the discrete recursion run at grid resolution
with the continuous diagonal extension (the construction under which the
limit theorem is stated).

Special functions (regularized incomplete beta, exponential integral E1)
are evaluated to ~1e-12 by Lentz continued fractions with power-series
fallbacks; both are scalar double-precision routines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import NORM_MAX, NORM_TAXICAB
from .meanfield import RankDistribution

_E1_OF_1 = None  # cached E1(1)


@dataclass(frozen=True)
class FluidCurve:
    """Samples of a continuous-limit function on a scaled grid.

    1-D curves hold ``values[k]`` at ``grid[k]``.  2-D curves (node-based
    CCDFs) hold ``values[ai, bi]`` at scaled ranks ``alpha_grid[ai]``,
    ``grid[bi]``.  ``meta`` records (d, b, slot, kind, function name, ...).
    """

    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)
    alpha_grid: np.ndarray | None = None


def _check_d(d: float) -> None:
    if not d > 0:
        raise ValueError("expected degree d must be positive")


def s_inf_node(alpha, beta, d: float):
    """Limit CCDF of the node-based pair law: 1/(1 - e^(-d a) + e^(d (b-a)))."""
    _check_d(d)
    a = np.asarray(alpha, dtype=np.float64)
    b = np.asarray(beta, dtype=np.float64)
    out = 1.0 / (1.0 - np.exp(-d * a) + np.exp(d * (b - a)))
    return float(out) if out.ndim == 0 else out


def d_inf_node(alpha, beta, d: float):
    """Limit density of the node-based pair law (symmetric in its two ranks)."""
    _check_d(d)
    a = np.asarray(alpha, dtype=np.float64)
    b = np.asarray(beta, dtype=np.float64)
    gap = np.abs(b - a)
    e = np.exp(d * gap)
    out = d * e / (1.0 - np.exp(-d * np.minimum(a, b)) + e) ** 2
    return float(out) if out.ndim == 0 else out


def unmatched_prob_node(alpha, d: float):
    """Probability that a node of scaled rank alpha has no mate: S(alpha, 1).

    The CCDF evaluated at the top of the rank range is boundary-consistent
    with S(0, 1) = e^(-d); see d_inf_node for the underlying law.
    """
    return s_inf_node(alpha, 1.0, d)


def s_inf_rank(alpha, d: float):
    """Limit rank CCDF for random-acyclic/geometric preferences: 1/(d a + 1)."""
    _check_d(d)
    a = np.asarray(alpha, dtype=np.float64)
    out = 1.0 / (d * a + 1.0)
    return float(out) if out.ndim == 0 else out


def s_rank_approx(K, p: float):
    """Finite-N reading of the rank law: S_R(K) ~ 1/(p (K-1) + 1)."""
    k = np.asarray(K, dtype=np.float64)
    out = 1.0 / (p * (k - 1.0) + 1.0)
    return float(out) if out.ndim == 0 else out


def ball_volume(x, dim: int, norm: str = NORM_TAXICAB):
    """Fraction of the unit n-torus within distance x of a point.

    Max norm: min((2x)^n, 1) for any n.  Taxicab: closed forms exist for
    n = 1 and n = 3 only (for other n the ball overlaps itself around the
    torus and no simple expression applies); anything else is rejected.
    """
    xs = np.asarray(x, dtype=np.float64)
    if np.any(xs < 0):
        raise ValueError("radius must be non-negative")
    if norm == NORM_MAX:
        out = np.minimum((2.0 * xs) ** dim, 1.0)
    elif norm == NORM_TAXICAB and dim == 1:
        out = np.minimum(2.0 * xs, 1.0)
    elif norm == NORM_TAXICAB and dim == 3:
        out = np.select(
            [xs <= 0.5, xs <= 1.0, xs <= 1.5],
            [
                (4.0 / 3.0) * xs ** 3,
                (4.0 / 3.0) * xs ** 3 - 4.0 * (xs - 0.5) ** 3,
                1.0 - (4.0 / 3.0) * (1.5 - xs) ** 3,
            ],
            default=1.0,
        )
    else:
        raise ValueError(
            f"ball volume unsupported for norm={norm!r}, dim={dim}: "
            "taxicab balls are implemented for dim 1 and 3 only"
        )
    return float(out) if out.ndim == 0 else out


def torus_diameter(dim: int, norm: str = NORM_TAXICAB) -> float:
    """Largest distance on the unit torus under the given norm."""
    if norm == NORM_MAX:
        return 0.5
    if norm == NORM_TAXICAB:
        return dim / 2.0
    raise ValueError(f"unknown norm {norm!r}")


def s_distance(x, d: float, dim: int, norm: str = NORM_TAXICAB):
    """Limit CCDF of the mate distance: 1/(d B_n(x) + 1)."""
    _check_d(d)
    vol = ball_volume(x, dim, norm)
    out = 1.0 / (d * np.asarray(vol) + 1.0)
    return float(out) if out.ndim == 0 else out


# --- special functions -------------------------------------------------

_FPMIN = 1e-300
_CF_EPS = 1e-15
_CF_MAXIT = 500


def _beta_cf(x: float, a: float, b: float) -> tuple[float, bool]:
    # Lentz evaluation of the continued fraction for I_x(a, b)
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h, True
    return h, False


def _beta_series(x: float, a: float, b: float) -> float:
    # hypergeometric series: sum_n c_n with c_0 = 1, c_{n+1} = c_n x (a+b+n)/(a+1+n)
    term = 1.0
    total = 1.0
    for n in range(100_000):
        term *= x * (a + b + n) / (a + 1.0 + n)
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Continued fraction on the fast-converging side (mirrored through
    I_x(a,b) = 1 - I_{1-x}(b,a)), with a power-series fallback should the
    fraction fail to settle.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        h, ok = _beta_cf(x, a, b)
        if ok:
            return front * h / a
        return front * _beta_series(x, a, b) / a
    h, ok = _beta_cf(1.0 - x, b, a)
    if ok:
        return 1.0 - front * h / b
    return 1.0 - front * _beta_series(1.0 - x, b, a) / b


def exp_integral_e1(x: float) -> float:
    """Exponential integral E1(x) for x > 0.

    Alternating series below 1, Lentz continued fraction above.
    """
    if not x > 0:
        raise ValueError("E1 requires x > 0")
    if x <= 1.0:
        total = -np.euler_gamma - math.log(x)
        term = 1.0
        for k in range(1, 200):
            term *= -x / k
            total -= term / k
            if abs(term / k) < 1e-18 * max(abs(total), 1e-30):
                break
        return total
    b = x + 1.0
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAXIT + 1):
        a = -float(i) * float(i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            break
    return h * math.exp(-x)


def dr1_constant() -> float:
    """e * E1(1): the limit probability that a node's mate is its best neighbor."""
    global _E1_OF_1
    if _E1_OF_1 is None:
        _E1_OF_1 = exp_integral_e1(1.0)
    return math.e * _E1_OF_1


def acceptable_rank_ccdf(N: int, p: float, adjusted: bool = False) -> RankDistribution:
    """Acceptable-rank law D_r(k) = S_r(k) (1 - I_{1-p}(N-k, k)) / (k+1).

    1 - I_{1-p}(N-k, k) is the probability of having at least k neighbors
    among the N-1 others, and 1/(k+1) approximates the partner's side by
    reading the rank law at K ~ k/p; the k = 1 value is known to be off.
    With ``adjusted`` the recursion instead starts from
    D_r(1) = e E1(1) ~ 0.596 and proceeds from S_r(2).
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    s = np.ones(N)
    d = np.zeros(N - 1)
    for k in range(1, N):
        if k == 1 and adjusted:
            d[0] = dr1_constant()
        else:
            at_least_k = 1.0 - reg_inc_beta(1.0 - p, N - k, k)
            d[k - 1] = s[k - 1] * at_least_k / (k + 1.0)
        s[k] = s[k - 1] - d[k - 1]
    return RankDistribution(N, p, 1, 1, d, s)


# --- b > 1 limit systems ------------------------------------------------


def fluid_rank_bmatch(d: float, b: int, grid_size: int) -> list[FluidCurve]:
    """Rank-law limit CCDFs for slots 1..b by fixed-step classical RK4.

    Integrates S'_1 = -d S_1 S_b, S'_c = -d (S_c - S_{c-1}) S_b on [0, 1]
    with step 1/grid_size; fixed step keeps emitted curves reproducible.
    """
    _check_d(d)
    if b < 1:
        raise ValueError("b must be >= 1")
    if grid_size < 100:
        raise ValueError("grid_size must be >= 100")
    h = 1.0 / grid_size

    def rhs(y: np.ndarray) -> np.ndarray:
        prev = np.concatenate([[0.0], y[:-1]])
        return -d * (y - prev) * y[b - 1]

    ys = np.empty((grid_size + 1, b))
    y = np.ones(b)
    ys[0] = y
    for k in range(grid_size):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys[k + 1] = y
    grid = np.arange(grid_size + 1) * h
    return [
        FluidCurve(
            grid=grid.copy(),
            values=ys[:, c - 1].copy(),
            meta={"d": d, "b": b, "slot": c, "kind": "rank", "function": "S_R_fluid"},
        )
        for c in range(1, b + 1)
    ]


def fluid_node_bmatch(d: float, b: int, grid_size: int) -> list[FluidCurve]:
    """Node-law limit CCDFs S_c(alpha, beta) on a grid_size x grid_size+1 grid.

    Runs the slot-coupled mean-field recursion at grid resolution with
    p = d/grid_size, keeping the continuous diagonal extension
    D_c(i,i) = p (S_c - S_{c-1})(i,i) S_b(i,i) instead of the hard zero:
    that extension is the object whose limit the theorem describes, and it
    removes the O(d/grid) diagonal hole from the sampled CCDF.

    Returned values[ai, bi] sample S_c(alpha, beta) at alpha = ai/grid_size
    (ai = 0..grid_size-1) and beta = bi/grid_size (bi = 0..grid_size), so
    the beta = 0 border is exactly 1.
    """
    _check_d(d)
    if b < 1:
        raise ValueError("b must be >= 1")
    if grid_size < 100:
        raise ValueError("grid_size must be >= 100")
    G = grid_size
    p = d / G
    S = np.ones((b + 1, G + 2, G + 3))
    S[0] = 0.0
    for s in range(2, 2 * G + 1):
        lo = max(1, s - G)
        hi = min(G, s - 1)
        I = np.arange(lo, hi + 1)
        J = s - I
        sb = S[b, J, I]
        for c in range(1, b + 1):
            vals = p * (S[c, I, J] - S[c - 1, I, J]) * sb
            S[c, I, J + 1] = S[c, I, J] - vals
    alpha = np.arange(G) / G
    beta = np.arange(G + 1) / G
    return [
        FluidCurve(
            grid=beta.copy(),
            values=S[c, 1:G + 1, 1:G + 2].copy(),
            meta={"d": d, "b": b, "slot": c, "kind": "node", "function": "S_fluid"},
            alpha_grid=alpha.copy(),
        )
        for c in range(1, b + 1)
    ]
