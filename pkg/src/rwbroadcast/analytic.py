"""Exact, simulation-free quantities.

Occupation laws and reversibility of the graph walk, point masses and hitting
tails of the simple and lazy walks on the integers, concentration-bound
evaluators, and an exact expected broadcasting time for tiny instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from rwbroadcast.topology import GraphTopology, stationary_distribution

ORACLE_MAX_N = 6
ORACLE_MAX_K = 3


class OracleTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class DistributionVector:
    base: int
    horizon: int
    probs: tuple | np.ndarray

    def __getitem__(self, j: int):
        return self.probs[j - 1]

    def total(self):
        return sum(self.probs)


@dataclass(frozen=True)
class ZWalkSpec:
    horizon: int
    target: int
    lazy: bool = False


@dataclass(frozen=True)
class ReversibilityReport:
    ok: bool
    max_violation: float
    max_asymmetry: float
    ratio_ok: bool


def evolve_distribution(g: GraphTopology, i: int, t: int, exact: bool = False) -> DistributionVector:
    """Law of the walk started at ``i`` after ``t`` steps."""
    g.check_vertex(i)
    if t < 0:
        raise ValueError("t must be nonnegative")
    n = g.n
    if exact:
        p = [Fraction(0)] * n
        p[i - 1] = Fraction(1)
        nbrs = [g.neighbors(v) for v in range(1, n + 1)]
        for _ in range(t):
            q = [Fraction(0)] * n
            for v in range(n):
                if p[v]:
                    share = p[v] / len(nbrs[v])
                    for u in nbrs[v]:
                        q[u - 1] += share
            p = q
        return DistributionVector(i, t, tuple(p))
    P = g.transition_matrix()
    p = np.zeros(n)
    p[i - 1] = 1.0
    for _ in range(t):
        p = p @ P
    return DistributionVector(i, t, p)


def transition_powers(g: GraphTopology, t_max: int):
    """Yield (t, P^t) for t = 0..t_max as float matrices."""
    P = g.transition_matrix()
    M = np.eye(g.n)
    yield 0, M
    for t in range(1, t_max + 1):
        M = M @ P
        yield t, M


def _reversibility_of(g: GraphTopology, Pt: np.ndarray, tol: float) -> ReversibilityReport:
    pi = np.asarray(stationary_distribution(g, exact=False))
    flow = pi[:, None] * Pt
    viol = float(np.max(np.abs(flow - flow.T)))
    asym = float(np.max(np.abs(Pt - Pt.T))) if g.is_cycle else 0.0
    # P_t(j,i)/2 <= P_t(i,j) <= 2 P_t(j,i) wherever either side is nonzero
    nz = (Pt > 0) | (Pt.T > 0)
    ratio_ok = bool(np.all((Pt[nz] <= 2 * Pt.T[nz] + tol) & (Pt.T[nz] <= 2 * Pt[nz] + tol)))
    return ReversibilityReport(viol <= tol and asym <= tol and ratio_ok, viol, asym, ratio_ok)


def check_reversibility(g: GraphTopology, t: int, tol: float = 1e-12) -> ReversibilityReport:
    """Check pi(i) P_t(i,j) = pi(j) P_t(j,i), plus P_t symmetry on cycles."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    Pt = np.linalg.matrix_power(g.transition_matrix(), t)
    return _reversibility_of(g, Pt, tol)


def check_reversibility_upto(g: GraphTopology, t_max: int, tol: float = 1e-12) -> ReversibilityReport:
    """Worst case of ``check_reversibility`` over t = 0..t_max."""
    worst = ReversibilityReport(True, 0.0, 0.0, True)
    for _, Pt in transition_powers(g, t_max):
        rep = _reversibility_of(g, Pt, tol)
        worst = ReversibilityReport(
            worst.ok and rep.ok,
            max(worst.max_violation, rep.max_violation),
            max(worst.max_asymmetry, rep.max_asymmetry),
            worst.ratio_ok and rep.ratio_ok,
        )
    return worst


# --- walks on the integers -------------------------------------------------

def _simple_count(s: int, a: int) -> int:
    # number of +-1 walks of length s from 0 to a
    if abs(a) > s or (s - a) % 2:
        return 0
    return math.comb(s, (s - a) // 2)


@lru_cache(maxsize=None)
def _mass_num(t: int, a: int, lazy: bool) -> int:
    """Numerator of P(X_t = a) over 2^t (simple) or 4^t (lazy)."""
    if abs(a) > t:
        return 0
    if not lazy:
        return _simple_count(t, a)
    # a lazy step is half the sum of two fair +-1 steps, so X_t = S_2t / 2
    return math.comb(2 * t, t - a)


def _denom_bits(t: int, lazy: bool) -> int:
    return 2 * t if lazy else t


def z_walk_point_mass(t: int, a: int, lazy: bool = False) -> Fraction:
    """P(X_t = a) for the simple (or lazy, hold 1/2) walk started at 0.

    The lazy walk at time t is a simple walk at time 2t halved, giving
    C(2t, t-a) / 4^t.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    return Fraction(_mass_num(t, a, lazy), 1 << _denom_bits(t, lazy))


def _interval_mass(t: int, lo: int, hi: int, lazy: bool) -> Fraction:
    """P(lo <= X_t <= hi)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    num = sum(_mass_num(t, x, lazy) for x in range(max(lo, -t), min(hi, t) + 1))
    return Fraction(num, 1 << _denom_bits(t, lazy))


def z_walk_point_mass_spec(spec: ZWalkSpec) -> Fraction:
    return z_walk_point_mass(spec.horizon, spec.target, spec.lazy)


def z_walk_abs_below(t: int, a: int, lazy: bool = False) -> Fraction:
    """P(|X_t| < a)."""
    return _interval_mass(t, -a + 1, a - 1, lazy)


def z_walk_anticoncentration_bound(t: int, a: int) -> float:
    if t < 1 or a < 1:
        raise ValueError("need t >= 1 and a >= 1")
    return 4 * a / math.sqrt(t)


def hitting_tail(t: int, a: int, lazy: bool = False) -> Fraction:
    """P(tau_a > t) = P(-a < X_t <= a), by reflection at the first visit to a.

    The identity needs only symmetric, skip-free steps, so it covers the lazy
    walk as well.
    """
    if a < 1 or t < 0:
        raise ValueError("need a >= 1 and t >= 0")
    return _interval_mass(t, -a + 1, a, lazy)


def hitting_tails_by_absorption(t_max: int, a: int, lazy: bool = False) -> list[Fraction]:
    """[P(tau_a > t) for t = 0..t_max], propagating the walk killed at ``a``."""
    if a < 1 or t_max < 0:
        raise ValueError("need a >= 1 and t >= 0")
    # integer path weights on offsets -t_max..a-1; weights (1,1) or (1,2,1)
    size = t_max + a
    w = np.zeros(size, dtype=object)
    w[:] = 0
    w[t_max] = 1
    base = 4 if lazy else 2
    out = [Fraction(1)]
    for t in range(1, t_max + 1):
        nw = np.zeros(size, dtype=object)
        nw[:] = 0
        nw[:-1] += w[1:]
        nw[1:] += w[:-1]
        if lazy:
            nw += 2 * w
        w = nw
        out.append(Fraction(int(w.sum()), base ** t))
    return out


def hitting_tail_by_absorption(t: int, a: int, lazy: bool = False) -> Fraction:
    """P(tau_a > t) by propagating the walk killed on reaching ``a``."""
    return hitting_tails_by_absorption(t, a, lazy)[-1]


# --- concentration bounds --------------------------------------------------

def chernoff_bound(eps: float, mu: float) -> float:
    """2 exp(-eps^2 mu / 3), valid for 0 < eps < 3/2."""
    if not 0 < eps < 1.5:
        raise ValueError(f"eps must lie in (0, 3/2), got {eps}")
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    return 2 * math.exp(-eps * eps * mu / 3)


def binomial_deviation_tail(n: int, p: Fraction | float, eps: Fraction | float) -> float:
    """Exact P(|X - np| >= eps np) for X ~ Bin(n, p)."""
    # floats go through their shortest decimal form so 0.3 means 3/10
    p = Fraction(repr(p)) if isinstance(p, float) else Fraction(p)
    eps = Fraction(repr(eps)) if isinstance(eps, float) else Fraction(eps)
    mu = n * p
    q = 1 - p
    tail = Fraction(0)
    for x in range(n + 1):
        if abs(x - mu) >= eps * mu:
            tail += math.comb(n, x) * p ** x * q ** (n - x)
    return float(tail)


def chernoff_check(n: int, p: float, eps: float) -> tuple[float, float]:
    """(exact binomial tail, Chernoff bound) for Bin(n, p)."""
    return binomial_deviation_tail(n, p, eps), chernoff_bound(float(eps), n * float(p))


def azuma_bound(b: float, c) -> float:
    """2 exp(-b^2 / (2 sum c_a^2)) for martingale increments bounded by c_a."""
    c = np.asarray(c, dtype=float)
    if b <= 0 or c.size == 0 or np.any(c <= 0):
        raise ValueError("need b > 0 and positive increment bounds")
    return 2 * math.exp(-b * b / (2 * float(np.sum(c * c))))


def max_deviation_prob(t: int, b: int) -> Fraction:
    """Exact P(max_{i<=t} |X_i| >= b) for the +-1 walk."""
    if b <= 0:
        return Fraction(1)
    alive = {0: 1}
    for _ in range(t):
        nxt: dict[int, int] = {}
        for x, w in alive.items():
            for y in (x - 1, x + 1):
                if abs(y) < b:
                    nxt[y] = nxt.get(y, 0) + w
        alive = nxt
    return 1 - Fraction(sum(alive.values()), 1 << t)


def azuma_check(t: int, b: int) -> tuple[Fraction, float]:
    """(exact maximal-deviation probability, Azuma bound) with unit increments."""
    return max_deviation_prob(t, b), azuma_bound(b, np.ones(t))


# --- exact expected broadcasting time ---------------------------------------

def _meet_closure(g: GraphTopology, prev, nxt, green: int, closure: bool) -> int:
    k = len(prev)

    def met(a, b):
        return nxt[a] == nxt[b] or (prev[a] == nxt[b] and prev[b] == nxt[a] and prev[a] != prev[b])

    if not closure:
        out = green
        for b in range(k):
            if any(green >> a & 1 and met(a, b) for a in range(k)):
                out |= 1 << b
        return out
    changed = True
    while changed:
        changed = False
        for a in range(k):
            if not green >> a & 1:
                continue
            for b in range(k):
                if not green >> b & 1 and met(a, b):
                    green |= 1 << b
                    changed = True
    return green


def oracle_state_count(g: GraphTopology, k: int) -> int:
    return g.n ** k * 2 ** (k - 1)


def expected_xi_oracle(g: GraphTopology, k: int, closure: bool = False) -> Fraction:
    """Exact E[xi] from the absorbing chain on (positions, green set)."""
    if k < 2:
        raise ValueError(f"need k >= 2 agents, got {k}")
    if g.n > ORACLE_MAX_N or k > ORACLE_MAX_K:
        raise OracleTooLarge(
            f"state space of {oracle_state_count(g, k)} states exceeds the guard "
            f"(n <= {ORACLE_MAX_N}, k <= {ORACLE_MAX_K})")
    n = g.n
    full = (1 << k) - 1
    verts = range(1, n + 1)
    nbrs = {v: g.neighbors(v) for v in verts}

    def moves(pos):
        weight = Fraction(1)
        for v in pos:
            weight /= len(nbrs[v])
        for nxt in itertools.product(*(nbrs[v] for v in pos)):
            yield nxt, weight

    start = {}
    for pos in itertools.product(verts, repeat=k):
        mask = 1
        for a in range(1, k):
            if pos[a] == pos[0]:
                mask |= 1 << a
        start[pos] = mask

    # reachable transient states, grouped by green mask
    trans: dict[tuple, list] = {}
    frontier = [(p, m) for p, m in start.items() if m != full]
    seen = set(frontier)
    while frontier:
        s = frontier.pop()
        pos, mask = s
        out = []
        for nxt, w in moves(pos):
            m2 = _meet_closure(g, pos, nxt, mask, closure)
            out.append(((nxt, m2), w))
            if m2 != full and (nxt, m2) not in seen:
                seen.add((nxt, m2))
                frontier.append((nxt, m2))
        trans[s] = out

    value: dict[tuple, Fraction] = {}
    masks = sorted({m for _, m in trans}, key=lambda m: -bin(m).count("1"))
    for mask in masks:
        block = [s for s in trans if s[1] == mask]
        idx = {s: i for i, s in enumerate(block)}
        size = len(block)
        A = [[Fraction(0)] * size + [Fraction(1)] for _ in range(size)]
        for i, s in enumerate(block):
            A[i][i] += 1
            for s2, w in trans[s]:
                if s2[1] == full:
                    continue
                if s2 in idx:
                    A[i][idx[s2]] -= w
                else:
                    A[i][size] += w * value[s2]
        for s, v in zip(block, _solve(A)):
            value[s] = v

    total = Fraction(0)
    for pos, mask in start.items():
        if mask != full:
            total += value[(pos, mask)]
    return total / n ** k


def _solve(A: list[list[Fraction]]) -> list[Fraction]:
    # Gauss-Jordan on an augmented matrix, skipping zero entries
    size = len(A)
    for col in range(size):
        piv = next(r for r in range(col, size) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        prow = A[col]
        inv = 1 / prow[col]
        nzc = [c for c in range(col, size + 1) if prow[c] != 0]
        for r in range(size):
            if r == col:
                continue
            f = A[r][col]
            if f == 0:
                continue
            f *= inv
            row = A[r]
            for c in nzc:
                row[c] -= f * prow[c]
    return [A[i][size] / A[i][i] for i in range(size)]
