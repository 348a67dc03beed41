"""Paths and cycles on vertices 1..n."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

EXACT_STATIONARY_MAX_N = 10_000


class Kind(str, enum.Enum):
    PATH = "path"
    CYCLE = "cycle"


@dataclass(frozen=True)
class GraphTopology:
    kind: Kind
    n: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.n < 2:
            raise ValueError(f"need n >= 2, got {self.n}")
        if self.kind is Kind.CYCLE and self.n < 3:
            # C_2 would need a double edge
            raise ValueError(f"a cycle needs n >= 3, got {self.n}")

    @property
    def is_cycle(self) -> bool:
        return self.kind is Kind.CYCLE

    @property
    def num_edges(self) -> int:
        return self.n if self.is_cycle else self.n - 1

    def check_vertex(self, v: int) -> None:
        if not 1 <= v <= self.n:
            raise ValueError(f"vertex {v} outside [1, {self.n}]")

    def degree(self, v: int) -> int:
        self.check_vertex(v)
        if self.is_cycle:
            return 2
        return 1 if v in (1, self.n) else 2

    def neighbors(self, v: int) -> list[int]:
        """Adjacent vertices of ``v`` in ascending order."""
        self.check_vertex(v)
        n = self.n
        if self.is_cycle:
            return sorted({n if v == 1 else v - 1, 1 if v == n else v + 1})
        return [u for u in (v - 1, v + 1) if 1 <= u <= n]

    def is_edge(self, u: int, v: int) -> bool:
        self.check_vertex(u)
        self.check_vertex(v)
        d = abs(u - v)
        return d == 1 or (self.is_cycle and d == self.n - 1)

    def edges(self) -> list[tuple[int, int]]:
        out = [(i, i + 1) for i in range(1, self.n)]
        if self.is_cycle:
            out.append((1, self.n))
        return out

    def distance(self, u: int, v: int) -> int:
        self.check_vertex(u)
        self.check_vertex(v)
        d = abs(u - v)
        return min(d, self.n - d) if self.is_cycle else d

    def transition_matrix(self) -> np.ndarray:
        """Row-stochastic simple random walk matrix, 0-based indices."""
        n = self.n
        P = np.zeros((n, n))
        for v in range(1, n + 1):
            nb = self.neighbors(v)
            for u in nb:
                P[v - 1, u - 1] = 1.0 / len(nb)
        return P

    def __str__(self) -> str:
        return f"{self.kind.value}({self.n})"


def path(n: int) -> GraphTopology:
    return GraphTopology(Kind.PATH, n)


def cycle(n: int) -> GraphTopology:
    return GraphTopology(Kind.CYCLE, n)


def neighbors(g: GraphTopology, v: int) -> list[int]:
    return g.neighbors(v)


def graph_distance(g: GraphTopology, u: int, v: int) -> int:
    return g.distance(u, v)


def stationary_distribution(g: GraphTopology, exact: bool | None = None):
    """pi(x) = deg(x) / 2|E|.

    Exact ``Fraction`` tuple for n up to ``EXACT_STATIONARY_MAX_N`` (or when
    ``exact`` is forced), otherwise a float array.
    """
    if exact is None:
        exact = g.n <= EXACT_STATIONARY_MAX_N
    two_m = 2 * g.num_edges
    degs = [g.degree(v) for v in range(1, g.n + 1)]
    if exact:
        return tuple(Fraction(d, two_m) for d in degs)
    return np.asarray(degs, dtype=float) / two_m
