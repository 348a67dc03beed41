"""Coupling of the process on C_{2(n-1)} with an avatar process on P_n.

Labels follow the coupling's own convention: path vertices are 0..n-1 and
cycle vertices are -(n-2)..n-1, with i and -i projecting to path vertex |i|.
Internally the simulators use 1-based vertices; ``cycle_vertex``/``cycle_label``
and ``path_vertex``/``path_label`` convert at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from rwbroadcast import _kernels, rng
from rwbroadcast.broadcast import default_cap, detect_meetings, propagate
from rwbroadcast.topology import GraphTopology, cycle, path
from rwbroadcast.walk import SeedSpec, start_positions, step_positions


@dataclass(frozen=True)
class CoupledLabels:
    n: int

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ValueError(f"coupling needs n >= 3, got {self.n}")

    @property
    def cycle_size(self) -> int:
        return 2 * (self.n - 1)

    @property
    def path_labels(self) -> range:
        return range(0, self.n)

    @property
    def cycle_labels(self) -> range:
        return range(-(self.n - 2), self.n)

    def cycle_vertex(self, label: int) -> int:
        if label not in self.cycle_labels:
            raise ValueError(f"{label} is not a cycle label for n={self.n}")
        return label + self.n - 1

    def cycle_label(self, vertex):
        return vertex - (self.n - 1)

    def path_vertex(self, label: int) -> int:
        return label + 1

    def path_label(self, vertex):
        return vertex - 1

    def project(self, label: int) -> int:
        if label not in self.cycle_labels:
            raise ValueError(f"{label} is not a cycle label for n={self.n}")
        return abs(label)

    def is_cycle_edge(self, a: int, b: int) -> bool:
        return cycle(self.cycle_size).is_edge(self.cycle_vertex(a), self.cycle_vertex(b))


@dataclass(frozen=True)
class CoupledTrial:
    xi_cycle: int
    xi_path: int
    unusual_count: int
    capped: bool = False
    containment_violations: int = 0

    @property
    def comparable(self) -> bool:
        return self.unusual_count == 0

    def to_record(self) -> dict:
        return {
            "xi_cycle": self.xi_cycle,
            "xi_path": self.xi_path,
            "unusual_count": self.unusual_count,
            "comparable": self.comparable,
            "capped": self.capped,
            "containment_violations": self.containment_violations,
        }


def project_move(n: int, a: int, b: int) -> tuple[int, int]:
    """Image on P_n (0-based) of the cycle move a -> b."""
    labels = CoupledLabels(n)
    if not labels.is_cycle_edge(a, b):
        raise ValueError(f"({a}, {b}) is not an edge of C_{labels.cycle_size}")
    return abs(a), abs(b)


def couple_initial(n: int, cycle_labels, seed: SeedSpec) -> tuple[np.ndarray, np.ndarray]:
    """Avatar start labels on P_n and the unusual flags, one per agent."""
    labels = CoupledLabels(n)
    cyc = np.asarray(cycle_labels, dtype=np.int64)
    for c in cyc:
        labels.project(int(c))
    akeys = seed.agent_keys(len(cyc))
    unusual = rng.uniforms(akeys, 0, rng.UNUSUAL) < 1.0 / n
    side = rng.uniforms(akeys, 0, rng.ENDPOINT) < 0.5
    avatars = np.where(unusual, np.where(side, 0, n - 1), np.abs(cyc))
    return avatars.astype(np.int64), unusual


def coupled_trace(n: int, k: int, seed: SeedSpec, rounds: int) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield (cycle labels, avatar labels, unusual flags) for rounds 0..rounds."""
    labels = CoupledLabels(n)
    C = cycle(labels.cycle_size)
    P = path(n)
    akeys = seed.agent_keys(k)
    cpos = start_positions(C, k, seed, akeys)
    avatars, unusual = couple_initial(n, labels.cycle_label(cpos), seed)
    ppos = labels.path_vertex(avatars)
    yield labels.cycle_label(cpos), labels.path_label(ppos), unusual
    for r in range(1, rounds + 1):
        u = rng.uniforms(akeys, r, rng.STEP)
        cpos = step_positions(C, cpos, u)
        ppos = np.where(unusual, step_positions(P, ppos, u), np.abs(labels.cycle_label(cpos)) + 1)
        yield labels.cycle_label(cpos), labels.path_label(ppos), unusual


def run_coupled_reference(n: int, k: int, seed: SeedSpec, cap: int | None = None,
                          closure: bool = False, check_rounds: bool = True) -> CoupledTrial:
    """Pure-Python coupled run on top of ``coupled_trace``."""
    if k < 2:
        raise ValueError(f"need k >= 2 agents, got {k}")
    labels = CoupledLabels(n)
    cap = default_cap(labels.cycle_size) if cap is None else cap
    C = cycle(labels.cycle_size)
    P = path(n)
    trace = coupled_trace(n, k, seed, cap)
    cl, pl, unusual = next(trace)
    cgreen = frozenset(a for a in range(k) if cl[a] == cl[0])
    pgreen = frozenset(a for a in range(k) if pl[a] == pl[0])
    comparable = not unusual.any()
    viol = int(comparable and not cgreen <= pgreen)
    xc = 0 if len(cgreen) == k else None
    xp = 0 if len(pgreen) == k else None
    r = 0
    while (xc is None or xp is None) and r < cap:
        r += 1
        ncl, npl, _ = next(trace)
        cgreen = propagate(cgreen, detect_meetings(cl + n - 1,
                                                    ncl + n - 1, C), closure)
        pgreen = propagate(pgreen, detect_meetings(pl + 1, npl + 1, P), closure)
        cl, pl = ncl, npl
        if xc is None and len(cgreen) == k:
            xc = r
        if xp is None and len(pgreen) == k:
            xp = r
        if check_rounds and comparable and not cgreen <= pgreen:
            viol += 1
    capped = xc is None or xp is None
    return CoupledTrial(cap if xc is None else xc, cap if xp is None else xp,
                        int(unusual.sum()), capped, viol)


def run_coupled_batch(n: int, k: int, keys: np.ndarray, cap: int | None = None,
                      closure: bool = False) -> list[CoupledTrial]:
    if k < 2:
        raise ValueError(f"need k >= 2 agents, got {k}")
    labels = CoupledLabels(n)
    cap = default_cap(labels.cycle_size) if cap is None else cap
    keys = np.asarray(keys, dtype=np.uint64)
    T = len(keys)
    xc = np.zeros(T, np.int64)
    xp = np.zeros(T, np.int64)
    capped = np.zeros(T, np.bool_)
    unusual = np.zeros(T, np.int64)
    viol = np.zeros(T, np.int64)
    _kernels.coupled_batch(n, k, keys, cap, closure, xc, xp, capped, unusual, viol)
    return [CoupledTrial(int(xc[t]), int(xp[t]), int(unusual[t]), bool(capped[t]), int(viol[t]))
            for t in range(T)]


def run_coupled(n: int, k: int, seed: SeedSpec, cap: int | None = None,
                closure: bool = False) -> CoupledTrial:
    return run_coupled_batch(n, k, np.array([seed.key], np.uint64), cap, closure)[0]
