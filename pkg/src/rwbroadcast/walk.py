"""Synchronous simple random walk stepping for all agents."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from rwbroadcast import rng
from rwbroadcast.topology import GraphTopology


@dataclass(frozen=True)
class SeedSpec:
    """Identifies the random substreams of one trial.

    Draws are keyed by (trial key, agent, round, purpose), where the trial
    key is derived from ``base_seed``, ``point_index`` and ``trial_index``.
    """

    base_seed: int
    trial_index: int = 0
    point_index: int = 0

    @property
    def key(self) -> int:
        return rng.trial_key(self.base_seed, self.point_index, self.trial_index)

    def agent_keys(self, k: int) -> np.ndarray:
        return rng.agent_keys(self.key, k)


@dataclass
class AgentState:
    id: int
    position: int


def step_agent(g: GraphTopology, pos: int, u: float) -> int:
    """Move from ``pos`` to the neighbour picked by the uniform ``u``."""
    nb = g.neighbors(pos)
    return nb[int(u * len(nb))]


def _low_high(g: GraphTopology, pos: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = g.n
    if g.is_cycle:
        low = np.where(pos == 1, 2, np.where(pos == n, 1, pos - 1))
        high = np.where(pos == 1, n, np.where(pos == n, n - 1, pos + 1))
    else:
        low = np.where(pos == 1, 2, pos - 1)
        high = np.where(pos == n, n - 1, pos + 1)
    return low, high


def step_positions(g: GraphTopology, positions: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorised ``step_agent``: ascending neighbour list indexed by floor(u*deg)."""
    positions = np.asarray(positions, dtype=np.int64)
    if positions.size and (positions.min() < 1 or positions.max() > g.n):
        raise ValueError("position outside the vertex set")
    low, high = _low_high(g, positions)
    return np.where(u < 0.5, low, high).astype(np.int64)


def step_all(g: GraphTopology, positions, seed: SeedSpec, rnd: int,
             akeys: np.ndarray | None = None) -> np.ndarray:
    """Step every agent once; ``rnd`` is the round being entered (>= 1)."""
    positions = np.asarray(positions, dtype=np.int64)
    if positions.size == 0:
        return positions.copy()
    if akeys is None:
        akeys = seed.agent_keys(positions.size)
    u = rng.uniforms(akeys, rnd, rng.STEP)
    return step_positions(g, positions, u)


def start_positions(g: GraphTopology, k: int, seed: SeedSpec,
                    akeys: np.ndarray | None = None) -> np.ndarray:
    """iid uniform starting vertices for agents 0..k-1."""
    if akeys is None:
        akeys = seed.agent_keys(k)
    u = rng.uniforms(akeys, 0, rng.START)
    return (1 + np.floor(u * g.n)).astype(np.int64)


def walk_trace(g: GraphTopology, k: int, seed: SeedSpec, rounds: int) -> Iterator[np.ndarray]:
    """Positions at rounds 0..rounds; the same trajectories the broadcast sees."""
    akeys = seed.agent_keys(k)
    pos = start_positions(g, k, seed, akeys)
    yield pos
    for r in range(1, rounds + 1):
        pos = step_all(g, pos, seed, r, akeys)
        yield pos
