"""The broadcasting process: green/white agents, meetings, phases and xi.

Two routes are provided. ``initialize``/``run_round``/``run_reference`` are a
direct, readable rendering of the process built on ``detect_meetings`` and
``propagate``; ``run_to_completion``/``run_batch`` use the compiled kernel.
Both consume the same counter-based draws and so produce identical
trajectories for equal seeds.

Agents are indexed 0..k-1; agent 0 carries the message initially.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from rwbroadcast import _kernels
from rwbroadcast.topology import GraphTopology
from rwbroadcast.walk import SeedSpec, start_positions, step_all

INITIAL_GREEN = 0


def default_cap(n: int) -> int:
    """Round cap of 100 n^2, well above the n^2 * omega envelope at desk scale."""
    return 100 * n * n


@dataclass(frozen=True)
class ProcessState:
    round: int
    positions: np.ndarray
    green: frozenset[int]

    @property
    def k(self) -> int:
        return len(self.positions)

    @property
    def phase(self) -> int:
        return len(self.green)

    @property
    def done(self) -> bool:
        return self.phase == self.k


@dataclass(frozen=True)
class MeetingRelation:
    groups: tuple[frozenset[int], ...]
    swaps: frozenset[frozenset[int]]

    def pairs(self) -> Iterable[tuple[int, int]]:
        """Edges of the meeting graph (star per co-location group, plus swaps)."""
        for grp in self.groups:
            members = sorted(grp)
            for b in members[1:]:
                yield members[0], b
        for pair in self.swaps:
            a, b = sorted(pair)
            yield a, b


@dataclass
class TrialResult:
    xi: int
    phase_entry: list[int | None]
    capped: bool
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.capped and self.phase_entry and self.phase_entry[-1] != self.xi:
            raise ValueError("xi must equal the entry round of the final phase")


def detect_meetings(prev: Sequence[int], nxt: Sequence[int],
                    g: GraphTopology | None = None) -> MeetingRelation:
    """Co-location groups after the step, and pairs that crossed one edge.

    Without ``g`` two vertices count as adjacent only when their labels differ
    by one, so pass the graph to recognise the wrap-around edge of a cycle.
    """
    if len(prev) != len(nxt):
        raise ValueError(f"length mismatch: {len(prev)} vs {len(nxt)}")
    at: dict[int, set[int]] = defaultdict(set)
    for a, v in enumerate(nxt):
        at[int(v)].add(a)
    groups = tuple(frozenset(s) for _, s in sorted(at.items()))

    moves: dict[tuple[int, int], list[int]] = defaultdict(list)
    for a, (u, v) in enumerate(zip(prev, nxt)):
        moves[int(u), int(v)].append(a)
    swaps = set()
    for (u, v), movers in moves.items():
        if u >= v or (v, u) not in moves:
            continue
        adjacent = g.is_edge(u, v) if g is not None else v - u == 1
        if not adjacent:
            continue
        for a in movers:
            for b in moves[v, u]:
                swaps.add(frozenset((a, b)))
    return MeetingRelation(groups, frozenset(swaps))


def propagate(green: Iterable[int], rel: MeetingRelation, closure: bool = False) -> frozenset[int]:
    """New green set after one round of meetings.

    With ``closure`` the message crosses every chain of meetings in the round;
    otherwise only agents that met a start-of-round green agent turn green.
    """
    green = frozenset(green)
    if not green:
        raise ValueError("green set must be nonempty")
    adj: dict[int, set[int]] = defaultdict(set)
    for a, b in _all_pairs(rel):
        adj[a].add(b)
        adj[b].add(a)
    if not closure:
        return green | {b for a in green for b in adj[a]}
    out = set(green)
    stack = list(green)
    while stack:
        a = stack.pop()
        for b in adj[a]:
            if b not in out:
                out.add(b)
                stack.append(b)
    return frozenset(out)


def _all_pairs(rel: MeetingRelation):
    # every pair inside a group; the no-closure rule needs direct contacts
    for grp in rel.groups:
        members = sorted(grp)
        for i, a in enumerate(members):
            for b in members[i + 1:]:
                yield a, b
    for pair in rel.swaps:
        yield tuple(pair)


def initialize(g: GraphTopology, k: int, seed: SeedSpec,
               positions: Sequence[int] | None = None,
               akeys: np.ndarray | None = None) -> ProcessState:
    if k < 2:
        raise ValueError(f"need k >= 2 agents, got {k}")
    if positions is None:
        pos = start_positions(g, k, seed, akeys)
    else:
        pos = np.asarray(positions, dtype=np.int64)
        if len(pos) != k:
            raise ValueError("positions must have length k")
        for v in pos:
            g.check_vertex(int(v))
    green = frozenset(a for a in range(k) if pos[a] == pos[INITIAL_GREEN])
    return ProcessState(0, pos, green)


def run_round(g: GraphTopology, state: ProcessState, seed: SeedSpec,
              closure: bool = False, akeys: np.ndarray | None = None
              ) -> tuple[ProcessState, MeetingRelation]:
    nxt = step_all(g, state.positions, seed, state.round + 1, akeys)
    rel = detect_meetings(state.positions, nxt, g)
    green = state.green if state.done else propagate(state.green, rel, closure)
    return ProcessState(state.round + 1, nxt, green), rel


def run_reference(g: GraphTopology, k: int, seed: SeedSpec, cap: int | None = None,
                  closure: bool = False,
                  on_round: Callable[[ProcessState, MeetingRelation, frozenset[int]], None] | None = None,
                  positions: Sequence[int] | None = None,
                  akeys: np.ndarray | None = None) -> TrialResult:
    """Pure-Python run of one trial; ``on_round`` sees every state after round 0.

    ``akeys`` overrides the per-agent substreams (agent ``a`` draws from
    ``akeys[a]``).
    """
    cap = default_cap(g.n) if cap is None else cap
    if akeys is None:
        akeys = seed.agent_keys(k)
    state = initialize(g, k, seed, positions, akeys)
    entry: list[int | None] = [0 if l < state.phase else None for l in range(k)]
    while not state.done and state.round < cap:
        before = state.phase
        state, rel = run_round(g, state, seed, closure, akeys)
        for l in range(before, state.phase):
            entry[l] = state.round
        if on_round is not None:
            on_round(state, rel, state.green)
    return TrialResult(state.round, entry, not state.done)


def run_batch(g: GraphTopology, k: int, keys: np.ndarray, cap: int | None = None,
              closure: bool = False, record_entry: bool = True,
              block_of: np.ndarray | None = None, nblocks: int = 0):
    """Compiled runs, one per trial key.

    Returns ``(xi, capped, entry, block_first)``; ``entry`` is ``None`` unless
    requested and ``block_first`` is ``None`` unless ``block_of`` is given.
    """
    if k < 2:
        raise ValueError(f"need k >= 2 agents, got {k}")
    cap = default_cap(g.n) if cap is None else cap
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    keys = np.asarray(keys, dtype=np.uint64)
    T = len(keys)
    xi = np.zeros(T, np.int64)
    capped = np.zeros(T, np.bool_)
    entry = np.zeros((T, k) if record_entry else (1, 1), np.int64)
    blocks = block_of is not None
    if blocks:
        bof = np.asarray(block_of, dtype=np.int64)
        bfirst = np.zeros((T, nblocks), np.int64)
    else:
        bof = np.zeros(g.n + 1, np.int64)
        bfirst = np.zeros((1, 1), np.int64)
    _kernels.simulate_batch(g.is_cycle, g.n, k, keys, cap, closure, xi, capped,
                            entry, record_entry, bof, bfirst, blocks)
    return xi, capped, (entry if record_entry else None), (bfirst if blocks else None)


def entry_list(row: np.ndarray) -> list[int | None]:
    return [int(v) if v >= 0 else None for v in row]


def run_to_completion(g: GraphTopology, k: int, seed: SeedSpec, cap: int | None = None,
                      closure: bool = False) -> TrialResult:
    xi, capped, entry, _ = run_batch(g, k, np.array([seed.key], np.uint64), cap, closure)
    return TrialResult(int(xi[0]), entry_list(entry[0]), bool(capped[0]))
