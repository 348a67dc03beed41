"""Sweeps over (n, k), summary statistics and regime diagnostics."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from rwbroadcast import rng
from rwbroadcast.broadcast import default_cap, entry_list, run_batch
from rwbroadcast.coupling import CoupledLabels, run_coupled_batch
from rwbroadcast.records import SCHEMA_VERSION
from rwbroadcast.topology import GraphTopology, Kind
from rwbroadcast.walk import SeedSpec, walk_trace

DIAGNOSTICS = ("occupancy", "leaders", "trace")
QUANTILES = {"q05": 0.05, "q25": 0.25, "median": 0.5, "q75": 0.75, "q95": 0.95}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class KRule:
    kind: str  # const | power | nlogn
    value: float

    @classmethod
    def parse(cls, text: str) -> "KRule":
        kind, sep, val = text.partition(":")
        if not sep or kind not in ("const", "power", "nlogn"):
            raise ConfigError(f"bad k rule {text!r}; use const:c, power:x or nlogn:c")
        try:
            return cls(kind, float(val))
        except ValueError:
            raise ConfigError(f"bad k rule value in {text!r}") from None

    def k_for(self, n: int) -> int:
        if self.kind == "const":
            return int(self.value)
        if self.kind == "power":
            return math.ceil(n ** self.value - 1e-9)
        return math.ceil(self.value * n * math.log(n))

    def __str__(self) -> str:
        return f"{self.kind}:{self.value:g}"


@dataclass(frozen=True)
class ExperimentConfig:
    graph: Kind
    ns: tuple[int, ...]
    k_rule: KRule
    trials: int
    base_seed: int = 0
    cap: int | None = None
    closure: bool = False
    diagnostics: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "graph", Kind(self.graph))
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        object.__setattr__(self, "diagnostics", frozenset(self.diagnostics))
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.cap is not None and self.cap < 1:
            raise ConfigError("cap must be >= 1")
        bad = self.diagnostics - set(DIAGNOSTICS)
        if bad:
            raise ConfigError(f"unknown diagnostics {sorted(bad)}")
        for n in self.ns:
            if self.k_rule.k_for(n) < 2:
                raise ConfigError(f"k rule {self.k_rule} gives k < 2 at n={n}")
            try:
                GraphTopology(self.graph, n)
            except ValueError as e:
                raise ConfigError(str(e)) from None

    def points(self) -> list[tuple[int, int]]:
        return [(n, self.k_rule.k_for(n)) for n in self.ns]

    def cap_for(self, n: int) -> int:
        return default_cap(n) if self.cap is None else self.cap


@dataclass
class SummaryStats:
    graph: str
    n: int
    k: int
    trials: int
    mean: float | None
    median: float | None
    q05: float | None
    q25: float | None
    q75: float | None
    q95: float | None
    se: float | None
    capped_count: int

    def as_row(self) -> dict:
        row = {"schema": SCHEMA_VERSION}
        row.update(self.__dict__)
        return row


def summarize(graph: str, n: int, k: int, xi: Sequence[int], capped: Sequence[bool]) -> SummaryStats:
    """Order statistics of xi with capped trials treated as right-censored.

    Capped trials count as +inf, so a quantile that lands in the censored mass
    is withheld (``None``); mean and standard error are withheld whenever any
    trial is censored.
    """
    x = np.asarray(xi, dtype=float)
    c = np.asarray(capped, dtype=bool)
    ncap = int(c.sum())
    vals = np.where(c, np.inf, x)
    qs = {}
    for name, q in QUANTILES.items():
        with np.errstate(invalid="ignore"):
            v = float(np.quantile(vals, q))
        qs[name] = v if math.isfinite(v) else None
    if ncap or len(x) == 0:
        mean = se = None
    else:
        mean = float(x.mean())
        se = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
    return SummaryStats(graph, n, k, len(x), mean, qs["median"], qs["q05"], qs["q25"],
                        qs["q75"], qs["q95"], se, ncap)


# --- block partition and diagnostics ---------------------------------------

@dataclass(frozen=True)
class BlockPartition:
    n: int
    b: int
    bounds: tuple[tuple[int, int], ...]  # inclusive 1-based vertex ranges

    def sizes(self) -> list[int]:
        return [hi - lo + 1 for lo, hi in self.bounds]

    def block_of(self) -> np.ndarray:
        """Array indexed by vertex (1..n) holding the 0-based block index."""
        out = np.zeros(self.n + 1, np.int64)
        for i, (lo, hi) in enumerate(self.bounds):
            out[lo:hi + 1] = i
        return out


def block_count(n: int, k: int) -> int:
    return math.floor(k / (500 * math.log(n)))


def block_partition(n: int, k: int) -> BlockPartition:
    b = block_count(n, k)
    if b < 1:
        raise ConfigError(
            f"floor(k / (500 ln n)) = 0 at n={n}, k={k}: blocks need k >> ln n "
            f"(k >= {math.ceil(500 * math.log(n))})")
    return partition_into(n, b)


def partition_into(n: int, b: int) -> BlockPartition:
    if not 1 <= b <= n:
        raise ConfigError(f"cannot split {n} vertices into {b} blocks")
    base, extra = divmod(n, b)
    bounds = []
    lo = 1
    for i in range(b):
        size = base + (1 if i < extra else 0)
        bounds.append((lo, lo + size - 1))
        lo += size
    return BlockPartition(n, b, tuple(bounds))


@dataclass
class OccupancyReport:
    min: int
    max: int
    rounds: int
    first_violation: tuple[int, int] | None = None  # (round, 1-based cell)

    def as_dict(self) -> dict:
        return {"min": self.min, "max": self.max, "rounds": self.rounds,
                "first_violation": list(self.first_violation) if self.first_violation else None}


def occupancy_monitor(trace: Iterable[np.ndarray], n: int, blocks: BlockPartition | None = None,
                      lower: float | None = None, upper: float | None = None) -> OccupancyReport:
    """Min/max number of agents per vertex (or per block) over the traced rounds."""
    cell_of = blocks.block_of() if blocks is not None else np.arange(n + 1) - 1
    ncells = blocks.b if blocks is not None else n
    lo, hi = None, None
    first = None
    rounds = 0
    for r, pos in enumerate(trace):
        counts = np.bincount(cell_of[np.asarray(pos)], minlength=ncells)
        cmin, cmax = int(counts.min()), int(counts.max())
        lo = cmin if lo is None else min(lo, cmin)
        hi = cmax if hi is None else max(hi, cmax)
        if first is None:
            bad = np.zeros(ncells, bool)
            if lower is not None:
                bad |= counts < lower
            if upper is not None:
                bad |= counts > upper
            if bad.any():
                first = (r, int(np.argmax(bad)) + 1)
        rounds += 1
    if rounds == 0:
        raise ValueError("empty trace")
    return OccupancyReport(lo, hi, rounds, first)


@dataclass
class LeaderDiagnostics:
    initial_block: int
    direction: int  # -1 toward block 1, +1 toward block b
    entry_times: list[tuple[int, int | None]]  # (block label, t_i)
    threshold: float | None = None

    @property
    def gaps(self) -> list[int]:
        ts = [t for _, t in self.entry_times if t is not None]
        return [b - a for a, b in zip(ts, ts[1:])]

    def fraction_at_least_threshold(self) -> float | None:
        g = self.gaps
        if self.threshold is None or not g:
            return None
        return sum(x >= self.threshold for x in g) / len(g)

    def as_dict(self) -> dict:
        return {
            "initial_block": self.initial_block,
            "direction": self.direction,
            "entry_times": [t for _, t in self.entry_times],
            "gaps": self.gaps,
            "threshold": self.threshold,
            "fraction_gaps_at_least_threshold": self.fraction_at_least_threshold(),
        }


def gap_threshold(n: int, k: int) -> float:
    """n^2 / (384 k^2 ln k)."""
    return n * n / (384 * k * k * math.log(k))


def block_entry_times(positions: Iterable[np.ndarray], greens: Iterable[np.ndarray],
                      blocks: BlockPartition) -> list[int | None]:
    """First round a green agent occupies each block, from a full trace.

    ``greens`` holds, per round, either a boolean mask or a set of agent ids.
    """
    bof = blocks.block_of()
    first: list[int | None] = [None] * blocks.b
    for r, (pos, green) in enumerate(zip(positions, greens)):
        pos = np.asarray(pos)
        if isinstance(green, (set, frozenset)):
            green = np.isin(np.arange(len(pos)), list(green))
        for blk in np.unique(bof[pos[np.asarray(green, bool)]]):
            if first[blk] is None:
                first[blk] = r
    return first


def leader_blocks(n: int, k: int) -> tuple[BlockPartition, bool]:
    """Blocks for the leading-agent report.

    Uses block_partition when b >= 1. Otherwise (k below 500 ln n) falls back
    to floor(k / ln n) blocks, clamped to [2, n // 2], and flags the fallback.
    """
    if block_count(n, k) >= 1:
        return block_partition(n, k), False
    b = min(max(2, math.floor(k / math.log(n))), max(1, n // 2))
    return partition_into(n, b), True


def leading_agent_diagnostics(block_first: Sequence[int | None], blocks: BlockPartition,
                              threshold: float | None = None) -> LeaderDiagnostics:
    """Entry times t_i of the green front into successive blocks.

    Starts at the block of the initial green agent (the one entered at round 0)
    and walks toward the farther end of the graph, block by block. Gaps are
    nonnegative on the path; on a cycle the front may wrap around first.
    """
    firsts = [None if (t is None or t < 0) else int(t) for t in block_first]
    starts = [i for i, t in enumerate(firsts) if t == 0]
    if len(starts) != 1:
        raise ValueError("exactly one block must be entered at round 0")
    i0 = starts[0] + 1
    b = blocks.b
    direction = -1 if i0 - 1 >= b - i0 else 1
    labels = range(i0, 0, -1) if direction < 0 else range(i0, b + 1)
    return LeaderDiagnostics(i0, direction, [(i, firsts[i - 1]) for i in labels], threshold)


# --- regimes and exponent fits ---------------------------------------------

@dataclass
class RegimeReport:
    n: int
    k: int
    regime: str  # small | c | d | e
    parts: tuple[str, ...]
    omega: float
    lower: float | None
    upper: float | None
    predicted_exponent: float
    envelope: str

    def as_dict(self) -> dict:
        return dict(self.__dict__, parts=list(self.parts))


def _safe(f):
    try:
        v = f()
    except (ValueError, ZeroDivisionError):
        return None
    return v if math.isfinite(v) and v > 0 else None


def theorem_regime(n: int, k: int) -> RegimeReport:
    """Classify (n, k) into the five ranges of k and evaluate the bound envelope.

    omega is fixed at ln ln n. The omega-dependent ranges below omega ln n are
    reported together as the small-k band. Envelopes carry no hidden
    constants, so they are bands, not predictions.
    """
    if n < 2 or k < 2:
        raise ConfigError("need n >= 2 and k >= 2")
    ln = math.log(n)
    omega = math.log(ln) if n > 2 else float("nan")
    x = min(1.0, math.log(k) / ln)
    pred = 2.0 - x
    if k >= 50 * n * ln:
        return RegimeReport(n, k, "e", ("e",), omega, float(n // 2), float(n - 1), pred,
                            "Theta(n): floor(n/2) <= xi <= n-1")
    if omega > 0 and k <= omega * ln:
        parts = ("a",) if k <= omega else ("b",)
        if k <= omega:
            lower = _safe(lambda: n * n / (omega ** 3 * math.log(omega)))
        else:
            lower = _safe(lambda: n * n / (omega * k * k * math.log(k)))
        return RegimeReport(n, k, "small", ("a", "b"), omega, lower,
                            _safe(lambda: n * n * omega), pred,
                            f"small-k band (nearest part {parts[0]}): xi <= n^2 omega")
    upper = n * n * ln / k
    if k <= n / ln ** 2:
        return RegimeReport(n, k, "c", ("c",), omega, n * n / (k * math.log(k) * ln), upper, pred,
                            "Omega(n^2/(k ln k ln n)) = xi = O(n^2 ln n / k)")
    return RegimeReport(n, k, "d", ("d",), omega, float(n), upper, pred,
                        "Omega(n) = xi = O(n^2 ln n / k)")


def fit_scaling_exponent(points: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log(value) against log(n)."""
    if len(points) < 3:
        raise ValueError("need at least 3 points")
    arr = np.asarray(points, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("all n and values must be positive")
    slope, _ = np.polyfit(np.log(arr[:, 0]), np.log(arr[:, 1]), 1)
    return float(slope)


# --- trial execution --------------------------------------------------------

@dataclass
class SweepResult:
    records: list[dict]
    summaries: list[SummaryStats]
    fit: float | None = None
    extras: dict = field(default_factory=dict)


def _trial_keys(base_seed: int, point: int, lo: int, hi: int) -> np.ndarray:
    return np.array([rng.trial_key(base_seed, point, t) for t in range(lo, hi)], dtype=np.uint64)


def _run_chunk(task: tuple) -> list[dict]:
    kind, n, k, base_seed, point, lo, hi, cap, closure, diags = task
    g = GraphTopology(kind, n)
    keys = _trial_keys(base_seed, point, lo, hi)
    blocks, fallback = None, False
    if "leaders" in diags:
        blocks, fallback = leader_blocks(n, k)
    xi, capped, entry, bfirst = run_batch(
        g, k, keys, cap, closure, record_entry=True,
        block_of=blocks.block_of() if blocks else None, nblocks=blocks.b if blocks else 0)
    out = []
    for j, t in enumerate(range(lo, hi)):
        rec = {
            "schema": SCHEMA_VERSION, "graph": g.kind.value, "n": n, "k": k,
            "seed": base_seed, "point": point, "trial": t,
            "xi": int(xi[j]), "capped": bool(capped[j]),
            "phase_entry": entry_list(entry[j]),
        }
        diag = {}
        if "occupancy" in diags:
            seed = SeedSpec(base_seed, t, point)
            rep = occupancy_monitor(walk_trace(g, k, seed, n), n, lower=12 * math.log(n))
            diag["occupancy"] = rep.as_dict()
        if "leaders" in diags:
            ld = leading_agent_diagnostics(bfirst[j], blocks, gap_threshold(n, k))
            diag["leaders"] = dict(ld.as_dict(), blocks=blocks.b, fallback_blocks=fallback)
        if diag:
            rec["diagnostics"] = diag
        out.append(rec)
    return out


def _chunks(trials: int, workers: int, max_chunk: int = 20000) -> list[tuple[int, int]]:
    size = max(1, min(max_chunk, math.ceil(trials / max(1, 4 * workers))))
    return [(lo, min(trials, lo + size)) for lo in range(0, trials, size)]


def _map(fn, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def run_trials(config: ExperimentConfig, workers: int = 1) -> SweepResult:
    """Run every (n, k) point; output order is (point, trial) for any worker count."""
    tasks = []
    for p, (n, k) in enumerate(config.points()):
        for lo, hi in _chunks(config.trials, workers):
            tasks.append((config.graph.value, n, k, config.base_seed, p, lo, hi,
                          config.cap_for(n), config.closure,
                          tuple(sorted(config.diagnostics - {"trace"}))))
    records = [rec for chunk in _map(_run_chunk, tasks, workers) for rec in chunk]
    summaries = []
    for p, (n, k) in enumerate(config.points()):
        pts = [r for r in records if r["point"] == p]
        summaries.append(summarize(config.graph.value, n, k,
                                   [r["xi"] for r in pts], [r["capped"] for r in pts]))
    fit = None
    meds = [(s.n, s.median) for s in summaries]
    if len(meds) >= 3 and all(m is not None and m > 0 for _, m in meds):
        fit = fit_scaling_exponent(meds)
    return SweepResult(records, summaries, fit)


def _run_coupled_chunk(task: tuple) -> list[dict]:
    n, k, base_seed, lo, hi, cap, closure = task
    keys = _trial_keys(base_seed, 0, lo, hi)
    out = []
    for t, res in zip(range(lo, hi), run_coupled_batch(n, k, keys, cap, closure)):
        rec = {"schema": SCHEMA_VERSION, "n": n, "k": k, "seed": base_seed, "trial": t}
        rec.update(res.to_record())
        out.append(rec)
    return out


def run_coupled_trials(n: int, k: int, trials: int, base_seed: int = 0, cap: int | None = None,
                       closure: bool = False, workers: int = 1) -> list[dict]:
    if k < 2:
        raise ConfigError("need k >= 2")
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    try:
        labels = CoupledLabels(n)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    cap = default_cap(labels.cycle_size) if cap is None else cap
    tasks = [(n, k, base_seed, lo, hi, cap, closure) for lo, hi in _chunks(trials, workers)]
    return [rec for chunk in _map(_run_coupled_chunk, tasks, workers) for rec in chunk]


def coupled_summary(records: Sequence[dict]) -> dict:
    comparable = [r for r in records if r["comparable"]]
    n, k = (records[0]["n"], records[0]["k"]) if records else (None, None)
    return {
        "schema": SCHEMA_VERSION,
        "n": n,
        "k": k,
        "trials": len(records),
        "comparable": len(comparable),
        "noncomparable_fraction": 1 - len(comparable) / len(records) if records else None,
        "expected_noncomparable_fraction": 1 - (1 - 1 / n) ** k if records else None,
        "dominance_violations": sum(r["xi_path"] > r["xi_cycle"] for r in comparable),
        # report-only: no bound is claimed once an unusual agent exists
        "noncomparable_dominance_holds": sum(r["xi_path"] <= r["xi_cycle"] for r in records
                                             if not r["comparable"] and not r["capped"]),
        "containment_violations": sum(r.get("containment_violations", 0) for r in comparable),
        "capped": sum(r["capped"] for r in records),
    }


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)
