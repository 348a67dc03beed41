"""Acceptance criteria 1-9, each at its stated tolerance, seed 0.

Each test records one PASS/FAIL line, printed again in the terminal summary.
Wall-clock budgets are part of the pass condition.
"""

import io
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from rwbroadcast import analytic as an
from rwbroadcast import records
from rwbroadcast.coupling import run_coupled_reference
from rwbroadcast.experiments import (ExperimentConfig, KRule, coupled_summary, default_workers,
                                     occupancy_monitor, run_coupled_trials, run_trials)
from rwbroadcast.topology import cycle, path
from rwbroadcast.walk import SeedSpec, walk_trace

SEED = 0
pytestmark = pytest.mark.slow


def jsonl_bytes(recs) -> bytes:
    buf = io.StringIO()
    records.write_jsonl(recs, buf)
    return buf.getvalue().encode("utf-8")


@pytest.fixture(scope="module")
def outputs():
    """JSON-lines bytes of earlier criteria, reused by the determinism check."""
    return {}


def test_criterion_1_oracle_equivalence(report, outputs):
    t0 = time.perf_counter()
    worst, bad = 0.0, []
    for kind, ns in (("path", range(2, 6)), ("cycle", range(3, 6))):
        for n in ns:
            g = path(n) if kind == "path" else cycle(n)
            for k in (2, 3):
                cfg = ExperimentConfig(kind, (n,), KRule("const", k), 200_000, SEED)
                res = run_trials(cfg)
                s = res.summaries[0]
                exact = an.expected_xi_oracle(g, k)
                z = abs(s.mean - float(exact)) / s.se
                worst = max(worst, z)
                if s.capped_count or z > 3:
                    bad.append(f"{kind}{n},k={k}: z={z:.2f}")
                if (kind, n, k) == ("cycle", 3, 2):
                    outputs[1] = (cfg, jsonl_bytes(res.records))
    anchors = (an.expected_xi_oracle(cycle(3), 2) == Fraction(4, 3)
               and an.expected_xi_oracle(path(2), 2) == Fraction(1, 2))
    elapsed = time.perf_counter() - t0
    ok = not bad and anchors and elapsed < 120
    report(1, ok, f"14 points x 2e5 trials, worst |mean-oracle|/se = {worst:.2f} (limit 3), "
                  f"anchors 4/3 and 1/2 {'exact' if anchors else 'WRONG'}, {elapsed:.0f}s; "
                  f"failures: {bad or 'none'}")
    assert ok


def test_criterion_2_coupling(report, outputs):
    t0 = time.perf_counter()
    n, k = 100, 10
    recs = run_coupled_trials(n, k, 10_000, SEED)
    outputs[2] = ((n, k), jsonl_bytes(recs))
    summ = coupled_summary(recs)
    traced_viol = 0
    mismatched = 0
    for t in range(100):
        res = run_coupled_reference(n, k, SeedSpec(SEED, t, 0))
        if res.comparable:
            traced_viol += res.containment_violations
        rec = recs[t]
        mismatched += (res.xi_cycle, res.xi_path) != (rec["xi_cycle"], rec["xi_path"])
    expected = 1 - (1 - 1 / n) ** k
    frac = summ["noncomparable_fraction"]
    elapsed = time.perf_counter() - t0
    ok = (summ["dominance_violations"] == 0 and summ["containment_violations"] == 0
          and traced_viol == 0 and mismatched == 0 and abs(frac - expected) <= 0.02
          and summ["capped"] == 0 and elapsed < 120)
    report(2, ok, f"{summ['comparable']} comparable of 1e4, dominance violations "
                  f"{summ['dominance_violations']}, containment violations in 100 traced "
                  f"trials {traced_viol}, non-comparable {frac:.4f} vs {expected:.4f} (+-0.02), "
                  f"xi_path <= xi_cycle also in {summ['noncomparable_dominance_holds']} of "
                  f"{summ['trials'] - summ['comparable']} non-comparable (report only), "
                  f"{elapsed:.0f}s")
    assert ok


def test_criterion_3_reversibility(report):
    t0 = time.perf_counter()
    worst_v = worst_a = 0.0
    ratio_ok = True
    for n in range(2, 65):
        for g in [path(n)] + ([cycle(n)] if n >= 3 else []):
            rep = an.check_reversibility_upto(g, 128)
            worst_v = max(worst_v, rep.max_violation)
            if g.is_cycle:
                worst_a = max(worst_a, rep.max_asymmetry)
            ratio_ok &= rep.ratio_ok
    elapsed = time.perf_counter() - t0
    ok = worst_v <= 1e-12 and worst_a <= 1e-12 and ratio_ok and elapsed < 60
    report(3, ok, f"n<=64, t<=128: max detailed-balance gap {worst_v:.1e}, max cycle asymmetry "
                  f"{worst_a:.1e} (limit 1e-12), ratio bounds {'hold' if ratio_ok else 'FAIL'}, "
                  f"{elapsed:.1f}s")
    assert ok


def test_criterion_4_z_walk_bounds(report):
    t0 = time.perf_counter()
    checked = 0
    bad = []
    for t in range(16, 1025, 16):
        for a in range(1, math.isqrt(t) + 1):
            bound = Fraction(an.z_walk_anticoncentration_bound(t, a))
            for lazy in (False, True):
                checked += 1
                if an.z_walk_abs_below(t, a, lazy) > bound or an.hitting_tail(t, a, lazy) > bound:
                    bad.append((t, a, lazy))
    refl_bad = 0
    for a in range(1, 33):
        tails = an.hitting_tails_by_absorption(1024, a)
        refl_bad += sum(tails[t] != an._interval_mass(t, -a + 1, a, False)
                        for t in range(a * a, 1025))
    elapsed = time.perf_counter() - t0
    ok = not bad and refl_bad == 0 and elapsed < 60
    report(4, ok, f"{checked} (t, a, lazy) cases with t in 16..1024 step 16: "
                  f"{len(bad)} bound violations; reflection vs killed-walk DP at t<=1024: "
                  f"{refl_bad} mismatches, {elapsed:.1f}s")
    assert ok


def test_criterion_5_large_k(report):
    t0 = time.perf_counter()
    n = 200
    k = math.ceil(50 * n * math.log(n))
    res = {}
    for kind in ("cycle", "path"):
        cfg = ExperimentConfig(kind, (n,), KRule("const", k), 50, SEED)
        res[kind] = [r["xi"] for r in run_trials(cfg).records]
    cyc = np.mean([x == n // 2 for x in res["cycle"]])
    pth = np.mean([n // 2 <= x <= n - 1 for x in res["path"]])
    elapsed = time.perf_counter() - t0
    ok = k == 52984 and cyc >= 0.9 and pth >= 0.9 and elapsed < 300
    report(5, ok, f"n=200, k={k}, 50 trials each: cycle xi=100 in {cyc:.0%}, path "
                  f"100<=xi<=199 in {pth:.0%} (need 90%), {elapsed:.0f}s")
    assert ok


def test_criterion_6_occupancy(report):
    t0 = time.perf_counter()
    n = 128
    k = math.ceil(50 * n * math.log(n))
    lower = 12 * math.log(n)
    mins = []
    for t in range(10):
        rep = occupancy_monitor(walk_trace(path(n), k, SeedSpec(SEED, t, 0), n), n, lower=lower)
        assert rep.rounds == n + 1
        mins.append(rep.min)
    elapsed = time.perf_counter() - t0
    ok = min(mins) >= lower and elapsed < 180
    report(6, ok, f"P_128, k={k}, rounds 0..128, 10 trials: per-vertex minima {mins} "
                  f"(need >= {lower:.1f}), {elapsed:.0f}s")
    assert ok


def test_criterion_7_scaling(report, outputs):
    t0 = time.perf_counter()
    cfg = ExperimentConfig("cycle", (500, 1000, 2000, 4000), KRule("power", 0.5), 20, SEED)
    res = run_trials(cfg, workers=default_workers())
    outputs[7] = (cfg, jsonl_bytes(res.records))
    meds = {s.n: s.median for s in res.summaries}
    elapsed = time.perf_counter() - t0
    ok = res.fit is not None and 1.35 <= res.fit <= 1.65 and elapsed < 900
    fit = "n/a" if res.fit is None else f"{res.fit:.4f}"
    report(7, ok, f"cycle, k=ceil(sqrt n), 20 trials: medians {meds}, fitted exponent {fit} "
                  f"(window [1.35, 1.65]), {elapsed:.0f}s")
    assert ok


def test_criterion_8_cap_sanity(report, outputs):
    t0 = time.perf_counter()
    n = 200
    capped = {}
    worst = {}
    for k in (2, 5, 20):
        cfg = ExperimentConfig("cycle", (n,), KRule("const", k), 200, SEED)
        assert cfg.cap_for(n) == 100 * n * n
        recs = run_trials(cfg).records
        capped[k] = sum(r["capped"] for r in recs)
        worst[k] = max(r["xi"] for r in recs)
        if k == 5:
            outputs[8] = (cfg, jsonl_bytes(recs))
    elapsed = time.perf_counter() - t0
    ok = sum(capped.values()) == 0 and elapsed < 300
    report(8, ok, f"C_200, 200 trials per k: capped {capped} at cap 100n^2={100 * n * n}, "
                  f"max xi {worst}, {elapsed:.0f}s")
    assert ok


def test_criterion_9_determinism(report, outputs):
    missing = [c for c in (1, 2, 7, 8) if c not in outputs]
    if missing:
        pytest.skip(f"needs output of criteria {missing} in the same session")
    same = {}
    for c in (1, 7, 8):
        cfg, blob = outputs[c]
        same[c] = jsonl_bytes(run_trials(cfg, workers=2).records) == blob
    (n, k), blob = outputs[2]
    same[2] = jsonl_bytes(run_coupled_trials(n, k, 10_000, SEED, workers=2)) == blob
    ok = all(same.values())
    report(9, ok, "JSON-lines of criteria 1 (C_3, k=2), 2, 7, 8 (k=5) rerun with 2 workers: "
                  + ", ".join(f"{c}: {'identical' if v else 'DIFFERENT'}" for c, v in sorted(same.items())))
    assert ok
