import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from rwbroadcast import rng
from rwbroadcast.broadcast import detect_meetings, run_to_completion
from rwbroadcast.coupling import (CoupledLabels, couple_initial, coupled_trace, project_move,
                                  run_coupled, run_coupled_batch, run_coupled_reference)
from rwbroadcast.topology import cycle, path
from rwbroadcast.walk import SeedSpec, start_positions


def test_labels():
    lab = CoupledLabels(6)
    assert lab.cycle_size == 10
    assert list(lab.cycle_labels) == list(range(-4, 6))
    assert [lab.project(i) for i in (-4, 0, 5, 3)] == [4, 0, 5, 3]
    fixed = [i for i in lab.cycle_labels if i == 0 or (i > 0 and -i not in lab.cycle_labels)]
    assert fixed == [0, 5]
    assert lab.is_cycle_edge(5, -4) and lab.is_cycle_edge(-1, 0)


@pytest.mark.parametrize("a, b, expected", [(-2, -1, (2, 1)), (-1, 0, (1, 0)), (8, 9, (8, 9))])
def test_project_move(a, b, expected):
    assert project_move(10, a, b) == expected


def test_project_move_rejects_non_edge():
    with pytest.raises(ValueError):
        project_move(10, 2, 4)


def test_projected_moves_are_path_edges():
    n = 7
    lab = CoupledLabels(n)
    for a in lab.cycle_labels:
        for b in lab.cycle_labels:
            if lab.is_cycle_edge(a, b):
                pa, pb = project_move(n, a, b)
                assert path(n).is_edge(pa + 1, pb + 1)


def test_couple_initial_usual_and_unusual():
    n = 10
    cyc = np.full(2000, -3)
    avatars, unusual = couple_initial(n, cyc, SeedSpec(4))
    assert (avatars[~unusual] == 3).all()
    assert unusual.any()
    assert set(avatars[unusual]) <= {0, n - 1}


def test_avatar_start_uniform():
    n, k = 10, 10**6
    lab = CoupledLabels(n)
    s = SeedSpec(77)
    cyc = lab.cycle_label(start_positions(cycle(lab.cycle_size), k, s))
    avatars, _ = couple_initial(n, cyc, s)
    counts = np.bincount(avatars, minlength=n)
    assert chisquare(counts).pvalue > 0.001
    # endpoint mass (1/n)(1/2) + (1 - 1/n) / (2(n-1)) = 1/n
    assert abs(counts[0] / k - 1 / n) <= 3 * math.sqrt((1 / n) * (1 - 1 / n) / k)


def test_avatar_interior_step_law():
    n, k = 10, 10**6
    trace = coupled_trace(n, k, SeedSpec(5), 1)
    _, p0, _ = next(trace)
    _, p1, _ = next(trace)
    at = p0 == 4
    down, up = np.sum(p1[at] == 3), np.sum(p1[at] == 5)
    assert down + up == at.sum()
    assert chisquare([down, up]).pvalue > 0.001


def test_expected_unusual_count():
    n, k, trials = 100, 10, 10**5
    keys = np.array([rng.trial_key(31, 0, t) for t in range(trials)], np.uint64)
    res = run_coupled_batch(n, k, keys, cap=0)
    counts = np.array([r.unusual_count for r in res])
    sd = math.sqrt(k * (1 / n) * (1 - 1 / n) / trials)
    assert abs(counts.mean() - k / n) <= 3 * sd


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 12), st.integers(2, 5), st.integers(0, 10**9))
def test_cycle_meetings_imply_avatar_meetings(n, k, seed):
    lab = CoupledLabels(n)
    prev = None
    for cl, pl, unusual in coupled_trace(n, k, SeedSpec(seed), 60):
        if unusual.any():
            return
        if prev is not None:
            crel = detect_meetings(prev[0] + n - 1, cl + n - 1, cycle(lab.cycle_size))
            prel = detect_meetings(prev[1] + 1, pl + 1, path(n))
            ppairs = set(prel.pairs()) | {tuple(sorted(p)) for p in prel.swaps}
            pgroups = prel.groups
            for a, b in crel.pairs():
                same_vertex = any(a in g_ and b in g_ for g_ in pgroups)
                assert same_vertex or (min(a, b), max(a, b)) in ppairs
        prev = (cl, pl)


@pytest.mark.parametrize("closure", [False, True])
def test_kernel_matches_reference(closure):
    for n in (3, 5, 9):
        for k in (2, 4):
            for t in range(40):
                s = SeedSpec(6, t)
                assert run_coupled(n, k, s, closure=closure) == run_coupled_reference(n, k, s, closure=closure)


def test_cycle_side_is_plain_broadcast():
    for t in range(30):
        s = SeedSpec(9, t)
        assert run_coupled(8, 3, s).xi_cycle == run_to_completion(cycle(14), 3, s).xi


def test_dominance_on_comparable_trials():
    keys = np.array([rng.trial_key(12, 0, t) for t in range(2000)], np.uint64)
    res = run_coupled_batch(30, 4, keys)
    comp = [r for r in res if r.comparable]
    assert comp
    assert all(r.xi_path <= r.xi_cycle for r in comp)
    assert all(r.containment_violations == 0 for r in comp)


def test_run_coupled_guards():
    with pytest.raises(ValueError):
        run_coupled(2, 3, SeedSpec(0))
    with pytest.raises(ValueError):
        run_coupled(5, 1, SeedSpec(0))
