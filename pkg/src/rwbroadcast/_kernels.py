"""Compiled inner loops shared by the broadcast and coupling simulators.

Vertices are 1-based. ``cyc`` selects cycle (True) or path (False) stepping.
Meeting detection uses stamped scratch arrays so nothing is cleared between
rounds: an entry is live only if its stamp equals the current stamp.
"""

from __future__ import annotations

import numba
import numpy as np

from rwbroadcast.rng import GOLDEN, START, STEP, UNUSUAL, ENDPOINT, absorb, counter, mix64, to_unit

_jit = numba.njit(cache=True)


@_jit
def next_pos(cyc, n, v, u):
    # ascending neighbour list, index floor(u * deg)
    if cyc:
        if v == 1:
            return 2 if u < 0.5 else n
        if v == n:
            return 1 if u < 0.5 else n - 1
        return v - 1 if u < 0.5 else v + 1
    if v == 1:
        return 2
    if v == n:
        return n - 1
    return v - 1 if u < 0.5 else v + 1


@_jit
def _up(cyc, n, u, v):
    # 1 when the move u -> v goes to the larger label (mod n on a cycle)
    if cyc:
        return 1 if (v - u) % n == 1 else 0
    return 1 if v == u + 1 else 0


@_jit
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@_jit
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra != rb:
        parent[ra] = rb


@_jit
def meet_propagate(cyc, n, prev, nxt, green, closure, stamp, vstamp, vrep, estamp, erep, parent, mark):
    """Colour update for one synchronous step; returns the number of new greens.

    Meetings are co-location at the end of the step and traversal of one edge
    in opposite directions. With ``closure`` every connected component of the
    meeting relation that holds a green agent turns green; without it only
    direct meetings with agents green at the start of the step count.
    """
    k = prev.shape[0]
    new = 0
    if closure:
        for a in range(k):
            parent[a] = a
        for a in range(k):
            v = nxt[a]
            if vstamp[v] == stamp:
                _union(parent, a, vrep[v])
            else:
                vstamp[v] = stamp
                vrep[v] = a
            slot = 2 * prev[a] + _up(cyc, n, prev[a], v)
            estamp[slot] = stamp
            erep[slot] = a
        for a in range(k):
            rslot = 2 * nxt[a] + 1 - _up(cyc, n, prev[a], nxt[a])
            if estamp[rslot] == stamp:
                _union(parent, a, erep[rslot])
        for a in range(k):
            mark[a] = 0
        for a in range(k):
            if green[a]:
                mark[_find(parent, a)] = 1
        for a in range(k):
            if not green[a] and mark[_find(parent, a)] == 1:
                green[a] = True
                new += 1
    else:
        for a in range(k):
            if green[a]:
                vstamp[nxt[a]] = stamp
                estamp[2 * prev[a] + _up(cyc, n, prev[a], nxt[a])] = stamp
        for a in range(k):
            if not green[a]:
                rslot = 2 * nxt[a] + 1 - _up(cyc, n, prev[a], nxt[a])
                if vstamp[nxt[a]] == stamp or estamp[rslot] == stamp:
                    mark[a] = 2
        for a in range(k):
            if mark[a] == 2:
                mark[a] = 0
                green[a] = True
                new += 1
    return new


@_jit
def _init_keys(key, akeys):
    for a in range(akeys.shape[0]):
        akeys[a] = absorb(key, np.uint64(a))


@_jit
def _draw(akey, rh):
    return to_unit(mix64(akey ^ rh))


@_jit
def _round_hash(rnd, purpose):
    return mix64(counter(rnd, purpose) + GOLDEN)


@_jit
def simulate_batch(cyc, n, k, keys, cap, closure, xi, capped, entry, record_entry,
                   block_of, block_first, record_blocks):
    """Run one broadcast trial per key.

    ``entry[t, l-1]`` receives the first round with at least ``l`` green agents.
    ``block_first[t, b]`` receives the first round a green agent sits in block
    ``b`` (``block_of`` maps vertex -> 0-based block).
    """
    pos = np.empty(k, np.int64)
    nxt = np.empty(k, np.int64)
    green = np.zeros(k, np.bool_)
    akeys = np.empty(k, np.uint64)
    vstamp = np.full(n + 2, -1, np.int64)
    vrep = np.zeros(n + 2, np.int64)
    estamp = np.full(2 * n + 4, -1, np.int64)
    erep = np.zeros(2 * n + 4, np.int64)
    parent = np.zeros(k, np.int64)
    mark = np.zeros(k, np.uint8)
    stamp = 0
    nblocks = block_first.shape[1]
    for t in range(keys.shape[0]):
        _init_keys(keys[t], akeys)
        rh = _round_hash(0, START)
        for a in range(k):
            pos[a] = 1 + np.int64(_draw(akeys[a], rh) * n)
        phase = 0
        for a in range(k):
            green[a] = pos[a] == pos[0]
            if green[a]:
                phase += 1
        if record_entry:
            for l in range(k):
                entry[t, l] = 0 if l < phase else -1
        seen = 0
        if record_blocks:
            for b in range(nblocks):
                block_first[t, b] = -1
            b0 = block_of[pos[0]]
            block_first[t, b0] = 0
            seen = 1
        r = 0
        while phase < k and r < cap:
            r += 1
            rh = _round_hash(r, STEP)
            for a in range(k):
                nxt[a] = next_pos(cyc, n, pos[a], _draw(akeys[a], rh))
            stamp += 1
            new = meet_propagate(cyc, n, pos, nxt, green, closure, stamp,
                                 vstamp, vrep, estamp, erep, parent, mark)
            pos, nxt = nxt, pos
            if new > 0:
                if record_entry:
                    for l in range(phase, phase + new):
                        entry[t, l] = r
                phase += new
            if record_blocks and seen < nblocks:
                for a in range(k):
                    if green[a]:
                        b = block_of[pos[a]]
                        if block_first[t, b] < 0:
                            block_first[t, b] = r
                            seen += 1
        xi[t] = r
        capped[t] = phase < k


@_jit
def coupled_batch(n, k, keys, cap, closure, xi_c, xi_p, capped, unusual, violations):
    """Broadcast on C_{2(n-1)} with avatars on P_n driven by the same draws.

    Cycle vertex v carries the label v-(n-1) in {-(n-2),...,n-1}; the avatar of
    a usual agent sits at path vertex |label|+1. Unusual avatars start at an
    endpoint and step on the path with the agent's own draws. ``violations``
    counts rounds where a comparable trial has a green cycle agent whose avatar
    is white.
    """
    N = 2 * (n - 1)
    cpos = np.empty(k, np.int64)
    cnxt = np.empty(k, np.int64)
    ppos = np.empty(k, np.int64)
    pnxt = np.empty(k, np.int64)
    cgreen = np.zeros(k, np.bool_)
    pgreen = np.zeros(k, np.bool_)
    odd = np.zeros(k, np.bool_)
    akeys = np.empty(k, np.uint64)
    cvs = np.full(N + 2, -1, np.int64)
    cvr = np.zeros(N + 2, np.int64)
    ces = np.full(2 * N + 4, -1, np.int64)
    cer = np.zeros(2 * N + 4, np.int64)
    pvs = np.full(n + 2, -1, np.int64)
    pvr = np.zeros(n + 2, np.int64)
    pes = np.full(2 * n + 4, -1, np.int64)
    per = np.zeros(2 * n + 4, np.int64)
    parent = np.zeros(k, np.int64)
    mark = np.zeros(k, np.uint8)
    stamp = 0
    for t in range(keys.shape[0]):
        _init_keys(keys[t], akeys)
        rs = _round_hash(0, START)
        ru = _round_hash(0, UNUSUAL)
        re = _round_hash(0, ENDPOINT)
        cnt = 0
        for a in range(k):
            cpos[a] = 1 + np.int64(_draw(akeys[a], rs) * N)
            odd[a] = _draw(akeys[a], ru) < 1.0 / n
            if odd[a]:
                cnt += 1
                ppos[a] = 1 if _draw(akeys[a], re) < 0.5 else n
            else:
                ppos[a] = abs(cpos[a] - (n - 1)) + 1
        unusual[t] = cnt
        cphase = 0
        pphase = 0
        for a in range(k):
            cgreen[a] = cpos[a] == cpos[0]
            pgreen[a] = ppos[a] == ppos[0]
            if cgreen[a]:
                cphase += 1
            if pgreen[a]:
                pphase += 1
        nviol = 0
        if cnt == 0:
            for a in range(k):
                if cgreen[a] and not pgreen[a]:
                    nviol += 1
                    break
        xc = 0 if cphase == k else -1
        xp = 0 if pphase == k else -1
        r = 0
        while (xc < 0 or xp < 0) and r < cap:
            r += 1
            rh = _round_hash(r, STEP)
            for a in range(k):
                u = _draw(akeys[a], rh)
                cnxt[a] = next_pos(True, N, cpos[a], u)
                if odd[a]:
                    pnxt[a] = next_pos(False, n, ppos[a], u)
                else:
                    pnxt[a] = abs(cnxt[a] - (n - 1)) + 1
            stamp += 1
            cphase += meet_propagate(True, N, cpos, cnxt, cgreen, closure, stamp,
                                     cvs, cvr, ces, cer, parent, mark)
            pphase += meet_propagate(False, n, ppos, pnxt, pgreen, closure, stamp,
                                     pvs, pvr, pes, per, parent, mark)
            cpos, cnxt = cnxt, cpos
            ppos, pnxt = pnxt, ppos
            if xc < 0 and cphase == k:
                xc = r
            if xp < 0 and pphase == k:
                xp = r
            if cnt == 0:
                for a in range(k):
                    if cgreen[a] and not pgreen[a]:
                        nviol += 1
                        break
        capped[t] = xc < 0 or xp < 0
        xi_c[t] = xc if xc >= 0 else cap
        xi_p[t] = xp if xp >= 0 else cap
        violations[t] = nviol
