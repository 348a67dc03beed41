"""Counter-based random draws keyed by (trial, agent, round, purpose).

Every draw is a pure function of its key, so trials can be split across
workers in any order without changing a single bit of any trajectory.
The mixer is the SplitMix64 finalizer.
"""

from __future__ import annotations

import numba
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO53_INV = 1.0 / 9007199254740992.0

# draw purposes; occupy the low two bits of the per-round counter
STEP = 0
START = 1
UNUSUAL = 2
ENDPOINT = 3
N_PURPOSES = 4


def _mix64_impl(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _absorb_impl(h, x):
    return _mix64_impl(h ^ _mix64_impl(x + GOLDEN))


mix64 = numba.njit(cache=True)(_mix64_impl)


@numba.njit(cache=True)
def absorb(h, x):
    return mix64(h ^ mix64(x + GOLDEN))


@numba.njit(cache=True)
def to_unit(h):
    return np.float64(h >> _S11) * _TWO53_INV


@numba.njit(cache=True)
def counter(rnd, purpose):
    return np.uint64(rnd) * np.uint64(N_PURPOSES) + np.uint64(purpose)


# plain-int reference, used by tests as an independent route
def mix64_int(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def absorb_int(h: int, x: int) -> int:
    return mix64_int(h ^ mix64_int((x + 0x9E3779B97F4A7C15) & MASK64))


def trial_key(base_seed: int, point_index: int, trial_index: int) -> int:
    h = mix64_int(base_seed & MASK64)
    h = absorb_int(h, point_index)
    return absorb_int(h, trial_index)


def agent_keys(key: int, k: int) -> np.ndarray:
    """Per-agent keys for agents 0..k-1 (vectorised ``absorb``)."""
    with np.errstate(over="ignore"):
        return _absorb_impl(np.uint64(key), np.arange(k, dtype=np.uint64))


def uniforms(akeys: np.ndarray, rnd: int, purpose: int) -> np.ndarray:
    """One uniform in [0, 1) per agent for the given round and purpose."""
    c = np.uint64(rnd * N_PURPOSES + purpose)
    with np.errstate(over="ignore"):
        rh = _mix64_impl(np.array(c + GOLDEN, dtype=np.uint64))
        h = _mix64_impl(akeys ^ rh)
    return (h >> _S11).astype(np.float64) * _TWO53_INV


def uniform_int(key: int, agent: int, rnd: int, purpose: int) -> float:
    """Scalar pure-Python version of ``uniforms``."""
    ak = absorb_int(key, agent)
    h = absorb_int(ak, rnd * N_PURPOSES + purpose)
    return (h >> 11) * _TWO53_INV
