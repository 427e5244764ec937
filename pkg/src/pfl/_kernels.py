"""Numeric kernels: counter-based bit words and per-trial seed derivation.

Each kernel has a numba-compiled version and a pure-numpy version with
identical results.  ``PFL_NUMBA=0`` in the environment forces the numpy path;
otherwise numba is used when it imports.
"""
from __future__ import annotations

import importlib.util
import os

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
MASK64 = (1 << 64) - 1

_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


def _want_numba() -> bool:
    flag = os.environ.get("PFL_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "no", "off"):
        return False
    return importlib.util.find_spec("numba") is not None


USE_NUMBA = _want_numba()


# -- numpy reference path ---------------------------------------------------

def _mix64_np(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * MIX1
        z = (z ^ (z >> _S27)) * MIX2
    return z ^ (z >> _S31)


def _words_np(keys, lo):
    keys = np.asarray(keys, dtype=np.uint64)
    lo = np.asarray(lo, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = keys + (lo + np.uint64(1)) * GOLDEN
    return _mix64_np(z)


def _derive_np(key, count):
    t = np.arange(count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + (t + np.uint64(1)) * GOLDEN
    return _mix64_np(_mix64_np(z))


# -- numba path -------------------------------------------------------------

if USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _mix64_scalar(z):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    @njit(cache=True)
    def _words_nb(keys, lo):
        out = np.empty(lo.shape[0], dtype=np.uint64)
        for i in range(lo.shape[0]):
            z = keys[i] + (lo[i] + np.uint64(1)) * np.uint64(0x9E3779B97F4A7C15)
            out[i] = _mix64_scalar(z)
        return out

    @njit(cache=True)
    def _derive_nb(key, count):
        out = np.empty(count, dtype=np.uint64)
        for t in range(count):
            z = key + (np.uint64(t) + np.uint64(1)) * np.uint64(0x9E3779B97F4A7C15)
            out[t] = _mix64_scalar(_mix64_scalar(z))
        return out


def mix64(x: int) -> int:
    """Scalar splitmix64 finalizer on a Python int (used for key folding)."""
    z = x & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def words(keys, lo, use_numba: bool | None = None) -> np.ndarray:
    """64-bit pseudo-random words for (key, counter) pairs."""
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    lo = np.ascontiguousarray(lo, dtype=np.uint64)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba and USE_NUMBA:
        return _words_nb(keys, lo)
    return _words_np(keys, lo)


def derive_seeds(seed: int, count: int, use_numba: bool | None = None) -> np.ndarray:
    """Per-trial seeds: a deterministic, well-mixed function of (seed, t)."""
    key = np.uint64(mix64(seed ^ 0x5DEECE66D))
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba and USE_NUMBA:
        return _derive_nb(key, count)
    return _derive_np(key, count)
