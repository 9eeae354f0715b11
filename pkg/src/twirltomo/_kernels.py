"""Bit-packed GF(2) batch kernels for the Monte Carlo hot paths.

Arrays hold uint64 words, each packing one symplectic vector (low n bits =
x part, next n bits = z part, 2n <= 32 in practice).  The numba-compiled
versions are selected by default; set the environment variable
``TWIRLTOMO_NO_NUMBA=1`` to force the pure-numpy fallbacks.  Both paths are
bit-identical because no randomness is consumed inside a kernel -- callers
draw all random words up front with numpy Generators.

``benchmarks/bench_gf2.py`` compares the two paths on representative sizes.
"""
from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("TWIRLTOMO_NO_NUMBA", "").strip().lower()
_DISABLED = _FLAG in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by TWIRLTOMO_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    njit = None
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"

_U = np.uint64
_M1 = _U(0x5555555555555555)
_M2 = _U(0x3333333333333333)
_M4 = _U(0x0F0F0F0F0F0F0F0F)
_H01 = _U(0x0101010101010101)


def popcount_u64(a: np.ndarray) -> np.ndarray:
    """Vectorized population count of a uint64 array."""
    a = a - ((a >> _U(1)) & _M1)
    a = (a & _M2) + ((a >> _U(2)) & _M2)
    a = (a + (a >> _U(4))) & _M4
    return (a * _H01) >> _U(56)


def parity_u64(a: np.ndarray) -> np.ndarray:
    return popcount_u64(a) & _U(1)


def _msb_mask(a: np.ndarray) -> np.ndarray:
    """Mask of the highest set bit per element (0 stays 0)."""
    a = a.copy()
    for s in (1, 2, 4, 8, 16, 32):
        a |= a >> _U(s)
    return a ^ (a >> _U(1))


def _pairs_independent_numpy(frames_a: np.ndarray, frames_b: np.ndarray, nbits: int) -> np.ndarray:
    """Fallback: batched rank of the stacked 2n rows, vectorized over pairs."""
    m, n = frames_a.shape
    rows = np.concatenate([frames_a, frames_b], axis=1).astype(np.uint64)
    k = 2 * n
    pivots: list[np.ndarray] = []
    for i in range(k):
        r = rows[:, i].copy()
        # insertion with full reduction; repeat until stable (bounded by #pivots)
        for _ in range(len(pivots) + 1):
            changed = np.zeros(m, dtype=bool)
            for p in pivots:
                hit = (r & _msb_mask(p)) != 0
                if hit.any():
                    r = np.where(hit, r ^ p, r)
                    changed |= hit
            if not changed.any():
                break
        # clear the new pivot bit from existing pivots (keeps single-pass valid)
        mr = _msb_mask(r)
        for idx, p in enumerate(pivots):
            hit = (p & mr) != 0
            if hit.any():
                pivots[idx] = np.where(hit, p ^ r, p)
        pivots.append(r)
    nonzero = np.zeros(m, dtype=np.int64)
    for p in pivots:
        nonzero += (p != 0)
    return (nonzero == k).astype(np.uint8)


def _pairs_independent_scalar(frames_a, frames_b, nbits):  # pragma: no cover - jit body
    m, n = frames_a.shape
    out = np.empty(m, dtype=np.uint8)
    piv = np.empty(2 * n, dtype=np.uint64)
    for i in range(m):
        cnt = 0
        for src in range(2 * n):
            v = frames_a[i, src] if src < n else frames_b[i, src - n]
            reduced = True
            while reduced and v != 0:
                reduced = False
                for j in range(cnt):
                    p = piv[j]
                    # msb of p
                    t = p
                    t |= t >> np.uint64(1)
                    t |= t >> np.uint64(2)
                    t |= t >> np.uint64(4)
                    t |= t >> np.uint64(8)
                    t |= t >> np.uint64(16)
                    t |= t >> np.uint64(32)
                    mask = t ^ (t >> np.uint64(1))
                    if v & mask:
                        v ^= p
                        reduced = True
            if v != 0:
                piv[cnt] = v
                cnt += 1
        out[i] = 1 if cnt == 2 * n else 0
    return out


def _membership_counts_numpy(patterns: np.ndarray, targets: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Sum counts over keys whose pattern matches, one total per target row."""
    eq = patterns[None, :, :] == targets[:, None, :]
    return (eq.all(axis=2) * counts[None, :]).sum(axis=1)


def _membership_counts_scalar(patterns, targets, counts):  # pragma: no cover - jit body
    nt = targets.shape[0]
    nk = patterns.shape[0]
    w = patterns.shape[1]
    out = np.zeros(nt, dtype=np.int64)
    for t in range(nt):
        acc = 0
        for k in range(nk):
            ok = True
            for c in range(w):
                if patterns[k, c] != targets[t, c]:
                    ok = False
                    break
            if ok:
                acc += counts[k]
        out[t] = acc
    return out


if HAVE_NUMBA:
    _pairs_independent_jit = njit(cache=True)(_pairs_independent_scalar)
    _membership_counts_jit = njit(cache=True)(_membership_counts_scalar)

    def pairs_independent(frames_a, frames_b, nbits):
        return _pairs_independent_jit(
            np.ascontiguousarray(frames_a, dtype=np.uint64),
            np.ascontiguousarray(frames_b, dtype=np.uint64),
            nbits,
        )

    def membership_counts(patterns, targets, counts):
        return _membership_counts_jit(
            np.ascontiguousarray(patterns, dtype=np.uint64),
            np.ascontiguousarray(targets, dtype=np.uint64),
            np.ascontiguousarray(counts, dtype=np.int64),
        )

else:

    def pairs_independent(frames_a, frames_b, nbits):
        return _pairs_independent_numpy(
            np.asarray(frames_a, dtype=np.uint64),
            np.asarray(frames_b, dtype=np.uint64),
            nbits,
        )

    def membership_counts(patterns, targets, counts):
        return _membership_counts_numpy(
            np.asarray(patterns, dtype=np.uint64),
            np.asarray(targets, dtype=np.uint64),
            np.asarray(counts, dtype=np.int64),
        )
