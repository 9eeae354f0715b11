"""GF(2) linear algebra on bit-packed integer rows.

Rows are plain Python ints; bit i is coordinate i.  These helpers back the
stabilizer machinery (rank checks, constraint solving, canonical forms).
They are exact and allocation-light; batched hot paths live in
:mod:`twirltomo._kernels`.
"""
from __future__ import annotations


def _reduce_row(v: int, pivots: dict[int, int]) -> int:
    """Reduce v against a pivot table {msb_position: row}."""
    while v:
        b = v.bit_length() - 1
        if b not in pivots:
            return v
        v ^= pivots[b]
    return 0


def rank(rows) -> int:
    pivots: dict[int, int] = {}
    for v in rows:
        v = _reduce_row(v, pivots)
        if v:
            pivots[v.bit_length() - 1] = v
    return len(pivots)


def _eliminate(v: int, pivots: dict[int, int]) -> int:
    """Clear every pivot column from v (pivots kept fully reduced)."""
    for pb in pivots:
        if (v >> pb) & 1:
            v ^= pivots[pb]
    return v


def _insert(v: int, pivots: dict[int, int]):
    """Insert a fully-reduced nonzero row, preserving full reduction."""
    b = v.bit_length() - 1
    for pb in list(pivots):
        if (pivots[pb] >> b) & 1:
            pivots[pb] ^= v
    pivots[b] = v


def rref(rows) -> list[int]:
    """Fully reduced row echelon form, rows sorted by pivot descending.

    Zero rows are dropped, so the result is a canonical representative of
    the row space (two row sets span the same space iff rref is equal).
    """
    pivots: dict[int, int] = {}
    for v in rows:
        v = _eliminate(v, pivots)
        if v:
            _insert(v, pivots)
    return [pivots[b] for b in sorted(pivots, reverse=True)]


def solve_affine(rows, rhs, width: int):
    """Solve <row_i, v> = rhs_i over GF(2) for v of ``width`` bits.

    Returns ``(particular, nullspace_basis)`` or ``None`` when the system is
    inconsistent.  ``particular`` has all free coordinates set to zero, and
    the basis vectors each set exactly one free coordinate, so the result is
    deterministic for a given row order.
    """
    # augmented rows: coefficient bits shifted left, rhs in bit 0
    aug = [(r << 1) | (b & 1) for r, b in zip(rows, rhs)]
    pivots: dict[int, int] = {}
    for v in aug:
        v = _eliminate(v, pivots)
        if v == 1:
            return None  # 0 = 1
        if v:
            _insert(v, pivots)
    pivot_cols = {b - 1 for b in pivots}  # coefficient coordinates with pivots
    free_cols = [c for c in range(width) if c not in pivot_cols]
    particular = 0
    for b, row in pivots.items():
        if row & 1:
            particular |= 1 << (b - 1)
    basis = []
    for c in free_cols:
        vec = 1 << c
        for b, row in pivots.items():
            if (row >> (c + 1)) & 1:
                vec |= 1 << (b - 1)
        basis.append(vec)
    return particular, basis


def combine(basis, coeff: int) -> int:
    """XOR together the basis vectors selected by the bits of ``coeff``."""
    v = 0
    i = 0
    while coeff:
        if coeff & 1:
            v ^= basis[i]
        coeff >>= 1
        i += 1
    return v


def in_span(v: int, rows) -> bool:
    pivots: dict[int, int] = {}
    for r in rows:
        r = _reduce_row(r, pivots)
        if r:
            pivots[r.bit_length() - 1] = r
    return _reduce_row(v, pivots) == 0
