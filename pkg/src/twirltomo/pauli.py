"""n-qubit Pauli operators in the GF(2) symplectic encoding.

An n-qubit Pauli operator is a tensor product of single-qubit factors from
{I, sigma_x, sigma_y, sigma_z} together with a global phase in {1, i, -1, -i}.
The tensor part is encoded as two n-bit integers ``x`` and ``z``; bit
``n-1-j`` of each carries the sigma_x / sigma_z component of qubit ``j+1``.
Qubit 1 therefore occupies the most significant bit, which lines up with

* the leftmost character of the string form ("ZIXI" puts sigma_z on qubit 1),
* the most significant base-4 digit of the integer label ``l``
  (digits I, X, Y, Z -> 0, 1, 2, 3), and
* the row index of the dense matrix built by :meth:`Pauli.to_matrix`
  (computational basis ordered |q1 q2 ... qn>).

The phase is stored as ``phase_pow``, the exponent k in

    operator = i**k * (positive tensor of I/X/Y/Z factors)

so Hermitian operators have ``phase_pow`` in {0, 2}.  All tomography logic
in this package compares operators modulo phase; the phase is tracked so
that group algebra (products, Clifford conjugation) stays exact.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterator

import numpy as np

from .errors import DimensionMismatchError

_CHARS = "IXYZ"
# per-character (x, z) bits
_CHAR_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_PHASE_PREFIX = {0: "", 1: "i", 2: "-", 3: "-i"}

_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _parity(v: int) -> int:
    return v.bit_count() & 1


@dataclass(frozen=True)
class Pauli:
    """A generalized Pauli operator with tracked global phase.

    Immutable; all operations return new instances and are safe for
    unrestricted concurrent use.
    """

    n: int
    x: int
    z: int
    phase_pow: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one qubit")
        mask = (1 << self.n) - 1
        if not (0 <= self.x <= mask and 0 <= self.z <= mask):
            raise ValueError("x/z bits out of range for qubit count")
        object.__setattr__(self, "phase_pow", self.phase_pow % 4)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def identity(n: int) -> "Pauli":
        return Pauli(n, 0, 0)

    @staticmethod
    def single(n: int, qubit: int, kind: str) -> "Pauli":
        """Pauli with ``kind`` in {X, Y, Z} on 0-based ``qubit``, I elsewhere."""
        xb, zb = _CHAR_XZ[kind]
        shift = n - 1 - qubit
        return Pauli(n, xb << shift, zb << shift)

    @staticmethod
    def from_string(s: str) -> "Pauli":
        """Parse "ZIXI" style strings; optional phase prefix -, i, -i."""
        phase = 0
        body = s
        for pre, k in (("-i", 3), ("i", 1), ("-", 2)):
            if s.startswith(pre):
                phase, body = k, s[len(pre):]
                break
        if not body or any(c not in _CHARS for c in body):
            raise ValueError(f"not a Pauli string: {s!r}")
        x = z = 0
        for c in body:
            xb, zb = _CHAR_XZ[c]
            x = (x << 1) | xb
            z = (z << 1) | zb
        return Pauli(len(body), x, z, phase)

    @staticmethod
    def from_label(n: int, l: int) -> "Pauli":
        """Inverse of :attr:`label` (phase +1)."""
        if not (0 <= l < 4 ** n):
            raise ValueError("label out of range")
        x = z = 0
        for j in range(n):
            digit = (l >> (2 * (n - 1 - j))) & 3
            xb, zb = _CHAR_XZ[_CHARS[digit]]
            shift = n - 1 - j
            x |= xb << shift
            z |= zb << shift
        return Pauli(n, x, z)

    # -- structure ---------------------------------------------------------

    @property
    def label(self) -> int:
        """Integer label: base-4 digits (I,X,Y,Z)->(0..3), qubit 1 most significant."""
        l = 0
        for j in range(self.n):
            shift = self.n - 1 - j
            xb = (self.x >> shift) & 1
            zb = (self.z >> shift) & 1
            digit = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}[(xb, zb)]
            l = (l << 2) | digit
        return l

    @property
    def weight(self) -> int:
        """Number of non-identity tensor factors."""
        return (self.x | self.z).bit_count()

    @property
    def support(self) -> tuple[int, ...]:
        """Boolean vector over qubits (qubit 1 first) marking non-identity factors."""
        s = self.x | self.z
        return tuple((s >> (self.n - 1 - j)) & 1 for j in range(self.n))

    @property
    def phase(self) -> complex:
        return 1j ** self.phase_pow

    @property
    def is_hermitian(self) -> bool:
        return self.phase_pow % 2 == 0

    @property
    def key(self) -> int:
        """Symplectic vector packed as x | z << n (phase dropped)."""
        return self.x | (self.z << self.n)

    def strip_phase(self) -> "Pauli":
        return Pauli(self.n, self.x, self.z) if self.phase_pow else self

    # -- algebra -----------------------------------------------------------

    def __mul__(self, other: "Pauli") -> "Pauli":
        return multiply(self, other)

    def commutes_with(self, other: "Pauli") -> bool:
        return commutes(self, other)

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix (includes phase); for small n only."""
        m = np.ones((1, 1), dtype=complex)
        for c in self._chars():
            m = np.kron(m, _MATS[c])
        return self.phase * m

    def _chars(self) -> str:
        out = []
        for j in range(self.n):
            shift = self.n - 1 - j
            xb = (self.x >> shift) & 1
            zb = (self.z >> shift) & 1
            out.append({(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}[(xb, zb)])
        return "".join(out)

    def __str__(self) -> str:
        return _PHASE_PREFIX[self.phase_pow] + self._chars()

    def __repr__(self) -> str:
        return f"Pauli({str(self)!r})"


def weight_and_support(p: Pauli) -> tuple[int, tuple[int, ...]]:
    """Pauli weight and the boolean support vector (qubit 1 first)."""
    return p.weight, p.support


def multiply(a: Pauli, b: Pauli) -> Pauli:
    """Exact product a*b including the accumulated phase.

    Internally each operator is rewritten as i**e * X^x Z^z (per qubit,
    Y = i*XZ); commuting Z^z1 past X^x2 contributes (-1)^{|z1 & x2|}.
    """
    if a.n != b.n:
        raise DimensionMismatchError(f"{a.n} vs {b.n} qubits")
    ca = (a.x & a.z).bit_count()
    cb = (b.x & b.z).bit_count()
    x3 = a.x ^ b.x
    z3 = a.z ^ b.z
    c3 = (x3 & z3).bit_count()
    e = a.phase_pow + b.phase_pow + ca + cb + 2 * ((a.z & b.x).bit_count()) - c3
    return Pauli(a.n, x3, z3, e % 4)


def commutes(a: Pauli, b: Pauli) -> bool:
    """True iff ab = ba (GF(2) symplectic inner product vanishes)."""
    if a.n != b.n:
        raise DimensionMismatchError(f"{a.n} vs {b.n} qubits")
    return (_parity(a.x & b.z) ^ _parity(a.z & b.x)) == 0


def symplectic_product(a: Pauli, b: Pauli) -> int:
    """0 if the operators commute, 1 if they anticommute."""
    return _parity(a.x & b.z) ^ _parity(a.z & b.x)


# -- labels and enumeration -------------------------------------------------


def _support_positions(support_index: int, n: int, w: int) -> tuple[int, ...]:
    """Unrank a lexicographic combination index into 0-based qubit positions."""
    pos = []
    r = support_index
    start = 0
    for i in range(w):
        for q in range(start, n):
            block = comb(n - q - 1, w - i - 1)
            if r < block:
                pos.append(q)
                start = q + 1
                break
            r -= block
    return tuple(pos)


def _support_rank(positions: tuple[int, ...], n: int) -> int:
    w = len(positions)
    r = 0
    prev = -1
    for i, p in enumerate(positions):
        for q in range(prev + 1, p):
            r += comb(n - q - 1, w - i - 1)
        prev = p
    return r


@dataclass(frozen=True)
class PauliLabel:
    """Decomposed label of a (phase +1) Pauli operator.

    ``weight`` counts non-identity factors, ``support_index`` is the 0-based
    lexicographic rank of the support combination among the C(n, weight)
    possibilities, and ``axes`` lists the non-identity factor on each support
    qubit in order (1 = x, 2 = y, 3 = z).  There are 3**weight axis vectors
    for a given weight and support.
    """

    n: int
    weight: int
    support_index: int
    axes: tuple[int, ...]

    def __post_init__(self):
        if len(self.axes) != self.weight:
            raise ValueError("axes length must equal weight")
        if not (0 <= self.support_index < comb(self.n, self.weight)):
            raise ValueError("support index out of range")

    @property
    def support(self) -> tuple[int, ...]:
        pos = set(_support_positions(self.support_index, self.n, self.weight))
        return tuple(1 if j in pos else 0 for j in range(self.n))

    @property
    def l(self) -> int:
        return self.to_pauli().label

    def to_pauli(self) -> Pauli:
        pos = _support_positions(self.support_index, self.n, self.weight)
        x = z = 0
        for q, axis in zip(pos, self.axes):
            xb, zb = _CHAR_XZ[_CHARS[axis]]
            shift = self.n - 1 - q
            x |= xb << shift
            z |= zb << shift
        return Pauli(self.n, x, z)

    @staticmethod
    def from_pauli(p: Pauli) -> "PauliLabel":
        pos = tuple(j for j in range(p.n) if p.support[j])
        axes = []
        for q in pos:
            shift = p.n - 1 - q
            xb = (p.x >> shift) & 1
            zb = (p.z >> shift) & 1
            axes.append({(1, 0): 1, (1, 1): 2, (0, 1): 3}[(xb, zb)])
        return PauliLabel(p.n, len(pos), _support_rank(pos, p.n), tuple(axes))

    @staticmethod
    def from_l(n: int, l: int) -> "PauliLabel":
        return PauliLabel.from_pauli(Pauli.from_label(n, l))


def enumerate_paulis(n: int, max_weight: int | None = None) -> Iterator[PauliLabel]:
    """Yield labels in weight-major order: weight ascending, then support
    combinations lexicographically, then axis vectors lexicographically.

    Without a cutoff this yields all 4**n labels; with ``max_weight`` it
    yields sum_{m<=max_weight} C(n, m) * 3**m of them.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    top = n if max_weight is None else min(max_weight, n)
    for w in range(top + 1):
        for si in range(comb(n, w)):
            for axes in itertools.product((1, 2, 3), repeat=w):
                yield PauliLabel(n, w, si, axes)


def enumerate_supports(n: int, max_weight: int | None = None) -> Iterator[tuple[int, ...]]:
    """Support vectors only, weight-major then lexicographic by position."""
    top = n if max_weight is None else min(max_weight, n)
    for w in range(top + 1):
        for pos in itertools.combinations(range(n), w):
            yield tuple(1 if j in pos else 0 for j in range(n))
