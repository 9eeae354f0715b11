"""Exact small-n dense simulation and the oracles the protocols test against.

This backend evolves full state vectors / density matrices, enumerates
finite twirl families exactly, and evaluates the Haar-average identity for
second moments in closed form.  Everything is deterministic given a
Generator; enumerations iterate in a fixed canonical order so results are
reproducible bit for bit.
"""
from __future__ import annotations

import itertools
import weakref
from dataclasses import dataclass

import numpy as np

from .channels import ChannelModel
from .errors import CapacityError, DimensionMismatchError
from .pauli import Pauli
from .stabilizer import MubBasis, build_mub_family, enumerate_clifford_group

DENSE_SIM_MAX_N = 6
MUB_ENUM_MAX_N = 3
LOCAL_ENUM_MAX_N = 4
CLIFFORD_ENUM_MAX_N = 2


@dataclass
class DenseState:
    """Pure state (amplitudes) or mixed state (density matrix) on n qubits."""

    n: int
    amplitudes: np.ndarray | None = None
    density: np.ndarray | None = None

    def __post_init__(self):
        d = 1 << self.n
        if (self.amplitudes is None) == (self.density is None):
            raise ValueError("provide exactly one of amplitudes/density")
        if self.amplitudes is not None and self.amplitudes.shape != (d,):
            raise DimensionMismatchError("bad amplitude vector shape")
        if self.density is not None and self.density.shape != (d, d):
            raise DimensionMismatchError("bad density matrix shape")

    @staticmethod
    def zero(n: int) -> "DenseState":
        v = np.zeros(1 << n, dtype=complex)
        v[0] = 1.0
        return DenseState(n, amplitudes=v)

    @staticmethod
    def from_bits(bits) -> "DenseState":
        n = len(bits)
        idx = 0
        for b in bits:
            idx = (idx << 1) | int(b)
        v = np.zeros(1 << n, dtype=complex)
        v[idx] = 1.0
        return DenseState(n, amplitudes=v)

    def as_density(self) -> np.ndarray:
        if self.density is not None:
            return self.density
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def probabilities(self) -> np.ndarray:
        if self.amplitudes is not None:
            return np.abs(self.amplitudes) ** 2
        return np.clip(self.density.diagonal().real, 0.0, None)


def evolve(state: DenseState, channel: ChannelModel) -> DenseState:
    """Apply the channel; keeps the pure-state fast path for unitaries."""
    if state.n != channel.n:
        raise DimensionMismatchError("state/channel qubit mismatch")
    if state.amplitudes is not None and channel.is_unitary:
        return DenseState(state.n, amplitudes=channel.kraus[0] @ state.amplitudes)
    return DenseState(state.n, density=channel.apply(state.as_density()))


def measure_computational(state: DenseState, rng: np.random.Generator) -> tuple[int, ...]:
    """Sample a computational-basis outcome (qubit 1 first)."""
    probs = state.probabilities()
    probs = probs / probs.sum()
    idx = int(rng.choice(len(probs), p=probs))
    return tuple((idx >> (state.n - 1 - j)) & 1 for j in range(state.n))


# ---------------------------------------------------------------------------
# Haar moments


def haar_random_unitaries(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """(count, dim, dim) stack of Haar-distributed unitaries via QR with
    the standard phase correction of the R diagonal."""
    g = rng.normal(size=(count, dim, dim)) + 1j * rng.normal(size=(count, dim, dim))
    q, r = np.linalg.qr(g)
    diag = np.einsum("bii->bi", r)
    q *= (diag / np.abs(diag))[:, None, :]
    return q


def haar_moment_closed_form(a1, a2, b1, b2) -> complex:
    """Closed form of the Haar average of Tr[A1 U^dag B1 U A2 U^dag B2 U]."""
    d = a1.shape[0]
    tr = np.trace
    term1 = tr(a1 @ a2) / (d * d - 1) * (tr(b1) * tr(b2) - tr(b1 @ b2) / d)
    term2 = tr(a1) * tr(a2) / (d * d - 1) * (tr(b1 @ b2) - tr(b1) * tr(b2) / d)
    return complex(term1 + term2)


@dataclass(frozen=True)
class HaarMomentResult:
    estimate: complex
    stderr: float
    closed_form: complex
    samples: int

    @property
    def deviation_sigmas(self) -> float:
        return abs(self.estimate - self.closed_form) / self.stderr


def haar_twirl_moment(a1, a2, b1, b2, samples: int, rng: np.random.Generator,
                      chunk: int = 20000) -> HaarMomentResult:
    """Monte Carlo estimate of the fourth-moment trace average vs closed form.

    The integrand Tr[A1 U^dag B1 U A2 U^dag B2 U] is averaged over
    ``samples`` Haar unitaries; the caller compares the estimate with the
    closed form (``deviation_sigmas`` gives the distance in standard errors).
    """
    d = a1.shape[0]
    vals = np.empty(samples, dtype=complex)
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        u = haar_random_unitaries(d, m, rng)
        uh = u.conj().transpose(0, 2, 1)
        c1 = uh @ b1 @ u
        c2 = uh @ b2 @ u
        vals[done:done + m] = np.einsum("ij,bjk,kl,bli->b", a1, c1, a2, c2, optimize=True)
        done += m
    est = vals.mean()
    var = vals.real.var(ddof=1) + vals.imag.var(ddof=1)
    stderr = float(np.sqrt(var / samples))
    return HaarMomentResult(estimate=complex(est), stderr=stderr,
                            closed_form=haar_moment_closed_form(a1, a2, b1, b2),
                            samples=samples)


# ---------------------------------------------------------------------------
# exact twirl enumeration


@dataclass(frozen=True)
class TwirlSpec:
    """Which twirl family to average over."""

    kind: str  # haar_state | mub | clifford_full | local_clifford
    n: int

    @property
    def enumeration_size(self) -> int | None:
        d = 1 << self.n
        if self.kind == "mub":
            return d * (d + 1)
        if self.kind == "local_clifford":
            return 12 ** self.n
        if self.kind == "clifford_full":
            # |Sp(2n,2)| symplectic actions times 2^(2n) sign choices
            return _sp_group_order(self.n) * (1 << (2 * self.n))
        return None


def _sp_group_order(n: int) -> int:
    order = 1
    for j in range(1, n + 1):
        order *= (4 ** j - 1) * 4 ** j // 2  # 2^(2j-1) * (4^j - 1)
    return order


# single-qubit symplectic rotations exp(-i pi/4 sigma_p), p = x, y, z
_SQRT = 1 / np.sqrt(2)
_ROTS = (
    _SQRT * np.array([[1, -1j], [-1j, 1]], dtype=complex),   # about x
    _SQRT * np.array([[1, -1], [1, 1]], dtype=complex),      # about y
    _SQRT * np.array([[1 - 1j, 0], [0, 1 + 1j]], dtype=complex),  # about z
)
_PAULIS_1Q = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def local_twirl_unitary(digits: tuple[tuple[int, int], ...]) -> np.ndarray:
    """Tensor product of per-qubit S*P gates; digits[j] = (pauli, rotation)."""
    u = np.ones((1, 1), dtype=complex)
    for p, s in digits:
        u = np.kron(u, _ROTS[s] @ _PAULIS_1Q[p])
    return u


class DenseBackend:
    """Dense simulator handed to the protocol runners.

    Caches per-channel outcome distributions keyed by the twirl element so
    repeated realizations cost a table lookup.  Channels key the cache
    weakly (by object, not by id, so recycled addresses cannot collide) and
    capacity is capped by ``max_n`` (memory is O(4^n) per cached element).
    """

    def __init__(self, max_n: int = DENSE_SIM_MAX_N):
        self.max_n = max_n
        self._mub_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()
        self._local_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()

    def check_capacity(self, n: int):
        if n > self.max_n:
            raise CapacityError(f"dense backend capped at n={self.max_n}, got {n}")

    # -- MUB twirl ----------------------------------------------------------

    def mub_transition_probs(self, channel: ChannelModel, basis: MubBasis,
                             intermediary: Pauli | None = None) -> np.ndarray:
        """probs[m, v]: prepare basis state m (via V_J X^m on |0..0>), apply
        the channel (and the optional extra Pauli), undo the preparation,
        measure outcome v.  Surviving (v = 0) means returning to state m."""
        self.check_capacity(channel.n)
        per_channel = self._mub_cache.setdefault(channel, {})
        key = (basis.index,
               None if intermediary is None else (intermediary.x, intermediary.z))
        hit = per_channel.get(key)
        if hit is not None:
            return hit
        w = basis.clifford.unitary()
        d = channel.dim
        pm = None if intermediary is None else intermediary.to_matrix()
        probs = np.empty((d, d))
        idx = np.arange(d)
        for m in range(d):
            v = w[:, m]
            sigma = channel.apply(np.outer(v, v.conj()))
            if pm is not None:
                sigma = pm @ sigma @ pm.conj().T
            in_basis = np.clip(np.einsum("im,ij,jm->m", w.conj(), sigma, w).real, 0.0, None)
            probs[m] = in_basis[idx ^ m]  # the X^m undo relabels outcomes
        per_channel[key] = probs
        return probs

    # -- generic clifford twirl ----------------------------------------------

    def clifford_outcome_probs(self, channel: ChannelModel, clifford,
                               intermediary: Pauli | None = None) -> np.ndarray:
        """Outcome distribution of prepare |0..0>, C, channel, (P), C^dag."""
        self.check_capacity(channel.n)
        w = clifford.unitary()
        v = w[:, 0]
        sigma = channel.apply(np.outer(v, v.conj()))
        if intermediary is not None:
            pm = intermediary.to_matrix()
            sigma = pm @ sigma @ pm.conj().T
        return np.clip(np.einsum("im,ij,jm->m", w.conj(), sigma, w).real, 0.0, None)

    # -- one-qubit twirl ------------------------------------------------------

    def local_outcome_probs(self, channel: ChannelModel,
                            digits: tuple[tuple[int, int], ...]) -> np.ndarray:
        self.check_capacity(channel.n)
        per_channel = self._local_cache.setdefault(channel, {})
        hit = per_channel.get(digits)
        if hit is not None:
            return hit
        u = local_twirl_unitary(digits)
        sigma = channel.apply(np.outer(u[:, 0], u[:, 0].conj()))
        probs = np.clip(np.einsum("im,ij,jm->m", u.conj(), sigma, u).real, 0.0, None)
        per_channel[digits] = probs
        return probs


def exact_chi_extraction(channel: ChannelModel, l: int, lp: int) -> complex:
    """chi[l, l'] recovered from the exact average over all D(D+1) MUB states
    of <psi| L(P_l |psi><psi| P_l') |psi>, inverting (D chi + delta)/(D+1).

    Exact for trace-preserving maps; agrees with the direct Kraus-to-chi
    conversion to 1e-10 in the tests.
    """
    n = channel.n
    if n > MUB_ENUM_MAX_N:
        raise CapacityError(f"MUB enumeration capped at n={MUB_ENUM_MAX_N}")
    d = channel.dim
    pl = Pauli.from_label(n, l).to_matrix()
    plp = Pauli.from_label(n, lp).to_matrix()
    total = 0.0 + 0.0j
    for basis in build_mub_family(n):
        w = basis.clifford.unitary()
        for m in range(d):
            v = w[:, m]
            arg = np.outer(pl @ v, (plp @ v).conj())
            total += v.conj() @ channel.apply(arg) @ v
    avg = total / (d * (d + 1))
    delta = 1.0 if l == lp else 0.0
    return ((d + 1) * avg - delta) / d


def enumerate_twirl_exact(channel: ChannelModel, twirl: TwirlSpec,
                          intermediary: Pauli | None = None,
                          backend: DenseBackend | None = None) -> np.ndarray:
    """Exact outcome distribution of the twirled circuit, averaged over every
    element of a finite twirl family.

    The circuit is: prepare |0..0>, apply the twirl element, the channel,
    the optional intermediary Pauli, undo the twirl element, and measure.
    Outcomes are indexed with qubit 1 as the most significant bit.
    """
    if twirl.n != channel.n:
        raise DimensionMismatchError("twirl/channel qubit mismatch")
    n = channel.n
    d = channel.dim
    backend = backend or DenseBackend()
    if twirl.kind == "mub":
        if n > MUB_ENUM_MAX_N:
            raise CapacityError(f"MUB enumeration capped at n={MUB_ENUM_MAX_N}")
        dist = np.zeros(d)
        for basis in build_mub_family(n):
            probs = backend.mub_transition_probs(channel, basis, intermediary)
            dist += probs.sum(axis=0)
        return dist / (d * (d + 1))
    if twirl.kind == "local_clifford":
        if n > LOCAL_ENUM_MAX_N:
            raise CapacityError(f"local twirl enumeration capped at n={LOCAL_ENUM_MAX_N}")
        pm = None if intermediary is None else intermediary.to_matrix()
        dist = np.zeros(d)
        for digits in itertools.product(itertools.product(range(4), range(3)), repeat=n):
            u = local_twirl_unitary(digits)
            sigma = channel.apply(np.outer(u[:, 0], u[:, 0].conj()))
            if pm is not None:
                sigma = pm @ sigma @ pm.conj().T
            dist += np.einsum("im,ij,jm->m", u.conj(), sigma, u).real
        return dist / 12 ** n
    if twirl.kind == "clifford_full":
        if n > CLIFFORD_ENUM_MAX_N:
            raise CapacityError(f"Clifford enumeration capped at n={CLIFFORD_ENUM_MAX_N}")
        dist = np.zeros(d)
        count = 0
        for c in enumerate_clifford_group(n):
            dist += backend.clifford_outcome_probs(channel, c, intermediary)
            count += 1
        return dist / count
    raise ValueError(f"twirl kind {twirl.kind!r} is not enumerable")
