"""One-qubit twirl tomography: weight and support coarse-grained diagonals.

Each realization dresses the channel with an independent single-qubit twirl
on every qubit: a uniformly random Pauli followed by one of the three
quarter-turn rotations exp(-i pi/4 sigma_p), twelve gates per qubit in
total.  The twirled channel acts like a stochastic Pauli channel whose
outcome statistics depend only on the coarse-grained diagonal chi
coefficients, so recording the measured bit string of every realization is
all the data the protocol needs.

Outcome probabilities relate to the coefficients triangularly:

* by Hamming weight:  Prob(h) = sum_{w >= h} (2^h / 3^w) C(w, h) p_w
* by support:         Prob(v) = sum_{t contains v} (2^|v| / 3^|t|) chi_col[t]

and both systems are solved by back substitution from the highest weight
down, truncated at a cutoff weight.  Measured probabilities carry
multinomial noise with standard deviation <= 1/sqrt(M); the inverse maps
amplify it by a factor growing like (3/2)^w, which the estimates report
rather than hide.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .channels import ChannelModel
from .dense import DenseBackend, LOCAL_ENUM_MAX_N, local_twirl_unitary
from .errors import CapacityError, ConfigError, DimensionMismatchError
from .records import ExperimentRecord
from .rng import substream

MAX_SUPPORT_CELLS = 4096


@dataclass(frozen=True)
class LocalTwirlConfig:
    shots: int
    cutoff: int | None = None      # max Pauli weight solved for; None = auto
    seed: int = 0
    keep_which_qubit: bool = True  # False: only weight statistics are solved

    def __post_init__(self):
        if self.shots < 1:
            raise ConfigError("shots must be positive")
        if self.cutoff is not None and self.cutoff < 0:
            raise ConfigError("cutoff must be nonnegative")

    def to_json_dict(self) -> dict:
        return {"shots": self.shots, "cutoff": self.cutoff, "seed": self.seed,
                "keep_which_qubit": self.keep_which_qubit}


class HammingStatistics:
    """Exact outcome counts of a batch of realizations.

    ``outcome_counts`` is sparse (only observed bit strings); the weight
    histogram is kept alongside.  Addition merges disjoint batches.
    """

    def __init__(self, n: int, outcome_counts: dict[tuple[int, ...], int]):
        self.n = n
        self.outcome_counts = dict(outcome_counts)
        self.weight_counts = np.zeros(n + 1, dtype=np.int64)
        for bits, c in self.outcome_counts.items():
            self.weight_counts[sum(bits)] += c
        self.total = int(self.weight_counts.sum())

    @staticmethod
    def from_records(records: list[ExperimentRecord]) -> "HammingStatistics":
        if not records:
            raise ValueError("no records")
        n = len(records[0].outcome)
        counts: dict[tuple[int, ...], int] = {}
        for r in records:
            counts[r.outcome] = counts.get(r.outcome, 0) + 1
        return HammingStatistics(n, counts)

    @staticmethod
    def from_outcomes(n: int, outcomes) -> "HammingStatistics":
        counts: dict[tuple[int, ...], int] = {}
        for bits in outcomes:
            bits = tuple(int(b) for b in bits)
            counts[bits] = counts.get(bits, 0) + 1
        return HammingStatistics(n, counts)

    def __add__(self, other: "HammingStatistics") -> "HammingStatistics":
        if self.n != other.n:
            raise DimensionMismatchError("qubit count mismatch")
        counts = dict(self.outcome_counts)
        for bits, c in other.outcome_counts.items():
            counts[bits] = counts.get(bits, 0) + c
        return HammingStatistics(self.n, counts)

    def weight_probs(self) -> np.ndarray:
        return self.weight_counts / self.total

    def support_prob(self, bits: tuple[int, ...]) -> float:
        return self.outcome_counts.get(bits, 0) / self.total


def collect_statistics(records: list[ExperimentRecord]) -> HammingStatistics:
    return HammingStatistics.from_records(records)


# ---------------------------------------------------------------------------
# sampling


def sample_c1t_realization(channel: ChannelModel, rng: np.random.Generator,
                           backend: DenseBackend | None = None) -> ExperimentRecord:
    """One realization: draw the per-qubit (Pauli, rotation) pair, run
    |0..0> -> twirl -> channel -> untwirl -> measure."""
    backend = backend or DenseBackend()
    backend.check_capacity(channel.n)
    n = channel.n
    digits = tuple((int(rng.integers(0, 4)), int(rng.integers(0, 3))) for _ in range(n))
    probs = backend.local_outcome_probs(channel, digits)
    cdf = np.cumsum(probs)
    v = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    v = min(v, channel.dim - 1)
    bits = tuple((v >> (n - 1 - j)) & 1 for j in range(n))
    return ExperimentRecord("local", digits, bits)


# ---------------------------------------------------------------------------
# the linear systems


def r_matrix(n: int) -> np.ndarray:
    """(n+1)x(n+1) map from weight coefficients to outcome-weight probs:
    R[h, w] = (2^h / 3^w) C(w, h), zero for h > w.  Columns sum to one."""
    if n < 1:
        raise ValueError("need at least one qubit")
    r = np.zeros((n + 1, n + 1))
    for w in range(n + 1):
        for h in range(w + 1):
            r[h, w] = 2.0 ** h / 3.0 ** w * comb(w, h)
    return r


def amplification_factors(cutoff: int) -> np.ndarray:
    """Error gain of the triangular inversion per weight: (3/2)^w."""
    return np.array([(3.0 / 2.0) ** w for w in range(cutoff + 1)])


@dataclass
class WeightEstimate:
    """p_w estimates with full covariance and solver diagnostics."""

    values: np.ndarray
    cov: np.ndarray
    stderr: np.ndarray
    amplification: np.ndarray
    cutoff: int
    excess_mass: float            # observed outcome mass at weights > cutoff
    residuals: np.ndarray         # q_h - (R p)_h over all weights

    def to_json_dict(self) -> dict:
        return {"values": self.values.tolist(), "cov": self.cov.tolist(),
                "stderr": self.stderr.tolist(),
                "amplification": self.amplification.tolist(),
                "cutoff": self.cutoff, "excess_mass": self.excess_mass,
                "residuals": self.residuals.tolist()}


def solve_weight_probs_exact(prob_by_weight: np.ndarray, cutoff: int) -> np.ndarray:
    """Back-substitute the truncated weight system on exact probabilities."""
    n = len(prob_by_weight) - 1
    if cutoff > n:
        raise ConfigError(f"cutoff {cutoff} exceeds qubit count {n}")
    r = r_matrix(n)
    p = np.zeros(cutoff + 1)
    for w in range(cutoff, -1, -1):
        acc = prob_by_weight[w]
        for wp in range(w + 1, cutoff + 1):
            acc -= r[w, wp] * p[wp]
        p[w] = acc / r[w, w]
    return p


def solve_pw(stats: HammingStatistics, cutoff: int) -> WeightEstimate:
    """Estimate p_w for w <= cutoff from sampled statistics.

    The multinomial covariance of the weight histogram is propagated
    through the truncated inverse; negative estimates are retained with
    their error bars (suppressing them would hide miscalibration).
    """
    n = stats.n
    if cutoff > n:
        raise ConfigError(f"cutoff {cutoff} exceeds qubit count {n}")
    q = stats.weight_probs()
    values = solve_weight_probs_exact(q, cutoff)
    r = r_matrix(n)[: cutoff + 1, : cutoff + 1]
    rinv = np.linalg.inv(r)
    cov_q = (np.diag(q) - np.outer(q, q)) / stats.total
    cov = rinv @ cov_q[: cutoff + 1, : cutoff + 1] @ rinv.T
    resid = stats.weight_probs().copy()
    rfull = r_matrix(n)
    resid -= rfull[:, : cutoff + 1] @ values
    return WeightEstimate(values=values, cov=cov,
                          stderr=np.sqrt(np.clip(np.diag(cov), 0.0, None)),
                          amplification=amplification_factors(cutoff),
                          cutoff=cutoff,
                          excess_mass=float(q[cutoff + 1:].sum()),
                          residuals=resid)


def _supports_upto(n: int, cutoff: int) -> list[tuple[int, ...]]:
    """Descending weight, lexicographic within a weight."""
    out = []
    for w in range(cutoff, -1, -1):
        for pos in itertools.combinations(range(n), w):
            out.append(tuple(1 if j in pos else 0 for j in range(n)))
    return out


@dataclass
class SupportEstimate:
    """chi_col estimates keyed by support vector, with diagnostics."""

    values: dict[tuple[int, ...], float]
    stderr: dict[tuple[int, ...], float]
    amplification: np.ndarray
    cutoff: int
    excess_mass: float
    inconsistent: bool

    def to_json_dict(self) -> dict:
        key = lambda s: "".join(map(str, s))
        return {"values": {key(s): v for s, v in self.values.items()},
                "stderr": {key(s): v for s, v in self.stderr.items()},
                "amplification": self.amplification.tolist(),
                "cutoff": self.cutoff, "excess_mass": self.excess_mass,
                "inconsistent": self.inconsistent}


def solve_chi_col_exact(n: int, prob_of_support, cutoff: int) -> dict[tuple[int, ...], float]:
    """Back-substitute the support-resolved triangular system.

    ``prob_of_support`` maps a support vector (= outcome bit string) to its
    exact probability.  Proceeds strictly by descending weight.
    """
    supports = _supports_upto(n, cutoff)
    values: dict[tuple[int, ...], float] = {}
    for s in supports:
        w = sum(s)
        acc = float(prob_of_support(s))
        for t, x in values.items():
            if all(tb >= sb for sb, tb in zip(s, t)) and t != s:
                acc -= 2.0 ** w / 3.0 ** sum(t) * x
        values[s] = acc * 3.0 ** w / 2.0 ** w
    return values


def solve_chi_col(stats: HammingStatistics, cutoff: int) -> SupportEstimate:
    """Estimate the support-resolved coefficients from sampled statistics."""
    n = stats.n
    if cutoff > n:
        raise ConfigError(f"cutoff {cutoff} exceeds qubit count {n}")
    m_cells = sum(comb(n, m) for m in range(cutoff + 1))
    if m_cells > MAX_SUPPORT_CELLS:
        raise CapacityError(
            f"support system has {m_cells} cells (cap {MAX_SUPPORT_CELLS})")
    supports = _supports_upto(n, cutoff)
    index = {s: i for i, s in enumerate(supports)}
    t_mat = np.zeros((m_cells, m_cells))
    for s, i in index.items():
        w = sum(s)
        for t, j in index.items():
            if all(tb >= sb for sb, tb in zip(s, t)):
                t_mat[i, j] = 2.0 ** w / 3.0 ** sum(t)
    q = np.array([stats.support_prob(s) for s in supports])
    values_vec = np.linalg.solve(t_mat, q)
    tinv = np.linalg.inv(t_mat)
    cov_q = (np.diag(q) - np.outer(q, q)) / stats.total
    cov = tinv @ cov_q @ tinv.T
    stderr_vec = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    excess = 1.0 - q.sum()
    values = {s: float(values_vec[i]) for s, i in index.items()}
    stderr = {s: float(stderr_vec[i]) for s, i in index.items()}
    # inconsistency: solved values negative far beyond their error bars
    inconsistent = any(v < -4.0 * stderr[s] - 1e-12 for s, v in values.items())
    return SupportEstimate(values=values, stderr=stderr,
                           amplification=amplification_factors(cutoff),
                           cutoff=cutoff, excess_mass=float(excess),
                           inconsistent=inconsistent)


def choose_cutoff(stats: HammingStatistics) -> int:
    """Smallest w with empirical outcome mass above w below 2/M."""
    for w in range(stats.n + 1):
        if stats.weight_counts[w + 1:].sum() < 2:
            return w
    return stats.n


# ---------------------------------------------------------------------------
# protocol runner


@dataclass
class LocalTwirlEstimate:
    n: int
    config: LocalTwirlConfig
    weight: WeightEstimate
    support: SupportEstimate | None
    statistics: HammingStatistics = field(repr=False, default=None)

    def to_json_dict(self) -> dict:
        return {"n": self.n, "config": self.config.to_json_dict(),
                "weight": self.weight.to_json_dict(),
                "support": None if self.support is None else self.support.to_json_dict()}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def run_local_twirl(channel: ChannelModel, config: LocalTwirlConfig,
                    backend: DenseBackend | None = None) -> LocalTwirlEstimate:
    backend = backend or DenseBackend()
    backend.check_capacity(channel.n)
    n = channel.n
    cdf_cache: dict = {}
    outcomes = []
    for i in range(config.shots):
        rng = substream(config.seed, 1 + i)
        digits = tuple((int(rng.integers(0, 4)), int(rng.integers(0, 3)))
                       for _ in range(n))
        cdf = cdf_cache.get(digits)
        if cdf is None:
            cdf = np.cumsum(backend.local_outcome_probs(channel, digits))
            cdf_cache[digits] = cdf
        v = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")),
                channel.dim - 1)
        outcomes.append(tuple((v >> (n - 1 - j)) & 1 for j in range(n)))
    stats = HammingStatistics.from_outcomes(n, outcomes)
    cutoff = config.cutoff if config.cutoff is not None else choose_cutoff(stats)
    weight = solve_pw(stats, cutoff)
    support = solve_chi_col(stats, cutoff) if config.keep_which_qubit else None
    return LocalTwirlEstimate(n=n, config=config, weight=weight,
                              support=support, statistics=stats)


# ---------------------------------------------------------------------------
# exact twirled fidelity


def c1t_fidelity(channel: ChannelModel, backend: DenseBackend | None = None,
                 atol: float = 1e-10) -> float:
    """Exact fidelity of the one-qubit-twirled channel, by enumeration.

    Computed for every computational input state; raises if the values ever
    depend on the input (they cannot: the twirled map treats all
    computational states alike).  Equals sum_s chi_col[s] / 3^|s|.
    """
    n = channel.n
    if n > LOCAL_ENUM_MAX_N:
        raise CapacityError(f"exact local twirl capped at n={LOCAL_ENUM_MAX_N}")
    d = channel.dim
    fid = np.zeros(d)
    for digits in itertools.product(itertools.product(range(4), range(3)), repeat=n):
        u = local_twirl_unitary(digits)
        for v in range(d):
            col = u[:, v]
            sigma = channel.apply(np.outer(col, col.conj()))
            fid[v] += (col.conj() @ sigma @ col).real
    fid /= 12 ** n
    if fid.max() - fid.min() > atol:
        raise AssertionError(f"twirled fidelity varies across inputs: {fid}")
    return float(fid.mean())
