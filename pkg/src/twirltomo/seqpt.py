"""Selective and blind estimation of diagonal chi coefficients.

Both protocols run M twirl realizations.  The selective estimator inserts a
chosen Pauli between the channel and the undo step: the survival rate s then
satisfies chi[l,l] = ((D+1) s - 1) / D, so each coefficient is measured on
its own with a binomial error bar.

The blind protocol records, for every realization, which twirl element was
drawn and which bit string came out.  Any two realizations whose frames pin
down a unique compatible intermediary Pauli "vote" for it; every Pauli that
collects at least two votes is then scored by counting the realizations
whose candidate set contains it.  Realizations are grouped by their
(frame, outcome) constraint class first, so all M(M-1)/2 pairs are analyzed
exactly at a cost quadratic in the number of distinct classes rather than
in M.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .channels import ChannelModel
from .dense import DenseBackend
from .errors import ConfigError
from .pauli import Pauli
from .records import ExperimentRecord
from .rng import substream
from .stabilizer import build_mub_family, sample_clifford_uniform

#: realizations whose estimate clears the reporting threshold by fewer than
#: this many standard errors are flagged borderline instead of being called
#: decisively above threshold (a familywise-conservative margin: with a few
#: dozen candidate labels in play, 4 sigma keeps the false-call rate per run
#: well under a percent).
DEFAULT_SIGNIFICANCE_Z = 4.0


@dataclass(frozen=True)
class SeqptConfig:
    """Realization count and sampling-precision targets.

    When ``epsilon`` is given, M must satisfy M >= 1/epsilon^2 (central
    limit); when ``delta`` is also given, M >= ln(2/delta)/(2 epsilon^2)
    (Chernoff).  Violations raise :class:`ConfigError` at construction.
    """

    shots: int
    epsilon: float | None = None
    delta: float | None = None
    variant: str = "mub"
    seed: int = 0
    pair_class_cap: int | None = None
    significance_z: float = DEFAULT_SIGNIFICANCE_Z

    def __post_init__(self):
        if self.shots < 1:
            raise ConfigError("shots must be positive")
        if self.variant not in ("mub", "clifford"):
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.delta is not None and self.epsilon is None:
            raise ConfigError("delta requires epsilon")
        if self.epsilon is not None:
            if not (0 < self.epsilon < 1):
                raise ConfigError("epsilon must be in (0, 1)")
            if self.shots < 1.0 / self.epsilon ** 2:
                raise ConfigError(
                    f"shots={self.shots} < 1/epsilon^2 = {1.0 / self.epsilon**2:.1f}")
        if self.delta is not None:
            if not (0 < self.delta < 1):
                raise ConfigError("delta must be in (0, 1)")
            need = math.log(2.0 / self.delta) / (2.0 * self.epsilon ** 2)
            if self.shots < need:
                raise ConfigError(
                    f"shots={self.shots} < ln(2/delta)/(2 epsilon^2) = {need:.1f}")

    def to_json_dict(self) -> dict:
        return {"shots": self.shots, "epsilon": self.epsilon, "delta": self.delta,
                "variant": self.variant, "seed": self.seed,
                "pair_class_cap": self.pair_class_cap,
                "significance_z": self.significance_z}


@dataclass(frozen=True)
class SelectiveEstimate:
    chi_hat: float
    stderr: float
    survival_rate: float
    shots: int


def _survival_stderr(rate: float, shots: int, dim: int) -> float:
    return (dim + 1) / dim * math.sqrt(max(rate * (1.0 - rate), 0.0) / shots)


def estimate_chi_selective(channel: ChannelModel, label, config: SeqptConfig,
                           backend: DenseBackend | None = None) -> SelectiveEstimate:
    """Monte Carlo estimate of one diagonal chi coefficient.

    Each realization prepares a random MUB state (or a random Clifford image
    of |0..0>), applies the channel, the intermediary Pauli for ``label``,
    undoes the preparation, and tests survival.
    """
    backend = backend or DenseBackend()
    backend.check_capacity(channel.n)
    p = _as_pauli(label, channel.n)
    d = channel.dim
    m_total = config.shots
    survived = 0
    if config.variant == "mub":
        fam = build_mub_family(channel.n)
        tables = [backend.mub_transition_probs(channel, b, p) for b in fam]
        for i in range(m_total):
            rng = substream(config.seed, 1 + i)
            j = int(rng.integers(0, d + 1))
            m = int(rng.integers(0, d))
            survived += rng.random() < tables[j][m, 0]
    else:
        for i in range(m_total):
            rng = substream(config.seed, 1 + i)
            c = sample_clifford_uniform(channel.n, rng)
            probs = backend.clifford_outcome_probs(channel, c, p)
            survived += rng.random() < probs[0]
    rate = survived / m_total
    chi_hat = ((d + 1) * rate - 1.0) / d
    return SelectiveEstimate(chi_hat=chi_hat,
                             stderr=_survival_stderr(rate, m_total, d),
                             survival_rate=rate, shots=m_total)


def average_fidelity(channel: ChannelModel, config: SeqptConfig,
                     backend: DenseBackend | None = None) -> tuple[float, float]:
    """Survival rate of the plain twirled channel = the average fidelity.

    Identical circuit to the selective estimator with the identity label;
    returns (fidelity, stderr)."""
    est = estimate_chi_selective(channel, Pauli.identity(channel.n), config, backend)
    d = channel.dim
    return est.survival_rate, est.stderr * d / (d + 1)


def _as_pauli(label, n: int) -> Pauli:
    if isinstance(label, Pauli):
        return label.strip_phase()
    if isinstance(label, str):
        return Pauli.from_string(label).strip_phase()
    return Pauli.from_label(n, int(label))


# ---------------------------------------------------------------------------
# blind discovery


@dataclass(frozen=True)
class LabelEstimate:
    chi_hat: float
    stderr: float
    compatible_count: int      # realizations whose candidate set contains the label
    pair_count: int            # realization pairs that voted for the label
    borderline: bool

    def to_json_dict(self) -> dict:
        return {"chi_hat": self.chi_hat, "stderr": self.stderr,
                "compatible_count": self.compatible_count,
                "pair_count": self.pair_count, "borderline": self.borderline}


@dataclass
class SeqptResult:
    n: int
    config: SeqptConfig
    estimates: dict[str, LabelEstimate]
    threshold: float
    residual_mass: float
    usable_pair_fraction: float
    total_pairs: int
    analyzed_exactly: bool = True
    records: list[ExperimentRecord] = field(default_factory=list, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "config": self.config.to_json_dict(),
            "threshold": self.threshold,
            "residual_mass": self.residual_mass,
            "usable_pair_fraction": self.usable_pair_fraction,
            "total_pairs": self.total_pairs,
            "analyzed_exactly": self.analyzed_exactly,
            "estimates": {k: v.to_json_dict() for k, v in sorted(self.estimates.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def _sample_mub_records(channel, config, backend):
    d = channel.dim
    fam = build_mub_family(channel.n)
    tables = [backend.mub_transition_probs(channel, b) for b in fam]
    cdfs = [np.cumsum(t, axis=1) for t in tables]
    records = []
    for i in range(config.shots):
        rng = substream(config.seed, 1 + i)
        j = int(rng.integers(0, d + 1))
        m = int(rng.integers(0, d))
        v = int(np.searchsorted(cdfs[j][m], rng.random(), side="right"))
        v = min(v, d - 1)
        records.append((j, m, v))
    return records


def _sample_clifford_records(channel, config, backend):
    records = []
    for i in range(config.shots):
        rng = substream(config.seed, 1 + i)
        c = sample_clifford_uniform(channel.n, rng)
        probs = backend.clifford_outcome_probs(channel, c)
        cdf = np.cumsum(probs)
        v = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        records.append((c, v))
    return records


class _ConstraintClass:
    """Canonical (frame, outcome) constraint system of one realization."""

    __slots__ = ("aug", "count")

    def __init__(self, aug: tuple[int, ...]):
        self.aug = aug  # rref rows; bit 0 = rhs, bits 1.. = functional
        self.count = 0

    def compatible(self, pauli_key: int) -> bool:
        for row in self.aug:
            rhs = row & 1
            if ((row >> 1) & pauli_key).bit_count() & 1 != rhs:
                return False
        return True


def _class_of(gen_keys, n, outcome: int) -> tuple[int, ...]:
    rows = []
    for j, gk in enumerate(gen_keys):
        f = _swap_key(gk, n)
        rhs = (outcome >> (n - 1 - j)) & 1
        rows.append((f << 1) | rhs)
    return tuple(gf2.rref(rows))


def _swap_key(key: int, n: int) -> int:
    mask = (1 << n) - 1
    return (key >> n) | ((key & mask) << n)


def _solve_class_pair(a: tuple[int, ...], b: tuple[int, ...], n: int) -> int | None:
    """Unique Pauli key satisfying both constraint classes, else None."""
    rows = [r >> 1 for r in a] + [r >> 1 for r in b]
    if gf2.rank(rows) != 2 * n:
        return None
    rhs = [r & 1 for r in a] + [r & 1 for r in b]
    sol = gf2.solve_affine(rows, rhs, 2 * n)
    if sol is None:
        return None
    particular, basis = sol
    if basis:
        return None
    return particular


def run_blind_discovery(channel: ChannelModel, config: SeqptConfig,
                        backend: DenseBackend | None = None,
                        keep_records: bool = False) -> SeqptResult:
    """Discover the large diagonal chi coefficients without choosing labels.

    All M(M-1)/2 realization pairs are analyzed through their constraint
    classes (exactly; grouping is lossless).  A label enters the report when
    at least two pairs voted for it and its estimate clears the threshold
    2/M; estimates that clear it by fewer than ``significance_z`` standard
    errors carry ``borderline=True`` rather than being dropped, leaving the
    inclusion decision to the caller.  Estimates are never clipped to [0,1].
    """
    if config.shots < 2:
        raise ConfigError("blind discovery needs at least two realizations")
    backend = backend or DenseBackend()
    backend.check_capacity(channel.n)
    n = channel.n
    d = channel.dim
    m_total = config.shots

    classes: dict[tuple[int, ...], _ConstraintClass] = {}
    records: list[ExperimentRecord] = []
    if config.variant == "mub":
        fam = build_mub_family(n)
        gen_keys = [[g.key for g in b.frame.generators] for b in fam]
        raw = _sample_mub_records(channel, config, backend)
        for j, m, v in raw:
            key = _class_of(gen_keys[j], n, v)
            cls = classes.get(key)
            if cls is None:
                classes[key] = cls = _ConstraintClass(key)
            cls.count += 1
        if keep_records:
            records = [ExperimentRecord("mub", (j, m), _bits(v, n)) for j, m, v in raw]
    else:
        raw = _sample_clifford_records(channel, config, backend)
        for c, v in raw:
            key = _class_of([p.key for p in c.z_images], n, v)
            cls = classes.get(key)
            if cls is None:
                classes[key] = cls = _ConstraintClass(key)
            cls.count += 1
        if keep_records:
            records = [ExperimentRecord("clifford", (c,), _bits(v, n)) for c, v in raw]

    class_list = list(classes.values())
    n_classes = len(class_list)
    pair_budget = n_classes * (n_classes - 1) // 2
    analyzed_exactly = True
    index_pairs = [(i, j) for i in range(n_classes) for j in range(i + 1, n_classes)]
    if config.pair_class_cap is not None and pair_budget > config.pair_class_cap:
        pick = substream(config.seed, 0).choice(pair_budget,
                                                size=config.pair_class_cap, replace=False)
        index_pairs = [index_pairs[k] for k in sorted(map(int, pick))]
        analyzed_exactly = False

    votes: dict[int, int] = {}
    usable_pairs = 0
    analyzed_cross = 0
    for i, j in index_pairs:
        ca, cb = class_list[i], class_list[j]
        analyzed_cross += ca.count * cb.count
        key = _solve_class_pair(ca.aug, cb.aug, n)
        if key is None:
            continue
        npairs = ca.count * cb.count
        usable_pairs += npairs
        votes[key] = votes.get(key, 0) + npairs

    threshold = 2.0 / m_total
    z = config.significance_z
    estimates: dict[str, LabelEstimate] = {}
    for key, pair_count in votes.items():
        if pair_count < 2:
            continue
        compatible = sum(c.count for c in class_list if c.compatible(key))
        rate = compatible / m_total
        chi_hat = ((d + 1) * rate - 1.0) / d
        if chi_hat < threshold:
            continue
        stderr = _survival_stderr(rate, m_total, d)
        mask = (1 << n) - 1
        label = str(Pauli(n, key & mask, key >> n))
        estimates[label] = LabelEstimate(
            chi_hat=chi_hat, stderr=stderr, compatible_count=compatible,
            pair_count=pair_count, borderline=chi_hat < threshold + z * stderr)

    total_pairs = m_total * (m_total - 1) // 2
    # same-class pairs are never usable, so the exact fraction is over all
    # pairs; under a class-pair cap, scale the analyzed cross-class rate by
    # the exactly-known cross-class mass.
    total_cross = (m_total * m_total
                   - sum(c.count * c.count for c in class_list)) // 2
    if analyzed_exactly or analyzed_cross == 0:
        fraction = usable_pairs / total_pairs if total_pairs else 0.0
    else:
        fraction = (usable_pairs / analyzed_cross) * (total_cross / total_pairs)
    return SeqptResult(
        n=n, config=config, estimates=estimates, threshold=threshold,
        residual_mass=1.0 - sum(e.chi_hat for e in estimates.values()),
        usable_pair_fraction=fraction,
        total_pairs=total_pairs, analyzed_exactly=analyzed_exactly,
        records=records)


def _bits(v: int, n: int) -> tuple[int, ...]:
    return tuple((v >> (n - 1 - j)) & 1 for j in range(n))


# ---------------------------------------------------------------------------
# pair-success probabilities


def success_probability(variant: str, n: int) -> float:
    """Closed-form probability that a pair of realizations is usable.

    For the MUB variant this is D/(D+1), the chance of drawing two distinct
    bases.  For the Clifford variant the conventional closed form is the
    product below; note that uniform Clifford sampling actually realizes
    :func:`frames_independent_probability`, which differs (see README).
    """
    d = float(1 << n)
    if variant == "mub":
        return d / (d + 1.0)
    if variant == "clifford":
        p = 1.0
        for j in range(n):
            w = 2.0 ** j
            p *= (d * d / w - w - d / w) / (d * d / w - w)
        return p
    raise ConfigError(f"unknown variant {variant!r}")


def frames_independent_probability(n: int) -> float:
    """Exact probability that two uniformly drawn Clifford frames share no
    nonidentity stabilizer element.

    Counting complements of a maximal isotropic subspace gives
    prod_j (D^2/2^j - D) / (D^2/2^j - 2^j); this is the usable-pair rate a
    simulation of the Clifford variant converges to.
    """
    d = float(1 << n)
    p = 1.0
    for j in range(n):
        w = 2.0 ** j
        p *= (d * d / w - d) / (d * d / w - w)
    return p


@dataclass(frozen=True)
class VariantReport:
    usable_pair_fraction: float
    closed_form: float
    exact_rate: float
    estimates: dict[str, LabelEstimate]


@dataclass(frozen=True)
class VariantComparison:
    n: int
    shots: int
    mub: VariantReport
    clifford: VariantReport

    def to_json_dict(self) -> dict:
        def rep(r: VariantReport) -> dict:
            return {"usable_pair_fraction": r.usable_pair_fraction,
                    "closed_form": r.closed_form, "exact_rate": r.exact_rate,
                    "estimates": {k: v.to_json_dict() for k, v in sorted(r.estimates.items())}}
        return {"n": self.n, "shots": self.shots,
                "mub": rep(self.mub), "clifford": rep(self.clifford)}


def compare_variants(channel: ChannelModel, config: SeqptConfig,
                     backend: DenseBackend | None = None,
                     check_sigmas: float = 3.0) -> VariantComparison:
    """Run both variants with equal shots and compare usable-pair fractions.

    Asserts each empirical fraction lies within ``check_sigmas`` binomial
    standard deviations of the rate realized by uniform sampling (D/(D+1)
    for MUB bases, the independent-frames probability for Cliffords); the
    conventional closed forms are reported alongside.
    """
    backend = backend or DenseBackend()
    reports = {}
    for variant, exact in (("mub", success_probability("mub", channel.n)),
                           ("clifford", frames_independent_probability(channel.n))):
        cfg = SeqptConfig(shots=config.shots, variant=variant, seed=config.seed,
                          pair_class_cap=config.pair_class_cap,
                          significance_z=config.significance_z)
        res = run_blind_discovery(channel, cfg, backend)
        emp = res.usable_pair_fraction
        # usability of a pair has a conditional expectation independent of
        # either endpoint (bases and frames are drawn uniformly), so the
        # all-pairs fraction is a degenerate U-statistic and the plain
        # binomial sigma over C(M,2) pairs is the right scale.
        sigma = math.sqrt(exact * (1.0 - exact) / res.total_pairs)
        if abs(emp - exact) > check_sigmas * sigma:
            raise AssertionError(
                f"{variant} usable-pair fraction {emp:.4f} is off the expected "
                f"{exact:.4f} (sigma {sigma:.2e})")
        reports[variant] = VariantReport(
            usable_pair_fraction=emp,
            closed_form=success_probability(variant, channel.n),
            exact_rate=exact, estimates=res.estimates)
    return VariantComparison(n=channel.n, shots=config.shots,
                             mub=reports["mub"], clifford=reports["clifford"])
