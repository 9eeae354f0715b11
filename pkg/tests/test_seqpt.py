import numpy as np
import pytest

from conftest import cnot_channel, mixed_z1_channel
from twirltomo.channels import ChannelModel, depolarizing_kraus, gate_unitary
from twirltomo.errors import ConfigError
from twirltomo.seqpt import (SeqptConfig, average_fidelity, compare_variants,
                             estimate_chi_selective, frames_independent_probability,
                             run_blind_discovery, success_probability)

def test_config_sampling_bounds():
    with pytest.raises(ConfigError):
        SeqptConfig(shots=10, epsilon=0.01)          # M < 1/eps^2
    with pytest.raises(ConfigError):
        SeqptConfig(shots=20000, epsilon=0.01, delta=1e-4)  # Chernoff
    with pytest.raises(ConfigError):
        SeqptConfig(shots=100, delta=0.1)            # delta without epsilon
    with pytest.raises(ConfigError):
        SeqptConfig(shots=0)
    with pytest.raises(ConfigError):
        SeqptConfig(shots=100, variant="haar")
    SeqptConfig(shots=10000, epsilon=0.01)
    SeqptConfig(shots=30000, epsilon=0.01, delta=0.01)


def test_selective_identity():
    ident = ChannelModel.identity(1)
    est = estimate_chi_selective(ident, "I", SeqptConfig(shots=500, seed=1))
    assert est.chi_hat == 1.0 and est.survival_rate == 1.0
    est_x = estimate_chi_selective(ident, "X", SeqptConfig(shots=10000, seed=2))
    assert abs(est_x.survival_rate - 1 / 3) <= 3 * np.sqrt(2 / 9 / 10000)
    assert abs(est_x.chi_hat) <= 3 * est_x.stderr + 1e-12


def test_selective_depolarizing():
    dep = ChannelModel.from_kraus(depolarizing_kraus(0.3))
    est = estimate_chi_selective(dep, "I", SeqptConfig(shots=10000, seed=3))
    assert abs(est.chi_hat - 0.775) <= 3 * est.stderr
    assert est.stderr <= (2 + 1) / (2 * np.sqrt(10000))


def test_selective_clifford_variant():
    dep = ChannelModel.from_kraus(depolarizing_kraus(0.3))
    est = estimate_chi_selective(dep, "I",
                                 SeqptConfig(shots=3000, seed=4, variant="clifford"))
    assert abs(est.chi_hat - 0.775) <= 3.5 * est.stderr


def test_average_fidelity():
    assert average_fidelity(ChannelModel.identity(1), SeqptConfig(shots=200, seed=5))[0] == 1.0
    dep = ChannelModel.from_kraus(depolarizing_kraus(0.3))
    f, fs = average_fidelity(dep, SeqptConfig(shots=10000, seed=6))
    assert abs(f - 0.85) <= 3 * fs
    f_cn, fs_cn = average_fidelity(cnot_channel(), SeqptConfig(shots=10000, seed=7))
    assert abs(f_cn - 0.4) <= 3 * fs_cn  # chi_00 = 1/4 -> F = (4/4+1)/5


def test_blind_identity():
    res = run_blind_discovery(ChannelModel.identity(2), SeqptConfig(shots=100, seed=8))
    assert set(res.estimates) == {"II"}
    est = res.estimates["II"]
    assert est.compatible_count == 100 and abs(est.chi_hat - 1.0) < 1e-12
    assert not est.borderline
    assert abs(res.residual_mass) < 1e-12


def test_blind_mixed_z1():
    res = run_blind_discovery(mixed_z1_channel(0.3), SeqptConfig(shots=10000, seed=9))
    for label, want in (("II", 0.7), ("ZI", 0.3)):
        est = res.estimates[label]
        assert abs(est.chi_hat - want) <= 3 * est.stderr, (label, est)
        assert not est.borderline


def test_blind_cnot_labels():
    res = run_blind_discovery(cnot_channel(), SeqptConfig(shots=10000, seed=10))
    decisive = {k for k, v in res.estimates.items() if not v.borderline}
    assert decisive == {"II", "ZI", "IX", "ZX"}
    for k in decisive:
        est = res.estimates[k]
        assert abs(est.chi_hat - 0.25) <= 3 * est.stderr
    assert abs(res.usable_pair_fraction - 0.8) < 0.02


def test_blind_deterministic_replay():
    cfg = SeqptConfig(shots=2000, seed=11)
    a = run_blind_discovery(cnot_channel(), cfg).to_json()
    b = run_blind_discovery(cnot_channel(), cfg).to_json()
    assert a == b


def test_blind_clifford_variant():
    dep = ChannelModel.from_kraus(depolarizing_kraus(0.3))
    res = run_blind_discovery(dep, SeqptConfig(shots=4000, seed=12, variant="clifford"))
    est = res.estimates["I"]
    assert abs(est.chi_hat - 0.775) <= 3 * est.stderr
    want = frames_independent_probability(1)
    assert abs(res.usable_pair_fraction - want) < 0.03


def test_blind_needs_two_shots():
    with pytest.raises(ConfigError):
        run_blind_discovery(ChannelModel.identity(1), SeqptConfig(shots=1, seed=0))


def test_blind_pair_class_cap_flagged():
    # n=1 has at most 6 constraint classes -> 15 class pairs; cap below that
    cfg = SeqptConfig(shots=400, seed=13, variant="clifford", pair_class_cap=5)
    res = run_blind_discovery(ChannelModel.from_kraus(depolarizing_kraus(0.3)), cfg)
    assert not res.analyzed_exactly


def test_success_probability_closed_forms():
    assert abs(success_probability("mub", 2) - 4 / 5) < 1e-15
    assert abs(success_probability("clifford", 1) - 1 / 3) < 1e-15
    assert abs(success_probability("clifford", 2) - 22 / 45) < 1e-15
    assert abs(frames_independent_probability(1) - 2 / 3) < 1e-15
    assert abs(frames_independent_probability(2) - 8 / 15) < 1e-15
    assert abs(frames_independent_probability(3) - 64 / 135) < 1e-15
    with pytest.raises(ConfigError):
        success_probability("haar", 1)


def test_mub_pair_fraction_exact_counting():
    # over the uniform (D+1)^2 grid of ordered basis pairs, the off-diagonal
    # fraction is exactly D/(D+1)
    for n in (1, 2, 3, 6):
        d = 1 << n
        assert abs((d + 1) * d / (d + 1) ** 2 - success_probability("mub", n)) < 1e-12


def test_estimator_consistency_over_seeds():
    """Reported labels stay within 3 stderr of the oracle in >=99% of runs."""
    cases = [
        (mixed_z1_channel(0.3), {"II": 0.7, "ZI": 0.3}),
        (ChannelModel.from_kraus(depolarizing_kraus(0.3)),
         {"I": 0.775, "X": 0.075, "Y": 0.075, "Z": 0.075}),
    ]
    for channel, oracle in cases:
        hits = {k: 0 for k in oracle}
        present = {k: 0 for k in oracle}
        for seed in range(100):
            res = run_blind_discovery(channel,
                                      SeqptConfig(shots=2000, seed=1000 + seed))
            for k, want in oracle.items():
                est = res.estimates.get(k)
                if est is None:
                    continue
                present[k] += 1
                hits[k] += abs(est.chi_hat - want) <= 3 * est.stderr
        for k in oracle:
            assert present[k] == 100, (k, present[k])
            assert hits[k] >= 99, (k, hits[k])


def test_threshold_semantics_over_seeds():
    """chi >= 2/M + 3/sqrt(M) is reported in >= 95% of seeded runs."""
    shots = 2500
    floor = 2 / shots + 3 / np.sqrt(shots)  # ~0.0608
    p = 0.08
    z1 = gate_unitary("Z", (0,), 2)
    ch = ChannelModel.from_kraus([np.sqrt(1 - p) * np.eye(4), np.sqrt(p) * z1])
    assert p >= floor
    reported = 0
    for seed in range(100):
        res = run_blind_discovery(ch, SeqptConfig(shots=shots, seed=2000 + seed))
        reported += "ZI" in res.estimates
    assert reported >= 95, reported


def test_compare_variants_n1():
    dep = ChannelModel.from_kraus(depolarizing_kraus(0.3))
    cmp = compare_variants(dep, SeqptConfig(shots=1500, seed=14))
    assert abs(cmp.mub.usable_pair_fraction - 2 / 3) < 0.05
    assert abs(cmp.clifford.usable_pair_fraction - 2 / 3) < 0.05
    assert cmp.clifford.closed_form == success_probability("clifford", 1)
    assert cmp.clifford.exact_rate == frames_independent_probability(1)


def test_compare_variants_n2():
    cmp = compare_variants(mixed_z1_channel(0.3), SeqptConfig(shots=1200, seed=15))
    assert abs(cmp.mub.usable_pair_fraction - 0.8) < 0.05
    assert abs(cmp.clifford.usable_pair_fraction - 8 / 15) < 0.05
    d = cmp.to_json_dict()
    assert set(d) == {"n", "shots", "mub", "clifford"}


def test_selective_label_forms():
    ident = ChannelModel.identity(2)
    cfg = SeqptConfig(shots=100, seed=16)
    a = estimate_chi_selective(ident, "ZI", cfg)
    b = estimate_chi_selective(ident, 12, cfg)
    from twirltomo.pauli import Pauli
    c = estimate_chi_selective(ident, Pauli.from_string("ZI"), cfg)
    assert a == b == c
