import numpy as np
import pytest

from conftest import battery, cnot_channel
from twirltomo.channels import (ChannelModel, depolarizing_kraus, gate_unitary,
                                random_cp_channel)
from twirltomo.dense import (DenseBackend, DenseState, TwirlSpec,
                             enumerate_twirl_exact, evolve, exact_chi_extraction,
                             haar_moment_closed_form, haar_twirl_moment,
                             measure_computational)
from twirltomo.errors import CapacityError
from twirltomo.pauli import Pauli
from twirltomo.rng import master

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=float)
Z = np.diag([1.0, -1.0])


def test_evolve_examples():
    h = ChannelModel.from_unitary(gate_unitary("H", (0,), 1))
    out = evolve(DenseState.zero(1), h)
    np.testing.assert_allclose(out.amplitudes, [1, 1] / np.sqrt(2))
    dep1 = ChannelModel.from_kraus(depolarizing_kraus(1.0))
    rho = evolve(DenseState.from_bits((1,)), dep1).density
    np.testing.assert_allclose(rho, np.eye(2) / 2, atol=1e-12)
    out = evolve(DenseState.from_bits((1, 0)), cnot_channel())
    np.testing.assert_allclose(np.abs(out.amplitudes) ** 2, [0, 0, 0, 1], atol=1e-12)


def test_measure_examples():
    rng = master(1)
    assert measure_computational(DenseState.from_bits((1, 1)), rng) == (1, 1)
    plus = DenseState(1, amplitudes=np.array([1, 1]) / np.sqrt(2))
    m = 10000
    ones = sum(measure_computational(plus, rng)[0] for _ in range(m))
    assert abs(ones / m - 0.5) <= 3 * 0.5 / np.sqrt(m)
    bell = DenseState(2, amplitudes=np.array([1, 0, 0, 1]) / np.sqrt(2))
    seen = {measure_computational(bell, rng) for _ in range(200)}
    assert seen <= {(0, 0), (1, 1)}


def test_measure_deterministic_under_seed():
    plus = DenseState(1, amplitudes=np.array([1, 1]) / np.sqrt(2))
    a = [measure_computational(plus, master(7)) for _ in range(1)]
    b = [measure_computational(plus, master(7)) for _ in range(1)]
    assert a == b


def test_haar_closed_form_examples():
    assert abs(haar_moment_closed_form(I2, I2, I2, I2) - 2.0) < 1e-12
    assert abs(haar_moment_closed_form(Z, Z, X, X) - (-2 / 3)) < 1e-12


def test_haar_moment_pauli_case():
    res = haar_twirl_moment(Z, Z, X, X, samples=100000, rng=master(2))
    assert res.deviation_sigmas <= 3.0
    assert abs(res.estimate - res.closed_form) <= 0.01 * abs(res.closed_form) + 0.005


def test_haar_moment_random_operators():
    rng = master(3)
    for dim in (2, 4):
        ops = [rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
               for _ in range(4)]
        res = haar_twirl_moment(*ops, samples=60000, rng=rng)
        assert res.deviation_sigmas <= 3.5


def test_exact_chi_extraction_examples():
    ident = ChannelModel.identity(1)
    assert abs(exact_chi_extraction(ident, 0, 0) - 1.0) < 1e-12
    assert abs(exact_chi_extraction(ident, 2, 2)) < 1e-12
    dep = ChannelModel.from_kraus(depolarizing_kraus(0.3))
    assert abs(exact_chi_extraction(dep, 1, 1) - 0.075) < 1e-10


def test_exact_chi_extraction_matches_kraus_route():
    rng = master(4)
    for n in (1, 2):
        for _ in range(3):
            ch = random_cp_channel(n, rng)
            chi = ch.chi.mat
            for l in range(4 ** n):
                assert abs(exact_chi_extraction(ch, l, l) - chi[l, l]) < 1e-10
            # a few off-diagonal elements
            for l, lp in ((0, 1), (1, 2), (0, 4 ** n - 1)):
                assert abs(exact_chi_extraction(ch, l, lp) - chi[l, lp]) < 1e-10


def test_twirl_survival_identity_examples():
    ident = ChannelModel.identity(1)
    for l in range(4):
        dist = enumerate_twirl_exact(ident, TwirlSpec("mub", 1),
                                     intermediary=Pauli.from_label(1, l))
        want = 1.0 if l == 0 else 1.0 / 3.0
        assert abs(dist[0] - want) < 1e-12
    dep = ChannelModel.from_kraus(depolarizing_kraus(0.3))
    dist = enumerate_twirl_exact(dep, TwirlSpec("mub", 1))
    assert abs(dist[0] - 0.85) < 1e-12


def test_twirl_survival_matches_chi_for_every_label():
    """Exact MUB survival with intermediary P_l equals (D chi_ll + 1)/(D+1)."""
    rng = master(5)
    for n in (1, 2):
        d = 1 << n
        for _ in range(3):
            ch = random_cp_channel(n, rng)
            chi = ch.chi.mat
            for l in range(4 ** n):
                dist = enumerate_twirl_exact(ch, TwirlSpec("mub", n),
                                             intermediary=Pauli.from_label(n, l))
                want = (d * chi[l, l].real + 1.0) / (d + 1.0)
                assert abs(dist[0] - want) < 1e-10


def test_mub_equals_full_clifford_average_n1():
    """At n=1 the two finite twirls give identical exact outcome spectra."""
    rng = master(6)
    for _ in range(3):
        ch = random_cp_channel(1, rng)
        d_mub = enumerate_twirl_exact(ch, TwirlSpec("mub", 1))
        d_cl = enumerate_twirl_exact(ch, TwirlSpec("clifford_full", 1))
        np.testing.assert_allclose(d_mub, d_cl, atol=1e-10)


def test_mub_equals_full_clifford_survival_n2():
    """At n=2 survival probabilities agree exactly (full distributions do not:
    the D(D+1)-state family matches the group average only through second
    moments of the prepared state)."""
    ch = random_cp_channel(2, master(7))
    d_mub = enumerate_twirl_exact(ch, TwirlSpec("mub", 2))
    d_cl = enumerate_twirl_exact(ch, TwirlSpec("clifford_full", 2))
    assert abs(d_mub[0] - d_cl[0]) < 1e-10


def test_local_twirl_fidelity_input_independent():
    """One-qubit-twirled fidelity is the same for every computational input."""
    from twirltomo.localtwirl import c1t_fidelity
    for name, ch in battery(max_n=2):
        f = c1t_fidelity(ch)  # raises internally on input dependence
        assert 0.0 <= f <= 1.0 + 1e-12, name
    # n=3 spot check
    f3 = c1t_fidelity(battery(max_n=3)[-1][1])
    assert 0.0 <= f3 <= 1.0 + 1e-12


def test_enumeration_caps():
    big = ChannelModel.identity(4)
    with pytest.raises(CapacityError):
        enumerate_twirl_exact(big, TwirlSpec("mub", 4))
    with pytest.raises(CapacityError):
        enumerate_twirl_exact(big, TwirlSpec("clifford_full", 4))
    with pytest.raises(ValueError):
        enumerate_twirl_exact(big, TwirlSpec("haar_state", 4))


def test_twirl_spec_sizes():
    assert TwirlSpec("mub", 2).enumeration_size == 20
    assert TwirlSpec("local_clifford", 2).enumeration_size == 144
    assert TwirlSpec("haar_state", 2).enumeration_size is None


def test_backend_capacity():
    backend = DenseBackend(max_n=2)
    with pytest.raises(CapacityError):
        backend.check_capacity(3)
