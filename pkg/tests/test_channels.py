import numpy as np
import pytest

from conftest import cnot_channel, transpose_map_channel
from twirltomo.channels import (ChannelModel, ChiMatrix, apply_chi,
                                check_cp_bound, check_positive_bound,
                                chi_from_kraus, classify, coarse_grain, compose,
                                depolarizing_kraus, diagonalize_chi, embed_kraus,
                                gate_unitary, matrix_from_pauli_coefficients,
                                pauli_coefficients, random_cp_channel)
from twirltomo.errors import DimensionMismatchError
from twirltomo.pauli import Pauli

CNOT_BLOCK_LABELS = [0, 12, 1, 13]  # II, ZI, IX, ZX
CNOT_BLOCK = 0.25 * np.array([[1, 1, 1, -1], [1, 1, 1, -1],
                              [1, 1, 1, -1], [-1, -1, -1, 1]])


def random_density(d, rng):
    v = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = v @ v.conj().T
    return rho / np.trace(rho)


def test_coefficient_transform_round_trip():
    rng = np.random.default_rng(0)
    for n in (1, 2, 3):
        d = 1 << n
        m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        c = pauli_coefficients(m)
        for l in (0, 1, 4 ** n - 1):
            pl = Pauli.from_label(n, l).to_matrix()
            assert abs(c[l] - np.trace(pl @ m) / d) < 1e-10
        np.testing.assert_allclose(matrix_from_pauli_coefficients(c), m, atol=1e-10)


def test_chi_identity_map():
    chi = chi_from_kraus([np.eye(2, dtype=complex)])
    want = np.zeros((4, 4))
    want[0, 0] = 1.0
    np.testing.assert_allclose(chi.mat, want, atol=1e-14)


def test_chi_cnot_block():
    chi = cnot_channel().chi
    np.testing.assert_allclose(chi.mat[np.ix_(CNOT_BLOCK_LABELS, CNOT_BLOCK_LABELS)],
                               CNOT_BLOCK, atol=1e-12)
    mask = np.ones((16, 16), dtype=bool)
    mask[np.ix_(CNOT_BLOCK_LABELS, CNOT_BLOCK_LABELS)] = False
    assert np.abs(chi.mat[mask]).max() < 1e-12


def test_chi_depolarizing():
    chi = chi_from_kraus(depolarizing_kraus(0.3))
    np.testing.assert_allclose(chi.mat, np.diag([0.775, 0.075, 0.075, 0.075]),
                               atol=1e-12)


def test_apply_chi_examples():
    ident = chi_from_kraus([np.eye(2, dtype=complex)])
    rho = random_density(2, np.random.default_rng(1))
    np.testing.assert_allclose(apply_chi(ident, rho), rho, atol=1e-12)
    # CNOT truth table on |10> -> |11>
    chi = cnot_channel().chi
    rho10 = np.zeros((4, 4), dtype=complex)
    rho10[2, 2] = 1.0
    out = apply_chi(chi, rho10)
    want = np.zeros((4, 4))
    want[3, 3] = 1.0
    np.testing.assert_allclose(out, want, atol=1e-10)
    # transpose map moves (I+sy)/2 to (I-sy)/2
    tr = transpose_map_channel()
    rho_y = 0.5 * (np.eye(2) + Pauli.from_string("Y").to_matrix())
    np.testing.assert_allclose(tr.apply(rho_y), rho_y.T, atol=1e-12)


def test_kraus_chi_round_trip_battery():
    """100 random CP channels at n <= 3, 20 random states each, 1e-10."""
    rng = np.random.default_rng(2)
    for n in (1, 2, 3):
        for _ in range(34 if n == 1 else 33):
            ch = random_cp_channel(n, rng)
            chi = ch.chi
            for _ in range(20):
                rho = random_density(1 << n, rng)
                np.testing.assert_allclose(apply_chi(chi, rho), ch.apply(rho),
                                           atol=1e-10)


def test_diagonalize_chi():
    dep = chi_from_kraus(depolarizing_kraus(0.3))
    dec = diagonalize_chi(dep)
    np.testing.assert_allclose(dec.eigenvalues, [0.775, 0.075, 0.075, 0.075],
                               atol=1e-12)
    np.testing.assert_allclose(dec.reconstruct(), dep.mat, atol=1e-12)
    # CNOT block is rank one (a unitary map)
    dec_c = diagonalize_chi(cnot_channel().chi)
    np.testing.assert_allclose(dec_c.eigenvalues[0], 1.0, atol=1e-12)
    assert np.abs(dec_c.eigenvalues[1:]).max() < 1e-12
    # transpose map has the single negative eigenvalue -1/2
    dec_t = diagonalize_chi(transpose_map_channel().chi)
    np.testing.assert_allclose(sorted(dec_t.eigenvalues), [-0.5, 0.5, 0.5, 0.5],
                               atol=1e-12)
    # operator normalization Tr[A_j^dag A_k] = D delta
    for dec_x, d in ((dec, 2), (dec_c, 4)):
        ops = dec_x.operators
        g = np.array([[np.trace(a.conj().T @ b) for b in ops] for a in ops])
        np.testing.assert_allclose(g, d * np.eye(len(ops)), atol=1e-9)


def test_diagonalize_requires_hermitian():
    bad = np.zeros((4, 4), dtype=complex)
    bad[0, 1] = 1.0
    with pytest.raises(ValueError):
        diagonalize_chi(ChiMatrix(1, bad))


def test_hermitian_split_into_cp_difference():
    """Sign-split eigenvalues give two CP maps whose difference is the map."""
    tr = transpose_map_channel()
    dec = diagonalize_chi(tr.chi)
    rng = np.random.default_rng(3)
    rho = random_density(2, rng)
    plus = sum(s * (op @ rho @ op.conj().T)
               for s, op in zip(dec.eigenvalues, dec.operators) if s > 0)
    minus = sum(-s * (op @ rho @ op.conj().T)
                for s, op in zip(dec.eigenvalues, dec.operators) if s < 0)
    np.testing.assert_allclose(plus - minus, tr.apply(rho), atol=1e-10)


def test_classification_examples():
    cls = cnot_channel().classification
    assert cls.hermitian_preserving and cls.trace_preserving
    assert cls.completely_positive and cls.positive is True
    cls_t = transpose_map_channel().classification
    assert cls_t.hermitian_preserving and cls_t.trace_preserving
    assert not cls_t.completely_positive and cls_t.positive is True
    # trace sum 0.9 -> not trace preserving
    chi_bad = ChiMatrix(1, np.diag([0.8, 0.1, 0.0, 0.0]).astype(complex))
    assert not classify(ChannelModel.from_chi(chi_bad)).trace_preserving


def test_trace_preservation_operator_condition_dense():
    """TP iff sum_{l,l'} chi[l,l'] P_l' P_l = I, checked densely at n <= 2."""
    rng = np.random.default_rng(4)
    for n in (1, 2):
        ch = random_cp_channel(n, rng)
        chi = ch.chi.mat
        d = 1 << n
        mats = [Pauli.from_label(n, l).to_matrix() for l in range(4 ** n)]
        acc = np.zeros((d, d), dtype=complex)
        for l in range(4 ** n):
            for lp in range(4 ** n):
                acc += chi[l, lp] * mats[lp] @ mats[l]
        np.testing.assert_allclose(acc, np.eye(d), atol=1e-9)


def test_cp_bound():
    rng = np.random.default_rng(5)
    for n in (1, 2):
        for _ in range(20):
            assert check_cp_bound(random_cp_channel(n, rng).chi) == []
    # CNOT saturates the bound without violating it
    assert check_cp_bound(cnot_channel().chi) == []
    viol = check_cp_bound(transpose_map_channel().chi)
    assert any(l == 0 and lp == 2 for l, lp, _, _ in viol)


def test_positive_bound():
    chi_t = transpose_map_channel().chi
    pair, diag = check_positive_bound(chi_t)
    assert pair == [] and diag == []
    assert chi_t.mat[2, 2].real == -0.5  # sits exactly on the -1/D edge
    rng = np.random.default_rng(6)
    for n in (1, 2):
        for _ in range(10):
            pair, diag = check_positive_bound(random_cp_channel(n, rng).chi)
            assert pair == [] and diag == []
    bad = ChiMatrix(1, np.diag([1.6, 0.0, -0.6, 0.0]).astype(complex))
    _, diag = check_positive_bound(bad)
    assert [l for l, _ in diag] == [0, 2]


def test_coarse_grain_examples():
    cg = coarse_grain(ChannelModel.identity(2).chi)
    np.testing.assert_allclose(cg.by_weight, [1, 0, 0], atol=1e-14)
    cg_dep = coarse_grain(chi_from_kraus(depolarizing_kraus(0.3)))
    np.testing.assert_allclose(cg_dep.by_weight, [0.775, 0.225], atol=1e-12)
    assert abs(cg_dep.by_support[(1,)] - 0.225) < 1e-12
    cg_cnot = coarse_grain(cnot_channel().chi)
    np.testing.assert_allclose(cg_cnot.by_weight, [0.25, 0.5, 0.25], atol=1e-12)


def test_coarse_grain_weight_sums_match_trace():
    rng = np.random.default_rng(7)
    for n in (1, 2, 3):
        chi = random_cp_channel(n, rng).chi
        cg = coarse_grain(chi)
        assert abs(cg.by_weight.sum() - chi.diagonal().sum().real) < 1e-10


def test_compose_and_embed():
    # Z1 then X1 equals Y1 up to phase: compare on random states
    n = 2
    z = ChannelModel.from_unitary(gate_unitary("Z", (0,), n))
    x = ChannelModel.from_unitary(gate_unitary("X", (0,), n))
    y = ChannelModel.from_unitary(gate_unitary("Y", (0,), n))
    comp = compose([z, x])
    rng = np.random.default_rng(8)
    for _ in range(5):
        rho = random_density(4, rng)
        np.testing.assert_allclose(comp.apply(rho), y.apply(rho), atol=1e-12)
    dep2 = ChannelModel(2, kraus=embed_kraus(depolarizing_kraus(0.3), 1, 2))
    cg = coarse_grain(dep2.chi)
    assert abs(cg.by_support[(0, 1)] - 0.225) < 1e-12


def test_chi_export_round_trip(tmp_path):
    chi = cnot_channel().chi
    chi.save_json(tmp_path / "chi.json")
    loaded = ChiMatrix.load_json(tmp_path / "chi.json")
    np.testing.assert_allclose(loaded.mat, chi.mat, atol=0)
    chi.save_csv(tmp_path / "chi.csv")
    import csv
    with open(tmp_path / "chi.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 16 and len(rows[0]) == 16
    re, im = rows[0][0].split(",")
    assert abs(float(re) - 0.25) < 1e-15 and float(im) == 0.0


def test_dimension_errors():
    with pytest.raises(DimensionMismatchError):
        chi_from_kraus([np.eye(2), np.eye(4)])
    with pytest.raises(DimensionMismatchError):
        apply_chi(cnot_channel().chi, np.eye(2))
