import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qprogram import qcore

X = qcore.pauli("X")
Z = qcore.pauli("Z")


def test_kron():
    assert np.abs(qcore.kron(np.eye(2), np.eye(2)) - np.eye(4)).max() == 0
    ret = qcore.kron(np.diag([1, 2]), np.diag([3, 4]))
    assert np.abs(ret - np.diag([3, 4, 6, 8])).max() == 0
    ket00 = qcore.ket(0, 4)
    assert np.abs(qcore.kron(X, X) @ ket00 - qcore.ket(3, 4)).max() == 0


def test_partial_trace():
    phi = qcore.max_entangled_projector(2)
    assert np.abs(qcore.partial_trace(phi, [2, 2], [0]) - np.eye(2) / 2).max() < 1e-12

    rng = np.random.default_rng(0)
    rho = qcore.random_density(2, rng)
    sigma = 2.5 * qcore.random_density(3, rng)
    ret = qcore.partial_trace(np.kron(rho, sigma), [2, 3], [0])
    assert np.abs(ret - 2.5 * rho).max() < 1e-12
    ret = qcore.partial_trace(np.kron(rho, sigma), [2, 3], [1])
    assert np.abs(ret - sigma).max() < 1e-12

    chi = qcore.choi_from_kraus(qcore.amplitude_damping(0.3))
    assert np.abs(qcore.partial_trace(chi, [2, 2], [0]) - np.eye(2) / 2).max() < 1e-12

    with pytest.raises(ValueError):
        qcore.partial_trace(np.eye(4), [2, 3], [0])


def test_partial_trace_keeps_order():
    rng = np.random.default_rng(1)
    a, b, c = (qcore.random_density(k, rng) for k in (2, 3, 2))
    ret = qcore.partial_trace(qcore.kron(a, b, c), [2, 3, 2], [0, 2])
    assert np.abs(ret - np.kron(a, c)).max() < 1e-12


def test_permute_subsystems():
    rng = np.random.default_rng(2)
    a, b = qcore.random_density(2, rng), qcore.random_density(3, rng)
    ret = qcore.permute_subsystems(np.kron(a, b), [2, 3], [1, 0])
    assert np.abs(ret - np.kron(b, a)).max() < 1e-12


def test_herm_eig():
    ret = qcore.herm_eig(np.diag([1.0, 3, 2]))
    assert np.abs(ret.eigenvalues - np.array([3, 2, 1])).max() < 1e-12

    ret = qcore.herm_eig(X)
    assert np.abs(ret.eigenvalues - np.array([1, -1])).max() < 1e-12
    plus = np.array([1, 1]) / np.sqrt(2)
    assert abs(abs(np.vdot(ret.eigenvectors[:, 0], plus)) - 1) < 1e-12

    rng = np.random.default_rng(3)
    h = qcore.random_hermitian(4, rng)
    w, v = qcore.herm_eig(h)
    assert np.abs(v @ np.diag(w) @ v.conj().T - h).max() < 1e-10 * max(1, np.abs(w).max())
    assert np.abs(v.conj().T @ v - np.eye(4)).max() < 1e-10
    assert np.all(np.diff(w) <= 0)

    with pytest.raises(ValueError):
        qcore.herm_eig(np.array([[0, 1], [0, 0]]))


def test_mat_func_psd():
    ret = qcore.mat_func_psd(np.diag([4.0, 9.0]), np.sqrt)
    assert np.abs(ret - np.diag([2, 3])).max() < 1e-12
    ret = qcore.mat_func_psd(np.diag([4.0, 0.0]), lambda x: 1 / np.sqrt(x), 1e-10)
    assert np.abs(ret - np.diag([0.5, 0])).max() < 1e-12
    phi = qcore.max_entangled_projector(2)
    ret = qcore.mat_func_psd(phi, lambda x: np.sqrt(np.abs(x)), 1e-10)
    assert np.abs(ret - phi).max() < 1e-12


def test_max_entangled():
    ret = qcore.max_entangled(2)
    assert np.abs(ret - np.array([1, 0, 0, 1]) / np.sqrt(2)).max() < 1e-15
    assert abs(np.linalg.norm(qcore.max_entangled(3)) - 1) < 1e-15
    proj = qcore.max_entangled_projector(3)
    assert np.abs(qcore.partial_trace(proj, [3, 3], [0]) - np.eye(3) / 3).max() < 1e-12
    with pytest.raises(ValueError):
        qcore.max_entangled(1)


def test_weyl_heisenberg():
    us = qcore.weyl_heisenberg(2)
    expected = [np.eye(2), X, Z, X @ Z]
    for u, e in zip(us, expected):
        assert np.abs(u - e).max() < 1e-12
    # XZ equals Y up to a phase
    y = qcore.pauli("Y")
    assert abs(abs(np.trace(y.conj().T @ us[3])) - 2) < 1e-12
    for d in (2, 3):
        us = qcore.weyl_heisenberg(d)
        gram = np.array([[np.trace(a.conj().T @ b) for b in us] for a in us])
        assert np.abs(gram - d * np.eye(d * d)).max() < 1e-10
        for u in us:
            assert np.abs(u.conj().T @ u - np.eye(d)).max() < 1e-12


def test_bell_basis():
    vecs = qcore.bell_basis(2)
    assert np.abs(vecs[0] - qcore.max_entangled(2)).max() < 1e-15
    gram = np.array([[np.vdot(a, b) for b in vecs] for a in vecs])
    assert np.abs(gram - np.eye(4)).max() < 1e-12
    for v in vecs:
        marg = qcore.partial_trace(qcore.proj(v), [2, 2], [0])
        assert np.abs(marg - np.eye(2) / 2).max() < 1e-12


def test_choi_from_kraus():
    phi = qcore.max_entangled_projector(2)
    assert np.abs(qcore.choi_from_kraus(qcore.identity(2)) - phi).max() < 1e-12
    # full damping sends everything to |0><0|
    ret = qcore.choi_from_kraus(qcore.amplitude_damping(1.0))
    assert np.abs(ret - np.kron(np.eye(2) / 2, np.diag([1, 0]))).max() < 1e-12
    for p in (0.0, 0.3, 1.0):
        ret = qcore.choi_from_kraus(qcore.depolarizing(p, 2))
        assert np.abs(ret - ((1 - p) * phi + p * np.eye(4) / 4)).max() < 1e-12
    with pytest.raises(ValueError):
        qcore.KrausChannel(2, 2, (np.eye(2) * 0.5,))


def test_kraus_from_choi():
    ch = qcore.kraus_from_choi(qcore.max_entangled_projector(2), 2)
    assert len(ch.kraus_ops) == 1
    k = ch.kraus_ops[0]
    assert abs(abs(np.trace(k)) - 2) < 1e-12 and np.abs(k @ k.conj().T - np.eye(2)).max() < 1e-12

    chi = qcore.choi_from_kraus(qcore.amplitude_damping(0.3))
    assert np.abs(qcore.choi_from_kraus(qcore.kraus_from_choi(chi, 2)) - chi).max() < 1e-8

    rng = np.random.default_rng(4)
    ch = qcore.kraus_from_choi(np.eye(4) / 4, 2)
    assert len(ch.kraus_ops) == 4
    for _ in range(20):
        rho = qcore.random_density(2, rng)
        assert np.abs(ch(rho) - np.eye(2) / 2).max() < 1e-12


def test_choi_kraus_roundtrip_random():
    rng = np.random.default_rng(5)
    ch = qcore.random_channel(2, 3, rng)
    ch2 = qcore.kraus_from_choi(qcore.choi_from_kraus(ch), 2, 3)
    for _ in range(20):
        rho = qcore.random_density(2, rng)
        assert np.abs(ch(rho) - ch2(rho)).max() < 1e-8


def test_apply_channel():
    rng = np.random.default_rng(6)
    rho = qcore.random_density(2, rng)
    assert np.abs(qcore.apply_channel(qcore.identity(2), rho) - rho).max() < 1e-14
    ret = qcore.apply_channel(qcore.amplitude_damping(1), np.diag([0, 1]))
    assert np.abs(ret - np.diag([1, 0])).max() < 1e-14
    ret = qcore.apply_channel(qcore.depolarizing(1), rho)
    assert np.abs(ret - np.eye(2) / 2).max() < 1e-14
    with pytest.raises(ValueError):
        qcore.apply_channel(qcore.identity(2), np.eye(3) / 3)


def test_channel_zoo():
    assert np.abs(qcore.choi_from_kraus(qcore.amplitude_damping(0))
                  - qcore.max_entangled_projector(2)).max() < 1e-14
    assert np.abs(qcore.choi_from_kraus(qcore.pauli_channel([1, 0, 0, 0]))
                  - qcore.max_entangled_projector(2)).max() < 1e-14
    assert np.abs(qcore.rotation_unitary(np.pi / 2, "X") - 1j * X).max() < 1e-15
    u = qcore.expm_hermitian(X, np.pi / 2)
    assert np.abs(qcore.rotation_unitary(np.pi / 2, "X") - u).max() < 1e-12
    with pytest.raises(ValueError):
        qcore.amplitude_damping(1.5)
    with pytest.raises(ValueError):
        qcore.depolarizing(-0.1)
    with pytest.raises(ValueError):
        qcore.pauli_channel([0.5, 0.6, 0, 0])


def test_generated_choi_matrices_are_valid():
    rng = np.random.default_rng(7)
    chans = [qcore.identity(2), qcore.amplitude_damping(0.4), qcore.depolarizing(0.3, 3),
             qcore.pauli_channel([0.1, 0.2, 0.3, 0.4]), qcore.rotation(0.3)]
    chans += [qcore.random_channel(d, d, rng) for d in (2, 3)]
    for ch in chans:
        chi = qcore.choi_from_kraus(ch)
        assert np.linalg.eigvalsh(chi).min() > -1e-10
        marg = qcore.partial_trace(chi, [ch.d_in, ch.d_out], [0])
        assert np.abs(marg - np.eye(ch.d_in) / ch.d_in).max() < 1e-9


def test_trace_norm():
    assert abs(qcore.trace_norm(np.diag([3.0, -4.0])) - 7) < 1e-12
    rng = np.random.default_rng(8)
    assert abs(qcore.trace_norm(qcore.random_density(3, rng)) - 1) < 1e-12
    phi = qcore.max_entangled_projector(2)
    assert abs(qcore.trace_norm(phi - np.eye(4) / 4) - 1.5) < 1e-12


def test_fidelity():
    rng = np.random.default_rng(9)
    rho = qcore.random_density(3, rng)
    assert abs(qcore.fidelity(rho, rho) - 1) < 1e-7
    plus = np.full((2, 2), 0.5)
    assert abs(qcore.fidelity(np.diag([1.0, 0]), plus) - 1 / np.sqrt(2)) < 1e-12
    assert abs(qcore.fidelity(rho, np.eye(3) / 3) - qcore.fidelity(np.eye(3) / 3, rho)) < 1e-12


def test_schatten_p_norm():
    rng = np.random.default_rng(10)
    h = qcore.random_hermitian(4, rng)
    assert abs(qcore.schatten_p_norm(h, 1) - qcore.trace_norm(h)) < 1e-12
    assert abs(qcore.schatten_p_norm(np.diag([3.0, -4.0]), np.inf) - 4) < 1e-12
    assert abs(qcore.schatten_p_norm(np.diag([3.0, 4.0]), 2) - 5) < 1e-12
    with pytest.raises(ValueError):
        qcore.schatten_p_norm(h, 0.5)


def test_relative_entropy():
    rng = np.random.default_rng(11)
    rho = qcore.random_density(3, rng)
    assert abs(qcore.relative_entropy(rho, rho)) < 1e-10
    assert abs(qcore.relative_entropy(np.diag([1.0, 0]), np.eye(2) / 2) - 1) < 1e-12
    assert qcore.relative_entropy(np.diag([1.0, 0]), np.diag([0, 1.0])) == np.inf
    assert qcore.relative_entropy(np.diag([0, 1.0]), np.diag([1.0, 0])) == np.inf


def test_fuchs_van_de_graaf():
    rng = np.random.default_rng(12)
    for _ in range(100):
        d = rng.choice([2, 4])
        rho = qcore.random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        sigma = qcore.random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        f = qcore.fidelity(rho, sigma)
        assert qcore.trace_norm(rho - sigma) <= 2 * np.sqrt(max(0.0, 1 - f * f)) + 1e-9


def test_pinsker_in_bits():
    # ||rho - sigma||_1 <= sqrt(2 ln 2 * S) with S measured in bits
    rng = np.random.default_rng(13)
    for _ in range(100):
        d = rng.choice([2, 4])
        rho, sigma = qcore.random_density(d, rng), qcore.random_density(d, rng)
        s = min(qcore.relative_entropy(rho, sigma), qcore.relative_entropy(sigma, rho))
        assert qcore.trace_norm(rho - sigma) <= np.sqrt(2 * np.log(2) * s) + 1e-9


def test_pinsker_constant_ln2_fails_near_maximally_mixed():
    # The constant (2 ln sqrt 2) = ln 2 in front of sqrt(S) is too small:
    # for rho = diag(1/2 + x, 1/2 - x) against I/2, S ~ 2 x^2 / ln 2 bits and
    # ||rho - I/2||_1 = 2x, while ln 2 * sqrt(S) ~ sqrt(2 ln 2) x < 2x.
    x = 1e-3
    rho = np.diag([0.5 + x, 0.5 - x])
    sigma = np.eye(2) / 2
    s = min(qcore.relative_entropy(rho, sigma), qcore.relative_entropy(sigma, rho))
    c1 = qcore.trace_norm(rho - sigma)
    assert c1 > np.log(2) * np.sqrt(s)
    assert c1 <= np.sqrt(2 * np.log(2) * s)


def test_schatten_monotone():
    rng = np.random.default_rng(14)
    for _ in range(20):
        h = qcore.random_hermitian(4, rng)
        vals = [qcore.schatten_p_norm(h, p) for p in (1, 1.5, 2, 3, np.inf)]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def test_json_roundtrip():
    rng = np.random.default_rng(15)
    m = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    obj = json.loads(json.dumps(qcore.matrix_to_json(m)))
    assert obj["rows"] == 2 and obj["cols"] == 3
    assert obj["data"][1] == [m[0, 1].real, m[0, 1].imag]
    assert np.abs(qcore.matrix_from_json(obj) - m).max() == 0

    ch = qcore.amplitude_damping(0.2)
    ch2 = qcore.channel_from_json(json.dumps(qcore.channel_to_json(ch)))
    assert np.abs(qcore.choi_from_kraus(ch) - qcore.choi_from_kraus(ch2)).max() == 0
    with pytest.raises(ValueError):
        qcore.matrix_from_json({"rows": 2, "cols": 2, "data": [[1, 0]]})


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=2, max_value=4))
def test_random_channel_choi_properties(seed, d):
    rng = np.random.default_rng(seed)
    ch = qcore.random_channel(d, d, rng)
    chi = qcore.choi_from_kraus(ch)
    assert abs(np.trace(chi) - 1) < 1e-10
    assert np.linalg.eigvalsh(chi).min() > -1e-10
    assert np.abs(qcore.partial_trace(chi, [d, d], [0]) - np.eye(d) / d).max() < 1e-9
