import numpy as np
import pytest

import oracles
from qprogram import processors as P
from qprogram import qcore, sdpsolve as S

PHI = qcore.max_entangled_projector(2)


def test_hermitian_basis():
    b = S.hermitian_basis(3)
    assert b.shape == (9, 3, 3)
    gram = np.real(np.einsum("kij,lji->kl", b, b))
    assert np.abs(gram - np.eye(9)).max() < 1e-14
    rng = np.random.default_rng(0)
    h = qcore.random_hermitian(3, rng)
    assert np.abs(np.tensordot(S.hermitian_coords(h), b, axes=1) - h).max() < 1e-12


def test_affine_state_basis():
    pi0, dirs = S.affine_state_basis(4)
    assert len(dirs) == 15 and abs(np.trace(pi0) - 1) < 1e-15
    assert max(abs(np.trace(d)) for d in dirs) < 1e-12
    pi0, dirs = S.affine_state_basis(4, 2)
    assert len(dirs) == 12
    for d in dirs:
        assert np.abs(qcore.partial_trace(d, [2, 2], [0])).max() < 1e-12


def test_diamond_zero():
    sol = S.diamond_distance(np.zeros((4, 4)), 2)
    assert sol.objective == 0 and sol.duality_gap == 0


def test_diamond_depolarizing():
    kraus = qcore.depolarizing(0.4).kraus_ops
    sol = S.diamond_distance(PHI - qcore.choi_from_kraus(qcore.depolarizing(0.4)), 2)
    ref = oracles.diamond_by_inputs([np.eye(2)], kraus, 2, n_starts=10)
    assert abs(sol.objective - ref) < 1e-4
    assert abs(sol.objective - 0.6) < 1e-4
    assert 0 <= sol.duality_gap <= 1e-6
    assert sol.dual_bound <= 0.6 + 1e-9


def test_diamond_phase_rotation():
    u = qcore.expm_hermitian(qcore.pauli("Z"), np.pi / 4)
    sol = S.diamond_distance(PHI - qcore.choi_from_unitary(u), 2)
    ref = oracles.diamond_by_inputs([np.eye(2)], [u], 2, n_starts=10)
    assert abs(sol.objective - ref) < 1e-3
    assert abs(sol.objective - np.sqrt(2)) < 1e-3


def test_diamond_solution_feasible():
    rng = np.random.default_rng(1)
    for _ in range(5):
        chi_a = qcore.choi_from_kraus(qcore.random_channel(2, 2, rng))
        chi_b = qcore.choi_from_kraus(qcore.random_channel(2, 2, rng))
        sol = S.diamond_distance(chi_a - chi_b, 2)
        assert np.linalg.eigvalsh(sol.z).min() > -1e-8
        assert np.linalg.eigvalsh(sol.z - 2 * (chi_a - chi_b)).min() > -1e-8
        assert sol.duality_gap <= 1e-6
        c1 = qcore.trace_norm(chi_a - chi_b)
        assert c1 - 1e-6 <= sol.objective <= 2 * c1 + 1e-6
        assert sol.objective <= S.spectral_diamond_upper(chi_a, chi_b) + 1e-6


def test_diamond_qutrit_against_oracle():
    rng = np.random.default_rng(2)
    a, b = qcore.random_channel(2, 3, rng), qcore.random_channel(2, 3, rng)
    diff = qcore.choi_from_kraus(a) - qcore.choi_from_kraus(b)
    sol = S.diamond_distance(diff, 2)
    ref = oracles.diamond_by_inputs(a.kraus_ops, b.kraus_ops, 2, n_starts=10)
    assert abs(sol.objective - ref) < 1e-5


def test_diamond_errors():
    with pytest.raises(ValueError):
        S.diamond_distance(np.eye(4), 2, tol=0)
    with pytest.raises(ValueError):
        S.diamond_distance(np.array([[0, 1], [0, 0]]), 2)
    with pytest.raises(ValueError):
        S.diamond_distance(np.eye(6), 4)
    with pytest.raises(S.SdpError) as info:
        S.diamond_distance(PHI - np.eye(4) / 4, 2, max_newton=3)
    assert info.value.solution is not None and info.value.duality_gap > 0


def test_optimal_program_teleport_pauli():
    tp = P.teleportation_processor(2)
    target = qcore.choi_from_kraus(qcore.pauli_channel([0.5, 0.2, 0.2, 0.1]))
    sol = S.optimal_program_sdp(tp, target)
    assert sol.objective <= 1e-6
    assert qcore.is_density(sol.pi, 1e-8)


def test_optimal_program_pbt_reduced():
    prev = np.inf
    for n in (2, 3, 4):
        red = P.pbt_reduced_processor(n)
        sol = S.optimal_program_sdp(red, PHI, program_constraint="choi_set")
        assert sol.objective <= 4 / n
        assert sol.objective <= prev + 1e-6
        prev = sol.objective
        # the optimum can only improve on the natural Choi program
        base = S.diamond_distance(PHI - red.apply(PHI), 2).objective
        assert sol.objective <= base + 1e-6
        # returned program stays in the Choi set
        assert qcore.is_density(sol.pi, 1e-8)
        assert np.abs(qcore.partial_trace(sol.pi, [2, 2], [0]) - np.eye(2) / 2).max() < 1e-8
        assert abs(S.diamond_distance(PHI - red.apply(sol.pi), 2).objective - sol.objective) < 1e-5


def test_optimal_program_full_pbt():
    pm = P.pbt_processor(2)
    target = qcore.choi_from_kraus(qcore.amplitude_damping(0.5))
    sol = S.optimal_program_sdp(pm, target, tol=1e-5)
    base = S.diamond_distance(target - pm.apply(np.kron(target, target)), 2).objective
    assert sol.objective <= base + 1e-6
    assert sol.duality_gap <= 1e-5


def test_optimal_program_errors():
    tp = P.teleportation_processor(2)
    with pytest.raises(ValueError):
        S.optimal_program_sdp(tp, PHI, program_constraint="bogus")
    with pytest.raises(ValueError):
        S.optimal_program_sdp(tp, np.eye(9) / 9)


def test_spectral_upper():
    assert S.spectral_diamond_upper(PHI, PHI) == 0
    rng = np.random.default_rng(3)
    for _ in range(5):
        a = qcore.choi_from_kraus(qcore.random_channel(2, 2, rng))
        b = qcore.choi_from_kraus(qcore.random_channel(2, 2, rng))
        up = S.spectral_diamond_upper(a, b)
        assert up >= S.diamond_distance(a - b, 2).objective - 1e-6
        assert up >= qcore.trace_norm(a - b) - 1e-9


def test_solution_json():
    sol = S.diamond_distance(PHI - np.eye(4) / 4, 2)
    obj = sol.to_json()
    assert set(obj) >= {"objective", "duality_gap", "iterations", "z"}
    assert np.abs(qcore.matrix_from_json(obj["z"]) - sol.z).max() == 0
