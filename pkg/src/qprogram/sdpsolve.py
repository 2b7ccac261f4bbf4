"""Small dense semidefinite programs for channel distances.

The solver is a primal log-barrier interior-point method.  Hermitian matrix
variables are expanded in the real orthonormal basis

    E_kk,   (E_kl + E_lk)/sqrt(2),   i(E_kl - E_lk)/sqrt(2)   (k < l)

so that every problem becomes ``minimize c.x`` subject to linear matrix
inequalities ``F_j(x) = F_j0 + sum_k x_k A_jk > 0``.  Equality constraints on
a program state are removed by parameterizing the affine set directly.

Termination is certified by an explicit dual feasible point built from the
barrier multipliers, so ``duality_gap`` is a rigorous bound on suboptimality
(up to floating point error).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .processors import ProcessorMap


class SdpError(RuntimeError):
    """The barrier method failed; carries the last iterate."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution

    @property
    def duality_gap(self):
        return None if self.solution is None else self.solution.duality_gap


@dataclass
class SdpSolution:
    objective: float
    z: np.ndarray = field(repr=False)
    duality_gap: float
    iterations: int
    dual_bound: float = float("nan")
    t: float = float("nan")
    pi: np.ndarray | None = field(default=None, repr=False)
    rho: np.ndarray | None = field(default=None, repr=False)
    converged: bool = True

    def to_json(self) -> dict:
        out = {"objective": self.objective, "dual_bound": self.dual_bound,
               "duality_gap": self.duality_gap, "iterations": self.iterations,
               "converged": self.converged, "z": qcore.matrix_to_json(self.z)}
        if self.pi is not None:
            out["pi"] = qcore.matrix_to_json(self.pi)
        return out


def hermitian_basis(n: int) -> np.ndarray:
    """Real-orthonormal basis of ``n x n`` Hermitian matrices, shape ``(n*n, n, n)``."""
    basis = np.zeros((n * n, n, n), dtype=complex)
    idx = 0
    for k in range(n):
        basis[idx, k, k] = 1
        idx += 1
    s = 1 / np.sqrt(2)
    for k in range(n):
        for l in range(k + 1, n):
            basis[idx, k, l] = basis[idx, l, k] = s
            idx += 1
            basis[idx, k, l] = 1j * s
            basis[idx, l, k] = -1j * s
            idx += 1
    return basis


def hermitian_coords(h: np.ndarray) -> np.ndarray:
    """Coordinates of ``h`` in :func:`hermitian_basis` (inverse of the expansion)."""
    n = h.shape[0]
    return np.real(np.einsum("kij,ji->k", hermitian_basis(n), h))


def affine_state_basis(dim: int, choi_d: int | None = None):
    """Feasible point and direction basis for the program constraint set.

    Without ``choi_d`` the set is the trace-one hyperplane.  With it, programs
    on ``A (x) B`` (``dim = d_A * choi_d``) additionally satisfy
    ``Tr_B pi = I / d_A``.
    """
    basis = hermitian_basis(dim)
    if choi_d is None:
        cons = np.real(np.einsum("kii->k", basis))[None, :]
        pi0 = np.eye(dim) / dim
    else:
        if dim % choi_d:
            raise ValueError("program dimension is not a multiple of the Choi output dimension")
        da = dim // choi_d
        parts = np.array([qcore.partial_trace(b, [da, choi_d], [0]) for b in basis])
        cons = np.array([hermitian_coords(p) for p in parts]).T
        pi0 = np.eye(dim) / dim
    # directions spanning the null space of the constraint map
    _, s, vt = np.linalg.svd(cons)
    rank = int((s > 1e-10 * s.max()).sum())
    null = vt[rank:]
    dirs = np.einsum("rk,kij->rij", null, basis)
    return pi0.astype(complex), dirs


@dataclass
class _Lmi:
    f0: np.ndarray
    coeffs: np.ndarray  # (m, n, n)

    def value(self, x):
        return self.f0 + np.tensordot(x, self.coeffs, axes=1)


def _chol(m):
    try:
        return np.linalg.cholesky(qcore.hermitize(m))
    except np.linalg.LinAlgError:
        return None


def _barrier_terms(lmis, x):
    """Barrier value, gradient and Hessian of ``-sum log det F_j(x)``."""
    m = len(x)
    val = 0.0
    g = np.zeros(m)
    h = np.zeros((m, m))
    for lmi in lmis:
        l = _chol(lmi.value(x))
        if l is None:
            return None
        val -= 2 * np.log(np.abs(np.diag(l))).sum()
        n = l.shape[0]
        # B_k = L^{-1} A_k L^{-H}
        y = np.linalg.solve(l, lmi.coeffs)  # (m, n, n) broadcast
        b = np.linalg.solve(l, y.conj().transpose(0, 2, 1)).conj().transpose(0, 2, 1)
        bf = b.reshape(m, n * n)
        g -= np.real(np.einsum("kii->k", b))
        h += np.real(bf.conj() @ bf.T)
    return val, g, h


def _feasible(lmis, x):
    return all(_chol(lmi.value(x)) is not None for lmi in lmis)


def barrier_minimize(c, lmis, x0, tol=1e-7, max_newton=200, tau0=1.0, certify=None,
                     growth=10.0):
    """Minimize ``c.x`` over ``{x : F_j(x) > 0}`` with a log-barrier path.

    ``certify(x, tau)`` should return ``(primal_value, dual_bound, extra)``; the
    run stops as soon as ``primal_value - dual_bound <= tol``.

    Returns:
        (x, tau, newton_iterations, certificate, converged)
    """
    x = np.array(x0, dtype=float)
    if not _feasible(lmis, x):
        raise SdpError("initial point is not strictly feasible")
    nu = sum(lmi.f0.shape[0] for lmi in lmis)
    tau = tau0
    its = 0
    cert = None
    while True:
        # centering by damped Newton
        while its < max_newton:
            terms = _barrier_terms(lmis, x)
            _, g, h = terms
            grad = tau * c + g
            try:
                step = -np.linalg.solve(h, grad)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(h, grad, rcond=None)[0]
            dec2 = float(-grad @ step)
            its += 1
            if dec2 / 2 <= 1e-10:
                break
            s = 1.0 / (1.0 + np.sqrt(max(dec2, 0.0))) if dec2 > 0.25 else 1.0
            f_cur = tau * c @ x + terms[0]
            while s > 1e-12:
                xn = x + s * step
                tn = _barrier_terms(lmis, xn) if _feasible(lmis, xn) else None
                if tn is not None and tau * c @ xn + tn[0] <= f_cur + 0.25 * s * (grad @ step):
                    break
                s *= 0.5
            else:
                break
            x = xn
            if dec2 / 2 <= 1e-8:
                break
        if certify is not None:
            cert = certify(x, tau)
            if cert[0] - cert[1] <= tol:
                return x, tau, its, cert, True
        elif nu / tau <= tol:
            return x, tau, its, cert, True
        if its >= max_newton:
            return x, tau, its, cert, False
        tau *= growth


def _ptrace_out(h, d_in, d_out):
    return qcore.partial_trace(h, [d_in, d_out], [0])


def _positive_part_trace(h):
    w = np.linalg.eigvalsh(qcore.hermitize(h))
    return float(w[w > 0].sum())


def diamond_dual_value(chi_omega, rho, d_in):
    """Dual objective ``d Tr[(sqrt(rho (x) I) chi sqrt(rho (x) I))_+]`` for a trace-2 ``rho``.

    Any positive ``rho`` with trace two gives a lower bound on the diamond
    distance.
    """
    d_out = chi_omega.shape[0] // d_in
    r = qcore.sqrtm_psd(np.kron(rho, np.eye(d_out)))
    return d_in * _positive_part_trace(r @ chi_omega @ r)


def _rho_from_slack(s):
    inv = np.linalg.inv(qcore.hermitize(s))
    inv = qcore.hermitize(inv)
    return 2 * inv / np.trace(inv).real


def diamond_distance(chi_omega, d_in: int, tol: float = 1e-6, max_newton: int = 200) -> SdpSolution:
    """``||Omega||_diamond`` for a Hermitian Choi-type difference ``chi_omega``.

    Solves ``min 2t`` subject to ``t I >= Tr_2 Z``, ``Z >= d chi``, ``Z >= 0``
    where ``d = d_in`` and ``chi`` is normalized so that a channel Choi has unit
    trace.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    chi = qcore.check_hermitian(chi_omega, "chi_omega")
    n = chi.shape[0]
    if n % d_in:
        raise ValueError("chi_omega dimension is not a multiple of d_in")
    d_out = n // d_in
    scale = np.abs(chi).max()
    if scale == 0:
        return SdpSolution(0.0, np.zeros_like(chi), 0.0, 0, 0.0, 0.0, rho=2 * np.eye(d_in) / d_in)
    d = d_in
    basis = hermitian_basis(n)
    nz = len(basis)
    m = 1 + nz
    # LMI 1: t I - Tr_2 Z
    c1 = np.zeros((m, d, d), dtype=complex)
    c1[0] = np.eye(d)
    c1[1:] = -np.array([_ptrace_out(b, d, d_out) for b in basis])
    l1 = _Lmi(np.zeros((d, d), dtype=complex), c1)
    # LMI 2: Z - d chi ; LMI 3: Z
    cz = np.zeros((m, n, n), dtype=complex)
    cz[1:] = basis
    l2 = _Lmi(-d * chi, cz)
    l3 = _Lmi(np.zeros((n, n), dtype=complex), cz)
    lmis = [l1, l2, l3]

    w, v = np.linalg.eigh(chi)
    z0 = d * (v * np.clip(w, 0, None)) @ v.conj().T + 0.5 * d * scale * np.eye(n)
    t0 = np.linalg.eigvalsh(_ptrace_out(z0, d, d_out)).max() + d * scale
    x0 = np.concatenate([[t0], hermitian_coords(z0)])
    cvec = np.zeros(m)
    cvec[0] = 2.0

    def unpack(x):
        return x[0], np.tensordot(x[1:], basis, axes=1)

    def certify(x, tau):
        t, z = unpack(x)
        primal = 2 * np.linalg.eigvalsh(_ptrace_out(z, d, d_out)).max()
        rho = _rho_from_slack(t * np.eye(d) - _ptrace_out(z, d, d_out))
        dual = diamond_dual_value(chi, rho, d)
        return primal, dual, rho

    x, tau, its, cert, ok = barrier_minimize(cvec, lmis, x0, tol=tol, max_newton=max_newton,
                                             tau0=1.0 / scale, certify=certify)
    t, z = unpack(x)
    primal, dual, rho = cert
    sol = SdpSolution(float(primal), qcore.hermitize(z), float(primal - dual), its, float(dual),
                      float(t), rho=rho, converged=ok)
    if not ok:
        raise SdpError(f"diamond SDP stopped after {its} Newton steps with gap {primal - dual:.3e}", sol)
    return sol


def optimal_program_sdp(processor: ProcessorMap, target, tol: float = 1e-6,
                        program_constraint: str = "full", max_newton: int = 200) -> SdpSolution:
    """Program minimizing the diamond distance to ``target`` over the constraint set.

    ``program_constraint`` is ``"full"`` (all program states) or ``"choi_set"``
    (states with ``Tr_B pi = I/d``, as used for single-copy PBT programs).
    """
    if program_constraint not in ("full", "choi_set"):
        raise ValueError(f"unknown program constraint {program_constraint!r}")
    target = qcore.check_hermitian(target, "target")
    d, d_out = processor.choi_d_in, processor.choi_d_out
    n = processor.choi_dim
    dp = processor.program_dim
    if target.shape != (n, n):
        raise ValueError("target dimension does not match the processor output")
    choi_d = None
    if program_constraint == "choi_set":
        choi_d = int(round(np.sqrt(dp)))
        if choi_d * choi_d != dp:
            raise ValueError("choi_set constraint needs a program on d x d dimensions")
    pi0, dirs = affine_state_basis(dp, choi_d)
    if len(dirs) == 0:
        raise SdpError("program constraint set is a single point")
    lam_pi0 = processor.apply(pi0)
    lam_dirs = np.array([processor.apply(b) for b in dirs])
    basis = hermitian_basis(n)
    nz, npi = len(basis), len(dirs)
    m = 1 + nz + npi
    c1 = np.zeros((m, d, d), dtype=complex)
    c1[0] = np.eye(d)
    c1[1:1 + nz] = -np.array([_ptrace_out(b, d, d_out) for b in basis])
    l1 = _Lmi(np.zeros((d, d), dtype=complex), c1)
    # Z - d (chi_E - Lambda(pi)) >= 0
    c2 = np.zeros((m, n, n), dtype=complex)
    c2[1:1 + nz] = basis
    c2[1 + nz:] = d * lam_dirs
    l2 = _Lmi(-d * (target - lam_pi0), c2)
    c3 = np.zeros((m, n, n), dtype=complex)
    c3[1:1 + nz] = basis
    l3 = _Lmi(np.zeros((n, n), dtype=complex), c3)
    c4 = np.zeros((m, dp, dp), dtype=complex)
    c4[1 + nz:] = dirs
    l4 = _Lmi(pi0, c4)
    lmis = [l1, l2, l3, l4]

    diff0 = target - lam_pi0
    w, v = np.linalg.eigh(qcore.hermitize(diff0))
    z0 = d * (v * np.clip(w, 0, None)) @ v.conj().T + 0.5 * np.eye(n)
    t0 = np.linalg.eigvalsh(_ptrace_out(z0, d, d_out)).max() + 1.0
    x0 = np.concatenate([[t0], hermitian_coords(z0), np.zeros(npi)])
    cvec = np.zeros(m)
    cvec[0] = 2.0

    def unpack(x):
        z = np.tensordot(x[1:1 + nz], basis, axes=1)
        pi = pi0 + np.tensordot(x[1 + nz:], dirs, axes=1)
        return x[0], z, qcore.hermitize(pi)

    def certify(x, tau):
        t, z, pi = unpack(x)
        chi_omega = target - processor.apply(pi)
        primal = 2 * np.linalg.eigvalsh(_ptrace_out(z, d, d_out)).max()
        rho = _rho_from_slack(t * np.eye(d) - _ptrace_out(z, d, d_out))
        w_hat = qcore.hermitize(np.linalg.inv(qcore.hermitize(z - d * chi_omega))) / tau
        r_inv_sqrt = qcore.inv_sqrtm_psd(np.kron(rho, np.eye(d_out)))
        s = np.linalg.eigvalsh(r_inv_sqrt @ w_hat @ r_inv_sqrt).max()
        if s > 1:
            w_hat = w_hat / s
        g = d * processor.dual(w_hat)
        p_mult = qcore.hermitize(np.linalg.inv(pi)) / tau
        if choi_d is None:
            h = np.linalg.eigvalsh(qcore.hermitize(g)).max()
        else:
            da = dp // choi_d
            y = qcore.partial_trace(g + p_mult, [da, choi_d], [0]) / choi_d
            shift = np.linalg.eigvalsh(qcore.hermitize(g - np.kron(y, np.eye(choi_d)))).max()
            h = (np.trace(y).real + shift * da) / da
        dual = d * np.real(np.trace(w_hat @ target)) - h
        return primal, dual, (rho, pi)

    x, tau, its, cert, ok = barrier_minimize(cvec, lmis, x0, tol=tol, max_newton=max_newton,
                                             certify=certify)
    t, z, pi = unpack(x)
    primal, dual, (rho, _) = cert
    sol = SdpSolution(float(primal), qcore.hermitize(z), float(primal - dual), its, float(dual),
                      float(t), pi=pi, rho=rho, converged=ok)
    if not ok:
        raise SdpError(f"program SDP stopped after {its} Newton steps with gap {primal - dual:.3e}", sol)
    return sol


def spectral_diamond_upper(chi_e, chi_pi, d_in: int | None = None) -> float:
    """Upper bound ``d ||Tr_2 |chi_E - chi_pi| ||_inf`` on the diamond distance."""
    diff = qcore.hermitize(np.asarray(chi_e, dtype=complex) - np.asarray(chi_pi, dtype=complex))
    n = diff.shape[0]
    if d_in is None:
        d_in = int(round(np.sqrt(n)))
    w, v = np.linalg.eigh(diff)
    absdiff = (v * np.abs(w)) @ v.conj().T
    part = qcore.partial_trace(absdiff, [d_in, n // d_in], [0])
    return float(d_in * max(np.linalg.eigvalsh(qcore.hermitize(part)).max(), 0.0))
