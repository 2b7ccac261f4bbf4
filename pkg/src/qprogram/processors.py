"""Processor maps: linear CPTP maps from program states to output Choi matrices.

A :class:`ProcessorMap` wraps a pair of callables ``apply`` and ``dual`` with
``Tr[X apply(P)] = Tr[dual(X) P]``.  Explicit representations (transfer
matrix, Kraus operators) are built lazily, only when something asks for them.

Subsystem layouts
-----------------
* teleportation: program ``A (x) B`` with ``d x d`` qudits.
* PBT: program ordered port by port, ``(A_1 B_1)(A_2 B_2)...(A_N B_N)``, so
  ``chi^{(x)N}`` is a plain Kronecker power.  The POVM acts on
  ``A_1 ... A_N C``.
* PQC: ``B (x) A (x) R_0 (x) R_1 ... (x) R_N`` where ``B`` is the Choi
  reference, ``A`` the system qubit, ``R_0`` the dilation register and
  ``R_j`` the control registers.  The program lives on ``R_0 ... R_N``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from . import qcore
from .qcore import dag, hermitize, kron

DEFAULT_DIM_LIMIT = 2**13


class ProcessorMap:
    """The map ``pi -> chi_pi`` of a programmable processor, and its dual."""

    def __init__(self, program_dim: int, choi_d_in: int, choi_d_out: int,
                 apply: Callable[[np.ndarray], np.ndarray],
                 dual: Callable[[np.ndarray], np.ndarray],
                 label: str = "", kraus_ops: Sequence[np.ndarray] | None = None,
                 trace_preserving: bool = True):
        self.program_dim = int(program_dim)
        self.choi_d_in = int(choi_d_in)
        self.choi_d_out = int(choi_d_out)
        self.label = label
        # False for maps that are only trace preserving on an affine slice
        # of program space (the reduced PBT map).
        self.trace_preserving = trace_preserving
        self._apply = apply
        self._dual = dual
        if kraus_ops is not None:
            self.__dict__["kraus_ops"] = [np.asarray(k, dtype=complex) for k in kraus_ops]

    def __repr__(self):
        return (f"ProcessorMap({self.label!r}, program_dim={self.program_dim}, "
                f"choi=({self.choi_d_in}, {self.choi_d_out}))")

    @property
    def choi_dim(self) -> int:
        return self.choi_d_in * self.choi_d_out

    @classmethod
    def from_kraus(cls, kraus_ops: Sequence[np.ndarray], choi_d_in: int, choi_d_out: int,
                   label: str = "") -> "ProcessorMap":
        ops = np.array([np.asarray(k, dtype=complex) for k in kraus_ops])

        def apply(pi):
            return np.einsum("kia,ab,kjb->ij", ops, pi, ops.conj(), optimize=True)

        def dual(x):
            return np.einsum("kia,ij,kjb->ab", ops.conj(), x, ops, optimize=True)

        return cls(ops.shape[2], choi_d_in, choi_d_out, apply, dual, label, kraus_ops=list(ops))

    def apply(self, pi: np.ndarray) -> np.ndarray:
        pi = np.asarray(pi, dtype=complex)
        if pi.shape != (self.program_dim, self.program_dim):
            raise ValueError(f"program of shape {pi.shape}, expected dimension {self.program_dim}")
        return self._apply(pi)

    __call__ = apply

    def dual(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape != (self.choi_dim, self.choi_dim):
            raise ValueError(f"operator of shape {x.shape}, expected dimension {self.choi_dim}")
        return self._dual(x)

    @cached_property
    def transfer_matrix(self) -> np.ndarray:
        """Matrix ``T`` with ``vec(apply(P)) = T vec(P)`` (row-major vec).

        Built column by column from the dual map, which is cheaper than
        applying the map to every program basis element when the program
        space is large.
        """
        n, dp = self.choi_dim, self.program_dim
        t = np.empty((n * n, dp * dp), dtype=complex)
        for i in range(n):
            for j in range(n):
                e = np.zeros((n, n), dtype=complex)
                e[j, i] = 1
                # Tr[E_ji apply(P)] = apply(P)[i, j] = Tr[dual(E_ji) P]
                t[i * n + j] = self._dual(e).T.reshape(-1)
        return t

    @cached_property
    def kraus_ops(self) -> list[np.ndarray]:
        """A minimal Kraus set ``A_k`` (shape ``choi_dim x program_dim``)."""
        n, dp = self.choi_dim, self.program_dim
        # Choi of the processor map itself: J[(a,i),(b,j)] = T[(i,j),(a,b)]
        j = self.transfer_matrix.reshape(n, n, dp, dp).transpose(2, 0, 3, 1).reshape(dp * n, dp * n)
        w, v = np.linalg.eigh(hermitize(j))
        keep = w > 1e-12 * max(w.max(), 1e-300)
        ops = []
        for lam, vec in zip(w[keep][::-1], v[:, keep].T[::-1]):
            ops.append(np.sqrt(lam) * vec.reshape(dp, n).T)
        return ops


def _kraus_superop_apply(ops):
    return ProcessorMap.from_kraus(ops, 1, 1)._apply


# ---------------------------------------------------------------------------
# teleportation


@dataclass(frozen=True)
class TeleSpec:
    d: int
    unitaries: tuple = field(repr=False)
    bell_projectors: tuple = field(repr=False)


def tele_spec(d: int) -> TeleSpec:
    us = tuple(qcore.weyl_heisenberg(d))
    bells = tuple(qcore.proj(v) for v in qcore.bell_basis(d))
    return TeleSpec(d, us, bells)


def teleportation_processor(d: int = 2) -> ProcessorMap:
    """Standard teleportation with a general program ``pi_AB``.

    The map twirls the program over ``U_i^* (x) U_i``; it is self-dual.
    """
    if d < 2:
        raise ValueError("teleportation needs d >= 2")
    ops = [np.kron(u.conj(), u) / d for u in qcore.weyl_heisenberg(d)]
    pm = ProcessorMap.from_kraus(ops, d, d, label=f"teleport(d={d})")
    return pm


# ---------------------------------------------------------------------------
# port-based teleportation


@dataclass(frozen=True)
class PbtSpec:
    n_ports: int
    d: int
    povm: tuple = field(repr=False)
    sigma_ac: np.ndarray = field(repr=False)
    delta: np.ndarray = field(repr=False)


def _embed_pair_projector(d: int, n_ports: int, i: int) -> np.ndarray:
    """``Phi`` on ``A_i`` and ``C`` inside ``A_1 ... A_N C`` (identity elsewhere)."""
    phi = qcore.max_entangled_projector(d)
    rest = np.eye(d ** (n_ports - 1))
    # place the pair as the first two factors, then move them into position
    op = np.kron(phi, rest)
    # current order: A_i, C, (A_k for k != i)
    others = [k for k in range(n_ports) if k != i]
    current = [i, n_ports] + others
    perm = [current.index(k) for k in range(n_ports + 1)]
    return qcore.permute_subsystems(op, [d] * (n_ports + 1), perm)


def pbt_spec(n_ports: int, d: int = 2, dim_limit: int = DEFAULT_DIM_LIMIT) -> PbtSpec:
    """Standard PBT measurement built from maximally entangled projectors."""
    if n_ports < 1:
        raise ValueError("PBT needs at least one port")
    if d ** (n_ports + 1) > dim_limit:
        raise ValueError(f"POVM dimension d^(N+1) = {d ** (n_ports + 1)} exceeds limit {dim_limit}")
    phis = [_embed_pair_projector(d, n_ports, i) for i in range(n_ports)]
    sigma = sum(phis)
    s_inv = qcore.inv_sqrtm_psd(sigma)
    tilde = [hermitize(s_inv @ p @ s_inv) for p in phis]
    delta = hermitize(np.eye(d ** (n_ports + 1)) - sum(tilde)) / n_ports
    povm = tuple(t + delta for t in tilde)
    return PbtSpec(n_ports, d, povm, sigma, delta)


def _pbt_port_tensors(spec: PbtSpec) -> list[np.ndarray]:
    """POVM elements reshaped as ``P[a, c, a', c']`` with ``a`` on all of A."""
    da = spec.d ** spec.n_ports
    return [p.reshape(da, spec.d, da, spec.d) for p in spec.povm]


def pbt_processor(n_ports: int, d: int = 2, dim_limit: int = DEFAULT_DIM_LIMIT) -> ProcessorMap:
    """PBT processor over general programs on ``(A_1 B_1) ... (A_N B_N)``.

    Output Choi ordering is ``D (x) B_out`` where ``D`` purifies Alice's input.
    """
    if d ** (2 * n_ports + 1) > dim_limit:
        raise ValueError(f"PBT dimension d^(2N+1) = {d ** (2 * n_ports + 1)} exceeds limit {dim_limit}")
    spec = pbt_spec(n_ports, d, dim_limit)
    n = n_ports
    ports = _pbt_port_tensors(spec)
    da = d**n
    dims = [d] * (2 * n)
    # program tensor axes: a_1 b_1 a_2 b_2 ... ; A axes are even, B axes odd
    a_axes = list(range(0, 2 * n, 2))
    b_axes = list(range(1, 2 * n, 2))

    def reduced_port(pi, i):
        # R_i[a', beta, a, beta''] = sum over other B ports of pi
        t = pi.reshape(dims + dims)
        row = list(range(2 * n))
        col = list(range(2 * n, 4 * n))
        for k in range(n):
            if k != i:
                col[b_axes[k]] = row[b_axes[k]]
        out = [row[a] for a in a_axes] + [row[b_axes[i]]] + [col[a] for a in a_axes] + [col[b_axes[i]]]
        return np.einsum(t, row + col, out).reshape(da, d, da, d)

    def apply(pi):
        out = np.zeros((d, d, d, d), dtype=complex)
        for i, p in enumerate(ports):
            r = reduced_port(pi, i)
            # out[delta, beta, delta'', beta''] = (1/d) sum P[a, delta'', a', delta] R[a', beta, a, beta'']
            out += np.einsum("xeyf,ybxg->fbeg", p, r, optimize=True)
        return out.reshape(d * d, d * d) / d

    def dual(x):
        xt = x.reshape(d, d, d, d)  # X[delta'', beta'', delta, beta]
        res = np.zeros([d] * (4 * n), dtype=complex)
        for i, p in enumerate(ports):
            # G[a, beta'', a', beta] = (1/d) sum X[delta'', beta'', delta, beta] P[a, delta'', a', delta]
            g = np.einsum("egfb,xeyf->xgyb", xt, p, optimize=True) / d
            g = g.reshape([d] * n + [d] + [d] * n + [d])
            # assemble G_i (x) identity on the other B ports, in program order
            row = list(range(2 * n))
            col = list(range(2 * n, 4 * n))
            for k in range(n):
                if k != i:
                    col[b_axes[k]] = row[b_axes[k]]
            g_idx = [row[a] for a in a_axes] + [row[b_axes[i]]] + [col[a] for a in a_axes] + [col[b_axes[i]]]
            eye_terms = []
            for k in range(n):
                if k != i:
                    eye_terms += [np.eye(d), [row[b_axes[k]], 4 * n + k]]
            # identity factors carry a dummy column label that is then renamed
            out_idx = row + col
            operands = [g, g_idx]
            for k in range(n):
                if k != i:
                    out_idx[2 * n + b_axes[k]] = 4 * n + k
            operands += eye_terms
            res += np.einsum(*operands, out_idx)
        dp = d ** (2 * n)
        return res.reshape(dp, dp)

    pm = ProcessorMap(d ** (2 * n), d, d, apply, dual, label=f"pbt(N={n}, d={d})")
    pm.spec = spec
    return pm


def pbt_reduced_processor(n_ports: int, d: int = 2, dim_limit: int = DEFAULT_DIM_LIMIT) -> ProcessorMap:
    """PBT acting on ``chi^{(x)N}``, written as a linear map of the single copy ``chi``.

    The partial traces ``Tr_{other A}[Pi_i]`` are contracted once here, so each
    evaluation only touches ``d^2 x d^2`` operators.  The map agrees with
    :func:`pbt_processor` on ``chi^{(x)N}`` whenever ``Tr_B chi = I/d``, and
    it is trace preserving only on that set.
    """
    spec = pbt_spec(n_ports, d, dim_limit)
    n = n_ports
    q = np.zeros((d * d, d * d), dtype=complex)
    for i, p in enumerate(spec.povm):
        # keep A_i and C out of A_1 ... A_N C
        q += qcore.partial_trace(p, [d] * (n + 1), [i, n])
    q /= d ** (n - 1)
    qt = q.reshape(d, d, d, d)

    def apply(chi):
        r = chi.reshape(d, d, d, d)
        out = np.einsum("xeyf,ybxg->fbeg", qt, r)
        return out.reshape(d * d, d * d) / d

    def dual(x):
        xt = x.reshape(d, d, d, d)
        g = np.einsum("egfb,xeyf->xgyb", xt, qt) / d
        return g.reshape(d * d, d * d)

    pm = ProcessorMap(d * d, d, d, apply, dual, label=f"pbt_reduced(N={n}, d={d})",
                      trace_preserving=False)
    pm.spec = spec
    pm.port_operator = q
    return pm


def symmetrize_program(pi: np.ndarray, n_ports: int, d: int = 2) -> np.ndarray:
    """Average of a PBT program over all permutations of its ports."""
    if n_ports > 5:
        raise ValueError("port symmetrization enumerates N! permutations; N <= 5 supported")
    dp = d * d
    acc = np.zeros_like(pi, dtype=complex)
    perms = list(itertools.permutations(range(n_ports)))
    for s in perms:
        acc += qcore.permute_subsystems(pi, [dp] * n_ports, s)
    return acc / len(perms)


def symmetric_param_count(n_ports: int, d: int = 2) -> int:
    """Number of free parameters of a port-symmetric PBT program."""
    return math.comb(n_ports + d**4 - 1, d**4 - 1)


# ---------------------------------------------------------------------------
# parametric quantum circuits


@dataclass(frozen=True)
class PqcSpec:
    """Two-gate PQC with qubit control registers.

    ``h0``/``h1`` act on system ``A`` and dilation register ``R_0``.  Control
    register ``R_j`` in ``|b>`` selects ``exp(i t_b H_b)``.
    """

    h0: np.ndarray = field(repr=False)
    h1: np.ndarray = field(repr=False)
    t0: float = 1.0
    t1: float = 1.0
    n_registers: int = 1
    theta0: np.ndarray = field(default_factory=lambda: qcore.ket(0, 2), repr=False)
    binary_powers: tuple = ()
    reference_generator: np.ndarray | None = field(default=None, repr=False)

    @property
    def u0(self) -> np.ndarray:
        return qcore.expm_hermitian(self.h0, self.t0)

    @property
    def u1(self) -> np.ndarray:
        return qcore.expm_hermitian(self.h1, self.t1)

    @property
    def conditional_gates(self) -> list[np.ndarray]:
        return [conditional_gate(self, j) for j in range(1, self.n_registers + 1)]


def amplitude_damping_hamiltonian(p: float) -> np.ndarray:
    """Generator with ``exp(i H)`` a dilation of amplitude damping (register in ``|0>``)."""
    x, y = qcore.pauli("X"), qcore.pauli("Y")
    return np.arcsin(np.sqrt(p)) / 2 * (np.kron(y, x) - np.kron(x, y))


def pqc_ad_default(p: float = 0.0, n_registers: int = 1) -> PqcSpec:
    """Default universal gate pair, chosen with amplitude damping in mind."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    x, y, z = qcore.pauli("X"), qcore.pauli("Y"), qcore.pauli("Z")
    alpha = np.sqrt(2)
    h0 = alpha * (np.kron(y, x) - np.kron(x, y))
    h1 = np.kron(np.sqrt(2) * z + np.sqrt(3) * y + np.sqrt(5) * x, y + np.sqrt(2) * z)
    return PqcSpec(h0, h1, 1.0, 1.0, n_registers, qcore.ket(0, 2),
                   reference_generator=amplitude_damping_hamiltonian(p))


def conditional_gate(spec: PqcSpec, j: int) -> np.ndarray:
    """``U_hat_j`` on ``A (x) R_0 (x) R_1 ... R_N``, controlled by register ``R_j``."""
    n = spec.n_registers
    if not 1 <= j <= n:
        raise ValueError("register index out of range")
    before = 2 ** (j - 1)
    after = 2 ** (n - j)
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    return (kron(spec.u0, np.eye(before), p0, np.eye(after))
            + kron(spec.u1, np.eye(before), p1, np.eye(after)))


def pqc_total_unitary(spec: PqcSpec) -> np.ndarray:
    """``U_hat_N ... U_hat_1`` on ``A (x) R_0 ... R_N`` (register 1 acts first)."""
    dim = 2 ** (spec.n_registers + 2)
    u = np.eye(dim, dtype=complex)
    # each conditional gate is block diagonal in the control basis, so the
    # product is too: for control string b the block is U_{b_N} ... U_{b_1}
    for j in range(1, spec.n_registers + 1):
        u = conditional_gate(spec, j) @ u
    return u


def pqc_processor(spec: PqcSpec, dim_limit: int = DEFAULT_DIM_LIMIT) -> ProcessorMap:
    """Processor map ``pi -> Tr_R[U (Phi_BA (x) pi) U^dagger]``."""
    n = spec.n_registers
    if n < 1:
        raise ValueError("PQC needs at least one control register")
    if 2 ** (n + 3) > dim_limit:
        raise ValueError(f"PQC dimension 2^(N+3) = {2 ** (n + 3)} exceeds limit {dim_limit}")
    dr = 2 ** (n + 1)
    u = pqc_total_unitary(spec)  # on A (x) R
    phi = qcore.max_entangled(2)  # on B (x) A
    # W[(b, a'), r', r] = sum_a phi[b, a] U[(a', r'), (a, r)]
    ut = u.reshape(2, dr, 2, dr)
    w = np.einsum("ba,xsar->bxsr", phi.reshape(2, 2), ut).reshape(4, dr, dr)
    ops = [w[:, r, :] for r in range(dr)]
    pm = ProcessorMap.from_kraus(ops, 2, 2, label=f"pqc(N={n})")
    pm.spec = spec
    return pm


def stinespring_choi(u: np.ndarray, theta0: np.ndarray) -> np.ndarray:
    """Choi of ``rho -> Tr_R0[U (rho (x) theta0) U^dagger]`` for ``U`` on ``A (x) R_0``."""
    da = u.shape[0] // theta0.shape[0]
    theta = theta0 if theta0.ndim == 2 else qcore.proj(theta0)
    dr = theta.shape[0]
    phi = qcore.max_entangled_projector(da)
    big = kron(np.eye(da), u) @ np.kron(phi, theta) @ dag(kron(np.eye(da), u))
    return qcore.partial_trace(big, [da, da, dr], [0, 1])


def measurement_based_pqc_choi(spec: PqcSpec, pi: np.ndarray) -> np.ndarray:
    """Processor output from the register-measuring form of the PQC.

    Only the diagonal of ``pi`` in the control basis matters in this form; the
    ``R_0`` block conditional on each control string is kept coherent.
    """
    n = spec.n_registers
    dc = 2**n
    t = pi.reshape(2, dc, 2, dc)
    out = np.zeros((4, 4), dtype=complex)
    for idx, bits in enumerate(itertools.product((0, 1), repeat=n)):
        weight_block = t[:, idx, :, idx]  # R_0 block for this control string
        tr = np.trace(weight_block).real
        if tr <= 0:
            continue
        u = np.eye(4, dtype=complex)
        for b in bits:  # bits[0] is register 1, applied first
            u = (spec.u0 if b == 0 else spec.u1) @ u
        out += tr * stinespring_choi(u, weight_block / tr)
    return out


# ---------------------------------------------------------------------------
# JSON processor specs


def processor_from_spec(obj: dict) -> ProcessorMap:
    """Build a processor from ``{"type": "teleport"|"pbt"|"pbt_reduced"|"pqc", ...}``."""
    kind = obj.get("type")
    d = int(obj.get("d", 2))
    limit = int(obj.get("dim_limit", DEFAULT_DIM_LIMIT))
    if kind == "teleport":
        return teleportation_processor(d)
    if kind == "pbt":
        return pbt_processor(int(obj["n_ports"]), d, limit)
    if kind == "pbt_reduced":
        return pbt_reduced_processor(int(obj["n_ports"]), d, limit)
    if kind == "pqc":
        cfg = dict(obj.get("pqc", {}))
        n = int(cfg.get("n_registers", obj.get("n_ports", 1)))
        if "h0" in cfg:
            h0 = qcore.matrix_from_json(cfg["h0"])
            h1 = qcore.matrix_from_json(cfg["h1"])
            spec = PqcSpec(h0, h1, float(cfg.get("t0", 1.0)), float(cfg.get("t1", 1.0)), n)
        else:
            spec = pqc_ad_default(float(cfg.get("p", 0.0)), n)
        return pqc_processor(spec, limit)
    raise ValueError(f"unknown processor type {kind!r}")


def pbt_choi_program(chi: np.ndarray, n_ports: int) -> np.ndarray:
    """The natural PBT program ``chi^{(x)N}``."""
    return kron(*([chi] * n_ports))


def _expm(h):
    return scipy.linalg.expm(h)
