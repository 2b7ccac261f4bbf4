"""Dense linear algebra, quantum-state primitives and a small channel zoo.

Conventions used throughout the package:

* Operators are plain ``numpy`` complex arrays.
* A Choi matrix of a channel ``E`` from dimension ``d_in`` to ``d_out`` is
  ``(I (x) E)(Phi)`` with ``Phi`` the normalized maximally entangled state, so
  the reference subsystem comes first and the output subsystem second.  Its
  trace is one and ``Tr_out chi = I / d_in``.
* Vectorization is row-major, matching ``ndarray.reshape(-1)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.linalg

HERMITIAN_ATOL = 1e-12
SUPPORT_CUTOFF = 1e-10

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(label: str) -> np.ndarray:
    """Return the single-qubit Pauli matrix named by ``label`` (I, X, Y or Z)."""
    try:
        return _PAULI[label.upper()].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli label {label!r}") from None


# ---------------------------------------------------------------------------
# basic algebra


def kron(*ops: np.ndarray) -> np.ndarray:
    """Tensor product of any number of matrices or vectors."""
    out = np.ones((1,) * np.ndim(ops[0]), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def dag(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def hermitize(a: np.ndarray) -> np.ndarray:
    """Return ``(a + a^dagger) / 2``."""
    return (a + a.conj().T) / 2


def is_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= atol * scale)


def check_hermitian(a: np.ndarray, name: str = "operator", atol: float = 1e-9) -> np.ndarray:
    """Validate a Hermitian input and return its exactly Hermitian part."""
    a = np.asarray(a, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    if not is_hermitian(a, atol):
        raise ValueError(f"{name} is not Hermitian")
    return hermitize(a)


def is_density(rho: np.ndarray, atol: float = 1e-10) -> bool:
    rho = np.asarray(rho)
    if not is_hermitian(rho, max(atol, HERMITIAN_ATOL)):
        return False
    if abs(np.trace(rho).real - 1) > atol:
        return False
    return bool(np.linalg.eigvalsh(hermitize(rho))[0] >= -atol)


def partial_trace(m: np.ndarray, dims: Sequence[int], keep: Sequence[int] | int) -> np.ndarray:
    """Trace out every subsystem of ``m`` not listed in ``keep``.

    ``dims`` lists the subsystem dimensions in tensor order.  The kept
    subsystems stay in their original relative order.
    """
    dims = [int(x) for x in dims]
    n = int(np.prod(dims))
    m = np.asarray(m)
    if m.shape != (n, n):
        raise ValueError(f"matrix of shape {m.shape} does not match subsystem dims {dims}")
    keep = [keep] if isinstance(keep, (int, np.integer)) else sorted(int(k) for k in keep)
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    nsys = len(dims)
    traced = [k for k in range(nsys) if k not in keep]
    t = m.reshape(dims + dims)
    # einsum with explicit index lists handles any number of subsystems
    row = list(range(nsys))
    col = [nsys + k for k in range(nsys)]
    for k in traced:
        col[k] = row[k]
    out_idx = [row[k] for k in keep] + [col[k] for k in keep]
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return np.einsum(t, row + col, out_idx).reshape(dk, dk)


def permute_subsystems(m: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of the square operator ``m``.

    Factor ``perm[k]`` of the input becomes factor ``k`` of the output.
    """
    dims = list(dims)
    nsys = len(dims)
    t = m.reshape(dims + dims)
    axes = list(perm) + [nsys + p for p in perm]
    n = int(np.prod(dims))
    return t.transpose(axes).reshape(n, n)


# ---------------------------------------------------------------------------
# spectral tools


class HermEig(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def herm_eig(h: np.ndarray) -> HermEig:
    """Eigendecomposition of a Hermitian operator, eigenvalues descending."""
    h = check_hermitian(h)
    w, v = np.linalg.eigh(h)
    return HermEig(w[::-1].copy(), v[:, ::-1].copy())


def mat_func_psd(h: np.ndarray, f: Callable[[np.ndarray], np.ndarray],
                 support_cutoff: float = 0.0) -> np.ndarray:
    """Apply the scalar function ``f`` to the spectrum of ``h``.

    Eigenvalues with ``|lambda| <= support_cutoff * max|lambda|`` are mapped to
    zero instead of being passed to ``f``; this gives the support-restricted
    inverse powers needed for singular operators.
    """
    w, v = np.linalg.eigh(check_hermitian(h))
    scale = float(np.max(np.abs(w), initial=0.0))
    on = np.abs(w) > support_cutoff * scale if scale > 0 else np.zeros_like(w, dtype=bool)
    fw = np.zeros_like(w)
    if np.any(on):
        fw[on] = f(w[on])
    return (v * fw) @ v.conj().T


def sqrtm_psd(h: np.ndarray) -> np.ndarray:
    """Square root of a PSD operator; negative round-off eigenvalues are clipped."""
    w, v = np.linalg.eigh(check_hermitian(h))
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def inv_sqrtm_psd(h: np.ndarray, support_cutoff: float = SUPPORT_CUTOFF) -> np.ndarray:
    """``h^{-1/2}`` on the support of ``h``, zero on its kernel."""
    return mat_func_psd(h, lambda x: 1 / np.sqrt(np.abs(x)), support_cutoff)


# ---------------------------------------------------------------------------
# norms and distances


def trace_norm(h: np.ndarray) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(check_hermitian(h)))))


def schatten_p_norm(h: np.ndarray, p: float) -> float:
    if p < 1:
        raise ValueError("Schatten norms need p >= 1")
    s = np.abs(np.linalg.eigvalsh(check_hermitian(h)))
    if np.isinf(p):
        return float(np.max(s, initial=0.0))
    if p == 1:
        return float(np.sum(s))
    smax = float(np.max(s, initial=0.0))
    if smax == 0:
        return 0.0
    return float(smax * np.sum((s / smax) ** p) ** (1 / p))


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Root fidelity ``Tr sqrt(sqrt(rho) sigma sqrt(rho))``."""
    if rho.shape != sigma.shape:
        raise ValueError("states have different dimensions")
    s = np.linalg.svd(sqrtm_psd(rho) @ sqrtm_psd(sigma), compute_uv=False)
    return float(min(1.0, np.sum(s)))


def relative_entropy(rho: np.ndarray, sigma: np.ndarray, tol: float = 1e-12) -> float:
    """Quantum relative entropy ``S(rho || sigma)`` in bits.

    Returns ``inf`` when the support of ``rho`` is not contained in the
    support of ``sigma``.
    """
    if rho.shape != sigma.shape:
        raise ValueError("states have different dimensions")
    wr, vr = np.linalg.eigh(check_hermitian(rho))
    ws, vs = np.linalg.eigh(check_hermitian(sigma))
    wr = np.clip(wr, 0, None)
    ws = np.clip(ws, 0, None)
    cut = tol * max(1.0, float(ws.max(initial=0.0)))
    ker = ws <= cut
    # weight of rho on the kernel of sigma
    overlap = np.abs(vs.conj().T @ vr) ** 2  # overlap[j, k] = |<s_j|r_k>|^2
    leak = float(np.sum(overlap[ker] @ wr)) if np.any(ker) else 0.0
    if leak > 1e3 * cut:
        return float("inf")
    pos = wr > 0
    s_rr = float(np.sum(wr[pos] * np.log2(wr[pos])))
    log_s = np.zeros_like(ws)
    log_s[~ker] = np.log2(ws[~ker])
    s_rs = float(np.sum(overlap[~ker][:, pos] * log_s[~ker, None] * wr[None, pos]))
    return max(0.0, s_rr - s_rs)


# ---------------------------------------------------------------------------
# states and bases


def max_entangled(d: int) -> np.ndarray:
    """The vector ``d^{-1/2} sum_i |i, i>``."""
    if d < 2:
        raise ValueError("max_entangled needs d >= 2")
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1 / np.sqrt(d)
    return v


def max_entangled_projector(d: int) -> np.ndarray:
    v = max_entangled(d)
    return np.outer(v, v.conj())


def ket(index: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[index] = 1
    return v


def proj(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


def shift_clock(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Generalized Pauli ``X|j> = |j+1>`` and ``Z|j> = w^j |j>``."""
    x = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return x, z


def weyl_heisenberg(d: int) -> list[np.ndarray]:
    """The ``d^2`` unitaries ``X^a Z^b``, ordered with ``a`` varying fastest.

    For ``d = 2`` the order is ``I, X, Z, XZ``.
    """
    if d < 2:
        raise ValueError("weyl_heisenberg needs d >= 2")
    x, z = shift_clock(d)
    xp = [np.linalg.matrix_power(x, a) for a in range(d)]
    zp = [np.linalg.matrix_power(z, b) for b in range(d)]
    return [xp[a] @ zp[b] for b in range(d) for a in range(d)]


def bell_basis(d: int) -> list[np.ndarray]:
    """Maximally entangled basis ``(I (x) U_i)|Phi>`` over the Weyl-Heisenberg set."""
    phi = max_entangled(d)
    eye = np.eye(d)
    return [np.kron(eye, u) @ phi for u in weyl_heisenberg(d)]


# ---------------------------------------------------------------------------
# channels


@dataclass(frozen=True)
class KrausChannel:
    """A CPTP map given by Kraus operators of shape ``(d_out, d_in)``."""

    d_in: int
    d_out: int
    kraus_ops: tuple[np.ndarray, ...]
    label: str = ""

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus_ops)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        for k in ops:
            if k.shape != (self.d_out, self.d_in):
                raise ValueError(f"Kraus operator of shape {k.shape}, expected {(self.d_out, self.d_in)}")
            if not np.all(np.isfinite(k)):
                raise ValueError("Kraus operator has non-finite entries")
        completeness = sum(dag(k) @ k for k in ops)
        if np.max(np.abs(completeness - np.eye(self.d_in))) > 1e-9:
            raise ValueError("Kraus operators are not trace preserving")
        object.__setattr__(self, "kraus_ops", ops)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply_channel(self, rho)


def apply_channel(ch: KrausChannel, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ch.d_in, ch.d_in):
        raise ValueError(f"state of shape {rho.shape} does not match channel input {ch.d_in}")
    return sum(k @ rho @ dag(k) for k in ch.kraus_ops)


def choi_from_kraus(ch: KrausChannel) -> np.ndarray:
    """Choi matrix ``(I (x) E)(Phi)``; reference first, output second."""
    d = ch.d_in
    # |chi_k> = (I (x) K)|Phi> = vec of K^T / sqrt(d) in row-major order
    vecs = [k.T.reshape(-1) / np.sqrt(d) for k in ch.kraus_ops]
    v = np.array(vecs)
    return hermitize(v.T @ v.conj())


def choi_from_unitary(u: np.ndarray) -> np.ndarray:
    d = u.shape[0]
    v = u.T.reshape(-1) / np.sqrt(d)
    return np.outer(v, v.conj())


def kraus_from_choi(chi: np.ndarray, d_in: int, d_out: int | None = None,
                    cutoff: float = 1e-12) -> KrausChannel:
    """Kraus decomposition from the eigenvectors of a Choi matrix.

    Eigenvalues below ``cutoff`` (relative to the largest) are dropped.
    """
    n = chi.shape[0]
    d_out = n // d_in if d_out is None else d_out
    if d_in * d_out != n:
        raise ValueError("Choi matrix size does not match d_in * d_out")
    w, v = np.linalg.eigh(check_hermitian(chi))
    keep = w > cutoff * max(float(w.max()), 1e-300)
    ops = []
    for lam, vec in zip(w[keep][::-1], v[:, keep].T[::-1]):
        ops.append(np.sqrt(lam * d_in) * vec.reshape(d_in, d_out).T)
    return KrausChannel(d_in, d_out, tuple(ops))


def channel_from_unitary(u: np.ndarray, label: str = "") -> KrausChannel:
    u = np.asarray(u, dtype=complex)
    return KrausChannel(u.shape[1], u.shape[0], (u,), label)


def identity(d: int = 2) -> KrausChannel:
    return KrausChannel(d, d, (np.eye(d, dtype=complex),), "identity")


def rotation_unitary(theta: float, axis: str = "X") -> np.ndarray:
    """The qubit rotation ``exp(i theta sigma_axis)``."""
    return np.cos(theta) * np.eye(2) + 1j * np.sin(theta) * pauli(axis)


def rotation(theta: float, axis: str = "X") -> KrausChannel:
    return channel_from_unitary(rotation_unitary(theta, axis), f"R_{axis}({theta:g})")


def pauli_channel(probs: Sequence[float]) -> KrausChannel:
    """``rho -> sum_i p_i U_i rho U_i^dagger`` over the Weyl-Heisenberg unitaries."""
    p = np.asarray(probs, dtype=float)
    d = int(round(np.sqrt(p.size)))
    if d * d != p.size or d < 2:
        raise ValueError("Pauli channel needs d^2 probabilities")
    if np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-9:
        raise ValueError("Pauli channel probabilities must form a distribution")
    p = np.clip(p, 0, None)
    ops = tuple(np.sqrt(pi) * u for pi, u in zip(p, weyl_heisenberg(d)) if pi > 0)
    return KrausChannel(d, d, ops, "pauli")


def depolarizing(p: float, d: int = 2) -> KrausChannel:
    """``rho -> (1 - p) rho + p I / d``."""
    if not 0 <= p <= 1:
        raise ValueError("depolarizing probability must lie in [0, 1]")
    probs = np.full(d * d, p / d**2)
    probs[0] += 1 - p
    ch = pauli_channel(probs)
    return KrausChannel(d, d, ch.kraus_ops, f"depolarizing({p:g})")


def amplitude_damping(p: float) -> KrausChannel:
    if not 0 <= p <= 1:
        raise ValueError("damping probability must lie in [0, 1]")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - p)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(p)], [0, 0]], dtype=complex)
    return KrausChannel(2, 2, (k0, k1), f"amplitude_damping({p:g})")


# ---------------------------------------------------------------------------
# random objects (used by tests and demos)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return hermitize(z)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random state from the induced (Hilbert-Schmidt for full rank) measure."""
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return hermitize(rho / np.trace(rho).real)


def random_channel(d_in: int, d_out: int, rng: np.random.Generator, n_kraus: int | None = None) -> KrausChannel:
    n_kraus = d_in * d_out if n_kraus is None else n_kraus
    g = rng.standard_normal((n_kraus * d_out, d_in)) + 1j * rng.standard_normal((n_kraus * d_out, d_in))
    q, _ = np.linalg.qr(g)
    ops = tuple(q[k * d_out:(k + 1) * d_out] for k in range(n_kraus))
    return KrausChannel(d_in, d_out, ops, "random")


# ---------------------------------------------------------------------------
# JSON exchange format


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in m.reshape(-1)],
    }


def matrix_from_json(obj: dict | str) -> np.ndarray:
    if isinstance(obj, str):
        obj = json.loads(obj)
    rows, cols = int(obj["rows"]), int(obj["cols"])
    data = np.asarray(obj["data"], dtype=float)
    if data.shape != (rows * cols, 2):
        raise ValueError("matrix data length does not match rows * cols")
    out = (data[:, 0] + 1j * data[:, 1]).reshape(rows, cols)
    if not np.all(np.isfinite(out)):
        raise ValueError("matrix has non-finite entries")
    return out


def channel_to_json(ch: KrausChannel) -> dict:
    return {"d_in": ch.d_in, "d_out": ch.d_out, "kraus": [matrix_to_json(k) for k in ch.kraus_ops]}


def channel_from_json(obj: dict | str) -> KrausChannel:
    if isinstance(obj, str):
        obj = json.loads(obj)
    ops = tuple(matrix_from_json(k) for k in obj["kraus"])
    return KrausChannel(int(obj["d_in"]), int(obj["d_out"]), ops)


def expm_hermitian(h: np.ndarray, t: float = 1.0) -> np.ndarray:
    """``exp(i t h)`` for Hermitian ``h``."""
    return scipy.linalg.expm(1j * t * check_hermitian(h))
