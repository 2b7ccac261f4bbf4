"""Learning program states: projections, subgradient and Frank-Wolfe methods.

All optimizers take a :class:`~qprogram.costs.CostFunction`, a feasible
initial program and an :class:`OptimizerConfig`, and return an
:class:`OptimizerTrace` holding per-iteration records plus the best program
seen.  Iteration indices start at 1.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import qcore
from .costs import CostFunction
from .processors import ProcessorMap

FEASIBILITY_ATOL = 1e-8


# ---------------------------------------------------------------------------
# projections


def simplex_project(x) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex.

    With ``x`` sorted decreasingly, ``s = max{k : x_k > (sum_{j<=k} x_j - 1)/k}``
    and ``theta = (sum_{j<=s} x_j - 1)/s``; the result is ``max(x - theta, 0)``.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("simplex_project needs finite entries")
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(x) + 1)
    s = k[u > css / k][-1]
    theta = css[s - 1] / s
    return np.maximum(x - theta, 0.0)


def project_to_states(x: np.ndarray) -> np.ndarray:
    """Closest density operator to a Hermitian ``x`` in Frobenius norm."""
    w, v = np.linalg.eigh(qcore.hermitize(np.asarray(x, dtype=complex)))
    lam = simplex_project(w)
    return qcore.hermitize((v * lam) @ v.conj().T)


def _affine_choi_project(x: np.ndarray, d: int) -> np.ndarray:
    """Projection onto the affine set ``{Tr_B X = I/d}`` (no positivity)."""
    db = x.shape[0] // d
    part = qcore.partial_trace(x, [d, db], [0])
    return x - np.kron(part - np.eye(d) / d, np.eye(db) / db)


def project_to_choi_set(x: np.ndarray, d: int, tol: float = 1e-10, max_sweeps: int = 10_000) -> np.ndarray:
    """Closest state with ``Tr_B pi = I/d`` to a Hermitian ``x`` (Dykstra's method).

    The program lives on ``A (x) B`` with ``d = dim A``.  Raises
    ``RuntimeError`` if the alternating projections do not settle.
    """
    x = qcore.hermitize(np.asarray(x, dtype=complex))
    if x.shape[0] % d:
        raise ValueError("dimension is not a multiple of d")
    y = x.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(max_sweeps):
        a = _affine_choi_project(y + p, d)
        p = y + p - a
        b = project_to_states(a + q)
        q = a + q - b
        change = np.linalg.norm(b - y)
        y = b
        if change < tol and np.linalg.norm(a - b) < tol:
            # land exactly on the affine set; positivity is then off by O(tol)
            return y
    raise RuntimeError(f"Choi-set projection did not converge in {max_sweeps} sweeps")


def project_to_basis_diagonal(x: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Closest state diagonal in a fixed orthonormal basis (columns of ``basis``)."""
    diag = np.real(np.einsum("ki,kl,li->i", basis.conj(), x, basis))
    return qcore.hermitize((basis * simplex_project(diag)) @ basis.conj().T)


def extreme_eigvec(h: np.ndarray, which: str = "min", rel_tol: float = 1e-9) -> tuple[float, np.ndarray]:
    """Eigenvalue and a reproducible eigenvector at the bottom or top of the spectrum.

    When the extreme eigenvalue is degenerate, the vector is the normalized
    projection of the computational basis vector with the largest overlap with
    the eigenspace (lowest index among ties).  The global phase makes the
    first largest entry real positive.
    """
    w, v = np.linalg.eigh(qcore.hermitize(h))
    scale = max(1.0, np.abs(w).max())
    if which == "min":
        lam = w[0]
        sel = w <= lam + rel_tol * scale
    elif which == "max":
        lam = w[-1]
        sel = w >= lam - rel_tol * scale
    else:
        raise ValueError("which must be 'min' or 'max'")
    space = v[:, sel]
    if space.shape[1] == 1:
        vec = space[:, 0]
    else:
        proj = space @ space.conj().T
        diag = np.real(np.diag(proj))
        # ties are common (e.g. Bell-diagonal spaces); break them by index
        j = int(np.flatnonzero(diag >= diag.max() - 1e-8)[0])
        vec = proj[:, j] / np.linalg.norm(proj[:, j])
    mag = np.abs(vec)
    k = int(np.flatnonzero(mag >= mag.max() - 1e-8)[0])
    vec = vec * (abs(vec[k]) / vec[k])
    return float(lam), vec


# ---------------------------------------------------------------------------
# configuration and traces


@dataclass
class ClassicalProgramBasis:
    """Fixed orthonormal basis (columns) of program space for classical programs."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=complex)
        if not np.allclose(v.conj().T @ v, np.eye(v.shape[1]), atol=1e-10):
            raise ValueError("basis vectors are not orthonormal")
        self.vectors = v

    @classmethod
    def computational(cls, dim: int) -> "ClassicalProgramBasis":
        return cls(np.eye(dim, dtype=complex))


@dataclass
class OptimizerConfig:
    """Settings shared by all optimizers.

    Attributes:
        iterations: number of update steps.
        schedule: ``"inv_sqrt"`` (``c/sqrt(k)``), ``"harmonic"`` (``a/(b+k)``),
            ``"fw_classic"`` (``2/(k+2)``) or, for projected subgradient only,
            ``"polyak"`` (``(C - target_value)/||g||^2``).  ``None`` picks the
            method's default.
        target_value: known lower bound on the cost used by the Polyak step.
        constraint: ``"full_states"``, ``"classical_diagonal"`` or ``"choi_set"``.
        basis: basis for ``classical_diagonal`` (computational basis if omitted).
        choi_d: input dimension ``d`` for the ``choi_set`` constraint.
        eta_scale: smoothing radius scale ``eta_0`` in ``eta_k = eta_0/sqrt(k)``.
        max_samples: cap on perturbation samples per stochastic iteration.
        early_stop: stop when the best cost improves by less than 1e-10 over 50 steps.
    """

    iterations: int = 500
    schedule: str | None = None
    c: float = 1.0
    a: float = 1.0
    b: float = 10.0
    target_value: float = 0.0
    seed: int = 0
    constraint: str = "full_states"
    basis: ClassicalProgramBasis | None = None
    choi_d: int | None = None
    eta_scale: float = 0.1
    max_samples: int | None = 50
    early_stop: bool = False
    linesearch_evals: int = 40
    callback: Callable[[int, np.ndarray], None] | None = field(default=None, repr=False)

    def step_size(self, k: int, default: str) -> float:
        sched = self.schedule or default
        if sched == "inv_sqrt":
            return self.c / math.sqrt(k)
        if sched == "harmonic":
            return self.a / (self.b + k)
        if sched == "fw_classic":
            return 2.0 / (k + 2)
        raise ValueError(f"unknown schedule {sched!r}")


@dataclass
class TraceRecord:
    iter: int
    cost: float
    step_norm: float
    wall_time: float


@dataclass
class OptimizerTrace:
    records: list = field(default_factory=list)
    best_cost: float = math.inf
    best_program: np.ndarray | None = None
    final_program: np.ndarray | None = None
    method: str = ""

    def add(self, k, cost, step_norm, wall_time, program):
        self.records.append(TraceRecord(k, float(cost), float(step_norm), float(wall_time)))
        if cost < self.best_cost:
            self.best_cost = float(cost)
            self.best_program = program.copy()

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.records])

    def to_csv(self, path=None, include_time: bool = True) -> str:
        """CSV with columns ``iter, cost, step_norm, wall_ms``.

        With ``include_time=False`` the ``wall_ms`` column is dropped so that
        the output is reproducible byte for byte.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        header = ["iter", "cost", "step_norm"] + (["wall_ms"] if include_time else [])
        w.writerow(header)
        for r in self.records:
            row = [r.iter, repr(r.cost), repr(r.step_norm)]
            if include_time:
                row.append(f"{1000 * r.wall_time:.3f}")
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as f:
                f.write(text)
        return text


def _check_init(pi, cfg: OptimizerConfig, dim: int) -> np.ndarray:
    pi = np.asarray(pi, dtype=complex)
    if pi.shape != (dim, dim):
        raise ValueError(f"initial program has shape {pi.shape}, expected ({dim}, {dim})")
    if not qcore.is_density(pi, FEASIBILITY_ATOL):
        raise ValueError("initial program is not a density operator")
    if cfg.constraint == "choi_set":
        d = _choi_d(cfg, dim)
        part = qcore.partial_trace(pi, [d, dim // d], [0])
        if np.abs(part - np.eye(d) / d).max() > FEASIBILITY_ATOL:
            raise ValueError("initial program violates Tr_B pi = I/d")
    elif cfg.constraint == "classical_diagonal":
        b = _basis(cfg, dim).vectors
        m = b.conj().T @ pi @ b
        if np.abs(m - np.diag(np.diag(m))).max() > FEASIBILITY_ATOL:
            raise ValueError("initial program is not diagonal in the classical basis")
    elif cfg.constraint != "full_states":
        raise ValueError(f"unknown constraint {cfg.constraint!r}")
    return qcore.hermitize(pi)


def _choi_d(cfg, dim):
    d = cfg.choi_d or int(round(math.sqrt(dim)))
    if dim % d:
        raise ValueError("choi_d does not divide the program dimension")
    return d


def _basis(cfg, dim):
    return cfg.basis or ClassicalProgramBasis.computational(dim)


def projector_for(cfg: OptimizerConfig, dim: int) -> Callable[[np.ndarray], np.ndarray]:
    if cfg.constraint == "full_states":
        return project_to_states
    if cfg.constraint == "choi_set":
        d = _choi_d(cfg, dim)
        return lambda x: project_to_choi_set(x, d)
    if cfg.constraint == "classical_diagonal":
        b = _basis(cfg, dim).vectors
        return lambda x: project_to_basis_diagonal(x, b)
    raise ValueError(f"unknown constraint {cfg.constraint!r}")


def default_init(processor: ProcessorMap, cfg: OptimizerConfig | None = None) -> np.ndarray:
    """Maximally mixed program (feasible for every constraint set)."""
    return np.eye(processor.program_dim, dtype=complex) / processor.program_dim


def _stalled(trace, window=50, tol=1e-10):
    costs = trace.costs
    if len(costs) <= window:
        return False
    return np.min(costs[:-window]) - np.min(costs) < tol


# ---------------------------------------------------------------------------
# optimizers


def projected_subgradient(cost: CostFunction, init=None, cfg: OptimizerConfig | None = None) -> OptimizerTrace:
    """``pi_{k+1} = P(pi_k - alpha_k g_k)`` with ``g_k`` a subgradient at ``pi_k``."""
    cfg = cfg or OptimizerConfig()
    dim = cost.processor.program_dim
    pi = _check_init(default_init(cost.processor) if init is None else init, cfg, dim)
    proj = projector_for(cfg, dim)
    trace = OptimizerTrace(method="projected_subgradient")
    t0 = time.perf_counter()
    trace.add(0, cost(pi), 0.0, 0.0, pi)
    current = trace.records[0].cost
    for k in range(1, cfg.iterations + 1):
        g = cost.gradient(pi)
        if cfg.schedule == "polyak":
            gg = np.real(np.vdot(g, g))
            alpha = max(current - cfg.target_value, 0.0) / gg if gg > 0 else 0.0
        else:
            alpha = cfg.step_size(k, "harmonic")
        new = proj(pi - alpha * g)
        step = np.linalg.norm(new - pi)
        pi = new
        current = cost(pi)
        trace.add(k, current, step, time.perf_counter() - t0, pi)
        if cfg.callback:
            cfg.callback(k, pi)
        if cfg.early_stop and _stalled(trace):
            break
    trace.final_program = pi
    return trace


def _lmo(grad: np.ndarray, cfg: OptimizerConfig, dim: int) -> np.ndarray:
    """Minimizer of ``Tr[grad sigma]`` over the constraint set."""
    if cfg.constraint == "full_states":
        _, v = extreme_eigvec(grad, "min")
        return np.outer(v, v.conj())
    if cfg.constraint == "classical_diagonal":
        b = _basis(cfg, dim).vectors
        diag = np.real(np.einsum("ki,kl,li->i", b.conj(), grad, b))
        j = int(np.argmin(diag))
        return np.outer(b[:, j], b[:, j].conj())
    raise ValueError(f"Frank-Wolfe does not support the {cfg.constraint!r} constraint")


def _fw_loop(cost, init, cfg, method, choose_step):
    cfg = cfg or OptimizerConfig()
    if not cost.has_grad:
        raise TypeError(f"cost {cost.kind!r} has no gradient; Frank-Wolfe needs one")
    dim = cost.processor.program_dim
    pi = _check_init(default_init(cost.processor) if init is None else init, cfg, dim)
    trace = OptimizerTrace(method=method)
    t0 = time.perf_counter()
    current = cost(pi)
    trace.add(0, current, 0.0, 0.0, pi)
    for k in range(1, cfg.iterations + 1):
        g = cost.gradient(pi)
        sigma = _lmo(g, cfg, dim)
        alpha, current_new = choose_step(k, pi, sigma, g, current)
        new = (1 - alpha) * pi + alpha * sigma
        step = np.linalg.norm(new - pi)
        pi = qcore.hermitize(new)
        current = cost(pi) if current_new is None else current_new
        trace.add(k, current, step, time.perf_counter() - t0, pi)
        if cfg.callback:
            cfg.callback(k, pi)
        if cfg.early_stop and _stalled(trace):
            break
    trace.final_program = pi
    return trace


def frank_wolfe(cost: CostFunction, init=None, cfg: OptimizerConfig | None = None) -> OptimizerTrace:
    """Conditional gradient: ``pi_{k+1} = (1 - a_k) pi_k + a_k |s_k><s_k|``.

    ``|s_k>`` is the eigenvector for the smallest eigenvalue of the gradient
    and ``a_k = 2/(k+2)`` by default, so iterates stay exact states.
    """
    cfg = cfg or OptimizerConfig()
    return _fw_loop(cost, init, cfg, "frank_wolfe",
                    lambda k, pi, sigma, g, cur: (cfg.step_size(k, "fw_classic"), None))


def golden_section(f, lo=0.0, hi=1.0, evals=40):
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    r = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    x1, x2 = b - r * (b - a), a + r * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max(evals - 2, 0)):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - r * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + r * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def frank_wolfe_linesearch(cost: CostFunction, init=None, cfg: OptimizerConfig | None = None) -> OptimizerTrace:
    """Frank-Wolfe with exact line search of the cost along each segment.

    The candidate step is compared with the endpoints, so the cost sequence
    never increases.
    """
    cfg = cfg or OptimizerConfig()

    def choose(k, pi, sigma, g, cur):
        f = lambda a: cost((1 - a) * pi + a * sigma)
        a, fa = golden_section(f, 0.0, 1.0, cfg.linesearch_evals)
        f1 = f(1.0)
        if f1 < fa:
            a, fa = 1.0, f1
        if fa >= cur:
            return 0.0, cur
        return a, fa

    return _fw_loop(cost, init, cfg, "frank_wolfe_linesearch", choose)


def random_perturbation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian matrix from a unitarily invariant ensemble with spectral norm one."""
    h = qcore.random_hermitian(dim, rng)
    return h / np.abs(np.linalg.eigvalsh(h)).max()


def stochastic_smoothing_fw(cost: CostFunction, init=None, cfg: OptimizerConfig | None = None) -> OptimizerTrace:
    """Frank-Wolfe on a randomly smoothed cost.

    At step ``k`` the gradient is replaced by the average of subgradients at
    ``pi_k + eta_k sigma_j`` for ``k`` random perturbations ``sigma_j`` with
    ``||sigma_j||_inf = 1`` and ``eta_k = eta_0/sqrt(k)`` (sample count capped
    by ``max_samples``).  Perturbed points need not be states; the processor
    map is applied by linear extension.
    """
    cfg = cfg or OptimizerConfig()
    if not cost.has_grad:
        raise TypeError(f"cost {cost.kind!r} has no subgradient")
    rng = np.random.default_rng(cfg.seed)
    dim = cost.processor.program_dim
    pi = _check_init(default_init(cost.processor) if init is None else init, cfg, dim)
    trace = OptimizerTrace(method="stochastic_smoothing_fw")
    t0 = time.perf_counter()
    trace.add(0, cost(pi), 0.0, 0.0, pi)
    for k in range(1, cfg.iterations + 1):
        m = k if cfg.max_samples is None else min(k, cfg.max_samples)
        eta = cfg.eta_scale / math.sqrt(k)
        g = sum(cost.gradient(pi + eta * random_perturbation(dim, rng)) for _ in range(m)) / m
        sigma = _lmo(g, cfg, dim)
        alpha = cfg.step_size(k, "fw_classic")
        new = qcore.hermitize((1 - alpha) * pi + alpha * sigma)
        step = np.linalg.norm(new - pi)
        pi = new
        trace.add(k, cost(pi), step, time.perf_counter() - t0, pi)
        if cfg.callback:
            cfg.callback(k, pi)
        if cfg.early_stop and _stalled(trace):
            break
    trace.final_program = pi
    return trace


def unitary_optimal_program(processor: ProcessorMap, u: np.ndarray) -> tuple[np.ndarray, float]:
    """Fidelity-optimal pure program for simulating the unitary ``u``.

    The optimum is the top eigenvector of ``Lambda^*[|chi_U><chi_U|]``, and
    the achieved fidelity is the square root of the top eigenvalue.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (processor.choi_d_in, processor.choi_d_out):
        raise ValueError("unitary dimension does not match the processor")
    if not np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=1e-10):
        raise ValueError("u is not unitary")
    chi_u = qcore.choi_from_unitary(u)
    lam, v = extreme_eigvec(processor.dual(chi_u), "max")
    pi = np.outer(v, v.conj())
    f = math.sqrt(min(max(np.real(np.trace(chi_u @ processor.apply(pi))), 0.0), 1.0))
    return pi, f


OPTIMIZERS = {
    "projected_subgradient": projected_subgradient,
    "frank_wolfe": frank_wolfe,
    "frank_wolfe_linesearch": frank_wolfe_linesearch,
    "stochastic_smoothing_fw": stochastic_smoothing_fw,
}
