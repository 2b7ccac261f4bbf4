"""Cost functions on program space and their (sub)gradients.

Every cost compares the simulated Choi matrix ``chi_pi = Lambda(pi)`` with a
fixed target ``chi_E``.  Gradients are returned as Hermitian operators on
program space, obtained by pulling back an output-space operator with the
dual map ``Lambda^*``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import qcore
from .processors import ProcessorMap

SIGN_ZERO_ATOL = 1e-12


@dataclass(frozen=True)
class CostFunction:
    """A cost ``C(pi)`` together with an optional gradient oracle.

    ``evaluate`` and ``grad`` accept any Hermitian program-space operator, not
    only states, because the processor map extends linearly.
    """

    processor: ProcessorMap
    target: np.ndarray
    kind: str
    evaluate: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    mu: float | None = None
    lipschitz: float | None = None
    p: float | None = None

    def __call__(self, pi):
        return self.evaluate(pi)

    @property
    def has_grad(self) -> bool:
        return self.grad is not None

    def gradient(self, pi):
        if self.grad is None:
            raise TypeError(f"cost {self.kind!r} provides no gradient")
        return self.grad(pi)

    def difference(self, pi):
        """``chi_pi - chi_E``."""
        return self.processor.apply(pi) - self.target


def _check_target(processor: ProcessorMap, target) -> np.ndarray:
    target = qcore.check_hermitian(target, "target")
    n = processor.choi_dim
    if target.shape != (n, n):
        raise ValueError(f"target of shape {target.shape} does not match processor output dimension {n}")
    return target


def _sign_operator(x: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(qcore.hermitize(x))
    scale = max(np.abs(w).max(), 1.0)
    s = np.where(np.abs(w) <= SIGN_ZERO_ATOL * scale, 0.0, np.sign(w))
    return (v * s) @ v.conj().T


def trace_cost(processor: ProcessorMap, target) -> CostFunction:
    """``C_1(pi) = ||chi_E - Lambda(pi)||_1`` with subgradient ``Lambda^*[sign(chi_pi - chi_E)]``."""
    target = _check_target(processor, target)

    def evaluate(pi):
        return qcore.trace_norm(processor.apply(pi) - target)

    def grad(pi):
        return qcore.hermitize(processor.dual(_sign_operator(processor.apply(pi) - target)))

    return CostFunction(processor, target, "trace", evaluate, grad)


def infidelity_cost(processor: ProcessorMap, target) -> CostFunction:
    """``C_F(pi) = 1 - F(chi_E, Lambda(pi))^2``.

    The gradient is ``-2 F grad F`` with
    ``grad F = (1/2) Lambda^*[ sqrt(chi_E) (sqrt(chi_E) chi_pi sqrt(chi_E))^{-1/2} sqrt(chi_E) ]``.
    Inverse square roots are restricted to the support.
    """
    target = _check_target(processor, target)
    sq = qcore.sqrtm_psd(target)

    def evaluate(pi):
        f = qcore.fidelity(target, processor.apply(pi))
        return max(0.0, 1.0 - f * f)

    def grad(pi):
        chi = qcore.hermitize(processor.apply(pi))
        m = qcore.hermitize(sq @ chi @ sq)
        w, v = np.linalg.eigh(m)
        w = np.clip(w, 0.0, None)
        cut = qcore.SUPPORT_CUTOFF * max(w.max(), 1e-300)
        # round-off eigenvalues would enter F through their square roots
        f = float(np.sqrt(w[w > cut]).sum())
        inv = np.where(w > cut, 1.0 / np.sqrt(np.where(w > cut, w, 1.0)), 0.0)
        core = sq @ ((v * inv) @ v.conj().T) @ sq
        grad_f = 0.5 * processor.dual(core)
        return qcore.hermitize(-2.0 * min(f, 1.0) * grad_f)

    return CostFunction(processor, target, "infidelity", evaluate, grad)


def huber(x, mu: float):
    """Huber penalty: ``x^2/(2 mu)`` for ``|x| < mu``, ``|x| - mu/2`` otherwise."""
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    return np.where(a < mu, x * x / (2 * mu), a - mu / 2)


def huber_derivative(x, mu: float):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < mu, x / mu, np.sign(x))


def smooth_trace_cost(processor: ProcessorMap, target, mu: float) -> CostFunction:
    """Huber-smoothed trace distance ``C_mu(pi) = Tr h_mu(chi_pi - chi_E)``.

    Its gradient ``Lambda^*[h_mu'(chi_pi - chi_E)]`` is Lipschitz, and
    ``C_mu <= C_1 <= C_mu + mu n / 2`` with ``n`` the Choi matrix dimension.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    target = _check_target(processor, target)

    def evaluate(pi):
        w = np.linalg.eigvalsh(qcore.hermitize(processor.apply(pi) - target))
        return float(huber(w, mu).sum())

    def grad(pi):
        w, v = np.linalg.eigh(qcore.hermitize(processor.apply(pi) - target))
        return qcore.hermitize(processor.dual((v * huber_derivative(w, mu)) @ v.conj().T))

    return CostFunction(processor, target, "smooth_trace", evaluate, grad, mu=mu,
                        lipschitz=processor.program_dim / mu)


def smoothing_gap(cost: CostFunction) -> float:
    """Largest possible value of ``C_1 - C_mu`` for a smooth trace cost."""
    return cost.mu * cost.processor.choi_dim / 2


def rel_entropy_cost(processor: ProcessorMap, target) -> CostFunction:
    """``C_R = min{S(chi_E || chi_pi), S(chi_pi || chi_E)}`` in bits (evaluation only)."""
    target = _check_target(processor, target)

    def evaluate(pi):
        chi = qcore.hermitize(processor.apply(pi))
        return min(qcore.relative_entropy(target, chi), qcore.relative_entropy(chi, target))

    return CostFunction(processor, target, "rel_entropy", evaluate)


def schatten_cost(processor: ProcessorMap, target, p: float) -> CostFunction:
    """``C_p(pi) = ||chi_E - chi_pi||_p`` (evaluation only)."""
    if not p >= 1:
        raise ValueError("Schatten index p must be >= 1")
    target = _check_target(processor, target)

    def evaluate(pi):
        return qcore.schatten_p_norm(processor.apply(pi) - target, p)

    return CostFunction(processor, target, "schatten", evaluate, p=p)


def diamond_cost(processor: ProcessorMap, target, tol: float = 1e-6) -> CostFunction:
    """Diamond distance between the target channel and the simulated one, via SDP.

    ``target`` may be a Choi matrix or a :class:`~qprogram.qcore.KrausChannel`.
    """
    from . import sdpsolve

    if isinstance(target, qcore.KrausChannel):
        target = qcore.choi_from_kraus(target)
    target = _check_target(processor, target)

    def evaluate(pi):
        sol = sdpsolve.diamond_distance(target - processor.apply(pi), processor.choi_d_in, tol)
        return sol.objective

    return CostFunction(processor, target, "diamond", evaluate)


def pinsker_bound(rel_entropy_bits: float) -> float:
    """Trace-norm bound ``||rho - sigma||_1 <= sqrt(2 ln 2 * S(rho||sigma))`` (S in bits)."""
    if not np.isfinite(rel_entropy_bits):
        return math.inf
    return math.sqrt(2 * math.log(2) * max(rel_entropy_bits, 0.0))


def bound_report(cost: CostFunction, pi, with_diamond: bool = False, tol: float = 1e-6) -> dict:
    """Distances between target and simulated channel, with the bounds linking them.

    ``diamond_lower``/``diamond_upper`` bracket the diamond distance as
    ``C_1 <= C_diamond <= d C_1``.  With ``with_diamond`` the SDP value is
    included as well.
    """
    proc, target = cost.processor, cost.target
    chi = qcore.hermitize(proc.apply(pi))
    diff = target - chi
    c1 = qcore.trace_norm(diff)
    f = qcore.fidelity(target, chi)
    cf = max(0.0, 1.0 - f * f)
    s = min(qcore.relative_entropy(target, chi), qcore.relative_entropy(chi, target))
    d = proc.choi_d_in
    from . import sdpsolve

    report = {
        "c1": c1,
        "cf": cf,
        "cf_bound": 2 * math.sqrt(cf),
        "c_r": s,
        "pinsker_bound": pinsker_bound(s),
        "diamond_lower": c1,
        "diamond_upper": d * c1,
        "spectral_upper": sdpsolve.spectral_diamond_upper(target, chi, d),
    }
    if with_diamond:
        report["diamond"] = sdpsolve.diamond_distance(diff, d, tol).objective
    return report


def make_cost(kind: str, processor: ProcessorMap, target, mu: float | None = None,
              p: float | None = None) -> CostFunction:
    """Build a cost by name: trace, infidelity, smooth_trace, rel_entropy, schatten or diamond."""
    if kind == "trace":
        return trace_cost(processor, target)
    if kind == "infidelity":
        return infidelity_cost(processor, target)
    if kind == "smooth_trace":
        return smooth_trace_cost(processor, target, 1e-2 if mu is None else mu)
    if kind == "rel_entropy":
        return rel_entropy_cost(processor, target)
    if kind == "schatten":
        return schatten_cost(processor, target, 2.0 if p is None else p)
    if kind == "diamond":
        return diamond_cost(processor, target)
    raise ValueError(f"unknown cost kind {kind!r}")
