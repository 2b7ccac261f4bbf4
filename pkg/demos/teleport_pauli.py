"""Simulating channels with the teleportation processor.

A Pauli channel is teleportation covariant, so feeding its Choi matrix as
the program reproduces it exactly.  Starting from the maximally mixed
program, projected subgradient descent finds such a program on its own.
A rotation by pi/4 is not covariant and the best achievable trace distance
stays at one.
"""

import numpy as np

from qprogram import costs, optim, processors, qcore

tp = processors.teleportation_processor(2)

pauli = qcore.choi_from_kraus(qcore.pauli_channel([0.55, 0.25, 0.15, 0.05]))
trace = optim.projected_subgradient(costs.trace_cost(tp, pauli),
                                    cfg=optim.OptimizerConfig(iterations=300, schedule="polyak"))
print(f"Pauli channel: C1 {trace.records[0].cost:.3f} -> {trace.best_cost:.2e}")

for theta in (np.pi / 2, np.pi / 4):
    target = qcore.choi_from_kraus(qcore.rotation(theta, "X"))
    trace = optim.projected_subgradient(costs.trace_cost(tp, target),
                                        cfg=optim.OptimizerConfig(iterations=500))
    print(f"rotation theta={theta:.4f}: best C1 {trace.best_cost:.2e}")

# for unitaries the fidelity-optimal program is available in closed form
u = qcore.rotation_unitary(np.pi / 4, "X")
pi, f = optim.unitary_optimal_program(tp, u)
print(f"closed-form program for R(pi/4): fidelity {f:.6f}, purity {np.real(np.trace(pi @ pi)):.3f}")
