"""A parametric quantum circuit learning depolarizing channels.

Four control registers select between two fixed two-qubit gates, so the
processor can reach sixteen gate sequences and their mixtures.  The program
decides the mixture.
"""

import numpy as np

from qprogram import costs, optim, processors, qcore

spec = processors.pqc_ad_default(0.0, 4)
pm = processors.pqc_processor(spec)
for p in np.linspace(0, 1, 6):
    chi = qcore.choi_from_kraus(qcore.depolarizing(p))
    trace = optim.projected_subgradient(costs.trace_cost(pm, chi), cfg=optim.OptimizerConfig(iterations=1000))
    print(f"p={p:.1f}: best C1 {trace.best_cost:.4f}")
