"""Port-based teleportation of amplitude damping with optimized programs.

The natural program is N copies of the channel's Choi matrix.  Optimizing
the trace distance over all program states always does at least as well.
"""

from qprogram import costs, optim, processors, qcore

for n in (2, 3):
    pm = processors.pbt_processor(n)
    for p in (0.25, 0.5, 0.75):
        chi = qcore.choi_from_kraus(qcore.amplitude_damping(p))
        cost = costs.trace_cost(pm, chi)
        init = processors.pbt_choi_program(chi, n)
        trace = optim.projected_subgradient(cost, init=init, cfg=optim.OptimizerConfig(iterations=300))
        rep = costs.bound_report(cost, trace.best_program)
        print(f"N={n} p={p:.2f}: Choi program {cost(init):.4f}, optimized {trace.best_cost:.4f}, "
              f"diamond in [{rep['diamond_lower']:.4f}, {rep['diamond_upper']:.4f}]")
