"""Smooth trace distance, Frank-Wolfe variants and the distance bounds.

The Huber-smoothed cost has a Lipschitz gradient, which lets Frank-Wolfe
converge at a guaranteed rate.  Line search reaches the same accuracy in
fewer steps.  Stochastic smoothing works on the raw trace distance.
"""

from qprogram import costs, optim, processors, qcore

tp = processors.teleportation_processor(2)
target = qcore.choi_from_kraus(qcore.pauli_channel([0.4, 0.3, 0.2, 0.1]))
smooth = costs.smooth_trace_cost(tp, target, 0.1)
plain = costs.trace_cost(tp, target)
cfg = optim.OptimizerConfig(iterations=100)

for name, run in (("frank_wolfe", optim.frank_wolfe), ("frank_wolfe_linesearch", optim.frank_wolfe_linesearch)):
    trace = run(smooth, cfg=cfg)
    print(f"{name}: C_mu after 100 steps {trace.costs[-1]:.2e}, C1 {plain(trace.best_program):.2e}")

trace = optim.stochastic_smoothing_fw(plain, cfg=optim.OptimizerConfig(iterations=100, seed=1))
print(f"stochastic smoothing FW: C1 {trace.best_cost:.2e}")

rep = costs.bound_report(plain, trace.best_program, with_diamond=True)
for key in ("c1", "diamond", "diamond_upper", "spectral_upper", "cf_bound", "pinsker_bound"):
    print(f"  {key:15s} {rep[key]:.4f}")
