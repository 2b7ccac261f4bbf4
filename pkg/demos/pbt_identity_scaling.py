"""Diamond error of PBT when simulating the identity channel.

The program is restricted to the Choi set (Tr_B pi = I/d) and the
port-averaged processor is used, which turns program optimization into one
small semidefinite program per port number.
"""

from qprogram import processors, qcore, sdpsolve

phi = qcore.max_entangled_projector(2)
print("N  choi_program  optimized  4/N")
for n in range(2, 7):
    proc = processors.pbt_reduced_processor(n)
    base = sdpsolve.diamond_distance(phi - proc.apply(phi), 2).objective
    sol = sdpsolve.optimal_program_sdp(proc, phi, program_constraint="choi_set")
    print(f"{n}  {base:.5f}       {sol.objective:.5f}    {4 / n:.3f}")
