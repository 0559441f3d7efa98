"""Switching graphs: joint connectivity and the block contraction.

Two graphs that are each disconnected can still drive averaging to
agreement when their union over a window has a spanning tree. Max-consensus
needs more: without strong joint connectivity the maximum never reaches
some nodes.

    python3 notebooks/03_jointly_connected_schedules.py
"""

import numpy as np

from minmax_consensus import Constant, Digraph, GraphSchedule, ParamSchedule, Power, classify, run
from minmax_consensus.analysis import check_block_product_condition, check_contraction_eq6

# 1 -> 2 on even steps, 2 -> 3 on odd steps: a path over any two-step window
sched = GraphSchedule.periodic([Digraph(3, [(1, 2)]), Digraph(3, [(2, 3)])])
cls = classify(sched)
print("classification:", cls.to_dict())

x0 = np.array([0.0, 1.0, 5.0])
ave = ParamSchedule.constant(0.4, 0.2)
tr = run(x0, sched, ave, max_steps=2000)
# node 1 hears nobody, so it is the only root and everyone drifts to its value
print(f"averaging alpha=0.4 eta=0.2: {tr.summary()}  consensus near {tr.consensus_value:.6f}")

long = run(x0, sched, ave, max_steps=3 * 4 * cls.uniformly_jointly_qsc_B, stop_at_tol=False)
print("block contraction on every aligned block:",
      check_contraction_eq6(long, ave, 3, cls.uniformly_jointly_qsc_B))

tr = run(x0, sched, ParamSchedule.constant(0.0, 0.0), max_steps=50)
print(f"max-consensus on the same schedule: {tr.summary()}  final {tr.states[-1].tolist()}")

# parameter sequences: constant alpha passes, alpha_k = 1/(k+1) does not
for alpha in (Constant(0.3), Power(1.0, 1.0)):
    v = check_block_product_condition(ParamSchedule(alpha, Constant(0.0)), n=3, B=2, variant="eq20")
    print(f"block-product condition for {alpha}: {v.result} ({v.detail})")
