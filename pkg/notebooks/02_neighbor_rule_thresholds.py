"""Where finite-time agreement stops under state-dependent graphs.

Each node listens to its mu nearest smaller and mu nearest larger nodes
(nearest_neighbor), or to the holders of the mu nearest smaller and larger
distinct values (nearest_value). With alpha = 0.5 and no inertia, the sweep
below finds the largest n where every trial agreed in finite time.

    python3 notebooks/02_neighbor_rule_thresholds.py
"""

import numpy as np

from minmax_consensus import NeighborRule, ParamSchedule, run, threshold_sweep

p = ParamSchedule.constant(0.5, 0.0)
for rule in ("nearest_neighbor", "nearest_value"):
    rep = threshold_sweep(range(2, 13), range(1, 5), rule, p, trials=10, budget=10_000, workers=2)
    print(rule)
    for mu in sorted(rep.thresholds):
        print(f"  mu={mu}: largest finite-time n = {rep.thresholds[mu]}, expected {rep.expected[mu]}")
    finite = [r.T_star for r in rep.rows if r.T_star is not None]
    print(f"  finite-time steps seen: {sorted(set(finite))}")

# 128 nodes at 1..128: half-width 64 covers every value in one hop
x0 = np.arange(1.0, 129.0)
for mu in (63, 64):
    tr = run(x0, NeighborRule("nearest_value", mu), p, max_steps=1000, exact=True, stop_at_tol=False)
    print(f"n=128 nearest_value mu={mu}: {tr.summary()}, distinct values {tr.upsilon[:9].tolist()}")
