"""Finite-time vs asymptotic consensus on a fixed graph.

A six-node ring with one chord is strongly connected, so max-consensus
(alpha = eta = 0) agrees in at most diameter-many steps. Any positive weight
on the neighborhood minimum turns the same dynamics into a contraction that
never lands exactly on agreement. Floats cannot tell a tiny spread from
none, so the second half uses exact runs and a fixed-point certificate.

    python3 notebooks/01_finite_time_vs_asymptotic.py
"""

import numpy as np

from minmax_consensus import Digraph, ParamSchedule, diameter, run
from minmax_consensus.analysis import certify_positive_spread

g = Digraph(6, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 1), (1, 4)])
x0 = np.arange(6.0)

tr = run(x0, g, ParamSchedule.constant(0.0, 0.0))
print(f"max-consensus: {tr.summary()}  (diameter {diameter(g)})")
print("  states:", *(s.tolist() for s in tr.states), sep="\n    ")

print("\nalpha  steps-to-1e-9  rate/step  no agreement in 10^4 steps")
for alpha in (0.05, 0.1, 0.2, 0.3, 0.4, 0.5):
    p = ParamSchedule.constant(alpha, 0.0)
    tr = run(x0, g, p, max_steps=10_000, exact=True)
    rate = (tr.phi[-1] / tr.phi[0]) ** (1 / tr.steps)
    cert = certify_positive_spread(x0, g, p, 10_000)
    print(f"{alpha:5.2f}  {tr.steps:13d}  {rate:9.4f}  {'proved' if cert.certified else 'not proved'}"
          f" ({cert.precision_bits} bits)")

# floats hit a rounding floor instead: the spread stalls near machine
# epsilon and never certifies anything either way
tr = run(x0, g, ParamSchedule.constant(0.3, 0.0), max_steps=5_000, stop_at_tol=False)
print(f"\nfloat run, alpha=0.3, 5000 steps, no tolerance stop: final spread {tr.final_phi:.3g}, "
      f"smallest {tr.phi.min():.3g}")
