"""Exploration: nearest-neighbor graphs with non-monotone min weights.

Asymptotic agreement is proved for monotone alpha_k, or for alpha_k kept a
fixed distance away from 0 or from 1. Whether any alpha_k in (0, 1) works
is open. This script tries non-monotone sequences and reports the spread
after a fixed horizon. The swinging ones approach both 0 and 1; as finite
lists they still count as separated, by their smallest entry, which is why
the hypothesis column says so. Float runs, so a spread of exactly 0 is
rounding, not finite-time agreement. Nothing here is a pass/fail test.

    python3 notebooks/04_non_monotone_weights.py
"""

import numpy as np

from minmax_consensus import Constant, Listed, NeighborRule, ParamSchedule, run
from minmax_consensus.analysis import check_thm8_hypotheses, generic_initial_state

K = 3000


def swinging(K, a, b):
    # alternate toward 0 and toward 1, ever closer to both ends
    return Listed(tuple(a / (k + 2) ** b if k % 2 == 0 else 1 - a / (k + 2) ** b for k in range(K)))


cases = {
    "alpha = 0.5": Constant(0.5),
    "alternating 0.1 / 0.9": Listed(tuple(0.1 if k % 2 == 0 else 0.9 for k in range(K))),
    "swinging 1/(k+2)": swinging(K, 1.0, 1.0),
    "swinging 1/sqrt(k+2)": swinging(K, 1.0, 0.5),
}

rng = np.random.default_rng(2024)
starts = [generic_initial_state(n, rng) for n in (6, 9, 12)]
for label, alpha in cases.items():
    p = ParamSchedule(alpha, Constant(0.0))
    hyp = check_thm8_hypotheses(p).detail.split(" (")[0]
    for mu in (1, 2):
        finals = [run(x0, NeighborRule("nearest_neighbor", mu), p, max_steps=K, tol=1e-12).final_phi
                  for x0 in starts]
        print(f"{label:24s} mu={mu}  [{hyp}]  spread after <= {K} steps: "
              + ", ".join(f"{v:.2e}" for v in finals))
