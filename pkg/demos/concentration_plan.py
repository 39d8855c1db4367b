"""Fit the entropy and prior-mass diagnostics of a Bernoulli grid, then plan.

Shows the fitted dimension function, the prior-mass profile, the chosen
concentration pair and how the plan reacts to the sample size.

    python demos/concentration_plan.py
"""

import numpy as np

from bcl import InfeasibleError
from bcl.bounds import make_plan
from bcl.scenarios import build_scenario

sc = build_scenario({
    "name": "bernoulli19",
    "family": {"kind": "bernoulli", "grid": {"start": 0.05, "stop": 0.95, "num": 19}, "center": 9},
    "n": 1024,
    "gamma": 1.5,
})

print("dimension function")
for x, d in sc.dimension_table.rows():
    print(f"  D({x:.5f}) = {d:.4f}")

print("prior mass around the center")
for j, m, beta in sc.profile().rows():
    print(f"  j={j}  m_j={m:.4f}  beta={'-' if beta is None else f'{beta:.4f}'}")

for n in (200, 1024, 4096, 16384):
    try:
        plan = make_plan(n, sc.dimension_table, sc.profile(), sc.gamma)
    except InfeasibleError as exc:
        print(f"n={n:6d}: {exc}")
        continue
    thr = plan.bound_curves["thm1_threshold"]
    print(f"n={n:6d}: (J1, J) = ({plan.J1}, {plan.J}), thresholds",
          np.round([thr[j] for j in sorted(thr)], 6).tolist())
