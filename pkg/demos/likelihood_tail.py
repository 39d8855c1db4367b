"""Likelihood-ratio tails against the Hellinger affinity bound.

Draws samples from ``P`` and measures how often the log-likelihood ratio of
``Q`` to ``P`` exceeds ``y``; the frequency stays below ``exp(-y/2) rho^n``.

    python demos/likelihood_tail.py
"""

from bcl import hellinger_affinity, kl_divergence
from bcl.verify import verify_tail_inequality

P, Q = [0.5, 0.5], [0.3, 0.7]
n = 50

print(f"rho(P, Q) = {hellinger_affinity(P, Q):.6f}   K(P, Q) = {kl_divergence(P, Q):.6f}")
print(f"{'y':>5} {'frequency':>10} {'bound':>10} {'slack':>8}  ok")
for rep in verify_tail_inequality(P, Q, n, [0.0, 1.0, 2.0, 4.0], reps=20_000, seed=1):
    y = rep.details["y"]
    print(f"{y:5.1f} {rep.empirical_frequency:10.5f} {rep.theoretical_bound:10.5f} {rep.mc_slack:8.5f}  "
          f"{rep.passed}")
