"""Walk through the smoothing bound on one random pair.

Computes the three divergences, solves the smoothing SDP at a few
epsilons, checks the certificate, and compares against the bound
D/eps + log2(1/(1-eps)).

    python demos/smoothing_walkthrough.py
"""

import numpy as np

from substate import (
    observational_divergence,
    random_density,
    relative_entropy,
    relative_min_entropy,
    smooth_relative_min_entropy,
)
from substate.constructions import theorem_bound_bits

rng = np.random.default_rng(7)
rho = random_density(4, 2, rng)
sigma = random_density(4, rng=rng)

s = relative_entropy(rho, sigma)
smax = relative_min_entropy(rho, sigma)
d = observational_divergence(rho, sigma)
print(f"S(rho||sigma)      = {s:.6f} bits")
print(f"S_inf(rho||sigma)  = {smax:.6f} bits")
print(f"D(rho||sigma)      = {d.value:.6f} bits  (witness p={d.witness_p:.4f}, q={d.witness_q:.4f})")
print(f"D <= S + 1: {d.value <= s + 1}    S <= S_inf: {s <= smax}")
print()

print(f"{'eps':>5} {'S_eps (bits)':>13} {'bound':>10} {'gap':>10} {'F(rho,rho_p)':>13} certificate")
for eps in (0.05, 0.1, 0.3, 0.5, 0.7, 0.9):
    cert = smooth_relative_min_entropy(rho, sigma, eps)
    bound = theorem_bound_bits(d.value, eps)
    print(f"{eps:5.2f} {cert.value_bits:13.6f} {bound:10.4f} {cert.gap:10.2e} "
          f"{cert.fidelity_achieved:13.6f} {'valid' if cert.valid else 'INVALID'}")

# The smoothed value drops quickly with eps while the bound is loose for
# small eps, where D/eps dominates.
