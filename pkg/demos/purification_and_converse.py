"""Decompose sigma around a state close to rho, then bound D from the smoothing profile.

    python demos/purification_and_converse.py
"""

import numpy as np

from substate import converse_check, purification_decomposition, random_density

rng = np.random.default_rng(3)
rho = random_density(3, 1, rng)
sigma = random_density(3, rng=rng)
eps = 0.25

tri = purification_decomposition(rho, sigma, eps)
print(f"D = {tri.divergence:.6f} bits, alpha = (1-eps) 2^(-D/eps) = {tri.alpha:.6f}")
print("sigma = alpha rho' + (1 - alpha) theta, with")
for name, value in tri.residuals().items():
    print(f"  {name:18s} {value: .3e}")
print()

rep = converse_check(rho, sigma)
print(f"measurement weight delta = {rep.witness_delta:.4f}, eps = delta/4 = {rep.epsilon_used:.4f}")
for point in rep.profile:
    print(f"  eps {point['epsilon']:.4f}: S_eps = {point['value_bits']:.5f}, k(eps) = {point['k']:.5f}")
print(f"k = {rep.k:.5f}, D = {rep.divergence:.5f} <= 4k + 3 = {rep.bound:.5f}: {rep.passed}")
