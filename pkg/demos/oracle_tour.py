"""
Checking the path representation against finite differences
============================================================

The same half-plane parabolic problem solved twice: by an explicit
finite-difference scheme and by weighted Brownian paths killed at the wall.
"""

import numpy as np

from obvortex import oracle

prob = oracle.random_problem(seed=3)
xi, T = (0.5, 1.5), 0.5

est = oracle.feynman_kac_estimate(prob, xi, T, n_paths=20_000, seed=1)
fd, fd_err = oracle.fd_reference(prob, xi, T)
for c in range(prob.k):
    print(f"component {c}: paths {est.value[c]:+.4f} +- {est.se[c]:.4f}   "
          f"grid {fd[c]:+.4f} +- {fd_err[c]:.1e}")

# a constant zeroth-order term only rescales every path weight
base = oracle.heat_problem(0.5, lambda x: np.exp(-np.sum(x ** 2, axis=1))[:, None])
grow = oracle.heat_problem(0.5, base.psi0, c=lambda x, t: np.full(len(x), 0.8))
a = oracle.feynman_kac_estimate(base, (0.0, 0.0), T, 10_000, seed=2).value[0]
b = oracle.feynman_kac_estimate(grow, (0.0, 0.0), T, 10_000, seed=2).value[0]
print("growth factor", b / a, "expected", np.exp(0.8 * T))

# the vortex patch used to test velocity reconstruction
u, om = oracle.analytic_test_vortex(np.array([[0.0, 0.0], [0.0, np.pi + 0.5], [0.0, 50.0]]))
print("wall", u[0], "inside", u[1], "far", u[2])
