"""Pointwise Finsler geometry of a Lorentzian example.

We take the quartic perturbation of a warped Minkowski Lagrangian,

    L = (-y0^2 + exp(2 x0) y1^2) / 2 + eps * y0^4 / |y|^2,

and look at its direction-dependent metric and Chern connection.  In the
pseudo-Riemannian limit eps = 0 the Chern coefficients are the Christoffel
symbols and do not depend on the direction y; for eps > 0 they do.
"""

import numpy as np

from finsleravg import FiberPoint, causal_character, chern_connection, fundamental_tensor, preset

np.set_printoptions(precision=6, suppress=True)

x = np.array([0.2, 0.0])
for eps in (0.0, 0.05):
    lag = preset("finslerian-lorentz", 2, eps=eps)
    print(f"--- eps = {eps}")
    for y in ([1.0, 0.0], [1.0, 0.6], [0.3, 1.0]):
        p = FiberPoint(x, y)
        g = fundamental_tensor(lag, p)
        gamma, _ = chern_connection(lag, p)
        print(f"y = {y}  ({causal_character(lag, p)}), negative eigenvalues of g: {g.n_negative}")
        print("  g =", g.coeffs.tolist())
        print("  Gamma^0_11 = %.6f   Gamma^1_01 = %.6f" % (gamma.coeffs[0, 1, 1], gamma.coeffs[1, 0, 1]))
