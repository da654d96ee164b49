"""Frozen reference values from independent high-precision computations.

Each constant was produced once with mpmath (40 digits) from a closed form
that does not use any gaugemap code; the recipe is recorded next to it.
"""

import numpy as np

# Spin 1/2 in B(t) = (B1 cos wt, B1 sin wt, B0), H = -B·S, psi(0) = up.
# Rotating frame: psi(t) = exp(-i w t Sz) exp(-i t (-B1 Sx - (B0 + w) Sz)) psi(0).
RABI = {"B1": 0.8, "B0": 0.4, "omega": 1.3, "t": 3.7,
        "state": np.array([0.50036771792245430769 + 0.85447090527483408498j,
                           0.093835208850061071988 + 0.10347256873174713426j])}

# Open chain sum_i J Sx_i Sx_{i+1} - h Sz_i with L = 8, J = 1, h = 1/2 (critical).
# Ground energy -1/2 sum_k s_k, s_k the singular values of the bidiagonal
# matrix with h on the diagonal and J/2 above it.
TFIM_CRITICAL_L8 = -2.4594878618648551831
