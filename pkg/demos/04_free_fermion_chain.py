"""A driven transverse Ising chain far beyond exact diagonalization.

After the Jordan-Wigner map the chain is quadratic in fermions, so a Gaussian
state is fully described by its 2L x 2L Majorana covariance matrix. Here a
64-site chain starts in its ground state and is driven by site-dependent
envelopes for ten units of time.
"""

import time

import numpy as np

from gaugemap import SinusoidalField
from gaugemap.freefermion import (QuadraticCoefficients, covariance_energy, ground_covariance,
                                  physical_observables, propagate_covariance)

rng = np.random.default_rng(5)
L, horizon = 64, 10.0
couplings = rng.uniform(0.5, 1.5, L - 1)
envelopes = [SinusoidalField(1.0, [0.4], [rng.uniform(0.5, 1.5)], horizon=(0.0, horizon))
             for _ in range(L)]
angles = np.zeros(L)
coeffs = QuadraticCoefficients(couplings, angles, lambda t: np.array([float(e(t)) for e in envelopes]))

start = time.perf_counter()
ground = ground_covariance(coeffs)
grid = np.linspace(0.0, horizon, 6)
gammas = propagate_covariance(coeffs, ground.gamma, grid, tol=1e-8)
print(f"L={L}: ground energy {ground.energy:.8f}, propagated in {time.perf_counter() - start:.1f} s")

for t, g in zip(grid, gammas):
    obs = physical_observables(g, angles)
    print(f"t={t:4.1f}  energy {covariance_energy(coeffs, g, t):+9.4f}  "
          f"mean <Sz> {np.mean(obs['sz']):+.5f}  mean <SxSx> {np.mean(obs['sxsx']):+.5f}")
