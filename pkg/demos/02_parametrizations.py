"""Axis-angle against Gauss coordinates for the collective rotation.

Both charts describe the same SU(2) element. The Gauss chart has a coordinate
singularity where the lower-right entry of the spin-1/2 unitary vanishes;
for a constant field along x that happens at t = pi, where the axis-angle
flow passes through smoothly.
"""

import numpy as np

from gaugemap import ChartError, ConstantField, integrate_covariant, integrate_gauss, random_smooth_field
from gaugemap.gauge import gauss_to_covariant
from gaugemap.linalg import su2_log

rng = np.random.default_rng(3)
field = random_smooth_field(rng, horizon=(0.0, 10.0))
grid = np.linspace(0.0, 10.0, 21)
cov = integrate_covariant(field, grid)
gauss = integrate_gauss(field, grid)

# the sampled K is unwrapped for continuity and may differ from the Gauss reading by
# multiples of 2 pi; the rotation angle between the two SU(2) elements is the
# chart-independent comparison
print("random drive, covariant vs Gauss:")
for t, g in list(zip(grid, gauss.gauss_states or gauss.states))[::5]:
    back = gauss_to_covariant(g)
    gap = su2_log(cov.su2_at(t).conj().T @ gauss.su2_at(t)).angle
    print(f"  t={t:5.1f}  |K|={np.linalg.norm(cov.vector_at(t)):.6f}"
          f"  K from Gauss={back.angle:.6f}  distance={gap:.1e}")

x_field = ConstantField([1.0, 0.0, 0.0])
grid = np.linspace(0.0, 4.0, 9)
print("\nconstant x field:")
print("  covariant angles:", np.round([c.angle for c in integrate_covariant(x_field, grid).states], 4))
try:
    integrate_gauss(x_field, grid)
except ChartError as exc:
    print("  Gauss chart:", exc)
