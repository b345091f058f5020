"""Exponents, derived constants and the traveling wave.

Run with ``python demos/01_parameters_and_wave.py``.
"""
import numpy as np

from dnlwave import new_params, stationary_pressure, traveling_wave_density
from dnlwave.direct import pressure_of
from dnlwave.grid import HalfSpaceGrid, ScalarField
from dnlwave.perturbation import TransformMeta

# %% derived constants for a few slow-diffusion pairs
for m, p in [(2, 2), (3, 2), (1, 3), (2, 3), (2.5, 1.7)]:
    par = new_params(m, p)
    meta = TransformMeta.from_params(par)
    print(f"(m,p)=({m},{p})  kappa={par.kappa:.3f}  sigma={par.sigma:+.3f}  "
          f"V={par.wave_speed:.3f}  q={par.q_exp:.3f}  s/tau={meta.time_scale_total:.3f}")

# %% pairs outside the regime are rejected
try:
    new_params(1, 2)
except ValueError as err:
    print("rejected:", err)

# %% the wave density is a power of a linear pressure
par = new_params(3, 2)
grid = HalfSpaceGrid(1, 2.0, 16, origin=-1.0)
y = grid.normal_centers
rho = ScalarField(grid, traveling_wave_density(0.25, y, par))
g = pressure_of(rho, par).values
print("pressure minus (y + V tau)_+ :", np.abs(g - stationary_pressure(y + 0.25 * par.wave_speed)).max())
