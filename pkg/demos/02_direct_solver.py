"""Explicit finite-volume solver for the density equation.

Three checks: convergence from the exact wave, mass conservation for a
compact bump, and the front speed.
"""
import numpy as np

from dnlwave import DirectSolverConfig, new_params, pressure_of, solve_density, support_boundary
from dnlwave import traveling_wave_density
from dnlwave.experiments import orders
from dnlwave.grid import HalfSpaceGrid, ScalarField

TW = DirectSolverConfig(top_boundary="traveling_wave")

# %% start from the exact wave and measure the sup pressure error at T = 0.5
for m, p in [(2, 2), (3, 2)]:
    par = new_params(m, p)
    errs = []
    for n in (128, 256, 512):
        grid = HalfSpaceGrid(1, 2.0, n, origin=-1.0)
        y = grid.normal_centers
        res = solve_density(ScalarField(grid, traveling_wave_density(0.0, y, par)), 0.5, par, TW)
        g = pressure_of(res.sequence[-1], par).values
        errs.append(np.abs(g - np.maximum(y + 0.5 * par.wave_speed, 0)).max())
    print(f"({m},{p}) errors", np.round(errs, 5), "orders", np.round(orders(errs), 2))

# %% a compact bump in 2D with no-flux walls keeps its mass to round-off
par = new_params(2, 2)
grid = HalfSpaceGrid(2, 2.0, 48, 2.0, 48)
zt, zn = grid.coords()
rho0 = ScalarField(grid, np.maximum(1 - ((zt - 1) ** 2 + (zn - 1) ** 2) / 0.25, 0.0))
res = solve_density(rho0, 0.05, par)
mass = res.mass_trace
print("relative mass drift:", np.abs(mass - mass[0]).max() / mass[0], "in", len(res.dt_trace), "steps")

# %% the front of the wave moves down at speed V
grid = HalfSpaceGrid(1, 2.0, 512, origin=-1.0)
res = solve_density(ScalarField(grid, traveling_wave_density(0.0, grid.normal_centers, par)),
                    0.5, par, TW, snapshot_times=[0.1])
f1 = support_boundary(pressure_of(res.sequence[1], par), 1e-3)[0]
f2 = support_boundary(pressure_of(res.sequence[2], par), 1e-3)[0]
print("front speed", (f1 - f2) / 0.4, "expected", par.wave_speed)
