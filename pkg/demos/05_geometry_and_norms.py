"""Degenerate distance, balls, Carleson-type norms, hodograph and quasi-isometry."""
import numpy as np

from dnlwave import (cc_ball, cc_distance, hodograph, hodograph_inverse, quasi_isometry_ratio,
                     x_norm, y_norm)
from dnlwave.experiments import ExperimentConfig, constant_sequence, simulate_perturbation
from dnlwave.grid import HalfSpaceGrid, ScalarField

# %% the distance grows like sqrt near the boundary and like |z - z'| / 2 sqrt(z_n) inside
print(cc_distance([0, 0], [0, 1]), cc_distance([0, 0], [0, 4]), cc_distance([0, 100], [1e-3, 100]))

# %% a boundary ball is a thin slab of thickness 4 r^2
g1 = HalfSpaceGrid(1, 1.0, 4000)
for r in (0.05, 0.1):
    print(f"r={r}: ball measure {cc_ball(g1, (0.0,), r)[1]:.4f}  4 r^2 = {4 * r * r:.4f}")

# %% norm oracles: zero field, unit field, homogeneity
fine = HalfSpaceGrid(1, 2.0, 256)
print("|0|_Y =", y_norm(constant_sequence(fine, 0.0, 1.0), 8.0).y_total)
print("|1|_Y =", y_norm(constant_sequence(fine, 1.0, 1.0), 8.0).y_total)
cfg = ExperimentConfig(dim=2, epsilon=0.05, pert_n_normal=32, n_tangential=32, T=1.0)
w = simulate_perturbation(cfg, t_first=1e-3)
rep = x_norm(w, 8.0)
print("X norm components:")
for k, (v, r, zhat) in rep.x_components.items():
    print(f"  {k:20s} {v:.4e}" + ("" if r is None else f"  at r={r:.3f}, z={np.round(zhat, 3)}"))
print("scaling by -3:", x_norm(w.map(lambda f: -3 * f.values), 8.0).x_total / rep.x_total)

# %% hodograph: swap the roles of the pressure value and the normal coordinate
xg = HalfSpaceGrid(1, 2.0, 64)
yg = HalfSpaceGrid(1, 4.0, 128, origin=-1.0)
x = xg.normal_centers
zeta = ScalarField(xg, x + 0.3 * np.sin(x) * np.exp(-x))
back = hodograph(hodograph_inverse(zeta, yg), xg)
print("hodograph round trip:", np.abs(back.values - zeta.values)[x < 1.5].max())

# %% quasi-isometry of y = (x', zeta(x)) for a small perturbation
g2 = HalfSpaceGrid(2, 4.0, 32, 2 * np.pi, 32)
zt, zn = g2.coords()
print("identity:", quasi_isometry_ratio(ScalarField(g2, zn)))
print("eps = 0.05:", quasi_isometry_ratio(ScalarField(g2, zn + 0.05 * np.sin(zt) * zn * np.exp(-zn))))
