"""Perturbation equation on the fixed half-space.

Evolves ``d_t w + L_sigma w = N[w]`` by forward Euler on a cell-centered
slab ``0 < z_n < z_max`` with zero normal derivative at the top and no
condition at the degenerate boundary ``z_n = 0`` (one-sided stencils there).
Also holds the graph variable ``zeta = x_n + w`` and the residual of the
equation it satisfies.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .direct import CFLError, SolverError
from .grid import (FieldSequence, HalfSpaceGrid, ScalarField, gradient_array,
                   hessian_array)
from .model import (DegenerateJetError, ModelParams, apply_L_sigma_arrays,
                    nonlinearity_arrays, transformed_rate)


@dataclass(frozen=True)
class TransformMeta:
    """Rescalings between lab variables and perturbation variables.

    Perturbation time is ``time_scale_total * tau`` (wave time ``V tau``
    stretched by ``m+p-3``); tangential coordinates are ``z' = tangential_scale * x'``.
    """

    time_scale_total: float
    tangential_scale: float

    def __post_init__(self):
        if self.time_scale_total <= 0 or self.tangential_scale <= 0:
            raise ValueError("rescaling factors must be positive")

    @classmethod
    def from_params(cls, params: ModelParams) -> "TransformMeta":
        return cls((params.m + params.p - 3.0) * params.wave_speed, np.sqrt(params.p - 1.0))

    def to_dict(self) -> dict:
        return {"time_scale_total": self.time_scale_total,
                "tangential_scale": self.tangential_scale}


def geometric_times(t_first: float, t_end: float, per_octave: int = 8) -> np.ndarray:
    """Times ``t_end * 2**(-k/per_octave)`` down to ``t_first``, ascending."""
    n = int(np.floor(per_octave * np.log2(t_end / t_first) + 1e-9))
    return t_end * 2.0 ** (-np.arange(n, -1, -1) / per_octave)


@dataclass(frozen=True)
class PerturbationConfig:
    cfl_factor: float = 0.8
    snapshot_times: Optional[tuple] = None
    max_gradient: float = 0.5
    form: str = "consistent"

    def __post_init__(self):
        if not 0.0 < self.cfl_factor <= 1.0:
            raise ValueError("cfl_factor must lie in (0, 1]")

    def snapshots(self, t_end: float) -> np.ndarray:
        if self.snapshot_times is None:
            return geometric_times(1e-3 * t_end, t_end)
        return np.asarray(sorted(self.snapshot_times), dtype=float)


def apply_L_sigma(field: ScalarField, sigma: float, top: str = "extrapolate") -> ScalarField:
    """``-z_n lap w - (sigma+1) d_n w`` with one-sided stencils at ``z_n = 0``."""
    grid = field.grid
    g = gradient_array(field.values, grid, top=top)
    hs = hessian_array(field.values, grid, top=top)
    return field.with_values(apply_L_sigma_arrays(grid.z_normal, g, hs, sigma))


def check_commutation(field: ScalarField, sigma: float, margin: int = 2) -> float:
    """Largest defect of ``d_n L_sigma w = L_{sigma+1} d_n w - lap' w`` away from the normal ends."""
    grid = field.grid
    v = field.values
    lhs = gradient_array(apply_L_sigma(field, sigma).values, grid)[-1]
    dn = field.with_values(gradient_array(v, grid)[-1])
    rhs = apply_L_sigma(dn, sigma + 1.0).values
    if grid.dim == 2:
        rhs = rhs - hessian_array(v, grid)[0, 0]
    defect = np.abs(lhs - rhs)[..., margin:grid.n_normal - margin]
    return float(defect.max())


def perturbation_rhs(values: np.ndarray, grid: HalfSpaceGrid, params: ModelParams,
                     form: str = "consistent", max_gradient: float = np.inf) -> np.ndarray:
    """``N[w] - L_sigma w`` with a mirrored ghost layer at the top."""
    g = gradient_array(values, grid, top="mirror")
    gmax = float(np.sqrt((g**2).sum(axis=0)).max())
    if gmax >= max_gradient:
        raise SolverError(f"|grad w| = {gmax:.3f} left the admissible range (< {max_gradient})")
    hs = hessian_array(values, grid, top="mirror")
    zn = grid.z_normal
    return nonlinearity_arrays(zn, g, hs, params, form) - apply_L_sigma_arrays(zn, g, hs, params.sigma)


def stable_dt_perturbation(grid: HalfSpaceGrid, cfl_factor: float) -> float:
    return cfl_factor * grid.h_min**2 / (2.0 * grid.dim * grid.z_max)


def _euler(values, dt, grid, params, config):
    new = values + dt * perturbation_rhs(values, grid, params, config.form, config.max_gradient)
    bad = ~np.isfinite(new)
    if bad.any():
        raise SolverError(f"non-finite perturbation at cell {tuple(np.argwhere(bad)[0])}")
    return new


def step_perturbation(w: ScalarField, dt: float, params: ModelParams,
                      config: PerturbationConfig = PerturbationConfig()) -> ScalarField:
    limit = stable_dt_perturbation(w.grid, config.cfl_factor)
    if dt > limit * (1.0 + 1e-12):
        raise CFLError(f"dt={dt:.3e} exceeds the stable step {limit:.3e}")
    return w.with_values(_euler(w.values, dt, w.grid, params, config), w.time + dt)


def solve_perturbation(w0: ScalarField, t_end: float, params: ModelParams,
                       config: PerturbationConfig = PerturbationConfig()) -> FieldSequence:
    """March ``w0`` to ``t_end``; snapshots on the configured (geometric) time grid."""
    grid = w0.grid
    dt_max = stable_dt_perturbation(grid, config.cfl_factor)
    targets = [t for t in config.snapshots(t_end) if w0.time < t < t_end] + [t_end]
    w = np.array(w0.values)
    t = w0.time
    snaps = [w0]
    for target in targets:
        n = max(1, int(np.ceil((target - t) / dt_max - 1e-9)))
        dt = (target - t) / n
        for _ in range(n):
            w = _euler(w, dt, grid, params, config)
        t = target
        snaps.append(ScalarField(grid, w.copy(), t))
    return FieldSequence(tuple(snaps))


def zeta_of(w: ScalarField, meta: TransformMeta) -> ScalarField:
    """``zeta = x_n + w`` on the grid with the tangential rescaling undone."""
    g = w.grid
    xgrid = HalfSpaceGrid(g.dim, g.z_max, g.n_normal,
                          g.tangential_extent / meta.tangential_scale, g.n_tangential, g.origin)
    return ScalarField(xgrid, xgrid.z_normal + w.values, w.time)


def zeta_sequence(seq: FieldSequence, meta: TransformMeta) -> FieldSequence:
    return FieldSequence(tuple(zeta_of(f, meta) for f in seq))


def transformed_spatial_rate(zeta: ScalarField, params: ModelParams, form: str = "consistent"):
    grid = zeta.grid
    g = gradient_array(zeta.values, grid)
    if np.any(g[-1] <= 0.1):
        raise DegenerateJetError("d_n zeta <= 0.1")
    hs = hessian_array(zeta.values, grid)
    return transformed_rate(grid.z_normal, g, hs, params, form)


def residual_transformed(seq: FieldSequence, params: ModelParams,
                         meta: Optional[TransformMeta] = None, time_unit: str = "perturbation",
                         form: str = "consistent") -> FieldSequence:
    """Residual of the graph-variable equation at interior snapshots.

    Time derivatives are centered differences between neighbouring
    snapshots. ``time_unit="lab"`` means the snapshot times are lab times and
    are converted with ``meta.time_scale_total``.
    """
    if len(seq) < 2:
        raise ValueError("need at least two snapshots")
    scale = 1.0
    if time_unit == "lab":
        meta = meta or TransformMeta.from_params(params)
        scale = meta.time_scale_total
    t = seq.times * scale
    vals = seq.stack()
    out = []
    idx = range(1, len(seq) - 1) if len(seq) > 2 else [0]
    for k in idx:
        if len(seq) > 2:
            dzdt = (vals[k + 1] - vals[k - 1]) / (t[k + 1] - t[k - 1])
        else:
            dzdt = (vals[1] - vals[0]) / (t[1] - t[0])
        rate = transformed_spatial_rate(seq[k], params, form)
        out.append(ScalarField(seq.grid, dzdt - rate, seq[k].time))
    return FieldSequence(tuple(out))


def residual_table(res: FieldSequence) -> list:
    """Rows ``(time, max_residual, l2_residual)``."""
    vol = res.grid.cell_volume
    return [(f.time, float(np.abs(f.values).max()), float(np.sqrt((f.values**2).sum() * vol)))
            for f in res]
