"""Degenerate geometry of the half-space, Carleson-type norms and the hodograph map.

The distance used throughout is
``d(z, z') = |z - z'| / (sqrt(z_n) + sqrt(z'_n) + sqrt|z - z'|)``,
with minimum-image tangential differences on periodic grids.
Norm suprema run over a lattice of radii ``r**2 = T * 10**(-j/levels)`` and
centers on every ``stride``-th cell plus the whole boundary-adjacent row.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .grid import (FieldSequence, HalfSpaceGrid, ScalarField, gradient_array,
                   hessian_array, third_array)


class EmptyBallError(ValueError):
    pass


class SnapshotDensityError(ValueError):
    pass


class HodographError(ValueError):
    pass


def cc_distance(z, zp):
    """Distance adapted to the degeneracy at ``z_n = 0``; vectorized over leading axes."""
    z = np.asarray(z, dtype=float)
    zp = np.asarray(zp, dtype=float)
    if np.any(z[..., -1] < 0) or np.any(zp[..., -1] < 0):
        raise ValueError("points must lie in the closed half-space")
    diff = np.sqrt(((z - zp) ** 2).sum(axis=-1))
    den = np.sqrt(z[..., -1]) + np.sqrt(zp[..., -1]) + np.sqrt(diff)
    out = np.divide(diff, den, out=np.zeros_like(diff), where=diff > 0)
    return float(out) if out.ndim == 0 else out


def _grid_distances(grid: HalfSpaceGrid, centers) -> np.ndarray:
    """Distances from each center (rows) to every cell, periodic tangentially."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    coords = grid.coords()
    zn = coords[-1].ravel()
    dn = zn[None, :] - centers[:, -1:]
    sq = dn**2
    if grid.dim == 2:
        L = grid.tangential_extent
        dt = coords[0].ravel()[None, :] - centers[:, :1]
        dt = dt - L * np.round(dt / L)
        sq = sq + dt**2
    diff = np.sqrt(sq)
    den = np.sqrt(zn)[None, :] + np.sqrt(centers[:, -1:]) + np.sqrt(diff)
    return np.divide(diff, den, out=np.zeros_like(diff), where=diff > 0)


def cc_ball(grid: HalfSpaceGrid, z_hat, r: float):
    """Boolean mask of cells whose centers lie within distance ``r`` of ``z_hat`` and its measure."""
    if r <= 0:
        raise ValueError("radius must be positive")
    mask = (_grid_distances(grid, z_hat)[0] < r).reshape(grid.shape)
    if not mask.any():
        raise EmptyBallError(f"ball of radius {r} around {z_hat} contains no cell")
    return mask, float(mask.sum() * grid.cell_volume)


@dataclass(frozen=True)
class Cylinder:
    """Parabolic cylinder ``(r^2/2, r^2) x B_r(z_hat)``."""

    r: float
    z_hat: tuple

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("radius must be positive")
        if self.z_hat[-1] < 0:
            raise ValueError("center must lie in the closed half-space")
        object.__setattr__(self, "z_hat", tuple(float(c) for c in self.z_hat))

    @property
    def window(self) -> tuple:
        return (0.5 * self.r**2, self.r**2)

    def cells(self, grid: HalfSpaceGrid) -> np.ndarray:
        return cc_ball(grid, self.z_hat, self.r)[0]

    def measure(self, grid: HalfSpaceGrid) -> float:
        """Space-time measure: window length times enumerated ball volume."""
        return 0.5 * self.r**2 * cc_ball(grid, self.z_hat, self.r)[1]


def lipschitz_seminorm(obj) -> float:
    """Largest gradient magnitude over all cells (and snapshots)."""
    fields = obj.fields if isinstance(obj, FieldSequence) else (obj,)
    return max(float(np.sqrt((gradient_array(f.values, f.grid) ** 2).sum(axis=0)).max())
               for f in fields)


# ------------------------------------------------------------------ norms

@dataclass(frozen=True)
class Lattice:
    levels_per_decade: int = 8
    stride: int = 2

    def radii_squared(self, T: float, t_min: float) -> np.ndarray:
        """Squared radii ``T 10^(-j/levels)`` whose windows ``(r^2/2, r^2)`` start at or after ``t_min``."""
        out = []
        j = 0
        while True:
            r2 = T * 10.0 ** (-j / self.levels_per_decade)
            if r2 / 2.0 < t_min * (1 - 1e-12):
                break
            out.append(r2)
            j += 1
        return np.array(out)

    def centers(self, grid: HalfSpaceGrid) -> np.ndarray:
        """Center points ``(z', z_n)`` of the sup lattice, shape ``(k, dim)``."""
        s = self.stride
        mask = np.zeros(grid.shape, dtype=bool)
        if grid.dim == 1:
            mask[::s] = True
        else:
            mask[::s, ::s] = True
        mask[..., 0] = True
        coords = grid.coords()
        return np.stack([c[mask] for c in coords], axis=-1)


@dataclass
class NormReport:
    lipschitz: float = 0.0
    x_components: dict = field(default_factory=dict)
    y_components: dict = field(default_factory=dict)
    q: float = 0.0
    T: float = 0.0
    lattice: dict = field(default_factory=dict)

    @property
    def x_total(self) -> float:
        return float(sum(v[0] for v in self.x_components.values()))

    @property
    def y_total(self) -> float:
        return float(sum(v[0] for v in self.y_components.values()))

    def to_dict(self) -> dict:
        def pack(comps):
            return {k: {"value": v[0], "r": v[1],
                        "z_hat": None if v[2] is None else list(map(float, v[2]))}
                    for k, v in comps.items()}
        return {
            "lipschitz": self.lipschitz,
            "x_total": self.x_total,
            "y_total": self.y_total,
            "x_components": pack(self.x_components),
            "y_components": pack(self.y_components),
            "q": self.q,
            "T": self.T,
            "lattice": self.lattice,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _time_weights(times: np.ndarray, a: float, b: float) -> np.ndarray:
    """Length of ``(a, b)`` covered by each snapshot's nearest-time interval."""
    mids = 0.5 * (times[1:] + times[:-1])
    lo = np.concatenate([[times[0]], mids])
    hi = np.concatenate([mids, [times[-1]]])
    return np.clip(np.minimum(hi, b) - np.maximum(lo, a), 0.0, None)


def _carleson_sup(grid, times, densities, weight_fns, q, T, lattice, chunk=256):
    """Sup over the lattice of ``weight(r, zhat) |Q_r|^(-1/q) ||density||_{L^q(Q_r)}``.

    ``densities`` is a list of nonnegative arrays of shape ``(n_t, *grid.shape)``.
    Returns one ``(value, r, z_hat)`` per density.
    """
    positive = times[times > 0]
    if positive.size == 0:
        raise SnapshotDensityError("no snapshot with positive time")
    r2s = lattice.radii_squared(T, positive[0])
    if r2s.size == 0:
        raise SnapshotDensityError("no admissible radius: snapshots start too late")
    ncomp = len(densities)
    powered = np.stack([d.reshape(d.shape[0], -1) ** q for d in densities])  # (c, n_t, cells)
    integrated = []
    for r2 in r2s:
        w = _time_weights(times, r2 / 2.0, r2)
        if np.count_nonzero(w) < 2:
            raise SnapshotDensityError(f"window ({r2 / 2:.3g}, {r2:.3g}) holds fewer than 2 snapshots")
        integrated.append(np.einsum("t,ctn->cn", w, powered))
    integrated = np.stack(integrated, axis=1)  # (c, n_r, cells)
    vol = grid.cell_volume
    centers = lattice.centers(grid)
    best = [(0.0, None, None)] * ncomp
    for start in range(0, len(centers), chunk):
        cz = centers[start:start + chunk]
        dist = _grid_distances(grid, cz)
        sq_n = np.sqrt(cz[:, -1])
        for ir, r2 in enumerate(r2s):
            r = np.sqrt(r2)
            mask = dist < r
            count = mask.sum(axis=1)
            qvol = 0.5 * r2 * count * vol
            sums = mask.astype(float) @ integrated[:, ir, :].T * vol  # (k, c)
            for c in range(ncomp):
                vals = weight_fns[c](r, sq_n) * (sums[:, c] / qvol) ** (1.0 / q)
                k = int(np.argmax(vals))
                if vals[k] > best[c][0]:
                    best[c] = (float(vals[k]), float(r), cz[k].copy())
    return best


def _in_window(seq: FieldSequence, T: float):
    t = seq.times
    keep = t <= T * (1 + 1e-12)
    return t[keep], seq.stack()[keep]


def y_norm(f: FieldSequence, q: float, T: Optional[float] = None,
           lattice: Lattice = Lattice()) -> NormReport:
    """Sum over ``|beta| in {0, 1}`` of the Carleson-type suprema of ``f``."""
    grid = f.grid
    T = float(f.times[-1]) if T is None else float(T)
    times, vals = _in_window(f, T)
    absf = np.abs(vals)
    gradf = np.stack([np.sqrt((gradient_array(v, grid) ** 2).sum(axis=0)) for v in vals])
    weights = [lambda r, s: r / (r + s), lambda r, s: r**2 + 0.0 * s]
    comps = _carleson_sup(grid, times, [absf, gradf], weights, q, T, lattice)
    return NormReport(y_components={"beta0": comps[0], "beta1": comps[1]}, q=q, T=T,
                      lattice=asdict(lattice))


def x_norm(w: FieldSequence, q: float, T: Optional[float] = None,
           lattice: Lattice = Lattice()) -> NormReport:
    """All five components of the maximal-regularity norm of ``w``."""
    grid = w.grid
    T = float(w.times[-1]) if T is None else float(T)
    times, vals = _in_window(w, T)
    zn = grid.z_normal
    grads = np.stack([gradient_array(v, grid) for v in vals])          # (t, d, ...)
    hess = np.stack([hessian_array(v, grid) for v in vals])            # (t, d, d, ...)
    third = np.stack([third_array(v, grid) for v in vals])             # (t, d, d, d, ...)
    dgrad_dt = np.gradient(grads, times, axis=0) if len(times) > 1 else np.zeros_like(grads)

    grad_mag = np.sqrt((grads**2).sum(axis=1))
    hess_mag = np.sqrt((hess**2).sum(axis=(1, 2)))
    third_mag = np.sqrt((third**2).sum(axis=(1, 2, 3)))
    dt_mag = np.sqrt((dgrad_dt**2).sum(axis=1))

    positive = times > 0
    lip = float(grad_mag[positive].max()) if positive.any() else float(grad_mag.max())
    tw = np.sqrt(times)[:, None] if grid.dim == 1 else np.sqrt(times)[:, None, None]
    hsup = float((tw * np.sqrt(zn) * hess_mag)[positive].max()) if positive.any() else 0.0

    weights = [
        lambda r, s: r**2 * (r + s) / r,
        lambda r, s: r**2 + 0.0 * s,
        lambda r, s: r**2 + 0.0 * s,
    ]
    comps = _carleson_sup(grid, times, [hess_mag, dt_mag, zn * third_mag], weights, q, T, lattice)
    x = {
        "grad_sup": (lip, None, None),
        "sqrt_t_zn_hess_sup": (hsup, None, None),
        "E(0,0,1)": comps[0],
        "E(0,1,0)": comps[1],
        "E(1,0,2)": comps[2],
    }
    return NormReport(lipschitz=lip, x_components=x, q=q, T=T, lattice=asdict(lattice))


def norm_report(w: FieldSequence, f: Optional[FieldSequence], q: float,
                T: Optional[float] = None, lattice: Lattice = Lattice()) -> NormReport:
    rep = x_norm(w, q, T, lattice)
    if f is not None:
        rep.y_components = y_norm(f, q, T, lattice).y_components
    return rep


# ------------------------------------------------------------- hodograph

def _monotone_inverse(values, positions, levels, where, min_slope):
    """Positions where a monotone piecewise-linear column reaches ``levels``."""
    slope = np.diff(values) / np.diff(positions)
    bad = slope < min_slope
    if np.any(bad):
        k = int(np.argmax(bad))
        raise HodographError(
            f"normal slope {slope[k]:.3g} < {min_slope} near position {positions[k]:.4g} ({where})")
    if levels.max() > values[-1] + 1e-12:
        raise HodographError(f"level {levels.max():.4g} above the top value {values[-1]:.4g} ({where})")
    return np.interp(levels, values, positions)


def hodograph(g: ScalarField, x_grid: HalfSpaceGrid, min_slope: float = 0.1,
              shift: float = 0.0, support_level: float = 0.25) -> ScalarField:
    """Graph variable ``zeta`` with ``g(y', zeta(x)) = x_n`` on ``x_grid``.

    Each column of ``g`` is inverted on its support; below the first positive
    cell the support is extended linearly down to the level 0. ``shift`` is added to the result (e.g. ``V tau`` for the wave frame).
    """
    ygrid = g.grid
    yc = ygrid.normal_centers
    levels = x_grid.normal_centers
    cols = np.atleast_2d(g.values)
    out = np.empty((cols.shape[0], levels.size))
    for j, col in enumerate(cols):
        pos = np.nonzero((col > 0) & (col >= support_level * ygrid.h_normal))[0]
        if pos.size == 0:
            raise HodographError(f"column {j} has empty support")
        i0 = pos[0]
        if col.size - i0 < 2:
            raise HodographError(f"column {j} has fewer than two support cells")
        # replace the segment across the free boundary by the support's own extrapolation
        edge = yc[i0] - col[i0] * (yc[i0 + 1] - yc[i0]) / (col[i0 + 1] - col[i0])
        vals = np.concatenate([[0.0], col[i0:]])
        pts = np.concatenate([[edge], yc[i0:]])
        out[j] = _monotone_inverse(vals, pts, levels, f"column {j}", min_slope) + shift
    return ScalarField(x_grid, out[0] if x_grid.dim == 1 else out, g.time)


def hodograph_inverse(zeta: ScalarField, y_grid: HalfSpaceGrid, shift: float = 0.0) -> ScalarField:
    """Pressure ``g`` on ``y_grid`` from the graph variable; zero below the support."""
    xc = zeta.grid.normal_centers
    yc = y_grid.normal_centers + shift
    cols = np.atleast_2d(zeta.values)
    out = np.empty((cols.shape[0], yc.size))
    for j, col in enumerate(cols):
        if np.any(np.diff(col) <= 0):
            raise HodographError(f"zeta not increasing in column {j}")
        # extend linearly to the level 0 and above the top level
        lo = col[0] - (col[1] - col[0]) / (xc[1] - xc[0]) * xc[0]
        top_slope = (col[-1] - col[-2]) / (xc[-1] - xc[-2])
        hi_x = xc[-1] + (yc.max() - col[-1]) / top_slope if yc.max() > col[-1] else xc[-1]
        zc = np.concatenate([[lo], col, [col[-1] + top_slope * (hi_x - xc[-1])]])
        xx = np.concatenate([[0.0], xc, [hi_x]])
        out[j] = np.where(yc <= lo, 0.0, np.interp(yc, zc, xx))
    return ScalarField(y_grid, out[0] if y_grid.dim == 1 else out, zeta.time)


def quasi_isometry_ratio(zeta: ScalarField, n_pairs: int = 10_000, seed: int = 0,
                         normal_only: bool = False):
    """Extremes of ``|y - y_hat| / |x - x_hat|`` over random pairs of cell centers.

    ``y = (x', zeta(x))``. With ``normal_only`` the pairs share their
    tangential index.
    """
    grid = zeta.grid
    rng = np.random.default_rng(seed)
    coords = [c.ravel() for c in grid.coords()]
    zv = zeta.values.ravel()
    n = zv.size
    if normal_only:
        nn = grid.n_normal
        col = rng.integers(0, n // nn, n_pairs)
        a = col * nn + rng.integers(0, nn, n_pairs)
        b = col * nn + rng.integers(0, nn, n_pairs)
    else:
        a = rng.integers(0, n, n_pairs)
        b = rng.integers(0, n, n_pairs)
    keep = a != b
    a, b = a[keep], b[keep]
    dx2 = (coords[-1][a] - coords[-1][b]) ** 2
    dy2 = (zv[a] - zv[b]) ** 2
    if grid.dim == 2:
        L = grid.tangential_extent
        dt = coords[0][a] - coords[0][b]
        dt = dt - L * np.round(dt / L)
        dx2 = dx2 + dt**2
        dy2 = dy2 + dt**2
    ratio = np.sqrt(dy2) / np.sqrt(dx2)
    return float(ratio.min()), float(ratio.max())
