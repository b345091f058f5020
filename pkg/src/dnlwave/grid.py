"""Cell-centered half-space grids, fields and finite-difference stencils.

Arrays are laid out with the normal index last, ``values[j, i]`` for
tangential index ``j`` and normal index ``i`` (or ``values[i]`` in 1D).
Normal boundaries use ghost values from cubic extrapolation unless a
mirror (zero normal derivative) is requested, so that central stencils
stay second order up to the boundary. The tangential direction is periodic.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Jet


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class HalfSpaceGrid:
    """Slab ``[origin, origin + z_max]`` in the normal direction, periodic tangentially.

    ``origin`` is 0 for the half-space itself; lab-frame density solves use
    a negative origin so the free boundary can move downward.
    """

    dim: int
    z_max: float
    n_normal: int
    tangential_extent: float = 2.0 * np.pi
    n_tangential: int = 1
    origin: float = 0.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise GridError("dim must be 1 or 2")
        if self.z_max <= 0 or self.n_normal <= 0:
            raise GridError("z_max and n_normal must be positive")
        if self.dim == 1:
            object.__setattr__(self, "n_tangential", 1)
        elif self.n_tangential <= 0 or self.tangential_extent <= 0:
            raise GridError("tangential extent and cell count must be positive")

    @property
    def shape(self) -> tuple:
        if self.dim == 1:
            return (self.n_normal,)
        return (self.n_tangential, self.n_normal)

    @property
    def h_normal(self) -> float:
        return self.z_max / self.n_normal

    @property
    def h_tangential(self) -> float:
        return self.tangential_extent / self.n_tangential

    @property
    def spacings(self) -> tuple:
        if self.dim == 1:
            return (self.h_normal,)
        return (self.h_tangential, self.h_normal)

    @property
    def h_min(self) -> float:
        return min(self.spacings)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def normal_centers(self) -> np.ndarray:
        return self.origin + (np.arange(self.n_normal) + 0.5) * self.h_normal

    @property
    def tangential_centers(self) -> np.ndarray:
        return (np.arange(self.n_tangential) + 0.5) * self.h_tangential

    def coords(self) -> tuple:
        """Coordinate arrays of cell centers, tangential first."""
        if self.dim == 1:
            return (self.normal_centers.copy(),)
        zt, zn = np.meshgrid(self.tangential_centers, self.normal_centers, indexing="ij")
        return (zt, zn)

    @property
    def z_normal(self) -> np.ndarray:
        return self.coords()[-1]

    def refined(self) -> "HalfSpaceGrid":
        return HalfSpaceGrid(self.dim, self.z_max, 2 * self.n_normal,
                             self.tangential_extent, 2 * self.n_tangential if self.dim == 2 else 1,
                             self.origin)

    def coarsened(self) -> "HalfSpaceGrid":
        if self.n_normal % 2 or (self.dim == 2 and self.n_tangential % 2):
            raise GridError("cannot coarsen a grid with an odd cell count")
        return HalfSpaceGrid(self.dim, self.z_max, self.n_normal // 2,
                             self.tangential_extent, max(self.n_tangential // 2, 1),
                             self.origin)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "z_max": self.z_max,
            "n_normal": self.n_normal,
            "tangential_extent": self.tangential_extent,
            "n_tangential": self.n_tangential,
            "origin": self.origin,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HalfSpaceGrid":
        return cls(int(d["dim"]), float(d["z_max"]), int(d["n_normal"]),
                   float(d.get("tangential_extent", 2 * np.pi)),
                   int(d.get("n_tangential", 1)), float(d.get("origin", 0.0)))


@dataclass(frozen=True)
class ScalarField:
    grid: HalfSpaceGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise GridError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise GridError("field values must be finite")
        if self.time < 0:
            raise GridError("time must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values, time=None) -> "ScalarField":
        return ScalarField(self.grid, values, self.time if time is None else time)

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)


@dataclass(frozen=True)
class FieldSequence:
    fields: tuple = field(default_factory=tuple)

    def __post_init__(self):
        fields = tuple(self.fields)
        if not fields:
            raise GridError("empty field sequence")
        grid = fields[0].grid
        for f in fields[1:]:
            if f.grid != grid:
                raise GridError("all snapshots must share one grid")
        t = np.array([f.time for f in fields])
        if np.any(np.diff(t) <= 0):
            raise GridError("snapshot times must be strictly increasing")
        object.__setattr__(self, "fields", fields)

    @property
    def grid(self) -> HalfSpaceGrid:
        return self.fields[0].grid

    @property
    def times(self) -> np.ndarray:
        return np.array([f.time for f in self.fields])

    def stack(self) -> np.ndarray:
        return np.stack([f.values for f in self.fields])

    def __len__(self):
        return len(self.fields)

    def __getitem__(self, k):
        return self.fields[k]

    def __iter__(self):
        return iter(self.fields)

    def map(self, fn) -> "FieldSequence":
        return FieldSequence(tuple(f.with_values(fn(f)) for f in self.fields))

    @classmethod
    def from_arrays(cls, grid, times, arrays) -> "FieldSequence":
        return cls(tuple(ScalarField(grid, a, float(t)) for t, a in zip(times, arrays)))


# ---------------------------------------------------------------- stencils

def _check_size(grid: HalfSpaceGrid):
    if grid.n_normal < 4:
        raise GridError("need at least 4 cells in the normal direction")
    if grid.dim == 2 and grid.n_tangential < 3:
        raise GridError("need at least 3 cells in the tangential direction")


def pad_normal(v: np.ndarray, top: str = "extrapolate", bottom: str = "extrapolate") -> np.ndarray:
    """Append one ghost layer at each end of the last axis."""
    def ghost(a0, a1, a2, a3, kind):
        if kind == "extrapolate":
            return 4.0 * a0 - 6.0 * a1 + 4.0 * a2 - a3
        if kind == "mirror":
            return a0
        raise ValueError(f"unknown boundary kind {kind!r}")

    lo = ghost(v[..., 0], v[..., 1], v[..., 2], v[..., 3], bottom)
    hi = ghost(v[..., -1], v[..., -2], v[..., -3], v[..., -4], top)
    return np.concatenate([lo[..., None], v, hi[..., None]], axis=-1)


def d_normal(v, h, top="extrapolate", bottom="extrapolate"):
    p = pad_normal(v, top, bottom)
    return (p[..., 2:] - p[..., :-2]) / (2.0 * h)


def d2_normal(v, h, top="extrapolate", bottom="extrapolate"):
    p = pad_normal(v, top, bottom)
    return (p[..., 2:] - 2.0 * p[..., 1:-1] + p[..., :-2]) / h**2


def d_tangential(v, h):
    return (np.roll(v, -1, axis=-2) - np.roll(v, 1, axis=-2)) / (2.0 * h)


def d2_tangential(v, h):
    return (np.roll(v, -1, axis=-2) - 2.0 * v + np.roll(v, 1, axis=-2)) / h**2


def gradient_array(v, grid: HalfSpaceGrid, top="extrapolate", bottom="extrapolate"):
    """Gradient of raw values; shape ``(dim, *grid.shape)``."""
    _check_size(grid)
    dn = d_normal(v, grid.h_normal, top, bottom)
    if grid.dim == 1:
        return dn[None]
    return np.stack([d_tangential(v, grid.h_tangential), dn])


def hessian_array(v, grid: HalfSpaceGrid, top="extrapolate", bottom="extrapolate"):
    """Hessian of raw values; shape ``(dim, dim, *grid.shape)``."""
    _check_size(grid)
    hn = grid.h_normal
    dnn = d2_normal(v, hn, top, bottom)
    if grid.dim == 1:
        return dnn[None, None]
    ht = grid.h_tangential
    dtt = d2_tangential(v, ht)
    dtn = d_tangential(d_normal(v, hn, top, bottom), ht)
    return np.stack([np.stack([dtt, dtn]), np.stack([dtn, dnn])])


def third_array(v, grid: HalfSpaceGrid, top="extrapolate", bottom="extrapolate"):
    """All third derivatives by differencing the Hessian; shape ``(dim,)*3 + shape``."""
    hess = hessian_array(v, grid, top, bottom)
    dim = grid.dim
    out = np.empty((dim, dim, dim) + grid.shape)
    for i in range(dim):
        for j in range(dim):
            out[i, j] = gradient_array(hess[i, j], grid, top, bottom)
    return out


def gradient(field: ScalarField) -> np.ndarray:
    return gradient_array(field.values, field.grid)


def hessian(field: ScalarField) -> np.ndarray:
    return hessian_array(field.values, field.grid)


def jet_at(field: ScalarField, cell) -> Jet:
    """Derivative bundle of ``field`` at ``cell`` (an index tuple or int)."""
    cell = (cell,) if np.ndim(cell) == 0 else tuple(cell)
    g = gradient(field)[(slice(None),) + cell]
    hs = hessian(field)[(slice(None), slice(None)) + cell]
    z_n = field.grid.z_normal[cell]
    return Jet(float(z_n), float(field.values[cell]), tuple(g[:-1]), float(g[-1]), hs)


# ------------------------------------------------------- grid transfer

def refine(field: ScalarField) -> ScalarField:
    """Values on the grid with halved spacings, by linear interpolation."""
    v = field.values
    grid = field.grid
    below = np.concatenate([2.0 * v[..., :1] - v[..., 1:2], v[..., :-1]], axis=-1)
    above = np.concatenate([v[..., 1:], 2.0 * v[..., -1:] - v[..., -2:-1]], axis=-1)
    lo = 0.75 * v + 0.25 * below
    hi = 0.75 * v + 0.25 * above
    fine = np.stack([lo, hi], axis=-1).reshape(v.shape[:-1] + (2 * v.shape[-1],))
    if grid.dim == 2:
        left = 0.75 * fine + 0.25 * np.roll(fine, 1, axis=0)
        right = 0.75 * fine + 0.25 * np.roll(fine, -1, axis=0)
        fine = np.stack([left, right], axis=1).reshape((2 * v.shape[0], fine.shape[-1]))
    return ScalarField(grid.refined(), fine, field.time)


def restrict(field: ScalarField) -> ScalarField:
    """Cell averages on the grid with doubled spacings."""
    grid = field.grid
    coarse_grid = grid.coarsened()
    v = field.values
    v = v.reshape(v.shape[:-1] + (v.shape[-1] // 2, 2)).mean(axis=-1)
    if grid.dim == 2:
        v = v.reshape((v.shape[0] // 2, 2, v.shape[1])).mean(axis=1)
    return ScalarField(coarse_grid, v, field.time)


def sample_normal(field_values, grid: HalfSpaceGrid, points):
    """Linear interpolation along the normal axis at ``points`` (same per column)."""
    zc = grid.normal_centers
    v = np.atleast_2d(field_values)
    out = np.array([np.interp(points, zc, col) for col in v])
    return out[0] if grid.dim == 1 else out


# -------------------------------------------------------------- serialization

def field_filename(stem: str, time: float) -> str:
    return f"{stem}_t{time:.6e}.csv"


def write_field_csv(field: ScalarField, directory, stem: str = "field", params=None) -> Path:
    """Write ``field`` as CSV plus a JSON sidecar carrying time, exponents and grid."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / field_filename(stem, field.time)
    grid = field.grid
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if grid.dim == 1:
            writer.writerow(["z_normal", "value"])
            for zn, val in zip(grid.normal_centers, field.values):
                writer.writerow([repr(float(zn)), repr(float(val))])
        else:
            writer.writerow(["z_tangential", "z_normal", "value"])
            for j, zt in enumerate(grid.tangential_centers):
                for i, zn in enumerate(grid.normal_centers):
                    writer.writerow([repr(float(zt)), repr(float(zn)), repr(float(field.values[j, i]))])
    sidecar = {
        "time": field.time,
        "m": None if params is None else params.m,
        "p": None if params is None else params.p,
        "grid": grid.to_dict(),
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2))
    return path


def read_field_csv(path) -> ScalarField:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    grid = HalfSpaceGrid.from_dict(meta["grid"])
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    values = data[:, -1].reshape(grid.shape)
    return ScalarField(grid, values, float(meta["time"]))


def write_sequence_csv(seq: FieldSequence, directory, stem="field", params=None) -> list:
    return [write_field_csv(f, directory, stem, params) for f in seq]
