"""Reproducible experiments with machine-readable verdicts.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns a plain
dict report holding the data series and a ``verdict`` block. Thresholds are
calibrated defaults, overridable through the config.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .direct import (DirectSolverConfig, pressure_of, solve_density,
                     support_boundary)
from .geometry import (Lattice, hodograph, hodograph_inverse, lipschitz_seminorm,
                       quasi_isometry_ratio, x_norm, y_norm)
from .grid import (FieldSequence, HalfSpaceGrid, ScalarField, gradient_array,
                   hessian_array, third_array)
from .model import ModelParams, new_params, nonlinearity_arrays, traveling_wave_density
from .perturbation import (PerturbationConfig, TransformMeta, check_commutation,
                           geometric_times, solve_perturbation, zeta_of)

FAMILIES = ("sine_bump", "sine_exp", "radial_bump", "traveling_wave", "zero")
KINDS = ("traveling_wave", "commutation", "hodograph")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Flat description of one experiment; every field has a usable default."""

    name: str = "experiment"
    m: float = 2.0
    p: float = 2.0
    dim: int = 1
    # lab-frame (direct) grid; origin=None puts the bottom V*T + 0.5 below zero
    n_normal: int = 128
    n_tangential: int = 32
    top: float = 1.5
    origin: Optional[float] = None
    tangential_period: float = 2.0 * np.pi
    # perturbation grid on (0, pert_z_max)
    pert_n_normal: int = 32
    pert_z_max: float = 4.0
    family: str = "sine_bump"
    epsilon: float = 0.05
    bump_width: float = 1.5
    T: float = 1.0
    cfl_factor: float = 0.9
    pert_cfl_factor: float = 0.8
    form: str = "consistent"
    q: float = 8.0
    levels: int = 3
    epsilons: tuple = (0.01, 0.02, 0.05, 0.1)
    n_jets: int = 100_000
    jet_gradient: float = 0.1
    jet_z_max: float = 10.0
    n_pairs: int = 10_000
    compare_cap: float = 3.0
    kind: str = "traveling_wave"
    out: str = "out"
    seed: int = 0
    # calibrated thresholds
    amplification_factor: float = 5.0
    scaling_variation: float = 3.0
    min_order: float = 0.9
    linearity_tolerance: float = 0.25
    refinement_factor: float = 2.0
    mass_drift: float = 1e-10
    nonlinearity_constant: float = 50.0
    quasi_isometry_band: float = 0.1
    unit_norm_tolerance: float = 0.1
    bulk_level: float = 0.1

    def __post_init__(self):
        self.epsilons = tuple(float(e) for e in self.epsilons)
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown datum family {self.family!r}; choose from {FAMILIES}")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown convergence kind {self.kind!r}; choose from {KINDS}")
        if self.epsilon < 0 or any(e < 0 for e in self.epsilons):
            raise ConfigError("amplitudes must be nonnegative")
        if self.dim not in (1, 2):
            raise ConfigError("dim must be 1 or 2")
        if self.T <= 0:
            raise ConfigError("T must be positive")
        if self.form not in ("consistent", "displayed"):
            raise ConfigError("form must be 'consistent' or 'displayed'")
        self.params  # validates (m, p)

    @property
    def params(self) -> ModelParams:
        return new_params(self.m, self.p)

    def require_norm_exponent(self):
        """Integrability exponent must exceed ``max(2(n+1), 1/(1+sigma))``."""
        bound = max(2.0 * (self.dim + 1), 1.0 / (1.0 + self.params.sigma))
        if not self.q > bound:
            raise ConfigError(f"q={self.q} must exceed {bound}")

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["epsilons"] = list(self.epsilons)
        return d

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        """Build from a (possibly nested) mapping; nested keys are flattened by their last part."""
        flat = {}

        def walk(d):
            for k, v in d.items():
                if isinstance(v, dict):
                    walk(v)
                else:
                    flat[k.split(".")[-1]] = v

        walk(mapping)
        names = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(flat) - set(names))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**flat)


# ------------------------------------------------------------- data and grids

def bump_profile(s, width: float = 1.5):
    """``s (1 - s/width)^3`` on ``(0, width)``, zero elsewhere; C^2 with slope 1 at 0."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, width)
    return s * (1.0 - s / width) ** 3


def _bump_slope(s, width):
    s = np.clip(np.asarray(s, dtype=float), 0.0, width)
    u = 1.0 - s / width
    return u**3 - 3.0 * s * u**2 / width


def _shape(cfg: ExperimentConfig, xt, xn):
    """Perturbation of the graph variable in lab coordinates and its normal slope."""
    if cfg.family == "sine_bump":
        t = np.sin(xt) if xt is not None else 1.0
        return t * bump_profile(xn, cfg.bump_width), t * _bump_slope(xn, cfg.bump_width)
    if cfg.family == "sine_exp":
        t = np.sin(xt) if xt is not None else 1.0
        return t * xn * np.exp(-xn), t * (1.0 - xn) * np.exp(-xn)
    z = np.zeros_like(np.asarray(xn, dtype=float))
    return z, z


def lab_grid(cfg: ExperimentConfig, n_normal: Optional[int] = None) -> HalfSpaceGrid:
    params = cfg.params
    origin = -(params.wave_speed * cfg.T + 0.5) if cfg.origin is None else cfg.origin
    return HalfSpaceGrid(cfg.dim, cfg.top - origin, n_normal or cfg.n_normal,
                         cfg.tangential_period, cfg.n_tangential if cfg.dim == 2 else 1, origin)


def perturbation_grid(cfg: ExperimentConfig, n_normal: Optional[int] = None) -> HalfSpaceGrid:
    scale = np.sqrt(cfg.p - 1.0)
    n = n_normal or cfg.pert_n_normal
    nt = cfg.n_tangential * n // cfg.pert_n_normal if cfg.dim == 2 else 1
    return HalfSpaceGrid(cfg.dim, cfg.pert_z_max, n, cfg.tangential_period * scale, nt)


def perturbation_datum(cfg: ExperimentConfig, grid: HalfSpaceGrid, epsilon=None) -> ScalarField:
    eps = cfg.epsilon if epsilon is None else epsilon
    if cfg.family == "radial_bump":
        raise ConfigError("radial_bump is a lab-frame density datum")
    coords = grid.coords()
    xt = coords[0] / np.sqrt(cfg.p - 1.0) if grid.dim == 2 else None
    w, _ = _shape(cfg, xt, coords[-1])
    return ScalarField(grid, eps * w)


def pressure_datum(cfg: ExperimentConfig, grid: HalfSpaceGrid, epsilon=None) -> ScalarField:
    """Pressure whose graph variable is ``x_n + eps * shape(x)``; Newton inversion per cell."""
    eps = cfg.epsilon if epsilon is None else epsilon
    coords = grid.coords()
    yn = coords[-1]
    xt = coords[0] if grid.dim == 2 else None
    if cfg.family == "radial_bump":
        center = [grid.tangential_extent / 2.0] * (grid.dim - 1) + [grid.origin + grid.z_max / 2.0]
        radius = 0.25 * min(grid.z_max, grid.tangential_extent if grid.dim == 2 else np.inf)
        r2 = sum((c - c0) ** 2 for c, c0 in zip(coords, center)) / radius**2
        return ScalarField(grid, eps * np.maximum(1.0 - r2, 0.0))
    x = np.maximum(yn, 0.0)
    for _ in range(50):
        w, dw = _shape(cfg, xt, x)
        x = np.maximum(x - (x + eps * w - yn) / (1.0 + eps * dw), 0.0)
    return ScalarField(grid, np.where(yn > 0, x, 0.0))


def density_datum(cfg: ExperimentConfig, grid: HalfSpaceGrid, epsilon=None) -> ScalarField:
    g = pressure_datum(cfg, grid, epsilon)
    return g.with_values(g.values ** cfg.params.profile_exponent)


def direct_config(cfg: ExperimentConfig) -> DirectSolverConfig:
    top = "no_flux" if cfg.family == "radial_bump" else "traveling_wave"
    return DirectSolverConfig(cfl_factor=cfg.cfl_factor, top_boundary=top)


def pert_config(cfg: ExperimentConfig, snapshot_times=None) -> PerturbationConfig:
    snaps = None if snapshot_times is None else tuple(float(t) for t in snapshot_times)
    return PerturbationConfig(cfl_factor=cfg.pert_cfl_factor, snapshot_times=snaps, form=cfg.form)


def orders(errors, ratio: float = 2.0) -> list:
    e = np.asarray(errors, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (np.log(e[:-1] / e[1:]) / np.log(ratio)).tolist()


def _check(value, threshold, passed) -> dict:
    return {"value": float(value), "threshold": float(threshold), "passed": bool(passed)}


def _verdict(checks: dict) -> dict:
    return {"passed": all(c["passed"] for c in checks.values()), "checks": checks,
            "note": "thresholds are calibrated defaults"}


# ------------------------------------------------------------------ direct runs

def interior_support_mask(g: np.ndarray, h: float, level: float = 0.25) -> np.ndarray:
    """Cells whose full stencil has pressure at least ``level * h``; normal ends excluded."""
    ok = g >= level * h
    inner = ok.copy()
    inner[..., 1:] &= ok[..., :-1]
    inner[..., :-1] &= ok[..., 1:]
    if g.ndim == 2:
        inner &= np.roll(ok, 1, axis=0) & np.roll(ok, -1, axis=0)
    inner[..., 0] = False
    inner[..., -1] = False
    return inner


def gradient_deviation(g: ScalarField, bulk_level: Optional[float] = None) -> float:
    """``sup |grad g - e_n|`` over the interior support.

    With ``bulk_level`` only cells whose stencil has pressure ``>= bulk_level``
    count, i.e. a fixed distance behind the free boundary.
    """
    grid = g.grid
    grad = gradient_array(g.values, grid)
    grad[-1] -= 1.0
    dev = np.sqrt((grad**2).sum(axis=0))
    if bulk_level is None:
        mask = interior_support_mask(g.values, grid.h_normal)
    else:
        mask = interior_support_mask(g.values, 1.0, bulk_level)
    return float(dev[mask].max()) if mask.any() else 0.0


def simulate_direct(cfg: ExperimentConfig, n_snapshots: int = 10):
    params = cfg.params
    grid = lab_grid(cfg)
    rho0 = density_datum(cfg, grid)
    times = np.linspace(0.0, cfg.T, n_snapshots + 1)[1:]
    return solve_density(rho0, cfg.T, params, direct_config(cfg), times)


def run_simulate_direct(cfg: ExperimentConfig) -> dict:
    res = simulate_direct(cfg)
    params = cfg.params
    conf = direct_config(cfg)
    mass = res.mass_trace
    drift = float(np.abs(mass - mass[0]).max() / mass[0]) if mass[0] > 0 else 0.0
    checks = {"finite": _check(0, 0, all(np.isfinite(f.values).all() for f in res.sequence))}
    if conf.top_boundary == "no_flux":
        checks["mass_drift"] = _check(drift, cfg.mass_drift, drift <= cfg.mass_drift)
    report = res.report(params, conf)
    report.update({"relative_mass_drift": drift, "verdict": _verdict(checks)})
    return {"report": report, "sequence": res.sequence}


def run_stability(cfg: ExperimentConfig, n_snapshots: int = 10) -> dict:
    """Perturbed wave in the lab frame; tracks ``sup |grad g - e_n|`` on the support."""
    if cfg.epsilon > 0.1:
        raise ConfigError("stability runs need epsilon <= 0.1")
    params = cfg.params
    res = simulate_direct(cfg.replace(family=cfg.family if cfg.epsilon > 0 else "traveling_wave"),
                          n_snapshots)
    pressures = res.sequence.map(lambda f: pressure_of(f, params).values)
    series = [gradient_deviation(g) for g in pressures]
    bulk = [gradient_deviation(g, cfg.bulk_level) for g in pressures]
    sup = max(series)
    h = pressures.grid.h_normal
    if cfg.epsilon > 0:
        bound = cfg.amplification_factor * cfg.epsilon
        amp = sup / cfg.epsilon
        checks = {"bounded": _check(sup, bound, np.isfinite(sup) and sup <= bound)}
    else:
        # the front moves cell by cell, so only the bulk behind it is O(h)-exact
        amp = 0.0
        checks = {"bulk_exact": _check(max(bulk), h, max(bulk) <= h),
                  "finite": _check(sup, 0, np.isfinite(sup))}
    return {
        "report": {
            "params": params.to_dict(),
            "epsilon": cfg.epsilon,
            "times": pressures.times.tolist(),
            "deviation": series,
            "bulk_deviation": bulk,
            "sup_deviation": sup,
            "amplification": amp,
            "front": [support_boundary(g, 1e-3).tolist() for g in pressures],
            "diagnostics": res.diagnostics,
            "verdict": _verdict(checks),
        },
        "sequence": pressures,
    }


# ------------------------------------------------------------ transformed runs

def decay_times(T: float, t_first: float = 0.01) -> np.ndarray:
    return geometric_times(t_first, T)


def simulate_perturbation(cfg: ExperimentConfig, epsilon=None, n_normal=None,
                          t_first: float = 0.01) -> FieldSequence:
    grid = perturbation_grid(cfg, n_normal)
    w0 = perturbation_datum(cfg, grid, epsilon)
    return solve_perturbation(w0, cfg.T, cfg.params, pert_config(cfg, decay_times(cfg.T, t_first)))


@dataclass
class DecayReport:
    times: list
    entries: dict = field(default_factory=dict)
    initial_gradient: float = 0.0

    def sup(self, key: str) -> float:
        return self.entries[key]["sup"]

    def to_dict(self) -> dict:
        return {"times": self.times, "initial_gradient": self.initial_gradient,
                "entries": self.entries}


def decay_report(seq: FieldSequence, t_min: float = 0.01) -> DecayReport:
    """Weighted sup norms ``t^(k+|b|) |d_t^k d^b grad w|`` for ``k + |b| <= 2``."""
    grid = seq.grid
    times = seq.times
    vals = seq.stack()
    if len(times) < 3:
        raise ValueError("need at least three snapshots")
    g = np.stack([gradient_array(v, grid) for v in vals])
    h = np.stack([hessian_array(v, grid) for v in vals])
    t3 = np.stack([third_array(v, grid) for v in vals])
    gt = np.gradient(g, times, axis=0)
    ht = np.gradient(h, times, axis=0)
    gtt = np.gradient(gt, times, axis=0)

    def sup(a, axes):
        return np.sqrt((a**2).sum(axis=axes)).reshape(len(times), -1).max(axis=1)

    raw = {
        (0, 0): sup(g, 1), (0, 1): sup(h, (1, 2)), (1, 0): sup(gt, 1),
        (0, 2): sup(t3, (1, 2, 3)), (1, 1): sup(ht, (1, 2, 3)), (2, 0): sup(gtt, 1),
    }
    keep = times >= t_min * (1 - 1e-12)
    grad0 = float(raw[(0, 0)][0])
    entries = {}
    for (k, b), series in raw.items():
        weighted = times ** (k + b) * series
        s = float(weighted[keep].max()) if keep.any() else 0.0
        entries[f"k{k}_b{b}"] = {
            "series": weighted[keep].tolist(), "sup": s,
            "ratio": s / grad0 if grad0 > 0 else 0.0,
        }
    return DecayReport(times[keep].tolist(), entries, grad0)


DECAY_KEYS = ("k0_b0", "k0_b1", "k1_b0")


def run_decay(cfg: ExperimentConfig) -> dict:
    """Decay series for the configured datum, a refined run and a doubled amplitude."""
    base = decay_report(simulate_perturbation(cfg))
    fine = decay_report(simulate_perturbation(cfg, n_normal=2 * cfg.pert_n_normal))
    double = decay_report(simulate_perturbation(cfg, epsilon=2.0 * cfg.epsilon))
    checks = {}
    finite = all(np.isfinite(e["sup"]) for r in (base, fine, double) for e in r.entries.values())
    checks["finite"] = _check(0, 0, finite)
    if cfg.epsilon == 0:
        worst = max(e["sup"] for e in base.entries.values())
        checks["zero_datum"] = _check(worst, 0.0, worst == 0.0)
    else:
        for key in DECAY_KEYS:
            a, b = base.sup(key), fine.sup(key)
            f = max(a, b) / min(a, b) if min(a, b) > 0 else np.inf
            checks[f"refinement_{key}"] = _check(f, cfg.refinement_factor, f <= cfg.refinement_factor)
        for key in base.entries:
            r = double.sup(key) / base.sup(key) if base.sup(key) > 0 else np.inf
            dev = abs(r / 2.0 - 1.0)
            checks[f"linearity_{key}"] = _check(dev, cfg.linearity_tolerance,
                                                 dev <= cfg.linearity_tolerance)
    return {"report": {"base": base.to_dict(), "refined": fine.to_dict(),
                       "doubled": double.to_dict(), "verdict": _verdict(checks)}}


def nonlinearity_sequence(seq: FieldSequence, params: ModelParams, form="consistent") -> FieldSequence:
    grid = seq.grid

    def n_of(f):
        return nonlinearity_arrays(grid.z_normal, gradient_array(f.values, grid),
                                   hessian_array(f.values, grid), params, form)

    return seq.map(n_of)


def random_jets(n: int, dim: int, rng: np.random.Generator, grad_max=0.1, z_max=10.0,
                hess_max=1.0):
    """Arrays ``(z_n, grad, hess)`` of admissible jets with ``|grad| <= grad_max``."""
    direction = rng.normal(size=(dim, n))
    direction /= np.linalg.norm(direction, axis=0)
    grad = direction * grad_max * rng.uniform(0.0, 1.0, n) ** (1.0 / dim)
    a = rng.uniform(-hess_max, hess_max, size=(dim, dim, n))
    hess = 0.5 * (a + a.transpose(1, 0, 2))
    hess *= 10.0 ** rng.uniform(-3, 1, n)
    z_n = rng.uniform(0.0, z_max, n)
    return z_n, grad, hess


def pointwise_constant(params: ModelParams, n: int, rng: np.random.Generator, dim: int = 2,
                       grad_max=0.1, z_max=10.0, form="consistent") -> float:
    z_n, grad, hess = random_jets(n, dim, rng, grad_max, z_max)
    val = np.abs(nonlinearity_arrays(z_n, grad, hess, params, form))
    g = np.linalg.norm(grad, axis=0)
    rhs = g**2 + z_n * g * np.sqrt((hess**2).sum(axis=(0, 1)))
    return float(np.max(val / rhs))


def run_nonlinearity_ratio(cfg: ExperimentConfig, pairs=((2, 2), (3, 2), (1, 3), (2, 3))) -> dict:
    cfg.require_norm_exponent()
    params = cfg.params
    lattice = Lattice()
    rows = []
    for eps in cfg.epsilons:
        if eps == 0:
            rows.append({"epsilon": 0.0, "y_norm": 0.0, "x_norm": 0.0, "ratio": None,
                         "note": "exact fixed point"})
            continue
        w = simulate_perturbation(cfg, epsilon=eps)
        nw = nonlinearity_sequence(w, params, cfg.form)
        y = y_norm(nw, cfg.q, cfg.T, lattice).y_total
        x = x_norm(w, cfg.q, cfg.T, lattice).x_total
        rows.append({"epsilon": eps, "y_norm": y, "x_norm": x, "ratio": y / x**2})
    ratios = [r["ratio"] for r in rows if r["ratio"] is not None]
    variation = max(ratios) / min(ratios) if ratios else 1.0
    rng = np.random.default_rng(cfg.seed)
    constants = {}
    for m, p in pairs:
        constants[f"{m},{p}"] = pointwise_constant(new_params(m, p), cfg.n_jets, rng, max(cfg.dim, 2),
                                                   cfg.jet_gradient, cfg.jet_z_max, cfg.form)
    cmax = max(constants.values())
    checks = {
        "scaling_variation": _check(variation, cfg.scaling_variation, variation <= cfg.scaling_variation),
        "pointwise_constant": _check(cmax, cfg.nonlinearity_constant,
                                     np.isfinite(cmax) and cmax <= cfg.nonlinearity_constant),
    }
    return {"report": {"rows": rows, "variation": variation, "pointwise_constants": constants,
                       "verdict": _verdict(checks)}}


# ------------------------------------------------------------- cross-check

def _sample_columns(values, centers, levels):
    cols = np.atleast_2d(values)
    out = np.array([np.interp(levels, centers, c) for c in cols])
    return out


def cross_check_level(cfg: ExperimentConfig, k: int, levels: np.ndarray):
    """Graph variable from both formulations at refinement level ``k`` on fixed levels."""
    params = cfg.params
    meta = TransformMeta.from_params(params)
    ygrid = lab_grid(cfg, cfg.n_normal * 2**k)
    if cfg.dim == 2:
        ygrid = dataclasses.replace(ygrid, n_tangential=cfg.n_tangential * 2**k)
    res = solve_density(density_datum(cfg, ygrid), cfg.T, params, direct_config(cfg))
    g = pressure_of(res.sequence[-1], params)
    xgrid = HalfSpaceGrid(cfg.dim, float(levels[-1]) + 0.5 * (levels[1] - levels[0]), levels.size,
                          cfg.tangential_period, ygrid.n_tangential)
    if not np.allclose(xgrid.normal_centers, levels):
        raise ValueError("comparison levels must be equally spaced cell centers")
    zeta_direct = hodograph(g, xgrid, shift=params.wave_speed * cfg.T)

    pgrid = perturbation_grid(cfg, cfg.pert_n_normal * 2**k)
    if cfg.dim == 2:
        pgrid = dataclasses.replace(pgrid, n_tangential=ygrid.n_tangential)
    w0 = perturbation_datum(cfg, pgrid)
    s_end = meta.time_scale_total * cfg.T
    seq = solve_perturbation(w0, s_end, params, pert_config(cfg, (s_end,)))
    zeta_p = zeta_of(seq[-1], meta)
    zp = _sample_columns(zeta_p.values, pgrid.normal_centers, levels)
    zd = np.atleast_2d(zeta_direct.values)
    return zd, zp, zeta_p, res.diagnostics


def run_cross_check(cfg: ExperimentConfig) -> dict:
    base = perturbation_grid(cfg)
    hc = base.normal_centers
    levels = hc[hc <= cfg.compare_cap]
    rows = []
    zeta_last = None
    for k in range(cfg.levels):
        zd, zp, zeta_last, diag = cross_check_level(cfg, k, levels)
        rows.append({"level": k, "n_direct": cfg.n_normal * 2**k,
                     "n_perturbation": cfg.pert_n_normal * 2**k,
                     "discrepancy": float(np.abs(zd - zp).max()),
                     "direct_steps": diag["steps"]})
    errs = [r["discrepancy"] for r in rows]
    ords = orders(errs)
    qmin, qmax = quasi_isometry_ratio(zeta_last, cfg.n_pairs, cfg.seed)
    band = cfg.quasi_isometry_band
    checks = {
        "order": _check(min(ords) if ords else np.nan, cfg.min_order,
                        bool(ords) and min(ords) >= cfg.min_order),
        "quasi_isometry": _check(max(1 - qmin, qmax - 1), band, 1 - band <= qmin and qmax <= 1 + band),
    }
    return {"report": {"levels": levels.tolist(), "rows": rows, "orders": ords,
                       "quasi_isometry": [qmin, qmax], "verdict": _verdict(checks)}}


# ------------------------------------------------------------- convergence

def tw_ladder(cfg: ExperimentConfig) -> list:
    """Sup pressure error of the density solver started from the exact wave."""
    params = cfg.params
    rows = []
    for k in range(cfg.levels):
        grid = lab_grid(cfg.replace(dim=1), cfg.n_normal * 2**k)
        rho0 = ScalarField(grid, traveling_wave_density(0.0, grid.normal_centers, params))
        res = solve_density(rho0, cfg.T, params, DirectSolverConfig(cfl_factor=cfg.cfl_factor,
                                                                      top_boundary="traveling_wave"))
        g = pressure_of(res.sequence[-1], params).values
        exact = np.maximum(grid.normal_centers + params.wave_speed * cfg.T, 0.0)
        rows.append({"n": grid.n_normal, "h": grid.h_normal,
                     "error": float(np.abs(g - exact).max()),
                     "wall_time": res.diagnostics["wall_time"]})
    return rows


def commutation_ladder(cfg: ExperimentConfig) -> list:
    """Commutation defect on ``z_n sin(z') e^(-z_n)``.

    ``exact_defect`` is the defect on ``z_n sin(z')``, for which the discrete
    identity holds exactly, so it only measures round-off.
    """
    sigma = cfg.params.sigma
    rows = []
    for k in range(cfg.levels):
        n = cfg.pert_n_normal * 2**k
        grid = HalfSpaceGrid(2, cfg.pert_z_max, n, 2 * np.pi, n)
        zt, zn = grid.coords()
        err = check_commutation(ScalarField(grid, zn * np.sin(zt) * np.exp(-zn)), sigma)
        exact = check_commutation(ScalarField(grid, zn * np.sin(zt)), sigma)
        rows.append({"n": n, "h": grid.h_normal, "error": err, "exact_defect": exact})
    return rows


def hodograph_ladder(cfg: ExperimentConfig) -> list:
    rows = []
    for k in range(cfg.levels):
        # one level above the base resolution; the y-grid shares the spacing
        n = cfg.pert_n_normal * 2 ** (k + 1)
        xgrid = HalfSpaceGrid(1, cfg.pert_z_max, n)
        extra = int(round(n / cfg.pert_z_max))
        ygrid = HalfSpaceGrid(1, cfg.pert_z_max + 1.0, n + extra, origin=-0.5)
        x = xgrid.normal_centers
        zeta = ScalarField(xgrid, x + 0.3 * np.sin(x) * np.exp(-x))
        g = hodograph_inverse(zeta, ygrid)
        back = hodograph(g, xgrid)
        inner = x <= cfg.pert_z_max - 0.5
        rows.append({"n": n, "h": xgrid.h_normal,
                     "error": float(np.abs(back.values - zeta.values)[inner].max())})
    return rows


def run_convergence(cfg: ExperimentConfig) -> dict:
    ladder = {"traveling_wave": tw_ladder, "commutation": commutation_ladder,
              "hodograph": hodograph_ladder}[cfg.kind]
    rows = ladder(cfg)
    ords = orders([r["error"] for r in rows])
    for r, o in zip(rows[1:], ords):
        r["order"] = o
    threshold = {"traveling_wave": cfg.min_order, "commutation": 1.9, "hodograph": 1.9}[cfg.kind]
    checks = {"order": _check(min(ords), threshold, min(ords) >= threshold)}
    if cfg.kind == "commutation":
        worst = max(r["exact_defect"] for r in rows)
        checks["exact_defect"] = _check(worst, 1e-10, worst <= 1e-10)
    return {"report": {"kind": cfg.kind, "rows": rows, "orders": ords, "verdict": _verdict(checks)}}


# ------------------------------------------------------------------- norms

def constant_sequence(grid: HalfSpaceGrid, value: float, T: float) -> FieldSequence:
    times = np.concatenate([[0.0], geometric_times(1e-3 * T, T)])
    return FieldSequence(tuple(ScalarField(grid, np.full(grid.shape, value), t) for t in times))


def run_norms(cfg: ExperimentConfig) -> dict:
    """Norms of the configured transformed solve plus the zero and unit oracles."""
    cfg.require_norm_exponent()
    params = cfg.params
    w = simulate_perturbation(cfg, t_first=1e-3 * cfg.T)
    rep = x_norm(w, cfg.q, cfg.T)
    rep.y_components = y_norm(nonlinearity_sequence(w, params, cfg.form), cfg.q, cfg.T).y_components
    fine = HalfSpaceGrid(1, 2.0, 256)
    zero = y_norm(constant_sequence(fine, 0.0, cfg.T), cfg.q, cfg.T).y_total
    zero_x = x_norm(constant_sequence(fine, 0.0, cfg.T), cfg.q, cfg.T).x_total
    one = y_norm(constant_sequence(fine, 1.0, cfg.T), cfg.q, cfg.T).y_total
    scaled = x_norm(w.map(lambda f: -3.0 * f.values), cfg.q, cfg.T).x_total
    homog = abs(scaled - 3.0 * rep.x_total) / max(3.0 * rep.x_total, 1e-300)
    checks = {
        "zero": _check(max(zero, zero_x), 0.0, zero == 0.0 and zero_x == 0.0),
        "unit": _check(abs(one - 1.0), cfg.unit_norm_tolerance, abs(one - 1.0) <= cfg.unit_norm_tolerance),
        "homogeneity": _check(homog, 1e-12, homog <= 1e-12),
    }
    return {"report": {"norms": rep.to_dict(), "zero_norm": zero, "unit_y_norm": one,
                       "lipschitz_initial": lipschitz_seminorm(w[0]),
                       "verdict": _verdict(checks)},
            "sequence": w}
