"""Equation parameters, closed-form waves and pointwise formula evaluation.

Everything here works on plain floats or on numpy arrays of matching shape,
so the same routines serve single jets and whole grids.

Coordinate conventions: a point is ``(z', z_n)`` with the tangential part
first and the normal coordinate last. Gradients are stacked along the first
axis in that order, Hessians along the first two axes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# jets with 1 + d_n below this are outside the evaluation domain of N
POLE_MARGIN = 0.1


class ParameterError(ValueError):
    """Exponents outside the slow diffusion regime."""


class DegenerateJetError(ValueError):
    """Normal derivative too close to the pole 1 + d_n = 0."""


@dataclass(frozen=True)
class ModelParams:
    """Nonlinearity exponents and the constants derived from them.

    Build through :func:`new_params`, which validates the exponents.
    """

    m: float
    p: float
    kappa: float = field(init=False)
    q_exp: float = field(init=False)
    sigma: float = field(init=False)
    wave_speed: float = field(init=False)

    def __post_init__(self):
        m, p = float(self.m), float(self.p)
        if not p > 1.0:
            raise ParameterError(f"p>1 violated (p={p})")
        if not m + p > 3.0:
            raise ParameterError(f"m+p>3 violated (m={m}, p={p})")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "kappa", (m + p - 3.0) / (p - 1.0))
        object.__setattr__(self, "q_exp", (m - 1.0) / (p - 1.0) + 1.0)
        object.__setattr__(self, "sigma", (2.0 - m) / (m + p - 3.0))
        object.__setattr__(self, "wave_speed", ((p - 1.0) / (m + p - 3.0)) ** (p - 1.0))
        assert self.sigma > -1.0
        assert self.kappa > 0.0
        assert self.q_exp > 1.0 / (p - 1.0)

    @property
    def profile_exponent(self) -> float:
        """Exponent ``1/kappa`` of the wave profile."""
        return 1.0 / self.kappa

    @property
    def time_rescaling(self) -> float:
        """Factor ``q^(1-p)`` relating the p-Laplacian form to the original time."""
        return self.q_exp ** (1.0 - self.p)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "p": self.p,
            "kappa": self.kappa,
            "q_exp": self.q_exp,
            "sigma": self.sigma,
            "wave_speed": self.wave_speed,
        }


def new_params(m: float, p: float) -> ModelParams:
    return ModelParams(m, p)


def traveling_wave_density(tau, y_n, params: ModelParams):
    """Density of the traveling wave, ``(y_n + tau V)_+ ** (1/kappa)``."""
    s = np.maximum(np.asarray(y_n, dtype=float) + tau * params.wave_speed, 0.0)
    out = s ** params.profile_exponent
    return float(out) if np.ndim(out) == 0 else out


def stationary_pressure(y_n):
    out = np.maximum(np.asarray(y_n, dtype=float), 0.0)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Jet:
    """Pointwise derivative data of a perturbation ``w``.

    ``hess`` is the full matrix of second derivatives in ``(z', z_n)``
    ordering, so the mixed derivatives ``grad' d_n w`` sit in its last row.
    """

    z_n: float
    w: float
    grad_tangential: tuple
    d_n: float
    hess: np.ndarray

    def __post_init__(self):
        g = tuple(float(v) for v in np.atleast_1d(self.grad_tangential))
        hess = np.array(self.hess, dtype=float)
        dim = len(g) + 1
        if dim not in (1, 2):
            raise ValueError("only n = 1 or n = 2 is supported")
        if hess.shape != (dim, dim):
            raise ValueError(f"hess must be {dim}x{dim}, got {hess.shape}")
        if not np.allclose(hess, hess.T, rtol=0, atol=1e-12 * (1 + np.abs(hess).max())):
            raise ValueError("hess must be symmetric")
        if self.z_n < 0:
            raise ValueError("z_n must be nonnegative")
        object.__setattr__(self, "grad_tangential", g)
        object.__setattr__(self, "hess", hess)

    @property
    def dim(self) -> int:
        return len(self.grad_tangential) + 1

    @property
    def grad(self) -> np.ndarray:
        return np.array(self.grad_tangential + (self.d_n,))

    @classmethod
    def zero(cls, dim: int = 2, z_n: float = 1.0) -> "Jet":
        return cls(z_n, 0.0, (0.0,) * (dim - 1), 0.0, np.zeros((dim, dim)))


def rest_q(grad_tangential, d_n, q, tangential_weight=1.0):
    """``((1 + a |grad' w|^2) / (1 + d_n)^2) ** (q/2)`` with ``a = tangential_weight``."""
    d_n = np.asarray(d_n, dtype=float)
    if np.any(1.0 + d_n == 0.0):
        raise DegenerateJetError("rest_q has a pole at d_n = -1")
    gt = np.asarray(grad_tangential, dtype=float)
    if gt.ndim == 0:
        gt = gt[None]
    tang = np.sum(gt**2, axis=0) if gt.size else 0.0
    out = ((1.0 + tangential_weight * tang) / (1.0 + d_n) ** 2) ** (q / 2.0)
    return float(out) if np.ndim(out) == 0 else out


def _check_pole(d_n):
    bad = 1.0 + np.asarray(d_n) <= POLE_MARGIN
    if np.any(bad):
        where = np.argwhere(np.atleast_1d(bad))[0]
        raise DegenerateJetError(
            f"1 + d_n <= {POLE_MARGIN} at index {tuple(int(i) for i in where)}"
        )


def _rest_and_derivatives(grad, hess, q, a):
    """R_q and its spatial gradient from first and second derivatives of w."""
    gt, dn = grad[:-1], grad[-1]
    num = 1.0 + a * np.sum(gt**2, axis=0)
    den = 1.0 + dn
    r = (num / den**2) ** (q / 2.0)
    dim = grad.shape[0]
    dr = []
    for j in range(dim):
        tang = a * np.sum(gt * hess[:-1, j], axis=0) if dim > 1 else 0.0
        dr.append(q * r * (tang / num - hess[-1, j] / den))
    return r, dr


def nonlinearity_arrays(z_n, grad, hess, params: ModelParams, form: str = "consistent"):
    """Right-hand side ``N[w]`` of the perturbation equation on arrays.

    ``grad`` has shape ``(n, ...)`` and ``hess`` shape ``(n, n, ...)``.

    ``form="consistent"`` is the exact rearrangement of the graph-transformed
    pressure equation in the rescaled tangential coordinates. ``"displayed"``
    is the grouping with a common ``1/(p-1)`` prefactor and unscaled tangential
    gradients; the two agree when ``p = 2``.
    """
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    z_n = np.asarray(z_n, dtype=float)
    m, p = params.m, params.p
    dn = grad[-1]
    _check_pole(dn)
    dim = grad.shape[0]
    beta = (p - 1.0) / (m + p - 3.0)
    a = (p - 1.0) if form == "consistent" else 1.0
    if form not in ("consistent", "displayed"):
        raise ValueError(f"unknown form {form!r}")

    r_pm2, dr_pm2 = _rest_and_derivatives(grad, hess, p - 2.0, a)
    r_p = rest_q(grad[:-1], dn, p, a)
    r_2 = rest_q(grad[:-1], dn, 2.0, a)
    w_nn = hess[-1, -1]

    if dim > 1:
        gt = grad[:-1]
        lap_t = sum(hess[i, i] for i in range(dim - 1))
        cross = np.sum(gt * hess[:-1, -1], axis=0)
        grad_r_dot = np.sum(np.stack(dr_pm2[:-1]) * gt, axis=0)
        tangential = (
            (r_pm2 - 1.0) * z_n * lap_t
            - 2.0 * z_n * r_pm2 * cross / (1.0 + dn)
            + z_n * grad_r_dot
        )
    else:
        tangential = 0.0

    low = (1.0 - r_p) * dn + (1.0 - r_p - p * dn)
    if form == "consistent":
        normal = (
            (r_p - 1.0) * z_n * w_nn
            - z_n * ((1.0 + dn) * r_2 * dr_pm2[-1] + (p - 2.0) * w_nn)
        )
        return tangential + (normal + beta * low) / (p - 1.0)
    normal = (r_p - 1.0) * z_n * w_nn - z_n * r_2 * (dr_pm2[-1] + (p - 2.0) * w_nn)
    return (tangential + normal + beta * low) / (p - 1.0)


def nonlinearity_N(jet: Jet, params: ModelParams, form: str = "consistent") -> float:
    return float(nonlinearity_arrays(jet.z_n, jet.grad, jet.hess, params, form))


def nonlinearity_bound_rhs(jet: Jet) -> float:
    """``|grad w|^2 + z_n |grad w| |hess w|`` with Euclidean/Frobenius norms."""
    g = np.linalg.norm(jet.grad)
    return float(g**2 + jet.z_n * g * np.linalg.norm(jet.hess))


def apply_L_sigma_arrays(z_n, grad, hess, sigma):
    """Expanded degenerate operator ``-z_n lap w - (sigma+1) d_n w``."""
    hess = np.asarray(hess, dtype=float)
    lap = sum(hess[i, i] for i in range(hess.shape[0]))
    return -np.asarray(z_n) * lap - (sigma + 1.0) * np.asarray(grad)[-1]


def apply_L_sigma_jet(jet: Jet, sigma: float) -> float:
    return float(apply_L_sigma_arrays(jet.z_n, jet.grad, jet.hess, sigma))


def transformed_rate(x_n, grad, hess, params: ModelParams, form: str = "consistent"):
    """Time derivative of the graph variable ``zeta`` implied by its equation.

    Works in unscaled coordinates ``(x', x_n)`` and the perturbation time.
    The consistent form carries the factor ``d_n zeta`` in the term with
    ``d_n`` of the gradient power; ``"displayed"`` omits it.
    """
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    m, p = params.m, params.p
    dim = grad.shape[0]
    zt, zn = grad[:-1], grad[-1]
    if np.any(zn <= POLE_MARGIN):
        raise DegenerateJetError(f"d_n zeta <= {POLE_MARGIN}")
    s = (1.0 + np.sum(zt**2, axis=0)) / zn**2
    h = s ** ((p - 2.0) / 2.0)
    # gradient of s and of h = s^((p-2)/2)
    ds = []
    for j in range(dim):
        tang = 2.0 * np.sum(zt * hess[:-1, j], axis=0) if dim > 1 else 0.0
        ds.append(tang / zn**2 - 2.0 * s * hess[-1, j] / zn)
    dh = [(p - 2.0) / 2.0 * s ** ((p - 4.0) / 2.0) * d for d in ds]
    if dim > 1:
        lap_t = sum(hess[i, i] for i in range(dim - 1))
        cross = np.sum(zt * hess[:-1, -1], axis=0)
        tang_dh = np.sum(zt * np.stack(dh[:-1]), axis=0)
    else:
        lap_t = cross = tang_dh = 0.0
    inner = lap_t - 2.0 * cross / zn + s * hess[-1, -1]
    weight = zn if form == "consistent" else 1.0
    rate = (
        x_n * h * inner / (p - 1.0)
        + x_n * tang_dh / (p - 1.0)
        - x_n * weight * s * dh[-1] / (p - 1.0)
        - (s ** (p / 2.0) * zn - 1.0) / (m + p - 3.0)
    )
    return rate
