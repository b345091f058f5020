import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnlwave.model import (DegenerateJetError, Jet, ParameterError, apply_L_sigma_jet,
                           new_params, nonlinearity_arrays, nonlinearity_bound_rhs,
                           nonlinearity_N, rest_q, stationary_pressure, transformed_rate,
                           traveling_wave_density)

VALID = [(2, 2), (3, 2), (1, 3), (2, 3), (2.5, 1.7), (1.5, 2.5)]


@pytest.mark.parametrize("m,p,expected", [
    (2, 2, dict(kappa=1, sigma=0, wave_speed=1, q_exp=2)),
    (1, 3, dict(kappa=0.5, sigma=1, wave_speed=4, q_exp=1)),
    (3, 2, dict(kappa=2, sigma=-0.5, wave_speed=0.5)),
])
def test_params_examples(m, p, expected):
    par = new_params(m, p)
    for k, v in expected.items():
        assert getattr(par, k) == pytest.approx(v, abs=1e-15)


@pytest.mark.parametrize("m,p,msg", [(1, 2, r"m\+p>3"), (3, 1, "p>1"), (2, 0.5, "p>1")])
def test_params_rejected(m, p, msg):
    with pytest.raises(ParameterError, match=msg):
        new_params(m, p)


@given(st.floats(1.01, 5.0), st.floats(-2.0, 5.0))
def test_params_invariants(p, m):
    if m + p <= 3.0:
        with pytest.raises(ParameterError):
            new_params(m, p)
        return
    par = new_params(m, p)
    assert par.sigma > -1 and par.kappa > 0 and par.q_exp > 1 / (p - 1)


def test_traveling_wave_examples():
    assert traveling_wave_density(0.3, 0.2, new_params(2, 2)) == pytest.approx(0.5)
    assert traveling_wave_density(0.3, -0.5, new_params(2, 2)) == 0.0
    assert traveling_wave_density(0.25, 0.0, new_params(1, 3)) == pytest.approx(1.0)


def test_stationary_pressure():
    assert stationary_pressure(0.7) == 0.7
    assert stationary_pressure(-1.0) == 0.0
    assert stationary_pressure(0.0) == 0.0


def test_rest_q_examples():
    assert rest_q(0.0, 0.0, 3.7) == 1.0
    assert rest_q(0.0, 0.1, 2.0) == pytest.approx(1 / 1.21, abs=1e-7)
    assert rest_q((0.3,), 0.0, 2.0) == pytest.approx(1.09)
    with pytest.raises(DegenerateJetError):
        rest_q(0.0, -1.0, 2.0)


@given(st.floats(-0.5, 0.5), st.floats(-4, 4))
def test_rest_q_reciprocal(d, q):
    assert rest_q(0.0, d, q) * rest_q(0.0, d, -q) == pytest.approx(1.0, rel=1e-15)


@settings(max_examples=50)
@given(st.floats(-0.1, 0.1), st.floats(-0.1, 0.1), st.floats(-3, 3))
def test_rest_q_first_order_expansion(gt, dn, q):
    # |R_q - (1 - q d_n)| <= C |grad w|^2 with a modest constant
    err = abs(rest_q((gt,), dn, q) - (1 - q * dn))
    assert err <= 10.0 * (1 + q * q) * (gt * gt + dn * dn) + 1e-15


def test_jet_validation():
    with pytest.raises(ValueError):
        Jet(1.0, 0.0, (0.0,), 0.0, [[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        Jet(-1.0, 0.0, (), 0.0, [[0.0]])
    with pytest.raises(ValueError):
        Jet(1.0, 0.0, (0.0,), 0.0, [[0.0]])


def test_N_examples():
    par = new_params(2, 2)
    assert nonlinearity_N(Jet.zero(2), par) == 0.0
    jet = Jet(1.3, 0.0, (0.0,), 0.1, np.zeros((2, 2)))
    assert nonlinearity_N(jet, par) == pytest.approx(-1 / 110, abs=1e-12)
    assert nonlinearity_N(jet, par, form="displayed") == pytest.approx(-1 / 110, abs=1e-12)


@pytest.mark.parametrize("m,p", VALID)
def test_N_zero_jet_every_params(m, p):
    for dim in (1, 2):
        assert nonlinearity_N(Jet.zero(dim, z_n=2.0), new_params(m, p)) == 0.0


@pytest.mark.parametrize("m,p", VALID)
def test_N_boundary_depends_only_on_dn(m, p):
    par = new_params(m, p)
    rng = np.random.default_rng(1)
    vals = []
    for _ in range(5):
        h = rng.normal(size=(2, 2))
        vals.append(nonlinearity_N(Jet(0.0, rng.normal(), (0.0,), 0.07, h + h.T), par))
    assert np.ptp(vals) == 0.0


def test_N_rejects_pole():
    with pytest.raises(DegenerateJetError):
        nonlinearity_N(Jet(1.0, 0.0, (0.0,), -0.95, np.zeros((2, 2))), new_params(2, 2))


def test_forms_agree_for_p2():
    rng = np.random.default_rng(3)
    par = new_params(3, 2)
    z = rng.uniform(0, 5, 1000)
    g = rng.uniform(-0.2, 0.2, (2, 1000))
    h = rng.normal(size=(2, 2, 1000))
    h = h + h.transpose(1, 0, 2)
    a = nonlinearity_arrays(z, g, h, par, "consistent")
    b = nonlinearity_arrays(z, g, h, par, "displayed")
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_bound_rhs_examples():
    assert nonlinearity_bound_rhs(Jet.zero(2)) == 0.0
    h = np.array([[0.0, 0.0], [0.0, 0.5]])
    assert nonlinearity_bound_rhs(Jet(2.0, 0.0, (0.0,), 0.1, h)) == pytest.approx(0.11)
    assert nonlinearity_bound_rhs(Jet(0.0, 0.0, (0.3,), 0.4, np.zeros((2, 2)))) == pytest.approx(0.25)


def test_L_sigma_jet_examples():
    assert apply_L_sigma_jet(Jet(1.0, 5.0, (0.0,), 0.0, np.zeros((2, 2))), 0.3) == 0.0
    assert apply_L_sigma_jet(Jet(0.7, 0.7, (0.0,), 1.0, np.zeros((2, 2))), 0.0) == -1.0
    h = np.array([[0.0, 0.0], [0.0, 2.0]])
    assert apply_L_sigma_jet(Jet(1.0, 1.0, (0.0,), 2.0, h), 0.0) == pytest.approx(-4.0)


jets = st.builds(
    lambda z, g, d, a, b, c: Jet(z, 0.0, (g,), d, np.array([[a, b], [b, c]])),
    st.floats(0, 10), st.floats(-1, 1), st.floats(-1, 1),
    st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))


@given(jets, jets, st.floats(-3, 3), st.floats(-0.9, 3))
def test_L_sigma_linear(j1, j2, lam, sigma):
    # additivity and homogeneity at a common z_n
    j2 = Jet(j1.z_n, 0.0, j2.grad_tangential, j2.d_n, j2.hess)
    s = Jet(j1.z_n, 0.0, (j1.grad_tangential[0] + lam * j2.grad_tangential[0],),
            j1.d_n + lam * j2.d_n, j1.hess + lam * j2.hess)
    lhs = apply_L_sigma_jet(s, sigma)
    rhs = apply_L_sigma_jet(j1, sigma) + lam * apply_L_sigma_jet(j2, sigma)
    assert lhs == pytest.approx(rhs, abs=1e-11 * (1 + abs(lhs)))


@pytest.mark.parametrize("m,p", [(2, 2), (3, 2), (1, 3), (2, 3)])
def test_pointwise_quadratic_bound(m, p):
    from dnlwave.experiments import pointwise_constant
    c = pointwise_constant(new_params(m, p), 20_000, np.random.default_rng(0))
    assert np.isfinite(c) and c <= 50


# ---------------------------------------------------------------- sympy oracle

sp = pytest.importorskip("sympy")


def _symbolic_case():
    """Exact rate of the graph variable of a smooth perturbation, from the pressure equation."""
    x1, xn, m, p = sp.symbols("x1 xn m p", positive=True)
    w = sp.Rational(1, 10) * sp.sin(x1) * xn * sp.exp(-xn) + sp.Rational(1, 20) * xn**2 * sp.cos(x1) / (1 + xn**2)
    zeta = xn + w
    zn, z1 = sp.diff(zeta, xn), sp.diff(zeta, x1)
    dy1 = lambda f: sp.diff(f, x1) - z1 / zn * sp.diff(f, xn)
    dyn = lambda f: sp.diff(f, xn) / zn
    g1, gn = -z1 / zn, 1 / zn
    s = g1**2 + gn**2
    kappa = (m + p - 3) / (p - 1)
    plap = dy1(s ** ((p - 2) / 2) * g1) + dyn(s ** ((p - 2) / 2) * gn)
    g_t = kappa * xn * plap + s ** (p / 2) - gn
    rate = -g_t * zn / (m + p - 3)
    return (x1, xn, m, p), zeta, rate


@pytest.fixture(scope="module")
def symbolic():
    return _symbolic_case()


POINTS = [(0.3, 0.7), (1.1, 0.2), (2.0, 1.5)]


@pytest.mark.parametrize("mp", [(2, 2), (3, 2), (1, 3), (2, 3), (2.5, 1.7)])
def test_transformed_rate_matches_pressure_equation(symbolic, mp):
    (x1, xn, m, p), zeta, rate = symbolic
    par = new_params(*mp)
    for pt in POINTS:
        sub = {m: mp[0], p: mp[1], x1: pt[0], xn: pt[1]}
        grad = np.array([float(sp.diff(zeta, v).subs(sub)) for v in (x1, xn)])
        hess = np.array([[float(sp.diff(zeta, a, b).subs(sub)) for b in (x1, xn)] for a in (x1, xn)])
        exact = float(rate.subs(sub))
        assert transformed_rate(pt[1], grad, hess, par) == pytest.approx(exact, abs=1e-12)


@pytest.mark.parametrize("mp", [(2, 2), (3, 2), (1, 3), (2, 3), (2.5, 1.7)])
def test_N_matches_pressure_equation(symbolic, mp):
    """``N - L_sigma w`` equals the exact rate in rescaled coordinates."""
    (x1, xn, m, p), zeta, rate = symbolic
    par = new_params(*mp)
    scale = np.sqrt(mp[1] - 1)
    w = zeta - xn
    for pt in POINTS:
        sub = {m: mp[0], p: mp[1], x1: pt[0], xn: pt[1]}
        # derivatives in z' = scale * x'
        fac = {x1: 1 / scale, xn: 1.0}
        grad = np.array([float(sp.diff(w, v).subs(sub)) * fac[v] for v in (x1, xn)])
        hess = np.array([[float(sp.diff(w, a, b).subs(sub)) * fac[a] * fac[b] for b in (x1, xn)]
                         for a in (x1, xn)])
        lhs = nonlinearity_arrays(pt[1], grad, hess, par) - (
            -pt[1] * np.trace(hess) - (par.sigma + 1) * grad[-1])
        assert float(lhs) == pytest.approx(float(rate.subs(sub)), abs=1e-12)


def test_displayed_grouping_inexact_off_p2(symbolic):
    """The grouping with a common ``1/(p-1)`` prefactor misses the exact rate when ``p != 2``."""
    (x1, xn, m, p), zeta, rate = symbolic
    par = new_params(1, 3)
    scale = np.sqrt(2.0)
    w = zeta - xn
    sub = {m: 1, p: 3, x1: 0.3, xn: 0.7}
    fac = {x1: 1 / scale, xn: 1.0}
    grad = np.array([float(sp.diff(w, v).subs(sub)) * fac[v] for v in (x1, xn)])
    hess = np.array([[float(sp.diff(w, a, b).subs(sub)) * fac[a] * fac[b] for b in (x1, xn)]
                     for a in (x1, xn)])
    lin = -0.7 * np.trace(hess) - (par.sigma + 1) * grad[-1]
    exact = float(rate.subs(sub))
    assert abs(nonlinearity_arrays(0.7, grad, hess, par, "displayed") - lin - exact) > 1e-5
