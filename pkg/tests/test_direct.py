import numpy as np
import pytest

from dnlwave.direct import (CFLError, DirectSolverConfig, DomainError, SolverError,
                            flux_divergence, from_wave_frame, pressure_of, residual_density,
                            solve_density, stable_dt, step_density, support_boundary,
                            to_wave_frame)
from dnlwave.grid import FieldSequence, HalfSpaceGrid, ScalarField
from dnlwave.model import new_params, traveling_wave_density

TW = DirectSolverConfig(top_boundary="traveling_wave")


def tw_field(grid, tau, par):
    return ScalarField(grid, traveling_wave_density(tau, grid.normal_centers, par), tau)


def test_config_validation():
    with pytest.raises(ValueError):
        DirectSolverConfig(cfl_factor=1.5)
    with pytest.raises(ValueError):
        DirectSolverConfig(delta=-1.0)
    with pytest.raises(ValueError):
        DirectSolverConfig(positivity_threshold=0.0)
    assert DirectSolverConfig().regularization(new_params(2, 1.5)) == 1e-8
    assert DirectSolverConfig().regularization(new_params(2, 2)) == 0.0


@pytest.mark.parametrize("m,p", [(2, 2), (1, 3), (2.5, 1.7)])
def test_zero_and_constant_fixed(m, p):
    par = new_params(m, p)
    for dim in (1, 2):
        g = HalfSpaceGrid(dim, 1.0, 8, 1.0, 6)
        zero = ScalarField(g, np.zeros(g.shape))
        assert np.all(step_density(zero, 1e-3, par).values == 0.0)
        one = ScalarField(g, np.ones(g.shape))
        np.testing.assert_array_equal(step_density(one, 1e-7, par).values, 1.0)


def test_cfl_violation():
    par = new_params(2, 2)
    g = HalfSpaceGrid(1, 1.0, 16)
    rho = ScalarField(g, g.normal_centers)
    with pytest.raises(CFLError):
        step_density(rho, 1.0, par)


def test_negative_density_rejected():
    g = HalfSpaceGrid(1, 1.0, 8)
    with pytest.raises(ValueError):
        step_density(ScalarField(g, -np.ones(8)), 1e-4, new_params(2, 2))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # overflow is the point
def test_nan_detection():
    par = new_params(2, 2)
    g = HalfSpaceGrid(1, 1.0, 8)
    rho = ScalarField(g, np.full(8, 1e200))
    with pytest.raises(SolverError, match="cell"):
        step_density(rho, 1e-300, par)


def test_domain_errors():
    par = new_params(2, 2)
    g = HalfSpaceGrid(1, 1.0, 16, origin=-0.5)
    with pytest.raises(DomainError):
        solve_density(tw_field(g, 0.0, par), 1.0, par, TW)   # front runs out of the bottom
    g2 = HalfSpaceGrid(1, 1.0, 16)
    with pytest.raises(DomainError):
        solve_density(ScalarField(g2, np.ones(16)), 0.1, par)


def test_stable_dt_formula():
    g = HalfSpaceGrid(2, 1.0, 10, 1.0, 20)
    assert stable_dt(2.0, g, 0.5) == pytest.approx(0.5 * 0.05**2 / (2 * 2 * 2.0))
    assert stable_dt(0.0, g, 0.5) == np.inf


def test_tw_bulk_residual_exact_pme():
    # for (2,2) the wave density is linear, so the bulk flux divergence vanishes exactly
    par = new_params(2, 2)
    g = HalfSpaceGrid(1, 2.0, 64, origin=-1.0)
    div = flux_divergence(tw_field(g, 0.3, par), par, TW)
    bulk = g.normal_centers > -0.3 + 3 * g.h_normal
    np.testing.assert_allclose(div[bulk] - 1.0, 0.0, atol=1e-11)


def _injected_front_residual(par, n, samples=200):
    """Space-time mean of the L1 residual of exact wave snapshots, averaged over front phases."""
    g = HalfSpaceGrid(1, 2.0, n, origin=-1.0)
    taus = 0.1 + (np.arange(samples) + 0.5) / samples * 0.2 / par.wave_speed
    total = 0.0
    for t in taus:
        seq = FieldSequence((tw_field(g, t, par), tw_field(g, t + 1e-7, par)))
        total += np.abs(residual_density(seq, par, TW)[0].values).sum() * g.h_normal
    return total / samples


def test_tw_residual_injected_pme():
    par = new_params(2, 2)
    errs = [_injected_front_residual(par, n) for n in (64, 128, 256)]
    assert np.log2(errs[0] / errs[1]) >= 0.9 and np.log2(errs[1] / errs[2]) >= 0.9


def test_tw_residual_injected_m3():
    # the wave's time derivative blows up like s^(-1/2) at the front, so only decay is asserted
    par = new_params(3, 2)
    errs = [_injected_front_residual(par, n, 100) for n in (64, 128, 256)]
    assert errs[2] < errs[1] < errs[0]


def test_residual_constant_zero():
    par = new_params(2, 2)
    g = HalfSpaceGrid(1, 1.0, 16)
    seq = FieldSequence((ScalarField(g, np.ones(16), 0.0), ScalarField(g, np.ones(16), 0.1)))
    assert np.abs(residual_density(seq, par)[0].values).max() == 0.0


@pytest.mark.parametrize("m,p", [(2, 2), (3, 2)])
def test_solver_residual_decreases(m, p):
    """Snapshots a fixed multiple of h^2 apart, so the time quadrature resolves the front."""
    par = new_params(m, p)
    errs = []
    for n in (64, 128, 256):
        g = HalfSpaceGrid(1, 2.0, n, origin=-1.0)
        snaps = 0.05 + np.arange(21) * 0.5 * g.h_normal**2
        res = solve_density(tw_field(g, 0.0, par), snaps[-1], par, TW, snapshot_times=snaps)
        r = residual_density(FieldSequence(res.sequence.fields[1:]), par, TW)
        errs.append(np.mean([np.abs(f.values).sum() * g.h_normal for f in r]))
    assert errs[2] < errs[1] < errs[0]


def test_tw_pressure_convergence_small():
    par = new_params(2, 2)
    errs = []
    for n in (64, 128, 256):
        g = HalfSpaceGrid(1, 2.0, n, origin=-1.0)
        res = solve_density(tw_field(g, 0.0, par), 0.25, par, TW)
        gp = pressure_of(res.sequence[-1], par).values
        errs.append(np.abs(gp - np.maximum(g.normal_centers + 0.25, 0)).max())
    assert np.log2(errs[0] / errs[1]) >= 0.9 and np.log2(errs[1] / errs[2]) >= 0.9


def test_tw_front_speed():
    par = new_params(2, 2)
    g = HalfSpaceGrid(1, 2.0, 512, origin=-1.0)
    res = solve_density(tw_field(g, 0.0, par), 0.5, par, TW, snapshot_times=[0.1])
    f1 = support_boundary(pressure_of(res.sequence[1], par), 1e-3)[0]
    f2 = support_boundary(pressure_of(res.sequence[2], par), 1e-3)[0]
    speed = (f1 - f2) / 0.4
    assert speed == pytest.approx(par.wave_speed, rel=0.05)


def test_compact_support_mass_and_positivity():
    par = new_params(2, 2)
    g = HalfSpaceGrid(2, 2.0, 48, 2.0, 48)
    zt, zn = g.coords()
    rho0 = ScalarField(g, np.maximum(1 - ((zt - 1) ** 2 + (zn - 1) ** 2) / 0.25, 0.0))
    res = solve_density(rho0, 0.05, par, snapshot_times=[0.01, 0.02])
    m = res.mass_trace
    assert len(m) == res.diagnostics["steps"] + 1 == len(res.dt_trace) + 1
    assert np.abs(m - m[0]).max() / m[0] <= 1e-10
    assert res.diagnostics["clipped_mass"] <= 1e-10 * m[0]
    assert all((f.values >= 0).all() for f in res.sequence)
    np.testing.assert_allclose(res.sequence.times, [0, 0.01, 0.02, 0.05])
    report = res.report(par, DirectSolverConfig())
    assert set(report) >= {"params", "config", "mass_trace", "boundary_trace"}


def test_finite_propagation():
    par = new_params(2, 2)
    g = HalfSpaceGrid(1, 4.0, 256)
    z = g.normal_centers
    rho0 = ScalarField(g, np.maximum(1 - (z - 2) ** 2 / 0.25, 0.0))
    res = solve_density(rho0, 0.05, par)
    edge = support_boundary(res.sequence[-1], 1e-8)[0]
    assert 1.0 < edge < 1.5


def test_pressure_examples():
    g = HalfSpaceGrid(1, 2.0, 16, origin=-1.0)
    y = g.normal_centers
    for m, p in [(2, 2), (3, 2), (1, 3)]:
        par = new_params(m, p)
        rho = ScalarField(g, np.maximum(y, 0) ** par.profile_exponent)
        np.testing.assert_allclose(pressure_of(rho, par).values, np.maximum(y, 0), atol=1e-14)
    assert np.all(pressure_of(ScalarField(g, np.zeros(16)), new_params(2, 2)).values == 0)


def test_wave_frame():
    par = new_params(2, 2)
    g = HalfSpaceGrid(1, 3.0, 256, origin=-1.5)
    res = solve_density(tw_field(g, 0.0, par), 0.5, par, TW, snapshot_times=[0.25])
    wave = to_wave_frame(res.sequence, par)
    stationary = np.maximum(g.normal_centers, 0)
    inner = g.normal_centers < 1.5 - 0.5 - 2 * g.h_normal
    for f in wave:
        drift = np.abs(pressure_of(f, par).values - stationary)[inner].max()
        assert drift <= 2 * g.h_normal
    np.testing.assert_array_equal(wave[0].values, res.sequence[0].values)


def test_wave_frame_roundtrip_order():
    par = new_params(2, 2)
    errs = []
    for n in (64, 128, 256):
        g = HalfSpaceGrid(1, 6.0, n, origin=-3.0)
        y = g.normal_centers
        # shift = (10 + 1/3) coarse cells: the sub-cell phase is 1/3 or 2/3 on every level
        f = ScalarField(g, np.exp(-y**2), (10 + 1 / 3) * 6.0 / 64)
        back = from_wave_frame(to_wave_frame(FieldSequence((f,)), par), par)[0]
        inner = np.abs(y) < 2
        errs.append(np.abs(back.values - f.values)[inner].max())
    assert np.log2(errs[0] / errs[1]) >= 1.9 and np.log2(errs[1] / errs[2]) >= 1.9


def test_wave_frame_shift_too_large():
    par = new_params(1, 3)
    g = HalfSpaceGrid(1, 1.0, 16)
    with pytest.raises(DomainError):
        to_wave_frame(FieldSequence((ScalarField(g, np.zeros(16), 1.0),)), par)


def test_support_boundary_examples():
    g = HalfSpaceGrid(2, 2.0, 64, 1.0, 4)
    zt, zn = g.coords()
    b = support_boundary(ScalarField(g, np.maximum(zn - 0.5, 0)), 1e-10)
    assert np.all(np.abs(b - 0.5) <= g.h_normal)
    assert np.all(np.isinf(support_boundary(ScalarField(g, np.zeros(g.shape)))))
    par = new_params(2, 2)
    g1 = HalfSpaceGrid(1, 2.0, 128, origin=-1.0)
    b = support_boundary(tw_field(g1, 0.4, par), 1e-10)[0]
    assert abs(b + 0.4) <= g1.h_normal
