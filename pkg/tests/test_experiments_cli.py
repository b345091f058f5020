import json

import numpy as np
import pytest

from dnlwave import experiments as ex
from dnlwave.cli import build_parser, load_config, main, strip_timing

SMALL = {
    "params": [],
    "simulate-direct": ["family='radial_bump'", "n_normal=64", "T=0.05", "top=2.0", "origin=0.0"],
    "simulate-perturbation": ["pert_n_normal=16", "T=0.1"],
    "stability": ["n_normal=64", "T=0.2"],
    "decay": ["pert_n_normal=16", "T=0.2"],
    "nonlin-ratio": ["pert_n_normal=16", "T=0.2", "n_jets=2000", "epsilons=[0.01, 0.02]"],
    "cross-check": ["T=0.125", "epsilon=0.02", "n_normal=64", "pert_n_normal=16", "levels=2",
                    "pert_z_max=5.0", "top=4.0"],
    "norms": ["pert_n_normal=16", "T=0.5"],
    "convergence": ["kind='commutation'", "pert_n_normal=16"],
}


def run_cli(cmd, out, extra=(), config=None):
    argv = [cmd, "--out", str(out)]
    if config is not None:
        argv += ["--config", str(config)]
    for item in list(SMALL.get(cmd, [])) + list(extra):
        argv += ["--override", item]
    return main(argv)


# ------------------------------------------------------------------- config

def test_config_defaults_and_validation():
    cfg = ex.ExperimentConfig()
    assert cfg.params.m == 2.0 and cfg.q == 8.0
    for bad in ({"family": "nope"}, {"epsilon": -0.1}, {"dim": 3}, {"T": 0.0},
                {"kind": "other"}, {"form": "x"}, {"m": 1.0, "p": 2.0}, {"epsilons": (0.1, -1)}):
        with pytest.raises(ValueError):
            ex.ExperimentConfig(**bad)


@pytest.mark.parametrize("dim,m,p,q,ok", [
    (1, 2, 2, 8.0, True), (1, 2, 2, 4.0, False), (2, 2, 2, 6.0, False), (2, 2, 2, 6.5, True),
    # sigma = -0.5 for (3, 2): 1/(1+sigma) = 2 < 2(n+1)
    (1, 3, 2, 4.5, True),
])
def test_norm_exponent_requirement(dim, m, p, q, ok):
    cfg = ex.ExperimentConfig(dim=dim, m=m, p=p, q=q)
    if ok:
        cfg.require_norm_exponent()
    else:
        with pytest.raises(ex.ConfigError):
            cfg.require_norm_exponent()


def test_from_mapping_nested_and_unknown():
    cfg = ex.ExperimentConfig.from_mapping({"model": {"m": 3, "p": 2}, "grid": {"n_normal": 64}})
    assert (cfg.m, cfg.p, cfg.n_normal) == (3, 2, 64)
    with pytest.raises(ex.ConfigError, match="unknown"):
        ex.ExperimentConfig.from_mapping({"grid": {"cells": 4}})
    assert ex.ExperimentConfig.from_mapping(cfg.to_dict()) == cfg


def test_load_config_file_and_overrides(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('name = "x"\n[model]\nm = 3.0\np = 2.0\n[run]\nT = 0.5\n')
    cfg = load_config(path, ["run.T=0.25", "family='sine_exp'", "epsilons=[0.1]"], seed=7,
                      out=tmp_path / "o")
    assert cfg.name == "x" and cfg.m == 3.0 and cfg.T == 0.25 and cfg.family == "sine_exp"
    assert cfg.epsilons == (0.1,) and cfg.seed == 7 and cfg.out == str(tmp_path / "o")
    with pytest.raises(ex.ConfigError):
        load_config(None, ["no_equals_sign"])


def test_strip_timing():
    assert strip_timing({"a": 1, "wall_time": 2, "b": [{"wall_time": 3, "c": 4}]}) == \
        {"a": 1, "b": [{"c": 4}]}


def test_parser_lists_all_commands():
    parser = build_parser()
    for cmd in SMALL:
        args = parser.parse_args([cmd, "--seed", "3", "--override", "m=2"])
        assert args.command == cmd and args.seed == 3 and args.override == ["m=2"]


# ---------------------------------------------------------------- commands

@pytest.mark.parametrize("cmd", sorted(SMALL))
def test_command_outputs(cmd, tmp_path):
    code = run_cli(cmd, tmp_path)
    verdict = json.loads((tmp_path / "verdict.json").read_text())
    assert verdict["command"] == cmd
    assert code == (0 if verdict["passed"] else 1)
    assert code == 0, verdict
    report = json.loads((tmp_path / f"{cmd}.json").read_text())
    assert report
    assert json.loads((tmp_path / "config.json").read_text())["out"] == str(tmp_path)
    if cmd != "params":
        assert any(tmp_path.rglob("*.csv"))
        assert verdict["note"] == "thresholds are calibrated defaults"


@pytest.mark.parametrize("cmd", ["decay", "norms", "nonlin-ratio"])
def test_determinism(cmd, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_cli(cmd, a, ["seed=11"])
    run_cli(cmd, b, ["seed=11"])
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        if rel.name == "config.json":
            continue   # records the output directory
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_failing_threshold_exit_code(tmp_path):
    assert run_cli("convergence", tmp_path, ["min_order=10.0"]) == 0  # commutation ignores it
    code = run_cli("stability", tmp_path, ["amplification_factor=0.01"])
    assert code == 1
    assert json.loads((tmp_path / "verdict.json").read_text())["passed"] is False


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["params", "--out", str(tmp_path), "--override", "family='nope'"]) == 2
    assert main(["params", "--out", str(tmp_path), "--override", "bogus=1"]) == 2
    assert main(["params", "--config", str(tmp_path / "missing.toml")]) == 2
    assert "config error" in capsys.readouterr().err


# ---------------------------------------------------------- experiment API

def test_orders_helper():
    np.testing.assert_allclose(ex.orders([1.0, 0.25, 0.0625]), [2.0, 2.0])


def test_bump_profile():
    s = np.linspace(0, 2, 9)
    b = ex.bump_profile(s, 1.5)
    assert b[0] == 0.0 and np.all(b[s >= 1.5] == 0.0) and np.all(b[(s > 0) & (s < 1.5)] > 0)
    h = 1e-6
    assert (ex.bump_profile(h) - ex.bump_profile(0.0)) / h == pytest.approx(1.0, abs=1e-5)


def test_pressure_datum_inverts_graph():
    cfg = ex.ExperimentConfig(dim=2, n_normal=64, n_tangential=16, epsilon=0.05)
    g = ex.pressure_datum(cfg, ex.lab_grid(cfg))
    zt, yn = g.grid.coords()
    x = g.values
    w, _ = ex._shape(cfg, zt, x)
    inside = x > 0
    np.testing.assert_allclose((x + 0.05 * w)[inside], yn[inside], atol=1e-12)
    assert np.all(g.values[yn <= 0] == 0)


def test_stability_limits():
    with pytest.raises(ex.ConfigError):
        ex.run_stability(ex.ExperimentConfig(epsilon=0.2))
    rep = ex.run_stability(ex.ExperimentConfig(epsilon=0.0, n_normal=64, T=0.2))["report"]
    assert rep["verdict"]["passed"]
    assert max(rep["bulk_deviation"]) <= rep["verdict"]["checks"]["bulk_exact"]["threshold"]


def test_decay_zero_datum():
    rep = ex.run_decay(ex.ExperimentConfig(epsilon=0.0, pert_n_normal=16, T=0.2))["report"]
    assert rep["verdict"]["passed"]
    assert all(e["sup"] == 0.0 for e in rep["base"]["entries"].values())


def test_decay_report_needs_snapshots():
    from dnlwave.grid import FieldSequence, HalfSpaceGrid, ScalarField
    g = HalfSpaceGrid(1, 1.0, 8)
    seq = FieldSequence((ScalarField(g, np.zeros(8), 0.0), ScalarField(g, np.zeros(8), 1.0)))
    with pytest.raises(ValueError):
        ex.decay_report(seq)


def test_nonlinearity_ratio_zero_family():
    rep = ex.run_nonlinearity_ratio(ex.ExperimentConfig(epsilons=(0.0,), pert_n_normal=16, T=0.2,
                                                        n_jets=1000), pairs=((2, 2),))["report"]
    row = rep["rows"][0]
    assert row["y_norm"] == 0.0 and row["x_norm"] == 0.0 and row["ratio"] is None


def test_pointwise_constant_finite():
    rng = np.random.default_rng(0)
    for mp in ((2, 2), (3, 2), (1, 3), (2, 3)):
        c = ex.pointwise_constant(ex.new_params(*mp), 5000, rng)
        assert np.isfinite(c) and c > 0


def test_norms_require_exponent():
    with pytest.raises(ex.ConfigError):
        ex.run_norms(ex.ExperimentConfig(q=3.0))
