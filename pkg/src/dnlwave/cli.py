"""Command-line entry point: ``dnlwave <subcommand> [--config file] [--out dir] ...``.

Config files are TOML (``key = value`` with optional ``[sections]``; section
names are ignored and keys are matched against :class:`ExperimentConfig`).
Every subcommand writes its JSON report, CSV data and a ``verdict.json`` into
the output directory; the exit code is 0 iff the verdict passes.
"""
from __future__ import annotations

import argparse
import ast
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .grid import write_sequence_csv
from .perturbation import TransformMeta, residual_table, residual_transformed, zeta_sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("dnlwave")


def _parse_value(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def load_config(path=None, overrides=(), seed=None, out=None) -> ex.ExperimentConfig:
    data = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    cfg = ex.ExperimentConfig.from_mapping(data)
    updates = {}
    for item in overrides:
        if "=" not in item:
            raise ex.ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        updates[key.strip().split(".")[-1]] = _parse_value(value.strip())
    if seed is not None:
        updates["seed"] = seed
    if out is not None:
        updates["out"] = str(out)
    merged = {**cfg.to_dict(), **updates}
    return ex.ExperimentConfig.from_mapping(merged)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def strip_timing(obj):
    """Drop wall-clock entries so that reports are reproducible bit for bit."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k != "wall_time"}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def write_rows(path: Path, rows: list) -> None:
    if not rows:
        return
    keys = list(rows[0])
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)


def _series_rows(times, **cols) -> list:
    return [{"time": t, **{k: v[i] for k, v in cols.items()}} for i, t in enumerate(times)]


# ----------------------------------------------------------------- commands

def cmd_params(cfg, out):
    params = cfg.params
    meta = TransformMeta.from_params(params)
    report = {"params": params.to_dict(), "transform": meta.to_dict(),
              "time_rescaling": params.time_rescaling}
    print(json.dumps(report, indent=2))
    return report, {"passed": True, "checks": {}}


def cmd_simulate_direct(cfg, out):
    result = ex.run_simulate_direct(cfg)
    write_sequence_csv(result["sequence"], out / "density", "rho", cfg.params)
    rep = result["report"]
    write_rows(out / "mass.csv", [{"step": i, "mass": m} for i, m in enumerate(rep["mass_trace"])])
    return rep, rep["verdict"]


def cmd_simulate_perturbation(cfg, out):
    params = cfg.params
    seq = ex.simulate_perturbation(cfg)
    write_sequence_csv(seq, out / "perturbation", "w", params)
    zeta = zeta_sequence(seq, TransformMeta.from_params(params))
    table = residual_table(residual_transformed(zeta, params, form=cfg.form))
    rows = [{"time": t, "max_residual": a, "l2_residual": b} for t, a, b in table]
    write_rows(out / "residuals.csv", rows)
    finite = all(np.isfinite(f.values).all() for f in seq)
    verdict = ex._verdict({"finite": ex._check(0, 0, finite)})
    return {"params": params.to_dict(), "times": seq.times.tolist(), "residuals": rows}, verdict


def cmd_stability(cfg, out):
    rep = ex.run_stability(cfg)["report"]
    write_rows(out / "deviation.csv", _series_rows(rep["times"], deviation=rep["deviation"]))
    return rep, rep["verdict"]


def cmd_decay(cfg, out):
    rep = ex.run_decay(cfg)["report"]
    for tag in ("base", "refined", "doubled"):
        d = rep[tag]
        cols = {k: e["series"] for k, e in d["entries"].items()}
        write_rows(out / f"decay_{tag}.csv", _series_rows(d["times"], **cols))
    return rep, rep["verdict"]


def cmd_nonlin_ratio(cfg, out):
    rep = ex.run_nonlinearity_ratio(cfg)["report"]
    write_rows(out / "ratios.csv", rep["rows"])
    return rep, rep["verdict"]


def cmd_cross_check(cfg, out):
    rep = ex.run_cross_check(cfg)["report"]
    write_rows(out / "discrepancy.csv", rep["rows"])
    return rep, rep["verdict"]


def cmd_norms(cfg, out):
    rep = ex.run_norms(cfg)["report"]
    write_json(out / "norm_report.json", rep["norms"])
    rows = [{"norm": kind, "component": name, "value": c["value"], "r": c["r"],
             "z_hat": "" if c["z_hat"] is None else " ".join(map(repr, c["z_hat"]))}
            for kind in ("x", "y") for name, c in rep["norms"][f"{kind}_components"].items()]
    write_rows(out / "components.csv", rows)
    return rep, rep["verdict"]


def cmd_convergence(cfg, out):
    rep = ex.run_convergence(cfg)["report"]
    write_rows(out / "convergence.csv", strip_timing(rep["rows"]))
    return rep, rep["verdict"]


COMMANDS = {
    "params": cmd_params,
    "simulate-direct": cmd_simulate_direct,
    "simulate-perturbation": cmd_simulate_perturbation,
    "stability": cmd_stability,
    "decay": cmd_decay,
    "nonlin-ratio": cmd_nonlin_ratio,
    "cross-check": cmd_cross_check,
    "norms": cmd_norms,
    "convergence": cmd_convergence,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dnlwave", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="TOML config file")
        sp.add_argument("--out", type=Path, help="output directory (default: config 'out')")
        sp.add_argument("--seed", type=int, help="random seed (u64)")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config entry; repeatable")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.override, args.seed, args.out)
    except (ex.ConfigError, ValueError, TypeError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config.json", cfg.to_dict())
    report, verdict = COMMANDS[args.command](cfg, out)
    write_json(out / f"{args.command}.json", strip_timing(report))
    write_json(out / "verdict.json", {"experiment": cfg.name, "command": args.command, **verdict})
    log.info("verdict: %s", "pass" if verdict["passed"] else "fail")
    return 0 if verdict["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
