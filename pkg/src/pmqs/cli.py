"""Experiment driver.

Subcommands map onto the module pipeline: srb, memory-loss, perturbation,
green-kubo (variance curves), simulate (finite-level ensembles), diffusion
(limit ensembles), verify (full test battery), report (summary rebuild),
config (defaults dump). Every run writes its artifacts plus manifest.json
into one directory; reruns with the same manifest are byte-identical up to
the manifest's timestamp field.

Exit codes: 0 ok, 1 acceptance test failure, 2 config error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import density as dens
from . import mc
from . import ulam
from .config import ExperimentConfig, default_config, load_config
from .errors import ConfigError, NumericsError, SchemaError
from .greenkubo import green_kubo_detail, sigma_curve
from .runio import RunWriter
from .schedule import equipartition
from .verify import run_verify


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmqs",
        description="simulation and verification lab for slowly modulated "
                    "intermittent interval maps",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=None,
                        help="JSON config file (defaults embedded)")
    common.add_argument("--seed", metavar="U64", type=int, default=None)
    common.add_argument("--threads", metavar="N", type=int, default=None)
    common.add_argument("--out", metavar="DIR", default=None,
                        help="run directory (overrides config out_dir)")
    common.add_argument("--profile", choices=["default", "ci"],
                        default="default",
                        help="ci profile shrinks every size for quick runs")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("config", parents=[common],
                       help="print the effective or default configuration")
    p.add_argument("--print-defaults", action="store_true")
    p = sub.add_parser("srb", parents=[common],
                       help="invariant densities and cone reports")
    p.add_argument("--dump-operators", action="store_true",
                   help="also store each Ulam matrix as a dense binary block")
    sub.add_parser("memory-loss", parents=[common],
                   help="pushforward merging curve and envelope")
    sub.add_parser("perturbation", parents=[common],
                   help="operator and invariant-density distances")
    sub.add_parser("green-kubo", parents=[common],
                   help="variance curves per schedule")
    p = sub.add_parser("simulate", parents=[common],
                       help="finite-level fluctuation ensembles")
    p.add_argument("--csv", action="store_true",
                   help="also export ensembles as CSV (large)")
    sub.add_parser("diffusion", parents=[common],
                   help="exact limit-process ensembles")
    sub.add_parser("verify", parents=[common],
                   help="full statistical test battery")
    p = sub.add_parser("report", parents=[common],
                       help="rebuild summary.csv from stored reports")
    p.add_argument("--run-dir", required=True)
    return parser


def _load(args) -> ExperimentConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    return load_config(args.config, overrides=overrides, profile=args.profile)


def _threads(args) -> int:
    """Worker-pool size: a runtime flag, never part of the configuration
    (results are bit-identical for any value)."""
    if args.threads is not None:
        return max(int(args.threads), 1)
    import os

    env = os.environ.get("PMQS_THREADS")
    return max(int(env), 1) if env else 1


def _cmd_config(args) -> int:
    if args.print_defaults:
        print(json.dumps(default_config(), sort_keys=True, indent=2))
        return 0
    cfg = _load(args)
    print(json.dumps(cfg.data, sort_keys=True, indent=2))
    return 0


def _cmd_srb(args) -> int:
    cfg = _load(args)
    writer = RunWriter(cfg["out_dir"])
    m = cfg["ulam_bins"]
    cache = ulam.OperatorCache(m)
    alphas = [0.0] + [float(a) for a in cfg.get("tests", "srb_alphas")]
    rows, cone_rows = [], []
    for a in alphas:
        h = cache.srb(a)
        mids = h.midpoints()
        rows.extend((a, i, mids[i], h.values[i]) for i in range(m))
        rep = dens.cone_check(h, a)
        cone_rows.append((a, rep.decreasing_violation, rep.x_power_violation,
                          rep.pointwise_bound_margin, rep.passed))
        if args.dump_operators:
            dense = np.asarray(cache.operator(a).matrix.todense())
            writer.write_block(f"operator_{a}.bin", dense,
                               {"kind": "ulam_operator", "m": m, "alpha": a})
    writer.write_csv("densities.csv",
                     ["alpha", "bin_index", "midpoint", "value"], rows)
    writer.write_csv("cone.csv",
                     ["alpha", "decreasing_violation", "x_power_violation",
                      "pointwise_bound_margin", "passed"], cone_rows)
    writer.write_manifest(cfg)
    return 0


def _cmd_memory_loss(args) -> int:
    cfg = _load(args)
    writer = RunWriter(cfg["out_dir"])
    ml = cfg.get("tests", "memory_loss")
    m = cfg["ulam_bins"]
    beta = float(ml["preset_beta"])
    N = int(ml["N"])
    from .schedule import ParameterCurve
    row = equipartition(ParameterCurve.constant(beta, beta_star=beta), N)
    d = ulam.memory_loss_curve(dens.GridDensity.uniform(m),
                               dens.GridDensity.singular(m, beta), row, N)
    env = ulam.decay_envelope(np.arange(N + 1).astype(float), beta)
    writer.write_csv("memory_loss.csv", ["n", "l1_distance", "envelope"],
                     zip(range(N + 1), d, env))
    writer.write_manifest(cfg)
    return 0


def _cmd_perturbation(args) -> int:
    cfg = _load(args)
    writer = RunWriter(cfg["out_dir"])
    p = cfg.get("tests", "perturbation")
    alpha = float(p["alpha"])
    betas = sorted((float(b) for b in p["betas"]), reverse=True)
    h = dens.GridDensity.singular(cfg["ulam_bins"], alpha)
    bs = max(betas)
    exponent = p.get("exponent", "third")
    rows = []
    for b in betas:
        d_op, d_srb = ulam.perturbation_distances(alpha, b, h)
        env = ulam.perturbation_envelope(b - alpha, bs, exponent)
        rows.append((alpha, b, d_op, d_srb, d_srb / env))
    writer.write_csv("perturbation.csv",
                     ["alpha", "beta", "d_op", "d_srb", "envelope_ratio"],
                     rows)
    writer.write_manifest(cfg)
    return 0


def _cmd_green_kubo(args) -> int:
    cfg = _load(args)
    writer = RunWriter(cfg["out_dir"])
    f = cfg.observable()
    cache = ulam.OperatorCache(cfg["ulam_bins"])
    grid = mc.build_time_grid(cfg["grid_intervals"])
    out = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name in cfg["schedules"]:
            vc = sigma_curve(f, cfg.curve(name), grid, cfg["truncation"], cache)
            writer.write_csv(f"sigma_curve_{name}.csv",
                             ["t", "sigma2", "tail_estimate"],
                             zip(vc.grid, vc.values, vc.tails))
            out[name] = {"min": float(vc.values.min()),
                         "max": float(vc.values.max()),
                         "holder_fit": list(vc.holder_fit),
                         "modulus_at_quarter": vc.modulus_quarter}
        anchor = green_kubo_detail(f, 0.0, cfg["truncation"], cache)
    out["doubling_anchor"] = {"sigma2": anchor.value,
                              "tail_estimate": anchor.tail_estimate}
    writer.write_json("green_kubo.json", out)
    writer.write_manifest(cfg)
    return 0


def _ensemble_blocks(cfg: ExperimentConfig, writer: RunWriter, csv: bool,
                     threads: int):
    f = cfg.observable()
    mu = cfg.measure("initial_measure")
    grid = mc.build_time_grid(cfg["grid_intervals"])
    n = int(cfg["n_ladder"][-1])
    for name in cfg["schedules"]:
        row = equipartition(cfg.curve(name), n)
        nu_data = mc.centering_data(f, row, mu, cfg["ulam_bins"])
        ens = mc.fluctuation_ensemble(
            f, row, mu, mu, cfg["paths"], grid, cfg["seed"],
            m=cfg["ulam_bins"], threads=threads, nu_data=nu_data,
            tag=f"{name}:{n}")
        header = {"kind": ens.kind, "n": ens.n, "M": ens.M,
                  "grid": list(map(float, ens.grid)), "seed": ens.seed,
                  "centering": ens.centering, "row_id": ens.row_id,
                  "config_hash": cfg.config_hash()}
        writer.write_block(f"ensemble_{name}.bin", ens.values, header)
        if csv:
            rows = []
            for pid in range(ens.M):
                rows.extend((pid, ens.grid[i], ens.values[pid, i])
                            for i in range(len(ens.grid)))
            writer.write_csv(f"ensemble_{name}.csv",
                             ["path_id", "t", "value"], rows)


def _cmd_simulate(args) -> int:
    cfg = _load(args)
    writer = RunWriter(cfg["out_dir"])
    _ensemble_blocks(cfg, writer, csv=args.csv, threads=_threads(args))
    writer.write_manifest(cfg)
    return 0


def _cmd_diffusion(args) -> int:
    cfg = _load(args)
    writer = RunWriter(cfg["out_dir"])
    from . import diffusion as df
    f = cfg.observable()
    cache = ulam.OperatorCache(cfg["ulam_bins"])
    grid = mc.build_time_grid(cfg["grid_intervals"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name in cfg["schedules"]:
            vc = sigma_curve(f, cfg.curve(name), grid, cfg["truncation"], cache)
            ens = df.sample_limit_paths(vc, grid, cfg["limit_paths"],
                                        cfg["seed"], threads=_threads(args),
                                        tag=f"{name}:limit")
            header = {"kind": "limit", "M": ens.M,
                      "grid": list(map(float, ens.grid)), "seed": ens.seed,
                      "schedule": name, "config_hash": cfg.config_hash()}
            writer.write_block(f"limit_{name}.bin", ens.values, header)
    writer.write_manifest(cfg)
    return 0


def _cmd_verify(args) -> int:
    cfg = _load(args)
    return run_verify(cfg, threads=_threads(args))


def _cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    reports_dir = run_dir / "reports"
    if not reports_dir.is_dir():
        raise ConfigError(f"{run_dir} has no reports/ directory")
    from .verify import ACCEPTANCE_CLAIMS
    rows = []
    for path in sorted(reports_dir.glob("*.json")):
        rep = json.loads(path.read_text())
        rows.append((rep["claim"], rep["name"], rep["verdict"],
                     "yes" if rep["claim"] in ACCEPTANCE_CLAIMS else "no"))
    writer = RunWriter(run_dir)
    writer.write_csv("summary.csv",
                     ["claim", "test", "verdict", "acceptance"], rows)
    print(f"report: {len(rows)} reports summarized")
    return 0


_COMMANDS = {
    "config": _cmd_config,
    "srb": _cmd_srb,
    "memory-loss": _cmd_memory_loss,
    "perturbation": _cmd_perturbation,
    "green-kubo": _cmd_green_kubo,
    "simulate": _cmd_simulate,
    "diffusion": _cmd_diffusion,
    "verify": _cmd_verify,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericsError, SchemaError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
