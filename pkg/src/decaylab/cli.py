"""Command-line front end.

Verbs:
  run            execute an experiment config (or bundled scenario)
  list           table of bundled scenarios
  compare        field-wise diff of two run reports
  audit          run only the assumption/potential audits of a config
  dump-operator  write a built operator in the documented CSV format

The default output root comes from the DECAYLAB_OUT environment variable
when --out is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config, validate_config
from .reporting import compare_runs, dump_operator, load_report
from .runner import run_experiment
from .scenarios import list_scenarios, scenario_config


def _resolve_config(args) -> "ExperimentConfig":
    if args.config and args.scenario:
        raise SystemExit("give either --config or --scenario, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.scenario:
        try:
            cfg = scenario_config(args.scenario)
        except KeyError as exc:
            raise SystemExit(str(exc.args[0]))
    else:
        raise SystemExit("one of --config or --scenario is required")
    if args.seed is not None:
        raw = cfg.to_dict()
        raw["seed"] = args.seed
        cfg = validate_config(raw)
    return cfg


def _out_root(args) -> str | None:
    if getattr(args, "out", None):
        return args.out
    return os.environ.get("DECAYLAB_OUT")


def _cmd_run(args) -> int:
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = _out_root(args)
    report = run_experiment(cfg, out_dir=out)
    for check in sorted(report.verdicts):
        print(f"{check:10s} {report.verdicts[check]}")
    print(f"overall: {report.overall}")
    return report.exit_code


def _cmd_list(args) -> int:
    rows = list_scenarios(args.scenario or "")
    if not rows:
        return 0
    width = max(len(r["name"]) for r in rows)
    cwidth = max(len(r["checks"]) for r in rows)
    for r in rows:
        print(f"{r['name']:<{width}}  {r['checks']:<{cwidth}}  {r['expected']}")
    return 0


def _cmd_compare(args) -> int:
    a = load_report(args.report_a)
    b = load_report(args.report_b)
    try:
        diff = compare_runs(a, b)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if diff["identical"]:
        print("no differences")
        return 0
    for flip in diff["verdict_flips"]:
        print(f"VERDICT FLIP {flip['check']}: {flip['a']} -> {flip['b']}")
    for d in diff["constant_drifts"]:
        print(f"drift {d['field']}: {d['a']!r} -> {d['b']!r} (rel {d['relative']:.3e})")
    for m in diff["missing_fields"]:
        print(f"only in one report: {m}")
    return 1 if not diff["verdict_flips"] else 2


def _cmd_audit(args) -> int:
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    raw = cfg.to_dict()
    raw["checks"] = ["AUDIT"]
    cfg = validate_config(raw)
    report = run_experiment(cfg, out_dir=_out_root(args))
    print(json.dumps(report.checks.get("AUDIT", {}), indent=2, sort_keys=True, default=str))
    print(f"AUDIT {report.verdicts.get('AUDIT', 'n/a')}")
    return report.exit_code


def _cmd_dump_operator(args) -> int:
    from .grids import make_grid
    from .operators import (
        assemble_dilation,
        assemble_hamiltonian,
        band_projection_matrix,
        spectral_decompose,
    )
    from .potentials import PotentialSpec
    from .commutators import split_commutator

    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    grid = make_grid(cfg.grid["geometry"], cfg.grid["n"], cfg.grid["length"])
    pot = PotentialSpec(cfg.potential["family"], float(cfg.potential["coupling"]),
                        int(cfg.potential["n_space"]))
    hop = assemble_hamiltonian(grid, pot)
    which = args.which
    if which == "hamiltonian":
        op = hop
    elif which == "dilation":
        op = assemble_dilation(grid)
    elif which == "remainder":
        op = split_commutator(hop, assemble_dilation(grid), float(cfg.commutator["c"]),
                              float(cfg.commutator["s"])).remainder
    elif which == "projection":
        sd = spectral_decompose(hop)
        lam = sd.eigenvalues
        lo, hi = cfg.band["lo"], cfg.band["hi"]
        lo = 1e-3 * float(abs(lam).max()) if lo == "auto" else float(lo)
        hi = float(lam[-1]) if hi == "auto" else float(hi)
        op = band_projection_matrix(sd, lo, hi, grid=grid)
    else:
        raise SystemExit(f"unknown operator {which!r}")
    path = dump_operator(args.target, op)
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="decaylab", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--config", help="path to a YAML experiment config")
        p.add_argument("--scenario", help="name of a bundled scenario")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", help="output root directory (default $DECAYLAB_OUT)")

    p_run = sub.add_parser("run", help="execute an experiment")
    common(p_run)
    p_run.add_argument("--jobs", type=int, default=1,
                       help="parallel scenarios when several names are given")
    p_run.add_argument("--batch", nargs="*", default=None,
                       help="run several bundled scenarios")
    p_run.set_defaults(func=_cmd_run)

    p_list = sub.add_parser("list", help="bundled scenario table")
    p_list.add_argument("scenario", nargs="?", default="", help="substring filter")
    p_list.set_defaults(func=_cmd_list)

    p_cmp = sub.add_parser("compare", help="diff two run reports")
    p_cmp.add_argument("report_a")
    p_cmp.add_argument("report_b")
    p_cmp.set_defaults(func=_cmd_compare)

    p_audit = sub.add_parser("audit", help="assumption/potential audits only")
    common(p_audit)
    p_audit.set_defaults(func=_cmd_audit)

    p_dump = sub.add_parser("dump-operator", help="write an operator dump")
    common(p_dump)
    p_dump.add_argument("--which", default="hamiltonian",
                        choices=["hamiltonian", "dilation", "remainder", "projection"])
    p_dump.add_argument("target", help="output CSV path")
    p_dump.set_defaults(func=_cmd_dump_operator)
    return ap


def _run_batch(args) -> int:
    from concurrent.futures import ThreadPoolExecutor

    names = args.batch
    out = _out_root(args)
    codes = {}

    def one(name):
        cfg = scenario_config(name, seed=args.seed)
        return name, run_experiment(cfg, out_dir=out)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = dict(pool.map(one, names))
    else:
        results = dict(one(n) for n in names)
    worst = 0
    for name in sorted(results):
        rep = results[name]
        print(f"{name}: {rep.overall}")
        codes[name] = rep.exit_code
        worst = max(worst, rep.exit_code)
    return worst


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.verb == "run" and args.batch:
        return _run_batch(args)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
