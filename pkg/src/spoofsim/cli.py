"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or config, 2 runtime fault.
"""

from __future__ import annotations

import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import harness as h
from .errors import NumericalFault, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_FAULT = 0, 1, 2


def _scenario(args) -> h.ScenarioConfig:
    if args.config and args.preset:
        raise ValidationError("use --config or --preset, not both")
    if args.config:
        cfg = h.load_config(args.config)
    else:
        cfg = h.preset(args.preset or args.default_preset)
    if args.seed is not None and args.seeds is not None:
        raise ValidationError("use --seed or --seeds, not both")
    if args.seed is not None:
        if not 0 <= args.seed < 1 << 64:
            raise ValidationError("--seed must be an unsigned 64-bit integer")
        cfg = cfg.with_seeds([args.seed])
    elif args.seeds is not None:
        if args.seeds < 1:
            raise ValidationError("--seeds must be >= 1")
        cfg = cfg.with_seeds(range(args.seeds))
    return cfg


def _out_dir(args, cfg) -> Path:
    return Path(args.out or cfg.out_dir or "out")


def cmd_run(args) -> int:
    cfg = _scenario(args)
    out = _out_dir(args, cfg)
    results = h.run_many(cfg)
    h.emit(results, args.format, out / f"runs.{args.format}")
    h.write_trace_csv(results[0], out / "trace.csv")
    for r in results:
        row = r.row()
        print(f"{row['run_id']}: ade={row['ade']:.3f} fde={row['fde']:.3f} apde={row['apde']:.3f} "
              f"chi_max={row['chi_max']:.3f} detected={row['detected']}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .experiments import SWEEP_ALPHA, SWEEP_PHI, SWEEP_THETA

    args.default_preset = "sweep_base"
    cfg = _scenario(args)
    grid = h.SweepGrid(cfg, _floats(args.theta, SWEEP_THETA), _floats(args.alpha, SWEEP_ALPHA),
                       _floats(args.phi, SWEEP_PHI))
    rows = h.sweep_parameters(grid)
    h.emit(rows, args.format, _out_dir(args, cfg) / f"sweep.{args.format}", h.SWEEP_COLUMNS)
    sys.stdout.write(h.render(rows, "csv", h.SWEEP_COLUMNS))
    return EXIT_OK


def cmd_ablate(args) -> int:
    args.default_preset = "ablation_cca"
    cfg = _scenario(args)
    rows = h.ablation_suite(cfg, include_swap=args.swap)
    h.emit(rows, args.format, _out_dir(args, cfg) / f"ablation.{args.format}", h.ABLATION_COLUMNS)
    sys.stdout.write(h.render(rows, "csv", h.ABLATION_COLUMNS))
    return EXIT_OK


AGG_COLUMNS = ("scenario", "attack", "n", "mean_ade", "mean_fde", "mean_apde", "mean_chi_max", "detection_rate")


def cmd_report(args) -> int:
    if args.acceptance:
        from .experiments import ALL

        failed = 0
        for key, fn in ALL.items():
            outcome = fn()
            failed += not outcome.passed
            print(f"{key:>2} {outcome.line()}")
        print(f"{len(ALL) - failed}/{len(ALL)} criteria passed")
        return EXIT_OK
    if not args.paths:
        raise ValidationError("report needs one or more runs.csv paths (or --acceptance)")
    groups = defaultdict(list)
    for p in args.paths:
        try:
            with open(p, newline="") as fh:
                rows = list(csv.DictReader(fh))
        except OSError as exc:
            raise ValidationError(f"cannot read {p}: {exc}") from exc
        for row in rows:
            missing = set(h.RUN_COLUMNS) - set(row)
            if missing:
                raise ValidationError(f"{p}: not a runs.csv file (missing {sorted(missing)})")
            groups[(row["scenario"], row["attack"])].append(row)
    agg = []
    for (scen, attack), rows in sorted(groups.items()):
        mean = lambda k: float(np.mean([float(r[k]) for r in rows]))  # noqa: E731
        agg.append({
            "scenario": scen, "attack": attack, "n": len(rows),
            "mean_ade": mean("ade"), "mean_fde": mean("fde"), "mean_apde": mean("apde"),
            "mean_chi_max": mean("chi_max"),
            "detection_rate": float(np.mean([r["detected"] == "true" for r in rows])),
        })
    if args.out:
        h.emit(agg, args.format, Path(args.out) / f"report.{args.format}", AGG_COLUMNS)
    sys.stdout.write(h.render(agg, args.format, AGG_COLUMNS))
    return EXIT_OK


def _floats(text, default):
    if text is None:
        return tuple(default)
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ValidationError(f"bad number list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spoofsim", description="GNSS spoofing simulation bench")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, default_preset):
        p.add_argument("--config", help="scenario YAML file")
        p.add_argument("--preset", help="named scenario preset")
        p.add_argument("--seed", type=int, help="run a single seed")
        p.add_argument("--seeds", type=int, help="run seeds 0..N-1")
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.set_defaults(default_preset=default_preset)

    p = sub.add_parser("run", help="run one scenario over its seeds")
    common(p, "ssd_straight")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="theta/alpha/phi grid over an SSD scenario")
    common(p, "sweep_base")
    p.add_argument("--theta", help="comma-separated values")
    p.add_argument("--alpha", help="comma-separated values")
    p.add_argument("--phi", help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="Baseline / SPA / SVA / CCA comparison")
    common(p, "ablation_cca")
    p.add_argument("--swap", action="store_true", help="also run the swapped branch assignment")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("report", help="aggregate runs.csv files, or run the acceptance studies")
    p.add_argument("paths", nargs="*")
    p.add_argument("--acceptance", action="store_true")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_report)

    sub.add_parser("presets", help="list named presets").set_defaults(
        func=lambda a: print("\n".join(sorted(h.PRESETS))) or EXIT_OK)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalFault, OSError) as exc:
        print(f"fault: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
