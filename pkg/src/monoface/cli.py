"""Command line: run configs, the bundled gallery, and Yosida trajectory export.

Exit status is 0 when every check passes (premise failures count as not
contradicted), 1 when any check fails or is inconclusive, 2 on config or
solver errors.
"""
import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from .jsonio import dumps
from .runner import (EXIT_ERROR, ConfigError, ExperimentConfig, exit_code, run_config,
                     summary_csv, trajectory_csv, write_outputs)


def gallery_configs():
    """Bundled example configs, sorted by file name."""
    root = resources.files("monoface") / "gallery"
    out = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            out.append((Path(entry.name).stem, ExperimentConfig.from_dict(
                json.loads(entry.read_text()))))
    return out


def _table(rows):
    cols = ("example", "check", "theorem_id", "status", "detail")
    width = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
    lines = ["  ".join(c.ljust(width[c]) for c in cols).rstrip()]
    lines.append("  ".join("-" * width[c] for c in cols))
    for r in rows:
        lines.append("  ".join(str(r[c]).ljust(width[c]) for c in cols).rstrip())
    return "\n".join(lines) + "\n"


def _emit(rows, fmt, stream):
    if fmt == "json":
        stream.write(dumps(rows))
    elif fmt == "csv":
        stream.write(summary_csv(rows))
    else:
        stream.write(_table(rows))


def _report_errors(outcomes):
    for o in outcomes:
        if o.error is not None:
            print(f"error: check {o.check_id!r}: {o.error}", file=sys.stderr)


def cmd_run(args):
    cfg = ExperimentConfig.load(args.config)
    outcomes = run_config(cfg)
    _report_errors(outcomes)
    fmt = args.format or cfg.output_format
    out_dir = args.out or cfg.output_path
    if out_dir:
        write_outputs(cfg, outcomes, out_dir, fmt)
    _emit([o.summary_row(cfg.name) for o in outcomes], fmt if not out_dir else "table",
          sys.stdout)
    return exit_code(outcomes)


def cmd_gallery(args):
    rows, all_outcomes = [], []
    selected = [(stem, cfg) for stem, cfg in gallery_configs()
                if args.only is None or args.only in (stem, cfg.name) or args.only in cfg.tags]
    if not selected:
        raise ConfigError(f"no gallery example matches {args.only!r}")
    for stem, cfg in selected:
        outcomes = run_config(cfg)
        _report_errors(outcomes)
        if args.out:
            write_outputs(cfg, outcomes, Path(args.out) / stem, args.format or "json")
        rows.extend(o.summary_row(cfg.name) for o in outcomes)
        all_outcomes.extend(outcomes)
    _emit(rows, args.format or "table", sys.stdout)
    return exit_code(all_outcomes)


def cmd_export_trajectory(args):
    cfg = ExperimentConfig.load(args.config)
    check_id, text = trajectory_csv(cfg, args.check)
    out = args.out or (str(Path(cfg.output_path) / f"{check_id}-trajectory.csv")
                       if cfg.output_path else None)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="monoface", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every check of a config file")
    p.add_argument("config")
    p.add_argument("--out", help="directory for report files (overrides the config)")
    p.add_argument("--format", choices=["json", "csv"])
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gallery", help="run the bundled examples")
    p.add_argument("--only", metavar="TAG", help="example name or tag")
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--out", help="also write per-check reports under this directory")
    p.set_defaults(func=cmd_gallery)

    p = sub.add_parser("export-trajectory", help="per-lambda CSV of a Yosida check")
    p.add_argument("config")
    p.add_argument("--check", help="id of the min_norm_via_yosida check (default: first)")
    p.add_argument("--out", help="CSV path (default: stdout or the config output path)")
    p.set_defaults(func=cmd_export_trajectory)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
