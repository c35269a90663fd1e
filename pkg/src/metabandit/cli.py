"""Command-line entry point: run grids, list presets, validate configs."""

from __future__ import annotations

import argparse
import sys

from .envs import PRESETS
from .harness import ConfigError, load_config, run_grid


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metabandit",
        description="Structured-bandit regret experiments with "
                    "feature-guided hierarchical Thompson sampling.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a grid from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--dry-run", action="store_true",
                     help="validate the config and plan cells, write nothing")
    run.add_argument("--workers", type=int, default=1)

    presets = sub.add_parser("presets", help="preset scenarios")
    presets.add_argument("action", choices=["list"])

    val = sub.add_parser("validate", help="validate a JSON config")
    val.add_argument("--config", required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "presets":
        for name in sorted(PRESETS):
            s = PRESETS[name]
            extra = ""
            if s.cold_start is not None:
                extra = (f" cold_start(delta_n={s.cold_start.delta_n},"
                         f" period={s.cold_start.period})")
            print(f"{name}: kind={s.kind.value} N={s.n_items} K={s.k} "
                  f"d={s.dim} source={s.source}{extra}")
        return 0
    if args.command == "validate":
        try:
            config = load_config(args.config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 1
        cells = len(config.scenarios) * len(config.agents)
        print(f"ok: {cells} cell(s) x {config.replications} replication(s), "
              f"T={config.T}")
        return 0
    # run
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    code, metadata = run_grid(config, workers=args.workers,
                              dry_run=args.dry_run)
    if args.dry_run:
        print(f"dry run ok: {len(metadata['cells'])} cell(s)")
        return code
    for cell in metadata["cells"]:
        status = "ok" if not cell["n_failed"] else f"{cell['n_failed']} failed"
        print(f"{cell['scenario']} / {cell['agent']}: {cell['n_ok']} ok "
              f"({status}) -> {cell['csv']}")
    return code


if __name__ == "__main__":
    sys.exit(main())
