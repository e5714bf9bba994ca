"""Command line front door: run one experiment or expand the full grid.

`run` executes a single configuration (JSON config file plus flag overrides)
and either writes the CSV/JSON bundle to --out or prints the summary to
stdout. `matrix` expands the evaluation grid from a base config and writes
one result directory per scenario.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

from .orchestrator import ExperimentConfig, run_experiment, scenario_matrix

__all__ = ["main"]


def _base_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return ExperimentConfig.from_file(path)


def _cmd_run(args) -> int:
    cfg = _base_config(args.config)
    overrides = {}
    if args.variant is not None:
        overrides["variant"] = args.variant
    if args.clients is not None:
        overrides["clients"] = args.clients
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    result = run_experiment(cfg)
    if args.out:
        result.write(args.out)
        print(f"wrote {args.out} (fingerprint {result.fingerprint})")
    else:
        json.dump(result.summary(), sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def _cmd_matrix(args) -> int:
    base = _base_config(args.config)
    scenarios = scenario_matrix(base)
    for pos, (name, cfg) in enumerate(scenarios, start=1):
        result = run_experiment(cfg)
        result.write(os.path.join(args.out, name))
        summary = result.summary()
        print(f"[{pos:2d}/{len(scenarios)}] {name}: "
              f"stalls/session {summary.get('stalls_mean', 0.0):.3f}, "
              f"requests {summary['requests']}, jobs {summary['jobs']}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="otfstream",
        description="On-the-fly transcoding experiments for segmented streaming.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log at INFO instead of WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a single experiment")
    run_p.add_argument("--config", help="JSON experiment config file")
    run_p.add_argument("--variant", help="policy variant (B, T, TC, TCP, TCF, TCPF)")
    run_p.add_argument("--clients", type=int, help="number of clients")
    run_p.add_argument("--workers", type=int, help="transcoding worker count K")
    run_p.add_argument("--seed", type=int, help="experiment seed")
    run_p.add_argument("--out", help="output directory for CSVs and config/summary JSON")
    run_p.set_defaults(fn=_cmd_run)

    matrix_p = sub.add_parser("matrix", help="run the full evaluation grid")
    matrix_p.add_argument("--config", help="JSON base config file")
    matrix_p.add_argument("--out", required=True, help="root output directory")
    matrix_p.set_defaults(fn=_cmd_matrix)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
