"""``hrasim`` command-line entry point.

Exit status is 0 on success, 2 for configuration errors and 1 for stage
failures; errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import __version__
from .config import ConfigError, load_config
from .pipeline import StageError, run_pipeline, run_stage

COMMANDS = ("simulate", "augment", "fit", "quantify", "bn", "pipeline")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hrasim", description="Cognitive-simulation HRA pipeline.")
    ap.add_argument("--version", action="version", version=f"hrasim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {"simulate": "run the cognitive simulator and write the duration dataset",
             "augment": "train the sequence generator and write synthetic data and metrics",
             "fit": "fit candidate duration families and report screening results",
             "quantify": "compute Pt and HEP per procedure and family",
             "bn": "build the event network and rank contributors",
             "pipeline": "run all enabled stages and write a manifest"}
    for c in COMMANDS:
        p = sub.add_parser(c, help=helps[c])
        p.add_argument("--config", required=True,
                       help="YAML config file or builtin:<name> (exp1, exp2, exp3)")
        p.add_argument("--out", help="output directory (default: the config's output_dir)")
        p.add_argument("--seed-override", type=int, metavar="SEED",
                       help="use SEED for every random stream")
    return ap


def _fail(kind: str, err: Exception, code: int, **extra) -> int:
    doc = {"error": kind, "message": str(err), **extra}
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed_override is not None:
            if args.seed_override < 0:
                raise ConfigError("--seed-override", "seed must be non-negative")
            cfg.override_seed(args.seed_override)
    except ConfigError as e:
        return _fail("config", e, 2, where=e.where)
    out = Path(args.out) if args.out else cfg.resolve(cfg.output_dir)
    try:
        if args.command == "pipeline":
            man = run_pipeline(cfg, out)
            stages = man.stages
        else:
            stages = [run_stage(args.command, cfg, out)]
    except StageError as e:
        return _fail("stage", e, 1, stage=e.stage, **e.extra)
    except (ValueError, ArithmeticError) as e:
        return _fail("runtime", e, 1, type=type(e).__name__)
    for s in stages:
        line = f"{s.name:<9} {s.status}"
        if s.status == "ok":
            line += f"  {s.wall_time:8.2f} s  " + " ".join(sorted(s.outputs))
        print(line)
    print(f"outputs in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
