"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure (unsupported method, degenerate
Lyapunov estimate), 2 configuration error, 3 I/O or malformed input file,
4 checkpoint version mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import checkpoint, config, harness, kernels
from .analysis import DegenerateLyapunovError
from .checkpoint import CheckpointFormatError, CheckpointVersionError
from .config import ConfigError, RunConfig
from .episode import LogFormatError

OUTPUT_DIR_ENV = "CHAOSRL_OUTPUT_DIR"

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_VERSION = 4


def _load_config(path: str | None) -> RunConfig:
    cfg = config.load(path) if path else RunConfig()
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        cfg.output_dir = override
    return cfg


def _cmd_train(args) -> int:
    cfg = _load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    manifest = harness.cmd_train(cfg, backend=args.backend)
    print(json.dumps({"output_dir": cfg.output_dir, "config_hash": manifest["config_hash"],
                      "seeds": {s: v["final_window_mean"] for s, v in manifest["seeds"].items()}}))
    return EXIT_OK


def _cmd_eval(args) -> int:
    cfg = _load_config(args.config)
    ckpt = checkpoint.load(args.checkpoint)
    out = args.out or os.environ.get(OUTPUT_DIR_ENV) or f"eval_{Path(args.checkpoint).stem}"
    summary = harness.cmd_eval(ckpt, args.episodes, args.seed, cfg.world, cfg.td, Path(out),
                               backend=args.backend)
    print(json.dumps(summary))
    return EXIT_OK


def _cmd_lyapunov(args) -> int:
    cfg = _load_config(args.config)
    ckpt = checkpoint.load(args.checkpoint)
    out = Path(args.out) if args.out else None
    row = harness.cmd_lyapunov(ckpt, cfg, Path(args.checkpoint).stem, out)
    print(json.dumps(row))
    return EXIT_OK


def _cmd_replay(args) -> int:
    text = harness.cmd_replay(args.log, args.out, args.svg)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_print_config(args) -> int:
    sys.stdout.write(_load_config(args.config).dump())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chaosrl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    backends = [kernels.COMPILED, kernels.PYTHON]

    p = sub.add_parser("train", help="train all configured seeds")
    p.add_argument("--config", help="YAML run configuration (defaults if omitted)")
    p.add_argument("--output-dir", help=f"overrides the config and ${OUTPUT_DIR_ENV}")
    p.add_argument("--backend", choices=backends)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint without learning")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=100, help="random starts besides the 8 fixed ones")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="world and TD settings")
    p.add_argument("--out", help="directory for trajectories and summary.json")
    p.add_argument("--backend", choices=backends)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("lyapunov", help="one-step Lyapunov exponent of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config", help="world and Lyapunov settings")
    p.add_argument("--out", help="report CSV path")
    p.set_defaults(func=_cmd_lyapunov)

    p = sub.add_parser("replay", help="trajectory CSV and SVG from an episode log")
    p.add_argument("--log", required=True)
    p.add_argument("--svg", help="write an SVG rendering here")
    p.add_argument("--out", help="trajectory CSV path (stdout if omitted)")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("print-config", help="print the effective configuration as YAML")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_print_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckpointVersionError as exc:
        print(f"version mismatch: {exc}", file=sys.stderr)
        return EXIT_VERSION
    except (LogFormatError, CheckpointFormatError) as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (harness.UnsupportedMethodError, DegenerateLyapunovError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
