"""Command-line entry point: ``wkam <command> [--config F] [--out D] [--seed N] [--threads N]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bundle import dumps
from .config import ConfigError, load_config
from .pipeline import COMMANDS, run_command


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wkam", description="Alpha/beta functions, weak KAM solutions and Mañé potentials on tori.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON run configuration (defaults to the pendulum at desk scale)")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, help="random seed (overrides rng_seed)")
    p.add_argument("--threads", type=int, help="worker threads for parameter scans")
    return p


def _fail(out_dir: str | None, payload: dict, code: int) -> int:
    text = dumps(payload)
    sys.stderr.write(text)
    if out_dir:
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / "error.json").write_bytes(text.encode("utf-8"))
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("rng_seed", "seed must be nonnegative")
            cfg.rng_seed = args.seed
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("threads", "threads must be at least 1")
            cfg.threads = args.threads
        if args.out is not None:
            cfg.output_dir = args.out
    except ConfigError as exc:
        return _fail(args.out, exc.to_json(), 2)
    try:
        bundle = run_command(args.command, cfg)
    except ConfigError as exc:
        return _fail(cfg.output_dir, exc.to_json(), 2)
    except Exception as exc:  # engine errors are forwarded verbatim
        return _fail(cfg.output_dir, {"error": type(exc).__name__, "message": str(exc)}, 1)
    paths = bundle.write(cfg.output_dir)
    for pth in paths:
        print(pth)
    if args.command == "verify" and not bundle.all_passed:
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
