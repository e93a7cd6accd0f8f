"""``sanisim`` command line."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import FORMATS, RunConfig, load_config
from .errors import ConfigError, ParseError
from .report import emit_report
from .runner import demo_table2_commands, run_trace
from .trace import parse_trace

EXIT_OK, EXIT_COMMAND_ERROR, EXIT_USAGE = 0, 1, 2


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"{text} is not a u64")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sanisim", description="NAND secure-deletion simulator")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--format", choices=FORMATS)
        p.add_argument("--out", help="write the report here (figures go alongside)")
        p.add_argument("--seed", type=_u64)
        p.add_argument("--no-figures", action="store_true", help="skip PNG figures next to --out")

    run = sub.add_parser("run", help="execute an operation trace")
    run.add_argument("--config", required=True)
    run.add_argument("--trace", required=True)
    common(run)

    demo = sub.add_parser("demo-table2", help="built-in on-chip scheme comparison")
    demo.add_argument("--config")
    demo.add_argument("--trials", type=int, default=100)
    common(demo)
    return parser


def _resolve(args, cfg: RunConfig, default_format: str | None = None) -> RunConfig:
    env = os.environ.get("SANISIM_SEED")
    seed = args.seed
    if seed is None and env:
        try:
            seed = _u64(env)
        except (ValueError, argparse.ArgumentTypeError):
            raise ConfigError(f"SANISIM_SEED={env!r} is not a u64") from None
    return cfg.with_overrides(seed=seed, format=args.format or default_format)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            cfg = _resolve(args, load_config(args.config))
            try:
                text = Path(args.trace).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read trace {args.trace}: {exc}") from exc
            commands = parse_trace(text)
        else:
            base = load_config(args.config) if args.config else RunConfig(format="md")
            cfg = _resolve(args, base, None if args.config else "md")
            if args.trials < 1:
                raise ConfigError("--trials must be positive")
            commands = demo_table2_commands(args.trials)
    except (ParseError, ConfigError) as exc:
        print(f"sanisim: {exc}", file=sys.stderr)
        return EXIT_USAGE

    report = run_trace(cfg, commands)
    text = emit_report(report, cfg.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        if not args.no_figures:
            from .plots import render_figures

            for path in render_figures(report, args.out):
                print(f"wrote {path}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_COMMAND_ERROR if report.errors else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
