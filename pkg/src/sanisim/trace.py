"""Operation-trace text format.

One command per line, ``#`` starts a comment::

    write <u64> <hex|rand>
    read <u64>
    trim <u64> <u64>
    sdelete <u64> <scrub|overwrite|downbit|pulse|ecc>
    pulse <u64> <count>
    gc
    scan <decode|raw>
    compare <u64,...> <trials>
    report
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError
from .sanitize import TRACE_NAMES, Scheme

_U64 = re.compile(r"[0-9]+\Z")
_HEX = re.compile(r"[0-9a-fA-F]+\Z")
_ARITY = {
    "write": 2, "read": 1, "trim": 2, "sdelete": 2, "pulse": 2,
    "gc": 0, "scan": 1, "compare": 2, "report": 0,
}
_SCHEME_TOKENS = {v: k for k, v in TRACE_NAMES.items()}


@dataclass(frozen=True)
class Command:
    op: str
    lpa: int | None = None
    lpa_to: int | None = None
    payload: str | None = None
    scheme: Scheme | None = None
    count: int | None = None
    mode: str | None = None
    lpas: tuple[int, ...] = ()

    def __str__(self) -> str:
        return format_command(self)


def format_command(cmd: Command) -> str:
    op = cmd.op
    if op == "write":
        return f"write {cmd.lpa} {cmd.payload}"
    if op == "read":
        return f"read {cmd.lpa}"
    if op == "trim":
        return f"trim {cmd.lpa} {cmd.lpa_to}"
    if op == "sdelete":
        return f"sdelete {cmd.lpa} {_SCHEME_TOKENS[cmd.scheme]}"
    if op == "pulse":
        return f"pulse {cmd.lpa} {cmd.count}"
    if op == "scan":
        return f"scan {cmd.mode}"
    if op == "compare":
        return f"compare {','.join(map(str, cmd.lpas))} {cmd.count}"
    if op in ("gc", "report"):
        return op
    raise ValueError(f"unknown command {op!r}")


def _u64(tok: str, line: int) -> int:
    if not _U64.match(tok) or int(tok) >= 1 << 64:
        raise ParseError(line, tok, "expected u64")
    return int(tok)


def parse_line(text: str, line: int = 1) -> Command | None:
    body = text.split("#", 1)[0]
    toks = body.split()
    if not toks:
        return None
    op, args = toks[0], toks[1:]
    if op not in _ARITY:
        raise ParseError(line, op, "unknown command")
    want = _ARITY[op]
    if len(args) < want:
        raise ParseError(line, "<end of line>", f"{op} needs {want} argument(s)")
    if len(args) > want:
        raise ParseError(line, args[want], "unexpected extra argument")

    if op == "write":
        payload = args[1]
        if payload != "rand" and not _HEX.match(payload):
            raise ParseError(line, payload, "expected hex payload or 'rand'")
        return Command("write", lpa=_u64(args[0], line), payload=payload)
    if op == "read":
        return Command("read", lpa=_u64(args[0], line))
    if op == "trim":
        return Command("trim", lpa=_u64(args[0], line), lpa_to=_u64(args[1], line))
    if op == "sdelete":
        if args[1] not in TRACE_NAMES:
            raise ParseError(line, args[1], "unknown scheme")
        return Command("sdelete", lpa=_u64(args[0], line), scheme=TRACE_NAMES[args[1]])
    if op == "pulse":
        return Command("pulse", lpa=_u64(args[0], line), count=_u64(args[1], line))
    if op == "scan":
        if args[0] not in ("decode", "raw"):
            raise ParseError(line, args[0], "scan mode must be decode or raw")
        return Command("scan", mode=args[0])
    if op == "compare":
        lpas = tuple(_u64(tok, line) for tok in args[0].split(","))
        trials = _u64(args[1], line)
        if trials == 0:
            raise ParseError(line, args[1], "trials must be positive")
        return Command("compare", lpas=lpas, count=trials)
    return Command(op)


def parse_trace(text: str) -> list[Command]:
    commands = []
    for lineno, line in enumerate(text.splitlines(), 1):
        cmd = parse_line(line, lineno)
        if cmd is not None:
            commands.append(cmd)
    return commands
