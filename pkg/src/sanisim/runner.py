"""Deterministic trace execution against one device + FTL pair."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .errors import LengthMismatch, ReadFail, SanisimError
from .ftl import Ftl
from .sanitize import compare_schemes, secure_delete
from .trace import Command, format_command, parse_trace

RECORD_FIELDS = (
    "seq", "command", "status", "lpa", "scheme", "pulses", "exposure", "neighbor_flips",
    "wear_delta", "nop_consumed", "verification", "fallback_used", "recoverable", "waf", "detail",
)

DEMO_TABLE2_TRACE = """\
# sixteen random pages fill eight MLC wordlines; delete four of them per scheme
{writes}
compare 0,1,2,3 {trials}
report
"""


@dataclass
class RunReport:
    config: dict
    records: list[dict] = field(default_factory=list)
    comparisons: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    errors: int = 0

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "records": self.records,
            "comparisons": self.comparisons,
            "summary": self.summary,
            "errors": self.errors,
        }


def _record(seq: int, cmd: Command, status: str, **values) -> dict:
    rec = {k: "" for k in RECORD_FIELDS}
    rec.update(seq=seq, command=format_command(cmd), status=status)
    rec.update(values)
    return rec


def payload_bits(cfg: RunConfig, cmd: Command, ordinal: int) -> np.ndarray:
    """Page data for a write; ``rand`` is a pure function of (seed, lpa, ordinal)."""
    nbits = cfg.main_bits_per_page
    if cmd.payload == "rand":
        rng = np.random.default_rng([cfg.seed, cmd.lpa, ordinal])
        return rng.integers(0, 2, nbits, dtype=np.uint8)
    if len(cmd.payload) * 4 != nbits:
        raise LengthMismatch(f"hex payload has {len(cmd.payload) * 4} bits, page holds {nbits}")
    return np.unpackbits(np.frombuffer(bytes.fromhex(cmd.payload), dtype=np.uint8))


def wear_summary(ftl: Ftl) -> dict:
    wear = ftl.device.wear.ravel()
    counts = np.bincount(wear)
    return {
        "cell_wear_histogram": [[int(v), int(c)] for v, c in enumerate(counts) if c],
        "erase_counts": [int(e) for e in ftl.device.erase_counts],
        "retired_blocks": [int(b) for b in np.flatnonzero(ftl.device.retired)],
    }


def _execute(ftl: Ftl, cfg: RunConfig, cmd: Command, seq: int, state: dict, report: RunReport) -> list[dict]:
    op = cmd.op
    if op == "write":
        data = payload_bits(cfg, cmd, state["writes"])
        state["writes"] += 1
        addr = ftl.host_write(cmd.lpa, data)
        return [_record(seq, cmd, "ok", lpa=cmd.lpa, detail=f"addr={addr}")]
    if op == "read":
        try:
            res = ftl.host_read_detailed(cmd.lpa)
        except ReadFail as exc:
            return [_record(seq, cmd, "read_fail", lpa=cmd.lpa, detail=str(exc))]
        digest = np.packbits(res.data).tobytes()[:8].hex()
        return [_record(seq, cmd, "ok", lpa=cmd.lpa,
                        detail=f"corrected={res.errors_corrected} attempts={res.attempts} head={digest}")]
    if op == "trim":
        n = ftl.trim_offchip(cmd.lpa, cmd.lpa_to)
        return [_record(seq, cmd, "ok", lpa=cmd.lpa, detail=f"unmapped={n}")]
    if op == "sdelete":
        r = secure_delete(ftl, cmd.lpa, cmd.scheme)
        return [_record(seq, cmd, "ok", lpa=cmd.lpa, scheme=r.scheme.value, pulses=r.pulses,
                        exposure=r.exposure, neighbor_flips=r.neighbor_flips, wear_delta=r.wear_delta,
                        nop_consumed=r.nop_consumed, verification=r.verification.value,
                        fallback_used=r.fallback_used)]
    if op == "pulse":
        addr = ftl.lookup(cmd.lpa)
        p = ftl.device.apply_deletion_pulses(addr.block, addr.wordline, cmd.count)
        return [_record(seq, cmd, "ok", lpa=cmd.lpa, pulses=p.pulses, exposure=p.exposure,
                        neighbor_flips=p.neighbor_flips, wear_delta=p.wear_delta, detail=f"addr={addr}")]
    if op == "gc":
        g = ftl.garbage_collect()
        return [_record(seq, cmd, "ok", waf=ftl.waf(),
                        detail=f"copies={g.copies} erased={' '.join(map(str, g.erased_blocks))}")]
    if op == "scan":
        s = ftl.forensic_scan(cmd.mode)
        report.summary.setdefault("scans", {})[cmd.mode] = s.recoverable_pages
        return [_record(seq, cmd, "ok", recoverable=s.recoverable_pages,
                        detail=" ".join(str(a) for a in s.residue_addresses))]
    if op == "compare":
        table = compare_schemes(ftl, list(cmd.lpas), cmd.count)
        report.comparisons.append(table.to_dict())
        return [
            _record(seq, cmd, "ok", scheme=r.scheme.value, pulses=r.pulses, exposure=r.exposure,
                    neighbor_flips=r.neighbor_flips, wear_delta=r.wear_delta, verification=r.verification,
                    recoverable=r.decode_residue,
                    detail=f"trials={r.trials} failures={r.failures} raw_residue={r.raw_residue}")
            for r in table.rows
        ]
    if op == "report":
        w = ftl.waf_counters
        return [_record(seq, cmd, "ok", waf=ftl.waf(),
                        detail=f"host_bits={w.host_bits_written} flash_bits={w.flash_bits_programmed} "
                               f"gc_runs={ftl.gc_runs} mapped={len(ftl.l2p)}")]
    raise ValueError(f"unknown command {op!r}")


def run_trace(cfg: RunConfig, commands: list[Command]) -> RunReport:
    """Execute ``commands`` in order; module errors become per-command records."""
    ftl = cfg.build()
    report = RunReport(config=cfg.to_dict())
    state = {"writes": 0}
    for seq, cmd in enumerate(commands):
        try:
            report.records.extend(_execute(ftl, cfg, cmd, seq, state, report))
        except SanisimError as exc:
            report.errors += 1
            report.records.append(_record(seq, cmd, "error", lpa="" if cmd.lpa is None else cmd.lpa,
                                          detail=f"{type(exc).__name__}: {exc}"))
    w = ftl.waf_counters
    report.summary.update(
        commands=len(commands),
        waf=ftl.waf(),
        host_bits_written=w.host_bits_written,
        flash_bits_programmed=w.flash_bits_programmed,
        gc_runs=ftl.gc_runs,
        wear=wear_summary(ftl),
    )
    return report


def demo_table2_commands(trials: int = 100) -> list[Command]:
    writes = "\n".join(f"write {lpa} rand" for lpa in range(16))
    return parse_trace(DEMO_TABLE2_TRACE.format(writes=writes, trials=trials))
