"""Serialize a RunReport as csv, markdown or json."""

from __future__ import annotations

import csv
import io
import json

from .runner import RECORD_FIELDS, RunReport
from .sanitize import DATA_GENERATION, Scheme

TABLE2_COLUMNS = (
    "Scheme", "Data Generation", "Program Disturbance exposure", "Pulses", "Wear delta",
    "Neighbor flips", "Verification Reporting", "Decode residue", "Raw residue", "Failures",
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def to_csv(report: RunReport) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RECORD_FIELDS, lineterminator="\n")
    writer.writeheader()
    for rec in report.records:
        writer.writerow({k: _fmt(rec[k]) for k in RECORD_FIELDS})
    return buf.getvalue()


def _md_table(header, rows) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for row in rows:
        lines.append("| " + " | ".join(_fmt(c).replace("|", "\\|") for c in row) + " |")
    return lines


def comparison_rows(table: dict) -> list[list]:
    rows = []
    for r in table["rows"]:
        scheme = Scheme(r["scheme"])
        rows.append([
            scheme.value, DATA_GENERATION[scheme], r["exposure"], r["pulses"], r["wear_delta"],
            r["neighbor_flips"], r["verification"], r["decode_residue"], r["raw_residue"], r["failures"],
        ])
    return rows


def to_markdown(report: RunReport) -> str:
    cfg = report.config
    out = ["# sanisim report", ""]
    out.append(f"seed {cfg['seed']}; {cfg['blocks_per_device']} blocks x {cfg['wordlines_per_block']} wordlines, "
               f"{cfg['bits_per_cell']} bits/cell; BCH m={cfg['m']} t={cfg['t']} x {cfg['segments']} segments")
    out.append("")
    for i, table in enumerate(report.comparisons):
        out.append(f"## Scheme comparison {i + 1}: targets {table['target_lpas']}, {table['trials']} trials (medians)")
        out.append("")
        out.extend(_md_table(TABLE2_COLUMNS, comparison_rows(table)))
        out.append("")
    if report.records:
        out.append("## Commands")
        out.append("")
        cols = ("seq", "command", "status", "scheme", "exposure", "verification", "recoverable", "detail")
        out.extend(_md_table(cols, [[rec[c] for c in cols] for rec in report.records]))
        out.append("")
    if report.summary:
        s = report.summary
        out.append("## Summary")
        out.append("")
        out.append(f"- commands: {s.get('commands', 0)}, errors: {report.errors}")
        out.append(f"- WAF: {_fmt(s.get('waf', 1.0))} "
                   f"(host bits {s.get('host_bits_written', 0)}, flash bits {s.get('flash_bits_programmed', 0)})")
        out.append(f"- GC runs: {s.get('gc_runs', 0)}")
        for mode, n in sorted(s.get("scans", {}).items()):
            out.append(f"- last {mode} scan: {n} recoverable pages")
        wear = s.get("wear")
        if wear:
            out.append(f"- block erase counts: {' '.join(map(str, wear['erase_counts']))}")
        out.append("")
    return "\n".join(out)


def to_json(report: RunReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def emit_report(report: RunReport, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(report)
    if fmt == "md":
        return to_markdown(report)
    if fmt == "json":
        return to_json(report)
    raise ValueError(f"unsupported format {fmt!r}")
