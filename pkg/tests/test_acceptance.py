"""Acceptance criteria, one test each, each printing a PASS/FAIL line."""

import itertools
import time

import numpy as np
import pytest

from oracles import all_codewords, int_to_word, word_to_int
from sanisim import PageCodec, RunConfig, Scheme, Verification, new_device
from sanisim.cli import main
from sanisim.ecc import code_for_segment, craft_uncorrectable_mask, decode, encode, make_code, make_field
from sanisim.errors import BlockRetired, MaskInfeasible, MaskInfeasibleAndFallbackFailed, NopExceeded, ReadFail
from sanisim.ftl import Ftl
from sanisim.nand import GeometryConfig, PageAddress
from sanisim.runner import demo_table2_commands, run_trace
from sanisim.sanitize import code_modulated_delete, delete_page, secure_delete
from sanisim.trace import parse_trace

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(request):
    reporter = request.config.pluginmanager.getplugin("terminalreporter")

    def emit(number: int, ok: bool, what: str) -> None:
        line = f"[acceptance {number}] {'PASS' if ok else 'FAIL'}: {what}"
        print(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        assert ok, line

    return emit


def written(n=16, seed=0, **geom):
    ftl = Ftl(new_device(GeometryConfig(**geom), seed), PageCodec.build(10, 5, 4, 2048, 256))
    rng = np.random.default_rng([seed, 99])
    for lpa in range(n):
        ftl.host_write(lpa, rng.integers(0, 2, 2048, dtype=np.uint8))
    return ftl


def test_1_exhaustive_small_code(verdict):
    code = make_code(make_field(4), 2)
    book = np.array(all_codewords(15, 7, code.generator_poly), dtype=np.int64)
    # brute-force oracle: for every 15-bit word, the unique codeword within distance 2 (or -1)
    words = np.arange(1 << 15, dtype=np.int64)
    x = words[:, None] ^ book[None, :]
    dist = np.zeros(x.shape, dtype=np.int64)
    for b in range(15):
        dist += (x >> b) & 1
    near = np.where(dist.min(axis=1) <= 2, book[dist.argmin(axis=1)], -1)
    assert ((dist <= 2).sum(axis=1) <= 1).all()

    start = time.perf_counter()
    low = bad = checked3 = 0
    for cw in book.tolist():
        for w in range(4):
            for pos in itertools.combinations(range(15), w):
                err = sum(1 << p for p in pos)
                out = decode(code, int_to_word(cw ^ err, 15))
                if w <= 2:
                    low += 1
                    if not (out.ok and word_to_int(out.data) == cw >> 8
                            and sorted(out.error_positions) == sorted(pos)):
                        bad += 1
                else:
                    checked3 += 1
                    expect = near[cw ^ err]
                    if out.ok:
                        # a miscorrection must land on the oracle's (different) codeword
                        fixed = cw ^ err ^ sum(1 << p for p in out.error_positions)
                        bad += int(fixed == cw or fixed != expect)
                    else:
                        bad += int(expect != -1)
    elapsed = time.perf_counter() - start
    verdict(1, bad == 0 and low == 128 * 121 and checked3 == 128 * 455 and elapsed < 10,
            f"BCH(15,7,2): {low} patterns of weight <=2 and {checked3} of weight 3, "
            f"{bad} mismatches vs brute force, {elapsed:.2f}s (< 10s)")


def test_2_default_code_round_trip_and_masks(verdict):
    code = code_for_segment(10, 5, 512)
    rng = np.random.default_rng(2024)
    corrected = 0
    for _ in range(1000):
        data = rng.integers(0, 2, 512, dtype=np.uint8)
        word = np.concatenate([data, encode(code, data)])
        word[rng.choice(562, rng.integers(0, 6), replace=False)] ^= 1
        out = decode(code, word)
        corrected += bool(out.ok and np.array_equal(out.data, data))
    verified = infeasible = 0
    for _ in range(1000):
        data = rng.integers(0, 2, 512, dtype=np.uint8)
        parity = encode(code, data)
        try:
            m = craft_uncorrectable_mask(code, data, parity)
        except MaskInfeasible:
            infeasible += 1
            continue
        replay = decode(code, np.concatenate([data, parity & (1 - m.clear_mask)]))
        verified += bool(m.verified_uncorrectable and not replay.ok)
    verdict(2, corrected == 1000 and verified == 1000,
            f"m=10 t=5: {corrected}/1000 round trips corrected; {verified}/1000 masks Uncorrectable on replay "
            f"({infeasible} infeasible)")


def test_3_exposure_ordering(verdict):
    start = time.perf_counter()
    rep = run_trace(RunConfig(), demo_table2_commands(100))
    elapsed = time.perf_counter() - start
    rows = {r["scheme"]: r for r in rep.comparisons[0]["rows"]}
    e = {k: v["exposure"] for k, v in rows.items()}
    ordered = (e["Scrub"] > e["PartialOverwrite"] > max(e["DownBit"], e["DeletionPulse"]) > e["CodeModulated"])
    ratio = e["CodeModulated"] / e["Scrub"]
    trials = min(v["trials"] for v in rows.values())
    verdict(3, ordered and ratio <= 0.15 and trials >= 100 and elapsed < 60,
            "median exposure " + ", ".join(f"{k}={v:g}" for k, v in e.items())
            + f"; CodeModulated/Scrub={ratio:.4f} (<= 0.15); {trials} trials; {elapsed:.1f}s (< 60s)")


def test_4_verification_reporting(verdict):
    base = written()
    confirmed = calls = raised = 0
    for trial in range(1000):
        ftl = base.clone()
        ftl.device.reseed(trial)
        try:
            r = code_modulated_delete(ftl, trial % 16)
        except MaskInfeasibleAndFallbackFailed:
            raised += 1
            continue
        calls += 1
        confirmed += r.verification is Verification.READ_FAIL_CONFIRMED
    others = []
    for scheme in (Scheme.SCRUB, Scheme.PARTIAL_OVERWRITE, Scheme.DOWN_BIT, Scheme.DELETION_PULSE):
        ftl = base.clone()
        others.extend(secure_delete(ftl, lpa, scheme).verification for lpa in range(4))
    not_verified = sum(v is Verification.NOT_VERIFIED for v in others)
    verdict(4, calls > 0 and confirmed == calls and not_verified == len(others),
            f"code-modulated: {confirmed}/{calls} successful calls ReadFailConfirmed ({raised} raised); "
            f"other schemes: {not_verified}/{len(others)} NotVerified")


def test_5_incomplete_trim_forensics(verdict):
    ftl = written(n=32, seed=5)
    ftl.trim_offchip(0, 31)
    assert ftl.gc_runs == 0
    trimmed = ftl.forensic_scan("decode")
    results = {}
    for scheme in Scheme:
        clone = ftl.clone()
        for addr in trimmed.residue_addresses:
            delete_page(clone, addr, scheme)
        results[scheme.value] = (clone.forensic_scan("decode").recoverable_pages,
                                 clone.forensic_scan("raw").recoverable_pages)
    raw_ok = all(raw == (32 if s == "CodeModulated" else 0) for s, (_, raw) in results.items())
    dec_ok = all(dec == 0 for dec, _ in results.values())
    verdict(5, trimmed.recoverable_pages == 32 and dec_ok and raw_ok,
            f"after trim: decode residue {trimmed.recoverable_pages}; per scheme (decode, raw): "
            + ", ".join(f"{k}={v}" for k, v in results.items()))


def test_6_device_limits(verdict):
    d = new_device()
    a = PageAddress(0, 0, 0)
    ones = np.ones(2304, np.uint8)
    for _ in range(4):
        d.program_page(a, ones)
    try:
        d.program_page(a, ones)
        nop = False
    except NopExceeded:
        nop = True
    for _ in range(1000):
        d.erase_block(1)
    try:
        d.erase_block(1)
        endurance = False
    except BlockRetired:
        endurance = True
    verdict(6, nop and endurance, f"5th program NopExceeded={nop}; 1001st erase BlockRetired={endurance}")


def test_7_write_amplification(verdict):
    cfg = RunConfig()
    lpas = list(range(224))
    seq = run_trace(cfg, parse_trace("\n".join(f"write {i} rand" for i in lpas)))
    order = np.random.default_rng(7)
    lines = [f"write {i} rand" for i in lpas]
    for _ in range(2):
        lines += [f"write {i} rand" for i in order.permutation(lpas)]
    churn = run_trace(cfg, parse_trace("\n".join(lines)))
    verdict(7, seq.summary["waf"] == 1.0 and churn.summary["waf"] > 1.0 and churn.errors == 0,
            f"sequential WAF={seq.summary['waf']!r}; double overwrite WAF={churn.summary['waf']:.4f} "
            f"after {churn.summary['gc_runs']} GC runs")


def test_8_read_fail_path(verdict):
    outcomes = []
    for retries in (0, 1, 5):
        for seed in range(3):
            ftl = written(n=4, seed=seed)
            ftl.retries = retries
            for lpa in range(4):
                code_modulated_delete(ftl, lpa)
                for budget in (None, retries):
                    try:
                        ftl.host_read(lpa, retries=budget)
                        outcomes.append(False)
                    except ReadFail:
                        outcomes.append(True)
    verdict(8, all(outcomes), f"ReadFail on {sum(outcomes)}/{len(outcomes)} reads for R in {{0, 1, 5}}")


def test_9_determinism(verdict, tmp_path, monkeypatch):
    monkeypatch.delenv("SANISIM_SEED", raising=False)
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("seed = 31\n")
    trace = tmp_path / "trace.txt"
    trace.write_text("\n".join([*(f"write {i} rand" for i in range(8)), "trim 6 7", "sdelete 0 ecc",
                                "sdelete 1 pulse", "read 0", "pulse 2 1", "read 2", "scan decode",
                                "scan raw", "compare 3,4 5", "report"]) + "\n")
    same = []
    for fmt in ("csv", "md", "json"):
        outs = []
        for run in ("a", "b"):
            out = tmp_path / f"{run}.{fmt}"
            main(["run", "--config", str(cfg), "--trace", str(trace), "--format", fmt, "--out", str(out)])
            outs.append(out)
        same.append(outs[0].read_bytes() == outs[1].read_bytes())
        for suffix in ("compare1.png", "wear.png"):
            same.append((tmp_path / f"a.{suffix}").read_bytes() == (tmp_path / f"b.{suffix}").read_bytes())
    verdict(9, all(same), f"{sum(same)}/{len(same)} report and figure files byte-identical across runs")
