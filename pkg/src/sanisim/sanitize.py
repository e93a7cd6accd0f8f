"""Page-level (on-chip) secure deletion schemes and their comparison harness."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum
from statistics import median

import numpy as np

from .ecc import MaskResult, PageCodec, craft_uncorrectable_mask, decode
from .errors import (
    MaskInfeasible,
    MaskInfeasibleAndFallbackFailed,
    NopExceeded,
    PulseBudgetExhausted,
    SanisimError,
    UnsupportedGeometry,
)
from .ftl import Ftl, Ledger
from .nand import Device, PageAddress, PulseReport


class Scheme(str, Enum):
    SCRUB = "Scrub"
    PARTIAL_OVERWRITE = "PartialOverwrite"
    DOWN_BIT = "DownBit"
    DELETION_PULSE = "DeletionPulse"
    CODE_MODULATED = "CodeModulated"


TRACE_NAMES = {
    "scrub": Scheme.SCRUB,
    "overwrite": Scheme.PARTIAL_OVERWRITE,
    "downbit": Scheme.DOWN_BIT,
    "pulse": Scheme.DELETION_PULSE,
    "ecc": Scheme.CODE_MODULATED,
}

DATA_GENERATION = {
    Scheme.SCRUB: "Zero Bit",
    Scheme.PARTIAL_OVERWRITE: "Possible Random Bit",
    Scheme.DOWN_BIT: "SLC data bit",
    Scheme.DELETION_PULSE: "None",
    Scheme.CODE_MODULATED: "In some cases",
}


class Verification(str, Enum):
    READ_FAIL_CONFIRMED = "ReadFailConfirmed"
    NOT_VERIFIED = "NotVerified"


@dataclass
class DeletionReport:
    scheme: Scheme
    pulses: int = 0
    exposure: int = 0
    neighbor_flips: int = 0
    wear_delta: int = 0
    nop_consumed: int = 0
    verification: Verification = Verification.NOT_VERIFIED
    fallback_used: bool = False

    def absorb(self, pulse: PulseReport) -> None:
        self.pulses += pulse.pulses
        self.exposure += pulse.exposure
        self.neighbor_flips += pulse.neighbor_flips
        self.wear_delta += pulse.wear_delta

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scheme"] = self.scheme.value
        d["verification"] = self.verification.value
        return d


def _report(scheme: Scheme, pulse: PulseReport, nop: int) -> DeletionReport:
    r = DeletionReport(scheme, nop_consumed=nop)
    r.absorb(pulse)
    return r


def segment_recoverable(codec: PageCodec, page: np.ndarray, ledger: Ledger | None) -> list[bool]:
    """Per segment: decodes and (when a ledger is given) matches something written."""
    out = []
    for s, o in enumerate(codec.decode_page(page)):
        if not o.ok:
            out.append(False)
        elif ledger is None:
            out.append(True)
        else:
            out.append(ledger.matches_segment(s, o.data))
    return out


def page_destroyed(codec: PageCodec, page: np.ndarray, ledger: Ledger | None) -> bool:
    return not any(segment_recoverable(codec, page, ledger))


# -- the four prior schemes --------------------------------------------------

def scrub_page(device: Device, addr: PageAddress) -> DeletionReport:
    """Drive the whole wordline to the highest level."""
    top = np.full(device.geometry.cells_per_wordline, device.top_level, dtype=np.uint8)
    return _report(Scheme.SCRUB, device.program_levels(addr, top), 1)


def partial_overwrite_page(device: Device, addr: PageAddress, rng=None) -> DeletionReport:
    """Reprogram every cell to a uniformly drawn reachable level."""
    device.check_address(addr)
    rng = device.rng if rng is None else rng
    cur = device.levels[addr.block, addr.wordline].astype(np.int64)
    targets = np.asarray(rng.integers(cur, device.geometry.levels), dtype=np.uint8)
    return _report(Scheme.PARTIAL_OVERWRITE, device.program_levels(addr, targets), 1)


def down_bit_program_page(device: Device, addr: PageAddress) -> DeletionReport:
    """Collapse the wordline one level toward single-level states.

    LSB target: level 0 -> 1.  MSB target: level 1 -> 2.  Either step flips
    the target page's bit and keeps the sibling page's bit.
    """
    if device.geometry.bits_per_cell != 2:
        raise UnsupportedGeometry("down-bit programming needs 2-bit cells")
    device.check_address(addr)
    src = 0 if addr.page_slot == 0 else 1
    cur = device.levels[addr.block, addr.wordline]
    targets = np.where(cur == src, src + 1, cur).astype(np.uint8)
    return _report(Scheme.DOWN_BIT, device.program_levels(addr, targets), 1)


def deletion_pulse_page(
    device: Device,
    addr: PageAddress,
    max_pulses: int | None = None,
    *,
    codec: PageCodec,
    ledger: Ledger | None = None,
) -> DeletionReport:
    """Pulse the wordline until the page no longer yields written data."""
    device.check_address(addr)
    if max_pulses is None:
        max_pulses = 2 * (device.geometry.levels - 1)
    report = DeletionReport(Scheme.DELETION_PULSE)
    for _ in range(max_pulses):
        report.absorb(device.apply_deletion_pulses(addr.block, addr.wordline, 1))
        if page_destroyed(codec, device.read_page_raw(addr), ledger):
            return report
    raise PulseBudgetExhausted(f"page {addr} still recoverable after {max_pulses} pulses")


def verify_deletion(
    device: Device,
    addr: PageAddress,
    codec: PageCodec,
    ledger: Ledger | None = None,
    retries: int = 5,
) -> bool:
    """True when no read (first plus recovery re-reads) recovers any segment."""
    for _ in range(retries + 1):
        if any(segment_recoverable(codec, device.read_page_raw(addr), ledger)):
            return False
    return True


# -- code-modulated deletion ---------------------------------------------------

@dataclass
class CodeModulationConfig:
    clear_budget: int | None = None  # default 3(t+1)
    fixed_mask: np.ndarray | None = None  # fixed ECC_SD clear pattern, applied to every segment
    fallback_pulses: int | None = None  # default L-1


def _single_step_clears(device: Device, addr: PageAddress, cols: slice) -> np.ndarray:
    cur = device.levels[addr.block, addr.wordline, cols]
    reach = device.clear_table[addr.page_slot][cur]
    return (reach >= 0) & (reach.astype(np.int64) - cur <= 1)


def _reachable_clears(device: Device, addr: PageAddress, cols: slice) -> np.ndarray:
    cur = device.levels[addr.block, addr.wordline, cols]
    return device.clear_table[addr.page_slot][cur] >= 0


def _craft(device: Device, addr: PageAddress, codec: PageCodec, page: np.ndarray, s: int,
           cfg: CodeModulationConfig) -> MaskResult:
    lay = codec.layout
    data, parity = page[lay.data_slice(s)], page[lay.parity_slice(s)]
    budget = cfg.clear_budget if cfg.clear_budget is not None else 3 * (codec.code.t + 1)
    if cfg.fixed_mask is not None:
        mask = np.asarray(cfg.fixed_mask, dtype=np.uint8) & parity
        mask &= _reachable_clears(device, addr, lay.parity_slice(s))
        word = np.concatenate([data, parity & (1 - mask)])
        return MaskResult(mask, int(mask.sum()), not decode(codec.code, word).ok)
    # cheapest first: clears that move a cell by one level only
    try:
        return craft_uncorrectable_mask(codec.code, data, parity, budget,
                                        _single_step_clears(device, addr, lay.parity_slice(s)))
    except MaskInfeasible:
        return craft_uncorrectable_mask(codec.code, data, parity, budget,
                                        _reachable_clears(device, addr, lay.parity_slice(s)))


def _all_uncorrectable(device: Device, addr: PageAddress, codec: PageCodec, reads: int) -> list[bool]:
    """Per segment, whether it stayed uncorrectable on every one of ``reads`` reads."""
    dead = [True] * codec.layout.segments_per_page
    for _ in range(reads):
        for s, o in enumerate(codec.decode_page(device.read_page_raw(addr))):
            if o.ok:
                dead[s] = False
        if not any(dead):
            break
    return dead


def code_modulated_delete_at(ftl: Ftl, addr: PageAddress, cfg: CodeModulationConfig | None = None) -> DeletionReport:
    """Parity modulation on one physical page, verified by read failure."""
    cfg = cfg or CodeModulationConfig()
    device, codec = ftl.device, ftl.codec
    lay = codec.layout
    report = DeletionReport(Scheme.CODE_MODULATED)
    page = device.read_page_raw(addr)

    spare = np.ones(lay.spare_bits, dtype=np.uint8)
    infeasible = []
    for s in range(lay.segments_per_page):
        try:
            mask = _craft(device, addr, codec, page, s, cfg)
        except MaskInfeasible:
            infeasible.append(s)
            continue
        lo = s * lay.parity_bits_per_segment
        spare[lo:lo + lay.parity_bits_per_segment] &= 1 - mask.clear_mask
    if not spare.all():
        report.absorb(device.partial_program(addr, lay.main_bits, spare))
        report.nop_consumed += 1
    # lowest-state user data: every main cell inhibited
    report.absorb(device.partial_program(addr, 0, np.ones(lay.main_bits, dtype=np.uint8)))
    report.nop_consumed += 1

    dead = _all_uncorrectable(device, addr, codec, ftl.retries + 1)
    while not all(dead):
        report.fallback_used = True
        live = [i for i, d in enumerate(dead) if not d]
        # one partial program spanning every still-correctable parity region
        lo, hi = lay.parity_offset(live[0]), lay.parity_offset(live[-1]) + lay.parity_bits_per_segment
        pulses = cfg.fallback_pulses if cfg.fallback_pulses is not None else device.top_level
        try:
            report.absorb(device.apply_region_pulses(addr, lo, hi - lo, pulses))
            report.nop_consumed += 1
        except NopExceeded as exc:
            raise MaskInfeasibleAndFallbackFailed(
                f"page {addr}: segments {[i for i, d in enumerate(dead) if not d]} still correctable"
            ) from exc
        dead = _all_uncorrectable(device, addr, codec, ftl.retries + 1)

    report.verification = Verification.READ_FAIL_CONFIRMED
    ftl.invalidate(addr, tombstone=True)
    if report.fallback_used:
        ftl.seal_wordline(addr)
    return report


def code_modulated_delete(ftl: Ftl, lpa: int, cfg: CodeModulationConfig | None = None) -> DeletionReport:
    return code_modulated_delete_at(ftl, ftl.lookup(lpa), cfg)


def delete_page(ftl: Ftl, addr: PageAddress, scheme: Scheme, *, max_pulses: int | None = None,
                cfg: CodeModulationConfig | None = None) -> DeletionReport:
    """Run ``scheme`` on a physical page and retire it from the mapping."""
    device = ftl.device
    if scheme is Scheme.CODE_MODULATED:
        return code_modulated_delete_at(ftl, addr, cfg)
    if scheme is Scheme.SCRUB:
        report = scrub_page(device, addr)
    elif scheme is Scheme.PARTIAL_OVERWRITE:
        report = partial_overwrite_page(device, addr)
    elif scheme is Scheme.DOWN_BIT:
        report = down_bit_program_page(device, addr)
    elif scheme is Scheme.DELETION_PULSE:
        report = deletion_pulse_page(device, addr, max_pulses, codec=ftl.codec, ledger=ftl.ledger)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    ftl.invalidate(addr, tombstone=True)
    ftl.seal_wordline(addr)
    return report


def secure_delete(ftl: Ftl, lpa: int, scheme: Scheme, **kwargs) -> DeletionReport:
    return delete_page(ftl, ftl.lookup(lpa), scheme, **kwargs)


# -- comparison --------------------------------------------------------------

@dataclass
class SchemeRow:
    scheme: Scheme
    trials: int = 0
    failures: int = 0
    exposure: float = 0.0
    pulses: float = 0.0
    wear_delta: float = 0.0
    neighbor_flips: float = 0.0
    verification: str = Verification.NOT_VERIFIED.value
    decode_residue: float = 0.0
    raw_residue: float = 0.0
    fallbacks: int = 0
    errors: list[str] = field(default_factory=list)
    exposure_per_trial: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scheme"] = self.scheme.value
        return d


@dataclass
class ComparisonTable:
    target_lpas: list[int]
    trials: int
    rows: list[SchemeRow]

    def row(self, scheme: Scheme) -> SchemeRow:
        return next(r for r in self.rows if r.scheme is scheme)

    def to_dict(self) -> dict:
        return {"target_lpas": list(self.target_lpas), "trials": self.trials,
                "rows": [r.to_dict() for r in self.rows]}


def _median(values) -> float:
    return float(median(values)) if values else 0.0


def compare_schemes(ftl: Ftl, target_lpas, trials: int, schemes=tuple(Scheme)) -> ComparisonTable:
    """Every scheme on identical clones of ``ftl``; trial ``i`` reseeds all clones alike.

    Per-trial figures are summed over the targets; rows carry their medians.
    """
    targets = [ftl.lookup(lpa) for lpa in target_lpas]
    rows = []
    for scheme in schemes:
        per_trial: dict[str, list] = {k: [] for k in ("exposure", "pulses", "wear", "flips", "dec", "raw")}
        row = SchemeRow(scheme)
        verdicts = []
        for trial in range(trials):
            clone = ftl.clone()
            clone.device.reseed(trial)
            total = DeletionReport(scheme)
            try:
                for addr in targets:
                    r = delete_page(clone, addr, scheme)
                    total.absorb(PulseReport(r.pulses, r.exposure, r.neighbor_flips, r.wear_delta))
                    verdicts.append(r.verification)
                    row.fallbacks += int(r.fallback_used)
            except SanisimError as exc:
                row.failures += 1
                row.errors.append(f"trial {trial}: {type(exc).__name__}: {exc}")
                continue
            per_trial["exposure"].append(total.exposure)
            per_trial["pulses"].append(total.pulses)
            per_trial["wear"].append(total.wear_delta)
            per_trial["flips"].append(total.neighbor_flips)
            per_trial["dec"].append(sum(clone.page_recoverable(a, "decode") for a in targets))
            per_trial["raw"].append(sum(clone.page_recoverable(a, "raw") for a in targets))
        row.trials = trials - row.failures
        row.exposure = _median(per_trial["exposure"])
        row.pulses = _median(per_trial["pulses"])
        row.wear_delta = _median(per_trial["wear"])
        row.neighbor_flips = _median(per_trial["flips"])
        row.decode_residue = _median(per_trial["dec"])
        row.raw_residue = _median(per_trial["raw"])
        row.exposure_per_trial = per_trial["exposure"]
        if verdicts and all(v is Verification.READ_FAIL_CONFIRMED for v in verdicts):
            row.verification = Verification.READ_FAIL_CONFIRMED.value
        rows.append(row)
    return ComparisonTable(list(target_lpas), trials, rows)
