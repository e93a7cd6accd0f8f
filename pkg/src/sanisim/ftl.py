"""Page-mapped flash translation layer with greedy GC and a forensic scanner."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .ecc import PageCodec
from .errors import DeviceFull, IndexOutOfRange, LengthMismatch, NoVictim, ReadFail, Unmapped
from .nand import Device, PageAddress

DEFAULT_RETRIES = 5

_POPCOUNT = np.unpackbits(np.arange(256, dtype=np.uint8)[:, None], axis=1).sum(axis=1)


class PageState(IntEnum):
    FREE = 0
    VALID = 1
    INVALID = 2


@dataclass
class WafCounters:
    host_bits_written: int = 0
    flash_bits_programmed: int = 0


@dataclass
class GcReport:
    copies: int = 0
    erased_blocks: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"copies": self.copies, "erased_blocks": list(self.erased_blocks)}


@dataclass
class ScanReport:
    mode: str
    recoverable_pages: int = 0
    residue_addresses: list[PageAddress] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "recoverable_pages": self.recoverable_pages,
            "residue_addresses": [str(a) for a in self.residue_addresses],
        }


@dataclass
class ReadResult:
    data: np.ndarray
    errors_corrected: int
    attempts: int


class Ledger:
    """Append-only record of everything the host ever wrote.

    Measurement instrumentation only; the simulated device never sees it.
    """

    def __init__(self, codec: PageCodec):
        self._layout = codec.layout
        self.raw_tolerance = codec.code.t
        self.entries: list[tuple[int, bytes]] = []
        self._pages: set[bytes] = set()
        self._segments: list[set[bytes]] = [set() for _ in range(codec.layout.segments_per_page)]
        self._packed: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def append(self, lpa: int, data: np.ndarray) -> None:
        key = np.packbits(data).tobytes()
        self.entries.append((lpa, key))
        if key not in self._pages:
            self._packed = None
        self._pages.add(key)
        for s, seen in enumerate(self._segments):
            seen.add(np.packbits(data[self._layout.data_slice(s)]).tobytes())

    def matches_page(self, data: np.ndarray) -> bool:
        return np.packbits(data).tobytes() in self._pages

    def matches_segment(self, s: int, data: np.ndarray) -> bool:
        return np.packbits(data).tobytes() in self._segments[s]

    def matches_raw(self, data: np.ndarray) -> bool:
        """Every segment within ``raw_tolerance`` bits of the same entry."""
        if self.matches_page(data):
            return True
        if not self._pages:
            return False
        if self._packed is None:
            self._packed = np.frombuffer(b"".join(sorted(self._pages)), dtype=np.uint8).reshape(len(self._pages), -1)
        lay = self._layout
        if lay.data_bits_per_segment % 8:
            bits = np.unpackbits(self._packed, axis=1)[:, : lay.main_bits]
            diff = (bits != data).reshape(len(bits), lay.segments_per_page, -1).sum(axis=2)
        else:
            x = self._packed ^ np.packbits(data)
            diff = _POPCOUNT[x].reshape(len(x), lay.segments_per_page, -1).sum(axis=2)
        return bool((diff <= self.raw_tolerance).all(axis=1).any())


class Ftl:
    """Translation layer state bound to one device.

    ``free_threshold`` is in pages (default: one block's worth; less than that can
    leave GC with nowhere to copy to).
    ``op_reserve`` is the fraction of blocks withheld from the host's
    logical address space.
    """

    def __init__(
        self,
        device: Device,
        codec: PageCodec,
        free_threshold: int | None = None,
        op_reserve: float = 0.125,
        retries: int = DEFAULT_RETRIES,
    ):
        g = device.geometry
        if codec.page_bits != g.page_bits:
            raise LengthMismatch(f"codec page of {codec.page_bits} bits does not fit device page of {g.page_bits}")
        if not 0.0 <= op_reserve < 1.0:
            raise ValueError(f"op_reserve must be a fraction in [0, 1), got {op_reserve}")
        self.device = device
        self.codec = codec
        self.retries = retries
        self.free_threshold = g.pages_per_block if free_threshold is None else free_threshold
        self.op_reserve_blocks = int(round(op_reserve * g.blocks_per_device))
        self.logical_pages = (g.blocks_per_device - self.op_reserve_blocks) * g.pages_per_block
        if self.logical_pages < 1:
            raise ValueError("over-provisioning leaves no host-visible capacity")
        self.page_state = np.zeros(g.total_pages, dtype=np.uint8)
        self.l2p: dict[int, int] = {}
        self.p2l: dict[int, int] = {}
        # sanitized lpas: host reads still resolve to the old physical page
        self.tombstones: dict[int, int] = {}
        self.write_ptr = np.zeros(g.blocks_per_device, dtype=np.int64)
        self.active: int | None = None
        self.waf_counters = WafCounters()
        self.ledger = Ledger(codec)
        self.gc_runs = 0

    def clone(self) -> Ftl:
        return copy.deepcopy(self)

    # -- address arithmetic -------------------------------------------------

    def address_of(self, ppn: int) -> PageAddress:
        g = self.device.geometry
        block, rest = divmod(ppn, g.pages_per_block)
        wordline, slot = divmod(rest, g.bits_per_cell)
        return PageAddress(block, wordline, slot)

    def ppn_of(self, addr: PageAddress) -> int:
        g = self.device.geometry
        return (addr.block * g.wordlines_per_block + addr.wordline) * g.bits_per_cell + addr.page_slot

    def lookup(self, lpa: int) -> PageAddress:
        if lpa not in self.l2p:
            raise Unmapped(f"logical page {lpa} is not mapped")
        return self.address_of(self.l2p[lpa])

    def free_pages(self) -> int:
        g = self.device.geometry
        live = ~self.device.retired
        return int((g.pages_per_block - self.write_ptr[live]).sum())

    def valid_count(self, block: int) -> int:
        ppb = self.device.geometry.pages_per_block
        return int((self.page_state[block * ppb:(block + 1) * ppb] == PageState.VALID).sum())

    # -- allocation ---------------------------------------------------------

    def _allocate(self) -> int:
        g = self.device.geometry
        ppb = g.pages_per_block
        if self.active is None or self.write_ptr[self.active] >= ppb or self.device.retired[self.active]:
            candidates = np.flatnonzero((self.write_ptr == 0) & ~self.device.retired)
            candidates = [b for b in candidates if b != self.active]
            if not candidates:
                raise DeviceFull("no free block left to allocate from")
            self.active = int(candidates[0])
        ppn = self.active * ppb + int(self.write_ptr[self.active])
        self.write_ptr[self.active] += 1
        return ppn

    def _invalidate(self, ppn: int) -> None:
        self.page_state[ppn] = PageState.INVALID
        lpa = self.p2l.pop(ppn, None)
        if lpa is not None and self.l2p.get(lpa) == ppn:
            del self.l2p[lpa]

    def invalidate(self, addr: PageAddress, tombstone: bool = False) -> None:
        """Unmap whatever lives at ``addr`` and mark it Invalid.

        With ``tombstone`` the lpa keeps pointing at the page for host reads
        until it is rewritten, trimmed or its block is erased.
        """
        ppn = self.ppn_of(addr)
        lpa = self.p2l.get(ppn)
        self._invalidate(ppn)
        if tombstone and lpa is not None:
            self.tombstones[lpa] = ppn

    def seal_wordline(self, addr: PageAddress) -> None:
        """Retire still-free pages sharing ``addr``'s wordline from allocation.

        Used after a wordline-wide deletion has raised every cell.
        """
        g = self.device.geometry
        first = addr.block * g.pages_per_block + addr.wordline * g.bits_per_cell
        local_end = (addr.wordline + 1) * g.bits_per_cell
        for ppn in range(first, first + g.bits_per_cell):
            if self.page_state[ppn] == PageState.FREE:
                self.page_state[ppn] = PageState.INVALID
        if self.write_ptr[addr.block] < local_end:
            self.write_ptr[addr.block] = local_end

    # -- host path ----------------------------------------------------------

    def _program(self, data: np.ndarray) -> int:
        ppn = self._allocate()
        self.device.program_page(self.address_of(ppn), self.codec.encode_page(data))
        self.waf_counters.flash_bits_programmed += data.size
        return ppn

    def host_write(self, lpa: int, data) -> PageAddress:
        data = np.asarray(data, dtype=np.uint8)
        if data.shape != (self.device.geometry.main_bits_per_page,):
            raise LengthMismatch(f"host data must be {self.device.geometry.main_bits_per_page} bits")
        if not 0 <= lpa < self.logical_pages:
            raise IndexOutOfRange(f"logical page {lpa} outside [0, {self.logical_pages})")
        if self.free_pages() == 0:
            self._collect_quietly()
        ppn = self._program(data)
        self.tombstones.pop(lpa, None)
        old = self.l2p.get(lpa)
        if old is not None:
            self._invalidate(old)
        self.l2p[lpa] = ppn
        self.p2l[ppn] = lpa
        self.page_state[ppn] = PageState.VALID
        self.ledger.append(lpa, data)
        self.waf_counters.host_bits_written += data.size
        if self.free_pages() < self.free_threshold:
            self._collect_quietly()
        return self.address_of(ppn)

    def _collect_quietly(self) -> None:
        try:
            self.garbage_collect()
        except NoVictim:
            pass

    def read_physical(self, addr: PageAddress, retries: int | None = None) -> ReadResult:
        retries = self.retries if retries is None else retries
        for attempt in range(1, retries + 2):
            outcomes = self.codec.decode_page(self.device.read_page_raw(addr))
            if all(o.ok for o in outcomes):
                return ReadResult(
                    np.concatenate([o.data for o in outcomes]),
                    sum(o.error_count for o in outcomes),
                    attempt,
                )
        raise ReadFail(f"page {addr} uncorrectable after {retries} recovery re-reads")

    def host_read_detailed(self, lpa: int, retries: int | None = None) -> ReadResult:
        if lpa not in self.l2p and lpa in self.tombstones:
            return self.read_physical(self.address_of(self.tombstones[lpa]), retries)
        return self.read_physical(self.lookup(lpa), retries)

    def host_read(self, lpa: int, retries: int | None = None) -> np.ndarray:
        return self.host_read_detailed(lpa, retries).data

    def trim_offchip(self, lpa_from: int, lpa_to: int) -> int:
        """Metadata-only unmap of ``[lpa_from, lpa_to]``; returns pages unmapped."""
        for lpa in [t for t in self.tombstones if lpa_from <= t <= lpa_to]:
            del self.tombstones[lpa]
        hit = [lpa for lpa in range(lpa_from, lpa_to + 1) if lpa in self.l2p]
        for lpa in hit:
            self._invalidate(self.l2p[lpa])
        return len(hit)

    # -- garbage collection -------------------------------------------------

    def _pick_victim(self) -> int | None:
        g = self.device.geometry
        best = None
        for b in range(g.blocks_per_device):
            if b == self.active or self.device.retired[b] or self.write_ptr[b] == 0:
                continue
            valid = self.valid_count(b)
            if valid == g.pages_per_block:
                continue
            if best is None or valid < best[0]:
                best = (valid, b)
        return None if best is None else best[1]

    def garbage_collect(self) -> GcReport:
        """Greedy fewest-valid GC: at least one victim, then until above threshold."""
        g = self.device.geometry
        ppb = g.pages_per_block
        report = GcReport()
        while True:
            victim = self._pick_victim()
            if victim is None:
                break
            valid = [p for p in range(victim * ppb, (victim + 1) * ppb) if self.page_state[p] == PageState.VALID]
            # destinations must come from outside the victim
            if self.free_pages() - (ppb - int(self.write_ptr[victim])) < len(valid):
                break
            for ppn in valid:
                addr = self.address_of(ppn)
                try:
                    data = self.read_physical(addr).data
                except ReadFail:
                    data = self.device.read_page_raw(addr)[: g.main_bits_per_page]
                lpa = self.p2l[ppn]
                new = self._program(data)
                self._invalidate(ppn)
                self.l2p[lpa] = new
                self.p2l[new] = lpa
                self.page_state[new] = PageState.VALID
                report.copies += 1
            self.device.erase_block(victim)
            for lpa in [t for t, p in self.tombstones.items() if p // ppb == victim]:
                del self.tombstones[lpa]
            self.page_state[victim * ppb:(victim + 1) * ppb] = PageState.FREE
            self.write_ptr[victim] = 0
            report.erased_blocks.append(victim)
            if self.free_pages() >= self.free_threshold:
                break
        if not report.erased_blocks:
            raise NoVictim("no block has reclaimable pages")
        self.gc_runs += 1
        return report

    def waf(self) -> float:
        w = self.waf_counters
        if w.host_bits_written == 0:
            return 1.0
        return w.flash_bits_programmed / w.host_bits_written

    # -- forensics ----------------------------------------------------------

    def page_recoverable(self, addr: PageAddress, mode: str) -> bool:
        """Whether the settled image of ``addr`` reproduces some host write.

        ``raw`` compares main-area bits directly, tolerating up to ``t`` bit
        differences per segment (disturbance residue); ``decode`` runs the ECC
        and needs an exact match.
        """
        page = self.device.read_page_raw(addr, noisy=False)
        if mode == "raw":
            return self.ledger.matches_raw(page[: self.device.geometry.main_bits_per_page])
        if mode == "decode":
            outcomes = self.codec.decode_page(page)
            if not all(o.ok for o in outcomes):
                return False
            return self.ledger.matches_page(np.concatenate([o.data for o in outcomes]))
        raise ValueError(f"unknown scan mode {mode!r}")

    def forensic_scan(self, mode: str) -> ScanReport:
        """Scan every physical page, whatever its state, including OP capacity."""
        report = ScanReport(mode)
        for ppn in range(self.device.geometry.total_pages):
            addr = self.address_of(ppn)
            if self.page_recoverable(addr, mode):
                report.residue_addresses.append(addr)
        report.recoverable_pages = len(report.residue_addresses)
        return report

    def check_mapping(self) -> None:
        """Assert Valid pages are exactly the image of the L2P map."""
        valid = set(np.flatnonzero(self.page_state == PageState.VALID).tolist())
        image = set(self.l2p.values())
        assert valid == image, (valid ^ image)
        assert len(image) == len(self.l2p)
        assert all(self.p2l[p] == lpa for lpa, p in self.l2p.items())
