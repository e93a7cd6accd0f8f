"""Physical NAND model: multi-level cells, one-way programming, erase, pulses.

Cell ``i`` of a wordline backs bit ``i`` of every logical page on that
wordline, so a wordline holds ``main_bits + spare_bits`` cells and
``bits_per_cell`` pages (slot 0 = LSB page, slot 1 = MSB page).
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import (
    BlockRetired,
    IndexOutOfRange,
    InvalidGeometry,
    NopExceeded,
    NoReachableLevel,
    RegionOutOfBounds,
)

# level -> bit read on each page slot
GRAY_MAPS = {
    1: ((1, 0),),
    2: ((1, 0, 0, 1), (1, 1, 0, 0)),
}


@dataclass(frozen=True)
class GeometryConfig:
    blocks_per_device: int = 16
    wordlines_per_block: int = 8
    bits_per_cell: int = 2
    main_bits_per_page: int = 2048
    spare_bits_per_page: int = 256
    nop_limit: int = 4
    erase_endurance: int = 1000
    p_disturb: float = 1e-3
    q_pulse: float = 0.3
    p_read_noise: float = 1e-5

    @property
    def levels(self) -> int:
        return 1 << self.bits_per_cell

    @property
    def page_bits(self) -> int:
        return self.main_bits_per_page + self.spare_bits_per_page

    @property
    def cells_per_wordline(self) -> int:
        return self.bits_per_cell * self.page_bits // self.bits_per_cell

    @property
    def pages_per_block(self) -> int:
        return self.wordlines_per_block * self.bits_per_cell

    @property
    def total_pages(self) -> int:
        return self.blocks_per_device * self.pages_per_block

    def validate(self) -> None:
        if self.bits_per_cell not in GRAY_MAPS:
            raise InvalidGeometry(f"bits_per_cell must be 1 or 2, got {self.bits_per_cell}")
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name.startswith(("p_", "q_")):
                if not 0.0 <= value <= 1.0:
                    raise InvalidGeometry(f"{f.name}={value} is not a probability")
            elif int(value) != value or value < 1:
                raise InvalidGeometry(f"{f.name} must be a positive count, got {value}")
        if (self.bits_per_cell * self.page_bits) % self.bits_per_cell:
            raise InvalidGeometry("cells per wordline is not integral")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PageAddress:
    block: int
    wordline: int
    page_slot: int

    def __str__(self) -> str:
        return f"{self.block}:{self.wordline}:{self.page_slot}"


@dataclass
class PulseReport:
    pulses: int = 0
    exposure: int = 0
    neighbor_flips: int = 0
    wear_delta: int = 0

    def __add__(self, other: PulseReport) -> PulseReport:
        return PulseReport(
            self.pulses + other.pulses,
            self.exposure + other.exposure,
            self.neighbor_flips + other.neighbor_flips,
            self.wear_delta + other.wear_delta,
        )


def _clear_table(gray: tuple[tuple[int, ...], ...]) -> np.ndarray:
    """Level reached when programming a 0-bit on ``slot`` from each level.

    Prefers the lowest level that leaves every other slot's bit unchanged,
    then the lowest level with a 0 on ``slot``; -1 when nothing is reachable.
    """
    slots, levels = len(gray), len(gray[0])
    table = np.full((slots, levels), -1, dtype=np.int16)
    for s in range(slots):
        for cur in range(levels):
            keep = [
                lv for lv in range(cur, levels)
                if gray[s][lv] == 0 and all(gray[o][lv] == gray[o][cur] for o in range(slots) if o != s)
            ]
            anyway = [lv for lv in range(cur, levels) if gray[s][lv] == 0]
            if keep:
                table[s, cur] = keep[0]
            elif anyway:
                table[s, cur] = anyway[0]
    return table


class Device:
    """A whole simulated chip. Not safe for concurrent use; clone instead."""

    def __init__(self, geometry: GeometryConfig, seed: int):
        geometry.validate()
        g = geometry
        self.geometry = g
        self.seed = seed
        shape = (g.blocks_per_device, g.wordlines_per_block, g.cells_per_wordline)
        self.levels = np.zeros(shape, dtype=np.uint8)
        self.wear = np.zeros(shape, dtype=np.uint32)
        self.program_counts = np.zeros(
            (g.blocks_per_device, g.wordlines_per_block, g.bits_per_cell), dtype=np.int32
        )
        self.erase_counts = np.zeros(g.blocks_per_device, dtype=np.int64)
        self.retired = np.zeros(g.blocks_per_device, dtype=bool)
        self.rng = np.random.default_rng(seed)
        gray = GRAY_MAPS[g.bits_per_cell]
        self.bit_table = np.array(gray, dtype=np.uint8)
        self.clear_table = _clear_table(gray)

    @property
    def top_level(self) -> int:
        return self.geometry.levels - 1

    def clone(self) -> Device:
        """Bit-exact copy, RNG state included."""
        return copy.deepcopy(self)

    def reseed(self, *entropy: int) -> None:
        self.rng = np.random.default_rng([self.seed, *entropy])

    # -- addressing ---------------------------------------------------------

    def _check_block(self, block: int) -> None:
        if not 0 <= block < self.geometry.blocks_per_device:
            raise IndexOutOfRange(f"block {block} out of range")

    def _check_wordline(self, block: int, wordline: int) -> None:
        self._check_block(block)
        if not 0 <= wordline < self.geometry.wordlines_per_block:
            raise IndexOutOfRange(f"wordline {wordline} out of range")

    def check_address(self, addr: PageAddress) -> None:
        self._check_wordline(addr.block, addr.wordline)
        if not 0 <= addr.page_slot < self.geometry.bits_per_cell:
            raise IndexOutOfRange(f"page slot {addr.page_slot} out of range")

    def _check_live(self, block: int) -> None:
        if self.retired[block]:
            raise BlockRetired(f"block {block} is retired")

    def _check_nop(self, addr: PageAddress) -> None:
        if self.program_counts[addr.block, addr.wordline, addr.page_slot] >= self.geometry.nop_limit:
            raise NopExceeded(f"page {addr} already programmed {self.geometry.nop_limit} times")

    # -- operations ---------------------------------------------------------

    def erase_block(self, block: int) -> None:
        self._check_block(block)
        self._check_live(block)
        self.levels[block] = 0
        self.program_counts[block] = 0
        self.erase_counts[block] += 1
        if self.erase_counts[block] >= self.geometry.erase_endurance:
            self.retired[block] = True

    def program_page(self, addr: PageAddress, data) -> PulseReport:
        data = np.asarray(data, dtype=np.uint8)
        if data.shape != (self.geometry.page_bits,):
            raise RegionOutOfBounds(f"page data must be {self.geometry.page_bits} bits, got {data.shape}")
        return self.partial_program(addr, 0, data)

    def partial_program(self, addr: PageAddress, bit_offset: int, region_data) -> PulseReport:
        """Program ``region_data`` at ``bit_offset``; a 1-bit is an inhibit."""
        self.check_address(addr)
        region_data = np.asarray(region_data, dtype=np.uint8)
        end = bit_offset + region_data.size
        if bit_offset < 0 or end > self.geometry.page_bits:
            raise RegionOutOfBounds(f"region [{bit_offset}, {end}) exceeds page of {self.geometry.page_bits} bits")
        self._check_live(addr.block)
        self._check_nop(addr)
        cur = self.levels[addr.block, addr.wordline]
        window = cur[bit_offset:end]
        zeros = region_data == 0
        reached = self.clear_table[addr.page_slot][window]
        if np.any(reached[zeros] < 0):
            raise NoReachableLevel(f"page {addr}: a 0-bit lands on a cell with no reachable level")
        target = cur.copy()
        target[bit_offset:end][zeros] = reached[zeros]
        report = self._raise_levels(addr.block, addr.wordline, target)
        self.program_counts[addr.block, addr.wordline, addr.page_slot] += 1
        return report

    def program_levels(self, addr: PageAddress, targets, consume_nop: bool = True) -> PulseReport:
        """Drive every cell of the wordline to at least ``targets``."""
        self.check_address(addr)
        self._check_live(addr.block)
        if consume_nop:
            self._check_nop(addr)
        cur = self.levels[addr.block, addr.wordline]
        target = np.maximum(cur, np.asarray(targets, dtype=np.uint8))
        target = np.minimum(target, self.top_level).astype(np.uint8)
        report = self._raise_levels(addr.block, addr.wordline, target)
        if consume_nop:
            self.program_counts[addr.block, addr.wordline, addr.page_slot] += 1
        return report

    def apply_deletion_pulses(self, block: int, wordline: int, n: int) -> PulseReport:
        self._check_wordline(block, wordline)
        self._check_live(block)
        return self._pulse(block, wordline, slice(None), n)

    def apply_region_pulses(self, addr: PageAddress, bit_offset: int, length: int, n: int) -> PulseReport:
        """Predetermined pulses on the cells backing one page region.

        This is a partial program, so it consumes one NOP unit.
        """
        self.check_address(addr)
        if bit_offset < 0 or length < 0 or bit_offset + length > self.geometry.page_bits:
            raise RegionOutOfBounds(f"region [{bit_offset}, {bit_offset + length}) out of page")
        self._check_live(addr.block)
        self._check_nop(addr)
        report = self._pulse(addr.block, addr.wordline, slice(bit_offset, bit_offset + length), n)
        self.program_counts[addr.block, addr.wordline, addr.page_slot] += 1
        return report

    def read_page_raw(self, addr: PageAddress, noisy: bool = True) -> np.ndarray:
        """Page bits as sensed. ``noisy=False`` returns the settled cell state."""
        self.check_address(addr)
        bits = self.bit_table[addr.page_slot][self.levels[addr.block, addr.wordline]]
        p = self.geometry.p_read_noise
        if noisy and p > 0:
            bits = bits ^ (self.rng.random(bits.size) < p).astype(np.uint8)
        return bits

    # -- internals ----------------------------------------------------------

    def _pulse(self, block: int, wordline: int, cols: slice, n: int) -> PulseReport:
        total = PulseReport()
        q = self.geometry.q_pulse
        for _ in range(n):
            cur = self.levels[block, wordline]
            window = cur[cols]
            hits = (window < self.top_level) & (self.rng.random(window.size) < q)
            target = cur.copy()
            target[cols] = window + hits
            step = self._raise_levels(block, wordline, target)
            step.pulses = 1
            total = total + step
        return total

    def _raise_levels(self, block: int, wordline: int, target: np.ndarray) -> PulseReport:
        cur = self.levels[block, wordline]
        inc = target.astype(np.int64) - cur
        exposure = int(inc.sum())
        if exposure == 0:
            return PulseReport()
        self.levels[block, wordline] = target
        self.wear[block, wordline] += inc.astype(np.uint32)
        flips = self._disturb(block, wordline, inc)
        return PulseReport(pulses=int(inc.max()), exposure=exposure, neighbor_flips=flips, wear_delta=exposure)

    def _disturb(self, block: int, wordline: int, inc: np.ndarray) -> int:
        # same-bitline cells on adjacent wordlines, one trial per level increment
        p = self.geometry.p_disturb
        if p <= 0:
            return 0
        cols = np.flatnonzero(inc)
        flips = 0
        for nbr in (wordline - 1, wordline + 1):
            if not 0 <= nbr < self.geometry.wordlines_per_block:
                continue
            draws = self.rng.binomial(inc[cols], p)
            hit = draws > 0
            if not hit.any():
                continue
            c = cols[hit]
            old = self.levels[block, nbr, c].astype(np.int64)
            new = np.minimum(old + draws[hit], self.top_level)
            self.levels[block, nbr, c] = new
            self.wear[block, nbr, c] += (new - old).astype(np.uint32)
            flips += int((new - old).sum())
        return flips


def new_device(geometry: GeometryConfig | None = None, seed: int = 0) -> Device:
    return Device(geometry or GeometryConfig(), seed)
