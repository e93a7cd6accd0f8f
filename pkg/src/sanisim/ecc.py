"""Binary BCH codec over GF(2^m) and the uncorrectable-parity mask generator.

Bit-string convention: a received word ``r`` of length ``n`` is ``data || parity``
with ``r[i]`` the coefficient of ``x^(n-1-i)``.  Error *positions* are
polynomial degrees, so position ``j`` is array index ``n-1-j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import CapacityExceeded, LengthMismatch, MaskInfeasible, NotPrimitive

# x^m + ... as a bitmask, one primitive polynomial per degree
PRIMITIVE_POLYS = {
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,
    8: 0b100011101,
    9: 0b1000010001,
    10: 0b10000001001,
    11: 0b100000000101,
    12: 0b1000001010011,
    13: 0b10000000011011,
    14: 0b100010001000011,
    15: 0b1000000000000011,
    16: 0b10001000000001011,
}


def bits_to_int(bits) -> int:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size == 0:
        return 0
    pad = (-bits.size) % 8
    return int.from_bytes(np.packbits(bits).tobytes(), "big") >> pad


def int_to_bits(value: int, length: int) -> np.ndarray:
    nbytes = (length + 7) // 8
    raw = np.frombuffer((value << (nbytes * 8 - length)).to_bytes(nbytes, "big"), dtype=np.uint8)
    return np.unpackbits(raw)[:length].copy()


def gf2_mod(a: int, b: int) -> int:
    """Remainder of a(x) / b(x) over GF(2), polynomials as bitmasks."""
    db = b.bit_length()
    while a.bit_length() >= db:
        a ^= b << (a.bit_length() - db)
    return a


def gf2_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


@dataclass(frozen=True, eq=False)
class Field:
    m: int
    primitive_poly: int
    exp: np.ndarray = field(repr=False)
    log: np.ndarray = field(repr=False)

    @property
    def order(self) -> int:
        return (1 << self.m) - 1

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[(int(self.log[a]) + int(self.log[b])) % self.order])

    def div(self, a: int, b: int) -> int:
        if b == 0:
            raise ZeroDivisionError("division by zero in GF(2^m)")
        if a == 0:
            return 0
        return int(self.exp[(int(self.log[a]) - int(self.log[b])) % self.order])

    def pow_alpha(self, e: int) -> int:
        return int(self.exp[e % self.order])


def make_field(m: int, primitive_poly: int | None = None) -> Field:
    if not 3 <= m <= 16:
        raise ValueError(f"extension degree must be in [3, 16], got {m}")
    poly = PRIMITIVE_POLYS[m] if primitive_poly is None else primitive_poly
    if poly.bit_length() != m + 1:
        raise NotPrimitive(f"polynomial {poly:#x} does not have degree {m}")
    order = (1 << m) - 1
    exp = np.zeros(2 * order, dtype=np.int64)
    log = np.full(1 << m, -1, dtype=np.int64)
    x = 1
    for i in range(order):
        if i and x == 1:
            raise NotPrimitive(f"alpha has order {i} < {order} under {poly:#x}")
        exp[i] = x
        log[x] = i
        x <<= 1
        if x >> m:
            x ^= poly
    if x != 1:
        raise NotPrimitive(f"alpha^{order} != 1 under {poly:#x}")
    exp[order:] = exp[:order]
    return Field(m, poly, exp, log)


def minimal_poly(f: Field, i: int) -> int:
    """Minimal polynomial of alpha^i over GF(2), as a bitmask."""
    coset, c = [], i % f.order
    while c not in coset:
        coset.append(c)
        c = (c * 2) % f.order
    # product of (x + alpha^c), coefficients in the field, low degree first
    poly = [1]
    for c in coset:
        root = f.pow_alpha(c)
        nxt = [0] * (len(poly) + 1)
        for d, coef in enumerate(poly):
            nxt[d + 1] ^= coef
            nxt[d] ^= f.mul(coef, root)
        poly = nxt
    assert all(coef in (0, 1) for coef in poly)
    return sum(coef << d for d, coef in enumerate(poly))


@dataclass(frozen=True, eq=False)
class Code:
    field: Field
    n: int
    k: int
    t: int
    generator_poly: int
    shortened_by: int = 0

    @property
    def parity_bits(self) -> int:
        return self.n - self.k

    def generator_hex(self) -> str:
        return f"{self.generator_poly:x}"

    def __repr__(self) -> str:
        return f"Code(n={self.n}, k={self.k}, t={self.t}, m={self.field.m}, g=0x{self.generator_hex()})"


def make_code(f: Field, t: int, shortened_by: int = 0) -> Code:
    if t < 1:
        raise ValueError("t must be at least 1")
    n = f.order - shortened_by
    g, seen = 1, set()
    for i in range(1, 2 * t, 2):
        mp = minimal_poly(f, i)
        if mp not in seen:
            seen.add(mp)
            g = gf2_mul(g, mp)
    parity = g.bit_length() - 1
    if n <= 0 or parity >= n:
        raise CapacityExceeded(f"t={t} needs {parity} parity bits but n={n}")
    return Code(f, n, n - parity, t, g, shortened_by)


def code_for_segment(m: int, t: int, data_bits: int) -> Code:
    """Shortened code carrying exactly ``data_bits`` data bits per codeword."""
    f = make_field(m)
    full = make_code(f, t)
    if data_bits > full.k:
        raise CapacityExceeded(f"{data_bits} data bits exceed k={full.k} for m={m}, t={t}")
    return make_code(f, t, full.k - data_bits)


def _check_len(bits: np.ndarray, length: int, what: str) -> None:
    if bits.shape != (length,):
        raise LengthMismatch(f"{what} must be {length} bits, got {bits.shape}")


def encode(code: Code, data) -> np.ndarray:
    data = np.asarray(data, dtype=np.uint8)
    _check_len(data, code.k, "data")
    rem = gf2_mod(bits_to_int(data) << code.parity_bits, code.generator_poly)
    return int_to_bits(rem, code.parity_bits)


def compute_syndromes(code: Code, received) -> list[int]:
    """S_1 .. S_2t."""
    r = np.asarray(received, dtype=np.uint8)
    _check_len(r, code.n, "received word")
    f = code.field
    degrees = (code.n - 1) - np.flatnonzero(r)
    if degrees.size == 0:
        return [0] * (2 * code.t)
    powers = np.arange(1, 2 * code.t + 1)[:, None] * degrees[None, :] % f.order
    return [int(s) for s in np.bitwise_xor.reduce(f.exp[powers], axis=1)]


def berlekamp_massey(code: Code, syndromes) -> list[int]:
    """Error-locator coefficients, lowest degree first (sigma[0] == 1)."""
    f = code.field
    sigma, prev = [1], [1]
    length, shift, prev_disc = 0, 1, 1
    for step, s in enumerate(syndromes):
        disc = s
        for i in range(1, length + 1):
            if i < len(sigma):
                disc ^= f.mul(sigma[i], syndromes[step - i])
        if disc == 0:
            shift += 1
            continue
        scale = f.div(disc, prev_disc)
        update = sigma + [0] * max(0, len(prev) + shift - len(sigma))
        for i, c in enumerate(prev):
            update[i + shift] ^= f.mul(scale, c)
        if 2 * length <= step:
            prev, prev_disc = sigma, disc
            length = step + 1 - length
            shift = 1
        else:
            shift += 1
        sigma = update
    while len(sigma) > 1 and sigma[-1] == 0:
        sigma.pop()
    return sigma


def chien_search(code: Code, sigma) -> list[int]:
    """Positions j < n with sigma(alpha^-j) == 0."""
    f = code.field
    j = np.arange(code.n)
    acc = np.zeros(code.n, dtype=np.int64)
    for d, coef in enumerate(sigma):
        if coef:
            acc ^= f.exp[(int(f.log[coef]) - j * d) % f.order]
    return [int(p) for p in np.flatnonzero(acc == 0)]


class DecodeStatus(str, Enum):
    CORRECTED = "Corrected"
    UNCORRECTABLE = "Uncorrectable"


@dataclass
class DecodeOutcome:
    status: DecodeStatus
    data: np.ndarray | None = None
    error_count: int = 0
    error_positions: tuple[int, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status is DecodeStatus.CORRECTED


_FAIL = DecodeOutcome(DecodeStatus.UNCORRECTABLE)


def decode(code: Code, received) -> DecodeOutcome:
    r = np.asarray(received, dtype=np.uint8)
    syn = compute_syndromes(code, r)
    if not any(syn):
        return DecodeOutcome(DecodeStatus.CORRECTED, r[: code.k].copy(), 0, ())
    sigma = berlekamp_massey(code, syn)
    deg = len(sigma) - 1
    if deg > code.t:
        return _FAIL
    roots = chien_search(code, sigma)
    if len(roots) != deg:
        return _FAIL
    fixed = r.copy()
    fixed[[code.n - 1 - p for p in roots]] ^= 1
    if any(compute_syndromes(code, fixed)):
        return _FAIL
    return DecodeOutcome(DecodeStatus.CORRECTED, fixed[: code.k], deg, tuple(roots))


@dataclass
class MaskResult:
    clear_mask: np.ndarray
    bits_cleared: int
    verified_uncorrectable: bool

    def hex(self) -> str:
        return f"{bits_to_int(self.clear_mask):x}"


def craft_uncorrectable_mask(
    code: Code,
    data_read,
    parity_read,
    clear_budget: int | None = None,
    programmable=None,
) -> MaskResult:
    """Pick parity 1-bits to program to 0 until the word no longer decodes.

    Starts with the ``t+1`` lowest-index candidates and adds one more after
    every decode that still succeeds (miscorrections count as success).
    ``programmable`` optionally restricts which parity bits may be cleared.
    """
    data_read = np.asarray(data_read, dtype=np.uint8)
    parity_read = np.asarray(parity_read, dtype=np.uint8)
    _check_len(data_read, code.k, "data")
    _check_len(parity_read, code.parity_bits, "parity")
    budget = code.parity_bits if clear_budget is None else clear_budget
    allowed = parity_read == 1
    if programmable is not None:
        allowed &= np.asarray(programmable, dtype=bool)
    candidates = np.flatnonzero(allowed)
    need = code.t + 1
    if candidates.size < need or budget < need:
        raise MaskInfeasible(f"{candidates.size} clearable parity bits, budget {budget}, need {need}")
    mask = np.zeros(code.parity_bits, dtype=np.uint8)
    mask[candidates[:need]] = 1
    cleared = need
    while True:
        word = np.concatenate([data_read, parity_read & (1 - mask)])
        if not decode(code, word).ok:
            return MaskResult(mask, cleared, True)
        if cleared >= min(budget, candidates.size):
            raise MaskInfeasible(f"still decodable after clearing {cleared} parity bits")
        mask[candidates[cleared]] = 1
        cleared += 1


@dataclass(frozen=True)
class SegmentLayout:
    segments_per_page: int
    data_bits_per_segment: int
    parity_bits_per_segment: int
    main_bits: int
    spare_bits: int

    def data_slice(self, s: int) -> slice:
        lo = s * self.data_bits_per_segment
        return slice(lo, lo + self.data_bits_per_segment)

    def parity_offset(self, s: int) -> int:
        """Offset of segment ``s`` parity within the page (spare area follows main)."""
        return self.main_bits + s * self.parity_bits_per_segment

    def parity_slice(self, s: int) -> slice:
        lo = self.parity_offset(s)
        return slice(lo, lo + self.parity_bits_per_segment)


class PageCodec:
    """A code plus the layout that spreads it over one page."""

    def __init__(self, code: Code, segments: int, main_bits: int, spare_bits: int):
        if segments < 1 or segments * code.k != main_bits:
            raise LengthMismatch(f"{segments} segments of {code.k} bits do not tile {main_bits} main bits")
        if segments * code.parity_bits > spare_bits:
            raise CapacityExceeded(
                f"{segments} x {code.parity_bits} parity bits exceed the {spare_bits}-bit spare area"
            )
        self.code = code
        self.layout = SegmentLayout(segments, code.k, code.parity_bits, main_bits, spare_bits)

    @classmethod
    def build(cls, m: int, t: int, segments: int, main_bits: int, spare_bits: int) -> PageCodec:
        if segments < 1 or main_bits % segments:
            raise LengthMismatch(f"{main_bits} main bits do not split into {segments} segments")
        return cls(code_for_segment(m, t, main_bits // segments), segments, main_bits, spare_bits)

    @property
    def page_bits(self) -> int:
        return self.layout.main_bits + self.layout.spare_bits

    def encode_page(self, data) -> np.ndarray:
        """Full page image: data, per-segment parity, unused spare left at 1."""
        data = np.asarray(data, dtype=np.uint8)
        _check_len(data, self.layout.main_bits, "page data")
        page = np.ones(self.page_bits, dtype=np.uint8)
        page[: self.layout.main_bits] = data
        for s in range(self.layout.segments_per_page):
            page[self.layout.parity_slice(s)] = encode(self.code, data[self.layout.data_slice(s)])
        return page

    def segment_word(self, page, s: int) -> np.ndarray:
        page = np.asarray(page)
        return np.concatenate([page[self.layout.data_slice(s)], page[self.layout.parity_slice(s)]])

    def decode_page(self, page) -> list[DecodeOutcome]:
        return [decode(self.code, self.segment_word(page, s)) for s in range(self.layout.segments_per_page)]
