"""Shared domain types, address arithmetic, and bit-counting kernels.

Address layout (fixed): byte-in-line in the low 6 bits, then column, then
bank, then rank, then row in the highest position. Keeping the row on top
means a repeatedly hammered row stays inside one bank, which matches the
per-bank mitigation tables. Counts are not required to be powers of two;
decomposition is mixed-radix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

WORD_BITS = 64
WORDS_PER_LINE = 8
LINE_BITS = WORD_BITS * WORDS_PER_LINE  # 512
LINE_BYTES = LINE_BITS // 8  # 64

WORD_MASK = (1 << WORD_BITS) - 1
LINE_MASK = (1 << LINE_BITS) - 1


class RangeError(ValueError):
    """An address component falls outside the configured geometry."""


class ProtocolError(RuntimeError):
    """A caller violated an operation's precondition (e.g. missing old data)."""


class ConsistencyError(RuntimeError):
    """An internal invariant of a table or queue was violated."""


@dataclass(frozen=True)
class Geometry:
    """Physical organization of the module. Defaults decode an 8GB module."""

    ranks: int = 2
    banks_per_rank: int = 2
    rows_per_bank: int = 2 ** 19
    cols_per_row: int = 64  # each column is one 64B line

    def __post_init__(self):
        for name in ("ranks", "banks_per_rank", "rows_per_bank", "cols_per_row"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.rows_per_bank < 2:
            raise ValueError("rows_per_bank must be >= 2 (adjacency must exist)")

    @property
    def num_banks(self) -> int:
        return self.ranks * self.banks_per_rank

    @property
    def lines_per_bank(self) -> int:
        return self.rows_per_bank * self.cols_per_row

    @property
    def total_lines(self) -> int:
        return self.num_banks * self.lines_per_bank

    @property
    def capacity_bytes(self) -> int:
        return self.total_lines * LINE_BYTES


@dataclass(frozen=True, order=True)
class LineAddress:
    rank: int
    bank: int
    row: int
    col: int

    def check(self, g: Geometry) -> "LineAddress":
        if not 0 <= self.rank < g.ranks:
            raise RangeError(f"rank {self.rank} out of range [0, {g.ranks})")
        if not 0 <= self.bank < g.banks_per_rank:
            raise RangeError(f"bank {self.bank} out of range [0, {g.banks_per_rank})")
        if not 0 <= self.row < g.rows_per_bank:
            raise RangeError(f"row {self.row} out of range [0, {g.rows_per_bank})")
        if not 0 <= self.col < g.cols_per_row:
            raise RangeError(f"col {self.col} out of range [0, {g.cols_per_row})")
        return self

    def bank_index(self, g: Geometry) -> int:
        """Flat bank number across ranks."""
        return self.rank * g.banks_per_rank + self.bank

    def row_col(self, g: Geometry) -> int:
        """Packed row-and-column identifier within a bank."""
        return self.row * g.cols_per_row + self.col

    def neighbor_rows(self, g: Geometry) -> list["LineAddress"]:
        """Same-column lines on the adjacent wordlines, edge rows skipped."""
        out = []
        if self.row > 0:
            out.append(LineAddress(self.rank, self.bank, self.row - 1, self.col))
        if self.row < g.rows_per_bank - 1:
            out.append(LineAddress(self.rank, self.bank, self.row + 1, self.col))
        return out


@dataclass(frozen=True)
class DataLine:
    """512-bit cache-line payload viewed as eight 64-bit words.

    Word i covers bit positions [64*i, 64*i + 63]; bit 0 of a word is the
    least significant bit.
    """

    words: tuple

    def __post_init__(self):
        if len(self.words) != WORDS_PER_LINE:
            raise ValueError("a line holds exactly 8 words")
        for w in self.words:
            if not 0 <= w <= WORD_MASK:
                raise ValueError("word out of 64-bit range")

    @classmethod
    def from_int(cls, value: int) -> "DataLine":
        if not 0 <= value <= LINE_MASK:
            raise ValueError("value out of 512-bit range")
        return cls(tuple((value >> (WORD_BITS * i)) & WORD_MASK
                         for i in range(WORDS_PER_LINE)))

    @classmethod
    def all_ones(cls) -> "DataLine":
        return cls((WORD_MASK,) * WORDS_PER_LINE)

    @classmethod
    def all_zeros(cls) -> "DataLine":
        return cls((0,) * WORDS_PER_LINE)

    def to_int(self) -> int:
        v = 0
        for i, w in enumerate(self.words):
            v |= w << (WORD_BITS * i)
        return v

    def bit(self, k: int) -> int:
        if not 0 <= k < LINE_BITS:
            raise ValueError("bit index out of range")
        return (self.words[k // WORD_BITS] >> (k % WORD_BITS)) & 1

    def to_hex(self) -> str:
        return f"{self.to_int():0{LINE_BITS // 4}x}"

    @classmethod
    def from_hex(cls, s: str) -> "DataLine":
        return cls.from_int(int(s, 16))


def count_one_to_zero(old: DataLine, new: DataLine) -> list[int]:
    """Per-word count of bits flipping from 1 to 0 between old and new."""
    return [((o & ~n) & WORD_MASK).bit_count()
            for o, n in zip(old.words, new.words)]


def count_zeros(d: DataLine) -> list[int]:
    """Per-word count of zero bits."""
    return [WORD_BITS - w.bit_count() for w in d.words]


def decompose_address(byte_addr: int, g: Geometry) -> LineAddress:
    """Map a module byte address onto (rank, bank, row, col)."""
    if byte_addr < 0:
        raise RangeError(f"byte_addr {byte_addr} is negative")
    if byte_addr >= g.capacity_bytes:
        raise RangeError(
            f"byte_addr {byte_addr:#x} exceeds module capacity {g.capacity_bytes:#x}")
    line = byte_addr // LINE_BYTES
    col = line % g.cols_per_row
    line //= g.cols_per_row
    bank = line % g.banks_per_rank
    line //= g.banks_per_rank
    rank = line % g.ranks
    row = line // g.ranks
    return LineAddress(rank, bank, row, col)


def compose_address(addr: LineAddress, g: Geometry) -> int:
    """Inverse of decompose_address for line-aligned addresses."""
    addr.check(g)
    line = ((addr.row * g.ranks + addr.rank) * g.banks_per_rank
            + addr.bank) * g.cols_per_row + addr.col
    return line * LINE_BYTES


@dataclass(frozen=True)
class EnergyParams:
    """Per-event energy inputs. These are configuration placeholders, not
    derived values; reports flag them as source=config."""

    pcm_read_pj: float = 0.0
    pcm_set_pj_per_bit: float = 0.0
    pcm_reset_pj_per_bit: float = 0.0
    sram_search_pj: float = 0.0
    sram_access_pj: float = 0.0
    bb_access_pj: float = 0.0

    def __post_init__(self):
        for name, v in self.__dict__.items():
            if v < 0:
                raise ValueError(f"{name} must be >= 0")


STRATEGIES = ("none", "vnc", "siwc", "imdb")
FILL_PATTERNS = ("ones", "zeros")
MT_POLICIES = ("flip", "lru")


@dataclass(frozen=True)
class SimConfig:
    geometry: Geometry = field(default_factory=Geometry)
    read_ns: int = 100
    set_ns: int = 150
    reset_ns: int = 100
    disturb_limit: int = 1024  # RESET pulses an idle neighbor cell tolerates
    threshold: int = 511
    insert_prob: Fraction = Fraction(1, 128)
    n_mt: int = 256
    n_b: int = 8
    n_groups: int = 8
    queue_depth: int = 64
    drain_low_watermark: int | None = None  # defaults to queue_depth // 2
    controller_clock_hz: int = 800_000_000
    energy: EnergyParams = field(default_factory=EnergyParams)
    seed: int = 0
    strategy: str = "none"
    initial_fill: str = "ones"
    prior_knowledge: bool = True
    mt_policy: str = "flip"  # "lru" is an evaluation-only variant
    siwc_entries: int | None = None  # defaults to n_mt + n_b (entry parity)
    siwc_q_insert: Fraction = Fraction(1, 2)
    siwc_q_evict: Fraction = Fraction(1, 2)
    hit_cycles: int = 2

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.initial_fill not in FILL_PATTERNS:
            raise ValueError(f"unknown initial_fill {self.initial_fill!r}")
        if self.mt_policy not in MT_POLICIES:
            raise ValueError(f"unknown mt_policy {self.mt_policy!r}")
        if self.disturb_limit < 1:
            raise ValueError("disturb_limit must be >= 1")
        if not 0 <= 2 * self.threshold < self.disturb_limit:
            raise ValueError("need 0 <= 2*threshold < disturb_limit "
                             "(rewrite must fire before two aggressors reach the limit)")
        if self.n_groups < 1:
            raise ValueError("n_groups must be >= 1")
        if self.n_mt > 0 and self.n_mt % self.n_groups != 0:
            raise ValueError("n_groups must divide n_mt")
        if not 0 <= self.insert_prob <= 1:
            raise ValueError("insert_prob must be in [0, 1]")
        if not (0 <= self.siwc_q_insert <= 1 and 0 <= self.siwc_q_evict <= 1):
            raise ValueError("siwc coin probabilities must be in [0, 1]")
        if self.queue_depth < 1:
            raise ValueError("queue_depth must be >= 1")
        if self.drain_watermark >= self.queue_depth:
            raise ValueError("drain_low_watermark must be below queue_depth")
        for name in ("read_ns", "set_ns", "reset_ns"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.controller_clock_hz <= 0:
            raise ValueError("controller_clock_hz must be positive")

    @property
    def drain_watermark(self) -> int:
        if self.drain_low_watermark is None:
            return self.queue_depth // 2
        return self.drain_low_watermark

    @property
    def fill_line(self) -> DataLine:
        return DataLine.all_ones() if self.initial_fill == "ones" else DataLine.all_zeros()

    @property
    def siwc_entry_count(self) -> int:
        if self.siwc_entries is None:
            return self.n_mt + self.n_b
        return self.siwc_entries

    def cycles_to_ns(self, cycles: int) -> int:
        # Round up: a partially used controller cycle still occupies the table.
        return -(-cycles * 1_000_000_000 // self.controller_clock_hz)
