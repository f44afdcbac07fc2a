"""In-module disturbance barrier: main table, barrier buffer, replacement
policy with prior knowledge, sampled victim selection, and rewrite
generation.

One instance serves one bank. The main table counts per-word 1-to-0 flips of
managed addresses and fires a pair of full rewrites on the adjacent wordlines
when the maximal sub-counter reaches the threshold; the barrier buffer holds
the data of addresses that keep triggering rewrites and absorbs their writes
entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random

from .core import (ConsistencyError, DataLine, Geometry, LineAddress,
                   ProtocolError, SimConfig, count_one_to_zero, count_zeros)

ZFC_MAX = 511       # 9-bit saturating sub-counters
CNTR_MAX = 255      # 8-bit rewrite / frequency counters

MT_ENTRY_BITS = 25 + 8 + 72 + 3    # row_col + rewrite_cntr + 8x9b zfc + max idx
BB_ENTRY_BITS = 512 + 25 + 8 + 8   # data + row_col + rewrite_cntr + freq_cntr


@dataclass
class MainTableEntry:
    valid: bool = False
    row_col: int = 0
    zfc: list = field(default_factory=lambda: [0] * 8)
    max_zfc_idx: int = 0
    rewrite_cntr: int = 0
    last_use: int = 0  # recency stamp, only consulted by the LRU variant


@dataclass
class BarrierEntry:
    valid: bool = False
    row_col: int = 0
    data: DataLine | None = None
    rewrite_cntr: int = 0
    freq_cntr: int = 0


@dataclass
class ImdbOutcome:
    classification: str  # "mt-hit" | "bb-hit" | "miss-inserted" | "miss-bypassed"
    rewrites: list = field(default_factory=list)  # LineAddress targets, Full mode
    absorbed: bool = False
    writeback: tuple | None = None  # (LineAddress, DataLine)
    occupancy_cycles: int = 0


def prior_init(data: DataLine) -> list[int]:
    """Zero-bit count of each word, the warm-up bias for fresh entries."""
    return [min(z, ZFC_MAX) for z in count_zeros(data)]


def sram_capacity(n_mt: int, n_b: int, banks: int) -> dict:
    """Exact SRAM bit budget of the two tables."""
    mt_bits = n_mt * MT_ENTRY_BITS
    bb_bits = n_b * BB_ENTRY_BITS
    per_bank = mt_bits + bb_bits
    return {
        "main_table_bits_per_bank": mt_bits,
        "barrier_buffer_bits_per_bank": bb_bits,
        "bits_per_bank": per_bank,
        "total_bits": per_bank * banks,
    }


def apple_latency_cycles(n_groups: int) -> int:
    """Depth of the dual-input comparator tree over the sampled entries."""
    return math.ceil(math.log2(n_groups)) if n_groups > 1 else 0


class Imdb:
    def __init__(self, cfg: SimConfig, rank: int, bank: int):
        self.cfg = cfg
        self.geometry = cfg.geometry
        self.rank = rank
        self.bank = bank
        self.mt = [MainTableEntry() for _ in range(cfg.n_mt)]
        self.bb = [BarrierEntry() for _ in range(cfg.n_b)]
        self._clock = 0  # monotone access stamp for the LRU variant
        self.evictions = 0

    # -- address helpers ---------------------------------------------------

    def _pack(self, addr: LineAddress) -> int:
        return addr.row_col(self.geometry)

    def _unpack(self, row_col: int) -> LineAddress:
        cols = self.geometry.cols_per_row
        return LineAddress(self.rank, self.bank, row_col // cols, row_col % cols)

    # -- lookup ------------------------------------------------------------

    def lookup(self, addr: LineAddress):
        """Returns ("bb", slot), ("mt", slot), or None. The barrier buffer
        takes precedence; duplicates within or across tables are invalid."""
        rc = self._pack(addr)
        bb_slots = [i for i, e in enumerate(self.bb) if e.valid and e.row_col == rc]
        mt_slots = [i for i, e in enumerate(self.mt) if e.valid and e.row_col == rc]
        if len(bb_slots) > 1 or len(mt_slots) > 1 or (bb_slots and mt_slots):
            raise ConsistencyError(
                f"address {rc} valid in multiple table slots "
                f"(bb={bb_slots}, mt={mt_slots})")
        if bb_slots:
            return ("bb", bb_slots[0])
        if mt_slots:
            return ("mt", mt_slots[0])
        return None

    # -- victim selection --------------------------------------------------

    @staticmethod
    def _victim_key(entry: MainTableEntry, slot: int):
        return (entry.zfc[entry.max_zfc_idx], entry.rewrite_cntr, slot)

    def select_victim_exact(self) -> int:
        for i, e in enumerate(self.mt):
            if not e.valid:
                raise ProtocolError(f"slot {i} is free; use it instead of evicting")
        return min(range(len(self.mt)), key=lambda i: self._victim_key(self.mt[i], i))

    def select_victim_apple(self, rng: Random) -> int:
        for i, e in enumerate(self.mt):
            if not e.valid:
                raise ProtocolError(f"slot {i} is free; use it instead of evicting")
        n_groups = self.cfg.n_groups
        group_size = len(self.mt) // n_groups
        best = None
        for g in range(n_groups):
            slot = g * group_size + rng.randrange(group_size)
            key = self._victim_key(self.mt[slot], slot)
            if best is None or key < best[0]:
                best = (key, slot)
        return best[1]

    def select_victim_lru(self) -> int:
        for i, e in enumerate(self.mt):
            if not e.valid:
                raise ProtocolError(f"slot {i} is free; use it instead of evicting")
        return min(range(len(self.mt)),
                   key=lambda i: (self.mt[i].last_use, i))

    # -- write / read paths --------------------------------------------------

    def process_write(self, addr: LineAddress, old_data: DataLine | None,
                      new_data: DataLine, rng: Random) -> ImdbOutcome:
        if old_data is None:
            raise ProtocolError("write reached the tables without prepared old data")
        hit = self.lookup(addr)
        self._clock += 1

        if hit is not None and hit[0] == "bb":
            e = self.bb[hit[1]]
            e.data = new_data
            e.freq_cntr = min(e.freq_cntr + 1, CNTR_MAX)
            return ImdbOutcome("bb-hit", absorbed=True,
                               occupancy_cycles=self.cfg.hit_cycles)

        if hit is not None and hit[0] == "mt":
            return self._mt_hit(hit[1], addr, old_data, new_data)

        return self._miss(addr, new_data, rng)

    def _mt_hit(self, slot: int, addr: LineAddress, old_data: DataLine,
                new_data: DataLine) -> ImdbOutcome:
        e = self.mt[slot]
        e.last_use = self._clock
        flips = count_one_to_zero(old_data, new_data)
        for i, f in enumerate(flips):
            e.zfc[i] = min(e.zfc[i] + f, ZFC_MAX)
        e.max_zfc_idx = max(range(8), key=lambda i: (e.zfc[i], -i))

        out = ImdbOutcome("mt-hit", occupancy_cycles=self.cfg.hit_cycles)
        # The trigger requires fresh flips: a rewrite that changes nothing must
        # not re-fire an entry whose counters sit at or above the threshold.
        if any(flips) and e.zfc[e.max_zfc_idx] >= self.cfg.threshold:
            e.rewrite_cntr = min(e.rewrite_cntr + 1, CNTR_MAX)
            out.rewrites = addr.neighbor_rows(self.geometry)
            if self.cfg.n_b > 0:
                out.writeback = self.promote_and_demote(slot, new_data)
                out.absorbed = True
            else:
                # Bufferless variant: the entry stays; restart its counters
                # from the prior knowledge of the data just written.
                e.zfc = (prior_init(new_data) if self.cfg.prior_knowledge
                         else [0] * 8)
                e.max_zfc_idx = max(range(8), key=lambda i: (e.zfc[i], -i))
        return out

    def _miss(self, addr: LineAddress, new_data: DataLine,
              rng: Random) -> ImdbOutcome:
        if not self.mt:
            return ImdbOutcome("miss-bypassed",
                               occupancy_cycles=self.cfg.hit_cycles)
        p = self.cfg.insert_prob
        if not (p >= 1 or rng.random() < p):
            return ImdbOutcome("miss-bypassed",
                               occupancy_cycles=self.cfg.hit_cycles)
        cycles = self.cfg.hit_cycles
        slot = next((i for i, e in enumerate(self.mt) if not e.valid), None)
        if slot is None:
            if self.cfg.mt_policy == "lru":
                slot = self.select_victim_lru()
            else:
                slot = self.select_victim_apple(rng)
            cycles += apple_latency_cycles(self.cfg.n_groups)
            self.evictions += 1
        e = self.mt[slot]
        e.valid = True
        e.row_col = self._pack(addr)
        e.zfc = prior_init(new_data) if self.cfg.prior_knowledge else [0] * 8
        e.max_zfc_idx = max(range(8), key=lambda i: (e.zfc[i], -i))
        e.rewrite_cntr = 0
        e.last_use = self._clock
        return ImdbOutcome("miss-inserted", occupancy_cycles=cycles)

    def try_absorb(self, addr: LineAddress, data: DataLine) -> bool:
        """Admission-time check: a write whose address sits in the barrier
        buffer is consumed there and never reaches the queues."""
        if not self.bb:
            return False
        hit = self.lookup(addr)
        if hit is not None and hit[0] == "bb":
            e = self.bb[hit[1]]
            e.data = data
            e.freq_cntr = min(e.freq_cntr + 1, CNTR_MAX)
            return True
        return False

    def process_read(self, addr: LineAddress) -> DataLine | None:
        """Reads are served by the barrier buffer when possible; the main
        table stores no data and is untouched by reads."""
        hit = self.lookup(addr)
        if hit is not None and hit[0] == "bb":
            e = self.bb[hit[1]]
            e.freq_cntr = min(e.freq_cntr + 1, CNTR_MAX)
            return e.data
        return None

    # -- promotion ---------------------------------------------------------

    def promote_and_demote(self, mt_slot: int,
                           write_data: DataLine) -> tuple | None:
        """Move a rewrite-triggering main-table entry up into the barrier
        buffer, carrying the write data. A full buffer demotes its LFU entry
        back into the vacated slot and returns that entry's data for
        writeback."""
        src = self.mt[mt_slot]
        row_col, rewrite_cntr = src.row_col, src.rewrite_cntr
        src.valid = False

        free = next((i for i, e in enumerate(self.bb) if not e.valid), None)
        writeback = None
        if free is None:
            lfu = min(range(len(self.bb)),
                      key=lambda i: (self.bb[i].freq_cntr, i))
            victim = self.bb[lfu]
            writeback = (self._unpack(victim.row_col), victim.data)
            dst = self.mt[mt_slot]
            dst.valid = True
            dst.row_col = victim.row_col
            dst.zfc = prior_init(victim.data)
            dst.max_zfc_idx = max(range(8), key=lambda i: (dst.zfc[i], -i))
            dst.rewrite_cntr = victim.rewrite_cntr
            dst.last_use = self._clock
            free = lfu
        e = self.bb[free]
        e.valid = True
        e.row_col = row_col
        e.data = write_data
        e.rewrite_cntr = rewrite_cntr
        e.freq_cntr = 0
        return writeback
