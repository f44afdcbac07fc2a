from fractions import Fraction
from random import Random

import pytest

from disturbsim.core import (ConsistencyError, DataLine, LineAddress,
                             ProtocolError, count_zeros)
from disturbsim.imdb import (BB_ENTRY_BITS, MT_ENTRY_BITS, ZFC_MAX, Imdb,
                             apple_latency_cycles, prior_init, sram_capacity)
from helpers import TINY, make_cfg, random_line

ONES = DataLine.all_ones()
ZEROS = DataLine.all_zeros()


def addr(row, col=0):
    return LineAddress(0, 0, row, col)


def make_imdb(**kw) -> Imdb:
    return Imdb(make_cfg(**kw), 0, 0)


def flips16():
    """A line whose word 1 has 16 zeros; writing it over all-ones flips 16."""
    word1 = (1 << 64) - 1
    for b in range(16):
        word1 &= ~(1 << b)
    return DataLine(((1 << 64) - 1, word1) + ((1 << 64) - 1,) * 6)


def test_prior_init_counts_and_saturates():
    assert prior_init(ONES) == [0] * 8
    assert prior_init(ZEROS) == [64] * 8  # 64 < 511, no saturation here
    d = DataLine((0b1010,) + ((1 << 64) - 1,) * 7)
    assert prior_init(d)[0] == 62
    assert all(z <= ZFC_MAX for z in prior_init(ZEROS))


def test_entry_bit_widths():
    assert MT_ENTRY_BITS == 108
    assert BB_ENTRY_BITS == 553


def test_sram_capacity_reference_point():
    cap = sram_capacity(256, 8, 4)
    assert cap["main_table_bits_per_bank"] == 256 * 108
    assert cap["barrier_buffer_bits_per_bank"] == 8 * 553
    assert cap["total_bits"] == 4 * (256 * 108 + 8 * 553)


def test_apple_latency_is_comparator_tree_depth():
    assert apple_latency_cycles(1) == 0
    assert apple_latency_cycles(2) == 1
    assert apple_latency_cycles(8) == 3
    assert apple_latency_cycles(256) == 8


def test_miss_inserts_with_prior_knowledge():
    t = make_imdb(n_mt=4, n_groups=4)
    out = t.process_write(addr(1), ONES, flips16(), Random(0))
    assert out.classification == "miss-inserted"
    slot = t.lookup(addr(1))
    assert slot == ("mt", 0)
    assert t.mt[0].zfc == count_zeros(flips16())
    assert t.mt[0].max_zfc_idx == 1


def test_miss_without_prior_knowledge_starts_cold():
    t = make_imdb(n_mt=4, n_groups=4, prior_knowledge=False)
    t.process_write(addr(1), ONES, flips16(), Random(0))
    assert t.mt[0].zfc == [0] * 8


def test_miss_bypass_probability():
    t = make_imdb(n_mt=4, n_groups=4, insert_prob=Fraction(0))
    out = t.process_write(addr(1), ONES, ZEROS, Random(0))
    assert out.classification == "miss-bypassed"
    assert t.lookup(addr(1)) is None


def test_mt_hit_accumulates_and_triggers():
    t = make_imdb(n_mt=4, n_groups=4, threshold=20, disturb_limit=64, n_b=1)
    rng = Random(0)
    t.process_write(addr(3), ONES, ONES, rng)  # insert, prior = 0
    out = t.process_write(addr(3), ONES, flips16(), rng)
    assert out.classification == "mt-hit"
    assert not out.rewrites  # 16 < 20
    assert t.mt[0].zfc[1] == 16
    out = t.process_write(addr(3), ONES, flips16(), rng)
    assert out.rewrites == [addr(2), addr(4)]
    assert out.absorbed  # promoted into the barrier buffer
    assert t.lookup(addr(3)) == ("bb", 0)
    assert t.bb[0].data == flips16()


def test_trigger_requires_fresh_flips():
    t = make_imdb(n_mt=4, n_groups=4, threshold=3, disturb_limit=8, n_b=0)
    rng = Random(0)
    t.process_write(addr(3), ONES, ZEROS, rng)  # insert, prior 64 >= threshold
    out = t.process_write(addr(3), ZEROS, ZEROS, rng)  # no flips
    assert out.classification == "mt-hit" and not out.rewrites
    out = t.process_write(addr(3), ONES, ZEROS, rng)
    assert out.rewrites


def test_bufferless_variant_restarts_counters():
    t = make_imdb(n_mt=4, n_groups=4, threshold=3, disturb_limit=8, n_b=0)
    rng = Random(0)
    t.process_write(addr(3), ONES, flips16(), rng)
    out = t.process_write(addr(3), ONES, flips16(), rng)
    assert out.rewrites and not out.absorbed
    assert t.lookup(addr(3)) == ("mt", 0)  # entry stays in the table
    assert t.mt[0].zfc == prior_init(flips16())
    assert t.mt[0].rewrite_cntr == 1


def test_bb_hit_absorbs_and_updates_data():
    t = make_imdb(n_mt=4, n_groups=4, threshold=3, disturb_limit=8, n_b=1)
    rng = Random(0)
    t.process_write(addr(3), ONES, flips16(), rng)
    t.process_write(addr(3), ONES, flips16(), rng)  # trigger + promote
    out = t.process_write(addr(3), flips16(), ONES, rng)
    assert out.classification == "bb-hit" and out.absorbed
    assert t.bb[0].data == ONES
    assert t.bb[0].freq_cntr == 1


def test_try_absorb_and_read_path():
    t = make_imdb(n_mt=4, n_groups=4, threshold=3, disturb_limit=8, n_b=1)
    rng = Random(0)
    assert not t.try_absorb(addr(3), ONES)
    t.process_write(addr(3), ONES, flips16(), rng)
    t.process_write(addr(3), ONES, flips16(), rng)
    assert t.process_read(addr(3)) == flips16()
    assert t.try_absorb(addr(3), ONES)
    assert t.process_read(addr(3)) == ONES
    assert t.process_read(addr(5)) is None  # main table serves no reads


def test_full_bb_demotes_lfu_with_prior():
    t = make_imdb(n_mt=8, n_groups=8, threshold=3, disturb_limit=8, n_b=1)
    rng = Random(0)
    t.process_write(addr(3), ONES, flips16(), rng)
    t.process_write(addr(3), ONES, flips16(), rng)  # addr 3 now in bb
    t.process_write(addr(3), flips16(), ZEROS, rng)  # bump its frequency
    t.process_write(addr(5), ONES, flips16(), rng)
    out = t.process_write(addr(5), ONES, flips16(), rng)  # must demote addr 3
    assert out.writeback == (addr(3), ZEROS)
    assert t.lookup(addr(5)) == ("bb", 0)
    where = t.lookup(addr(3))
    assert where[0] == "mt"
    assert t.mt[where[1]].zfc == prior_init(ZEROS)


def test_victim_key_ordering_exact():
    t = make_imdb(n_mt=4, n_groups=4)
    for i, (zfc, rw) in enumerate([(5, 0), (2, 1), (2, 0), (9, 0)]):
        e = t.mt[i]
        e.valid = True
        e.row_col = i
        e.zfc = [zfc] + [0] * 7
        e.max_zfc_idx = 0
        e.rewrite_cntr = rw
    # min zfc wins; rewrite count breaks ties; slot index breaks the rest
    assert t.select_victim_exact() == 2
    t.mt[2].rewrite_cntr = 1
    assert t.select_victim_exact() == 1
    t.mt[1].zfc[0] = 5
    t.mt[2].zfc[0] = 5
    assert t.select_victim_exact() == 0


def test_select_victim_requires_full_table():
    t = make_imdb(n_mt=4, n_groups=4)
    with pytest.raises(ProtocolError):
        t.select_victim_exact()
    with pytest.raises(ProtocolError):
        t.select_victim_apple(Random(0))


def test_apple_full_sampling_equals_exact():
    rng = Random(7)
    t = make_imdb(n_mt=8, n_groups=8)
    for i in range(8):
        e = t.mt[i]
        e.valid = True
        e.row_col = i
        e.zfc = [rng.randrange(4)] + [0] * 7
        e.max_zfc_idx = 0
        e.rewrite_cntr = rng.randrange(2)
    assert t.select_victim_apple(Random(0)) == t.select_victim_exact()


def test_apple_single_group_is_one_random_sample():
    t = make_imdb(n_mt=8, n_groups=1)
    for i in range(8):
        e = t.mt[i]
        e.valid = True
        e.row_col = i
        e.zfc = [i] + [0] * 7
    rng = Random(3)
    expect = Random(3).randrange(8)
    assert t.select_victim_apple(rng) == expect


def test_eviction_replaces_lowest_counter_entry():
    t = make_imdb(n_mt=2, n_groups=2, threshold=3, disturb_limit=8, n_b=0)
    rng = Random(0)
    t.process_write(addr(1), ONES, ZEROS, rng)     # prior 64 per word
    t.process_write(addr(3), ONES, flips16(), rng)  # prior max 16
    out = t.process_write(addr(5), ONES, ONES, rng)
    assert out.classification == "miss-inserted"
    assert t.lookup(addr(3)) is None  # the weaker entry was evicted
    assert t.lookup(addr(1)) is not None
    assert t.evictions == 1


def test_lru_variant_evicts_stalest():
    t = make_imdb(n_mt=2, n_groups=2, threshold=3, disturb_limit=8, n_b=0,
                  mt_policy="lru")
    rng = Random(0)
    t.process_write(addr(1), ONES, ZEROS, rng)
    t.process_write(addr(3), ONES, ONES, rng)
    t.process_write(addr(1), ZEROS, ZEROS, rng)  # touch addr 1
    t.process_write(addr(5), ONES, ONES, rng)
    assert t.lookup(addr(3)) is None  # stalest despite higher counters
    assert t.lookup(addr(1)) is not None


def test_write_requires_old_data():
    t = make_imdb()
    with pytest.raises(ProtocolError):
        t.process_write(addr(1), None, ONES, Random(0))


def test_duplicate_entries_rejected():
    t = make_imdb(n_mt=4, n_groups=4, n_b=1)
    for slot in (0, 1):
        t.mt[slot].valid = True
        t.mt[slot].row_col = 9
    with pytest.raises(ConsistencyError):
        t.lookup(addr(9))


def test_counters_saturate():
    t = make_imdb(n_mt=4, n_groups=4, threshold=3, disturb_limit=2000, n_b=0)
    rng = Random(0)
    t.process_write(addr(3), ONES, ONES, rng)
    for _ in range(40):
        t.process_write(addr(3), ONES, ZEROS, rng)
        t.process_write(addr(3), ZEROS, ONES, rng)
    assert max(t.mt[0].zfc) <= ZFC_MAX
    assert t.mt[0].rewrite_cntr <= 255
