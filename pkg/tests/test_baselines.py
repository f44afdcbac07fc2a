from fractions import Fraction
from random import Random

import pytest

from disturbsim.baselines import SiwcCache, siwc_entry_count, vnc_wrap_write
from disturbsim.core import DataLine, LineAddress
from disturbsim.media import CellArray, WriteMode
from helpers import make_cfg

ONES = DataLine.all_ones()
ZEROS = DataLine.all_zeros()
A = LineAddress(0, 0, 3, 0)


def hammer(media, target, rounds):
    for _ in range(rounds):
        media.apply_write(target, ONES, WriteMode.DIFFERENTIAL)
        media.apply_write(target, ZEROS, WriteMode.DIFFERENTIAL)


def test_vnc_detects_and_corrects_disturbance():
    cfg = make_cfg(strategy="vnc", initial_fill="zeros", disturb_limit=3,
                   threshold=1)
    media = CellArray(cfg)
    hammer(media, A, 2)  # neighbors at 2 of 3 pulses
    media.apply_write(A, ONES, WriteMode.DIFFERENTIAL)
    out, strat = vnc_wrap_write(media, A, ZEROS, cfg)
    # the write itself pushes neighbors over the limit; VnC repairs them
    assert len(out.wde_events) == 2 * 512
    assert media.scrub_divergence() == []
    corrected = {a for a, _, _ in strat.extra_writes}
    assert corrected == {LineAddress(0, 0, 2, 0), LineAddress(0, 0, 4, 0)}


def test_vnc_reads_neighbors_before_and_after():
    cfg = make_cfg(strategy="vnc", initial_fill="ones")
    media = CellArray(cfg)
    out, strat = vnc_wrap_write(media, A, ZEROS, cfg)
    # two pre-reads plus two verification reads, no divergence to fix
    assert len(strat.extra_reads) == 4
    assert strat.extra_writes == []
    assert out.latency_ns == 4 * cfg.read_ns + cfg.reset_ns


def test_vnc_cascading_corrections_converge():
    cfg = make_cfg(strategy="vnc", initial_fill="zeros", disturb_limit=3,
                   threshold=1)
    media = CellArray(cfg)
    b = LineAddress(0, 0, 6, 0)
    hammer(media, A, 2)
    hammer(media, b, 2)  # rows 5 and 7 now sit at 2 of 3 pulses
    media.apply_write(A, ONES, WriteMode.DIFFERENTIAL)
    out, strat = vnc_wrap_write(media, A, ZEROS, cfg)
    # correcting row 4 pulses row 5 over the limit; VnC chases that too
    corrected = {a for a, _, _ in strat.extra_writes}
    assert LineAddress(0, 0, 5, 0) in corrected
    assert len(out.wde_events) == 3 * 512
    assert media.scrub_divergence() == []


def test_siwc_hit_absorbs():
    cfg = make_cfg(siwc_entries=4, siwc_q_insert=Fraction(1))
    cache = SiwcCache(cfg, 0, 0)
    rng = Random(0)
    assert cache.process_write(A, ONES, rng).absorbed
    out = cache.process_write(A, ZEROS, rng)
    assert out.absorbed and out.writeback is None
    assert cache.process_read(A) == ZEROS
    assert cache.occupancy() == 1


def test_siwc_insert_coin():
    cfg = make_cfg(siwc_entries=4, siwc_q_insert=Fraction(0))
    cache = SiwcCache(cfg, 0, 0)
    out = cache.process_write(A, ONES, Random(0))
    assert not out.absorbed
    assert cache.occupancy() == 0


def test_siwc_eviction_writes_back():
    cfg = make_cfg(siwc_entries=2, siwc_q_insert=Fraction(1),
                   siwc_q_evict=Fraction(1))
    cache = SiwcCache(cfg, 0, 0)
    rng = Random(0)
    lines = [LineAddress(0, 0, r, 0) for r in range(3)]
    for a in lines:
        out = cache.process_write(a, ONES, rng)
        assert out.absorbed
    assert out.writeback is not None
    wb_addr, wb_data = out.writeback
    assert wb_addr in lines[:2] and wb_data == ONES
    assert cache.occupancy() == 2


def test_siwc_eviction_coin_can_refuse():
    cfg = make_cfg(siwc_entries=1, siwc_q_insert=Fraction(1),
                   siwc_q_evict=Fraction(0))
    cache = SiwcCache(cfg, 0, 0)
    rng = Random(0)
    assert cache.process_write(A, ONES, rng).absorbed
    out = cache.process_write(LineAddress(0, 0, 5, 0), ZEROS, rng)
    assert not out.absorbed and out.writeback is None


def test_siwc_entry_count_parities():
    assert siwc_entry_count(256, 8) == 264
    assert siwc_entry_count(256, 8, "size") == (256 * 108 + 8 * 553) // 553
    with pytest.raises(ValueError):
        siwc_entry_count(1, 1, "weight")
