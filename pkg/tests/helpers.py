"""Shared builders for the test suite."""

from fractions import Fraction
from random import Random

from disturbsim.core import LINE_BYTES, DataLine, Geometry, SimConfig

TINY = Geometry(ranks=1, banks_per_rank=1, rows_per_bank=8, cols_per_row=1)


def make_cfg(**kw) -> SimConfig:
    kw.setdefault("geometry", TINY)
    kw.setdefault("disturb_limit", 8)
    kw.setdefault("threshold", min(3, (kw["disturb_limit"] - 1) // 2))
    kw.setdefault("insert_prob", Fraction(1))
    kw.setdefault("n_mt", 8)
    kw.setdefault("n_b", 2)
    kw.setdefault("n_groups", 8)
    kw.setdefault("initial_fill", "zeros")
    return SimConfig(**kw)


def random_line(rng: Random) -> DataLine:
    return DataLine(tuple(rng.getrandbits(64) for _ in range(8)))


def line_with_zeros(rng: Random, zero_bits: int) -> DataLine:
    words = [(1 << 64) - 1] * 8
    for b in rng.sample(range(512), zero_bits):
        words[b // 64] &= ~(1 << (b % 64))
    return DataLine(tuple(words))


def addr_bytes(row: int, col: int = 0, g: Geometry = TINY) -> int:
    from disturbsim.core import LineAddress, compose_address
    return compose_address(LineAddress(0, 0, row, col), g)
