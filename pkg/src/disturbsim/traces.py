"""Trace file format, parser, and synthetic workload generators.

One record per line: `<time_ns> <R|W> 0x<addr_hex> [0x<128 hex chars>]`.
Times are non-decreasing, `#` starts a comment, write records carry a full
512-bit payload. A `.gz` suffix is handled transparently by the file
helpers. The text format is chosen over binary for diff-ability.
"""

from __future__ import annotations

import gzip
from dataclasses import dataclass
from random import Random

from .core import (LINE_BITS, LINE_BYTES, WORD_BITS, DataLine, Geometry,
                   LineAddress, compose_address)

_HEX_CHARS = LINE_BITS // 4  # 128


class TraceParseError(ValueError):
    def __init__(self, line_no: int, column: int, message: str):
        super().__init__(f"line {line_no}, column {column}: {message}")
        self.line_no = line_no
        self.column = column


@dataclass(frozen=True)
class TraceRecord:
    time: int  # ns
    op: str    # "R" | "W"
    byte_addr: int
    data: DataLine | None = None  # present iff op == "W"

    def format(self) -> str:
        if self.op == "W":
            return f"{self.time} W {self.byte_addr:#x} 0x{self.data.to_hex()}"
        return f"{self.time} R {self.byte_addr:#x}"


def _field_column(line: str, index: int) -> int:
    """1-based column where whitespace-separated field `index` starts."""
    fields_seen = -1
    in_field = False
    for col, ch in enumerate(line):
        if ch.isspace():
            in_field = False
        elif not in_field:
            in_field = True
            fields_seen += 1
            if fields_seen == index:
                return col + 1
    return len(line) + 1


def parse_trace(source) -> list[TraceRecord]:
    """Strictly parse a trace from a text stream or an iterable of lines."""
    records = []
    last_time = None
    for line_no, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()

        def err(index, message):
            raise TraceParseError(line_no, _field_column(raw, index), message)

        if len(parts) < 3:
            err(0, "expected `<time> <R|W> <addr> [<data>]`")
        try:
            t = int(parts[0])
        except ValueError:
            err(0, f"malformed time {parts[0]!r}")
        if t < 0:
            err(0, "time must be non-negative")
        if last_time is not None and t < last_time:
            err(0, f"decreasing time {t} after {last_time}")
        op = parts[1]
        if op not in ("R", "W"):
            err(1, f"unknown op {op!r}")
        try:
            addr = int(parts[2], 16)
        except ValueError:
            err(2, f"malformed hex address {parts[2]!r}")
        if addr < 0:
            err(2, "address must be non-negative")
        data = None
        if op == "W":
            if len(parts) < 4:
                err(2, "missing write data")
            word = parts[3]
            body = word[2:] if word.lower().startswith("0x") else word
            if len(body) != _HEX_CHARS:
                err(3, f"write data must be {_HEX_CHARS} hex chars, got {len(body)}")
            try:
                data = DataLine.from_hex(body)
            except ValueError:
                err(3, f"malformed hex data {word!r}")
            if len(parts) > 4:
                err(4, "trailing fields after write data")
        elif len(parts) > 3:
            err(3, "trailing fields after read record")
        last_time = t
        records.append(TraceRecord(t, op, addr, data))
    return records


def emit_trace(records) -> str:
    return "".join(r.format() + "\n" for r in records)


def _open_text(path: str, mode: str):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode + "t")
    return open(path, mode)


def write_trace_file(records, path: str) -> None:
    with _open_text(path, "w") as fh:
        fh.write(emit_trace(records))


def read_trace_file(path: str) -> list[TraceRecord]:
    with _open_text(path, "r") as fh:
        return parse_trace(fh)


# -- generators ----------------------------------------------------------


def gen_hammer(target: int, rounds: int, gap_ns: int = 10) -> list[TraceRecord]:
    """Alternate full-ones / full-zeros writes to one line. Every all-zeros
    write delivers one RESET pulse per bit to the adjacent wordlines."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    records = []
    t = 0
    for _ in range(rounds):
        records.append(TraceRecord(t, "W", target, DataLine.all_ones()))
        t += gap_ns
        records.append(TraceRecord(t, "W", target, DataLine.all_zeros()))
        t += gap_ns
    return records


def _noise_line(rng: Random, zero_bits: int = 2) -> DataLine:
    words = [(1 << WORD_BITS) - 1] * 8
    for b in rng.sample(range(LINE_BITS), zero_bits):
        words[b // WORD_BITS] &= ~(1 << (b % WORD_BITS))
    return DataLine(tuple(words))


def gen_slow_flip(victims: int, interleave: int, rounds: int, rng: Random,
                  g: Geometry = Geometry(), gap_ns: int = 10,
                  subset_bits: int = 16) -> list[TraceRecord]:
    """Slow-and-gradual aggressor pattern with table-pressure noise.

    Aggressors sit on odd rows of column 0 (their even-row neighbors stay
    idle). Each aggressor owns two disjoint bit subsets of word 1 and
    alternates which one is zeroed, so every write flips `subset_bits` ones
    to zeros: counting entries accumulate steadily, and each idle neighbor
    cell under a subset collects one pulse every two rounds. Because the
    zeroed cells are reprogrammed every round, the aggressor lines never sit
    idle at zero. Entries inserted with prior knowledge start `subset_bits`
    ahead of the noise writes; without it they start level with the noise
    and are churned out before triggering.

    Noise writes pressure the same bank's table from the upper half of the
    columns, far from the victim strip, and each noise line always carries
    the same fixed mostly-ones payload: repeat writes program nothing, so
    the noise contributes table traffic but no disturbance of its own.

    Run with `rows_per_bank == 2*victims + 1` the victim strip reaches the
    top of the bank and even the outermost rewrite has no idle row beyond
    it to disturb.
    """
    if rounds == 0 or victims == 0:
        return []
    if 2 * victims + 1 > g.rows_per_bank:
        raise ValueError("geometry too small for the requested victim count")
    if g.cols_per_row < 2:
        raise ValueError("need at least two columns (noise lives in the upper half)")
    if not 1 <= 2 * subset_bits <= WORD_BITS:
        raise ValueError("need 1 <= 2*subset_bits <= 64")
    ones = (1 << WORD_BITS) - 1
    aggressors = []
    for v in range(victims):
        addr = compose_address(LineAddress(0, 0, 2 * v + 1, 0), g)
        picks = rng.sample(range(WORD_BITS), 2 * subset_bits)
        variants = []
        for subset in (picks[:subset_bits], picks[subset_bits:]):
            word1 = ones
            for b in subset:
                word1 &= ~(1 << b)
            variants.append(DataLine((ones, word1) + (ones,) * 6))
        aggressors.append((addr, variants[0], variants[1]))

    noise_cols = range(g.cols_per_row // 2, g.cols_per_row)
    noise_payload = {}
    records = []
    t = 0
    for r in range(rounds):
        for addr, flipped, restored in aggressors:
            data = flipped if r % 2 == 0 else restored
            records.append(TraceRecord(t, "W", addr, data))
            t += gap_ns
            for _ in range(interleave):
                row = rng.randrange(g.rows_per_bank)
                col = rng.choice(noise_cols)
                naddr = compose_address(LineAddress(0, 0, row, col), g)
                if naddr not in noise_payload:
                    noise_payload[naddr] = _noise_line(rng)
                records.append(TraceRecord(t, "W", naddr, noise_payload[naddr]))
                t += gap_ns
    return records


def gen_synthetic(kind: str, n: int, rng: Random,
                  g: Geometry = Geometry(), gap_ns: int = 10,
                  write_fraction: float = 0.7) -> list[TraceRecord]:
    """Synthetic access-shape workloads: iid uniform, 90/10 hotspot, or a
    persistent-structure proxy mixing fresh sequential allocations with hot
    header updates."""
    records = []
    t = 0

    def random_line() -> int:
        return rng.randrange(g.total_lines) * LINE_BYTES

    def random_data() -> DataLine:
        return DataLine(tuple(rng.getrandbits(WORD_BITS) for _ in range(8)))

    if kind == "uniform":
        for _ in range(n):
            addr = random_line()
            if rng.random() < write_fraction:
                records.append(TraceRecord(t, "W", addr, random_data()))
            else:
                records.append(TraceRecord(t, "R", addr))
            t += gap_ns
    elif kind == "hotspot":
        hot_count = max(1, g.total_lines // 10)
        hot = [rng.randrange(g.total_lines) * LINE_BYTES for _ in range(min(hot_count, 4096))]
        for _ in range(n):
            if rng.random() < 0.9:
                addr = rng.choice(hot)
            else:
                addr = random_line()
            if rng.random() < write_fraction:
                records.append(TraceRecord(t, "W", addr, random_data()))
            else:
                records.append(TraceRecord(t, "R", addr))
            t += gap_ns
    elif kind == "pmix-proxy":
        next_fresh = 0
        headers = [random_line() for _ in range(8)]
        header_state = {h: random_data() for h in headers}
        for _ in range(n):
            roll = rng.random()
            if roll < 0.4:
                # node allocation: sequential fresh lines
                addr = (next_fresh % g.total_lines) * LINE_BYTES
                next_fresh += 1
                records.append(TraceRecord(t, "W", addr, random_data()))
            elif roll < 0.8:
                # hot header update with small bit churn
                h = rng.choice(headers)
                cur = list(header_state[h].words)
                for _ in range(4):
                    b = rng.randrange(LINE_BITS)
                    cur[b // WORD_BITS] ^= 1 << (b % WORD_BITS)
                header_state[h] = DataLine(tuple(cur))
                records.append(TraceRecord(t, "W", h, header_state[h]))
            else:
                records.append(TraceRecord(t, "R", rng.choice(headers)))
            t += gap_ns
    else:
        raise ValueError(f"unknown synthetic kind {kind!r}")
    return records
