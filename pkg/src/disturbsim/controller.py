"""Discrete-event media controller: queues, priority scheduling, pre-write
read preparation, rewrite merging, write draining, and bank timing.

Scheduling is priority-classed FCFS: Rewrite > HostRead > PreWriteRead >
(HostWrite | Writeback), with one exception: once a write queue fills, its
prepared writes drain ahead of pre-write reads until occupancy falls to the
low watermark. Host writes are held unprepared until their pre-write read
returns the old line contents. The run is fully deterministic for a given
(config, trace, seed).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from random import Random

from .baselines import SiwcCache, vnc_wrap_write
from .core import (ConsistencyError, DataLine, LineAddress, RangeError,
                   SimConfig, decompose_address)
from .imdb import Imdb
from .media import CellArray, WriteMode, WriteOutcome, write_latency
from .metrics import RunStats, energy_total
from .traces import TraceRecord


class CommandKind(enum.Enum):
    HOST_READ = "host-read"
    HOST_WRITE = "host-write"
    PRE_WRITE_READ = "pre-write-read"
    REWRITE = "rewrite"
    WRITEBACK = "writeback"


@dataclass
class Command:
    kind: CommandKind
    addr: LineAddress
    data: DataLine | None = None
    mode: WriteMode = WriteMode.DIFFERENTIAL
    prepared: bool = False
    old_data: DataLine | None = None
    enqueue_time: int = 0
    seq: int = 0
    paired: "Command | None" = None  # write awaiting this pre-write read


WRITE_KINDS = (CommandKind.HOST_WRITE, CommandKind.WRITEBACK)


@dataclass
class _Bank:
    read_q: list = field(default_factory=list)
    write_q: list = field(default_factory=list)
    busy_until: int = 0
    draining: bool = False


class TraceAbort(RuntimeError):
    """A trace record could not be applied (bad address); names the record."""

    def __init__(self, record_no: int, message: str):
        super().__init__(f"record {record_no}: {message}")
        self.record_no = record_no


class Engine:
    def __init__(self, cfg: SimConfig, trace: list[TraceRecord]):
        self.cfg = cfg
        self.trace = trace
        self.media = CellArray(cfg)
        self.rng = Random(cfg.seed)
        self.stats = RunStats()
        g = cfg.geometry
        self.banks = [_Bank() for _ in range(g.num_banks)]
        self.imdbs = None
        self.siwcs = None
        if cfg.strategy == "imdb":
            self.imdbs = [Imdb(cfg, r, b)
                          for r in range(g.ranks)
                          for b in range(g.banks_per_rank)]
        elif cfg.strategy == "siwc":
            self.siwcs = [SiwcCache(cfg, r, b)
                          for r in range(g.ranks)
                          for b in range(g.banks_per_rank)]
        self._seq = 0
        self._admitted = 0
        self._serviced = 0
        self._end_time = 0

    # -- helpers -------------------------------------------------------------

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _bank_index(self, addr: LineAddress) -> int:
        return addr.bank_index(self.cfg.geometry)

    def _imdb(self, addr: LineAddress) -> Imdb:
        return self.imdbs[self._bank_index(addr)]

    def _siwc(self, addr: LineAddress) -> SiwcCache:
        return self.siwcs[self._bank_index(addr)]

    # -- admission -----------------------------------------------------------

    def submit(self, record: TraceRecord, record_no: int, now: int) -> bool:
        """Admit one trace record. Returns False on backpressure."""
        try:
            addr = decompose_address(record.byte_addr, self.cfg.geometry)
        except RangeError as exc:
            raise TraceAbort(record_no, str(exc)) from exc
        bank = self.banks[self._bank_index(addr)]

        if record.op == "R":
            # Backpressure is checked first so a retried record never
            # re-runs strategy side effects.
            if len(bank.read_q) >= self.cfg.queue_depth:
                return False
            served = None
            if self.imdbs is not None:
                self.stats.sram_searches += 1
                served = self._imdb(addr).process_read(addr)
                if served is not None:
                    self.stats.bb_hits += 1
                    self.stats.bb_accesses += 1
            elif self.siwcs is not None:
                served = self._siwc(addr).process_read(addr)
            self.stats.host_reads += 1
            if served is not None:
                return True
            cmd = Command(CommandKind.HOST_READ, addr, enqueue_time=now,
                          seq=self._next_seq(), prepared=True)
            bank.read_q.append(cmd)
            self._admitted += 1
            return True

        if (len(bank.write_q) >= self.cfg.queue_depth
                or len(bank.read_q) >= self.cfg.queue_depth):
            return False

        # write admission: the strategy may consume it outright
        if self.imdbs is not None:
            self.stats.sram_searches += 1
            if self._imdb(addr).try_absorb(addr, record.data):
                self.stats.host_writes += 1
                self.stats.bb_hits += 1
                self.stats.bb_accesses += 1
                return True
        elif self.siwcs is not None:
            out = self._siwc(addr).process_write(addr, record.data, self.rng)
            if out.writeback is not None:
                wb_addr, wb_data = out.writeback
                self.stats.evictions += 1
                self._enqueue_writeback(wb_addr, wb_data, now)
            if out.absorbed:
                self.stats.host_writes += 1
                return True
        write = Command(CommandKind.HOST_WRITE, addr, data=record.data,
                        enqueue_time=now, seq=self._next_seq())
        pre = Command(CommandKind.PRE_WRITE_READ, addr, enqueue_time=now,
                      seq=self._next_seq(), prepared=True, paired=write)
        bank.write_q.append(write)
        bank.read_q.append(pre)
        self._admitted += 2
        self.stats.host_writes += 1
        return True

    def _enqueue_writeback(self, addr: LineAddress, data: DataLine,
                           now: int) -> None:
        """Internal command; bypasses admission backpressure. Like rewrites,
        writebacks are maintenance traffic and skip the counting tables, so
        evictions can never re-trigger themselves."""
        bank = self.banks[self._bank_index(addr)]
        wb = Command(CommandKind.WRITEBACK, addr, data=data, enqueue_time=now,
                     seq=self._next_seq(), prepared=True)
        bank.write_q.append(wb)
        self._admitted += 1
        self.stats.writebacks += 1

    # -- rewrite merging -------------------------------------------------------

    def merge_rewrite(self, addr: LineAddress, now: int) -> bool:
        """Coalesce a freshly generated rewrite with queued writes to the
        same line; otherwise enqueue it (data comes from the intended shadow
        at service time)."""
        bank = self.banks[self._bank_index(addr)]
        for cmd in bank.write_q:
            if cmd.addr == addr:
                if cmd.kind in WRITE_KINDS:
                    cmd.mode = WriteMode.FULL  # latest data retained
                self.stats.merges += 1
                return True
        cmd = Command(CommandKind.REWRITE, addr, mode=WriteMode.FULL,
                      enqueue_time=now, seq=self._next_seq(), prepared=True)
        bank.write_q.append(cmd)
        self._admitted += 1
        return False

    # -- scheduling ------------------------------------------------------------

    def next_command(self, bank: _Bank, now: int) -> Command | None:
        if len(bank.write_q) >= self.cfg.queue_depth:
            bank.draining = True
        if bank.draining and len(bank.write_q) <= self.cfg.drain_watermark:
            bank.draining = False

        rewrite = next((c for c in bank.write_q
                        if c.kind is CommandKind.REWRITE), None)
        if rewrite is not None:
            return rewrite
        host_read = next((c for c in bank.read_q
                          if c.kind is CommandKind.HOST_READ), None)
        if host_read is not None:
            return host_read
        ready_write = next((c for c in bank.write_q if c.prepared), None)
        if bank.draining and ready_write is not None:
            return ready_write
        pre = next((c for c in bank.read_q
                    if c.kind is CommandKind.PRE_WRITE_READ
                    and self._pwr_ready(bank, c)), None)
        if pre is not None:
            return pre
        return ready_write

    @staticmethod
    def _pwr_ready(bank: _Bank, pre: Command) -> bool:
        """A pre-write read must observe every older write to its line, or
        the paired write would count flips against stale contents."""
        return not any(c.seq < pre.seq and c.addr == pre.addr
                       and c is not pre.paired
                       for c in bank.write_q)

    # -- service ---------------------------------------------------------------

    def _account_media_write(self, out: WriteOutcome) -> None:
        self.stats.media_writes += 1
        self.stats.set_pulses += out.set_pulses
        self.stats.reset_pulses += out.reset_pulses
        self.stats.wde_raw += len(out.wde_events)

    def _service(self, bank: _Bank, cmd: Command, now: int) -> None:
        if cmd.kind in (CommandKind.HOST_READ, CommandKind.PRE_WRITE_READ):
            bank.read_q.remove(cmd)
        else:
            bank.write_q.remove(cmd)
        self._serviced += 1

        if cmd.kind is CommandKind.HOST_READ:
            data = self.media.read_line(cmd.addr)
            self.stats.media_reads += 1
            if data.to_int() != self.media.intended_line(cmd.addr).to_int():
                self.stats.wde_exposed += 1
            latency = self.cfg.read_ns
        elif cmd.kind is CommandKind.PRE_WRITE_READ:
            self.stats.pre_write_reads += 1
            cmd.paired.prepared = True
            cmd.paired.old_data = self.media.read_line(cmd.addr)
            latency = self.cfg.read_ns
        else:
            latency = self._service_write(cmd, now)

        finish = now + latency
        bank.busy_until = finish
        if finish > self._end_time:
            self._end_time = finish

    def _service_write(self, cmd: Command, now: int) -> int:
        cfg = self.cfg
        if cmd.kind is CommandKind.REWRITE:
            # The device fetches the line's intended contents and rewrites
            # all bits. Rewrites are restorative maintenance traffic: they
            # bypass the tables, so they can never trigger further rewrites
            # and the rewrite volume stays bounded by host activity.
            cmd.data = self.media.intended_line(cmd.addr)
            out = self.media.apply_write(cmd.addr, cmd.data, cmd.mode)
            self._account_media_write(out)
            return cfg.read_ns + out.latency_ns

        if cfg.strategy == "vnc" and cmd.kind is CommandKind.HOST_WRITE:
            out, strat = vnc_wrap_write(self.media, cmd.addr, cmd.data, cfg)
            self.stats.media_reads += len(strat.extra_reads)
            self._account_media_write(out)
            self.stats.media_writes += len(strat.extra_writes)
            return out.latency_ns

        occupancy_ns = 0
        absorbed = False
        if self.imdbs is not None and cmd.kind is CommandKind.HOST_WRITE:
            imdb = self._imdb(cmd.addr)
            self.stats.sram_searches += 1
            self.stats.sram_accesses += 1
            res = imdb.process_write(cmd.addr, cmd.old_data, cmd.data, self.rng)
            occupancy_ns = cfg.cycles_to_ns(res.occupancy_cycles)
            absorbed = res.absorbed
            if res.classification == "mt-hit":
                self.stats.mt_hits += 1
            elif res.classification == "bb-hit":
                self.stats.bb_hits += 1
                self.stats.bb_accesses += 1
            elif res.classification == "miss-inserted":
                self.stats.insertions += 1
            else:
                self.stats.bypasses += 1
            if res.rewrites:
                self.stats.rewrites += len(res.rewrites)
                for target in res.rewrites:
                    self.merge_rewrite(target, now)
            if res.writeback is not None:
                wb_addr, wb_data = res.writeback
                self.stats.evictions += 1
                self._enqueue_writeback(wb_addr, wb_data, now)

        if absorbed:
            return max(occupancy_ns, 1)

        out = self.media.apply_write(cmd.addr, cmd.data, cmd.mode)
        self._account_media_write(out)
        return occupancy_ns + out.latency_ns

    # -- main loop ---------------------------------------------------------------

    def run(self) -> RunStats:
        records = self.trace
        n = len(records)
        i = 0
        now = 0
        while True:
            while i < n and records[i].time <= now:
                if self.submit(records[i], i, now):
                    i += 1
                else:
                    break
            issued = False
            for bank in self.banks:
                if bank.busy_until <= now and (bank.read_q or bank.write_q):
                    cmd = self.next_command(bank, now)
                    if cmd is not None:
                        self._service(bank, cmd, now)
                        issued = True
            if issued:
                continue
            candidates = []
            if i < n:
                if records[i].time > now:
                    candidates.append(records[i].time)
                else:
                    # backpressured: the target bank must drain first
                    addr = decompose_address(records[i].byte_addr, self.cfg.geometry)
                    b = self.banks[self._bank_index(addr)]
                    if b.busy_until > now:
                        candidates.append(b.busy_until)
            for bank in self.banks:
                if (bank.read_q or bank.write_q) and bank.busy_until > now:
                    candidates.append(bank.busy_until)
            if not candidates:
                break
            now = min(candidates)

        if i < n or any(b.read_q or b.write_q for b in self.banks):
            raise ConsistencyError("engine stalled with unserviceable commands")

        return self._finalize()

    def _finalize(self) -> RunStats:
        stats = self.stats
        stats.completion_time_ns = self._end_time
        stats.wde_exposed += len(self.media.scrub_divergence())
        if self.imdbs is not None:
            stats.evictions += sum(t.evictions for t in self.imdbs)
        stats.energy = energy_total(stats, self.cfg.energy)
        return stats

    # exposed for queue-conservation checks
    @property
    def conservation(self) -> tuple[int, int, int]:
        return (self._admitted, self._serviced, self.stats.merges)


def run_to_completion(cfg: SimConfig, trace: list[TraceRecord]) -> RunStats:
    """Run a trace to completion; deterministic for (config, trace, seed)."""
    return Engine(cfg, trace).run()
