"""Run statistics, energy accounting, and the design trade-off report.

Two disturbance metrics are kept side by side: wde_raw counts physical flip
events at the media, wde_exposed counts what the host could actually observe
(divergent reads plus the end-of-run scrub). Prevention-style strategies
drive both to zero; correction-style strategies (VnC) leave wde_raw nonzero
while keeping wde_exposed at zero.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, fields

from .core import EnergyParams
from .imdb import sram_capacity

SCHEMA_VERSION = "disturbsim-report/1"

NG_BOUND = 32
NB_BOUND = 64


@dataclass
class RunStats:
    wde_raw: int = 0
    wde_exposed: int = 0
    rewrites: int = 0
    merges: int = 0
    pre_write_reads: int = 0
    media_reads: int = 0
    media_writes: int = 0
    set_pulses: int = 0
    reset_pulses: int = 0
    mt_hits: int = 0
    bb_hits: int = 0
    insertions: int = 0
    bypasses: int = 0
    evictions: int = 0
    writebacks: int = 0
    sram_searches: int = 0
    sram_accesses: int = 0
    bb_accesses: int = 0
    host_reads: int = 0
    host_writes: int = 0
    completion_time_ns: int = 0
    energy: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = {}
        for f in fields(self):
            if f.name == "energy":
                continue
            row[f.name] = getattr(self, f.name)
        for k in sorted(self.energy):
            row[f"energy_{k}"] = self.energy[k]
        return row


def energy_total(stats: RunStats, params: EnergyParams) -> dict:
    """Linear per-event energy breakdown. Inputs are configuration values
    (source=config), not extracted device numbers."""
    breakdown = {
        "pcm_read_pj": (stats.media_reads + stats.pre_write_reads)
        * params.pcm_read_pj,
        "pcm_set_pj": stats.set_pulses * params.pcm_set_pj_per_bit,
        "pcm_reset_pj": stats.reset_pulses * params.pcm_reset_pj_per_bit,
        "sram_search_pj": stats.sram_searches * params.sram_search_pj,
        "sram_access_pj": stats.sram_accesses * params.sram_access_pj,
        "bb_access_pj": stats.bb_accesses * params.bb_access_pj,
    }
    breakdown["total_pj"] = sum(breakdown.values())
    breakdown["source"] = "config"
    return breakdown


def tradeoff_report(sweep: list[tuple[dict, RunStats]]) -> list[dict]:
    """Rows of (N_mt, N_b, N_g, W, A_bits, S) for a parameter sweep.

    `sweep` pairs a descriptor dict (strategy, n_mt, n_b, n_groups, banks)
    with its run statistics. Exactly the runs labeled strategy "none" serve
    as the speedup baseline; rows breaching the design bounds are flagged,
    not dropped.
    """
    baseline = next((s for d, s in sweep if d.get("strategy") == "none"), None)
    if baseline is None:
        raise ValueError("missing baseline: sweep must include a strategy=none run")
    rows = []
    for desc, stats in sweep:
        n_mt = desc.get("n_mt", 0)
        n_b = desc.get("n_b", 0)
        n_g = desc.get("n_groups", 1)
        banks = desc.get("banks", 1)
        cap = sram_capacity(n_mt, n_b, banks)
        if stats.completion_time_ns > 0:
            speedup = baseline.completion_time_ns / stats.completion_time_ns
        else:
            speedup = 1.0
        flags = []
        if n_g > NG_BOUND:
            flags.append(f"exceeds Ng<={NG_BOUND}")
        if n_b > NB_BOUND:
            flags.append(f"exceeds Nb<={NB_BOUND}")
        rows.append({
            "strategy": desc.get("strategy", ""),
            "n_mt": n_mt,
            "n_b": n_b,
            "n_groups": n_g,
            "wde_raw": stats.wde_raw,
            "wde_exposed": stats.wde_exposed,
            "area_bits": cap["total_bits"],
            "speedup": speedup,
            "completion_time_ns": stats.completion_time_ns,
            "flags": ";".join(flags),
        })
    return rows


def emit_report(payload, fmt: str = "csv") -> str:
    """Serialize one stats row or a table of rows deterministically."""
    if isinstance(payload, RunStats):
        rows = [payload.as_row()]
    elif isinstance(payload, dict):
        rows = [payload]
    else:
        rows = list(payload)
    if fmt == "json":
        return json.dumps({"schema": SCHEMA_VERSION, "rows": rows},
                          sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# {SCHEMA_VERSION}\n")
        if rows:
            columns = list(rows[0].keys())
            writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")
