"""Line-oriented `key = value` configuration files with one section per
module, chosen for diff-friendly experiment tracking.

Example:

    [geometry]
    ranks = 1
    rows_per_bank = 64

    [run]
    strategy = imdb
    seed = 7

Unknown sections or keys are rejected. Overrides of the form
`section.key=value` apply after the file is parsed.
"""

from __future__ import annotations

from fractions import Fraction

from .core import EnergyParams, Geometry, SimConfig


class ConfigError(ValueError):
    pass


# section -> key -> (target SimConfig/Geometry/EnergyParams field, parser)
def _int(s): return int(s, 0)


def _prob(s) -> Fraction:
    if "/" in s:
        num, den = s.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(s)


def _bool(s):
    if s.lower() in ("true", "yes", "1", "on"):
        return True
    if s.lower() in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


_SCHEMA = {
    "geometry": {
        "ranks": _int,
        "banks_per_rank": _int,
        "rows_per_bank": _int,
        "cols_per_row": _int,
    },
    "timing": {
        "read_ns": _int,
        "set_ns": _int,
        "reset_ns": _int,
        "controller_clock_hz": _int,
    },
    "media": {
        "disturb_limit": _int,
        "initial_fill": str,
    },
    "imdb": {
        "threshold": _int,
        "insert_prob": _prob,
        "n_mt": _int,
        "n_b": _int,
        "n_groups": _int,
        "prior_knowledge": _bool,
        "mt_policy": str,
        "hit_cycles": _int,
    },
    "siwc": {
        "entries": _int,
        "q_insert": _prob,
        "q_evict": _prob,
    },
    "run": {
        "strategy": str,
        "seed": _int,
        "queue_depth": _int,
        "drain_low_watermark": _int,
    },
    "energy": {
        "pcm_read_pj": float,
        "pcm_set_pj_per_bit": float,
        "pcm_reset_pj_per_bit": float,
        "sram_search_pj": float,
        "sram_access_pj": float,
        "bb_access_pj": float,
    },
}

# config key -> SimConfig field name, where they differ
_RENAMES = {
    ("siwc", "entries"): "siwc_entries",
    ("siwc", "q_insert"): "siwc_q_insert",
    ("siwc", "q_evict"): "siwc_q_evict",
}


def parse_config_text(text: str, overrides: list[str] | None = None) -> SimConfig:
    values: dict[tuple[str, str], object] = {}
    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"line {line_no}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected `key = value`")
        if section is None:
            raise ConfigError(f"line {line_no}: key outside any section")
        key, value = (part.strip() for part in line.split("=", 1))
        _store(values, section, key, value, f"line {line_no}")
    for ov in overrides or []:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r}: expected section.key=value")
        path, value = ov.split("=", 1)
        if "." not in path:
            raise ConfigError(f"override {ov!r}: expected section.key=value")
        sec, key = path.strip().split(".", 1)
        if sec not in _SCHEMA:
            raise ConfigError(f"override {ov!r}: unknown section {sec!r}")
        _store(values, sec, key.strip(), value.strip(), f"override {ov!r}")
    return _build(values)


def _store(values, section, key, value, where):
    keys = _SCHEMA[section]
    if key not in keys:
        raise ConfigError(f"{where}: unknown key {key!r} in section [{section}]")
    try:
        values[(section, key)] = keys[key](value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{where}: bad value for {section}.{key}: {exc}") from exc


def _build(values: dict) -> SimConfig:
    def section_kwargs(section):
        out = {}
        for (sec, key), v in values.items():
            if sec == section:
                out[_RENAMES.get((sec, key), key)] = v
        return out

    kwargs = {}
    geo = section_kwargs("geometry")
    if geo:
        kwargs["geometry"] = Geometry(**geo)
    energy = section_kwargs("energy")
    if energy:
        kwargs["energy"] = EnergyParams(**energy)
    for sec in ("timing", "media", "imdb", "siwc", "run"):
        kwargs.update(section_kwargs(sec))
    try:
        return SimConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str, overrides: list[str] | None = None) -> SimConfig:
    with open(path) as fh:
        return parse_config_text(fh.read(), overrides)
