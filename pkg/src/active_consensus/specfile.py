"""Experiment spec files: one ``key = value`` line per simulation parameter.

Blank lines and lines starting with ``#`` are ignored. Keys are the field
names of :class:`~active_consensus.sim.SimConfig`; unknown or repeated keys
are errors, and every config invariant is checked at parse time. Optional
fields take the value ``none``.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .sim import ConfigError, SimConfig

NONE = "none"


class SpecError(ValueError):
    """Malformed or invalid experiment spec."""


def _int(text):
    return int(text, 10)


def _bool(text):
    lowered = text.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _delta(text):
    return "auto" if text == "auto" else float(text)


def _optional(convert):
    def parse(text):
        return None if text.lower() == NONE else convert(text)
    return parse


_CONVERTERS = {
    "topology": str,
    "n": _optional(_int),
    "d": _optional(_int),
    "topology_seed": _optional(_int),
    "graph_path": _optional(str),
    "scheme": str,
    "alpha": float,
    "delta": _delta,
    "epsilon": float,
    "p_fail": float,
    "seed": _int,
    "max_iters": _int,
    "replicates": _int,
    "prediction_sign": str,
    "include_own_link": _bool,
    "qp_tol": float,
    "qp_gap_tol": float,
}
KEYS = tuple(f.name for f in dataclasses.fields(SimConfig))
assert set(KEYS) == set(_CONVERTERS), "spec converters out of sync with SimConfig"


def parse_value(key: str, text: str):
    """Convert the textual value of ``key``; raises :class:`SpecError`."""
    if key not in _CONVERTERS:
        raise SpecError(f"unknown key {key!r}")
    try:
        return _CONVERTERS[key](text.strip())
    except ValueError as exc:
        raise SpecError(f"bad value for {key}: {exc}") from None


def build_config(values: dict) -> SimConfig:
    try:
        return SimConfig(**values)
    except (ConfigError, TypeError) as exc:
        raise SpecError(str(exc)) from None


def parse_spec(text: str) -> SimConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise SpecError(f"line {lineno}: expected 'key = value'")
        if key in values:
            raise SpecError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = parse_value(key, value)
        except SpecError as exc:
            raise SpecError(f"line {lineno}: {exc}") from None
    return build_config(values)


def _format_value(value) -> str:
    if value is None:
        return NONE
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_spec(config: SimConfig) -> str:
    """Spec text listing every field; ``parse_spec(format_spec(c)) == c``."""
    return "".join(f"{key} = {_format_value(getattr(config, key))}\n" for key in KEYS)


def load_spec(path) -> SimConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc}") from None
    return parse_spec(text)


def parse_grid(items) -> dict[str, list]:
    """``["alpha=0.3,0.4", ...]`` to ``{"alpha": [0.3, 0.4], ...}`` in flag order."""
    grid = {}
    for item in items or ():
        key, sep, values = item.partition("=")
        key = key.strip()
        if not sep or not values.strip():
            raise SpecError(f"grid flag {item!r} must look like key=v1,v2,...")
        if key in grid:
            raise SpecError(f"grid key {key!r} given twice")
        grid[key] = [parse_value(key, v) for v in values.split(",")]
    return grid
