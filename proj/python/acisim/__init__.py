"""Python interface to the acisim simulator.

Configs are given as INI-style text (the format read by ``acisim run``), as a
path to such a file, or omitted for the defaults; ``overrides`` maps dotted keys
(``"policy.beta"``) or bare keys to values. Results come back as dicts.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

from . import _acisim
from ._acisim import ConfigError, SchemaError, SCHEMA_VERSION, config_keys, preset_names

__all__ = [
    "ConfigError",
    "SchemaError",
    "SCHEMA_VERSION",
    "config_keys",
    "preset_names",
    "default_config",
    "resolve_config",
    "simulate",
    "run_experiment",
    "run_preset",
    "merge_reports",
    "channel_summary",
    "sample_gains",
    "outage_probability",
]

ConfigSource = Union[str, os.PathLike, None]


def _text(config: ConfigSource) -> str:
    if config is None:
        return ""
    if isinstance(config, os.PathLike) or (isinstance(config, str) and "\n" not in config and os.path.isfile(config)):
        return Path(config).read_text()
    return str(config)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def _overrides(overrides: Optional[Mapping[str, object]]) -> list:
    return [f"{k}={_fmt(v)}" for k, v in (overrides or {}).items()]


def default_config() -> str:
    """Fully resolved default config text."""
    return _acisim.default_config()


def resolve_config(config: ConfigSource = None, overrides: Optional[Mapping[str, object]] = None) -> str:
    """Parse, override and validate; returns the resolved config text."""
    return _acisim.resolve_config(_text(config), _overrides(overrides))


def simulate(config: ConfigSource = None, overrides: Optional[Mapping[str, object]] = None, *,
             seed: Optional[int] = None, label: str = "", out_dir: Optional[os.PathLike] = None) -> dict:
    """Run one replication; returns its metrics plus a stability verdict."""
    out = None if out_dir is None else Path(out_dir)
    return json.loads(_acisim.simulate(_text(config), _overrides(overrides), seed, label, out))


def run_experiment(config: ConfigSource = None, overrides: Optional[Mapping[str, object]] = None, *,
                   label: str = "", out_dir: Optional[os.PathLike] = None, threads: int = 0) -> list:
    """Run all replications of a config; returns per-replication metrics in seed order."""
    out = None if out_dir is None else Path(out_dir)
    return [json.loads(s) for s in _acisim.run_experiment(_text(config), _overrides(overrides), label, out, threads)]


def run_preset(name: str, out_dir: os.PathLike, overrides: Optional[Mapping[str, object]] = None, *,
               seed: Optional[int] = None, threads: int = 0) -> dict:
    """Run a named preset into ``out_dir``; returns its summary."""
    return json.loads(_acisim.run_preset(name, _overrides(overrides), seed, Path(out_dir), threads))


def merge_reports(dirs: Iterable[os.PathLike]) -> tuple:
    """Merge result directories; returns (summary dict, summary CSV text)."""
    summary, csv = _acisim.merge_reports([Path(d) for d in dirs])
    return json.loads(summary), csv


def channel_summary(config: ConfigSource = None, overrides: Optional[Mapping[str, object]] = None) -> dict:
    """Outage threshold h_th, coherence time and slot length for a config."""
    return json.loads(_acisim.channel_summary(_text(config), _overrides(overrides)))


def sample_gains(n: int, *, hop2_range_m: float, seed: int = 1, config: ConfigSource = None,
                 overrides: Optional[Mapping[str, object]] = None) -> list:
    """End-to-end gain samples of one link (common random numbers for a fixed seed)."""
    return _acisim.sample_gains(_text(config), _overrides(overrides), hop2_range_m, n, seed)


def outage_probability(h_th: float, n: int, *, hop2_range_m: float, seed: int = 1, config: ConfigSource = None,
                       overrides: Optional[Mapping[str, object]] = None) -> tuple:
    """Monte Carlo P(gain < h_th) and its confidence half-width."""
    return _acisim.outage_probability(_text(config), _overrides(overrides), hop2_range_m, h_th, n, seed)
