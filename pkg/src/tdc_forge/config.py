"""Run configuration documents (JSON) and their mapping onto TdcConfig.

Times are strings with an explicit unit (``"1.25ns"``); frequencies are
numbers in Hz or strings such as ``"800MHz"``.  Unknown keys are errors.
Example::

    {
      "f_clk": "800MHz",
      "coarse_width": 35,
      "fine": {"n_lines": 4, "taps_per_line": 20, "cell_delay": "62.5ps"},
      "sensor": {"alpha": 1000, "r_min": 100, "r_max": 1e6, "points": 10, "spacing": "log"},
      "characterization": {"samples": 100000, "seed": 7, "tin": "100ns"}
    }
"""

import json
import os
import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any, Optional

from .dtdc import TdcConfig
from .errors import InvalidConfig
from .fine import FineTdcConfig
from .timebase import format_time, parse_time

ENV_VAR = "TDC_FORGE_CONFIG"

_FREQ_UNITS = {"hz": 1, "khz": 10**3, "mhz": 10**6, "ghz": 10**9}
_FREQ_RE = re.compile(r"^\s*([0-9.eE+-]+)\s*([kKmMgG]?[hH][zZ])\s*$")

FINE_KEYS = {
    "n_lines": int,
    "taps_per_line": int,
    "cell_delay": "time",
    "line_offset": "time",
    "counter_width": int,
    "adder_width": int,
    "tap_perturbations": "times",
    "perturbation_sigma": "time",
    "perturbation_seed": int,
}
TOP_KEYS = {"f_clk", "t_clk", "coarse_width", "fine", "sensor", "characterization"}
SENSOR_KEYS = {"alpha": float, "r_min": float, "r_max": float, "points": int, "spacing": str, "start": "time"}
CHAR_KEYS = {
    "mode": str,
    "start": "time",
    "tin": "time",
    "t_min": "time",
    "t_max": "time",
    "step": "time",
    "phase": "time",
    "samples": int,
    "seed": int,
    "top_name": str,
}


def parse_frequency(value) -> Decimal:
    if isinstance(value, bool):
        raise InvalidConfig(f"bad frequency {value!r}")
    if isinstance(value, (int, float)):
        f = Decimal(repr(value)) if isinstance(value, float) else Decimal(value)
    else:
        m = _FREQ_RE.match(str(value))
        if not m:
            raise InvalidConfig(f"cannot parse frequency {value!r}; expected e.g. 800000000 or '800MHz'")
        f = Decimal(m.group(1)) * _FREQ_UNITS[m.group(2).lower()]
    if f <= 0:
        raise InvalidConfig(f"frequency must be positive, got {value!r}")
    return f


def _coerce(section: str, key: str, kind, value):
    try:
        if kind == "time":
            return parse_time(value)
        if kind == "times":
            if not isinstance(value, list):
                raise ValueError("expected a list of time strings")
            return tuple(parse_time(v) for v in value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError("expected an integer")
            return value
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError("expected a number")
            return float(value)
        if kind is str:
            if not isinstance(value, str):
                raise ValueError("expected a string")
            return value
    except ValueError as exc:
        raise InvalidConfig(f"{section}.{key}: {exc}") from None
    raise AssertionError(kind)


def _section(doc: dict, name: str, schema: dict) -> dict:
    if not isinstance(doc, dict):
        raise InvalidConfig(f"{name} must be a JSON object")
    unknown = sorted(set(doc) - set(schema))
    if unknown:
        raise InvalidConfig(f"unknown key(s) in {name}: {', '.join(unknown)}")
    return {k: _coerce(name, k, schema[k], v) for k, v in doc.items()}


@dataclass
class RunConfig:
    """Everything a CLI run can be parameterised by; unset means default."""

    f_clk: Optional[Decimal] = None
    t_clk: Optional[int] = None
    coarse_width: Optional[int] = None
    fine: dict = field(default_factory=dict)
    sensor: dict = field(default_factory=dict)
    characterization: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise InvalidConfig("config document must be a JSON object")
        unknown = sorted(set(doc) - TOP_KEYS)
        if unknown:
            raise InvalidConfig(f"unknown key(s) in config: {', '.join(unknown)}")
        rc = cls()
        if "f_clk" in doc:
            rc.f_clk = parse_frequency(doc["f_clk"])
        if "t_clk" in doc:
            rc.t_clk = _coerce("config", "t_clk", "time", doc["t_clk"])
        if "coarse_width" in doc:
            rc.coarse_width = _coerce("config", "coarse_width", int, doc["coarse_width"])
        rc.fine = _section(doc.get("fine", {}), "fine", FINE_KEYS)
        rc.sensor = _section(doc.get("sensor", {}), "sensor", SENSOR_KEYS)
        rc.characterization = _section(doc.get("characterization", {}), "characterization", CHAR_KEYS)
        return rc

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(doc)

    def tdc_config(self) -> TdcConfig:
        """Resolve into a TdcConfig.

        Without an explicit ``cell_delay`` one line spans one clock period
        (``t_clk // taps_per_line``); without ``line_offset`` lines are spread
        across one cell (``cell_delay // n_lines``).
        """
        kw: dict[str, Any] = {}
        if self.t_clk is not None:
            kw["t_clk"] = self.t_clk
        elif self.f_clk is not None:
            kw["f_clk"] = self.f_clk
        if self.coarse_width is not None:
            kw["coarse_width"] = self.coarse_width
        probe = TdcConfig(**kw)
        f = dict(self.fine)
        n_lines = f.pop("n_lines", 4)
        taps = f.pop("taps_per_line", 20)
        cell = f.pop("cell_delay", probe.t_clk // taps)
        offset = f.pop("line_offset", cell // n_lines)
        seed = f.pop("perturbation_seed", None)
        fine = FineTdcConfig(n_lines=n_lines, taps_per_line=taps, cell_delay=cell, line_offset=offset, seed=seed, **f)
        return TdcConfig(fine=fine, **kw)


def resolve_config_path(explicit: Optional[str]) -> Optional[str]:
    return explicit or os.environ.get(ENV_VAR) or None


def config_to_dict(cfg: TdcConfig) -> dict:
    """Fully resolved configuration, in the same schema the loader accepts."""
    fine = cfg.fine
    out_fine = {
        "n_lines": fine.n_lines,
        "taps_per_line": fine.taps_per_line,
        "cell_delay": format_time(fine.cell_delay),
        "line_offset": format_time(fine.line_offset),
        "counter_width": fine.counter_width,
        "adder_width": fine.adder_width,
    }
    if fine.tap_perturbations is not None:
        out_fine["tap_perturbations"] = [f"{p}fs" for p in fine.tap_perturbations]
    if fine.perturbation_sigma:
        out_fine["perturbation_sigma"] = format_time(fine.perturbation_sigma)
        out_fine["perturbation_seed"] = fine.seed
    return {
        "t_clk": format_time(cfg.t_clk),
        "coarse_width": cfg.coarse_width,
        "fine": out_fine,
    }
