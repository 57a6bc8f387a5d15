"""Builtin spacetime presets.

Each preset is a ``key = value`` file in the ``presets`` package directory,
in the same format the command line reads with ``--config``.  Keys:

``name``, ``description``, ``f``, ``interval``, ``n``, ``region``,
``param.<name>`` for parameter defaults, ``expected.<field>`` for frozen
results and ``provenance.<field>`` justifying each expected value.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Optional

from .warp import ClassificationReport, Interval, Spacetime, parse_interval

__all__ = [
    "ConfigError",
    "UnknownPresetError",
    "Preset",
    "parse_config",
    "list_presets",
    "get_preset",
    "preset_from_text",
]

EXPECTED_FIELDS = ("verdict", "failure_mode", "slices", "ncc", "wec", "sec", "dec")
SLICE_TOL = 1e-6


class ConfigError(ValueError):
    pass


class UnknownPresetError(KeyError):
    def __init__(self, name: str, valid):
        self.name, self.valid = name, list(valid)
        super().__init__(name)

    def __str__(self) -> str:
        return f"unknown preset {self.name!r}; valid names: {', '.join(self.valid)}"


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines (``#`` comments) into an ordered dict."""
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",),
                                   inline_comment_prefixes=None, interpolation=None,
                                   empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string("[config]\n" + text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc.message if hasattr(exc, 'message') else exc}") from None
    return dict(cp["config"])


@dataclass(frozen=True)
class Preset:
    name: str
    f: str
    interval: str
    region: str
    n: int = 3
    params: Mapping = field(default_factory=dict)
    description: str = ""
    expected: Mapping = field(default_factory=dict)
    provenance: Mapping = field(default_factory=dict)

    def spacetime(self, n: Optional[int] = None, params: Optional[Mapping] = None) -> Spacetime:
        bindings = {**self.params, **(params or {})}
        return Spacetime.from_strings(self.f, self.interval, self.n if n is None else n, bindings)

    def default_region(self, params: Optional[Mapping] = None) -> Interval:
        return parse_interval(self.region, {**self.params, **(params or {})})

    def expected_slices(self) -> Optional[list]:
        raw = self.expected.get("slices")
        if raw is None:
            return None
        return [float(s) for s in raw.split(",") if s.strip()]

    def summary(self) -> dict:
        return {"name": self.name, "f": self.f, "interval": self.interval, "n": self.n,
                "params": dict(self.params), "description": self.description}

    def to_dict(self) -> dict:
        return {**self.summary(), "region": self.region, "expected": dict(self.expected),
                "provenance": dict(self.provenance)}

    def to_config(self) -> str:
        lines = [f"name = {self.name}", f"description = {self.description}", f"f = {self.f}"]
        lines += [f"param.{k} = {v:.17g}" for k, v in self.params.items()]
        lines += [f"interval = {self.interval}", f"n = {self.n}", f"region = {self.region}"]
        lines += [f"expected.{k} = {v}" for k, v in self.expected.items()]
        lines += [f"provenance.{k} = {v}" for k, v in self.provenance.items()]
        return "\n".join(lines) + "\n"

    def mismatches(self, report: ClassificationReport) -> list:
        """Expected fields that ``report`` does not reproduce, as ``(field, expected, got)``."""
        out = []
        got = {"verdict": report.verdict, "failure_mode": report.failure_mode,
               "ncc": report.ncc.status, "wec": report.wec.status,
               "sec": report.sec.status, "dec": report.dec.status}
        for key, want in self.expected.items():
            if key == "slices":
                ts = [s.t0 for s in report.maximal_slices]
                exp = self.expected_slices()
                ok = len(ts) == len(exp) and all(abs(a - b) <= SLICE_TOL for a, b in zip(ts, exp))
                if not ok:
                    out.append((key, exp, ts))
            elif str(got[key]) != want:
                out.append((key, want, got[key]))
        return out


def preset_from_text(text: str, source: str = "<preset>") -> Preset:
    cfg = parse_config(text, source)
    try:
        name, f, interval, region = cfg["name"], cfg["f"], cfg["interval"], cfg["region"]
    except KeyError as exc:
        raise ConfigError(f"{source}: missing key {exc.args[0]!r}") from None
    params, expected, prov = {}, {}, {}
    for key, value in cfg.items():
        if key.startswith("param."):
            params[key[6:]] = float(value)
        elif key.startswith("expected."):
            expected[key[9:]] = value
        elif key.startswith("provenance."):
            prov[key[11:]] = value
    unknown = set(expected) - set(EXPECTED_FIELDS)
    if unknown:
        raise ConfigError(f"{source}: unknown expected fields {sorted(unknown)}")
    untagged = set(expected) - set(prov)
    if untagged:
        raise ConfigError(f"{source}: expected values without provenance: {sorted(untagged)}")
    n = int(cfg.get("n", 3))
    return Preset(name, f, interval, region, n, params, cfg.get("description", ""), expected, prov)


def _load_all() -> dict:
    out = {}
    for entry in resources.files(__package__).joinpath("presets").iterdir():
        if entry.name.endswith(".conf"):
            p = preset_from_text(entry.read_text(encoding="utf-8"), entry.name)
            out[p.name] = p
    return dict(sorted(out.items()))


_CACHE: dict = {}


def _presets() -> dict:
    if not _CACHE:
        _CACHE.update(_load_all())
    return _CACHE


def list_presets() -> list:
    """All presets, sorted by name."""
    return list(_presets().values())


def get_preset(name: str) -> Preset:
    try:
        return _presets()[name]
    except KeyError:
        raise UnknownPresetError(name, _presets()) from None
