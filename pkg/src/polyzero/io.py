"""Delimited output with JSON sidecars, and the experiment configuration record.

Data files are deterministic: the same configuration and seed give
byte-identical CSV.  The only run-dependent field (a timestamp) lives in
the sidecar, which also carries the full configuration so that any output
can be regenerated.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__

__all__ = ["ExperimentConfig", "format_value", "write_csv", "write_json", "write_sidecar", "read_sidecar", "sidecar_path"]

FORMATS = ("csv", "json")


@dataclass
class ExperimentConfig:
    """Everything needed to re-run one command."""

    subcommand: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")
        if not isinstance(self.params, dict):
            raise TypeError("params must be a dict")

    def to_dict(self):
        return {"subcommand": self.subcommand, "params": _plain(self.params), "seed": int(self.seed),
                "out": self.out, "format": self.format}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown configuration keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _plain(x):
    """JSON-safe copy: arrays to lists, numpy scalars to Python, Fractions to strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def format_value(v):
    """Text for one CSV cell; floats carry 17 significant digits."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if isinstance(v, Fraction):
        return str(v)
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_sidecar(path, config, extra=None):
    """Sidecar next to ``path`` with the configuration, version and timestamp."""
    meta = {
        "config": config.to_dict(),
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    if extra:
        meta["results"] = _plain(extra)
    return write_json(sidecar_path(path), meta)


def read_sidecar(path):
    meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
    return ExperimentConfig.from_dict(meta["config"]), meta
