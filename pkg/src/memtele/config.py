"""Run configuration: a flat ``key = value`` text file.

Keys are the :class:`~memtele.sources.ExperimentParams` field names plus the
run controls ``experiment``, ``seed``, ``trials``, ``workers``,
``storage_times`` (comma separated, microseconds), ``output`` and ``format``.
Blank lines and ``#`` comments are ignored.  Unspecified physical parameters
take the calibrated defaults of :func:`~memtele.sources.default_params`.

Example::

    experiment = table1
    seed = 7
    trials = 100000
    eta_det = 0.5        # single-photon detector efficiency
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .errors import InvariantViolation, ParamOutOfRange, ParseError, UnknownKey
from .sources import ExperimentParams, default_params

EXPERIMENTS = ("table1", "fig3", "visibility", "budget", "bell-check")
FORMATS = ("csv", "json")
PARAM_KEYS = tuple(f.name for f in dataclasses.fields(ExperimentParams))
RUN_KEYS = ("experiment", "seed", "trials", "workers", "storage_times", "output", "format")
DEFAULT_STORAGE_TIMES = (0.5, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "budget"
    params: ExperimentParams = dataclasses.field(default_factory=default_params)
    seed: int = 0
    trials: int = 100_000
    workers: int = 1
    storage_times: tuple = DEFAULT_STORAGE_TIMES
    output_path: str = "-"
    format: str = "csv"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvariantViolation("experiment", f"{self.experiment!r} not one of {', '.join(EXPERIMENTS)}")
        if self.format not in FORMATS:
            raise InvariantViolation("format", f"{self.format!r} not one of {', '.join(FORMATS)}")
        if not 0 <= self.seed <= U64_MAX:
            raise InvariantViolation("seed", "must be an unsigned 64-bit integer")
        if self.trials < 1:
            raise InvariantViolation("trials", "must be >= 1")
        if self.workers < 1:
            raise InvariantViolation("workers", "must be >= 1")
        if self.experiment == "fig3" and not self.storage_times:
            raise InvariantViolation("storage_times", "fig3 needs at least one storage time")
        if any(t < 0 or not math.isfinite(t) for t in self.storage_times):
            raise InvariantViolation("storage_times", "storage times must be finite and >= 0")


def _number(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{key}: cannot parse {text!r} as a number") from None


def _integer(key: str, text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise ParseError(f"{key}: cannot parse {text!r} as an integer") from None


def parse_pairs(lines: Iterable[str]) -> dict[str, str]:
    """Split ``key = value`` lines; later keys override earlier ones."""
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError(f"line {lineno}: missing key")
        out[key] = value
    return out


def build_config(values: Mapping[str, str]) -> RunConfig:
    """Typed :class:`RunConfig` from string values, checking keys and invariants."""
    unknown = sorted(set(values) - set(PARAM_KEYS) - set(RUN_KEYS))
    if unknown:
        raise UnknownKey(f"unknown configuration key(s): {', '.join(unknown)}")
    overrides = {k: _number(k, v) for k, v in values.items() if k in PARAM_KEYS}
    try:
        params = default_params(**overrides)
    except ParamOutOfRange as exc:
        raise InvariantViolation(exc.field, str(exc).split(": ", 1)[-1]) from None
    run = {}
    if "experiment" in values:
        run["experiment"] = values["experiment"]
    if "format" in values:
        run["format"] = values["format"].lower()
    if "output" in values:
        run["output_path"] = values["output"]
    for key in ("seed", "trials", "workers"):
        if key in values:
            run[key] = _integer(key, values[key])
    if "storage_times" in values:
        items = [s for s in values["storage_times"].replace(";", ",").split(",") if s.strip()]
        run["storage_times"] = tuple(_number("storage_times", s.strip()) for s in items)
    return RunConfig(params=params, **run)


def load_config(path, overrides: Mapping[str, str] | None = None) -> RunConfig:
    """Read a configuration file; ``overrides`` (already split ``key=value`` pairs) win."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    values = parse_pairs(text.splitlines())
    values.update(overrides or {})
    return build_config(values)
