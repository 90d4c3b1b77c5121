"""Experiment configuration files.

A config is a YAML mapping::

    experiment: origin-burn
    seed: 7
    threads: 1
    output: results/origin
    parameters:
      N_grid: [16, 32, 64]
      zeta: 1          # a positive number or "inf"
      replicas: 10000

Unknown keys are rejected with the line they appear on.  Missing parameters
take the defaults below, and the fully resolved config is what gets echoed
next to the outputs, so re-reading the echo reproduces the same config.
"""

from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass, field

import yaml

LN2 = math.log(2.0)

# parameter defaults per experiment; None marks a required parameter
EXPERIMENTS: dict[str, dict] = {
    "perc-event": {
        "event": "hcross",
        "n_grid": [8, 16, 32],
        "p_grid": [0.5],
        "replicas": 100_000,
        "sigma": 3.0,
    },
    "char-length": {
        "p_grid": [0.52, 0.53, 0.54, 0.56],
        "cap": 2048,
        "max_replicas": 60_000,
        "block": 4000,
        "target": -4.0 / 3.0,
        "tolerance": 0.25,
    },
    "arm-exponent": {
        "n_grid": [16, 32, 64, 128, 256],
        "replicas": 20_000,
        "p": 0.5,
        "target": -5.0 / 48.0,
        "tolerance": 0.03,
    },
    "cone-arm-exponent": {
        "alpha": "pi/3",
        "n_grid": [8, 16, 32, 64, 128],
        "replicas": 50_000,
        "tolerance": 0.08,
    },
    "origin-burn": {
        "N_grid": [16, 32, 64, 128],
        "zeta": 1,
        "variant": "NoRecovery",
        "replicas": 2000,
        "time_probe": None,
        "bound_delta": 0.1,
    },
    "long-path": {
        "n_grid": [8, 16, 32, 64],
        "zeta": 1,
        "replicas": 400_000,
        "max_slope": -0.9,
    },
    "fire-depth": {
        "N_grid": [32, 64, 128],
        "zeta": 1,
        "delta": 1.0 / 14.0,
        "beta": 0.7,
        "replicas": 2000,
    },
    "cone-count": {
        "n_grid": [64, 128],
        "alpha": "pi/3",
        "delta": 0.05,
        "zeta": 1,
        "variant": "Standard",
        "replicas": 300,
        "arm_replicas": 100_000,
        "level": 0.9,
    },
    "bounded-cluster": {
        "strips": [[128, 64], [256, 128]],
        "zeta": 1,
        "horizon": 2 * LN2,
        "L_grid": [1000],
        "replicas": 500,
    },
    "scaling-check": {
        "p_grid": [0.52, 0.53, 0.54, 0.56],
        "cap": 2048,
        "max_replicas": 60_000,
        "block": 4000,
        "arm_replicas": 20_000,
        "theta_replicas": 4000,
        "theta_factor": 4,
        "ratio_factor": 10.0,
    },
    "snapshot": {
        "N": 50,
        "zeta": 0.5,
        "variant": "NoRecovery",
        "t": 2 * LN2,
    },
}

TOP_KEYS = ("experiment", "seed", "threads", "output", "parameters")


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


@dataclass
class ExperimentConfig:
    experiment: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    threads: int | None = None
    output: str = "out"

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "threads": self.threads,
            "output": self.output,
            "parameters": copy.deepcopy(self.parameters),
        }

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)


def parse_angle(value) -> float:
    """Radians from a number or an expression like ``"pi/3"`` or ``"2*pi/5"``."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).replace(" ", "").lower()
    m = re.fullmatch(r"(?:(\d+(?:\.\d*)?)\*?)?pi(?:/(\d+(?:\.\d*)?))?", text)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    return float(text)


def _key_lines(node) -> dict:
    """Line of every key in a mapping node, nested mappings as ``(line, children)``."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            children = _key_lines(v) if isinstance(v, yaml.MappingNode) else {}
            out[k.value] = (k.start_mark.line + 1, children)
    return out


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse and resolve a config; raises :class:`ConfigError`."""
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(str(exc).splitlines()[0], mark.line + 1 if mark else None, source) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", 1, source)
    lines = _key_lines(node)

    def line_of(*path):
        entry = (None, lines)
        for p in path:
            entry = entry[1].get(p, (entry[0], {}))
        return entry[0]

    for key in data:
        if key not in TOP_KEYS:
            raise ConfigError(f"unknown key {key!r}", line_of(key), source)
    name = data.get("experiment")
    if name not in EXPERIMENTS:
        raise ConfigError(
            f"experiment must be one of {sorted(EXPERIMENTS)}, got {name!r}", line_of("experiment") or 1, source
        )
    params = data.get("parameters") or {}
    if not isinstance(params, dict):
        raise ConfigError("parameters must be a mapping", line_of("parameters"), source)
    defaults = EXPERIMENTS[name]
    for key in params:
        if key not in defaults:
            raise ConfigError(f"unknown parameter {key!r} for {name}", line_of("parameters", key), source)
    resolved = copy.deepcopy(defaults)
    resolved.update(params)
    missing = [k for k, v in resolved.items() if v is None and k not in ("time_probe",)]
    if missing:
        raise ConfigError(f"missing parameters {missing}", line_of("parameters") or 1, source)
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an integer in [0, 2**64)", line_of("seed"), source)
    threads = data.get("threads")
    if threads is not None and (not isinstance(threads, int) or threads < 1):
        raise ConfigError("threads must be a positive integer", line_of("threads"), source)
    output = data.get("output", "out")
    if not isinstance(output, str) or not output:
        raise ConfigError("output must be a non-empty path prefix", line_of("output"), source)
    _check_values(name, resolved, lambda k: line_of("parameters", k) or line_of("parameters"), source)
    return ExperimentConfig(name, resolved, seed, threads, output)


def _check_values(name, params, line, source):
    from .forestfire import parse_zeta

    for key, value in params.items():
        try:
            if key == "zeta":
                parse_zeta(value)
            elif key == "alpha":
                a = parse_angle(value)
                if not 0 < a <= math.pi / 2 + 1e-12:
                    raise ValueError("alpha must lie in (0, pi/2]")
            elif key == "variant":
                allowed = ("Standard", "InfiniteZeta") if name == "cone-count" else ("NoRecovery", "Recovery")
                if value not in allowed:
                    raise ValueError(f"variant must be one of {allowed}")
            elif key == "replicas" or key.endswith("_replicas"):
                if not isinstance(value, int) or value < 1:
                    raise ValueError(f"{key} must be a positive integer")
            elif key.endswith("_grid") or key == "strips":
                if not isinstance(value, list) or not value:
                    raise ValueError(f"{key} must be a non-empty list")
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), line(key), source) from None


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), str(path))
