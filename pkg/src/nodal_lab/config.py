"""Flat ``key = value`` experiment configuration.

Blank lines and lines starting with ``#`` are ignored. Keys use underscores
or dashes interchangeably (``m_range`` == ``m-range``). Command-line flags
override file keys.
"""

import math
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .modes import BOUNDARY_CONDITIONS, NEUMANN

EXPERIMENTS = ("disc-scan", "ellipse-scan", "continue", "count", "goodness", "report")
METHODS = ("millar", "fourier")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "disc-scan"
    m_min: int = 1
    m_max: int = 1
    n_min: int = 1
    n_max: int = 1
    bc: str = NEUMANN
    parity: str = "sin"
    epsilon: float = 0.05
    ecc: float = 0.0
    curve: Optional[str] = None
    trace: Optional[str] = None
    input: Optional[str] = None
    out: str = "out.csv"
    interior_radius: float = 0.5
    method: str = "millar"
    resolution_scale: float = 1.0
    threads: int = 1
    complex_counts: bool = True
    audit: bool = False

    @property
    def sidecar(self):
        return str(Path(self.out).with_suffix(".json"))


def parse_range(text, field_name):
    """'A:B' (inclusive) or a single integer 'A'."""
    parts = str(text).strip().split(":")
    try:
        if len(parts) == 1:
            lo = hi = int(parts[0])
        elif len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise ConfigError(field_name, f"expected 'A:B' with integers, got {text!r}") from None
    if lo > hi:
        raise ConfigError(field_name, f"empty range {lo}:{hi}")
    return lo, hi


_INT = {"m_min", "m_max", "n_min", "n_max", "threads"}
_FLOAT = {"epsilon", "ecc", "interior_radius", "resolution_scale"}
_BOOL = {"complex_counts", "audit"}


def _coerce(key, value):
    try:
        if key in _INT:
            return int(value)
        if key in _FLOAT:
            x = float(value)
            if not math.isfinite(x):
                raise ValueError
            return x
    except ValueError:
        raise ConfigError(key, f"cannot parse {value!r}") from None
    if key in _BOOL:
        low = str(value).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(key, f"expected a boolean, got {value!r}")
    return str(value).strip()


def _normalize_key(key):
    return key.strip().lower().replace("-", "_")


def apply_pairs(cfg, pairs):
    """Return ``cfg`` updated from (key, raw value) pairs."""
    known = {f.name for f in fields(ExperimentConfig)}
    updates = {}
    for raw_key, value in pairs:
        key = _normalize_key(raw_key)
        if key == "m_range":
            updates["m_min"], updates["m_max"] = parse_range(value, "m_range")
        elif key == "n_range":
            updates["n_min"], updates["n_max"] = parse_range(value, "n_range")
        elif key in known:
            updates[key] = _coerce(key, value)
        else:
            raise ConfigError(key, "unknown configuration key")
    return replace(cfg, **updates)


def read_config_file(path):
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        pairs.append((key, value.strip()))
    return pairs


def validate(cfg):
    """Raise ConfigError (naming the field) if the configuration is unusable."""
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"must be one of {', '.join(EXPERIMENTS)}")
    if cfg.bc not in BOUNDARY_CONDITIONS:
        raise ConfigError("bc", f"must be one of {', '.join(BOUNDARY_CONDITIONS)}")
    if cfg.parity not in ("sin", "cos"):
        raise ConfigError("parity", "must be sin or cos")
    if cfg.method not in METHODS:
        raise ConfigError("method", f"must be one of {', '.join(METHODS)}")
    if cfg.m_min < 0 or cfg.m_min > cfg.m_max:
        raise ConfigError("m_range", f"empty or negative range {cfg.m_min}:{cfg.m_max}")
    if cfg.n_min < 1 or cfg.n_min > cfg.n_max:
        raise ConfigError("n_range", f"empty range {cfg.n_min}:{cfg.n_max} (n starts at 1)")
    if cfg.threads < 1:
        raise ConfigError("threads", "must be at least 1")
    if not cfg.resolution_scale > 0:
        raise ConfigError("resolution_scale", "must be positive")
    if not 0.0 <= cfg.ecc < 1.0:
        raise ConfigError("ecc", "eccentricity must lie in [0, 1)")
    if not 0.0 < cfg.interior_radius < 1.0:
        raise ConfigError("interior_radius", "must lie in (0, 1)")
    if not cfg.epsilon > 0:
        raise ConfigError("epsilon", "must be positive")
    margin = _margin(cfg)
    if cfg.epsilon >= margin:
        raise ConfigError("epsilon", f"{cfg.epsilon} exceeds the curve's analyticity margin {margin:.4g}")
    for key in ("curve", "trace", "input"):
        path = getattr(cfg, key)
        if path is not None and not os.access(path, os.R_OK):
            raise ConfigError(key, f"file {path} is not readable")
    if cfg.experiment in ("continue", "count") and cfg.trace is None and cfg.m_min != cfg.m_max:
        raise ConfigError("m_range", f"{cfg.experiment} takes one mode: give a trace file or a single m")
    if cfg.experiment == "report" and cfg.input is None:
        raise ConfigError("input", "report needs an input CSV")
    out_dir = Path(cfg.out).resolve().parent
    if not out_dir.is_dir() or not os.access(out_dir, os.W_OK):
        raise ConfigError("out", f"directory {out_dir} is not writable")
    return cfg


def _margin(cfg):
    from . import geometry

    if cfg.curve is not None:
        try:
            curve = geometry.read_curve(cfg.curve)
        except Exception as exc:
            raise ConfigError("curve", str(exc)) from None
        return curve.margin
    if cfg.experiment == "ellipse-scan" and cfg.ecc > 0:
        # the level curve q(x + i y) collapses onto the focal segment at tanh y = b
        return math.atanh(math.sqrt(1 - cfg.ecc**2))
    return math.inf


def load(path=None, overrides=()):
    """Defaults, then the file at ``path``, then ``overrides``; validated."""
    cfg = ExperimentConfig()
    if path is not None:
        cfg = apply_pairs(cfg, read_config_file(path))
    cfg = apply_pairs(cfg, overrides)
    return validate(cfg)
