"""Run configuration: INI-style key/value text, validated and fully resolved."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields

from .errors import ConfigError

SYSTEMS = ("hydro", "aniso", "limit-sweep", "verify")
FAMILIES = ("a", "b")


@dataclass
class RunConfig:
    system: str = "hydro"
    N1: int = 32
    N2: int = 32
    Ny: int = 65
    period: float = 2 * math.pi
    dt: float = 0.02
    T: float = 64.0
    eps0: float = 1e-3
    delta0: float = 1e-3
    rho0: float = 0.5
    eps: float = 0.1
    eps_list: tuple = (0.2, 0.1, 0.05)
    family: str = "a"
    seed: int = 0
    u1_factor: float = 0.0
    mismatch: float = 0.0
    sample_every: float = 1.0
    nonlinear: bool = True
    checkpoint: bool = True
    figures: bool = True
    threads: int = 1


# overrides of the plain defaults for particular systems
SYSTEM_DEFAULTS = {
    "limit-sweep": {"N1": 16, "N2": 16, "T": 32.0, "sample_every": 0.5},
}

_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(name, raw):
    kind = type(getattr(RunConfig, name)) if name != "eps_list" else tuple
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is int:
            f = float(raw)
            if f != int(f):
                raise ValueError(raw)
            return int(f)
        if kind is float:
            return float(raw)
        if kind is tuple:
            return tuple(float(x) for x in raw.replace(";", ",").split(",") if x.strip())
        return raw
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind.__name__}", field=name) from None


def _read_pairs(text):
    if not any(line.strip().startswith("[") for line in text.splitlines()):
        text = "[run]\n" + text
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=", ":"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    pairs = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            if key in pairs:
                raise ConfigError(f"duplicate key {key!r}", field=key)
            pairs[key] = value
    return pairs


def parse_config(text, overrides=()):
    """Parse, apply ``key=value`` overrides, resolve defaults, validate."""
    pairs = _read_pairs(text)
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r} is not key=value")
        k, v = ov.split("=", 1)
        pairs[k.strip()] = v
    unknown = sorted(set(pairs) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}", field=unknown[0])
    values = {k: _convert(k, v) for k, v in pairs.items()}
    system = values.get("system", RunConfig.system)
    for k, v in SYSTEM_DEFAULTS.get(system, {}).items():
        values.setdefault(k, v)
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def _positive(cfg, *names):
    for n in names:
        v = getattr(cfg, n)
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise ConfigError(f"{n} must be positive, got {v!r}", field=n)


def validate(cfg):
    if cfg.system not in SYSTEMS:
        raise ConfigError(f"system must be one of {SYSTEMS}, got {cfg.system!r}", field="system")
    if cfg.family not in FAMILIES:
        raise ConfigError(f"family must be one of {FAMILIES}, got {cfg.family!r}", field="family")
    _positive(cfg, "N1", "N2", "Ny", "period", "dt", "T", "eps0", "delta0", "rho0", "eps",
              "sample_every", "threads")
    for n in ("N1", "N2"):
        if getattr(cfg, n) % 2:
            raise ConfigError(f"{n} must be even", field=n)
    if cfg.Ny < 8:
        raise ConfigError("Ny must be at least 8", field="Ny")
    if cfg.eps > 0.5:
        raise ConfigError("eps must be at most 0.5", field="eps")
    if cfg.seed < 0:
        raise ConfigError("seed must be nonnegative", field="seed")
    for n in ("u1_factor", "mismatch"):
        v = getattr(cfg, n)
        if not (math.isfinite(v) and v >= 0):
            raise ConfigError(f"{n} must be nonnegative", field=n)
    e = cfg.eps_list
    if len(e) == 0 or any(not (0 < x <= 0.5) for x in e):
        raise ConfigError("eps_list entries must lie in (0, 0.5]", field="eps_list")
    if any(b >= a for a, b in zip(e, e[1:])):
        raise ConfigError("eps_list must be strictly decreasing", field="eps_list")
    return cfg


def _format(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


def serialize_config(cfg):
    lines = ["[run]"] + [f"{f.name} = {_format(getattr(cfg, f.name))}" for f in fields(RunConfig)]
    return "\n".join(lines) + "\n"


def config_dict(cfg):
    return {f.name: (list(getattr(cfg, f.name)) if f.name == "eps_list" else getattr(cfg, f.name))
            for f in fields(RunConfig)}
