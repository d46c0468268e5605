"""Flat key=value configuration files with sections, overrides, and hashing.

Precedence: built-in defaults < config file < environment variables
(TRIMTAIL_<SECTION>_<KEY>) < command-line flags.  The canonical form —
"section.key=value" lines, sorted, single spaces inside values — feeds a
64-bit FNV-1a hash, so key order and whitespace never change a run's
identity.
"""
from __future__ import annotations

import os
import re
from pathlib import Path


from .distributions import DistributionModel, make_model
from .engine import SimulationConfig
from .errors import ConfigError
from .weights import (WeightFunction, WeightScheme, load_coefficients_csv,
                      make_weight, verify_lipschitz)

ENV_PREFIX = "TRIMTAIL_"

SECTIONS = ("model", "weights", "trim", "mc")

DEFAULTS: dict[tuple[str, str], str] = {
    ("model", "name"): "uniform",
    ("weights", "name"): "constant",
    ("trim", "alpha"): "0.25",
    ("trim", "beta"): "0.25",
    ("trim", "epsilon"): "1",
    ("trim", "rule"): "exact",
    ("trim", "rate-constant"): "0",
    ("mc", "n"): "2000",
    ("mc", "n-ladder"): "250,500,1000,2000",
    ("mc", "replicates"): "100000",
    ("mc", "seed"): "0",
    ("mc", "workers"): "1",
    ("mc", "x-grid"): "auto",
    ("mc", "deviation-a"): "3",
    ("mc", "a-n"): "auto",
    ("mc", "statistic"): "trimmed",
    ("mc", "chunk-size"): "4096",
    ("mc", "coefficient-offset"): "0",
}

_KNOWN_KEYS = {
    "trim": {"alpha", "beta", "epsilon", "rule", "rate-constant"},
    "mc": {"n", "n-ladder", "replicates", "seed", "workers", "x-grid",
           "deviation-a", "a-n", "statistic", "chunk-size", "coefficient-offset"},
}

_KEY_RE = re.compile(r"^[a-z0-9][a-z0-9-]*$")

Config = dict[tuple[str, str], str]


def parse_config_text(text: str, origin: str = "<config>") -> Config:
    cfg: Config = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                raise ConfigError(f"{origin}:{lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected key=value, got {line!r}")
        if section is None:
            raise ConfigError(f"{origin}:{lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if not _KEY_RE.match(key):
            raise ConfigError(f"{origin}:{lineno}: malformed key {key!r}")
        if section in _KNOWN_KEYS and key not in _KNOWN_KEYS[section]:
            raise ConfigError(f"{origin}:{lineno}: unknown key '{key}' in [{section}]")
        cfg[(section, key)] = re.sub(r"\s+", " ", value)
    return cfg


def load_config(path) -> Config:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, origin=str(path))


def env_overrides(environ=None) -> Config:
    environ = os.environ if environ is None else environ
    out: Config = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):]
        parts = rest.split("_", 1)
        if len(parts) != 2:
            raise ConfigError(f"malformed override variable {name} (need {ENV_PREFIX}SECTION_KEY)")
        section = parts[0].lower()
        key = parts[1].lower().replace("_", "-")
        if section not in SECTIONS:
            raise ConfigError(f"override variable {name} names unknown section '{section}'")
        if section in _KNOWN_KEYS and key not in _KNOWN_KEYS[section]:
            raise ConfigError(f"override variable {name} names unknown key '{key}'")
        out[(section, key)] = re.sub(r"\s+", " ", value.strip())
    return out


def resolve(file_cfg: Config | None = None, env: Config | None = None,
            flags: Config | None = None) -> Config:
    cfg = dict(DEFAULTS)
    for layer in (file_cfg, env, flags):
        if layer:
            cfg.update(layer)
    return cfg


def canonical_text(cfg: Config) -> str:
    lines = [f"{section}.{key}={value}" for (section, key), value in sorted(cfg.items())]
    return "\n".join(lines) + "\n"


def fnv1a64(text: str) -> str:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


def config_hash(cfg: Config) -> str:
    return fnv1a64(canonical_text(cfg))


def _get_float(cfg: Config, section: str, key: str) -> float:
    value = cfg[(section, key)]
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}") from None


def _get_int(cfg: Config, section: str, key: str) -> int:
    value = cfg[(section, key)]
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{section}.{key} must be an integer, got {value!r}") from None


def build_model(cfg: Config) -> DistributionModel:
    name = cfg[("model", "name")]
    params = {key: value for (section, key), value in cfg.items()
              if section == "model" and key != "name"}
    alpha = _get_float(cfg, "trim", "alpha")
    beta = _get_float(cfg, "trim", "beta")
    return make_model(name, params, alpha=alpha, beta=beta)


def build_weight(cfg: Config) -> WeightFunction:
    name = cfg[("weights", "name")]
    params: dict = {}
    for (section, key), value in cfg.items():
        if section != "weights" or key in ("name", "coefficients-csv"):
            continue
        if key == "coeffs":
            params[key] = tuple(float(v) for v in value.split(","))
        else:
            params[key] = float(value)
    J = make_weight(name, params)
    verify_lipschitz(J)
    return J


def build_scheme(cfg: Config, J: WeightFunction) -> WeightScheme:
    csv_path = cfg.get(("weights", "coefficients-csv"))
    if csv_path:
        return WeightScheme.explicit(load_coefficients_csv(csv_path), J)
    return WeightScheme.generated(J)


def build_simulation_config(cfg: Config, model: DistributionModel,
                            weight: WeightFunction) -> SimulationConfig:
    x_grid_raw = cfg[("mc", "x-grid")]
    if x_grid_raw == "auto":
        x_grid = None
    else:
        try:
            x_grid = tuple(float(v) for v in x_grid_raw.split(","))
        except ValueError:
            raise ConfigError(f"mc.x-grid must be 'auto' or a comma list, got {x_grid_raw!r}") from None
    a_n_raw = cfg[("mc", "a-n")]
    a_n = None if a_n_raw == "auto" else float(a_n_raw)
    try:
        ladder = tuple(int(v) for v in cfg[("mc", "n-ladder")].split(","))
    except ValueError:
        raise ConfigError(f"mc.n-ladder must be a comma list of integers") from None
    return SimulationConfig(
        model=model,
        weight=weight,
        alpha=_get_float(cfg, "trim", "alpha"),
        beta=_get_float(cfg, "trim", "beta"),
        epsilon=_get_float(cfg, "trim", "epsilon"),
        trim_rule=cfg[("trim", "rule")],
        rate_constant=_get_float(cfg, "trim", "rate-constant"),
        n=_get_int(cfg, "mc", "n"),
        n_ladder=ladder,
        replicates=_get_int(cfg, "mc", "replicates"),
        master_seed=_get_int(cfg, "mc", "seed"),
        x_grid=x_grid,
        big_a=_get_float(cfg, "mc", "deviation-a"),
        a_n=a_n,
        workers=_get_int(cfg, "mc", "workers"),
        statistic=cfg[("mc", "statistic")],
        chunk_size=_get_int(cfg, "mc", "chunk-size"),
        coefficient_offset=_get_float(cfg, "mc", "coefficient-offset"),
    )
