"""Experiment configuration: a strict, schema-versioned key/value tree.

Configs are YAML files (or plain dicts).  Unknown keys anywhere in the
tree are errors: silent typos in tolerance names have burned enough
afternoons.  The seed is mandatory; every stochastic choice in a run
derives from it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

import yaml

SCHEMA_VERSION = 1

CHECK_IDS = ("P41", "P42", "P44", "P52", "P53", "P61", "P63", "P71", "AUDIT", "KATO", "MORAWETZ")

STATE_FAMILIES = ("gaussian", "oracle_gaussian", "radial_bump", "band_gaussian", "h_half_gaussian", "eigenvector")

#: allowed keys per section; values are (type check, default)
_SECTIONS: dict[str, dict[str, tuple]] = {
    "grid": {
        "geometry": (str, None),
        "n": (int, None),
        "length": ((int, float), None),
    },
    "potential": {
        "family": (str, "zero"),
        "coupling": ((int, float), 0.0),
        "n_space": (int, 1),
    },
    "commutator": {
        "c": ((int, float), 2.0),
        "s": ((int, float), 0.0),
        "force_zero_remainder": (bool, False),
    },
    "band": {
        "lo": ((int, float, str), "auto"),
        "hi": ((int, float, str), "auto"),
    },
    "drift": {
        "truncation_time": ((int, float), 16.0),
        "policy": (str, "fixed"),
        "cap": ((int, float), 64.0),
    },
    "plan": {
        "kernel": (str, "eigenbasis"),
        "tolerance": ((int, float), 1e-10),
    },
    "decay": {
        "dt": ((int, float), 0.25),
        "window": (list, None),
        "t_max": ((int, float), None),
        "rate_tolerance": ((int, float), 0.05),
        "energy_cut": ((int, float), None),
        "doubled_window": ((int, float, type(None)), None),
        "split_cut": ((int, float), 1.0),
        "state": (dict, None),
        "group_times": (list, None),
        "ladder": (list, None),
    },
    "smoothness": {
        "dt": ((int, float), None),
        "samples": (int, 8),
        "profile_scale": ((int, float), 1.5),
        "envelope_center": ((int, float), None),
        "envelope_width": ((int, float), None),
        "energy_cut": ((int, float), None),
        "t_max": ((int, float), None),
    },
}

_STATE_KEYS = {
    "family": (str, None),
    "width": ((int, float), 1.0),
    "center": ((int, float), 0.0),
    "boost": ((int, float), 0.0),
    "energy_center": ((int, float), 1.0),
    "energy_width": ((int, float), 0.5),
    "eigenvalue_near": ((int, float), 1.0),
}

_TOP_KEYS = {
    "schema_version": (int, SCHEMA_VERSION),
    "scenario": (str, None),
    "seed": (int, None),
    "checks": (list, None),
    "output": (str, "runs"),
}


class ConfigError(ValueError):
    """Raised on malformed experiment configs, naming the offending field."""


def _check_keys(tree: dict, allowed: dict, path: str) -> None:
    for key in tree:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}{key}")


def _coerce(tree: dict, allowed: dict, path: str) -> dict:
    _check_keys(tree, allowed, path)
    out = {}
    for key, (types, default) in allowed.items():
        val = tree.get(key)
        if val is not None:
            if types is not None and not isinstance(val, types):
                raise ConfigError(f"{path}{key}: expected {types}, got {type(val).__name__}")
            out[key] = val
        else:
            out[key] = default
    return out


@dataclass
class ExperimentConfig:
    """Validated experiment description."""

    scenario: str
    seed: int
    checks: list[str]
    grid: dict
    potential: dict
    commutator: dict
    band: dict
    drift: dict
    plan: dict
    decay: dict
    smoothness: dict
    output: str = "runs"
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "scenario": self.scenario,
            "seed": self.seed,
            "checks": list(self.checks),
            "grid": dict(self.grid),
            "potential": dict(self.potential),
            "commutator": dict(self.commutator),
            "band": dict(self.band),
            "drift": dict(self.drift),
            "plan": dict(self.plan),
            "decay": dict(self.decay),
            "smoothness": dict(self.smoothness),
            "output": self.output,
        }


def validate_config(raw: dict) -> ExperimentConfig:
    """Validate a raw config tree; unknown keys and bad types are errors."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    known_top = dict(_TOP_KEYS)
    known_top.update({name: (dict, None) for name in _SECTIONS})
    _check_keys(raw, known_top, "")

    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version {version} not supported (expected {SCHEMA_VERSION})")
    if "seed" not in raw or not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool):
        raise ConfigError("seed: a mandatory integer")
    if "scenario" not in raw or not isinstance(raw["scenario"], str):
        raise ConfigError("scenario: a mandatory string name")
    checks = raw.get("checks")
    if not isinstance(checks, list) or not checks:
        raise ConfigError("checks: a non-empty list")
    for c in checks:
        if c not in CHECK_IDS:
            raise ConfigError(f"checks: unknown check id {c!r}; allowed: {CHECK_IDS}")
    if "grid" not in raw:
        raise ConfigError("grid: required section")

    sections = {}
    for name, allowed in _SECTIONS.items():
        tree = raw.get(name, {})
        if tree is None:
            tree = {}
        if not isinstance(tree, dict):
            raise ConfigError(f"{name}: expected a mapping")
        sections[name] = _coerce(tree, allowed, f"{name}.")

    grid = sections["grid"]
    for key in ("geometry", "n", "length"):
        if grid[key] is None:
            raise ConfigError(f"grid.{key}: required")
    if grid["n"] < 8:
        raise ConfigError(f"grid.n: lab scenarios need n >= 8, got {grid['n']}")

    state = sections["decay"].get("state")
    if state is not None:
        state = _coerce(state, _STATE_KEYS, "decay.state.")
        if state["family"] not in STATE_FAMILIES:
            raise ConfigError(f"decay.state.family: unknown family {state['family']!r}")
        sections["decay"]["state"] = state

    return ExperimentConfig(
        scenario=raw["scenario"],
        seed=raw["seed"],
        checks=list(checks),
        grid=grid,
        potential=sections["potential"],
        commutator=sections["commutator"],
        band=sections["band"],
        drift=sections["drift"],
        plan=sections["plan"],
        decay=sections["decay"],
        smoothness=sections["smoothness"],
        output=raw.get("output", "runs"),
        schema_version=version,
    )


def load_config(path: str) -> ExperimentConfig:
    """Load and validate a YAML experiment config."""
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return validate_config(raw)


def config_hash(config: ExperimentConfig) -> str:
    """Stable hash of the canonical config serialization."""
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
