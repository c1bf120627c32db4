#!/usr/bin/env python3
"""
Run settings: built-in defaults < environment < --config file < command-line flags
"""

import os
from dataclasses import dataclass, fields
from typing import Dict, Mapping, Optional, Tuple

from dotenv import dotenv_values, load_dotenv

from errors import InvalidParameterError, SolverDefaults
from scenarios import list_scenarios
from timeint import SCHEMES

load_dotenv()

ENV_KEYS = {
    "out": "NLCU_OUT_DIR",
    "ref_level": "NLCU_REF_LEVEL",
    "workers": "NLCU_WORKERS",
}

TRUE_WORDS = {"1", "true", "yes", "on"}
FALSE_WORDS = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class RunSettings:
    scenario: str = "arrhenius_smooth"
    schemes: Tuple[str, ...] = ("cu1", "godunov1", "kt", "cu2")
    n: Optional[int] = None
    cells: Optional[int] = None
    levels: int = SolverDefaults.DEFAULT_LEVELS
    ref_level: int = SolverDefaults.REFERENCE_LEVEL
    cfl: Optional[float] = None
    theta: float = SolverDefaults.THETA
    t_final: Optional[float] = None
    out: str = "results"
    seed: int = 0
    workers: int = SolverDefaults.WORKERS
    strict_paper_formulas: bool = False


CONFIG_KEYS = frozenset(f.name for f in fields(RunSettings)) | {"scheme"}


def _parse_bool(key: str, raw: str) -> bool:
    word = str(raw).strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise InvalidParameterError(f"{key}: expected a boolean, got '{raw}'")


def _parse_value(key: str, raw):
    """Convert a raw (string) value to the type of the matching RunSettings field"""
    if raw is None or isinstance(raw, (int, float, bool, tuple)):
        return raw
    text = str(raw).strip()
    try:
        if key in ("n", "cells", "levels", "ref_level", "seed", "workers"):
            return int(text)
        if key in ("cfl", "theta", "t_final"):
            return float(text)
    except ValueError:
        raise InvalidParameterError(f"{key}: cannot parse '{raw}'") from None
    if key == "strict_paper_formulas":
        return _parse_bool(key, text)
    if key in ("schemes", "scheme"):
        return tuple(s.strip() for s in text.split(",") if s.strip())
    return text


def env_overrides(environ: Optional[Mapping[str, str]] = None) -> Dict[str, object]:
    environ = os.environ if environ is None else environ
    values = {}
    for key, variable in ENV_KEYS.items():
        raw = environ.get(variable)
        if raw:
            values[key] = _parse_value(key, raw)
    return values


def load_config_file(path: Optional[str]) -> Dict[str, object]:
    """Flat key=value file; unknown keys are rejected"""
    if not path:
        return {}
    if not os.path.isfile(path):
        raise InvalidParameterError(f"config file not found: {path}")
    raw = dotenv_values(path)
    unknown = sorted(set(raw) - CONFIG_KEYS)
    if unknown:
        raise InvalidParameterError(
            f"unknown config key(s) {', '.join(unknown)}; valid keys: {', '.join(sorted(CONFIG_KEYS))}"
        )
    return {key: _parse_value(key, value) for key, value in raw.items()}


def _normalise(values: Mapping[str, object]) -> Dict[str, object]:
    values = dict(values)
    if "scheme" in values:
        values["schemes"] = values.pop("scheme")
    return values


def validate_settings(settings: RunSettings) -> RunSettings:
    scenarios = list_scenarios()
    if settings.scenario not in scenarios:
        raise InvalidParameterError(f"unknown scenario '{settings.scenario}'; valid: {', '.join(scenarios)}")
    bad = [s for s in settings.schemes if s not in SCHEMES]
    if bad or not settings.schemes:
        raise InvalidParameterError(f"unknown scheme(s) {', '.join(bad) or '(none)'}; valid: {', '.join(SCHEMES)}")
    if settings.levels < 1:
        raise InvalidParameterError(f"levels must be >= 1, got {settings.levels}")
    if settings.workers < 1:
        raise InvalidParameterError(f"workers must be >= 1, got {settings.workers}")
    if settings.cfl is not None and not 0.0 < settings.cfl <= 1.0:
        raise InvalidParameterError(f"cfl must lie in (0, 1], got {settings.cfl}")
    return settings


def resolve_settings(flags: Mapping[str, object], config_path: Optional[str] = None, environ=None) -> RunSettings:
    """Merge every settings layer; flags set to None or () count as absent"""
    merged: Dict[str, object] = {}
    merged.update(env_overrides(environ))
    merged.update(_normalise(load_config_file(config_path)))
    given = {k: _parse_value(k, v) for k, v in _normalise(flags).items() if v is not None and v != ()}
    merged.update(given)
    return validate_settings(RunSettings(**merged))
