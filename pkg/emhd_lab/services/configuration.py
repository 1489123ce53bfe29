"""
Loading and echoing `key=value` configuration files.

    # comment
    grid.n=128
    physics.mu=0.1
    diag.c_r=0.01

Every problem found is reported at once through ConfigError.
"""
import logging
import math
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional

from pydantic import BaseModel, ValidationError

from emhd_lab.exceptions import ConfigError, EMHDError
from emhd_lab.models.config import RunConfig
from emhd_lab.models.fields import ForcingSpec

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_TEXT = "grid.n=64\n"

# exp(-(L/2)^2 / sigma^2) must stay below this for the periodized bump
PERIODIZATION_LIMIT = 1e-15


def known_keys() -> List[str]:
    """All dotted keys RunConfig accepts."""
    keys = []
    for name, field in RunConfig.model_fields.items():
        annotation = field.annotation
        if isinstance(annotation, type) and issubclass(annotation, BaseModel):
            keys.extend(f"{name}.{sub}" for sub in annotation.model_fields)
        else:
            keys.append(name)
    return sorted(keys)


def parse_pairs(text: str) -> Dict[str, str]:
    """Split the file into a {dotted key: raw value} mapping.

    Raises:
        ConfigError: On malformed lines, duplicate or unknown keys
    """
    pairs: Dict[str, str] = {}
    problems: List[str] = []
    allowed = set(known_keys())
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected key=value, got {raw.strip()!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in allowed:
            problems.append(f"line {lineno}: unknown key {key!r}")
        elif key in pairs:
            problems.append(f"line {lineno}: duplicate key {key!r}")
        else:
            pairs[key] = value
    if problems:
        raise ConfigError(problems)
    return pairs


def _nest(pairs: Mapping[str, str]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for key, value in pairs.items():
        if "." in key:
            section, name = key.split(".", 1)
            nested.setdefault(section, {})[name] = value
        else:
            nested[key] = value
    return nested


def _describe(error: Dict[str, Any]) -> str:
    location = ".".join(str(part) for part in error["loc"])
    if error["type"] == "missing":
        return f"missing required key {location!r}"
    message = error["msg"].removeprefix("Value error, ")
    return f"{location}: {message}" if location else message


def cross_field_violations(config: RunConfig) -> List[str]:
    """Checks spanning several sections; range violations may be downgraded by diag.allow_out_of_range.

    Returns:
        Messages for every hard violation (warnings are logged, not returned)
    """
    problems: List[str] = []
    soft: List[str] = []
    diag = config.diag
    experiment = config.experiment.name
    r = diag.r

    try:
        ForcingSpec.parse(config.physics.forcing).validate(config.torus_grid())
    except (ValueError, EMHDError) as error:
        problems.append(f"physics.forcing: {error}")

    if diag.s is not None:
        if not r > 2:
            problems.append(f"diag.s needs diag.r > 2, got r={r}")
        else:
            total = 2.0 / diag.s + (0.0 if math.isinf(r) else 2.0 / r)
            if total > 1.0 + 1e-12:
                problems.append(f"diag.s={diag.s} with diag.r={r} violates 2/s + 2/r <= 1")

    if experiment in ("sync", "wavenumber") and not 2.0 < r < 4.0:
        soft.append(f"diag.r={r} outside (2, 4) required by the B wavenumber")
    if experiment == "sync" and 2.0 < r:
        low, high = -2.0 / r, 2.0 / r - 1.0
        if not low < diag.sobolev_s < high:
            soft.append(f"diag.sobolev_s={diag.sobolev_s} outside ({low:.6g}, {high:.6g}) for r={r}")
    if experiment == "monitor" and not (2.0 < r < math.inf):
        soft.append(f"diag.r={r} outside (2, inf) required by the monitor")

    if experiment == "radial":
        half = config.grid.l / 2.0
        for key, sigma in (("experiment.sigma_a", config.experiment.sigma_a),
                           ("experiment.sigma_b", config.experiment.sigma_b)):
            bound = math.exp(-(half / sigma) ** 2)
            if bound > PERIODIZATION_LIMIT:
                problems.append(f"{key}={sigma} gives periodization error {bound:.3e} > {PERIODIZATION_LIMIT:g}")

    if soft:
        if diag.allow_out_of_range:
            for message in soft:
                logger.warning("%s (allowed by diag.allow_out_of_range)", message)
        else:
            problems.extend(soft)
    return problems


def load_config(text: str, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Parse and validate configuration text.

    Args:
        text: UTF-8 key=value lines with # comments
        overrides: Dotted keys applied on top of the file before validation

    Returns:
        A fully populated RunConfig

    Raises:
        ConfigError: Listing every violation found
    """
    pairs = parse_pairs(text)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in known_keys():
            raise ConfigError([f"unknown override key {key!r}"])
        pairs[key] = str(value)
    try:
        config = RunConfig.model_validate(_nest(pairs))
    except ValidationError as error:
        raise ConfigError([_describe(e) for e in error.errors()]) from error
    problems = cross_field_violations(config)
    if problems:
        raise ConfigError(problems)
    logger.debug("configuration loaded: %d explicit key(s)", len(pairs))
    return config


def _echo_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def flatten_config(config: RunConfig) -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for name in RunConfig.model_fields:
        value = getattr(config, name)
        if isinstance(value, BaseModel):
            for sub in type(value).model_fields:
                flat[f"{name}.{sub}"] = getattr(value, sub)
        else:
            flat[name] = value
    return flat


def echo_config(config: RunConfig) -> str:
    """Every key in sorted order, omitting unset optional values; load_config inverts it."""
    lines = [f"{key}={_echo_value(value)}"
             for key, value in sorted(flatten_config(config).items()) if value is not None]
    return "\n".join(lines) + "\n"
