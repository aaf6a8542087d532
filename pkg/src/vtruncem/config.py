"""
Run configuration

``Settings`` holds environment defaults (``VTRUNCEM_WORKERS``,
``VTRUNCEM_CHUNK_SIZE``, ``VTRUNCEM_SEED``). ``RunConfig`` is one
command with its flags, checked for consistency. Config files use
``[section]`` headers and ``key = value`` lines; sections only group
keys, and every key must be unique across the file.
"""

import re
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError as PydanticValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError

Command = Literal["validate", "simulate", "converge", "moments", "stability", "list-models"]

_POWER = re.compile(r"^\s*2\s*\^\s*([+-]?\d+)\s*$")
_SECTION = re.compile(r"^\[\s*([A-Za-z0-9_.-]+)\s*\]$")

# file/flag spellings → RunConfig field
KEY_ALIASES = {
    "T": "horizon",
    "t": "horizon",
    "dt-list": "dt_list",
    "dt-ref": "dt_ref",
    "delta-star": "delta_star",
    "chunk-size": "chunk_size",
    "burn-in": "burn_in",
    "path-id": "path_id",
    "output": "out",
    "M": "paths",
}


class Settings(BaseSettings):
    """Defaults read from the environment"""

    model_config = SettingsConfigDict(env_prefix="VTRUNCEM_")

    workers: int = Field(1, ge=1)
    chunk_size: int = Field(64, ge=1)
    seed: int = 0


def parse_dt(text: Any) -> float:
    """A step size: a plain float or a power of two written ``2^-k``."""
    if isinstance(text, (int, float)):
        return float(text)
    match = _POWER.match(str(text))
    if match:
        return 2.0 ** int(match.group(1))
    try:
        return float(str(text).strip())
    except ValueError:
        raise ConfigError(f"malformed step size '{text}'") from None


def parse_dt_list(text: Any) -> List[float]:
    """
    Expand a step-size list

    ``2^-6..2^-12`` gives every power of two between the ends, both
    included; otherwise a comma list of step sizes.
    """
    if isinstance(text, (list, tuple)):
        return [parse_dt(item) for item in text]
    text = str(text).strip()
    if ".." in text:
        first, _, last = text.partition("..")
        lo, hi = _POWER.match(first), _POWER.match(last)
        if lo is None or hi is None:
            raise ConfigError(f"range '{text}' must join two powers of two, e.g. 2^-6..2^-12")
        a, b = int(lo.group(1)), int(hi.group(1))
        step = -1 if a > b else 1
        return [2.0**k for k in range(a, b + step, step)]
    items = [item for item in text.split(",") if item.strip()]
    if not items:
        raise ConfigError("empty step-size list")
    return [parse_dt(item) for item in items]


def parse_state(text: Any) -> List[float]:
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, (list, tuple)):
        return [float(item) for item in text]
    try:
        return [float(item) for item in str(text).split(",") if item.strip()]
    except ValueError:
        raise ConfigError(f"malformed state '{text}', expected a comma list of numbers") from None


class RunConfig(BaseModel):
    """One CLI command with its flags"""

    command: Command
    model: Optional[str] = None
    scheme: str = "truncated"
    dt: Optional[float] = None
    dt_list: Optional[List[float]] = None
    dt_ref: Optional[float] = None
    horizon: Optional[float] = None
    paths: int = Field(1, ge=1)
    path_id: int = Field(0, ge=0)
    seed: int = 0
    q: float = 1.0
    rho: Optional[float] = None
    threshold: float = 1.0
    burn_in: float = Field(0.2, ge=0.0, le=0.9)
    x0: Optional[List[float]] = None
    delta_star: Optional[float] = None
    out: Optional[Path] = None
    workers: int = Field(1, ge=1)
    chunk_size: int = Field(64, ge=1)

    @field_validator("dt", "dt_ref", "delta_star", mode="before")
    @classmethod
    def _step(cls, value):
        return None if value is None else parse_dt(value)

    @field_validator("dt_list", mode="before")
    @classmethod
    def _steps(cls, value):
        return None if value is None else parse_dt_list(value)

    @field_validator("x0", mode="before")
    @classmethod
    def _state(cls, value):
        return None if value is None else parse_state(value)

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        required = {
            "validate": ["model"],
            "simulate": ["model", "dt", "horizon"],
            "converge": ["model", "dt_list", "dt_ref", "horizon"],
            "moments": ["model", "dt_list", "horizon"],
            "stability": ["model", "dt", "horizon"],
            "list-models": [],
        }[self.command]
        missing = [name.replace("_", "-") for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"'{self.command}' requires {', '.join('--' + m for m in missing)}")
        steps = [s for s in [self.dt, self.dt_ref, self.delta_star] + list(self.dt_list or []) if s is not None]
        if any(not s > 0 for s in steps):
            raise ValueError("step sizes must be positive")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("T must be positive")
        if self.command == "moments" and self.paths < 2:
            raise ValueError("'moments' needs at least 2 paths")
        if self.command == "converge" and self.paths < 2:
            raise ValueError("'converge' needs at least 2 paths")
        if not self.q > 0:
            raise ValueError("q must be positive")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        return self

    def step_sizes(self) -> List[float]:
        """Every step size the command will simulate with."""
        steps = list(self.dt_list or [])
        for extra in (self.dt, self.dt_ref):
            if extra is not None:
                steps.append(extra)
        return steps


def canonical_key(key: str) -> str:
    key = key.strip().lstrip("-")
    key = KEY_ALIASES.get(key, key)
    return key.replace("-", "_")


def read_config_file(path) -> Dict[str, Tuple[str, int]]:
    """
    Read ``key = value`` lines into key → (value, line number)

    Raises:
        ConfigError: unreadable file, malformed line, unknown or duplicate key
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    known = set(RunConfig.model_fields)
    values: Dict[str, Tuple[str, int]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or _SECTION.match(line):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value', got '{line}'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = canonical_key(key)
        if key not in known:
            raise ConfigError(f"{path}:{line_no}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"{path}: key '{key}' set on line {values[key][1]} and again on line {line_no}")
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "'\"":
            value = value[1:-1]
        values[key] = (value, line_no)
    return values


def build_run_config(values: Mapping[str, Any], settings: Optional[Settings] = None) -> RunConfig:
    """
    RunConfig from merged values, environment defaults filling the gaps

    Raises:
        ConfigError: the values do not form a valid configuration
    """
    settings = settings if settings is not None else Settings()
    merged = {"workers": settings.workers, "chunk_size": settings.chunk_size, "seed": settings.seed}
    merged.update({key: value for key, value in values.items() if value is not None})
    try:
        return RunConfig(**merged)
    except PydanticValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(problems) from None


def load_config_file(path, overrides: Optional[Mapping[str, Any]] = None, settings: Optional[Settings] = None) -> RunConfig:
    """Config file values, replaced by any override that is not None."""
    values: Dict[str, Any] = {key: value for key, (value, _) in read_config_file(path).items()}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[canonical_key(key)] = value
    return build_run_config(values, settings)
