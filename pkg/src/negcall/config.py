"""Scenario configuration: flat ``key = value`` files mirrored by CLI flags.

Keys are the long flag names with dashes replaced by underscores::

    # negcall scenario
    backend = euler_qv
    steps = 4096
    tau_max = 40
    paths = 100000
    levels = 1, 5, 10
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .economy import CLAIMS
from .errors import ConfigError
from .kernels import check_seed

BACKENDS = ("euler_qv", "euler_uniform_t", "exact_law")
FORMATS = ("csv", "json", "both")
MIN_STAT_PATHS = 100
DEFAULT_SEED = 20100423
DEFAULT_N_LIST = (64, 128, 256, 512, 1024, 2048, 4096)


def _bool(v: str) -> bool:
    s = str(v).strip().lower()
    if s in {"1", "true", "yes", "on"}:
        return True
    if s in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _floats(v) -> tuple:
    if isinstance(v, (list, tuple)):
        return tuple(float(x) for x in v)
    return tuple(float(x) for x in str(v).replace(",", " ").split())


def _ints(v) -> tuple:
    if isinstance(v, (list, tuple)):
        return tuple(int(x) for x in v)
    return tuple(int(x) for x in str(v).replace(",", " ").split())


def _opt_int(v):
    if v is None or str(v).strip().lower() in {"", "none"}:
        return None
    return int(v)


@dataclass(frozen=True)
class ScenarioConfig:
    claim: str = "atm_call"
    backend: str = "euler_qv"
    steps: int = 4096
    tau_max: float = 40.0
    paths: int = 10_000
    seed: int = DEFAULT_SEED
    alpha: float = 0.01
    levels: tuple = (1.0, 5.0, 10.0)
    out: str = "negcall_out"
    format: str = "both"
    bridge_correction: bool = True
    threads: int | None = None
    n_list: tuple = DEFAULT_N_LIST
    hedge_paths: int = 10_000
    record_nodes: int = 33
    corrupt_oracle: bool = field(default=False, repr=False)

    @property
    def grid_kind(self) -> str:
        return {"euler_qv": "uniform_qv", "euler_uniform_t": "uniform_t"}.get(self.backend, "uniform_qv")

    def validate(self, statistical: bool = True) -> "ScenarioConfig":
        if self.claim not in CLAIMS:
            raise ConfigError(f"unknown claim {self.claim!r}; built-ins: {sorted(CLAIMS)}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.steps < 2:
            raise ConfigError("steps must be >= 2")
        if not self.tau_max > 0:
            raise ConfigError("tau_max must be positive")
        if self.paths < 1 or self.hedge_paths < 1:
            raise ConfigError("path counts must be positive")
        if statistical and (self.paths < MIN_STAT_PATHS or self.hedge_paths < MIN_STAT_PATHS):
            raise ConfigError(f"statistical verdicts need at least {MIN_STAT_PATHS} paths")
        if not 0 < self.alpha < 0.5:
            raise ConfigError("alpha must lie in (0, 0.5)")
        if not self.levels or any(not L > 0 for L in self.levels):
            raise ConfigError("levels must be a nonempty list of positive depths")
        if not self.n_list or any(n < 2 for n in self.n_list):
            raise ConfigError("n_list must be a nonempty list of step counts >= 2")
        if self.record_nodes < 2:
            raise ConfigError("record_nodes must be >= 2")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be positive")
        try:
            check_seed(self.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("corrupt_oracle")
        # results depend on neither
        d.pop("threads")
        d.pop("out")
        d["levels"] = list(self.levels)
        d["n_list"] = list(self.n_list)
        return d


_CONVERTERS = {
    "claim": str,
    "backend": str,
    "steps": int,
    "tau_max": float,
    "paths": int,
    "seed": int,
    "alpha": float,
    "levels": _floats,
    "out": str,
    "format": str,
    "bridge_correction": _bool,
    "threads": _opt_int,
    "n_list": _ints,
    "hedge_paths": int,
    "record_nodes": int,
    "corrupt_oracle": _bool,
}

KEYS = tuple(_CONVERTERS)


def coerce(key: str, value):
    if key not in _CONVERTERS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return _CONVERTERS[key](value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        values[key] = coerce(key, value)
    return values


def load_config(path=None, overrides: dict | None = None, statistical: bool = True) -> ScenarioConfig:
    """Build a config from an optional file, then apply flag overrides."""
    values = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
        values.update(parse_config_text(text, str(p)))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = coerce(key, value)
    if "levels" in values and not values["levels"]:
        raise ConfigError("levels must not be empty")
    return ScenarioConfig(**values).validate(statistical=statistical)
