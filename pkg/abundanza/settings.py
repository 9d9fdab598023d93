"""
Settings for the abundanza toolkit.

Every constant below can be overridden through an ``ABUNDANZA_<NAME>``
environment variable. Per-run values (precision, budgets, output) are
gathered into a :class:`RunConfig`, optionally loaded from a YAML file.
"""

import logging
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import yaml

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

ENV_PREFIX = "ABUNDANZA_"


def _env(name, default, cast=int):
    raw = os.environ.get(f"{ENV_PREFIX}{name}")
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"{ENV_PREFIX}{name}={raw!r} is not a valid value") from exc


# Ball arithmetic
PRECISION = _env("PRECISION", 128)
MAX_PRECISION = _env("MAX_PRECISION", 4096)

# Dense sieves: 8 bytes per entry, so 10^8 entries is ~800 MB
SIEVE_BUDGET = _env("SIEVE_BUDGET", 10**8)
SIEVE_HARD_LIMIT = 10**9

# Float pre-filter: relative margin under which a verdict is re-certified by balls
FLOAT_MARGIN = _env("FLOAT_MARGIN", 1e-6, float)

# Scans
CHUNK_SIZE = _env("CHUNK_SIZE", 2**20)
THREADS = _env("THREADS", os.cpu_count() or 1)

# Harmonic numbers are summed as exact fractions up to this index
EXACT_HARMONIC_LIMIT = _env("EXACT_HARMONIC_LIMIT", 10**4)

# Logging
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_LEVEL = _env("LOG_LEVEL", "WARNING", str)

OUTPUT_FORMATS = ("csv", "json")
BYTES_PER_SIEVE_ENTRY = 8


@dataclass(frozen=True)
class RunConfig:
    precision: int = PRECISION
    max_precision: int = MAX_PRECISION
    sieve_budget: int = SIEVE_BUDGET
    threads: int = THREADS
    output: Path | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.precision < 53:
            raise ConfigError(f"precision must be at least 53 bits, got {self.precision}")
        if self.precision > self.max_precision:
            raise ConfigError(
                f"precision {self.precision} exceeds max_precision {self.max_precision}"
            )
        if not 1 <= self.sieve_budget <= SIEVE_HARD_LIMIT:
            raise ConfigError(
                f"sieve_budget must lie in [1, {SIEVE_HARD_LIMIT}], got {self.sieve_budget}"
            )
        if self.threads < 1:
            raise ConfigError(f"threads must be positive, got {self.threads}")
        if self.format not in OUTPUT_FORMATS:
            raise ConfigError(f"format must be one of {OUTPUT_FORMATS}, got {self.format!r}")

    @property
    def precision_ladder(self):
        return precision_ladder(self.precision, self.max_precision)

    @property
    def sieve_memory_bytes(self):
        return self.sieve_budget * BYTES_PER_SIEVE_ENTRY

    def as_dict(self):
        data = asdict(self)
        data["output"] = str(self.output) if self.output else None
        return data


def precision_ladder(start=PRECISION, stop=MAX_PRECISION):
    """Doubling precisions from ``start`` up to and including ``stop``."""
    if start >= stop:
        return (start,)
    ladder = []
    bits = start
    while bits < stop:
        ladder.append(bits)
        bits *= 2
    ladder.append(stop)
    return tuple(ladder)


def load_config(path=None, **overrides):
    """
    Build a RunConfig from defaults, an optional YAML file and explicit overrides.

    ``ABUNDANZA_MAX_PRECISION`` in the environment always wins for
    ``max_precision``. Overrides whose value is None are ignored so that
    unset CLI flags fall through to the file or the defaults.
    """
    values = {}
    if path is not None:
        path = Path(path)
        try:
            loaded = yaml.safe_load(path.read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must contain a mapping")
        values.update(loaded)
        logger.debug(f"Loaded run config from {path}: {sorted(loaded)}")

    values.update({key: value for key, value in overrides.items() if value is not None})

    known = {field.name for field in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    env_max = os.environ.get(f"{ENV_PREFIX}MAX_PRECISION")
    if env_max is not None:
        values["max_precision"] = _env("MAX_PRECISION", MAX_PRECISION)
    if values.get("output") is not None:
        values["output"] = Path(values["output"])

    return RunConfig(**values)
