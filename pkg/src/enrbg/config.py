"""Flat key-value pipeline configuration with environment overrides.

Config files hold `section.key = value` lines. Every key can also arrive
from the environment as ENRBG_SECTION_KEY or from a command-line flag;
precedence is flags > environment > file.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .decay_sim import (
    DEFAULT_CHIP_COUNT,
    DEFAULT_RATE_HZ,
    DEFAULT_RESOLUTION_S,
    SourceConfig,
    _source_problems,
)
from .errors import ValidationError
from .extractor import ExtractionMethod
from .hash_drbg import DEFAULT_RESEED_INTERVAL, MAX_BITS_PER_REQUEST
from .toeplitz import DEFAULT_N_COLS, DEFAULT_N_ROWS, DEFAULT_POLYNOMIAL_TAPS

ENV_PREFIX = "ENRBG_"

# every recognized config key and its parser
_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in _BOOL_TRUE:
        return True
    if low in _BOOL_FALSE:
        return False
    raise ValidationError(f"expected a boolean, got {text!r}")


def _parse_taps(text: str) -> tuple:
    return tuple(int(t) for t in text.split(",") if t.strip())


KNOWN_KEYS = {
    "source.rate_hz": float,
    "source.resolution_s": float,
    "source.chip_count": int,
    "source.sim_seed": int,
    "source.duration_s": float,
    "extract.method": ExtractionMethod.parse,
    "extract.window_ticks": int,
    "extract.invert_compare": _parse_bool,
    "toeplitz.params_path": str,
    "toeplitz.first_column": str,
    "toeplitz.n_rows": int,
    "toeplitz.n_cols": int,
    "toeplitz.polynomial_taps": _parse_taps,
    "drbg.request_bits": int,
    "drbg.total_bits": int,
    "drbg.workers": int,
    "drbg.reseed_interval": int,
    "drbg.prediction_resistance": _parse_bool,
    "output_path": str,
    "report_path": str,
}


def fresh_sim_seed() -> int:
    """A 64-bit simulation seed drawn from the OS entropy pool."""
    return int.from_bytes(os.urandom(8), "little")


@dataclass
class PipelineConfig:
    """Validated settings for the end-to-end pipeline and its stages."""

    source: SourceConfig = field(default_factory=SourceConfig)
    duration_s: float = 2.0
    method: ExtractionMethod = ExtractionMethod.INTERVAL_COMPARE
    window_ticks: int | None = None
    invert_compare: bool = False
    toeplitz_params_path: str | None = None
    first_column_hex: str | None = None
    n_rows: int = DEFAULT_N_ROWS
    n_cols: int = DEFAULT_N_COLS
    polynomial_taps: tuple = DEFAULT_POLYNOMIAL_TAPS
    request_bits: int = 500_000
    total_bits: int = 1_000_000
    workers: int = 1
    reseed_interval: int = DEFAULT_RESEED_INTERVAL
    prediction_resistance: bool = False
    output_path: str | None = None
    report_path: str | None = None
    # provenance flags: set when reproducibility fixtures arrived explicitly
    seed_is_fixture: bool = False
    insecure_fixtures: bool = False

    def validate(self) -> None:
        """Check every invariant and report all violations together."""
        problems = _source_problems(
            self.source.rate_hz,
            self.source.resolution_s,
            self.source.chip_count,
            self.source.sim_seed,
        )
        if not self.duration_s > 0:
            problems.append(f"source.duration_s must be positive (got {self.duration_s})")
        if self.window_ticks is not None and self.window_ticks < 1:
            problems.append(f"extract.window_ticks must be positive (got {self.window_ticks})")
        if not 0 < self.n_rows < self.n_cols:
            problems.append(
                f"toeplitz shape must compress: 0 < n_rows < n_cols "
                f"(got {self.n_rows}x{self.n_cols})"
            )
        if self.n_rows % 4:
            problems.append(
                f"toeplitz.n_rows must be a multiple of 4 so conditioned blocks "
                f"encode to whole hex digits (got {self.n_rows})"
            )
        if self.workers < 1:
            problems.append(f"drbg.workers must be at least 1 (got {self.workers})")
        if self.request_bits < 8 or self.request_bits % 8:
            problems.append(
                f"drbg.request_bits must be a positive multiple of 8 (got {self.request_bits})"
            )
        if self.request_bits > MAX_BITS_PER_REQUEST:
            problems.append(
                f"drbg.request_bits exceeds the {MAX_BITS_PER_REQUEST}-bit per-request limit "
                f"(got {self.request_bits})"
            )
        if self.reseed_interval < 1:
            problems.append(f"drbg.reseed_interval must be positive (got {self.reseed_interval})")
        if self.total_bits < 1 or self.total_bits % self.request_bits:
            problems.append(
                f"drbg.total_bits ({self.total_bits}) must be a positive multiple of "
                f"drbg.request_bits ({self.request_bits})"
            )
        elif self.total_bits > self.request_bits * self.reseed_interval:
            problems.append(
                f"drbg.total_bits ({self.total_bits}) exceeds request_bits x reseed_interval "
                f"({self.request_bits} x {self.reseed_interval})"
            )
        if problems:
            raise ValidationError("; ".join(problems))

    def default_window_ticks(self) -> int:
        """Window sized for a mean count of 5 events at the configured rate."""
        if self.window_ticks is not None:
            return self.window_ticks
        return max(1, round(5.0 / (self.source.rate_hz * self.source.resolution_s)))


def parse_config_text(text: str, origin: str = "<config>") -> dict:
    """Parse `key = value` lines; '#' starts a comment, blanks are skipped."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{origin}: line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in KNOWN_KEYS:
            raise ValidationError(f"{origin}: line {lineno}: unknown key {key!r}")
        values[key] = val.strip()
    return values


def parse_config_file(path) -> dict:
    with open(path) as fh:
        return parse_config_text(fh.read(), origin=str(path))


def env_overrides(environ=None) -> dict:
    """Collect ENRBG_* variables that mirror config keys."""
    environ = os.environ if environ is None else environ
    values = {}
    for key in KNOWN_KEYS:
        var = ENV_PREFIX + key.replace(".", "_").upper()
        if var in environ:
            values[key] = environ[var]
    return values


def merge_mappings(file_values: dict, env_values: dict, flag_values: dict) -> dict:
    """Apply precedence: flags beat environment beats file."""
    merged = dict(file_values)
    merged.update(env_values)
    merged.update(flag_values)
    return merged


def build_config(values: dict, insecure_fixtures: bool = False) -> PipelineConfig:
    """Type-check raw string values and assemble a validated PipelineConfig."""
    typed = {}
    problems = []
    for key, raw in values.items():
        if key not in KNOWN_KEYS:
            problems.append(f"unknown key {key!r}")
            continue
        try:
            typed[key] = KNOWN_KEYS[key](raw) if isinstance(raw, str) else raw
        except (ValueError, ValidationError) as exc:
            problems.append(f"{key}: {exc}")
    if problems:
        raise ValidationError("; ".join(problems))

    seed_is_fixture = "source.sim_seed" in typed
    rate = typed.get("source.rate_hz", DEFAULT_RATE_HZ)
    res = typed.get("source.resolution_s", DEFAULT_RESOLUTION_S)
    chips = typed.get("source.chip_count", DEFAULT_CHIP_COUNT)
    seed = typed.get("source.sim_seed", fresh_sim_seed())
    # collect source problems up front so one error can list everything
    source_problems = _source_problems(rate, res, chips, seed)
    if source_problems:
        source = SourceConfig()
    else:
        source = SourceConfig(rate_hz=rate, resolution_s=res, chip_count=chips, sim_seed=seed)
    config = PipelineConfig(
        source=source,
        duration_s=typed.get("source.duration_s", 2.0),
        method=typed.get("extract.method", ExtractionMethod.INTERVAL_COMPARE),
        window_ticks=typed.get("extract.window_ticks"),
        invert_compare=typed.get("extract.invert_compare", False),
        toeplitz_params_path=typed.get("toeplitz.params_path"),
        first_column_hex=typed.get("toeplitz.first_column"),
        n_rows=typed.get("toeplitz.n_rows", DEFAULT_N_ROWS),
        n_cols=typed.get("toeplitz.n_cols", DEFAULT_N_COLS),
        polynomial_taps=typed.get("toeplitz.polynomial_taps", DEFAULT_POLYNOMIAL_TAPS),
        request_bits=typed.get("drbg.request_bits", 500_000),
        total_bits=typed.get("drbg.total_bits", 1_000_000),
        workers=typed.get("drbg.workers", 1),
        reseed_interval=typed.get("drbg.reseed_interval", DEFAULT_RESEED_INTERVAL),
        prediction_resistance=typed.get("drbg.prediction_resistance", False),
        output_path=typed.get("output_path"),
        report_path=typed.get("report_path"),
        seed_is_fixture=seed_is_fixture,
        insecure_fixtures=insecure_fixtures,
    )
    try:
        config.validate()
        pipeline_problems = []
    except ValidationError as exc:
        pipeline_problems = [str(exc)]
    if source_problems or pipeline_problems:
        raise ValidationError("; ".join(source_problems + pipeline_problems))
    return config
