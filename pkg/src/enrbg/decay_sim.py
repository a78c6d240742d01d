"""Poisson-process simulation of a radioactive-decay entropy chip.

Detection events arrive as a homogeneous Poisson process with the chip's
effective detected rate; a time-to-digital converter quantizes each event
time onto an integer tick grid. The simulation PRNG is a reproducibility
knob only, never a security input: downstream security rests on the
physical source this module stands in for.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ValidationError

DEFAULT_RATE_HZ = 46.0
DEFAULT_RESOLUTION_S = 1e-7
DEFAULT_CHIP_COUNT = 15

QTIK_MAGIC = b"QTIK"
_QTIK_HEADER = struct.Struct("<4sdQ")

_U64_MAX = (1 << 64) - 1
# keep single allocations bounded when simulating very long durations
_MAX_CHUNK = 1 << 22


def _source_problems(rate_hz, resolution_s, chip_count, sim_seed) -> list:
    problems = []
    if not rate_hz > 0:
        problems.append(f"rate_hz must be positive (got {rate_hz})")
    if not resolution_s > 0:
        problems.append(f"resolution_s must be positive (got {resolution_s})")
    if chip_count < 1:
        problems.append(f"chip_count must be at least 1 (got {chip_count})")
    if rate_hz > 0 and resolution_s > 0 and rate_hz * resolution_s >= 0.5:
        problems.append(
            f"rate_hz * resolution_s must stay below 0.5 so intervals span "
            f"several ticks (got {rate_hz * resolution_s})"
        )
    if not 0 <= sim_seed <= _U64_MAX:
        problems.append(f"sim_seed must be an unsigned 64-bit integer (got {sim_seed})")
    return problems


@dataclass(frozen=True)
class SourceConfig:
    """Effective detected-event model for one simulated chip array.

    rate_hz is the detected event rate (not the physical source activity,
    which detector geometry attenuates by an unquantified factor).
    """

    rate_hz: float = DEFAULT_RATE_HZ
    resolution_s: float = DEFAULT_RESOLUTION_S
    chip_count: int = DEFAULT_CHIP_COUNT
    sim_seed: int = 0

    def __post_init__(self):
        problems = _source_problems(
            self.rate_hz, self.resolution_s, self.chip_count, self.sim_seed
        )
        if problems:
            raise ValidationError("; ".join(problems))


@dataclass(frozen=True)
class TickStream:
    """Quantized detection-event timestamps from one chip, in TDC ticks."""

    ticks: np.ndarray
    resolution_s: float

    def __post_init__(self):
        arr = np.asarray(self.ticks, dtype=np.uint64)
        object.__setattr__(self, "ticks", arr)
        if not self.resolution_s > 0:
            raise ValidationError(f"resolution_s must be positive (got {self.resolution_s})")
        if arr.size > 1 and not np.all(arr[1:] >= arr[:-1]):
            raise ValidationError("ticks must be non-decreasing")

    def __len__(self) -> int:
        return int(self.ticks.size)

    @property
    def has_ties(self) -> bool:
        """True when quantization collapsed distinct events onto one tick."""
        return bool(self.ticks.size > 1 and np.any(self.ticks[1:] == self.ticks[:-1]))


def sample_intervals(rate_hz: float, count: int, sim_seed: int) -> np.ndarray:
    """Draw inter-arrival times from Exponential(rate_hz), in seconds.

    Inverse-transform sampling of a seeded PCG64 stream: t = -ln(1 - u) / rate
    with u in [0, 1), so u = 1 never occurs and ln(0) is unreachable.
    Identical (rate_hz, count, sim_seed) gives identical output.
    """
    if not rate_hz > 0:
        raise ValidationError(f"rate_hz must be positive (got {rate_hz})")
    if count < 1:
        raise ValidationError(f"count must be at least 1 (got {count})")
    if not 0 <= sim_seed <= _U64_MAX:
        raise ValidationError(f"sim_seed must be an unsigned 64-bit integer (got {sim_seed})")
    rng = np.random.Generator(np.random.PCG64(sim_seed))
    u = rng.random(count)
    return -np.log1p(-u) / rate_hz


def chip_seed(sim_seed: int, chip_index: int) -> int:
    """Derive the per-chip sub-seed from (sim_seed, chip_index).

    Uses numpy's SeedSequence with the chip index as spawn key, so distinct
    chips get decorrelated streams and the derivation is documented and
    stable across platforms.
    """
    ss = np.random.SeedSequence(entropy=sim_seed, spawn_key=(chip_index,))
    lo, hi = ss.generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)


def quantize_times(times_s, resolution_s: float) -> np.ndarray:
    """Quantize event times (seconds) to integer ticks: floor(t / resolution)."""
    if not resolution_s > 0:
        raise ValidationError(f"resolution_s must be positive (got {resolution_s})")
    times = np.asarray(times_s, dtype=np.float64)
    return np.floor(times / resolution_s).astype(np.uint64)


def simulate_chip(config: SourceConfig, duration_s: float, chip_index: int) -> TickStream:
    """Simulate one chip for duration_s seconds and quantize its events."""
    if not duration_s > 0:
        raise ValidationError(f"duration_s must be positive (got {duration_s})")
    if not 0 <= chip_index < config.chip_count:
        raise ValidationError(
            f"chip_index must be in [0, {config.chip_count}) (got {chip_index})"
        )
    rng = np.random.Generator(np.random.PCG64(chip_seed(config.sim_seed, chip_index)))
    expected = config.rate_hz * duration_s
    chunk = min(max(int(expected * 1.2) + 64, 128), _MAX_CHUNK)
    pieces = []
    t = 0.0
    while t < duration_s:
        intervals = -np.log1p(-rng.random(chunk)) / config.rate_hz
        cum = t + np.cumsum(intervals)
        pieces.append(cum)
        t = float(cum[-1])
    times = np.concatenate(pieces)
    times = times[times < duration_s]
    return TickStream(quantize_times(times, config.resolution_s), config.resolution_s)


def write_tick_stream(path, stream: TickStream, text: bool = False) -> None:
    """Write a tick stream; binary "QTIK" format, or one decimal tick per line."""
    if text:
        with open(path, "w") as fh:
            for tick in stream.ticks:
                fh.write(f"{int(tick)}\n")
        return
    with open(path, "wb") as fh:
        fh.write(_QTIK_HEADER.pack(QTIK_MAGIC, stream.resolution_s, stream.ticks.size))
        fh.write(stream.ticks.astype("<u8").tobytes())


def read_tick_stream(path, text: bool = False, resolution_s: float | None = None) -> TickStream:
    """Read a tick stream; text mode carries no resolution, so pass one in."""
    if text:
        if resolution_s is None:
            raise ValidationError("text tick streams need an explicit resolution_s")
        with open(path) as fh:
            ticks = [int(line) for line in fh if line.strip()]
        return TickStream(np.asarray(ticks, dtype=np.uint64), resolution_s)
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _QTIK_HEADER.size:
        raise FormatError(f"{path}: truncated header at byte offset {len(data)}")
    magic, res, count = _QTIK_HEADER.unpack_from(data)
    if magic != QTIK_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte offset 0")
    payload = data[_QTIK_HEADER.size:]
    if len(payload) < 8 * count:
        raise FormatError(
            f"{path}: payload short at byte offset {_QTIK_HEADER.size + len(payload)} "
            f"(need {8 * count} bytes for {count} ticks)"
        )
    ticks = np.frombuffer(payload, dtype="<u8", count=count)
    return TickStream(ticks, res)
