"""Raw-bit extraction from quantized event streams.

Three schemes: parity of per-window event counts, parity of inter-event
tick intervals, and pairwise comparison of consecutive intervals; plus
multi-chip block assembly for the conditioner.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import rng_eval
from .decay_sim import TickStream
from .errors import InsufficientDataError, SourceUnderrunError, ValidationError

DEFAULT_BLOCK_BITS = 600

# one bit per window: cap the output so a tiny window over a long tick span
# cannot silently demand terabytes
_MAX_WINDOW_BITS = 1 << 31


class ExtractionMethod(enum.Enum):
    COUNT_WINDOW = "count-window"
    INTERVAL_PARITY = "interval-parity"
    INTERVAL_COMPARE = "interval-compare"

    @classmethod
    def parse(cls, text: str) -> "ExtractionMethod":
        try:
            return cls(text.strip().lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ValidationError(
                f"unknown extraction method {text!r} (choices: {choices})"
            ) from None


@dataclass(frozen=True)
class RawBitBlock:
    """Extracted raw bits with their assessed min-entropy, pre-conditioning."""

    bits: np.ndarray
    source_method: ExtractionMethod
    min_entropy_per_bit: float

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        object.__setattr__(self, "bits", bits)
        if bits.size == 0:
            raise ValidationError("a raw bit block cannot be empty")
        if not 0.0 < self.min_entropy_per_bit <= 1.0:
            raise ValidationError(
                f"min_entropy_per_bit must lie in (0, 1] (got {self.min_entropy_per_bit})"
            )


def extract_count_window(stream: TickStream, window_ticks: int) -> np.ndarray:
    """One bit per window of window_ticks ticks: the parity of its event count.

    Windows run consecutively from tick 0 through the window containing the
    last event; interior empty windows contribute a 0 bit.
    """
    if window_ticks < 1:
        raise ValidationError(f"window_ticks must be at least 1 (got {window_ticks})")
    if len(stream) == 0:
        return np.zeros(0, dtype=np.uint8)
    idx = stream.ticks // np.uint64(window_ticks)
    n_windows = int(idx[-1]) + 1
    if n_windows > _MAX_WINDOW_BITS:
        raise ValidationError(
            f"window_ticks {window_ticks} spans {n_windows} windows over this "
            f"stream, above the {_MAX_WINDOW_BITS} limit; use a larger window"
        )
    counts = np.bincount(idx.astype(np.int64), minlength=n_windows)
    return (counts & 1).astype(np.uint8)


def extract_parity(stream: TickStream) -> np.ndarray:
    """One bit per inter-event interval: 1 if it spans an odd number of ticks.

    n+1 events yield n bits; fewer than two events yield none.
    """
    if len(stream) < 2:
        return np.zeros(0, dtype=np.uint8)
    return (np.diff(stream.ticks) & 1).astype(np.uint8)


def extract_compare(stream: TickStream, invert: bool = False) -> np.ndarray:
    """Sliding comparison of consecutive intervals d_i vs d_{i+1}.

    Default mapping: d_i > d_{i+1} emits 0, d_i < d_{i+1} emits 1, and equal
    intervals emit nothing (a tie carries no order information, so skipping
    avoids injecting a deterministic bias). Set invert=True for the opposite
    mapping. n+1 events yield at most n-1 bits.
    """
    if len(stream) < 3:
        return np.zeros(0, dtype=np.uint8)
    d = np.diff(stream.ticks)
    a, b = d[:-1], d[1:]
    mask = a != b
    bits = (a < b)[mask]
    if invert:
        bits = ~bits
    return bits.astype(np.uint8)


def extract_bits(
    stream: TickStream,
    method: ExtractionMethod,
    window_ticks: int | None = None,
    invert: bool = False,
) -> np.ndarray:
    """Dispatch to the configured extraction scheme."""
    if method is ExtractionMethod.COUNT_WINDOW:
        if window_ticks is None:
            raise ValidationError("count-window extraction needs window_ticks")
        return extract_count_window(stream, window_ticks)
    if method is ExtractionMethod.INTERVAL_PARITY:
        return extract_parity(stream)
    if method is ExtractionMethod.INTERVAL_COMPARE:
        return extract_compare(stream, invert=invert)
    raise ValidationError(f"unknown extraction method {method!r}")


def assemble_block(
    streams,
    target_bits: int = DEFAULT_BLOCK_BITS,
    source_method: ExtractionMethod = ExtractionMethod.INTERVAL_COMPARE,
    min_entropy_per_bit: float | None = None,
) -> RawBitBlock:
    """Concatenate per-chip bit sequences in chip order and cut to target_bits.

    A shortfall raises SourceUnderrunError naming the missing bit count:
    this is the pipeline's entropy-source failure signal. When no calibrated
    min-entropy is supplied, a most-common-value estimate over the full
    (pre-truncation) input stands in: two-bit symbols when at least 2000
    input bits exist (captures adjacent-bit dependence), single bits when
    at least 1000 do, otherwise an error.
    """
    if target_bits < 1:
        raise ValidationError(f"target_bits must be at least 1 (got {target_bits})")
    parts = [np.asarray(s, dtype=np.uint8) for s in streams]
    combined = np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)
    if combined.size < target_bits:
        raise SourceUnderrunError(needed=target_bits, got=combined.size)
    if min_entropy_per_bit is None:
        if combined.size >= 2000:
            min_entropy_per_bit = rng_eval.min_entropy_mcv(combined, block_bits=2)
        elif combined.size >= 1000:
            min_entropy_per_bit = rng_eval.min_entropy_mcv(combined, block_bits=1)
        else:
            raise InsufficientDataError(
                "cannot self-calibrate min-entropy on fewer than 1000 bits; "
                "pass min_entropy_per_bit from a calibration run"
            )
    return RawBitBlock(
        bits=combined[:target_bits],
        source_method=source_method,
        min_entropy_per_bit=min_entropy_per_bit,
    )
