"""Statistical evaluation battery for byte and bit streams.

Covers the classic five-test ENT battery (bit-exact to that tool's
definitions), lagged autocorrelation, byte-frequency histograms, the
SP 800-90B most-common-value min-entropy estimator, monobit and runs
smoke tests, and Fisher's p-value combiner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc

from .bitio import as_bit_array
from .errors import (
    InsufficientDataError,
    ValidationError,
    ZeroVarianceError,
)

_MONTE_CARLO_GROUP = 6
_INSIDE_SQ = (2**24 - 1) ** 2  # exact integer circle test, no floating radius
_CHUNK_BYTES = 6 * (1 << 20)  # streaming pass granularity, multiple of 6

# Table row labels for the human-readable report, in battery order.
_REPORT_ROWS = (
    "Entropy (bits per byte)",
    "Compression",
    "Chi-square distribution",
    "Arithmetic mean value",
    "Monte Carlo value for Pi",
    "Serial correlation coefficient",
)


@dataclass(frozen=True)
class EntReport:
    """Results of the five-test battery over one byte stream."""

    entropy_bits_per_byte: float
    compression_percent: int
    chi_square_statistic: float
    chi_square_exceed_percent: float
    arithmetic_mean: float
    monte_carlo_pi: float
    pi_error_percent: float
    serial_correlation: float
    serial_correlation_degenerate: bool = False


@dataclass(frozen=True)
class AutocorrSeries:
    """Pearson autocorrelation coefficients for lags 0..max_lag."""

    lags: np.ndarray
    coefficients: np.ndarray


def _as_byte_array(data) -> np.ndarray:
    if isinstance(data, (bytes, bytearray, memoryview)):
        return np.frombuffer(data, dtype=np.uint8)
    arr = np.asarray(data)
    if arr.dtype != np.uint8:
        raise ValidationError("byte stream must be bytes or a uint8 array")
    return arr.ravel()


def byte_histogram(data) -> np.ndarray:
    """Exact occurrence counts for each byte value 0..255."""
    arr = _as_byte_array(data)
    return np.bincount(arr, minlength=256).astype(np.int64)


def chi_square_exceed_percent(statistic: float, dof: int = 255) -> float:
    """Percentage of the time a chi-square(dof) draw exceeds the statistic."""
    return 100.0 * float(gammaincc(dof / 2.0, statistic / 2.0))


def ent_report(data) -> EntReport:
    """Run the five-test battery on a byte stream.

    Definitions follow the classic tool: plug-in byte entropy, chi-square
    against uniform with its upper-tail exceedance percentage, arithmetic
    mean, Monte Carlo pi from non-overlapping 6-byte points with an exact
    integer inside-circle test, and the circular serial correlation
    coefficient (last byte wraps to the first).
    """
    arr = _as_byte_array(data)
    n = arr.size
    if n < _MONTE_CARLO_GROUP:
        raise ValidationError(
            f"byte stream too short: need at least {_MONTE_CARLO_GROUP} bytes, got {n}"
        )

    hist = np.bincount(arr, minlength=256)
    p = hist / n
    nz = p[p > 0]
    entropy = float(-(nz * np.log2(nz)).sum())
    # classic tool prints a truncated integer percentage
    compression = int(100.0 * (8.0 - entropy) / 8.0)

    expected = n / 256.0
    chi = float(((hist - expected) ** 2 / expected).sum())
    exceed = chi_square_exceed_percent(chi)

    values = np.arange(256, dtype=np.int64)
    total = int(hist @ values)
    mean = total / n

    # chunked passes keep peak memory flat on multi-hundred-MB streams
    groups = n // _MONTE_CARLO_GROUP
    inside = 0
    for start in range(0, groups * _MONTE_CARLO_GROUP, _CHUNK_BYTES):
        pts = arr[start : min(start + _CHUNK_BYTES, groups * _MONTE_CARLO_GROUP)]
        m = pts.size // _MONTE_CARLO_GROUP
        pts = pts[: m * _MONTE_CARLO_GROUP].reshape(m, _MONTE_CARLO_GROUP).astype(np.uint64)
        x = (pts[:, 0] << 16) | (pts[:, 1] << 8) | pts[:, 2]
        y = (pts[:, 3] << 16) | (pts[:, 4] << 8) | pts[:, 5]
        inside += int(np.count_nonzero(x * x + y * y <= _INSIDE_SQ))
    mc_pi = 4.0 * inside / groups
    pi_err = 100.0 * abs(mc_pi - math.pi) / math.pi

    # serial correlation in exact integer arithmetic: products are < 2^16 and
    # there are < 2^40 of them, so the running sums stay well inside int64
    scct1 = 0
    for start in range(0, n - 1, _CHUNK_BYTES):
        stop = min(start + _CHUNK_BYTES, n - 1)
        a = arr[start : stop].astype(np.int64)
        b = arr[start + 1 : stop + 1].astype(np.int64)
        scct1 += int(a @ b)
    scct1 += int(arr[-1]) * int(arr[0])  # wraparound pair
    scct2 = total * total
    scct3 = int(hist @ (values * values))
    denom = n * scct3 - scct2
    if denom == 0:
        scc, degenerate = 0.0, True
    else:
        scc, degenerate = (n * scct1 - scct2) / denom, False

    return EntReport(
        entropy_bits_per_byte=entropy,
        compression_percent=compression,
        chi_square_statistic=chi,
        chi_square_exceed_percent=exceed,
        arithmetic_mean=mean,
        monte_carlo_pi=mc_pi,
        pi_error_percent=pi_err,
        serial_correlation=scc,
        serial_correlation_degenerate=degenerate,
    )


def autocorrelation(bits, max_lag: int) -> AutocorrSeries:
    """Pearson correlation between a bit sequence and its lag-k shifts.

    Exploits that for 0/1 data the sum of squares equals the sum, so each
    lag costs one dot product over the overlap.
    """
    arr = as_bit_array(bits)
    if max_lag < 1:
        raise ValidationError(f"max_lag must be at least 1 (got {max_lag})")
    n = arr.size
    if n <= max_lag:
        raise ValidationError(f"sequence length {n} must exceed max_lag {max_lag}")
    x = arr.astype(np.float64)
    csum = np.concatenate(([0.0], np.cumsum(x)))
    coeffs = np.empty(max_lag + 1)
    if csum[-1] in (0.0, float(n)):
        raise ZeroVarianceError("autocorrelation undefined for a constant sequence")
    coeffs[0] = 1.0
    for k in range(1, max_lag + 1):
        m = n - k
        sum_a = csum[m]                 # x[:m]
        sum_b = csum[n] - csum[k]       # x[k:]
        dot = float(np.dot(x[:m], x[k:]))
        var_a = m * sum_a - sum_a * sum_a
        var_b = m * sum_b - sum_b * sum_b
        if var_a <= 0.0 or var_b <= 0.0:
            raise ZeroVarianceError(f"lag-{k} window is constant")
        coeffs[k] = (m * dot - sum_a * sum_b) / math.sqrt(var_a * var_b)
    return AutocorrSeries(lags=np.arange(max_lag + 1), coefficients=coeffs)


def min_entropy_mcv(bits, block_bits: int = 1) -> float:
    """Most-common-value min-entropy estimate per bit, on block_bits symbols.

    Per SP 800-90B: p_hat is the modal symbol frequency, p_u its 99% upper
    confidence bound p_hat + 2.576*sqrt(p_hat*(1-p_hat)/(N-1)), and the
    estimate is -log2(p_u)/block_bits.
    """
    arr = as_bit_array(bits)
    if not 1 <= block_bits <= 20:
        raise ValidationError(f"block_bits must be in [1, 20] (got {block_bits})")
    n_blocks = arr.size // block_bits
    if n_blocks < 1000:
        raise InsufficientDataError(
            f"need at least 1000 blocks of {block_bits} bits, got {n_blocks}"
        )
    sym = arr[: n_blocks * block_bits].reshape(n_blocks, block_bits)
    weights = (1 << np.arange(block_bits - 1, -1, -1)).astype(np.int64)
    symbols = sym @ weights
    counts = np.bincount(symbols, minlength=1 << block_bits)
    p_hat = counts.max() / n_blocks
    p_u = min(1.0, p_hat + 2.576 * math.sqrt(p_hat * (1.0 - p_hat) / (n_blocks - 1)))
    return -math.log2(p_u) / block_bits


def monobit_p(bits) -> float:
    """Frequency (monobit) test p-value: erfc(|S_n| / sqrt(2n))."""
    arr = as_bit_array(bits)
    n = arr.size
    if n < 100:
        raise ValidationError(f"monobit needs at least 100 bits (got {n})")
    s = 2 * int(arr.sum()) - n
    return math.erfc(abs(s) / math.sqrt(2 * n))


def runs_p(bits) -> float:
    """Runs test p-value; refuses input that fails the monobit pre-check."""
    arr = as_bit_array(bits)
    n = arr.size
    if n < 100:
        raise ValidationError(f"runs test needs at least 100 bits (got {n})")
    pi = float(arr.mean())
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        raise ValidationError(
            f"runs test precondition failed: |pi - 1/2| = {abs(pi - 0.5):.4f} "
            f">= 2/sqrt(n) = {2.0 / math.sqrt(n):.4f}"
        )
    v_obs = 1 + int(np.count_nonzero(np.diff(arr)))
    num = abs(v_obs - 2.0 * n * pi * (1.0 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    return math.erfc(num / den)


def fisher_combine(pvalues) -> float:
    """Combine independent p-values: X = -2*sum(ln p) ~ chi-square(2k)."""
    ps = list(pvalues)
    if len(ps) < 1:
        raise ValidationError("fisher_combine needs at least one p-value")
    for p in ps:
        if not 0.0 < p <= 1.0:
            raise ValidationError(f"p-values must lie in (0, 1] (got {p})")
    x = -2.0 * sum(math.log(p) for p in ps)
    return float(gammaincc(len(ps), x / 2.0))


def render_table_report(report: EntReport, status: str | None = None) -> str:
    """Human-readable battery report with the classic row labels."""
    scc_text = (
        "undefined (zero variance)"
        if report.serial_correlation_degenerate
        else f"{report.serial_correlation:.6f}"
    )
    values = (
        f"{report.entropy_bits_per_byte:.6f}",
        f"{report.compression_percent}%",
        f"{report.chi_square_exceed_percent:.2f}%",
        f"{report.arithmetic_mean:.4f}",
        f"{report.monte_carlo_pi:.9f}",
        scc_text,
    )
    width = max(len(r) for r in _REPORT_ROWS) + 3
    lines = []
    if status is not None:
        lines.append(f"status: {status}")
    lines.extend(f"{row:<{width}}{val}" for row, val in zip(_REPORT_ROWS, values))
    return "\n".join(lines) + "\n"


def render_kv_report(report: EntReport, extras: dict | None = None) -> str:
    """Machine-readable variant: one metric per line, name=value."""
    items = {
        "entropy_bits_per_byte": f"{report.entropy_bits_per_byte:.6f}",
        "compression_percent": str(report.compression_percent),
        "chi_square_statistic": f"{report.chi_square_statistic:.6f}",
        "chi_square_exceed_percent": f"{report.chi_square_exceed_percent:.6f}",
        "arithmetic_mean": f"{report.arithmetic_mean:.6f}",
        "monte_carlo_pi": f"{report.monte_carlo_pi:.9f}",
        "pi_error_percent": f"{report.pi_error_percent:.6f}",
        "serial_correlation": f"{report.serial_correlation:.8f}",
        "serial_correlation_degenerate": str(report.serial_correlation_degenerate).lower(),
    }
    if extras:
        items.update({k: str(v) for k, v in extras.items()})
    return "\n".join(f"{k}={v}" for k, v in items.items()) + "\n"
