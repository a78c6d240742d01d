"""End-to-end orchestration: simulate, extract, condition, expand, evaluate.

The in-memory pipeline and the file-driven stages share the same harvest
and block semantics, so chaining stages through intermediate files yields
byte-identical output to one run_pipeline call with the same config.

A harvest is one simulation window (duration_s) across all chips; the
first harvest supplies the conditioner bootstrap column (when no params
file or fixture is given) and the seed block. Prediction-resistance mode
draws one fresh harvest per generate request and falls back to pure
deterministic generation, flagged as degraded, if the source underruns
after instantiation.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import report_plots
from .bitio import bits_to_bytes, read_bit_file, write_bit_file
from .config import PipelineConfig
from .decay_sim import (
    SourceConfig,
    read_tick_stream,
    simulate_chip,
    write_tick_stream,
)
from .errors import (
    InsufficientDataError,
    SourceUnderrunError,
    ValidationError,
)
from .extractor import ExtractionMethod, assemble_block, extract_bits
from .hash_drbg import HashDrbg
from .rng_eval import (
    AutocorrSeries,
    EntReport,
    autocorrelation,
    byte_histogram,
    ent_report,
    min_entropy_mcv,
    render_kv_report,
    render_table_report,
)
from .toeplitz import (
    ToeplitzMatrix,
    ToeplitzParams,
    bits_to_hex,
    hex_to_bits,
    load_params,
    save_params,
)

STATUS_FULL = "full-entropy"
STATUS_DEGRADED = "degraded: DRBG-only"

_AUTOCORR_MAX_BITS = 10_000_000
_AUTOCORR_MAX_LAG = 100
# seed namespace separating calibration harvests from production harvests
_CALIBRATION_NAMESPACE = 1


def harvest_seed(sim_seed: int, harvest_index: int, namespace: int = 0) -> int:
    """Per-harvest 64-bit sub-seed, disjoint across harvests and namespaces."""
    ss = np.random.SeedSequence(entropy=sim_seed, spawn_key=(namespace, harvest_index))
    lo, hi = ss.generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)


def harvest_source_config(config: PipelineConfig, harvest_index: int,
                          namespace: int = 0) -> SourceConfig:
    """SourceConfig for one harvest window of the configured source."""
    base = config.source
    return SourceConfig(
        rate_hz=base.rate_hz,
        resolution_s=base.resolution_s,
        chip_count=base.chip_count,
        sim_seed=harvest_seed(base.sim_seed, harvest_index, namespace),
    )


class SimulatedEntropySource:
    """Raw extracted bits from freshly simulated harvest windows."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self._index = 0
        self._cal_index = 0

    def _harvest(self, source_cfg: SourceConfig) -> np.ndarray:
        cfg = self.config
        window = cfg.default_window_ticks() if cfg.method is ExtractionMethod.COUNT_WINDOW else None
        parts = [
            extract_bits(
                simulate_chip(source_cfg, cfg.duration_s, chip),
                cfg.method,
                window_ticks=window,
                invert=cfg.invert_compare,
            )
            for chip in range(source_cfg.chip_count)
        ]
        return np.concatenate(parts)

    def harvest_bits(self) -> np.ndarray:
        """All chips' extracted bits for the next harvest window, in chip order."""
        bits = self._harvest(harvest_source_config(self.config, self._index))
        self._index += 1
        return bits

    def calibration_bits(self, n_min: int) -> np.ndarray:
        """At least n_min bits from the reserved calibration seed namespace."""
        pieces = []
        got = 0
        while got < n_min:
            if self._cal_index > 64:
                raise SourceUnderrunError(needed=n_min, got=got)
            bits = self._harvest(
                harvest_source_config(self.config, self._cal_index, _CALIBRATION_NAMESPACE)
            )
            self._cal_index += 1
            pieces.append(bits)
            got += bits.size
        return np.concatenate(pieces)


# two-bit symbols expose the adjacent-bit dependence of the sliding
# comparison method (lag-1 correlation about -1/3, so the dominant pattern
# probability is ~1/3 and the estimate lands near -log2(1/3)/2 ~ 0.79)
_CALIBRATION_BLOCK_BITS = 2
_CALIBRATION_MIN_BITS = 2000


def _calibrate_min_entropy(source, bits0: np.ndarray) -> float:
    """Most-common-value estimate for the raw stream, topped up if needed."""
    if bits0.size >= _CALIBRATION_MIN_BITS:
        return min_entropy_mcv(bits0, block_bits=_CALIBRATION_BLOCK_BITS)
    extra = getattr(source, "calibration_bits", None)
    if extra is None:
        raise InsufficientDataError(
            f"only {bits0.size} raw bits available for min-entropy calibration"
        )
    sample = np.concatenate([bits0, extra(_CALIBRATION_MIN_BITS - bits0.size)])
    return min_entropy_mcv(sample, block_bits=_CALIBRATION_BLOCK_BITS)


def resolve_toeplitz_params(config: PipelineConfig, raw_bits: np.ndarray):
    """Choose the conditioner parameters and the bits left for conditioning.

    Priority: params file, then an explicit first-column fixture, then
    bootstrap mode (the leading n_rows raw bits become the column and only
    the remainder is conditioned).
    """
    if config.toeplitz_params_path:
        return load_params(config.toeplitz_params_path), raw_bits
    if config.first_column_hex:
        column = hex_to_bits(config.first_column_hex)[: config.n_rows]
        params = ToeplitzParams(
            n_rows=config.n_rows,
            n_cols=config.n_cols,
            first_column=column,
            polynomial_taps=config.polynomial_taps,
        )
        return params, raw_bits
    if raw_bits.size < config.n_rows:
        raise SourceUnderrunError(needed=config.n_rows, got=raw_bits.size)
    params = ToeplitzParams(
        n_rows=config.n_rows,
        n_cols=config.n_cols,
        first_column=raw_bits[: config.n_rows],
        polynomial_taps=config.polynomial_taps,
    )
    return params, raw_bits[config.n_rows:]


@dataclass
class PipelineResult:
    """Everything one end-to-end run produces."""

    output: bytes
    report: EntReport
    status: str
    histogram: np.ndarray
    autocorr: AutocorrSeries | None
    min_entropy_raw: float


def _seed_drbg(config: PipelineConfig, source) -> tuple[HashDrbg, ToeplitzMatrix, float]:
    bits0 = source.harvest_bits()
    params, rest = resolve_toeplitz_params(config, bits0)
    calibration = _calibrate_min_entropy(source, bits0)
    matrix = ToeplitzMatrix(params)
    block = assemble_block(
        [rest],
        target_bits=matrix.n_cols,
        source_method=config.method,
        min_entropy_per_bit=calibration,
    )
    seed_hex = bits_to_hex(matrix.condition(block.bits))
    drbg = HashDrbg(seed_hex, reseed_interval=config.reseed_interval)
    return drbg, matrix, calibration


def run_pipeline(config: PipelineConfig, entropy_source=None) -> PipelineResult:
    """Chain all stages in memory and evaluate the produced stream.

    An entropy underrun before the generator is instantiated is a hard
    failure; after instantiation (prediction-resistance reseeds) the run
    completes as a pure deterministic generator and the result is marked
    degraded. Prediction resistance serializes requests (each one waits on
    a fresh harvest), so the workers setting applies only to bulk mode.
    """
    config.validate()
    source = entropy_source if entropy_source is not None else SimulatedEntropySource(config)

    drbg, matrix, calibration = _seed_drbg(config, source)

    status = STATUS_FULL
    if config.prediction_resistance:
        chunks = []
        degraded = False
        for _ in range(config.total_bits // config.request_bits):
            if not degraded:
                try:
                    raw = source.harvest_bits()
                    block = assemble_block(
                        [raw],
                        target_bits=matrix.n_cols,
                        source_method=config.method,
                        min_entropy_per_bit=calibration,
                    )
                    drbg.reseed(bits_to_hex(matrix.condition(block.bits)))
                except SourceUnderrunError:
                    degraded = True
            chunks.append(drbg.generate(config.request_bits))
        output = b"".join(chunks)
        if degraded:
            status = STATUS_DEGRADED
    else:
        output = drbg.generate_bulk(config.total_bits, config.request_bits, config.workers)

    report = ent_report(output)
    histogram = byte_histogram(output)
    autocorr = _output_autocorrelation(output)
    return PipelineResult(
        output=output,
        report=report,
        status=status,
        histogram=histogram,
        autocorr=autocorr,
        min_entropy_raw=calibration,
    )


def _output_autocorrelation(data: bytes) -> AutocorrSeries | None:
    n_bits = min(8 * len(data), _AUTOCORR_MAX_BITS)
    if n_bits <= _AUTOCORR_MAX_LAG:
        return None
    bits = np.unpackbits(
        np.frombuffer(data[: (n_bits + 7) // 8], dtype=np.uint8), count=n_bits
    )
    return autocorrelation(bits, _AUTOCORR_MAX_LAG)


# --- file-driven stages ---

def chip_stream_paths(out_path, chip_count: int) -> list:
    """One tick-stream file per chip; a single chip uses the bare path."""
    if chip_count == 1:
        return [Path(out_path)]
    return [Path(f"{out_path}.chip{k:03d}") for k in range(chip_count)]


def stage_simulate(config: PipelineConfig, out_path, text: bool = False) -> list:
    """Simulate harvest window 0 and write one tick-stream file per chip."""
    config.validate()
    src = harvest_source_config(config, 0)
    paths = chip_stream_paths(out_path, src.chip_count)
    for chip, path in enumerate(paths):
        stream = simulate_chip(src, config.duration_s, chip)
        write_tick_stream(path, stream, text=text)
    return paths


def stage_extract(config: PipelineConfig, in_path, out_path, text: bool = False) -> int:
    """Extract raw bits from per-chip tick files and write one QBIT file."""
    config.validate()
    paths = chip_stream_paths(in_path, config.source.chip_count)
    window = (
        config.default_window_ticks()
        if config.method is ExtractionMethod.COUNT_WINDOW
        else None
    )
    parts = []
    for path in paths:
        stream = read_tick_stream(
            path, text=text,
            resolution_s=config.source.resolution_s if text else None,
        )
        parts.append(
            extract_bits(stream, config.method, window_ticks=window,
                         invert=config.invert_compare)
        )
    bits = np.concatenate(parts)
    return write_bit_file(out_path, bits)


def stage_condition(
    config: PipelineConfig,
    in_path,
    out_path,
    emit_params_path=None,
) -> int:
    """Condition a raw QBIT stream block-by-block into a conditioned QBIT file."""
    config.validate()
    raw = read_bit_file(in_path)
    params, rest = resolve_toeplitz_params(config, raw)
    matrix = ToeplitzMatrix(params)
    if rest.size < matrix.n_cols:
        raise SourceUnderrunError(needed=matrix.n_cols, got=rest.size)
    conditioned = matrix.condition_blocks(rest)
    if emit_params_path:
        save_params(emit_params_path, params)
    return write_bit_file(out_path, conditioned)


def write_output_bytes(out_path, data: bytes) -> None:
    """Write raw output bytes to a file, or to stdout when the path is '-'."""
    if str(out_path) == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    with open(out_path, "wb") as fh:
        fh.write(data)


def stage_drbg_gen(config: PipelineConfig, in_path, out_path) -> int:
    """Instantiate from a conditioned QBIT file and write the output bytes."""
    config.validate()
    if config.prediction_resistance:
        raise ValidationError(
            "prediction resistance needs the live pipeline (use the pipeline "
            "stage); drbg-gen reads a fixed conditioned file"
        )
    bits = read_bit_file(in_path)
    n_rows = config.n_rows
    if config.toeplitz_params_path:
        # conditioned block size follows the params file, not the defaults
        n_rows = load_params(config.toeplitz_params_path).n_rows
    if bits.size < n_rows:
        raise SourceUnderrunError(needed=n_rows, got=bits.size)
    seed_hex = bits_to_hex(bits[:n_rows])
    drbg = HashDrbg(seed_hex, reseed_interval=config.reseed_interval)
    output = drbg.generate_bulk(config.total_bits, config.request_bits, config.workers)
    write_output_bytes(out_path, output)
    return len(output)


def _read_eval_bytes(in_path) -> bytes:
    with open(in_path, "rb") as fh:
        head = fh.read(4)
    if head == b"QBIT":
        return bits_to_bytes(read_bit_file(in_path))
    with open(in_path, "rb") as fh:
        return fh.read()


@dataclass
class EvalArtifacts:
    report: EntReport
    report_path: Path | None
    kv_path: Path | None
    figure_paths: list


def evaluate_stream(
    data: bytes,
    report_path=None,
    status: str | None = None,
    extras: dict | None = None,
    figures: bool = True,
) -> EvalArtifacts:
    """Run the battery and, given a report path, write text + figures.

    The human-readable table lands at report_path, the machine-readable
    name=value variant at report_path + '.kv', and the autocorrelation and
    histogram figures next to them.
    """
    report = ent_report(data)
    kv_extras = dict(extras or {})
    if status is not None:
        kv_extras.setdefault("status", status)
    if report_path is None:
        return EvalArtifacts(report, None, None, [])
    report_path = Path(report_path)
    report_path.write_text(render_table_report(report, status=status))
    kv_path = report_path.with_name(report_path.name + ".kv")
    kv_path.write_text(render_kv_report(report, kv_extras))
    figure_paths = []
    if figures:
        hist = byte_histogram(data)
        hist_path = report_path.with_name(report_path.stem + "_histogram.png")
        report_plots.save_histogram_plot(hist, hist_path)
        figure_paths.append(hist_path)
        autocorr = _output_autocorrelation(data)
        if autocorr is not None:
            n_bits = min(8 * len(data), _AUTOCORR_MAX_BITS)
            ac_path = report_path.with_name(report_path.stem + "_autocorrelation.png")
            report_plots.save_autocorrelation_plot(
                autocorr, ac_path, null_bound=4.0 / np.sqrt(n_bits)
            )
            figure_paths.append(ac_path)
    return EvalArtifacts(report, report_path, kv_path, figure_paths)


def stage_eval(config: PipelineConfig, in_path, report_path=None,
               figures: bool = True) -> EvalArtifacts:
    """Evaluate a bytes file (or a QBIT bit file, repacked to whole bytes)."""
    data = _read_eval_bytes(in_path)
    return evaluate_stream(data, report_path=report_path, figures=figures)
