"""Enhanced NRBG pipeline: a simulated decay entropy source feeding
Toeplitz conditioning, an SP 800-90A Hash-DRBG, and a statistical
evaluation battery."""

__version__ = "0.1.0"

from .config import PipelineConfig, build_config, fresh_sim_seed
from .decay_sim import SourceConfig, TickStream, sample_intervals, simulate_chip
from .extractor import (
    ExtractionMethod,
    RawBitBlock,
    assemble_block,
    extract_compare,
    extract_count_window,
    extract_parity,
)
from .hash_drbg import HashDrbg, hash_df, load_drbg_kats, run_kat
from .pipeline import PipelineResult, SimulatedEntropySource, run_pipeline
from .rng_eval import (
    AutocorrSeries,
    EntReport,
    autocorrelation,
    byte_histogram,
    ent_report,
    fisher_combine,
    min_entropy_mcv,
    monobit_p,
    runs_p,
)
from .toeplitz import (
    ToeplitzMatrix,
    ToeplitzParams,
    bits_to_hex,
    condition,
    lfsr_generate_row,
)

__all__ = [
    "AutocorrSeries",
    "EntReport",
    "ExtractionMethod",
    "HashDrbg",
    "PipelineConfig",
    "PipelineResult",
    "RawBitBlock",
    "SimulatedEntropySource",
    "SourceConfig",
    "TickStream",
    "ToeplitzMatrix",
    "ToeplitzParams",
    "assemble_block",
    "autocorrelation",
    "bits_to_hex",
    "build_config",
    "byte_histogram",
    "condition",
    "ent_report",
    "extract_compare",
    "extract_count_window",
    "extract_parity",
    "fisher_combine",
    "fresh_sim_seed",
    "hash_df",
    "lfsr_generate_row",
    "load_drbg_kats",
    "min_entropy_mcv",
    "monobit_p",
    "run_kat",
    "run_pipeline",
    "runs_p",
    "sample_intervals",
    "simulate_chip",
    "__version__",
]
