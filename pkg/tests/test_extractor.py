import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from enrbg import decay_sim, extractor, rng_eval
from enrbg.decay_sim import TickStream
from enrbg.errors import InsufficientDataError, SourceUnderrunError, ValidationError
from enrbg.extractor import ExtractionMethod
from enrbg.toeplitz import ToeplitzMatrix, ToeplitzParams


def ticks(*values):
    return TickStream(np.array(values, dtype=np.uint64), 1.0)


class TestCountWindow:
    def test_parity_of_counts(self):
        # windows [0,5) and [5,10) hold 3 and 1 events
        assert extractor.extract_count_window(ticks(0, 1, 2, 9), 5).tolist() == [1, 1]

    def test_empty_stream(self):
        assert extractor.extract_count_window(TickStream(np.array([], dtype=np.uint64), 1.0), 5).size == 0

    def test_interior_empty_window_is_zero_bit(self):
        assert extractor.extract_count_window(ticks(0, 12), 5).tolist() == [1, 0, 1]

    def test_window_validation(self):
        with pytest.raises(ValidationError):
            extractor.extract_count_window(ticks(0, 1), 0)

    def test_poisson_parity_bias(self):
        # exact mean count of 5 per window: rate 50/s, tick 1e-7 s, 1e6-tick windows
        rate, res, window = 50.0, 1e-7, 10**6
        mu = rate * res * window
        assert mu == 5.0
        # brute-force oracle: sum Poisson pmf over odd k, checked against the
        # closed form (1 - exp(-2 mu)) / 2
        pmf = [math.exp(-mu) * mu**k / math.factorial(k) for k in range(80)]
        p_odd_brute = sum(p for k, p in enumerate(pmf) if k % 2 == 1)
        p_odd_closed = (1.0 - math.exp(-2.0 * mu)) / 2.0
        assert abs(p_odd_brute - p_odd_closed) < 1e-12

        n_windows = 10**6
        n_events = int(rate * res * window * n_windows * 1.05)
        intervals = decay_sim.sample_intervals(rate, n_events, 424242)
        times = np.cumsum(intervals)
        stream = TickStream(decay_sim.quantize_times(times, res), res)
        bits = extractor.extract_count_window(stream, window)[:n_windows]
        assert bits.size == n_windows
        p1 = bits.mean()
        sigma = 0.5 / math.sqrt(n_windows)
        assert abs(p1 - p_odd_brute) < 5.0 * sigma
        assert abs(p1 - 0.5) < 1e-3


class TestIntervalParity:
    def test_parity_rule(self):
        assert extractor.extract_parity(ticks(0, 3, 4, 9)).tolist() == [1, 1, 1]

    def test_even_interval_gives_zero(self):
        assert extractor.extract_parity(ticks(0, 4)).tolist() == [0]

    def test_fewer_than_two_events(self):
        assert extractor.extract_parity(ticks(5)).size == 0

    def test_geometric_parity_bias(self):
        # closed-form oracle: quantized exponential intervals are geometric
        # with q = exp(-rate * tick); P(odd) = q / (1 + q) = 1 / (1 + e^{rate*tick})
        rate, res, n = 46.0, 1e-7, 10**6
        intervals = decay_sim.sample_intervals(rate, n + 1, 31337)
        stream = TickStream(decay_sim.quantize_times(np.cumsum(intervals), res), res)
        bits = extractor.extract_parity(stream)
        assert bits.size == n
        p_one = bits.mean()
        oracle = 1.0 / (1.0 + math.exp(rate * res))
        assert abs(p_one - oracle) < 5.0 * 0.5 / math.sqrt(n)
        assert abs(p_one - 0.5) < 1e-3

    def test_lag_one_bit_correlation_small(self):
        rate, res, n = 46.0, 1e-7, 10**5
        intervals = decay_sim.sample_intervals(rate, n + 1, 555)
        stream = TickStream(decay_sim.quantize_times(np.cumsum(intervals), res), res)
        bits = extractor.extract_parity(stream).astype(np.float64)
        r = np.corrcoef(bits[:-1], bits[1:])[0, 1]
        assert abs(r) < 5.0 / math.sqrt(n)


class TestIntervalCompare:
    def test_decreasing_pair_gives_zero(self):
        assert extractor.extract_compare(ticks(0, 5, 8)).tolist() == [0]

    def test_rule_application(self):
        assert extractor.extract_compare(ticks(0, 2, 5, 6)).tolist() == [1, 0]

    def test_tie_skipped(self):
        assert extractor.extract_compare(ticks(0, 4, 8)).tolist() == []

    def test_invert_flag(self):
        assert extractor.extract_compare(ticks(0, 5, 8), invert=True).tolist() == [1]

    def test_fewer_than_three_events(self):
        assert extractor.extract_compare(ticks(0, 4)).size == 0

    def test_sliding_yield(self):
        # n+1 events yield n-1 bits when no ties occur
        stream = ticks(0, 1, 3, 6, 10, 15)
        assert extractor.extract_compare(stream).size == len(stream) - 2

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(0, 30), min_size=2, max_size=40))
    def test_invariant_under_monotonic_transform(self, intervals):
        # comparisons read only the interval ordering
        d = np.array(intervals, dtype=np.uint64)
        base = TickStream(np.concatenate([[0], np.cumsum(d)]).astype(np.uint64), 1.0)
        f = d * d + 3 * d  # strictly increasing on non-negative integers
        mapped = TickStream(np.concatenate([[0], np.cumsum(f)]).astype(np.uint64), 1.0)
        assert np.array_equal(
            extractor.extract_compare(base), extractor.extract_compare(mapped)
        )


class TestAssembleBlock:
    def test_fifteen_chips_of_45_bits(self, rng):
        streams = [rng.integers(0, 2, 45, dtype=np.uint8) for _ in range(15)]
        block = extractor.assemble_block(streams, 600, min_entropy_per_bit=0.8)
        assert block.bits.size == 600
        assert np.array_equal(block.bits, np.concatenate(streams)[:600])

    def test_order_contract(self):
        block = extractor.assemble_block(
            [np.array([1, 0], dtype=np.uint8), np.array([0, 1], dtype=np.uint8)],
            4,
            min_entropy_per_bit=0.9,
        )
        assert block.bits.tolist() == [1, 0, 0, 1]

    def test_underrun_names_shortfall(self, rng):
        streams = [rng.integers(0, 2, 599, dtype=np.uint8)]
        with pytest.raises(SourceUnderrunError, match="short by 1"):
            extractor.assemble_block(streams, 600, min_entropy_per_bit=0.8)

    def test_self_calibration_needs_1000_bits(self, rng):
        with pytest.raises(InsufficientDataError):
            extractor.assemble_block([rng.integers(0, 2, 700, dtype=np.uint8)], 600)

    def test_self_calibration(self, rng):
        # 1000 two-bit symbols of fair bits: modal frequency ~0.25 plus the
        # 99% confidence penalty puts the estimate a little above 0.85
        block = extractor.assemble_block([rng.integers(0, 2, 2000, dtype=np.uint8)], 600)
        assert 0.85 < block.min_entropy_per_bit <= 1.0

    def test_block_invariants(self):
        with pytest.raises(ValidationError):
            extractor.RawBitBlock(
                bits=np.array([1], dtype=np.uint8),
                source_method=ExtractionMethod.INTERVAL_PARITY,
                min_entropy_per_bit=0.0,
            )


class TestMethodParsing:
    @pytest.mark.parametrize(
        "text,method",
        [
            ("count-window", ExtractionMethod.COUNT_WINDOW),
            ("interval-parity", ExtractionMethod.INTERVAL_PARITY),
            ("Interval-Compare", ExtractionMethod.INTERVAL_COMPARE),
        ],
    )
    def test_parse(self, text, method):
        assert ExtractionMethod.parse(text) is method

    def test_parse_unknown(self):
        with pytest.raises(ValidationError):
            ExtractionMethod.parse("bogus")


class TestConditionedQuality:
    @pytest.mark.parametrize("method", [ExtractionMethod.INTERVAL_PARITY,
                                        ExtractionMethod.INTERVAL_COMPARE])
    def test_conditioned_byte_entropy(self, method, fixed_column):
        # 1e6 raw bits from either interval method clear 7.99 bits/byte
        # after conditioning
        rate, res = 46.0, 1e-7
        n_bits = 10**6
        intervals = decay_sim.sample_intervals(rate, n_bits + 2, 97531)
        stream = TickStream(decay_sim.quantize_times(np.cumsum(intervals), res), res)
        if method is ExtractionMethod.INTERVAL_PARITY:
            raw = extractor.extract_parity(stream)
        else:
            raw = extractor.extract_compare(stream)
        matrix = ToeplitzMatrix(ToeplitzParams(first_column=fixed_column))
        conditioned = matrix.condition_blocks(raw)
        report = rng_eval.ent_report(np.packbits(conditioned[: conditioned.size - conditioned.size % 8]))
        assert report.entropy_bits_per_byte >= 7.99
