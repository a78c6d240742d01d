import pytest

from enrbg import config as config_mod
from enrbg.config import (
    PipelineConfig,
    build_config,
    env_overrides,
    merge_mappings,
    parse_config_file,
    parse_config_text,
)
from enrbg.errors import ValidationError
from enrbg.extractor import ExtractionMethod


class TestParsing:
    def test_basic_file(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text(
            "# comment\n"
            "source.rate_hz = 50\n"
            "extract.method = interval-parity  # trailing comment\n"
            "\n"
            "drbg.workers = 3\n"
        )
        values = parse_config_file(path)
        assert values == {
            "source.rate_hz": "50",
            "extract.method": "interval-parity",
            "drbg.workers": "3",
        }

    def test_unknown_key(self):
        with pytest.raises(ValidationError, match="unknown key"):
            parse_config_text("source.rate = 50\n")

    def test_missing_equals(self):
        with pytest.raises(ValidationError, match="line 1"):
            parse_config_text("just some words\n")

    def test_bool_values(self):
        cfg = build_config({"drbg.prediction_resistance": "yes"})
        assert cfg.prediction_resistance is True
        with pytest.raises(ValidationError):
            build_config({"drbg.prediction_resistance": "maybe"})


class TestPrecedence:
    def test_env_overrides_file_flags_override_env(self):
        file_values = {"drbg.workers": "1", "source.rate_hz": "40"}
        env = {"ENRBG_DRBG_WORKERS": "2", "ENRBG_SOURCE_DURATION_S": "3.0"}
        flags = {"drbg.workers": "5"}
        merged = merge_mappings(file_values, env_overrides(env), flags)
        cfg = build_config(merged)
        assert cfg.workers == 5          # flag beats env beats file
        assert cfg.duration_s == 3.0     # env beats (absent) file
        assert cfg.source.rate_hz == 40  # file only

    def test_env_ignores_unrelated_variables(self):
        assert env_overrides({"PATH": "/bin", "ENRBG_BOGUS_KEY": "1"}) == {}


class TestValidation:
    def test_all_violations_reported_together(self):
        with pytest.raises(ValidationError) as err:
            build_config(
                {
                    "source.rate_hz": "-1",
                    "drbg.workers": "0",
                    "drbg.total_bits": "999",
                    "drbg.request_bits": "1000",
                }
            )
        message = str(err.value)
        assert "rate_hz" in message
        assert "workers" in message
        assert "total_bits" in message

    def test_total_within_reseed_budget(self):
        with pytest.raises(ValidationError, match="reseed_interval"):
            build_config(
                {
                    "drbg.request_bits": "1000",
                    "drbg.total_bits": "4000",
                    "drbg.reseed_interval": "2",
                }
            )

    def test_request_bit_limit(self):
        with pytest.raises(ValidationError, match="per-request"):
            build_config({"drbg.request_bits": str(2**20), "drbg.total_bits": str(2**20)})

    def test_seed_fixture_flag_tracked(self):
        assert build_config({"source.sim_seed": "7"}).seed_is_fixture
        assert not build_config({}).seed_is_fixture

    def test_fresh_seed_when_unset(self):
        a = build_config({})
        b = build_config({})
        # overwhelmingly distinct 64-bit draws
        assert a.source.sim_seed != b.source.sim_seed

    def test_default_window_ticks_targets_mean_count_five(self):
        cfg = build_config({})
        mu = cfg.source.rate_hz * cfg.source.resolution_s * cfg.default_window_ticks()
        assert mu == pytest.approx(5.0, rel=1e-4)
        assert build_config({"extract.window_ticks": "123"}).default_window_ticks() == 123

    def test_taps_parsing(self):
        cfg = build_config({"toeplitz.polynomial_taps": "476,9"})
        assert cfg.polynomial_taps == (476, 9)

    def test_method_parsing(self):
        cfg = build_config({"extract.method": "count-window"})
        assert cfg.method is ExtractionMethod.COUNT_WINDOW

    def test_direct_construction_validates(self):
        cfg = PipelineConfig(workers=0)
        with pytest.raises(ValidationError):
            cfg.validate()
