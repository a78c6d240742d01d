import numpy as np
import pytest

from enrbg.cli import main


@pytest.fixture()
def cfg_file(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text(
        "source.sim_seed = 12345\n"
        "drbg.total_bits = 200000\n"
        "drbg.request_bits = 100000\n"
    )
    return path


def staged(tmp_path, cfg_file, *extra_flags):
    flags = ["--config", str(cfg_file), "--insecure-fixtures", *extra_flags]
    assert main(["simulate", *flags, "--out", str(tmp_path / "ticks")]) == 0
    assert main(["extract", *flags, "--in", str(tmp_path / "ticks"),
                 "--out", str(tmp_path / "raw.qbit")]) == 0
    assert main(["condition", *flags, "--in", str(tmp_path / "raw.qbit"),
                 "--out", str(tmp_path / "cond.qbit")]) == 0
    assert main(["drbg-gen", *flags, "--in", str(tmp_path / "cond.qbit"),
                 "--out", str(tmp_path / "out.bin")]) == 0


class TestExitCodes:
    def test_validation_error_is_2(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("drbg.workers = 0\n")
        assert main(["pipeline", "--config", str(bad)]) == 2

    def test_unknown_key_is_2(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("no.such.key = 1\n")
        assert main(["pipeline", "--config", str(bad)]) == 2

    def test_format_error_is_3(self, tmp_path, cfg_file):
        garbage = tmp_path / "garbage.qbit"
        garbage.write_bytes(b"JUNKJUNKJUNKJUNK")
        assert main(["condition", "--config", str(cfg_file), "--insecure-fixtures",
                     "--in", str(garbage), "--out", str(tmp_path / "x.qbit")]) == 3

    def test_missing_input_file_is_3(self, tmp_path, cfg_file):
        assert main(["eval", "--config", str(cfg_file),
                     "--in", str(tmp_path / "nope.bin")]) == 3

    def test_entropy_underrun_is_4(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("source.sim_seed = 1\nsource.duration_s = 0.05\n")
        assert main(["pipeline", "--config", str(cfg), "--insecure-fixtures"]) == 4

    def test_success_is_0(self, tmp_path, cfg_file, capsys):
        out = tmp_path / "out.bin"
        code = main(["pipeline", "--config", str(cfg_file), "--insecure-fixtures",
                     "--out", str(out)])
        assert code == 0
        assert out.stat().st_size == 200000 // 8
        assert "Entropy (bits per byte)" in capsys.readouterr().out


class TestFixturePolicy:
    def test_seeded_simulate_refused_without_flag(self, tmp_path, cfg_file):
        assert main(["simulate", "--config", str(cfg_file),
                     "--out", str(tmp_path / "t")]) == 2

    def test_seed_flag_refused_without_optin(self, tmp_path):
        assert main(["pipeline", "--seed", "7", "--out", str(tmp_path / "o.bin")]) == 2

    def test_column_fixture_refused_for_condition(self, tmp_path, cfg_file):
        cfg = tmp_path / "col.txt"
        cfg.write_text("toeplitz.first_column = " + "ab" * 60 + "\n")
        assert main(["condition", "--config", str(cfg),
                     "--in", str(tmp_path / "raw.qbit"),
                     "--out", str(tmp_path / "c.qbit")]) == 2

    def test_eval_ignores_fixture_policy(self, tmp_path, cfg_file):
        data = tmp_path / "d.bin"
        data.write_bytes(bytes(range(256)))
        assert main(["eval", "--config", str(cfg_file), "--in", str(data)]) == 0


class TestStagedFlow:
    def test_full_staged_run(self, tmp_path, cfg_file, capsys):
        staged(tmp_path, cfg_file)
        assert (tmp_path / "out.bin").stat().st_size == 200000 // 8
        assert main(["eval", "--config", str(cfg_file),
                     "--in", str(tmp_path / "out.bin"),
                     "--report", str(tmp_path / "report.txt")]) == 0
        assert (tmp_path / "report.txt").exists()
        assert (tmp_path / "report.txt.kv").exists()
        assert (tmp_path / "report_histogram.png").exists()
        assert (tmp_path / "report_autocorrelation.png").exists()

    def test_pipeline_matches_staged(self, tmp_path, cfg_file):
        staged(tmp_path, cfg_file)
        out2 = tmp_path / "pipe.bin"
        assert main(["pipeline", "--config", str(cfg_file), "--insecure-fixtures",
                     "--out", str(out2)]) == 0
        assert out2.read_bytes() == (tmp_path / "out.bin").read_bytes()

    def test_keep_intermediates(self, tmp_path, cfg_file):
        out = tmp_path / "o.bin"
        assert main(["pipeline", "--config", str(cfg_file), "--insecure-fixtures",
                     "--keep-intermediates", "--out", str(out)]) == 0
        assert (tmp_path / "o.bin.raw.qbit").exists()
        assert (tmp_path / "o.bin.cond.qbit").exists()

    def test_eval_without_report_prints_table(self, tmp_path, cfg_file, capsys):
        data = tmp_path / "d.bin"
        data.write_bytes(bytes(range(256)) * 4)
        assert main(["eval", "--config", str(cfg_file), "--in", str(data)]) == 0
        assert "Entropy (bits per byte)" in capsys.readouterr().out

    def test_text_tick_streams_roundtrip(self, tmp_path, cfg_file):
        flags = ["--config", str(cfg_file), "--insecure-fixtures"]
        assert main(["simulate", *flags, "--text", "--out", str(tmp_path / "t")]) == 0
        first = (tmp_path / "t.chip000").read_text()
        assert first.splitlines()[0].isdigit()
        assert main(["extract", *flags, "--text", "--in", str(tmp_path / "t"),
                     "--out", str(tmp_path / "raw_text.qbit")]) == 0
        # binary tick streams carry the same events, so extraction agrees
        assert main(["simulate", *flags, "--out", str(tmp_path / "b")]) == 0
        assert main(["extract", *flags, "--in", str(tmp_path / "b"),
                     "--out", str(tmp_path / "raw_bin.qbit")]) == 0
        assert (tmp_path / "raw_text.qbit").read_bytes() == (tmp_path / "raw_bin.qbit").read_bytes()


class TestEnvironmentOverrides:
    def test_env_changes_total_bits(self, tmp_path, cfg_file, monkeypatch):
        monkeypatch.setenv("ENRBG_DRBG_TOTAL_BITS", "400000")
        out = tmp_path / "out.bin"
        assert main(["pipeline", "--config", str(cfg_file), "--insecure-fixtures",
                     "--out", str(out)]) == 0
        assert out.stat().st_size == 400000 // 8

    def test_flag_beats_env(self, tmp_path, cfg_file, monkeypatch):
        monkeypatch.setenv("ENRBG_DRBG_WORKERS", "0")  # invalid, flag must win
        out = tmp_path / "out.bin"
        assert main(["pipeline", "--config", str(cfg_file), "--insecure-fixtures",
                     "--workers", "1", "--out", str(out)]) == 0
