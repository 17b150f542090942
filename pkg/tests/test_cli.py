import numpy as np
import pytest

from eprtwin import fileio
from eprtwin.cli import analyze_frames, main, simulate_frames
from eprtwin.config import RunConfig

FRAME_STEMS = ("image_c", "image_d", "fourier_c", "fourier_d")


def config_file(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


@pytest.fixture(scope="module")
def noiseless_frames(tmp_path_factory):
    out = tmp_path_factory.mktemp("frames")
    assert main(["simulate", "--noiseless", "--out", str(out)]) == 0
    return out


class TestSimulate:
    def test_writes_frames_and_manifest(self, noiseless_frames):
        for stem in FRAME_STEMS:
            assert (noiseless_frames / f"{stem}.txt").exists()
            assert (noiseless_frames / f"{stem}.pgm").read_bytes().startswith(b"P5\n512 512\n65535\n")
        manifest = fileio.read_sections(noiseless_frames / "manifest.ini")
        assert manifest["manifest"]["noiseless"] is True
        assert manifest["config.physics"]["sigma_p_um"] == 388.0

    def test_creates_missing_directory(self, tmp_path):
        out = tmp_path / "a" / "b"
        cfg = config_file(tmp_path, "[camera]\nn_pixels = 64\n")
        assert main(["simulate", "--config", cfg, "--noiseless", "--out", str(out)]) == 0
        assert (out / "manifest.ini").exists()

    def test_unwritable_output(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["simulate", "--noiseless", "--out", str(blocker / "sub")]) == 3
        assert "error" in capsys.readouterr().err

    def test_invalid_config(self, tmp_path, capsys):
        cfg = config_file(tmp_path, "[physics]\nsigma_p_um = -3\n[camera]\nn_pixels = 5\n")
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        err = capsys.readouterr().err.strip().splitlines()
        assert len(err) == 2 and all(line.startswith("error:") for line in err)

    def test_equal_phases_warn_but_emit(self, tmp_path, capsys):
        cfg = config_file(tmp_path, "[interferometer]\ndelta_c = 0\ndelta_d = 0\n[camera]\nn_pixels = 64\n")
        out = tmp_path / "o"
        assert main(["simulate", "--config", cfg, "--noiseless", "--out", str(out)]) == 0
        assert "warning" in capsys.readouterr().err
        assert all((out / f"{stem}.txt").exists() for stem in FRAME_STEMS)


class TestAnalyze:
    def test_noiseless_report(self, noiseless_frames, capsys):
        assert main(["analyze", "--frames", str(noiseless_frames), "--out", str(noiseless_frames)]) == 0
        report = fileio.read_sections(noiseless_frames / "report.ini")
        assert report["report"]["F_percent"] < 2.0
        assert "config.camera" in report
        assert (noiseless_frames / "profile_image.txt").exists()
        assert "violates" in capsys.readouterr().out

    def test_matches_in_process_pipeline(self, noiseless_frames):
        main(["analyze", "--frames", str(noiseless_frames)])
        from_files = fileio.read_sections(noiseless_frames / "report.ini")["report"]
        config = RunConfig(noiseless=True, output_dir=str(noiseless_frames))
        report, *_ = analyze_frames(config, simulate_frames(config))
        assert from_files == report.summary()

    def test_noisy_rerun_byte_identical(self, tmp_path):
        cfg = config_file(tmp_path, "[run]\nseed = 17\n")
        out = str(tmp_path / "run")
        texts = []
        for _ in range(2):
            assert main(["simulate", "--config", cfg, "--out", out]) == 0
            assert main(["analyze", "--frames", out]) == 0
            texts.append((tmp_path / "run" / "report.ini").read_bytes())
        assert texts[0] == texts[1]

    def test_mismatched_grids(self, tmp_path, noiseless_frames):
        out = tmp_path / "mixed"
        out.mkdir()
        for stem in FRAME_STEMS:
            (out / f"{stem}.txt").write_bytes((noiseless_frames / f"{stem}.txt").read_bytes())
        frame = fileio.read_interferogram(out / "image_d.txt")
        frame.counts = frame.counts[:256, :256]
        fileio.write_interferogram(out / "image_d.txt", frame)
        assert main(["analyze", "--frames", str(out)]) == 2

    def test_missing_frames(self, tmp_path):
        assert main(["analyze", "--frames", str(tmp_path)]) == 2

    def test_unconverged_fit_exit_code(self, tmp_path, noiseless_frames):
        out = tmp_path / "flat"
        out.mkdir()
        for stem in FRAME_STEMS:
            frame = fileio.read_interferogram(noiseless_frames / f"{stem}.txt")
            if stem.startswith("image"):
                frame.counts = np.full_like(frame.counts, 1.0 if stem.endswith("c") else 0.0)
            fileio.write_interferogram(out / f"{stem}.txt", frame)
        assert main(["analyze", "--frames", str(out)]) == 4
        assert fileio.read_sections(out / "report.ini")["report"]["confidence"] == "degraded"


class TestVerify:
    def test_bbo_passes(self, tmp_path, capsys):
        assert main(["verify", "--out", str(tmp_path)]) == 0
        text = (tmp_path / "verify.txt").read_text()
        assert "FAIL" not in text
        assert text.count("PASS") == 10
        capsys.readouterr()

    def test_separable_line(self, tmp_path, capsys):
        cfg = config_file(tmp_path, "[physics]\nsigma_p_um = 40\nsigma_minus_um = 40\n")
        assert main(["verify", "--config", cfg]) == 0
        assert "separable, U=0.5 hbar, no violation" in capsys.readouterr().out

    def test_chirp_fails_condition(self, capsys):
        assert main(["verify", "--chirp", "1.0"]) == 1
        out = capsys.readouterr().out
        assert "FAIL factorization_condition[position]" in out
        assert "FAIL factorization_condition[momentum]" in out

    def test_stored_amplitude(self, tmp_path, capsys):
        cfg = config_file(tmp_path, "[grid]\nn = 256\n[physics]\nsigma_p_um = 60\nsigma_minus_um = 8\n")
        assert main(["verify", "--config", cfg, "--out", str(tmp_path), "--save-amplitude"]) == 0
        amp = str(tmp_path / "amplitude_position.bin")
        assert main(["verify", "--amplitude", amp]) == 0
        assert main(["verify", "--amplitude", amp, "--chirp", "1.0"]) == 1
        capsys.readouterr()


class TestReport:
    def test_seed_sweep_and_merge(self, tmp_path, capsys):
        cfg = config_file(tmp_path, "[run]\nseeds = 3\n")
        assert main(["report", "--config", cfg, "--out", str(tmp_path / "sweep")]) == 0
        files = sorted((tmp_path / "sweep" / "reports").glob("*.ini"))
        assert [f.name for f in files] == ["report_seed00000.ini", "report_seed00001.ini", "report_seed00002.ini"]
        summary = fileio.read_sections(tmp_path / "sweep" / "summary.ini")["summary"]
        assert summary["n_reports"] == 3
        assert summary["U_hbar_p05"] <= summary["U_hbar_median"] <= summary["U_hbar_p95"]

        merged = tmp_path / "merged"
        assert main(["report", "--out", str(merged), *map(str, files)]) == 0
        again = fileio.read_sections(merged / "summary.ini")["summary"]
        assert again == summary
        capsys.readouterr()

    def test_config_echo_reproduces_run(self, tmp_path, capsys):
        cfg = config_file(tmp_path, "[run]\nseed = 5\nseeds = 1\n[camera]\ndark_rate = 2\n")
        assert main(["report", "--config", cfg, "--out", str(tmp_path / "one")]) == 0
        saved = fileio.read_sections(tmp_path / "one" / "reports" / "report_seed00005.ini")
        echo = {k[len("config."):]: v for k, v in saved.items() if k.startswith("config.")}
        config = RunConfig.from_sections(echo)
        report, *_ = analyze_frames(config, simulate_frames(config))
        assert fileio.read_sections(tmp_path / "one" / "reports" / "report_seed00005.ini")["report"] == report.summary()
        capsys.readouterr()
