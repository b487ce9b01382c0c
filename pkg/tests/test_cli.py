"""End-to-end tests of the command-line interface and its exit codes."""

import numpy as np
import pytest

from radarfield import cli
from radarfield.io import read_dataset, read_volume

TINY_SETUP = """\
[bounds]
center = 0 0 0
side = 0.36

[aperture]
radius = 0.23
n_angles = 6
n_heights = 2
height_extent = 0.2

[scene]
kind = points
point = 0.045 -0.03 0.02 1.0
"""


@pytest.fixture()
def setup_cfg(tmp_path):
    path = tmp_path / "setup.cfg"
    path.write_text(TINY_SETUP)
    return str(path)


def _simulate(tmp_path, setup_cfg, name="data.spnr", extra=()):
    out = tmp_path / name
    code = cli.main(
        ["simulate", "--scene", setup_cfg, "--aperture", setup_cfg, "--out", str(out)]
        + list(extra)
    )
    assert code == 0
    return str(out)


class TestExitCodes:
    def test_no_subcommand_is_usage_error(self, capsys):
        assert cli.main([]) == 1
        capsys.readouterr()

    def test_unknown_flag_is_usage_error(self, capsys):
        assert cli.main(["simulate", "--scene", "point", "--bogus", "1"]) == 1
        capsys.readouterr()

    def test_missing_required_flag_is_usage_error(self, capsys):
        assert cli.main(["simulate", "--scene", "point"]) == 1
        capsys.readouterr()

    def test_help_exits_zero(self, capsys):
        assert cli.main(["--help"]) == 0
        assert "radarfield" in capsys.readouterr().out

    def test_missing_dataset_is_data_error(self, tmp_path, capsys):
        code = cli.main(
            ["reconstruct", "--dataset", str(tmp_path / "nope.spnr"),
             "--out", str(tmp_path / "out")]
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_corrupt_dataset_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.spnr"
        bad.write_bytes(b"JUNKJUNKJUNKJUNK")
        code = cli.main(
            ["reconstruct", "--dataset", str(bad), "--out", str(tmp_path / "out")]
        )
        assert code == 2
        capsys.readouterr()

    def test_unknown_bundled_scene_is_data_error(self, tmp_path, capsys):
        code = cli.main(
            ["simulate", "--scene", "nonesuch", "--out", str(tmp_path / "d.spnr")]
        )
        assert code == 2
        assert "bundled scenes" in capsys.readouterr().err

    def test_malformed_config_is_data_error(self, tmp_path, capsys):
        cfg = tmp_path / "broken.cfg"
        cfg.write_text("[scene\nkind = points\n")
        code = cli.main(
            ["simulate", "--scene", str(cfg), "--out", str(tmp_path / "d.spnr")]
        )
        assert code == 2
        capsys.readouterr()

    def test_bad_field_spec_is_data_error(self, tmp_path, setup_cfg, capsys):
        data = _simulate(tmp_path, setup_cfg)
        code = cli.main(
            ["reconstruct", "--dataset", data, "--field", "mesh:9",
             "--out", str(tmp_path / "out")]
        )
        assert code == 2
        capsys.readouterr()

    def test_divergent_training_is_numerical_error(self, tmp_path, setup_cfg, capsys):
        data = _simulate(tmp_path, setup_cfg)
        with np.errstate(over="ignore", invalid="ignore"):
            code = cli.main(
                ["reconstruct", "--dataset", data, "--field", "voxel:6",
                 "--iterations", "8", "--learning-rate", "1e39",
                 "--out", str(tmp_path / "out")]
            )
        assert code == 3
        assert "error:" in capsys.readouterr().err


class TestPipeline:
    def test_simulate_reports_shape(self, tmp_path, setup_cfg, capsys):
        _simulate(tmp_path, setup_cfg)
        out = capsys.readouterr().out
        assert "poses=12" in out and "K=" in out

    def test_time_forward_matches_spectral(self, tmp_path, setup_cfg, capsys):
        a = _simulate(tmp_path, setup_cfg, "spectral.spnr")
        b = _simulate(tmp_path, setup_cfg, "time.spnr", extra=["--forward", "time"])
        za, zb = read_dataset(a), read_dataset(b)
        assert np.abs(za.spectra - zb.spectra).max() < 1e-9
        capsys.readouterr()

    def test_reconstruct_writes_artifacts(self, tmp_path, setup_cfg, capsys):
        data = _simulate(tmp_path, setup_cfg)
        out = tmp_path / "recon"
        code = cli.main(
            ["reconstruct", "--dataset", data, "--field", "voxel:8",
             "--iterations", "10", "--out", str(out)]
        )
        assert code == 0
        for name in ("volume.raw", "volume.raw.meta", "cloud.ply", "history.csv"):
            assert (out / name).exists(), name
        header = (out / "history.csv").read_text().splitlines()[0]
        assert header.startswith("step,")
        assert len((out / "history.csv").read_text().splitlines()) == 11
        capsys.readouterr()

    def test_full_pipeline_with_evaluate(self, tmp_path, setup_cfg, capsys):
        data = _simulate(tmp_path, setup_cfg)
        out = tmp_path / "recon"
        assert cli.main(
            ["reconstruct", "--dataset", data, "--field", "voxel:8",
             "--iterations", "30", "--poses-per-step", "4", "--out", str(out)]
        ) == 0
        metrics = tmp_path / "metrics.csv"
        code = cli.main(
            ["evaluate", "--pred", str(out / "volume.raw"), "--gt", setup_cfg,
             "--label", "tiny", "--out", str(metrics)]
        )
        assert code == 0
        lines = metrics.read_text().splitlines()
        assert lines[0] == "label,iou,chamfer,hausdorff,psnr,ssim"
        assert lines[1].startswith("tiny,")
        assert "tiny:" in capsys.readouterr().out

    def test_evaluate_rejects_mismatched_bounds(self, tmp_path, setup_cfg, capsys):
        data = _simulate(tmp_path, setup_cfg)
        out = tmp_path / "recon"
        assert cli.main(
            ["reconstruct", "--dataset", data, "--field", "voxel:6",
             "--iterations", "5", "--out", str(out)]
        ) == 0
        other = tmp_path / "other.cfg"
        other.write_text(TINY_SETUP.replace("side = 0.36", "side = 0.5"))
        code = cli.main(
            ["evaluate", "--pred", str(out / "volume.raw"), "--gt", str(other),
             "--out", str(tmp_path / "m.csv")]
        )
        assert code == 2
        assert "do not match" in capsys.readouterr().err

    def test_backproject_writes_volume(self, tmp_path, setup_cfg, capsys):
        data = _simulate(tmp_path, setup_cfg)
        out = tmp_path / "bp"
        code = cli.main(
            ["backproject", "--dataset", data, "--resolution", "8", "--out", str(out)]
        )
        assert code == 0
        volume = read_volume(out / "volume.raw")
        assert volume.resolution == (8, 8, 8)
        assert np.isfinite(volume.values).all()
        capsys.readouterr()

    def test_reconstruct_inr_field(self, tmp_path, setup_cfg, capsys):
        data = _simulate(tmp_path, setup_cfg)
        out = tmp_path / "inr"
        code = cli.main(
            ["reconstruct", "--dataset", data, "--field", "inr:6",
             "--iterations", "4", "--out", str(out)]
        )
        assert code == 0
        assert read_volume(out / "volume.raw").resolution == (6, 6, 6)
        capsys.readouterr()


class TestDeterminism:
    def test_reproducible_runs_are_bitwise_identical(self, tmp_path, setup_cfg, capsys):
        data = _simulate(tmp_path, setup_cfg, extra=["--reproducible", "--seed", "3"])
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert cli.main(
                ["reconstruct", "--dataset", data, "--field", "voxel:8",
                 "--iterations", "12", "--seed", "3", "--reproducible",
                 "--out", str(out)]
            ) == 0
            outputs.append(out)
        a, b = outputs
        assert (a / "volume.raw").read_bytes() == (b / "volume.raw").read_bytes()
        assert (a / "history.csv").read_text() == (b / "history.csv").read_text()
        assert (a / "cloud.ply").read_bytes() == (b / "cloud.ply").read_bytes()
        capsys.readouterr()

    def test_simulate_reproducible_is_bitwise_identical(self, tmp_path, setup_cfg, capsys):
        a = _simulate(tmp_path, setup_cfg, "a.spnr", extra=["--reproducible"])
        b = _simulate(tmp_path, setup_cfg, "b.spnr", extra=["--reproducible"])
        with open(a, "rb") as fa, open(b, "rb") as fb:
            assert fa.read() == fb.read()
        capsys.readouterr()


class TestBench:
    def test_tiny_bench_writes_table(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        code = cli.main(
            ["bench", "--scene-sizes", "16", "--repeats", "1", "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "model,points,k,n,seconds"
        assert len(lines) == 4
        for line in lines[1:]:
            model, points, k, n, seconds = line.split(",")
            assert model in ("spectral", "time", "rq")
            assert int(points) == 16
            assert float(seconds) >= 0.0
        capsys.readouterr()

    def test_bad_scene_size_is_data_error(self, tmp_path, capsys):
        code = cli.main(
            ["bench", "--scene-sizes", "0", "--out", str(tmp_path / "b.csv")]
        )
        assert code == 2
        capsys.readouterr()


class TestGradcheck:
    def test_voxel_gradcheck_passes(self, capsys):
        assert cli.main(["gradcheck", "--field", "voxel"]) == 0
        out = capsys.readouterr().out
        assert "adjoint identity" in out and "pass" in out

    def test_inr_gradcheck_passes(self, capsys):
        assert cli.main(["gradcheck", "--field", "inr"]) == 0
        assert "finite-difference" in capsys.readouterr().out

    def test_broken_adjoint_fails_with_exit_3(self, monkeypatch, capsys):
        real = cli.spectral_adjoint

        def broken(chirp, pose, queries, residual, k_bins, **kw):
            return 0.5 * real(chirp, pose, queries, residual, k_bins, **kw)

        monkeypatch.setattr(cli, "spectral_adjoint", broken)
        assert cli.main(["gradcheck", "--field", "voxel"]) == 3
        assert "FAIL" in capsys.readouterr().out


class TestAblateLossSensitivity:
    def test_writes_four_noise_rows(self, tmp_path, capsys):
        out = tmp_path / "abl"
        code = cli.main(["ablate", "--what", "loss-sensitivity", "--out", str(out)])
        assert code == 0
        lines = (out / "loss_sensitivity.csv").read_text().splitlines()
        assert lines[0] == "noise_m,mag_mse,real_mse,imag_mse"
        rows = [tuple(map(float, line.split(","))) for line in lines[1:]]
        assert len(rows) == 4
        noises = [r[0] for r in rows]
        assert noises == pytest.approx([1e-4, 1e-3, 1e-2, 1e-1])
        # Sub-wavelength displacement shows in phase long before magnitude.
        assert rows[0][2] > 10.0 * rows[0][1]
        assert rows[1][2] > rows[0][2]
        capsys.readouterr()

    def test_unknown_ablation_is_usage_error(self, tmp_path, capsys):
        code = cli.main(["ablate", "--what", "nope", "--out", str(tmp_path / "x")])
        assert code == 1
        capsys.readouterr()
