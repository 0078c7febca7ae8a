"""CLI surface: exit codes, artifacts on disk, config merging, determinism."""

import json

import pytest

from translator_forge.cli import (EXIT_CONFIG, EXIT_PASS, EXIT_REFUSAL,
                                  EXIT_RESIDUAL, main)

SYMMETRIC = ["--expr-g1=0.5*tanh(u)*exp(i*u)", "--expr-g2=0.5*tanh(u)*exp(i*u)",
             "--mode=strict_disc", "--domain=-1,1,-1,1"]


def run(args, tmp_path):
    return main(list(args) + ["--out-dir", str(tmp_path)])


class TestExitCodes:
    def test_pass(self, tmp_path):
        assert run(["verify", "--example", "grim_reaper", "--h", "0.1"],
                   tmp_path) == EXIT_PASS

    def test_residual_failure(self, tmp_path):
        # symmetric non-solution: integrates under the loose h=0.05 gate,
        # then fails the residual evaluation
        code = run(["verify"] + SYMMETRIC + ["--h", "0.05", "--force"], tmp_path)
        assert code == EXIT_RESIDUAL

    def test_refusal(self, tmp_path):
        code = run(["integrate"] + SYMMETRIC + ["--h", "0.02"], tmp_path)
        assert code == EXIT_REFUSAL

    def test_force_integrates_anyway(self, tmp_path):
        code = run(["verify"] + SYMMETRIC + ["--h", "0.02", "--force"], tmp_path)
        assert code == EXIT_RESIDUAL

    def test_unknown_example(self, tmp_path):
        assert run(["verify", "--example", "helicoid"], tmp_path) == EXIT_CONFIG

    def test_bad_expression(self, tmp_path, capsys):
        code = run(["verify", "--expr-g1=sin(", "--expr-g2=u"], tmp_path)
        assert code == EXIT_CONFIG
        assert "sin(" in capsys.readouterr().err

    def test_missing_example(self, tmp_path):
        assert run(["verify", "--h", "0.1"], tmp_path) == EXIT_CONFIG

    def test_theta_outside_tilted_family(self, tmp_path):
        code = run(["verify", "--example", "grim_reaper", "--theta", "0.3"],
                   tmp_path)
        assert code == EXIT_CONFIG


class TestArtifacts:
    def test_verify_writes_report_and_figures(self, tmp_path, capsys):
        assert run(["verify", "--example", "grim_reaper", "--h", "0.1"],
                   tmp_path) == EXIT_PASS
        for suffix in ("report.json", "translator.png", "compatibility.png",
                       "surface.png"):
            assert (tmp_path / f"grim_reaper_{suffix}").exists()
        out = capsys.readouterr().out
        assert "PASS" in out
        assert "translator" in out

    def test_integrate_writes_mesh(self, tmp_path):
        code = run(["integrate", "--example", "lagrangian_castro_lerma",
                    "--h", "0.05"], tmp_path)
        assert code == EXIT_PASS
        base = "lagrangian_castro_lerma"
        assert (tmp_path / f"{base}_patch.csv").exists()
        assert (tmp_path / f"{base}.obj").exists()
        # fourth component rides in a sidecar next to the 3-slot mesh
        assert (tmp_path / f"{base}_extra.csv").exists()
        header = (tmp_path / f"{base}_patch.csv").read_text().splitlines()[0]
        assert header == "u,v,x1,x2,x3,x4"

    def test_export_catalog(self, tmp_path):
        assert run(["export-catalog", "--h", "0.1"], tmp_path) == EXIT_PASS
        for name in ("grim_reaper", "tilted_reaper", "lagrangian_castro_lerma"):
            assert (tmp_path / f"{name}_patch.csv").exists()
            assert (tmp_path / f"{name}.obj").exists()
            assert (tmp_path / f"{name}_surface.png").exists()

    def test_converge_ratios_near_four(self, tmp_path):
        assert run(["converge", "--example", "grim_reaper", "--h", "0.08",
                    "--domain=-1,1,-1,1"], tmp_path) == EXIT_PASS
        data = json.loads((tmp_path / "grim_reaper_convergence.json").read_text())
        ratios = data["convergence"]
        assert {"translator", "loop_closure", "closed_form_X"} <= set(ratios)
        for name, ratio in ratios.items():
            assert 3.2 < ratio < 4.8, (name, ratio)


class TestConfigFile:
    def test_file_values_and_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# demo run\nexample = grim_reaper\nh = 0.2\n")
        assert main(["verify", "--config", str(cfg), "--h", "0.1",
                     "--out-dir", str(tmp_path)]) == EXIT_PASS
        out = capsys.readouterr().out
        assert "41 x 41" in out  # h flag overrode the file's 0.2

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("examle = grim_reaper\n")
        assert main(["verify", "--config", str(cfg)]) == EXIT_CONFIG
        assert "examle" in capsys.readouterr().err


class TestDeterminism:
    def test_verify_report_bytes_stable(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            d.mkdir()
            assert main(["verify", "--example", "grim_reaper", "--h", "0.1",
                         "--out-dir", str(d)]) == EXIT_PASS
        assert (a / "grim_reaper_report.json").read_bytes() == \
            (b / "grim_reaper_report.json").read_bytes()

    def test_integrate_mesh_bytes_stable(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            d.mkdir()
            assert main(["integrate", "--example", "grim_reaper", "--h", "0.1",
                         "--out-dir", str(d)]) == EXIT_PASS
        assert (a / "grim_reaper_patch.csv").read_bytes() == \
            (b / "grim_reaper_patch.csv").read_bytes()
        assert (a / "grim_reaper.obj").read_bytes() == \
            (b / "grim_reaper.obj").read_bytes()
