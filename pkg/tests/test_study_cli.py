import json
import os
import subprocess
import sys

import numpy as np
import pytest

from steklov_lab import meshgen, study


SMALL = {
    "m_values": [2, 3],
    "k": 2,
    "h_hom": 1 / 32,
    "template": {"ring_count": 8, "grading": 2.0,
                 "boundary_nodes_per_side": 4, "hole_boundary_segments": 16},
    "sources": [{"kind": "sine", "px": 1, "py": 1}],
}


def small_config(**over):
    data = dict(SMALL)
    data.update(over)
    return study.config_from_dict(data)


def test_config_validation_errors():
    with pytest.raises(study.StudyError, match="strictly increasing"):
        study.config_from_dict({"m_values": [4, 4]})
    with pytest.raises(study.StudyError, match="inadmissible"):
        study.config_from_dict({"m_values": [2, 4], "beta": 1.5})
    with pytest.raises(study.StudyError, match="positive"):
        study.config_from_dict({"tol": -1})
    with pytest.raises(study.StudyError, match="unknown domain"):
        study.config_from_dict({"domain": "disk"})
    with pytest.raises(study.StudyError, match="bad config field"):
        study.config_from_dict({"nonsense": 1})


def test_oracle_selftest_passes():
    checks = study.oracle_selftest()
    assert all(ok for _, ok, _ in checks)
    names = {n for n, _, _ in checks}
    assert {"bessel-j0-zero", "quadrature-vs-matrices",
            "dense-vs-lanczos"} <= names


def test_small_study_runs_and_reports(tmp_path):
    cfg = small_config(run_gaps=True)
    report = study.run_study(cfg, with_cell_summary=False)
    assert report.oracle_ok
    assert len(report.pairs) == 2
    assert report.rate is None          # fewer than 4 usable points
    assert any("rate fit skipped" in n for n in report.notes)
    assert report.pairs[0].hausdorff > report.pairs[1].hausdorff
    paths = study.write_report(report, str(tmp_path / "out"))
    assert os.path.exists(paths["csv"])
    data = json.loads(open(paths["json"]).read())
    assert data["environment"]["package"] == "steklov-lab"
    assert len(data["points"]) == 2
    head = open(paths["csv"]).readline().strip().split(",")
    assert head[:5] == ["epsilon", "r_eps", "d", "kappa", "delta"]
    assert "gap_f1" in head


def test_study_determinism_byte_identical(tmp_path):
    outs = []
    for run in ("a", "b"):
        cfg = small_config(run_gaps=True)
        report = study.run_study(cfg, with_cell_summary=False)
        paths = study.write_report(report, str(tmp_path / run))
        outs.append((open(paths["csv"], "rb").read(),
                     open(paths["json"], "rb").read()))
    assert outs[0][0] == outs[1][0]
    assert outs[0][1] == outs[1][1]


def test_rate_fit_gated_on_oracle(monkeypatch):
    cfg = small_config()
    monkeypatch.setattr(study, "oracle_selftest",
                        lambda seed=0: [("fake", False, "forced failure")])
    report = study.run_study(cfg, with_cell_summary=False)
    assert not report.oracle_ok
    assert report.rate is None
    assert any("refused" in n for n in report.notes)
    assert not report.passed


def test_svg_plot_structure():
    text = study.svg_loglog([0.1, 0.2, 0.4], [0.01, 0.02, 0.04],
                            slope=1.0, intercept=-2.3, title="test")
    assert text.startswith("<svg")
    assert "slope 1.000" in text
    assert "polyline" in text


def run_cli(*args, timeout=500):
    return subprocess.run([sys.executable, "-m", "steklov_lab.cli", *args],
                          capture_output=True, text=True, timeout=timeout)


def test_cli_oracle_selftest():
    r = run_cli("oracle", "--selftest")
    assert r.returncode == 0
    assert "PASS" in r.stdout


def test_cli_solve_homog_near_analytic():
    r = run_cli("solve", "--homog", "--q", "1", "--h", "0.05", "-k", "3")
    assert r.returncode == 0
    lines = [ln for ln in r.stdout.splitlines() if ln.startswith("  ")]
    vals = [float(ln.split()[0]) for ln in lines]
    assert abs(vals[0] - 2 * np.pi ** 2) / (2 * np.pi ** 2) < 0.02
    assert abs(vals[1] - 5 * np.pi ** 2) / (5 * np.pi ** 2) < 0.02


def test_cli_missing_study_config_exits_2(tmp_path):
    r = run_cli("study", str(tmp_path / "missing.json"))
    assert r.returncode == 2


def test_cli_invalid_study_config_exits_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"m_values": [4, 2]}))
    r = run_cli("study", str(p))
    assert r.returncode == 2


def test_cli_validate_roundtrip(tmp_path):
    from steklov_lab import geometry
    g = geometry.build_perforated_geometry(geometry.unit_square(), 3, 1.0)
    p = tmp_path / "geom.json"
    p.write_text(geometry.geometry_to_json(g))
    r = run_cli("validate", str(p))
    assert r.returncode == 0
    assert "PASS" in r.stdout


def test_cli_mesh_export_reloadable(tmp_path):
    out = tmp_path / "mesh.txt"
    r = run_cli("mesh", "--m", "2", "--export", str(out))
    assert r.returncode == 0
    mesh = meshgen.load_mesh(out.read_text())
    assert mesh.num_triangles > 0
    assert meshgen.export_mesh(mesh) == out.read_text()


def test_cli_cell_lemma_csv():
    r = run_cli("cell", "--lemma", "3.5")
    assert r.returncode == 0
    assert "PASS" in r.stdout


def test_env_var_overrides_parallelism(monkeypatch, tmp_path):
    # a 2-worker pool must give byte-identical results to the serial path
    cfg = small_config(run_gaps=False)
    serial = study.run_study(cfg, with_cell_summary=False)
    monkeypatch.setenv("STEKLOV_LAB_THREADS", "2")
    pooled = study.run_study(cfg, with_cell_summary=False)
    monkeypatch.delenv("STEKLOV_LAB_THREADS")
    assert study.report_csv(serial) == study.report_csv(pooled)
