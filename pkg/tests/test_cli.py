import csv
import json
import os

import numpy as np
import pytest

from eqpyragas import io
from eqpyragas.cli import EXIT_MISMATCH, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def osc_file(tmp_path_factory):
    d = tmp_path_factory.mktemp("osc")
    assert main(["find-orbit", "--system", "twisted_oscillator", "--out", str(d)]) == EXIT_OK
    return d / "wave.json"


@pytest.fixture(scope="module")
def pos_file(tmp_path_factory):
    d = tmp_path_factory.mktemp("pos")
    assert main(["find-orbit", "--system", "positive_unstable", "--out", str(d)]) == EXIT_OK
    return d / "wave.json"


def test_find_orbit_oscillator(osc_file):
    doc = json.loads(osc_file.read_text())
    assert doc["format"] == "eqpyragas-wave" and doc["version"] == 1
    # the anchor is fixed by the phase condition; it lies on the unit circle near (1, 0, 0)
    x0 = np.array(doc["x0"])
    assert np.hypot(x0[0], x0[1]) == pytest.approx(1.0, abs=1e-8) and abs(x0[2]) < 1e-8
    assert np.linalg.norm(x0 - [1, 0, 0]) < 0.05
    assert doc["period"] == pytest.approx(2 * np.pi, abs=1e-8)
    assert doc["theta_h"] == pytest.approx(np.pi, abs=1e-8)
    assert len(doc["samples"]["t"]) == len(doc["samples"]["x"])
    assert (osc_file.parent / "trajectory.csv").exists()


def test_bad_guess_exit_2(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[system]\nname = twisted_oscillator\n[guess]\nx = [40.0, 0.0, 30.0]\ntheta = 0.01\n")
    assert main(["find-orbit", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_NUMERIC


def test_missing_files_exit_1(tmp_path, capsys):
    assert main(["analyze", "--wave", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["find-orbit", "--config", str(tmp_path / "nope.ini")]) == EXIT_USAGE
    assert main(["analyze", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["no-such-command"]) == EXIT_USAGE
    capsys.readouterr()


def test_garbage_wave_file_exit_1(tmp_path):
    p = tmp_path / "w.json"
    p.write_text("{not json")
    assert main(["analyze", "--wave", str(p), "--out", str(tmp_path)]) == EXIT_USAGE
    p.write_text(json.dumps({"format": "other"}))
    assert main(["analyze", "--wave", str(p), "--out", str(tmp_path)]) == EXIT_USAGE


def test_round_trip_bit_identical(osc_file, osc_wave, tmp_path):
    w = io.load_wave(str(osc_file))
    p2 = tmp_path / "again.json"
    io.save_wave(w, str(p2), "twisted_oscillator", {})
    a, b = json.loads(osc_file.read_text()), json.loads(p2.read_text())
    assert a["x0"] == b["x0"] and a["period"] == b["period"] and a["theta_h"] == b["theta_h"]
    assert np.array_equal(w.x0, np.array(a["x0"])) and w.period == a["period"]


def test_analyze_oscillator(osc_file, tmp_path):
    assert main(["analyze", "--wave", str(osc_file), "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "report.json").read_text())
    assert list(rep) == ["format", "version", "wave", "spectrum", "power_identity_residual", "hypotheses",
                         "gain_interval", "gain_verdicts", "oracle", "status", "reasons"]
    assert rep["status"] == "stabilizable" and rep["reasons"] == []
    gi = rep["gain_interval"]
    assert gi["lo"] == pytest.approx(-0.5, abs=1e-9)
    assert gi["hi"] == pytest.approx(-0.25, abs=1e-12)
    assert all(v["stable"] for v in rep["gain_verdicts"])
    assert len(_rows(tmp_path / "spectrum.csv")) == 3
    assert len(_rows(tmp_path / "roots.csv")) >= 1


def test_analyze_positive_unstable(pos_file, tmp_path, capsys):
    assert main(["analyze", "--wave", str(pos_file), "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["status"] == "not_stabilizable"
    assert any("(-e^2, -1)" in r for r in rep["reasons"])
    assert "(-e^2, -1)" in capsys.readouterr().out


def test_analyze_stable_wave(tmp_path):
    assert main(["find-orbit", "--system", "stable_oscillator", "--out", str(tmp_path)]) == EXIT_OK
    assert main(["analyze", "--wave", str(tmp_path / "wave.json"), "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["status"] == "stabilizable"
    assert rep["gain_interval"]["hi"] == 0.0 and rep["gain_interval"]["lo"] < 0


def test_analyze_deterministic(osc_file, tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / str(k)
        assert main(["analyze", "--wave", str(osc_file), "--gain", "-0.35", "--seed", "7", "--out", str(d)]) == 0
        outs.append((d / "report.json").read_bytes())
    assert outs[0] == outs[1]


def test_simulate_decay(osc_file, tmp_path):
    code = main(["simulate", "--wave", str(osc_file), "--gain", "-0.35", "--direction", "0",
                 "--periods", "20", "--out", str(tmp_path)])
    assert code == EXIT_OK
    summ = json.loads((tmp_path / "simulation_summary.json").read_text())
    assert summ["decay_factor"] >= 10
    rows = _rows(tmp_path / "simulation.csv")
    assert list(rows[0]) == ["t", "x1", "x2", "x3", "control_norm", "dist_to_orbit"]


def test_simulate_random_seeded(osc_file, tmp_path):
    dirs = []
    for k in range(2):
        d = tmp_path / str(k)
        main(["simulate", "--wave", str(osc_file), "--gain", "-0.35", "--direction", "random", "--seed", "3",
              "--periods", "2", "--out", str(d)])
        dirs.append(json.loads((d / "simulation_summary.json").read_text())["direction"])
    assert dirs[0] == dirs[1]
    assert np.linalg.norm(dirs[0]) == pytest.approx(1e-3)


def test_simulate_needs_one_gain(osc_file, tmp_path):
    assert main(["simulate", "--wave", str(osc_file), "--out", str(tmp_path)]) == EXIT_USAGE


def test_region_without_wave(tmp_path):
    assert main(["region", "--out", str(tmp_path)]) == EXIT_OK
    rows = _rows(tmp_path / "region.csv")
    ids = {r["curve_id"] for r in rows}
    assert {"R", "C0"} <= ids
    c0 = [(float(r["alpha"]), float(r["beta"])) for r in rows if r["curve_id"] == "C0"]
    assert min(np.hypot(a - 1, b + 1) for a, b in c0) < 1e-12
    assert not (tmp_path / "gain_path.csv").exists()


def test_region_gain_path(osc_file, tmp_path):
    assert main(["region", "--wave", str(osc_file), "--out", str(tmp_path)]) == EXIT_OK
    rows = _rows(tmp_path / "gain_path.csv")
    cross = [r for r in rows if r["crossing"] == "1"]
    lam = np.pi / 2
    assert any(abs(float(r["b_star"]) + lam / 2) < 1e-12 for r in cross)
    for r in rows:
        assert float(r["alpha"]) == pytest.approx(lam + float(r["b_star"]), abs=1e-12)
        assert float(r["beta"]) == pytest.approx(float(r["b_star"]), abs=1e-15)


def test_verify_passes(osc_file, tmp_path):
    argv = ["verify", "--wave", str(osc_file), "--grid-m", "200", "--out", str(tmp_path)]
    for b in ("0", "-0.35", "-0.6"):
        argv += ["--gain", b]
    assert main(argv) == EXIT_OK
    summ = json.loads((tmp_path / "verify.json").read_text())
    assert summ["passed"] and len(summ["rows"]) == 3
    assert all(r["max_rel_error"] <= 1e-3 for r in summ["rows"])


def test_verify_corrupted_exit_3(osc_file, tmp_path):
    eigs = tmp_path / "eigs.json"
    eigs.write_text(json.dumps([[-4.0, 0.0], 1.0, 0.00186744]))
    code = main(["verify", "--wave", str(osc_file), "--eigs", str(eigs), "--gain", "0", "--grid-m", "100",
                 "--out", str(tmp_path)])
    assert code == EXIT_MISMATCH
    assert os.path.exists(tmp_path / "verify.csv")
