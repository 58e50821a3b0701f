import os

import numpy as np
import pytest

from helpers import read_csv

from qkr.cli import (
    ConfigError,
    ExperimentConfig,
    build_config,
    main,
    parse_config_file,
    run_basis_check,
    write_pgm,
)
from qkr.phase_space import CellDistribution


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def _csv_table(path):
    cols, _ = read_csv(path)
    return cols


def test_parse_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# comment line\n"
        "\n"
        "ell = 10\n"
        "K = 0.5, 5\n"
        "seed=99\n"
        "L_list = 1000,2000\n"
    )
    raw = parse_config_file(cfg)
    assert raw == {"ell": "10", "K": "0.5, 5", "seed": "99", "L_list": "1000,2000"}
    built = build_config("degeneracy-scan", raw)
    assert built.ell == 10 and built.K == (0.5, 5.0) and built.seed == 99

    bad = tmp_path / "bad.cfg"
    bad.write_text("ell 10\n")
    with pytest.raises(ConfigError):
        parse_config_file(bad)
    bad.write_text("no_such_key = 3\n")
    with pytest.raises(ConfigError):
        parse_config_file(bad)


def test_validation_errors():
    with pytest.raises(ConfigError):
        build_config("degeneracy-scan", {"ell": "7"})  # odd ell on the torus
    with pytest.raises(ConfigError):
        build_config("entropy-evolution", {"ell": "4", "ensemble_size": "17"})
    with pytest.raises(ConfigError):
        build_config("localization-scan", {"K": "0.5"})  # below chaos threshold
    with pytest.raises(ConfigError):
        build_config("localization-scan", {"L_list": "500,1000"})
    with pytest.raises(ConfigError):
        build_config("poincare", {"ell": "4", "n_cells": "17"})
    with pytest.raises(ConfigError):
        build_config("nonsense", {})


def test_cli_exit_codes(tmp_path, capsys):
    rc = main(["degeneracy-scan", "--ell", "7", "--out", str(tmp_path)])
    assert rc == 2
    assert "config error" in capsys.readouterr().err


def test_cli_overrides_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("ell = 4\nkicks = 1\nclassical_points = 2000\nn_cells = 2\n")
    out = tmp_path / "out"
    rc = main(["poincare", "--config", str(cfg), "--kicks", "2", "--out", str(out), "--seed", "5"])
    assert rc == 0
    table = _csv_table(out / "poincare.csv")
    assert int(table["kicks"][0]) == 2  # CLI beat the file
    assert int(table["ell"][0]) == 4


def test_poincare_outputs_and_determinism(tmp_path):
    out = tmp_path / "a"
    args = ["poincare", "--ell", "10", "--K", "5", "--kicks", "2",
            "--classical-points", "20000", "--seed", "11", "--out", str(out)]
    assert main(args) == 0
    names = sorted(os.listdir(out))
    assert "poincare.csv" in names
    assert any(n.endswith(".pgm") for n in names)
    first = {name: _read(out / name) for name in names}
    assert main(args) == 0  # identical config + seed -> byte-identical files
    assert sorted(os.listdir(out)) == names
    for name in names:
        assert _read(out / name) == first[name]


def test_pgm_format(tmp_path):
    probs = np.zeros((4, 4))
    probs[0, 1] = 0.75   # lowest momentum row -> bottom of the image
    probs[3, 2] = 0.25
    dist = CellDistribution(4, 0, probs, folded=True)
    path = tmp_path / "x.pgm"
    write_pgm(path, dist, {"seed": "1"})
    blob = _read(path)
    assert blob.startswith(b"P5\n")
    text, _, pixels = blob.rpartition(b"255\n")
    lines = text.decode().strip().splitlines()
    assert lines[-1] == "4 4"
    assert any(line.startswith("# p_max = 0.75") for line in lines)
    img = np.frombuffer(pixels, dtype=np.uint8).reshape(4, 4)
    assert img[0, 2] == round(255 * 0.25 / 0.75)  # top row = highest momentum
    assert img[3, 1] == 255
    assert img.sum() == 255 + round(255 * 0.25 / 0.75)


def test_metadata_header_before_csv_header(tmp_path):
    out = tmp_path / "out"
    assert main(["entropy-evolution", "--ell", "4", "--K", "2", "--kicks", "2",
                 "--ensemble-size", "3", "--seed", "1", "--out", str(out)]) == 0
    lines = (out / "entropy_evolution.csv").read_text().splitlines()
    i = 0
    while lines[i].startswith("#"):
        i += 1
    assert i > 3  # config echo present
    assert lines[i] == "K,kick,mean_entropy,std_entropy"
    meta = "\n".join(lines[:i])
    assert "seed = 1" in meta and "rng = numpy.random.PCG64" in meta and "artifact = qkr" in meta


def test_entropy_evolution_rows_and_determinism(tmp_path):
    out1 = tmp_path / "a"
    args = ["entropy-evolution", "--ell", "10", "--K", "0.5,5", "--kicks", "3",
            "--ensemble-size", "4", "--seed", "2", "--out", str(out1)]
    assert main(args) == 0
    first = _read(out1 / "entropy_evolution.csv")
    assert main(args) == 0
    assert _read(out1 / "entropy_evolution.csv") == first
    t = _csv_table(out1 / "entropy_evolution.csv")
    assert len(t["K"]) == 2 * 4  # two K values, kicks 0..3
    assert t["kick"][0] == 0 and t["mean_entropy"][0] == pytest.approx(0.0, abs=1e-12)
    # rows in input order: K = 0.5 block first
    assert np.all(t["K"][:4] == 0.5) and np.all(t["K"][4:] == 5.0)


def test_degeneracy_scan_csv(tmp_path):
    out = tmp_path / "out"
    assert main(["degeneracy-scan", "--ell", "8", "--K", "5,2", "--seed", "3",
                 "--out", str(out)]) == 0
    t = _csv_table(out / "degeneracy_scan.csv")
    assert list(t["K"]) == [5.0, 2.0]  # input order preserved
    assert np.all(t["N"] == 64)
    assert np.all(np.abs(t["eta"] - 1) < 0.2)
    assert np.all(t["eta_r2"] > 0.9)


def test_threads_env_does_not_change_output(tmp_path, monkeypatch):
    out = tmp_path / "a"
    args = ["degeneracy-scan", "--ell", "6", "--K", "1,2,3", "--seed", "4",
            "--out", str(out)]
    monkeypatch.setenv("QKR_THREADS", "1")
    assert main(args) == 0
    serial = _read(out / "degeneracy_scan.csv")
    monkeypatch.setenv("QKR_THREADS", "3")
    assert main(args) == 0
    assert _read(out / "degeneracy_scan.csv") == serial


def test_basis_check_outputs(tmp_path):
    cfg = ExperimentConfig(experiment="basis-check", output_dir=str(tmp_path / "out"), ell=4)
    paths = run_basis_check(cfg)
    names = {os.path.basename(p) for p in paths}
    assert names == {
        "basis_orthonormality.csv",
        "basis_spreads.csv",
        "basis_slopes.csv",
        "basis_profile_angle.csv",
        "basis_profile_momentum.csv",
    }
    ortho = _csv_table(tmp_path / "out" / "basis_orthonormality.csv")
    assert ortho["max_residual"].max() < 1e-10
    spreads = _csv_table(tmp_path / "out" / "basis_spreads.csv")
    i7 = int(np.flatnonzero(spreads["ell"] == 7)[0])
    assert spreads["var_l"][i7] == pytest.approx(4.0, abs=1e-12)
    assert spreads["var_l_numeric"][i7] == pytest.approx(4.0, abs=1e-9)
    assert abs(spreads["var_theta"][i7] - spreads["var_theta_quadrature"][i7]) / spreads["var_theta"][i7] < 1e-6
    slopes = _csv_table(tmp_path / "out" / "basis_slopes.csv")
    assert abs(slopes["slope_rel_l"][0] - (-1.0)) < 0.05
    assert abs(slopes["slope_rel_theta"][0] - (-2.5)) < 0.05


def test_observable_check_small(tmp_path):
    out = tmp_path / "out"
    assert main(["observable-check", "--ell", "4", "--K", "5", "--kicks", "200",
                 "--ensemble-size", "2", "--seed", "6", "--out", str(out)]) == 0
    t = _csv_table(out / "observable_check.csv")
    assert t["state"][0] == "random_0" and t["observable"][0] == "identity"
    assert t["time_average"][0] == pytest.approx(1.0, abs=1e-10)
    assert t["diagonal_average"][0] == pytest.approx(1.0, abs=1e-10)
    floquet_rows = [i for i, s in enumerate(t["state"]) if s == "floquet_0"]
    assert len(floquet_rows) == 3
    assert all(t["fluctuation_sq"][i] < 1e-16 for i in floquet_rows)
    rand = [i for i, s in enumerate(t["state"])
            if s.startswith("random_") and t["observable"][i] != "identity"]
    assert len(rand) == 2 * 3
    assert all(t["fluctuation_sq"][i] <= t["bound"][i] + 1e-8 for i in rand)
