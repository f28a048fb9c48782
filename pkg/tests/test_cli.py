import csv
import io
import json
import logging

import numpy as np
import pytest

from kcde import __version__
from kcde.cli import main, write_atomic
from kcde.distributions import ParametricModel
from kcde.estimator import KcdeModel, fit_kcde


def write_values(path, values, header="amount_mm"):
    path.write_text(header + "\n" + "".join(f"{float(v)!r}\n" for v in values))
    return str(path)


@pytest.fixture
def gamma_csv(tmp_path):
    return write_values(tmp_path / "gamma.csv", ParametricModel.gamma(1.0, 30.0).sample(300, seed=4))


@pytest.fixture
def model_file(tmp_path, gamma_csv):
    out = tmp_path / "model.json"
    assert main(["fit", "-i", gamma_csv, "-o", str(out)]) == 0
    return str(out)


def test_fit_writes_model_and_report(tmp_path, gamma_csv, capsys):
    out = tmp_path / "model.json"
    assert main(["fit", "-i", gamma_csv, "-o", str(out), "--kernel", "spherical"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["h"] > 0 and report["kernel"] == "spherical" and report["bandwidthMethod"] == "bgk"
    model = KcdeModel.from_json(out.read_text())
    x = np.loadtxt(gamma_csv, skiprows=1)
    lib = fit_kcde(x, kernel="spherical")
    assert model.h == lib.h and model.p_at_zero == lib.p_at_zero


def test_fit_fixed_bandwidth_verbatim(tmp_path, gamma_csv, capsys):
    assert main(["fit", "-i", gamma_csv, "--bandwidth", "0.5", "--boundary-correction", "off"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["model"]["h"] == 0.5 and out["report"]["bandwidthMethod"] == "fixed"
    assert out["model"]["boundaryCorrected"] is False


def test_fit_empty_sample(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["fit", "-i", str(empty)]) == 2
    assert "empty sample" in capsys.readouterr().err


def test_eval_reproduces_library(tmp_path, model_file, capsys):
    pts = write_values(tmp_path / "pts.csv", [-1.0, 0.0, 5.0, 30.0, 250.0], header="z")
    assert main(["eval", "-m", model_file, "--points", pts]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    with open(model_file) as fh:
        model = KcdeModel.from_json(fh.read())
    z = np.array([float(r["z"]) for r in rows])
    assert [float(r["cdf"]) for r in rows] == model.cdf(z).tolist()
    assert [float(r["pdf"]) for r in rows] == model.pdf(z).tolist()
    assert float(rows[0]["cdf"]) == 0.0


def test_eval_json(tmp_path, model_file, capsys):
    pts = write_values(tmp_path / "pts.csv", [1.0, 2.0], header="z")
    out = tmp_path / "eval.json"
    assert main(["eval", "-m", model_file, "--points", pts, "--format", "json", "-o", str(out)]) == 0
    data = json.loads(out.read_text())
    assert set(data) == {"z", "cdf", "pdf", "staircase"} and len(data["cdf"]) == 2


def test_malformed_model(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{this is not json")
    pts = write_values(tmp_path / "pts.csv", [1.0], header="z")
    assert main(["eval", "-m", str(bad), "--points", pts]) == 2
    assert main(["simulate", "-m", str(tmp_path / "missing.json")]) == 2


def test_simulate_deterministic(model_file, capsys):
    assert main(["simulate", "-m", model_file, "--n", "5", "--seed", "7"]) == 0
    first = capsys.readouterr().out
    assert main(["simulate", "-m", model_file, "--n", "5", "--seed", "7"]) == 0
    assert capsys.readouterr().out == first
    lines = first.strip().splitlines()
    assert lines[0] == "amount_mm" and len(lines) == 6


def test_simulate_default_seed_logged(model_file, caplog):
    with caplog.at_level(logging.INFO, logger="kcde"):
        assert main(["simulate", "-m", model_file, "--n", "3"]) == 0
    assert "default seed 0" in caplog.text


def test_select_ranks_weibull_first(tmp_path, capsys):
    path = write_values(tmp_path / "wbl.csv", ParametricModel.weibull(15.0, 0.7).sample(2000, seed=8))
    assert main(["select", "-i", path]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert rows[0]["family"] == "weibull"
    assert [float(r["bic"]) for r in rows] == sorted(float(r["bic"]) for r in rows)
    assert main(["select", "-i", path, "--format", "json", "--families", "gamma,weibull"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["rankings"]["bic"][0] == "weibull"


def test_select_all_fail_is_numerical(tmp_path, capsys):
    path = write_values(tmp_path / "neg.csv", np.linspace(-5, 5, 40))
    assert main(["select", "-i", path, "--families", "gamma,weibull"]) == 3


def test_bench_quick_rows(tmp_path, capsys):
    cfg = tmp_path / "bench.json"
    cfg.write_text(json.dumps({"models": ["GEV2", "LGN"], "replicates": 2, "test_points": 50}))
    out, summary = tmp_path / "rows.csv", tmp_path / "summary.json"
    assert main(["bench", "--quick", "--config", str(cfg), "-o", str(out), "--summary", str(summary),
                 "--seed", "3"]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    cells = {(r["model"], r["n"]) for r in rows}
    assert cells == {("GEV2", "100"), ("GEV2", "500"), ("LGN", "100"), ("LGN", "500")}
    assert len(json.loads(summary.read_text())["cells"]) == 4


def test_bench_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bench.json"
    cfg.write_text(json.dumps({"replicas": 2}))
    assert main(["bench", "--config", str(cfg)]) == 2


def test_config_file_flags_win(tmp_path, gamma_csv, capsys):
    cfg = tmp_path / "fit.json"
    cfg.write_text(json.dumps({"kernel": "uniform", "bandwidth": "2.0"}))
    assert main(["fit", "-i", gamma_csv, "--config", str(cfg), "--bandwidth", "0.25"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["model"]["kernel"] == "uniform" and out["model"]["h"] == 0.25
    cfg.write_text(json.dumps({"colour": "red"}))
    assert main(["fit", "-i", gamma_csv, "--config", str(cfg)]) == 2


def test_aggregate_and_stats(tmp_path, capsys):
    src = tmp_path / "hourly.csv"
    july = [f"2020-07-01T{h:02d}:00,9.0" for h in range(3)]  # removed by the wet-period filter
    october = [f"2020-10-01T{h:02d}:00,0.5" for h in range(24)]
    src.write_text("\n".join(["timestamp,value_mm", *july, *october]) + "\n")
    out = tmp_path / "daily.csv"
    assert main(["aggregate", "-i", str(src), "--window", "daily", "-o", str(out), "--with-coverage"]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [(r["timestamp"], float(r["value_mm"]), float(r["coverage"])) for r in rows] == [
        ("2020-10-01T00:00:00", 12.0, 1.0)]
    assert main(["aggregate", "-i", str(src)]) == 2
    vals = write_values(tmp_path / "v.csv", [0.0, 1.0, 2.0, 3.0])
    assert main(["stats", "-i", vals, "--drop-zeros", "--format", "json"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["n"] == 3 and stats["n_zeros_removed"] == 1 and stats["mean"] == 2.0


def test_usage_errors(capsys):
    assert main(["fit", "--no-such-flag"]) == 2
    assert main([]) == 2
    assert main(["fit", "--kernel", "cosine"]) == 2


def test_version(capsys):
    assert main(["--version"]) == 0
    assert capsys.readouterr().out.startswith(f"kcde {__version__} (build ")


def test_write_atomic(tmp_path, capsys):
    target = tmp_path / "nested" / "out.txt"
    write_atomic(target, "hello\n")
    assert target.read_text() == "hello\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]
    write_atomic("-", "to stdout\n")
    assert capsys.readouterr().out == "to stdout\n"
