import csv
import json
import math

import numpy as np
import pytest

from qpsk_kgr import cli
from qpsk_kgr.receivers import SingularGramError

PLATEAU = (0.0, math.pi / 2, math.pi, math.pi / 2)


def run(capsys, *argv, environ=None):
    code = cli.main(list(argv), environ=environ or {})
    out, err = capsys.readouterr()
    return code, out, err


def resolve(argv, environ=None):
    return cli.resolve_config(cli.build_parser().parse_args(argv), environ or {})


def test_defaults_match_fixed_parameters():
    cfg = resolve(["sweep"])
    assert cfg.beta == 0.95 and cfg.kappa == 0.2
    assert cfg.distances[0] == 0 and cfg.distances[-1] == 150 and len(cfg.distances) == 76


def test_precedence_file_env_flags(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("beta = 0.9\nkappa = 0.25  # dB/km\nreceivers = pgm, ff:8\nseed = 3\n")
    cfg = resolve(["sweep", "--config", str(conf)])
    assert (cfg.beta, cfg.kappa, cfg.receiver_tags, cfg.seed) == (0.9, 0.25, ("pgm", "ff:8"), 3)
    cfg = resolve(["sweep", "--config", str(conf)], {"QPSK_KGR_BETA": "0.8", "QPSK_KGR_SEED": "4"})
    assert (cfg.beta, cfg.seed) == (0.8, 4)
    cfg = resolve(["sweep", "--config", str(conf), "--beta", "0.7", "--copies", "4"], {"QPSK_KGR_BETA": "0.8"})
    assert cfg.beta == 0.7 and cfg.receiver_tags == ("pgm", "ff:8", "ff:4")
    cfg = resolve(["sweep"], {"QPSK_KGR_CONFIG": str(conf)})
    assert cfg.beta == 0.9


@pytest.mark.parametrize("argv, environ", [
    (["sweep", "--beta", "1.5"], {}),
    (["sweep", "--receiver", "homodyne"], {}),
    (["sweep", "--d-min", "10", "--d-max", "5"], {}),
    (["sweep"], {"QPSK_KGR_KAPPA": "fast"}),
    (["sweep"], {"QPSK_KGR_COLOUR": "red"}),
    (["sweep", "--nonsense"], {}),
    (["wigner"], {}),
    (["point", "het", "--distance", "-1"], {}),
])
def test_config_errors_exit_1(capsys, argv, environ):
    code, _, err = run(capsys, *argv, environ=environ)
    assert code == 1 and "config error" in err


def test_missing_config_file_exit_1(capsys, tmp_path):
    code, _, _ = run(capsys, "sweep", "--config", str(tmp_path / "nope.cfg"))
    assert code == 1


def test_numerical_failure_exit_2(capsys, tmp_path, monkeypatch):
    import qpsk_kgr.optimizer as opt

    real = opt.optimize_receiver

    def flaky(tag, T, beta, budget, d):
        if tag == "pgm" and d == 2:
            raise SingularGramError("synthetic")
        return real(tag, T, beta, budget, d)

    monkeypatch.setattr(opt, "optimize_receiver", flaky)
    out = tmp_path / "s.csv"
    code, _, err = run(capsys, "sweep", "--d-max", "2", "--d-step", "2", "--receiver", "pgm",
                       "--budget", "fast", "--out", str(out))
    assert code == 2 and "failed at d=2" in err
    rows = list(csv.DictReader(out.open()))
    assert [r["K"] for r in rows if r["receiver"] == "pgm"][1] == "nan"


def test_sweep_csv_schema(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--d-max", "4", "--d-step", "2", "--receiver", "kor",
                     "--budget", "fast", "--seed", "11", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(cli.ROW_FIELDS)
    rows = list(csv.DictReader(lines))
    assert [(r["d"], r["receiver"]) for r in rows] == [
        ("0", "kor"), ("0", "het"), ("2", "kor"), ("2", "het"), ("4", "kor"), ("4", "het")]
    for r in rows:
        for key in ("K", "I_AB", "chi_BE", "alpha2_opt"):
            mantissa = r[key].split("e")[0].replace("-", "").replace(".", "").lstrip("0")
            assert len(mantissa) <= 12
    meta = json.loads((tmp_path / "s.csv.meta.json").read_text())
    assert meta["seed"] == 11 and meta["failures"] == [] and "out" not in meta["config"]


def test_sweep_json_mirrors_fields(capsys):
    code, out, _ = run(capsys, "sweep", "--d-max", "0", "--receiver", "het", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and list(doc["rows"][0]) == list(cli.ROW_FIELDS)
    row = doc["rows"][0]
    # single distance, unit transmissivity
    assert row["chi_BE"] == pytest.approx(0.0, abs=1e-12)
    assert row["K"] == pytest.approx(0.95 * row["I_AB"], rel=1e-11)


def test_sweep_is_byte_deterministic(capsys, tmp_path):
    args = ["sweep", "--d-max", "30", "--d-step", "15", "--receiver", "kor", "--copies", "8",
            "--budget", "fast", "--seed", "2"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, *args, "--out", str(a))[0] == 0
    assert run(capsys, *args, "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv.meta.json").read_bytes() == (tmp_path / "b.csv.meta.json").read_bytes()


def test_point_records(capsys):
    code, out, _ = run(capsys, "point", "pgm", "--distance", "5")
    assert code == 0 and json.loads(out)["ratio_vs_het"] > 1.42
    code, out, _ = run(capsys, "point", "kor", "--distance", "30")
    assert json.loads(out)["phases_opt"] == pytest.approx(PLATEAU, abs=1e-4)
    code, out, _ = run(capsys, "point", "het", "--distance", "0")
    assert json.loads(out)["chi_BE"] == pytest.approx(0.0, abs=1e-12)


def test_wigner_outputs(capsys, tmp_path):
    out = tmp_path / "w.csv"
    code, _, err = run(capsys, "wigner", "pgm", "--distance", "30", "--alpha2", "1", "--nodes", "121",
                       "--out", str(out))
    assert code == 0 and "min W" in err
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert data.shape == (121 * 121, 3) and data[:, 2].min() < 0
    meta = json.loads((tmp_path / "w.csv.meta.json").read_text())
    assert meta["diagnostics"]["min_value"] < 0

    code, out_json, _ = run(capsys, "wigner", "--vacuum", "--nodes", "61", "--format", "json")
    doc = json.loads(out_json)
    x = np.array([r["x"] for r in doc["rows"]])
    y = np.array([r["y"] for r in doc["rows"]])
    w = np.array([r["W"] for r in doc["rows"]])
    assert np.allclose(w, (2 / np.pi) * np.exp(-(x**2 + y**2) / 2), atol=1e-11)

    code, out_json, _ = run(capsys, "wigner", "kor", "--distance", "100", "--compare", "pgm",
                            "--nodes", "61", "--format", "json")
    cmp = json.loads(out_json)["metadata"]["diagnostics"]["compare"]
    assert set(cmp) == {"state", "max_abs_difference", "closeness", "close"}


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0
    assert out.count("PASS") == 6
