import json
import subprocess
import sys

import numpy as np
import pytest

from rminar.cli import main, read_series_csv, write_series_csv
from rminar.errors import ParseError

ADDITIVE = {"version": 1, "class": "additive",
            "coefficients": [{"kind": "Poisson", "phi": 0.3}, {"kind": "Poisson", "phi": 0.2}],
            "innovation": {"kind": "Poisson", "phi": 2.0}}
MULT = {"version": 1, "class": "multiplicative", "coefficients": [{"kind": "Poisson", "phi": 0.4}],
        "innovation": {"kind": "Poisson", "phi": 1.0}, "intercept": {"kind": "Poisson", "phi": 1.0}}


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def no_nan(text):
    assert "NaN" not in text and "Infinity" not in text
    return json.loads(text)


def test_read_series_examples(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("y\n1\n2\n3")
    s = read_series_csv(f)
    assert s.values.tolist() == [1, 2, 3] and s.domain == "N0"
    f.write_text("-3\n4\n")
    assert read_series_csv(f).domain == "Z"
    f.write_text("1.5\n")
    with pytest.raises(ParseError) as info:
        read_series_csv(f)
    assert info.value.line == 1


def test_round_trip(tmp_path):
    f, g = tmp_path / "a.csv", tmp_path / "b.csv"
    f.write_text("y\r\n4\r\n0\r\n-2\r\n")
    write_series_csv(read_series_csv(f), g)
    assert g.read_text().splitlines() == f.read_text().splitlines()


@pytest.fixture
def series_file(tmp_path):
    model = write_json(tmp_path / "m.json", ADDITIVE)
    out = tmp_path / "s.csv"
    assert main(["simulate", "--model", model, "--n", "1000", "--seed", "42", "--out", str(out)]) == 0
    return out


def test_simulate_writes_n_integers(series_file):
    lines = series_file.read_text().splitlines()
    assert lines[0] == "y" and len(lines) == 1001
    assert all(int(x) >= 0 for x in lines[1:])


def test_fit_and_diagnose(series_file, tmp_path, capsys):
    assert main(["fit", "--series", str(series_file), "--order", "2"]) == 0
    doc = no_nan(capsys.readouterr().out)
    assert len(doc["theta2"]) == 3 and "poisson" in doc["dispersion_z"]
    lags = tmp_path / "lags.csv"
    assert main(["diagnose", "--series", str(series_file), "--order", "2", "--p-max", "3",
                 "--lags-csv", str(lags)]) == 0
    doc = no_nan(capsys.readouterr().out)
    assert len(doc["order_selection"]) == 3
    assert lags.read_text().splitlines()[0] == "lag,acf,pacf"
    assert main(["forecast-eval", "--series", str(series_file), "--order", "2",
                 "--train-sizes", "500,900"]) == 0
    doc = no_nan(capsys.readouterr().out)
    assert [r["n_c"] for r in doc["rows"]] == [500, 900]


def test_fit_links(series_file, capsys):
    for link in ("poisson", "geometric", "proportional:0.5"):
        assert main(["fit", "--series", str(series_file), "--order", "2", "--variance-link", link]) == 0
        no_nan(capsys.readouterr().out)
    assert main(["fit", "--series", str(series_file), "--variance-link", "proportional"]) == 2


def test_analyze(tmp_path, capsys):
    for doc in (ADDITIVE, MULT):
        model = write_json(tmp_path / "m.json", doc)
        assert main(["analyze", "--model", model, "--seed", "1", "--reps", "5", "--horizon", "200"]) == 0
        out = no_nan(capsys.readouterr().out)
        assert "stationarity" in out and "lyapunov" in out
    assert out["tail"]["mode"] == "product_with_innovation"


def test_mc_study(tmp_path, capsys):
    cfg = {"version": 1, "model": {k: v for k, v in ADDITIVE.items() if k != "version"},
           "n": 300, "reps": 6, "fit": {"cascade_tol": 1e-6}}
    path = write_json(tmp_path / "c.json", cfg)
    assert main(["mc-study", "--config", path, "--seed", "3", "--workers", "2"]) == 0
    doc = no_nan(capsys.readouterr().out)
    assert doc["successes"] + doc["failures"] == 6
    cfg["bogus"] = 1
    assert main(["mc-study", "--config", write_json(tmp_path / "c.json", cfg), "--seed", "3"]) == 2


def test_exit_codes(tmp_path, capsys):
    assert main(["fit", "--series", str(tmp_path / "missing.csv")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("1.5\n")
    assert main(["fit", "--series", str(bad)]) == 2
    const = tmp_path / "const.csv"
    const.write_text("y\n" + "3\n" * 50)
    assert main(["fit", "--series", str(const)]) == 3
    err = capsys.readouterr().err
    assert "error code=3 type=SingularMatrix" in err
    neg = tmp_path / "neg.csv"
    neg.write_text("-1\n2\n" * 30)
    assert main(["fit", "--series", str(neg)]) == 2
    model = write_json(tmp_path / "m.json", {**ADDITIVE, "extra": 1})
    assert main(["simulate", "--model", model, "--n", "10", "--seed", "1"]) == 2
    model = write_json(tmp_path / "m.json", {**ADDITIVE, "version": 2})
    assert main(["simulate", "--model", model, "--n", "10", "--seed", "1"]) == 2
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--model", model, "--n", "10"])
    assert info.value.code == 2


def test_console_entry_point(tmp_path):
    model = write_json(tmp_path / "m.json", ADDITIVE)
    r = subprocess.run([sys.executable, "-m", "rminar", "simulate", "--model", model, "--n", "5", "--seed", "0"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and len(r.stdout.splitlines()) == 6
