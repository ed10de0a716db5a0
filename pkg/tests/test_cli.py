import csv
import json
import math

import pytest

from steerdual.cli import main
from steerdual.gaussian import tmsv
from steerdual.io import gaussian_state_to_json


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_table1_closed_form_and_sidecar(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["table1", "--n-int", "2", "--reproducible", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0]["n_int"] == "2"
    assert float(rows[0]["eta_c"]) == pytest.approx(2 * math.pi / (4 + math.pi))
    assert rows[0]["wall_time_s"] == ""
    side = json.loads((tmp_path / "t.csv.json").read_text())
    assert side["rows"][0]["method"] == "closed-form"


def test_reproducible_output_is_identical(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"{k}.csv"
        main(["table1", "--n-int", "6", "--tol", "1e-2", "--reproducible", "--out", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_timestamp_line_without_reproducible(capsys):
    assert main(["table1", "--n-int", "2"]) == 0
    assert capsys.readouterr().out.startswith("# generated")


def test_usage_errors(capsys):
    assert main(["table1", "--n-int"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["table1", "--n-int", "3"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main(["bogus"])


def test_fig1_marks_missing_bound(tmp_path):
    out = tmp_path / "f.csv"
    assert main(["fig1", "--n-int", "2", "--theta-steps", "3", "--reproducible", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0]["note"] == "no bound" and rows[0]["eta_c"] == ""
    assert rows[-1]["n_int"] == "lower" and float(rows[-1]["eta_c"]) == pytest.approx(2 / 3)


def test_region(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["region", "--u-min", "0.1", "--u-max", "60", "--u-steps", "2", "--t-max", "10",
                 "--t-steps", "2001", "--reproducible", "--out", str(out)]) == 0
    side = json.loads((tmp_path / "r.csv.json").read_text())
    assert [w["windows"] for w in side["windows"]] == [1, 2]
    assert len(_rows(out)) == 2 * 2001


def test_gauss_commands(tmp_path, capsys):
    f = tmp_path / "s.json"
    f.write_text(json.dumps(gaussian_state_to_json(tmsv(0.5))))
    assert main(["gauss", "witness", str(f)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["steerable"] and res["witness"]["margin"] > 0
    f.write_text(json.dumps(gaussian_state_to_json(tmsv(0.2, thermal_b=2.0))))
    assert main(["gauss", "lhs", str(f)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert not res["steerable"] and res["lhs"]["min_eigenvalue"] >= -1e-9
    assert main(["gauss", "random", "--seed", "4"]) == 0
    assert "modes_a" in json.loads(capsys.readouterr().out)


def test_gauss_malformed_input(tmp_path, capsys):
    f = tmp_path / "bad.json"
    f.write_text('{"modes_a": 1, "V": [[1, 0], [0')
    assert main(["gauss", "steer", str(f)]) == 2
    assert "bad.json:1:" in capsys.readouterr().err
    f.write_text('{"modes_a": 1, "modes_b": 1, "V": [[0.1, 0], [0, 0.1]]}')
    assert main(["gauss", "steer", str(f)]) == 2


def test_noon_command(capsys):
    assert main(["noon", "--eta", "0.9", "--n-int", "4"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["ir"] == pytest.approx(res["ir_from_state"], abs=1e-7)
    assert res["ir"] > 0
