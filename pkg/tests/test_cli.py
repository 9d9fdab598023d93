import csv
import io
import json

import pytest

from abundanza.cli import main


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_ca_list(capsys):
    assert main(["ca", "list", "--count", "14"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 14
    assert rows[-1]["n"] == "367567200"
    assert rows[-1]["quotient"] == "17"
    assert rows[0]["t_midpoint"] == ""


def test_ca_list_json(capsys):
    assert main(["ca", "list", "--count", "2", "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload[0]["n"] == "2"
    assert payload[0]["factorization"] == [[2, 1]]
    assert payload[1]["index"] == "2"


def test_ca_diagnostics(capsys):
    assert main(["ca", "diagnostics", "--count", "5"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [row["index"] for row in rows] == ["2", "3", "4", "5"]


def test_ca_envelope(capsys):
    assert main(["ca", "envelope", "--hi", "2000", "--threads", "1"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [row["n"] for row in rows if row["kind"] == "ca"] == ["2", "6", "12", "60", "120", "360"]


def test_ha_compute(capsys):
    assert main(["ha", "compute", "--lo", "2", "--hi", "120", "--s", "1", "--threads", "1"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [row["n"] for row in rows] == ["2", "6", "12", "60", "120"]
    assert rows[0]["slope_sign"] == "" and rows[1]["slope_sign"] == "negative"


def test_ha_compute_with_figure(tmp_path, capsys):
    figure = tmp_path / "figure.csv"
    args = ["ha", "compute", "--lo", "2", "--hi", "60", "--s", "1", "--threads", "1"]
    assert main(args + ["--figure", str(figure)]) == 0
    assert len(_rows(figure.read_text())) == 59
    assert main(args + ["--figure"]) == 0
    table, points = capsys.readouterr().out.split("\n\n")
    assert len(_rows(points)) == 59


def test_ha_compute_bad_weight():
    assert main(["ha", "compute", "--lo", "2", "--hi", "60", "--s", "one"]) == 2


def test_envelope_command(points_csv, capsys):
    path = points_csv("x,y_midpoint,y_radius\n" + "".join(f"{x},{x * x},0\n" for x in range(-3, 4)))
    assert main(["envelope", "--input", str(path)]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [row["index"] for row in rows] == [str(i) for i in range(7)]


def test_envelope_command_with_two_column_header(points_csv, capsys):
    path = points_csv("x,y_midpoint\n" + "".join(f"{x},{x * x}\n" for x in range(-3, 4)))
    assert main(["envelope", "--input", str(path)]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [row["index"] for row in rows] == [str(i) for i in range(7)]


def test_envelope_malformed_input(points_csv):
    path = points_csv("x,y_midpoint,y_radius\n0,1,0\n1,nope,0\n")
    assert main(["envelope", "--input", str(path)]) == 2


def test_envelope_missing_file(tmp_path):
    assert main(["envelope", "--input", str(tmp_path / "absent.csv")]) == 2


def test_sa_list(capsys):
    assert main(["sa", "list", "--limit", "60"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [row["n"] for row in rows] == ["1", "2", "4", "6", "12", "24", "36", "48", "60"]
    assert rows[-1]["sigma"] == "168"


def test_sa_list_over_budget():
    assert main(["sa", "list", "--limit", str(10**10)]) == 4


def test_constants(capsys):
    assert main(["constants", "--precision", "256"]) == 0
    rows = {row["name"]: row for row in _rows(capsys.readouterr().out)}
    assert set(rows) == {"euler_gamma", "exp_gamma", "c1", "c2"}
    assert rows["euler_gamma"]["midpoint"].startswith("0.5772156649")
    assert rows["exp_gamma"]["precision"] == "256"


def test_verify_robin(tmp_path, capsys):
    records = tmp_path / "records.csv"
    frontier = tmp_path / "robin.frontier"
    argv = ["verify", "robin", "--lo", "3", "--hi", "5040", "--records", str(records), "--frontier", str(frontier)]
    assert main(argv) == 0
    out = _rows(capsys.readouterr().out)
    assert "5040" in {row["n"] for row in out}
    assert frontier.read_text() == "last_certified=5040\n"
    assert len(_rows(records.read_text())) == len(out)


def test_verify_domain_error():
    assert main(["verify", "sandwich", "--lo", "3", "--hi", "100"]) == 2


def test_output_file_and_config(tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text("format: json\n")
    output = tmp_path / "out.json"
    assert main(["sa", "list", "--limit", "12", "--config", str(config), "--output", str(output)]) == 0
    assert [row["n"] for row in json.loads(output.read_text())] == ["1", "2", "4", "6", "12"]


def test_bad_config(tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text("precision: 8\n")
    assert main(["constants", "--config", str(config)]) == 2


@pytest.mark.parametrize("argv", [[], ["ca"], ["sa"]])
def test_missing_command(argv, capsys):
    assert main(argv) == 2
    assert "usage" in capsys.readouterr().err
