import csv
import io
import json
import math
import subprocess
import sys
from fractions import Fraction as F

import pytest

from clickstat.cli import main
from clickstat.retrodict import retrodict_poisson_ideal


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_pmf_single_detector(capsys):
    rec = run_json(capsys, "pmf", "--detectors", "1", "--eta", "1", "--epsilon", "0", "--photons", "1")
    assert rec["values"] == {"0": 0.0, "1": 1.0}
    assert rec["version"] == "clickstat-output/1"
    assert rec["command"] == "pmf" and rec["backend"] == "float"


def test_pmf_exact(capsys):
    rec = run_json(capsys, "pmf", "--detectors", "3", "--eta", "1", "--epsilon", "0", "--photons", "3", "--exact")
    assert rec["values"]["2"] == "2/3"
    assert rec["backend"] == "exact"
    assert sum(F(v) for v in rec["values"].values()) == 1


def test_pmf_exact_decimal_inputs_are_exact(capsys):
    rec = run_json(capsys, "pmf", "--detectors", "4", "--eta", "0.6", "--epsilon", "0.01", "--photons", "5", "--exact")
    assert rec["parameters"]["eta"] == "3/5"
    assert sum(F(v) for v in rec["values"].values()) == 1


def test_pmf_float_normalized(capsys):
    rec = run_json(capsys, "pmf", "--detectors", "4", "--eta", "0.6", "--epsilon", "5e-6", "--photons", "2")
    assert math.fsum(rec["values"].values()) == pytest.approx(1, abs=1e-12)


def test_dark_rate_flag(capsys):
    rec = run_json(capsys, "pmf", "--detectors", "4", "--eta", "0.6", "--dark-rate", "500", "--window", "1e-8", "--photons", "0")
    assert rec["parameters"]["epsilon"] == pytest.approx(4.9999875e-6, rel=1e-9)


@pytest.mark.parametrize(
    "argv",
    [
        ["pmf", "--detectors", "0", "--photons", "1"],
        ["pmf", "--detectors", "2", "--eta", "1.5", "--photons", "1"],
        ["pmf", "--detectors", "2", "--epsilon", "abc", "--photons", "1"],
        ["pmf", "--detectors", "2", "--photons", "-1"],
        ["pmf", "--detectors", "2"],
        ["pmf", "--detectors", "2", "--photons", "1", "--epsilon", "0", "--dark-rate", "5"],
        ["bogus"],
        ["retrodict", "--detectors", "2", "--clicks", "3", "--prior", "thermal:mu=1"],
        ["retrodict", "--detectors", "2", "--clicks", "1", "--prior", "gauss:mu=1"],
        ["simulate", "--detectors", "2", "--photons", "1", "--trials", "0"],
        ["simulate", "--detectors", "2", "--photons", "1", "--trials", "10", "--threads", "0"],
        ["noon", "--photons-per-port", "3", "--detectors", "2", "--clicks", "1"],
        ["noon", "--photons-per-port", "3"],
        ["noon", "--photons-per-port", "3", "--prior-only", "--leak", "2"],
        ["squeezed", "--detectors", "2", "--clicks", "1"],
        ["squeezed", "--detectors", "2", "--clicks", "1", "--sweep", "1:0:0.5"],
    ],
)
def test_argument_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    payload = json.loads(err)
    assert payload["error"] == "argument" and payload["message"]


def test_retrodict_zero_clicks(capsys):
    rec = run_json(capsys, "retrodict", "--detectors", "3", "--clicks", "0", "--prior", "thermal:mu=2")
    assert rec["values"] == {"0": 1.0}
    assert rec["summary"]["mode"] == 0


def test_retrodict_thermal_geometric(capsys):
    rec = run_json(
        capsys, "retrodict", "--prior", "thermal:mu=1", "--detectors", "1", "--eta", "1", "--epsilon", "0",
        "--clicks", "1", "--exact",
    )
    values = rec["values"]
    n_max = rec["n_max"]
    total = sum(F(1, 2**n) for n in range(1, n_max + 1))
    for n in range(1, n_max + 1):
        assert F(values[str(n)]) == F(1, 2**n) / total
    floats = run_json(capsys, "retrodict", "--prior", "thermal:mu=1", "--detectors", "1", "--clicks", "1")
    for n in range(1, 30):
        assert floats["values"][str(n)] == pytest.approx(2.0**-n, rel=1e-9)


def test_retrodict_poisson_matches_closed_form(capsys):
    rec = run_json(capsys, "retrodict", "--prior", "poisson:mu=4", "--detectors", "4", "--clicks", "1", "--eta", "1", "--epsilon", "0")
    assert rec["values"]["1"] == pytest.approx(1 / (math.e - 1), rel=1e-12)
    for n, p in rec["values"].items():
        assert p == pytest.approx(retrodict_poisson_ideal(4, 4.0, 1, int(n)), abs=1e-12)
    assert rec["summary"]["mode"] == 1


def test_retrodict_impossible_exit_3(capsys):
    code, out, err = run(capsys, "retrodict", "--detectors", "3", "--clicks", "2", "--prior", "custom:1,1")
    assert code == 3 and out == ""
    assert json.loads(err)["error"] == "impossible_observation"


def test_simulate_output(capsys):
    argv = ["simulate", "--detectors", "2", "--photons", "2", "--trials", "20000", "--seed", "3"]
    rec = run_json(capsys, *argv)
    assert sum(rec["counts"].values()) == 20000
    assert rec["counts"]["0"] == 0
    assert set(rec["stderr"]) == {"0", "1", "2"}
    assert rec["backend"] == "float"


def test_simulate_byte_identical_across_runs_and_threads(capsys):
    argv = ["simulate", "--detectors", "8", "--eta", "0.6", "--epsilon", "0.01", "--photons", "5", "--trials", "200000", "--seed", "42"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    _, threaded, _ = run(capsys, *argv, "--threads", "4")
    assert first == second == threaded


def test_noon_prior_only(capsys):
    rec = run_json(capsys, "noon", "--photons-per-port", "3", "--prior-only", "--exact")
    matrix = {(r["n1"], r["n2"]): F(r["probability"]) for r in rec["values"]}
    assert sum(matrix.values()) == 1
    assert all(matrix[i, j] == matrix[j, i] for i, j in matrix)


def test_noon_single_detector_tie(capsys):
    rec = run_json(
        capsys, "noon", "--photons-per-port", "3", "--detectors", "1", "--eta", "1", "--epsilon", "0",
        "--clicks", "1,1", "--exact",
    )
    matrix = {(r["n1"], r["n2"]): r["probability"] for r in rec["values"]}
    assert matrix[1, 1] == matrix[1, 2] == matrix[2, 1] == "8/45"
    assert rec["mode"] == [1, 1]


def test_noon_multiplexed_mode(capsys):
    rec = run_json(
        capsys, "noon", "--photons-per-port", "3", "--detectors", "4", "--eta", "0.6",
        "--dark-rate", "500", "--window", "1e-8", "--clicks", "1,1",
    )
    assert rec["mode"] == [1, 1]
    assert math.fsum(r["probability"] for r in rec["values"]) == pytest.approx(1, abs=1e-12)


def test_squeezed_vacuum(capsys):
    rec = run_json(capsys, "squeezed", "--gain", "0", "--clicks", "0", "--detectors", "3")
    assert rec["values"] == {"0": 1.0}


def test_squeezed_vacuum_with_click_is_impossible(capsys):
    code, _, err = run(capsys, "squeezed", "--gain", "0", "--clicks", "1", "--detectors", "3")
    assert code == 3 and json.loads(err)["error"] == "impossible_observation"


def test_squeezed_normalized(capsys):
    rec = run_json(capsys, "squeezed", "--gain", "1", "--detectors", "100", "--eta", "0.75", "--epsilon", "0", "--clicks", "1")
    assert math.fsum(rec["values"].values()) == pytest.approx(1, abs=1e-12)


def test_squeezed_sweep_saturates(capsys):
    rec = run_json(
        capsys, "squeezed", "--sweep", "0:6:2", "--detectors", "4", "--eta", "0.6",
        "--dark-rate", "500", "--clicks", "1",
    )
    by_gain = {}
    for row in rec["values"]:
        by_gain.setdefault(row["gain"], {})[row["index"]] = row["probability"]
    assert sorted(by_gain) == [0.0, 2.0, 4.0, 6.0]
    assert rec["impossible_gains"] == []
    low, high = by_gain[4.0], by_gain[6.0]
    for n in set(low) | set(high):
        assert abs(low.get(n, 0) - high.get(n, 0)) < 1e-2


def test_squeezed_sweep_records_impossible_gains(capsys):
    rec = run_json(capsys, "squeezed", "--sweep", "0:1:0.5", "--detectors", "2", "--clicks", "1")
    assert rec["impossible_gains"] == [0.0]
    assert {row["gain"] for row in rec["values"]} == {0.5, 1.0}


def _csv_rows(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.mark.parametrize(
    "argv",
    [
        ["pmf", "--detectors", "4", "--eta", "0.6", "--epsilon", "0.01", "--photons", "3"],
        ["pmf", "--detectors", "4", "--eta", "0.6", "--epsilon", "0.01", "--photons", "3", "--exact"],
        ["retrodict", "--detectors", "3", "--eta", "0.7", "--clicks", "2", "--prior", "poisson:mu=2.5"],
        ["simulate", "--detectors", "3", "--photons", "2", "--trials", "5000", "--seed", "1"],
    ],
)
def test_csv_matches_json_table(capsys, argv):
    rec = run_json(capsys, *argv)
    code, out, _ = run(capsys, *argv, "--format", "csv")
    assert code == 0
    rows = _csv_rows(out)
    has_stderr = "stderr" in rec
    assert rows[0] == ["index", "probability"] + (["stderr"] if has_stderr else [])
    assert len(rows) - 1 == len(rec["values"])
    for row in rows[1:]:
        value = rec["values"][row[0]]
        if isinstance(value, str):
            assert row[1] == value
        else:
            assert float(row[1]) == value
        if has_stderr:
            assert float(row[2]) == rec["stderr"][row[0]]


def test_csv_joint_and_sweep(capsys):
    argv = ["noon", "--photons-per-port", "2", "--detectors", "2", "--eta", "0.75", "--clicks", "1,1"]
    rec = run_json(capsys, *argv)
    _, out, _ = run(capsys, *argv, "--format", "csv")
    rows = _csv_rows(out)
    assert rows[0] == ["n1", "n2", "probability"]
    assert [(int(a), int(b), float(p)) for a, b, p in rows[1:]] == [
        (r["n1"], r["n2"], r["probability"]) for r in rec["values"]
    ]
    argv = ["squeezed", "--sweep", "1:2:0.5", "--detectors", "3", "--clicks", "1"]
    rec = run_json(capsys, *argv)
    _, out, _ = run(capsys, *argv, "--format", "csv")
    rows = _csv_rows(out)
    assert rows[0] == ["gain", "index", "probability"]
    assert [(float(g), int(i), float(p)) for g, i, p in rows[1:]] == [
        (r["gain"], r["index"], r["probability"]) for r in rec["values"]
    ]


def test_repeat_runs_byte_identical(capsys):
    argv = ["retrodict", "--detectors", "16", "--eta", "0.6", "--epsilon", "1e-3", "--clicks", "3", "--prior", "thermal:mu=4"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "clickstat", "pmf", "--detectors", "2", "--photons", "2", "--exact"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert json.loads(proc.stdout)["values"] == {"0": "0", "1": "1/2", "2": "1/2"}
    proc = subprocess.run([sys.executable, "-m", "clickstat", "pmf"], capture_output=True, text=True)
    assert proc.returncode == 2 and json.loads(proc.stderr)["error"] == "argument"
