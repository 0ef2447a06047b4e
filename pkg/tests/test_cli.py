import csv
import io
import json
import math
import subprocess
import sys

import pytest

from huber_minimax import __version__
from huber_minimax.cli import main
from huber_minimax.lfse import breakdown_epsilon, minimax


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# runspec: ")
    spec = json.loads(lines[0][len("# runspec: "):])
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    return spec, rows


def test_classical_csv(capsys):
    code, out, _ = run(capsys, "classical", "--eps", "0,0.05")
    assert code == 0
    spec, rows = parse_csv(out)
    assert spec["command"] == "classical" and spec["version"] == __version__
    assert rows[0]["kappa_star"] == "inf" and float(rows[0]["v_star"]) == 1.0
    assert float(rows[1]["kappa_star"]) == pytest.approx(1.399, abs=1e-3)


def test_minimax_json_nulls(capsys):
    code, out, _ = run(capsys, "minimax", "--m", "2", "--eps", "0.05,0.25", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    ok, bad = doc["rows"]
    assert ok["V_star"] == pytest.approx(minimax(2.0, 0.05).V_star, rel=1e-15)
    assert ok["breakdown"] is False
    assert bad["V_star"] is None and bad["lambda_star"] is None and bad["breakdown"] is True
    assert doc["columns"][0] == "m"


def test_minimax_csv_infinity_and_empty(capsys):
    _, out, _ = run(capsys, "minimax", "--m", "2", "--eps", "0.25")
    row = parse_csv(out)[1][0]
    assert row["V_star"] == "inf" and row["lambda_star"] == "" and row["breakdown"] == "true"


def test_breakdown(capsys):
    _, out, _ = run(capsys, "breakdown", "--m", "2,5")
    rows = parse_csv(out)[1]
    assert float(rows[0]["eps_star"]) == breakdown_epsilon(2.0)
    assert float(rows[1]["eps_star"]) > float(rows[0]["eps_star"])


def test_table1(capsys):
    _, out, _ = run(capsys, "table1")
    rows = parse_csv(out)[1]
    assert [float(r["eps"]) for r in rows][:2] == [0.05, 0.1]
    assert float(rows[0]["V_star"]) == pytest.approx(3.37724, abs=1e-5)
    assert rows[-1]["V_star"] == "inf"


def test_phase(capsys):
    _, out, _ = run(capsys, "phase", "--grid", "5x4", "--curve-points", "7")
    rows = parse_csv(out)[1]
    cells = [r for r in rows if r["kind"] == "cell"]
    curve = [r for r in rows if r["kind"] == "curve"]
    assert len(cells) == 4 * 3 and len(curve) == 7
    for r in cells:
        assert (r["Vstar"] == "inf") == (r["bounded"] == "false")


def test_semaps(capsys):
    _, out, _ = run(capsys, "semaps", "--points", "5", "--mu", "2,10")
    rows = parse_csv(out)[1]
    kinds = {r["curve"] for r in rows}
    assert kinds == {"identity", "lfse", "proper"}
    lf = {r["tau_sq"]: float(r["T"]) for r in rows if r["curve"] == "lfse"}
    for r in rows:
        if r["curve"] == "proper":
            assert float(r["T"]) <= lf[r["tau_sq"]] * (1 + 1e-12)


def test_semaps_breakdown_needs_kappa(capsys):
    code, _, err = run(capsys, "semaps", "--m", "2", "--eps", "0.25")
    assert code == 2 and "--kappa" in err
    code, out, _ = run(capsys, "semaps", "--m", "2", "--eps", "0.25", "--kappa", "0.5",
                       "--points", "3", "--mu", "20")
    assert code == 0


def test_lambda_mono(capsys):
    _, out, _ = run(capsys, "lambda-mono", "--m", "2", "--eps", "0.05", "--points", "20")
    rows = parse_csv(out)[1]
    assert len(rows) == 20 and all(r["increasing"] == "true" for r in rows)


def test_amp_run_and_data_round_trip(capsys, tmp_path):
    path = tmp_path / "d.csv"
    code, out, _ = run(capsys, "amp-run", "--n", "120", "--p", "30", "--save-data", str(path))
    assert code == 0
    a = parse_csv(out)[1]
    assert [r["solver"] for r in a] == ["amp", "irls"]
    assert float(a[0]["objective"]) == pytest.approx(float(a[1]["objective"]), rel=1e-10)
    code, out, _ = run(capsys, "amp-run", "--data", str(path))
    b = parse_csv(out)[1]
    assert b[1]["objective"] == a[1]["objective"] and b[1]["per_coordinate_mse"] == ""


def test_monte_carlo_and_table2(capsys):
    _, out, _ = run(capsys, "monte-carlo", "--n", "60", "--p", "20", "--reps", "3")
    r = parse_csv(out)[1][0]
    assert float(r["se_estimate"]) == pytest.approx(math.sqrt(float(r["per_coordinate_mse"])))
    _, out, _ = run(capsys, "table2", "--n", "60", "--p", "20", "--reps", "2", "--eps", "0.05",
                    "--mu", "2,100")
    rows = parse_csv(out)[1]
    assert len(rows) == 2 and all(float(r["se_state_evolution"]) > 1 for r in rows)


def test_out_file_and_repeatability(capsys, tmp_path):
    f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
    for f in (f1, f2):
        assert main(["monte-carlo", "--n", "50", "--p", "10", "--reps", "2", "--out", str(f)]) == 0
    assert f1.read_bytes() == f2.read_bytes()
    assert capsys.readouterr().out == ""


@pytest.mark.parametrize("argv", [
    ["minimax", "--m", "1"],
    ["minimax", "--eps", "1.2"],
    ["monte-carlo", "--n", "10", "--p", "10"],
    ["amp-run", "--eps", "0.1", "--mu", "-3"],
    ["table2", "--n", "40", "--p", "20", "--eps", "0.3", "--reps", "1"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "invalid arguments" in err


def test_bad_flag_value_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["phase", "--grid", "bogus"])
    assert exc.value.code == 2


def test_numerical_failure_exit_3(capsys, tmp_path):
    path = tmp_path / "nan.csv"
    path.write_text("y,x_1\n" + "\n".join(f"{'nan' if i == 0 else i},{i % 3 + 1}" for i in range(8)))
    code, _, err = run(capsys, "amp-run", "--data", str(path), "--lambda", "1", "--solver", "amp")
    assert code == 3 and "numerical failure" in err


def test_entry_point_module():
    res = subprocess.run([sys.executable, "-m", "huber_minimax", "breakdown", "--format", "json"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["rows"][0]["eps_star"] == pytest.approx(0.19284483309)
