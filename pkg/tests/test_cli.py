import csv
import io
import json

import pytest

from higher_rank_lab.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_x0_even_case(capsys):
    code, out, _ = run(["x0", "--d", "4"], capsys)
    data = json.loads(out)
    assert code == 0
    assert data["schema"] == "rank-lab/1"
    assert data["command"] == "x0"
    assert data["result"]["x0"] == [1.0, 1.0, -1.0, -1.0]
    assert data["result"]["rho_x0"] == 4.0


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["x0", "--dim", "4"])
    assert exc.value.code == 2


def test_abbreviated_flag_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["volume", "--poi", "8"])
    assert exc.value.code == 2


def test_numeric_failure_json_on_stderr(capsys):
    code, out, err = run(["phi", "--lambda", "1j,0,0", "--X", "1,0,-1"], capsys)
    assert code == 1
    assert out == ""
    assert json.loads(err)["error"] == "invalid-argument"


def test_dimension_out_of_range(capsys):
    code, _, err = run(["x0", "--d", "9"], capsys)
    assert code == 1
    assert json.loads(err)["error"] == "invalid-dimension"


def test_brion_csv(capsys):
    code, out, _ = run(["brion", "--d", "3", "--t", "1,2", "--format", "csv"], capsys)
    assert code == 0
    assert "\r\n" in out
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["t", "volume", "alternating_sum"]
    assert float(rows[1][1]) == pytest.approx(0.6714343090548007, rel=1e-12)


def test_intersect_csv_has_slope(capsys):
    code, out, _ = run(["intersect", "--d", "3", "--t", "3", "--ray", "1,0,-1", "--steps", "6",
                        "--n", "20000", "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["rho_Y", "ratio", "stderr", "hits"]
    assert len(rows) == 8
    assert rows[-1][0] == "slope" and float(rows[-1][1]) < 0


def test_intersect_rejects_nonzero_trace(capsys):
    code, _, _ = run(["intersect", "--ray", "1,0,0"], capsys)
    assert code == 1


@pytest.mark.parametrize("argv", [
    ["sample", "--d", "3", "--t", "1.5", "--n", "50", "--seed", "3"],
    ["support", "--d", "3", "--t", "1", "--n", "1000"],
    ["cartan", "--d", "4", "--t", "2"],
])
def test_byte_identical_reports(argv, capsys):
    _, first, _ = run(argv, capsys)
    _, second, _ = run(argv, capsys)
    assert first == second


def test_thread_count_does_not_change_output(capsys, monkeypatch):
    argv = ["volume", "--d", "3", "--t", "1,2,3"]
    monkeypatch.setenv("RANKLAB_THREADS", "1")
    _, single, _ = run(argv, capsys)
    monkeypatch.setenv("RANKLAB_THREADS", "3")
    _, multi, _ = run(argv, capsys)
    assert single == multi


def test_seed_changes_samples(capsys):
    _, a, _ = run(["sample", "--n", "5", "--seed", "1"], capsys)
    _, b, _ = run(["sample", "--n", "5", "--seed", "2"], capsys)
    assert a != b


def test_out_file(tmp_path, capsys):
    path = tmp_path / "cone.json"
    code, out, _ = run(["cone", "--d", "5", "--out", str(path)], capsys)
    assert code == 0 and out == ""
    data = json.loads(path.read_text())
    assert data["result"]["rho_coefficients"] == [2, 1, 1, 2]


def test_cartan_explicit_matrix(capsys):
    code, out, _ = run(["cartan", "--matrix", "2,0,0;0,1,0;0,0,0.5"], capsys)
    res = json.loads(out)["result"]
    assert code == 0
    assert res["X"][0] == pytest.approx(0.6931471805599453)
    assert res["cartan_reconstruction_error"] < 1e-12


def test_complex_lambda_tokens(capsys):
    code, out, _ = run(["jcone", "--lambda", "0.2+0.7i,0.1-1.1i,-0.3+0.4i"], capsys)
    res = json.loads(out)["result"]
    assert code == 0
    assert res["gap"] < 1e-10


def test_cfun_and_mainterm(capsys):
    _, out, _ = run(["cfun", "--lambda", "1j,0,-1j"], capsys)
    assert json.loads(out)["result"]["plancherel_density"] > 0
    _, out, _ = run(["mainterm", "--lambda", "1j,0,-1j", "--X", "2,0,-2"], capsys)
    assert json.loads(out)["result"]["cosets"] == 6


def test_phi_csv(capsys):
    code, out, _ = run(["phi", "--lambda", "1j,0,-1j", "--X", "0,0,0", "--X", "1,0,-1", "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert float(rows[0]["value_re"]) == 1.0
    assert 0 < float(rows[1]["value_re"]) < 1


def test_shrink_angles_i2(capsys):
    _, out, _ = run(["shrink", "--d", "3", "--eta", "0.1"], capsys)
    assert json.loads(out)["result"]["delta"] == pytest.approx(0.1)
    _, out, _ = run(["appendixB", "--d", "3"], capsys)
    assert json.loads(out)["result"]["C1"] == pytest.approx(1.0)
    _, out, _ = run(["i2", "--d", "3", "--tau", "5"], capsys)
    assert json.loads(out)["result"]["rows"][0][3] == pytest.approx(20.0, abs=1e-3)


def test_average_reports_tau1(capsys):
    _, out, _ = run(["average", "--lambda", "1j,0,-1j", "--tau", "20"], capsys)
    res = json.loads(out)["result"]
    assert res["tau1"] == pytest.approx(6.283185307179586)
    assert res["phase_collision"] is True


def test_figure_written(tmp_path, capsys):
    pytest.importorskip("matplotlib")
    fig = tmp_path / "vol.png"
    code, _, _ = run(["volume", "--d", "3", "--t", "1,2", "--figure", str(fig)], capsys)
    assert code == 0 and fig.stat().st_size > 0


def test_verify_subset(capsys):
    code, out, err = run(["verify", "--only", "1,13"], capsys)
    assert code == 0
    assert "criterion  1 PASS" in err
    assert "2/2 criteria passed" in err
    assert json.loads(out)["result"]["all_passed"] is True


def test_verify_failure_exit_code(capsys):
    code, out, err = run(["verify", "--only", "7"], capsys)
    assert code == 1
    assert "criterion  7 FAIL" in err
