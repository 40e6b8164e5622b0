import csv
import io
import json

import numpy as np
import pytest
from scipy.integrate import trapezoid

from boojum import cli
from boojum.cli import RunConfig, cmd_fit, cmd_predict, cmd_update, main
from boojum.errors import ImproperHyperparametersError, ParseError
from boojum.fileio import read_state

from conftest import SCENARIO_MODES


def write_csv(path, rows, header=True):
    with open(path, "w") as fh:
        if header:
            fh.write(",".join(f"theta_{k + 1}" for k in range(len(rows[0]))) + "\n")
        for r in rows:
            fh.write(",".join(repr(float(v)) for v in r) + "\n")
    return str(path)


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_fit_proper(tmp_path, capsys):
    inp = write_csv(tmp_path / "s1.csv", [(0.75, 0.25), (0.65, 0.35)])
    code, out, _ = run(["fit", "--input", inp], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["nu"] == 2.0
    assert data["convergence"]["proper"]
    np.testing.assert_allclose(data["alpha_map"], SCENARIO_MODES["S1"], rtol=1e-10)


def test_fit_improper_warns(tmp_path, capsys):
    inp = write_csv(tmp_path / "s4.csv", [(0.7, 0.3)])
    code, out, err = run(["fit", "--input", inp], capsys)
    assert code == 0
    data = json.loads(out)
    assert "alpha_map" not in data
    assert not data["convergence"]["condition_c"]
    assert "condition(s) c" in err


def test_fit_malformed_row_names_line(tmp_path, capsys):
    inp = tmp_path / "bad.csv"
    inp.write_text("a,b\n0.2,0.8\n0.5,0.6\n")
    code, _, err = run(["fit", "--input", str(inp)], capsys)
    assert code == cli.EXIT_DOMAIN
    assert "line 3" in err
    inp.write_text("0.2,0.8\n0.5,x\n")
    code, _, err = run(["fit", "--input", str(inp)], capsys)
    assert code == cli.EXIT_PARSE
    assert "line 2" in err


def test_fit_json_input(tmp_path, capsys):
    inp = tmp_path / "obs.json"
    inp.write_text("[[0.3, 0.7], [0.7, 0.3]]")
    code, out, _ = run(["fit", "--input", str(inp)], capsys)
    assert code == 0
    a = json.loads(out)["alpha_map"]
    assert a[0] == a[1]


def test_update_replay_equals_fit(tmp_path):
    rng = np.random.default_rng(1)
    obs = rng.dirichlet([2.0, 3.0, 1.5], size=60)
    state = str(tmp_path / "state.json")
    cmd_fit(RunConfig("fit", input=write_csv(tmp_path / "first.csv", obs[:1]), state=state))
    stream = "\n".join(",".join(repr(float(v)) for v in r) for r in obs[1:])
    records = list(cmd_update(RunConfig("update", state=state), io.StringIO(stream)))
    assert len(records) == 59
    full = cmd_fit(RunConfig("fit", input=write_csv(tmp_path / "all.csv", obs)))
    streamed, meta = read_state(state)
    assert streamed.nu == full["nu"]
    np.testing.assert_allclose(streamed.chi, full["chi"], rtol=0, atol=1e-12)
    assert meta["n_updates"] == 59
    np.testing.assert_allclose(records[-1]["alpha_map"], full["alpha_map"], rtol=1e-8)


def test_update_improper_to_proper(tmp_path):
    state = str(tmp_path / "state.json")
    cmd_fit(RunConfig("fit", input=write_csv(tmp_path / "s4.csv", [(0.7, 0.3)]), state=state))
    records = list(cmd_update(RunConfig("update", state=state), "0.7,0.3\n0.4,0.6\n"))
    assert [r["proper"] for r in records] == [False, True]
    assert "alpha_map" not in records[0]
    assert records[1]["predictive"]["family"] == "dirichlet"


def test_update_skips_bad_lines(tmp_path, capsys):
    state = str(tmp_path / "state.json")
    cmd_fit(RunConfig("fit", input=write_csv(tmp_path / "s1.csv", [(0.75, 0.25), (0.65, 0.35)]), state=state))
    records = list(cmd_update(RunConfig("update", state=state), "0.6,0.4\n0.5,0.7\nfoo,bar\n0.1,0.9\n"))
    assert [r["line"] for r in records] == [1, 4]
    err = capsys.readouterr().err
    assert "line 2" in err and "line 3" in err
    assert read_state(state)[0].nu == 4.0


def test_update_empty_stream(tmp_path):
    state = str(tmp_path / "state.json")
    cmd_fit(RunConfig("fit", input=write_csv(tmp_path / "s1.csv", [(0.75, 0.25), (0.65, 0.35)]), state=state))
    before = read_state(state)[0]
    assert list(cmd_update(RunConfig("update", state=state), "")) == []
    assert read_state(state)[0] == before


def test_update_cli_json_lines(tmp_path, capsys):
    state = str(tmp_path / "state.json")
    cmd_fit(RunConfig("fit", input=write_csv(tmp_path / "s1.csv", [(0.75, 0.25), (0.65, 0.35)]), state=state))
    stream = write_csv(tmp_path / "stream.csv", [(0.6, 0.4), (0.8, 0.2)], header=False)
    code, out, _ = run(["update", "--state", state, "--input", stream], capsys)
    assert code == 0
    lines = [json.loads(line) for line in out.strip().splitlines()]
    assert [r["nu"] for r in lines] == [3.0, 4.0]


def test_predict_symmetric_and_normalized(tmp_path):
    state = str(tmp_path / "state.json")
    cmd_fit(RunConfig("fit", input=write_csv(tmp_path / "sym.csv", [(0.3, 0.7), (0.7, 0.3)]), state=state))
    x = np.linspace(1e-4, 1 - 1e-4, 2001)
    pts = write_csv(tmp_path / "pts.csv", np.column_stack([x, 1 - x]))
    rows = cmd_predict(RunConfig("predict", state=state, input=pts))
    lp = np.array([r["map_log_pdf"] for r in rows])
    np.testing.assert_allclose(lp, lp[::-1], atol=1e-10)
    assert trapezoid(np.exp(lp), x) == pytest.approx(1.0, abs=2e-3)


def test_predict_oracle_columns(tmp_path):
    state = str(tmp_path / "state.json")
    cmd_fit(RunConfig("fit", input=write_csv(tmp_path / "s1.csv", [(0.75, 0.25), (0.65, 0.35)]), state=state))
    pts = write_csv(tmp_path / "pts.csv", [(0.7, 0.3), (0.5, 0.5)])
    rows = cmd_predict(RunConfig("predict", state=state, input=pts, oracle=True, oracle_resolution=200))
    for r in rows:
        assert r["log_ratio"] == pytest.approx(r["exact_log_pdf"] - r["map_log_pdf"], abs=1e-12)


def test_predict_improper_state(tmp_path, capsys):
    state = str(tmp_path / "state.json")
    cmd_fit(RunConfig("fit", input=write_csv(tmp_path / "s4.csv", [(0.7, 0.3)]), state=state))
    pts = write_csv(tmp_path / "pts.csv", [(0.7, 0.3)])
    with pytest.raises(ImproperHyperparametersError):
        cmd_predict(RunConfig("predict", state=state, input=pts))
    code, _, err = run(["predict", "--state", state, "--input", pts], capsys)
    assert code == cli.EXIT_IMPROPER
    assert "condition_c" in err


def test_check_command(tmp_path, capsys):
    inp = write_csv(tmp_path / "s5.csv", [(0.7, 0.3)] * 10)
    code, out, _ = run(["check", "--input", inp], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["condition_a"] and data["condition_b"] and not data["condition_c"]
    assert data["geometric_mean_sum"] == pytest.approx(1.0, abs=1e-12)


def test_scenario_bundles(tmp_path, capsys):
    out_dir = str(tmp_path / "bundles")
    bundles = {}
    for name in ("S1", "S2", "S3", "S4"):
        code, out, _ = run(["scenario", name, "--output-dir", out_dir, "--grid-resolution", "100"], capsys)
        assert code == 0
        bundles[name] = json.loads(out)
    assert bundles["S2"]["kl"] < bundles["S1"]["kl"]
    assert bundles["S4"]["divergence"]["diverging"]
    assert "kl" not in bundles["S4"] and "mode" not in bundles["S4"]
    assert sum(bundles["S3"]["mode"]) < sum(bundles["S1"]["mode"])
    assert "S1_density.csv" in bundles["S1"]["files"]
    with open(tmp_path / "bundles" / "S1_density.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 101 and len(rows[0]) == 101


def test_scenario_accepts_cedilla(capsys):
    code, out, _ = run(["scenario", "Ş4", "--grid-resolution", "50"], capsys)
    assert code == 0
    assert json.loads(out)["scenario"] == "S4"


def test_state_round_trip_exact(tmp_path):
    state = str(tmp_path / "state.json")
    out = cmd_fit(RunConfig("fit", input=write_csv(tmp_path / "s3.csv", [(0.95, 0.05), (0.45, 0.55)]), state=state))
    hyper, meta = read_state(state)
    assert hyper.chi.tolist() == out["chi"]
    assert meta["n_updates"] == 0


def test_csv_output(tmp_path, capsys):
    inp = write_csv(tmp_path / "s1.csv", [(0.75, 0.25), (0.65, 0.35)])
    code, out, _ = run(["fit", "--input", inp, "--format", "csv"], capsys)
    assert code == 0
    table = dict(csv.reader(io.StringIO(out)))
    assert float(table["alpha_map_1"]) == pytest.approx(SCENARIO_MODES["S1"][0], rel=1e-10)


def test_exit_codes(tmp_path, capsys):
    assert run(["fit", "--input", str(tmp_path / "missing.csv")], capsys)[0] == cli.EXIT_IO
    bad_state = tmp_path / "bad.json"
    bad_state.write_text("{not json")
    assert run(["check", "--state", str(bad_state)], capsys)[0] == cli.EXIT_PARSE
    with pytest.raises(SystemExit) as info:
        main(["fit"])
    assert info.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit):
        main(["scenario", "S1", "--grid-resolution", "5000"])
    rng = np.random.default_rng(2)
    inp = write_csv(tmp_path / "d4.csv", rng.dirichlet(np.ones(4), size=4))
    assert run(["scenario", "--input", inp], capsys)[0] == cli.EXIT_CAPABILITY


def test_check_needs_source():
    with pytest.raises(ParseError):
        cli.cmd_check(RunConfig("check"))
