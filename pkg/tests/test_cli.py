import json

import pytest

from rolloutid.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_estimate_hokalman(tmp_path, capsys):
    ds = tmp_path / "ds"
    code, out, _ = run(capsys, "simulate", "--system", "unstable_3x3", "--N", "80", "--T", "9", "--out", str(ds))
    assert code == 0 and (ds / "metadata.json").exists()

    code, out, _ = run(capsys, "estimate", str(ds), "--method", "full", "--out", str(tmp_path / "est"))
    assert code == 0
    summary = json.loads(out)
    assert summary["method_tag"] == "full" and summary["decomposition_residual"] < 1e-8

    code, out, _ = run(capsys, "estimate", str(ds), "--method", "unequal", "--t1", "5")
    assert code == 0 and json.loads(out)["T1"] == 5

    code, out, _ = run(capsys, "estimate", str(ds), "--method", "final", "--t1", "4")
    assert code == 0 and json.loads(out)["method_tag"] == "final_sample"

    code, out, _ = run(
        capsys, "hokalman", "--system", "unstable_3x3", "--estimate", str(tmp_path / "est"),
        "--truth", "--order", "3", "--t1", "4", "--t2", "4",
    )
    assert code == 0 and "robustness" in json.loads(out)


def test_bound_table_and_json(capsys):
    code, out, _ = run(capsys, "bound", "--theorem", "1", "--delta", "0.05")
    assert code == 0 and "C1" in out and "491.947" in out
    code, out, _ = run(capsys, "bound", "--theorem", "cor2", "--delta", "0.1", "--json")
    assert code == 0 and json.loads(out)["kind"] == "corollary2"


def test_check(capsys):
    code, out, _ = run(capsys, "check", "--prop", "2", "--trials", "5", "--json")
    assert code == 0 and json.loads(out)["trials"] == 5


def test_sweep_config(tmp_path, capsys):
    cfg = {
        "system": {"kind": "newton_delta"},
        "noise": {"sigma_u": 1.0, "sigma_w": 0.2, "sigma_v": 0.5},
        "sweep": {"type": "N", "values": [20, 40], "T": 5},
        "seeds": 2,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "sweep", "--config", str(path), "--out", str(out_dir))
    assert code == 0
    for name in ("results.csv", "summary.csv", "plot.svg"):
        assert (out_dir / name).exists()


def test_fir_report(capsys):
    code, out, _ = run(capsys, "fir-report", "--system", "random", "--rho", "0.5", "--T", "6")
    assert code == 0 and json.loads(out)["ols_error_hinf"] == 0.0


@pytest.mark.parametrize(
    "argv",
    [
        ["bound", "--delta", "1.5"],
        ["bound", "--system", "pendulum"],
        ["fir-report", "--system", "unstable_3x3"],
        ["estimate", "/nonexistent/dataset"],
    ],
)
def test_invalid_input_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_bad_config_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{oops")
    assert run(capsys, "sweep", "--config", str(path))[0] == 2
    path.write_text(json.dumps({"system": {"kind": "newton_delta"}, "sweep": {"type": "N", "values": [], "T": 5}}))
    assert run(capsys, "sweep", "--config", str(path))[0] == 2


def test_argparse_error_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["estimate"])
    assert info.value.code == 2


def test_numeric_failure_exit_3(tmp_path, capsys):
    ds = tmp_path / "ds"
    # 5 rollouts cannot excite 10 regressors for the final-sample fit
    assert run(capsys, "simulate", "--N", "5", "--T", "10", "--out", str(ds))[0] == 0
    code, _, err = run(capsys, "estimate", str(ds), "--method", "final")
    assert code == 3 and "error" in err
    spec = tmp_path / "sys.json"
    spec.write_text(json.dumps({"A": [[1e30]], "B": [[1.0]], "C": [[1.0]]}))
    assert run(capsys, "simulate", "--system", str(spec), "--N", "2", "--T", "30", "--out", str(tmp_path / "x"))[0] == 3
