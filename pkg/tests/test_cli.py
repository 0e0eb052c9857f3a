import json

import pytest

from gramlab.cli import InputError, RunConfig, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_verify_wang_passes(capsys):
    code, out = run_cli(capsys, "verify", "wang", "--model", "kolmogorov", "--t", "1", "--alpha", "2",
                        "--x", "1,0", "--y", "0,0", "--f", "logistic", "--seed", "7", "--samples", "100000")
    doc = json.loads(out)
    assert code == 0
    report = doc["body"]["results"][0]
    assert report["inequality_id"] == "wangHarnack" and report["verdict"] == "pass"
    assert doc["body"]["config"]["seed"] == 7
    assert "timestamp" in doc["header"]


def test_output_deterministic_modulo_header(capsys):
    argv = ["verify", "poincare", "--model", "kinetic-fp:gamma=3", "--f", "logistic", "--x", "0.5,0",
            "--samples", "50000", "--seed", "3"]
    _, a = run_cli(capsys, *argv)
    _, b = run_cli(capsys, *argv)
    assert json.loads(a)["body"] == json.loads(b)["body"]
    assert json.dumps(json.loads(a)["body"], sort_keys=True) == json.dumps(json.loads(b)["body"], sort_keys=True)


def test_empty_kgrid_is_input_error(capsys):
    assert main(["scaling", "--model", "kolmogorov", "--kgrid", ""]) == 2


def test_bad_inputs_exit_2(capsys):
    assert main(["gramian", "--model", "no-such-model"]) == 2
    assert main(["verify", "bogus", "--model", "kolmogorov"]) == 2
    assert main(["distance", "--model", "kolmogorov", "--x", "1,2,3"]) == 2
    assert main(["gramian", "--model", "kolmogorov", "--tol", "-1"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["asymptotics", "nothing"])
    assert exc.value.code == 2


def test_failing_check_exits_1(capsys):
    code, out = run_cli(capsys, "asymptotics", "coupled", "--j", "3", "--t", "10", "--format", "csv")
    assert code == 1
    assert out.splitlines()[0] == "parameter,LHS,RHS,verdict"
    code, _ = run_cli(capsys, "asymptotics", "coupled", "--j", "3", "--t", "10", "--corrected")
    assert code == 0


def test_gramian_csv(capsys):
    code, out = run_cli(capsys, "gramian", "--model", "kolmogorov", "--t", "0.5,1", "--format", "csv")
    rows = out.strip().splitlines()
    assert code == 0 and rows[0] == "t,lambdaMin,lambda2Min,condG" and len(rows) == 3


def test_scaling_and_plot_data(capsys, tmp_path):
    out_path = tmp_path / "study.csv"
    code = main(["scaling", "--model", "kolmogorov", "--kgrid", "100,1000,10000", "--lambda", "cubic",
                 "--plot-data", "--out", str(out_path)])
    assert code == 0
    assert out_path.read_text().startswith("k,t_k,tail,product")


def test_model_file_and_sample(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"A": [[0, 0], [1, 0]], "sigma": [[1, 0], [0, 0]], "name": "file"}))
    code, out = run_cli(capsys, "sample", "--model", str(path), "--count", "4", "--x", "1,0", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0].startswith("# t=1.0") and lines[1] == "y1,y2" and len(lines) == 6
    code, out = run_cli(capsys, "model", "--model", str(path))
    assert json.loads(out)["body"]["results"][0]["kalman"] is True


def test_density_distance_gamma(capsys):
    code, out = run_cli(capsys, "density", "--model", "kolmogorov", "--x", "0,0", "--y", "0,0")
    assert code == 0 and json.loads(out)["body"]["results"][0]["density"] > 0
    code, out = run_cli(capsys, "distance", "--model", "damped-osc:j=3", "--spectrum", "power:2", "--k", "2",
                        "--x", "1,0,0,0,0,1")
    res = json.loads(out)["body"]["results"][0]
    assert code == 0 and res["rho_t"] <= res["tensor_bound"]
    code, _ = run_cli(capsys, "gamma-check", "--count", "10")
    assert code == 0


def test_run_config_validation():
    with pytest.raises(InputError):
        RunConfig("gramian", {}, tol=0.0)
