import io
import json
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from pendulab import cli, stochastic
from pendulab.ode import GridSpec


def run_cli(*argv, capsys):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def usage_error(*argv, capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(list(argv))
    assert info.value.code == 2
    return capsys.readouterr().err


def parse(text):
    lines = text.splitlines()
    return lines[0].split(","), np.loadtxt(io.StringIO(text), delimiter=",",
                                           skiprows=1, ndmin=2)


def test_help_lists_every_system():
    out = subprocess.run([sys.executable, "-m", "pendulab.cli", "--help"],
                         capture_output=True, text=True, check=True).stdout
    for name in cli.SYSTEMS:
        assert name in out


def test_every_system_runs_with_minimal_config(capsys):
    extra = {"ode": [], "dde": ["--tau", "1"], "frac": ["--alpha", "0.8"],
             "sde": []}
    for name, info in cli.SYSTEMS.items():
        argv = ["simulate", "--system", name, "--t0", "1", "--t1", "1.5",
                "--dt", "0.01"]
        if info.pendulum:
            argv += ["--level", "0.5"]
        argv += extra[info.kind]
        code, out, _ = run_cli(*argv, capsys=capsys)
        assert code == 0, name
        header, data = parse(out)
        assert header[0] == "t"
        assert len(header) == (3 if info.pendulum else 4)
        assert np.all(np.isfinite(data))


def test_euler_top_example(capsys):
    code, out, err = run_cli("simulate", "--system", "euler-top", "--ic",
                             "0.1,0.1,0.2", "--t0", "0", "--t1", "100",
                             "--dt", "1e-3", capsys=capsys)
    assert code == 0
    header, data = parse(out)
    assert header == ["t", "x1", "x2", "x3"]
    assert data.shape == (100001, 4)
    assert data[-1, 0] == 100.0
    # both readings of the level constants are reported
    assert "H=0.01" in err and "H=0.1" in err


def test_csv_numbers_round_trip_exactly(capsys):
    _, out, _ = run_cli("simulate", "--system", "euler-top", "--t1", "1",
                        "--dt", "0.1", capsys=capsys)
    row = out.splitlines()[5].split(",")
    assert all(float(format(float(v), ".17g")) == float(v) for v in row)
    assert len(row[1].replace(".", "").replace("-", "").lstrip("0")) >= 16


def test_delayed_pendulum_example(capsys):
    code, out, _ = run_cli("simulate", "--system", "pendulum-dde-h",
                           "--level", "0.5", "--tau", "1", "--theta0", "2",
                           capsys=capsys)
    assert code == 0
    header, data = parse(out)
    assert header == ["t", "theta", "omega"]
    assert data[0, 1] == 2.0 and data[0, 2] == 0.0


def test_stochastic_output_is_byte_identical(tmp_path):
    argv = [sys.executable, "-m", "pendulab.cli", "simulate", "--system",
            "euler-top-sde-a", "--seed", "42", "--t1", "3"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and len(a) > 1000


def test_seed_changes_output(capsys):
    base = ["simulate", "--system", "euler-top-sde-a", "--t1", "2"]
    _, a, _ = run_cli(*base, "--seed", "1", capsys=capsys)
    _, b, _ = run_cli(*base, "--seed", "2", capsys=capsys)
    assert a != b


def test_config_round_trip(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert cli.main(["simulate", "--system", "pendulum-sde", "--level", "0.5",
                     "--seed", "7", "--t1", "3", "--scheme", "milstein",
                     "--save-config", str(cfg), "--output", str(out1)]) == 0
    saved = json.loads(cfg.read_text())
    assert set(saved) <= set(cli.RunConfig.field_names())
    assert saved["seed"] == 7 and saved["scheme"] == "milstein"
    assert cli.main(["simulate", "--config", str(cfg),
                     "--output", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"system": "euler-top", "t1": 5, "dt": 0.5}))
    _, out, _ = run_cli("simulate", "--config", str(cfg), "--t1", "2",
                        capsys=capsys)
    _, data = parse(out)
    assert_array_equal(data[:, 0], [0.0, 0.5, 1.0, 1.5, 2.0])


@pytest.mark.parametrize("argv, field", [
    (["--system", "euler-top", "--tau", "1"], "tau"),
    (["--system", "euler-top", "--theta0", "1"], "theta0"),
    (["--system", "pendulum", "--ic", "1,2,3"], "ic"),
    (["--system", "pendulum"], "level"),
    (["--system", "euler-top-dde-z"], "tau"),
    (["--system", "euler-top-frac-z", "--alpha", "1.5"], "alpha"),
    (["--system", "euler-top", "--ic", "1,2"], "ic"),
    (["--system", "euler-top", "--dt", "-1"], "dt"),
    (["--system", "euler-top", "--t1", "-1"], "t1"),
    (["--system", "euler-top-dde-x", "--tau", "0.1", "--dt", "0.05"], "dt"),
    (["--system", "euler-top-sde-a", "--interpretation", "strat",
      "--scheme", "em"], "scheme"),
    (["--system", "euler-top-sde-a", "--seed", "-3"], "seed"),
    (["--ic", "1,2,3"], "system"),
])
def test_invalid_config_names_the_field(argv, field, capsys):
    err = usage_error("simulate", *argv, capsys=capsys)
    assert f"{field}:" in err


def test_unknown_config_key_is_named(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"system": "euler-top", "gravity": 9.8}))
    err = usage_error("simulate", "--config", str(cfg), capsys=capsys)
    assert "gravity:" in err


def test_malformed_config_file(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert "config:" in usage_error("simulate", "--config", str(cfg),
                                    capsys=capsys)
    missing = tmp_path / "missing.json"
    assert "config:" in usage_error("simulate", "--config", str(missing),
                                    capsys=capsys)


def test_ensemble_rejects_deterministic_system(capsys):
    err = usage_error("ensemble", "--system", "euler-top", "--paths", "8",
                      capsys=capsys)
    assert "system:" in err


def test_ensemble_needs_paths(capsys):
    assert "paths:" in usage_error("ensemble", "--system", "euler-top-sde-a",
                                   capsys=capsys)
    assert "paths:" in usage_error("ensemble", "--system", "euler-top-sde-a",
                                   "--paths", "1", capsys=capsys)


def test_ensemble_csv_layout(capsys):
    code, out, _ = run_cli("ensemble", "--system", "euler-top-sde-a",
                           "--paths", "16", "--t1", "1.5", "--dt", "0.01",
                           capsys=capsys)
    assert code == 0
    header, data = parse(out)
    assert header == ["t", "mean_1", "mean_2", "mean_3", "var_1", "var_2",
                      "var_3", "ci_1", "ci_2", "ci_3"]
    assert data.shape == (51, 10)
    assert_array_equal(data[0, 4:], 0.0)


def test_zero_diffusion_ensemble_has_zero_variance():
    spec = stochastic.constant_noise_spec(lambda t, x: -x, 2, scale=0.0)
    stats = stochastic.ensemble(spec, (1.0, 2.0), 8, 3,
                                GridSpec(0.0, 1.0, 0.1), stochastic.Scheme.EM)
    header, data = parse(cli.ensemble_csv(stats))
    assert header[3:5] == ["var_1", "var_2"]
    assert_array_equal(data[:, 3:], 0.0)


def test_ensemble_is_reproducible_across_workers(tmp_path):
    argv = ["ensemble", "--system", "euler-top-sde-a", "--paths", "600",
            "--seed", "5", "--t1", "1.5", "--dt", "0.01"]
    one, four = tmp_path / "1.csv", tmp_path / "4.csv"
    assert cli.main(argv + ["--output", str(one)]) == 0
    assert cli.main(argv + ["--workers", "4", "--output", str(four)]) == 0
    assert one.read_bytes() == four.read_bytes()


def test_ensemble_ci_shrinks_with_paths(capsys):
    base = ["ensemble", "--system", "pendulum-sde", "--level", "0.5",
            "--t1", "2", "--dt", "0.01", "--seed", "1"]
    _, small, _ = run_cli(*base, "--paths", "100", capsys=capsys)
    _, large, _ = run_cli(*base, "--paths", "10000", capsys=capsys)
    ci_small = parse(small)[1][-1, 5:7]
    ci_large = parse(large)[1][-1, 5:7]
    # half-widths scale like 1/sqrt(M): a factor of about 10
    assert np.all(ci_large < ci_small / 5)


def test_verify_report(capsys):
    code, out, _ = run_cli("verify", "elliptic", capsys=capsys)
    report = json.loads(out)
    assert code == 0
    assert report and all(r["suite"] == "elliptic" for r in report)
    for r in report:
        assert {"suite", "check", "observed", "bound", "pass"} <= set(r)
        assert r["pass"] is True


def test_verify_exit_code_reflects_failures(monkeypatch, capsys):
    from pendulab import verify
    monkeypatch.setitem(verify.SUITES, "elliptic",
                        lambda: [verify.Check("elliptic", "x", 2.0, 1.0)])
    code, out, _ = run_cli("verify", "elliptic", capsys=capsys)
    assert code == 1
    assert json.loads(out)[0]["pass"] is False


def test_verify_unknown_suite(capsys):
    assert "unknown suite" in usage_error("verify", "nonsense", capsys=capsys)


def test_every_system_is_exercised_by_a_verify_suite():
    import inspect
    from pendulab import verify
    source = inspect.getsource(verify)
    names = {
        "euler-top": "euler_top_field", "pendulum": "pendulum_field",
        "euler-top-dde-z": "EULER_TOP_DELAY_Z",
        "euler-top-dde-x": "EULER_TOP_DELAY_X",
        "pendulum-dde-h": "PENDULUM_DELAY_H",
        "pendulum-dde-k": "PENDULUM_DELAY_K",
        "euler-top-frac-z": "EULER_TOP_FRAC_Z",
        "euler-top-frac-x": "EULER_TOP_FRAC_X",
        "pendulum-frac-h": "PENDULUM_FRAC_H",
        "pendulum-frac-k": "PENDULUM_FRAC_K",
        "euler-top-sde-a": "euler_top_sde_a",
        "euler-top-sde-b": "euler_top_sde_b",
        "pendulum-sde": "pendulum_sde",
    }
    assert set(names) == set(cli.SYSTEMS)
    for token in names.values():
        assert token in source


def test_output_file(tmp_path, capsys):
    target = tmp_path / "out.csv"
    code, out, _ = run_cli("simulate", "--system", "pendulum", "--level",
                           "0.5", "--t1", "1", "--output", str(target),
                           capsys=capsys)
    assert code == 0 and out == ""
    assert target.read_text().startswith("t,theta,omega\n")
