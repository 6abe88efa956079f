import csv
import io
import json
import math
import subprocess
import sys

import pytest

from todakill import cli, specfun


def run(argv, env=None):
    return cli.execute(argv, env=env or {})


def rows(text):
    body = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def test_survival_csv_schema():
    text, code, _ = run(["survival", "--model", "wall", "--xi", "1", "--x", "0", "--t", "4,1,2,0.5,8"])
    assert code == 0
    header = [l for l in text.splitlines() if not l.startswith("#")][0]
    assert header == "t,value,est_error,method,seed"
    r = rows(text)
    ts = [float(x["t"]) for x in r]
    assert ts == sorted(ts) and len(ts) == 5


def test_survival_wall_constant_row():
    text, _, _ = run(["survival", "--model", "wall", "--xi", "1", "--x", "0", "--t", "1e4"])
    v = float(rows(text)[0]["value"])
    # sqrt(t) N / K0(1) comes out as sqrt(2/pi), not 3 sqrt(2/pi)
    assert math.sqrt(1e4) * v / specfun.k0(1.0) == pytest.approx(math.sqrt(2 / math.pi), rel=0.02)


def test_provenance_header():
    text, _, _ = run(["survival", "--seed", "5", "--workers", "3", "--t", "1"])
    head = json.loads(text.splitlines()[0][2:])
    assert head["artifact"] == "todakill" and head["seed"] == 5
    assert "workers" not in head["params"]
    assert head["params"]["xi"] == 1.0


def test_workers_do_not_change_bytes():
    argv = ["survival", "--model", "chain", "--x", "0,1", "--t", "0.5,1", "--method", "mc",
            "--paths", "3000", "--dt", "1e-2", "--seed", "3"]
    a = run(argv + ["--workers", "1"])[0]
    b = run(argv + ["--workers", "8"])[0]
    assert a == b


def test_toda_workers_env_only_when_flag_absent():
    _, _, p = run(["survival"], env={"TODA_WORKERS": "3"})
    assert p["workers"] == 3
    _, _, p = run(["survival", "--workers", "2"], env={"TODA_WORKERS": "3"})
    assert p["workers"] == 2


def test_dump_config_round_trip(tmp_path):
    argv = ["simulate", "--model", "chain", "--xi", "0.5", "--x0=-0.5,0.5", "--t", "0.5",
            "--dt", "1e-2", "--paths", "2000", "--seed", "9", "--scheme", "hardkill"]
    dumped, code, _ = run(argv + ["--dump-config"])
    assert code == 0
    cfg = tmp_path / "run.json"
    cfg.write_text(dumped)
    assert run(["simulate", "--config", str(cfg)])[0] == run(argv)[0]


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"xi": 2.0, "t": [1.0]}))
    _, _, p = run(["survival", "--config", str(cfg), "--xi", "0.5"])
    assert p["xi"] == 0.5 and p["t"] == [1.0]


def test_unknown_config_key_is_an_error(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"xii": 2.0}))
    with pytest.raises(cli.CliError) as e:
        run(["survival", "--config", str(cfg)])
    assert e.value.code == 2 and "xii" in str(e.value)


@pytest.mark.parametrize("flag,value", [("xi", "-1"), ("t", "0"), ("paths", "0"), ("dt", "nan"),
                                        ("seed", "-3"), ("workers", "0"), ("tol", "abc")])
def test_out_of_range_flags_exit_2_naming_the_flag(flag, value):
    with pytest.raises(cli.CliError) as e:
        run(["survival", f"--{flag}", value])
    assert e.value.code == 2
    assert f"--{flag}" in str(e.value)


def test_dimension_mismatch_is_validation_error():
    with pytest.raises(cli.CliError) as e:
        run(["density", "--model", "chain", "--x", "0,1", "--y", "1"])
    assert e.value.code == 2 and "--y" in str(e.value)


def test_density_rows():
    text, code, _ = run(["density", "--model", "chain", "--x", "0,1", "--y", "0,1;0.5,2", "--t", "1"])
    assert code == 0
    r = rows(text)
    assert [k for k in r[0]] == ["y_1", "y_2", "value", "est_error", "method", "seed"]
    assert len(r) == 2 and all(float(x["value"]) > 0 for x in r)


def test_eval_functions():
    text, _, _ = run(["eval", "--fn", "bessel_k_real", "--nu", "0.5", "--z", "1"])
    assert float(rows(text)[0]["value"]) == pytest.approx(math.sqrt(math.pi / 2) / math.e, rel=1e-9)
    text, _, _ = run(["eval", "--fn", "gt_volume", "--x", "0,1,3"])
    assert float(rows(text)[0]["value"]) == pytest.approx(3.0)
    with pytest.raises(cli.CliError):
        run(["eval", "--fn", "gt_volume", "--x", "1,0"])


def test_simulate_histogram():
    text, code, _ = run(["simulate", "--model", "chain", "--x0", "0,1", "--process", "oconnell",
                         "--paths", "2000", "--dt", "1e-2", "--bins", "10"])
    r = rows(text)
    assert code == 0 and len(r) == 20
    for coord in ("x_1", "x_2"):
        mass = sum(float(x["value"]) * (float(x["bin_hi"]) - float(x["bin_lo"])) for x in r if x["coord"] == coord)
        assert mass == pytest.approx(1.0)


def test_empty_result_is_header_only():
    from todakill import output
    text = output.csv_text(["t"], [], {"artifact": "todakill"})
    assert text.splitlines()[1:] == ["t,value,est_error,method,seed"]


def test_fit_report_json():
    text, code, _ = run(["fit", "--model", "wall", "--x", "0", "--t", "100,300,1000,3000,10000"])
    body = json.loads(text)
    assert code == 0
    slope = body["checks"][0]
    assert set(slope) == {"name", "value", "target", "tol", "pass"}
    assert slope["pass"] and slope["target"] == -0.5


def test_selftest_fast_exits_zero():
    assert cli.main(["selftest", "--tier", "fast"]) == 0


def test_io_failure_exits_4(tmp_path):
    assert cli.main(["survival", "--out", str(tmp_path / "missing" / "x.csv")]) == 4


def test_out_file_written(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.main(["survival", "--out", str(out)]) == 0
    assert out.read_text().startswith("# ")


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "todakill", "survival", "--xi", "-2"],
                       capture_output=True, text=True)
    assert p.returncode == 2 and "--xi" in p.stderr
