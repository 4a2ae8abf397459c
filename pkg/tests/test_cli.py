import json

import pytest

from cdpre import cli, estimate, fixtures
from cdpre.output import config_hash, read_csv


def run(tmp_path, argv, name="out.csv"):
    out = tmp_path / name
    code = cli.main(argv + ["--out", str(out)])
    return code, out


def test_theta_all_zero_at_t0(tmp_path):
    code, out = run(tmp_path, ["theta", "--model", "bernoulli", "--t", "0", "--n", "1,2,4", "--reps", "100"])
    assert code == 0
    rows = read_csv(out)
    assert [float(r["theta_hat"]) for r in rows] == [0.0, 0.0, 0.0]
    head = out.read_text().splitlines()[:3]
    assert {h.split("=")[0] for h in head} == {"# config_hash", "# seed", "# version"}


def test_theta_star_window(tmp_path):
    code, out = run(tmp_path, ["theta", "--model", "cdpre", "--rho", "0,0,0,1", "--t", "0.5", "--n", "1",
                               "--reps", "20000", "--pad", "0"])
    assert code == 0
    p = float(read_csv(out)[0]["theta_hat"])
    assert abs(p - 0.9375) <= 4 * (0.9375 * 0.0625 / 20000) ** 0.5


def test_rerun_is_bit_identical(tmp_path):
    argv = ["theta", "--model", "cdpre", "--t", "0.55", "--n", "2,3", "--reps", "200"]
    _, a = run(tmp_path, argv + ["--threads", "1"], "a.csv")
    _, b = run(tmp_path, argv + ["--threads", "2"], "b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "bernoulli", "t": 0.0, "n": [1, 2], "reps": 10}))
    code, out = run(tmp_path, ["theta", "--config", str(cfg)])
    assert code == 0 and all(float(r["theta_hat"]) == 0 for r in read_csv(out))
    code, out = run(tmp_path, ["theta", "--config", str(cfg), "--t", "1"], "b.csv")
    assert code == 0 and all(float(r["theta_hat"]) == 1 for r in read_csv(out))


@pytest.mark.parametrize("argv", [
    ["theta", "--n", "4,2"],
    ["theta", "--reps", "0"],
    ["theta", "--rho", "0.5,0.5,0.5,0", "--model", "cdpre"],
    ["theta", "--model", "potts"],
    ["dominance", "--rho", "0.2,0,0,0.8"],
    ["osss", "--n", "4", "--k", "5"],
    ["covariance", "--m", "3", "--w", "5,0"],
    ["fit"],
])
def test_config_errors_exit_1(tmp_path, argv, capsys):
    code, out = run(tmp_path, argv)
    assert code == 1
    assert "configuration error" in capsys.readouterr().err
    assert not out.exists()


def test_bad_config_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["theta", "--config", str(bad)]) == 1
    bad.write_text(json.dumps({"colour": "red"}))
    assert cli.main(["theta", "--config", str(bad)]) == 1


def test_runtime_error_exit_2(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(estimate, "theta_table", boom)
    assert run(tmp_path, ["theta"])[0] == 2


def test_check_failure_exit_3(tmp_path, monkeypatch):
    row = fixtures.OracleRow("single_edge", "edge_open", 0.5, 0.5, 0.9, 0.01, 0.02, 100)
    monkeypatch.setattr(fixtures, "oracle_check", lambda *a, **k: [row])
    code, out = run(tmp_path, ["oracle-check"])
    assert code == 3 and read_csv(out)[0]["pass"] == "0"


def test_oracle_check_examples(tmp_path):
    code, out = run(tmp_path, ["oracle-check", "--t", "0.37,0.6", "--reps", "20000"])
    assert code == 0
    rows = read_csv(out)
    single = [r for r in rows if r["fixture"] == "single_edge" and r["t"] == "0.37"][0]
    assert float(single["exact"]) == pytest.approx(0.37)
    both = [r for r in rows if r["event"] == "both_open"]
    assert all(float(r["exact"]) == 0 for r in both)
    assert {r["fixture"] for r in rows} >= {"grid_2x3", "h_graph"}


def test_dominance_t0(tmp_path):
    code, out = run(tmp_path, ["dominance", "--rho", "0,0,1,0", "--t", "0", "--n", "4", "--reps", "10"])
    assert code == 0 and read_csv(out)[0]["lower_violations"] == "0"


def test_blocks_and_fit(tmp_path):
    code, out = run(tmp_path, ["blocks", "--r=0", "--s=0"], "b.json")
    blk = json.loads(out.read_text())["blocks"][0]
    assert code == 0 and blk["g"] == [[2, 2], [3, 2]] and len(blk["a_set"]) == 6
    _, table = run(tmp_path, ["theta", "--t", "0.3", "--n", "2,4,6,8", "--reps", "3000"], "t.csv")
    code, out = run(tmp_path, ["fit", "--input", str(table)], "f.json")
    fit = json.loads(out.read_text())["fit"]
    assert code == 0 and fit["alpha_hat"] > 0


def test_hash_ignores_output_and_threads():
    base = {"model": "bernoulli", "seed": 1}
    assert config_hash({**base, "out": "a", "threads": 1}) == config_hash({**base, "out": "b", "threads": 8})
    assert config_hash(base) != config_hash({**base, "seed": 2})
