import json

import pytest

from wavesrc.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, main
from wavesrc.fileio import read_btrace, read_fsamp
from harness_config import tiny


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out.strip().splitlines()
    return code, json.loads(out[-1])


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(tiny(output_dir="out", epsilon_list=[0.0, 1e-2], seeds=[0])))
    return path


def test_bounds_command(capsys):
    code, out = _run(capsys, ["bounds", "--problem", "ip1", "--b", "2", "--eps", "1e-3", "--M", "2"])
    assert code == EXIT_OK and out["status"] == "ok"
    assert out["bound_total"] == pytest.approx(0.6040059, abs=1e-6)
    assert out["cutoff_branch"] == "band" and out["cutoff_k"] == 2.0


def test_invalid_arguments_exit_1(capsys, tmp_path):
    assert _run(capsys, ["bounds", "--problem", "ip1", "--b", "2", "--eps", "0.5", "--M", "2"])[0] == EXIT_INVALID
    assert _run(capsys, ["sweep", "--bogus"])[0] == EXIT_INVALID
    code, out = _run(capsys, ["sweep", "--config", str(tmp_path / "none.json")])
    assert code == EXIT_INVALID and "does not exist" in out["error"]


def test_runtime_failure_exits_2(capsys, config, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    code, out = _run(capsys, ["simulate", "--config", str(config), "--out", str(blocker)])
    assert code == EXIT_RUNTIME and out["status"] == "failed"


def test_sweep_simulate_probe_reconstruct(capsys, config, tmp_path):
    code, out = _run(capsys, ["sweep", "--config", str(config)])
    assert code == EXIT_OK and out["n_records"] == 4
    assert (tmp_path / "out" / "sweep.csv").exists()
    assert [p.endswith(".svg") for p in out["plots"]] == [True, True]

    code, out = _run(capsys, ["simulate", "--config", str(config)])
    assert code == EXIT_OK
    ds = read_btrace(out["files"][0]["path"])
    assert ds.dirichlet.shape == (16 * 32, 401)

    code, out = _run(capsys, ["probe", "--config", str(config), "--b", "3", "--eps", "1e-2", "--seed", "2"])
    assert code == EXIT_OK and out["n_valid"] == out["n_samples"]
    assert len(read_fsamp(out["path"])) == out["n_samples"]

    code, out = _run(capsys, ["reconstruct", "--config", str(config), "--b", "3", "--eps", "1e-2"])
    assert code == EXIT_OK and 0 < out["error_rel_L2"] < 1.5 and out["bound_total"] > 0


def test_verify_huygens(capsys, config):
    code, out = _run(capsys, ["verify-huygens", "--config", str(config), "--tol", "1e-3"])
    assert code == EXIT_OK and out["pass"] is True
    assert out["cutoff_time"] == pytest.approx(1.0 + 2 * 1.2)
