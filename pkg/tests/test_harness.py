import json
import math

import numpy as np
import pytest

from wavesrc.harness import (RECORD_FIELDS, ConfigError, FitError, ForwardCache, StabilityRecord, SweepConfig,
                             fit_constant, median_table, monotonicity, noise_slope, read_csv, records_to_csv,
                             run_sweep, summarize, write_csv)
from harness_config import tiny


def _config(tmp_path, **changes):
    return SweepConfig.from_dict(tiny(output_dir=str(tmp_path / "out"), **changes))


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny")
    cfg = SweepConfig.from_dict(tiny(output_dir=str(out)))
    return cfg, run_sweep(cfg, ForwardCache())


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        SweepConfig.from_file(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        SweepConfig.from_file(tmp_path / "bad.json")
    with pytest.raises(ConfigError, match="invalid config"):
        SweepConfig.from_dict(tiny(colour="blue"))
    with pytest.raises(ConfigError, match="invalid config"):
        SweepConfig.from_dict(tiny(b_list=[]))
    with pytest.raises(ConfigError, match="Lambda_list"):
        SweepConfig.from_dict(tiny(Lambda_list=[2.0]))
    with pytest.raises(ConfigError, match="1/e"):
        SweepConfig.from_dict(tiny(epsilon_list=[0.5]))
    with pytest.raises(ConfigError, match="does not exist"):
        SweepConfig.from_dict(tiny(btrace="nowhere.btrace"), tmp_path)
    SweepConfig.from_dict(tiny(epsilon_list=[0.5], bounds={"overlay": False}))


def test_config_file_paths_are_relative_to_the_file(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps(tiny(output_dir="res")))
    cfg = SweepConfig.from_file(tmp_path / "c.json")
    assert cfg.output_dir == tmp_path / "res"
    assert cfg.windows == [1.5, 3.0] and cfg.seeds == [0, 1]


def _rec(w, e, err, shape=None, seed=0):
    terms = {"a": shape} if shape is not None else {}
    return StabilityRecord("ip1", w, e, seed, err, float("nan"), terms, w, 0.0)


def test_fit_recovers_a_known_constant():
    recs = [_rec(w, e, 2.0 * s, s) for w, e, s in [(1.5, 1e-3, 0.3), (2.0, 1e-2, 0.2), (3.0, 1e-1, 0.05)]]
    fit = fit_constant(recs)
    assert fit.C_fit == pytest.approx(2.0) and fit.rms == pytest.approx(0.0, abs=1e-12) and fit.n == 3
    squared = [_rec(r.b_or_Lambda, r.epsilon, math.sqrt(3.0 * r.shape()), r.shape()) for r in recs]
    assert fit_constant(squared, power=2.0).C_fit == pytest.approx(3.0)


def test_fit_needs_three_distinct_cells():
    recs = [_rec(1.5, 1e-3, 0.1, 1.0, seed=s) for s in range(5)] + [_rec(2.0, 1e-3, 0.1, 1.0)]
    with pytest.raises(FitError):
        fit_constant(recs)
    with pytest.raises(FitError):
        fit_constant([_rec(1.5, 1e-3, float("nan"), 1.0), _rec(2.0, 1e-3, 0.1), _rec(3.0, 1e-3, 0.1, 1.0)])


def test_monotonicity_and_noise_slope():
    recs = []
    for w, floor in ((1.0, 1e-4), (2.0, 1e-5)):
        recs.append(_rec(w, 0.0, floor))
        for e in (1e-3, 1e-2, 1e-1):
            recs.append(_rec(w, e, 5 * w ** -1 * e))
    mono = monotonicity(recs)
    assert not mono["anomalous"] and all(mono["monotone"].values())
    assert noise_slope(recs)["slope"] == pytest.approx(1.0)
    recs.append(_rec(3.0, 1e-1, 10.0))
    assert monotonicity(recs)["monotone"][1e-1] is False
    assert median_table([_rec(1.0, 0.0, v, seed=s) for s, v in enumerate([1.0, 3.0, 2.0])]) == {0.0: {1.0: 2.0}}


def test_sweep_writes_sorted_csv(tiny_run):
    cfg, recs = tiny_run
    assert len(recs) == 2 * 3 * 2
    keys = [(r.b_or_Lambda, r.epsilon, r.seed) for r in recs]
    assert keys == sorted(keys)
    text = (cfg.output_dir / "sweep.csv").read_text()
    assert text.splitlines()[0] == ",".join(RECORD_FIELDS)
    assert all(r.wall_time == 0.0 for r in recs)


def test_csv_round_trip(tiny_run, tmp_path):
    _, recs = tiny_run
    back = read_csv(write_csv(recs, tmp_path / "s.csv"))
    assert records_to_csv(back) == records_to_csv(recs)


def test_noise_free_rows_do_not_depend_on_seed(tiny_run):
    _, recs = tiny_run
    for w in (1.5, 3.0):
        errs = {r.error_rel_L2 for r in recs if r.b_or_Lambda == w and r.epsilon == 0.0}
        assert len(errs) == 1
    noisy = [r for r in recs if r.epsilon == 1e-1 and r.b_or_Lambda == 3.0]
    assert noisy[0].error_rel_L2 != noisy[1].error_rel_L2
    assert all(math.isnan(r.bound_total) for r in recs if r.epsilon == 0.0)
    assert all(r.bound_total > 0 for r in recs if r.epsilon > 0)


def test_duplicate_seeds_give_identical_rows(tmp_path):
    recs = run_sweep(_config(tmp_path, seeds=[4, 4], epsilon_list=[1e-2], b_list=[3.0]), write=False)
    assert records_to_csv(recs[:1]).splitlines()[1] == records_to_csv(recs[1:]).splitlines()[1]


def test_threads_do_not_change_results(tiny_run, tmp_path):
    _, recs = tiny_run
    again = run_sweep(_config(tmp_path, workers=3), write=False)
    assert records_to_csv(again) == records_to_csv(recs)


def test_failed_cells_are_recorded(tmp_path):
    recs = run_sweep(_config(tmp_path, tolerances={"delta_min": 1e3}, epsilon_list=[1e-2], seeds=[0]))
    assert len(recs) == 2
    for r in recs:
        assert math.isnan(r.error_rel_L2) and "BandConditionError" in r.bound_terms["failure"]
    assert math.isnan(recs[0].shape())
    assert len(read_csv(tmp_path / "out" / "sweep.csv")) == 2


def test_wall_time_is_opt_in(tmp_path):
    recs = run_sweep(_config(tmp_path, record_wall_time=True, epsilon_list=[0.0], seeds=[0]), write=False)
    assert all(r.wall_time > 0 for r in recs)


def test_summary_is_strict_json(tiny_run):
    _, recs = tiny_run
    s = summarize(recs)
    json.dumps(s, allow_nan=False)
    assert s["n_records"] == len(recs) and s["n_failed"] == 0
    assert set(s["fit"]) == {"C_fit", "rms", "n", "power"}
    assert np.isfinite(s["fit"]["C_fit"])
