import json

import pytest

import acisim

SHORT = {"experiment.horizon": 3000, "experiment.replications": 2}


def test_default_config_round_trips():
    text = acisim.default_config()
    assert acisim.resolve_config(text) == text
    assert "policy.beta" in acisim.config_keys()


def test_bad_override_raises_config_error():
    with pytest.raises(acisim.ConfigError, match=">= 0"):
        acisim.resolve_config(overrides={"policy.beta": -1})
    with pytest.raises(ValueError):
        acisim.simulate(overrides={"no_such_key": 1})


def test_simulate_conserves_and_is_deterministic():
    a = acisim.simulate(overrides=SHORT, seed=4)
    b = acisim.simulate(overrides=SHORT, seed=4)
    assert a == b
    assert a["conservation_ok"]
    assert a["schema_version"] == acisim.SCHEMA_VERSION
    budget = a["budget"]
    assert budget["serving"] + budget["switching"] + budget["idle"] == pytest.approx(1.0)
    assert a["stability_probe"]["verdict"] in ("STABLE", "GROWING")


def test_experiment_writes_run_dirs(tmp_path):
    runs = acisim.run_experiment(overrides=SHORT, label="ACI(FSO)", out_dir=tmp_path, threads=2)
    assert [r["seed"] for r in runs] == [1, 2]
    metrics = json.loads((tmp_path / "rep_00" / "metrics.json").read_text())
    assert metrics == runs[0]
    for name in ("delays.csv", "budget.csv", "switches.csv", "backlog_trace.csv"):
        assert (tmp_path / "rep_00" / name).read_text().startswith("# schema_version")
    summary, csv = acisim.merge_reports([tmp_path])
    assert summary["schema_version"] == acisim.SCHEMA_VERSION
    assert "ACI(FSO)" in csv


def test_preset_and_channel(tmp_path):
    assert "delay-cdf" in acisim.preset_names()
    summary = acisim.run_preset("time-budget", tmp_path, {"experiment.horizon": 2000, "experiment.replications": 1},
                                seed=5)
    assert summary["schema_version"] == acisim.SCHEMA_VERSION
    assert (tmp_path / "budget_summary.csv").exists()
    with pytest.raises(acisim.ConfigError):
        acisim.run_preset("nope", tmp_path)

    ch = acisim.channel_summary()
    assert 3e-3 <= ch["coherence_time_s"] <= 30e-3
    gains = acisim.sample_gains(20000, hop2_range_m=400.0, seed=2)
    assert len(gains) == 20000 and min(gains) >= 0.0
    lo, _ = acisim.outage_probability(ch["h_th"], 20000, hop2_range_m=400.0, seed=2)
    hi, _ = acisim.outage_probability(10 * ch["h_th"], 20000, hop2_range_m=400.0, seed=2)
    assert lo <= hi
