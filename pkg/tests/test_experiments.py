import json
import os

import pytest

from hybrid_io.experiments import (
    ConfigError,
    config_hash,
    emit_tables,
    expand_sweep,
    load_config,
    parse_config,
    read_table,
    run_experiment,
)
from hybrid_io.experiments.config import SCHEMA_PATH, json_schema
from hybrid_io.experiments.runner import WORKERS_ENV, worker_count


def cfg(kind, tmp_path, **params):
    return parse_config({"kind": kind, "seed": 7, "output": str(tmp_path / kind), "params": params})


def test_unknown_keys_are_rejected(tmp_path):
    with pytest.raises(ConfigError):
        parse_config({"kind": "lemma1", "seed": 1, "bogus": 1})
    with pytest.raises(ConfigError):
        parse_config({"kind": "lemma1", "seed": 1, "params": {"sampels": 3}})
    with pytest.raises(ConfigError):
        parse_config({"kind": "nope", "seed": 1})
    with pytest.raises(ConfigError):
        parse_config({"kind": "lemma1", "seed": 1, "sweep": {"missing": [1]}})
    bad = tmp_path / "bad.yaml"
    bad.write_text("- a\n- b\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_hash_ignores_output_only(tmp_path):
    a = parse_config({"kind": "lemma1", "seed": 1, "output": "x"})
    b = parse_config({"kind": "lemma1", "seed": 1, "output": "y"})
    c = parse_config({"kind": "lemma1", "seed": 2, "output": "x"})
    assert config_hash(a) == config_hash(b) != config_hash(c)


def test_sweep_expansion(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(
        "kind: cs_convergence\nseed: 3\noutput: out\nparams: {instances: 2}\nsweep:\n  regime: [A, B1]\n  n_max: [4, 6]\n"
    )
    configs = expand_sweep(load_config(path))
    assert len(configs) == 4
    assert [(c.params.n_max, c.params.regime) for c in configs] == [(4, "A"), (4, "B1"), (6, "A"), (6, "B1")]
    assert len({config_hash(c) for c in configs}) == 4
    assert all(c.sweep is None and c.output.startswith("out") for c in configs)


def test_csv_round_trip(tmp_path):
    c = cfg("cs_convergence", tmp_path, regime="B1", instances=2, n_max=5)
    res = run_experiment(c)
    rows = read_table(tmp_path / "cs_convergence" / "cs_convergence.csv")
    assert len(rows) == len(res.records) == 2 * 4
    assert list(rows[0]) == [
        "config_hash",
        "index",
        "instance",
        "n",
        "xi_measured",
        "xi_recursion",
        "eta_recursion",
        "eta_statevector",
        "bound_lower",
        "bound_upper",
        "regime",
        "within_bounds",
        "recursion_matches",
    ]
    for row, rec in zip(rows, res.records):
        assert row["xi_measured"] == rec.measured["xi_measured"]
        assert row["recursion_matches"] is rec.checks["recursion_matches"]
    summary = json.loads((tmp_path / "cs_convergence" / "summary.json").read_text())
    assert summary["config_hash"] == res.config_hash and summary["records"] == 8


def test_single_point_table(tmp_path):
    c = cfg("xx_effective", tmp_path, samples=1)
    res = run_experiment(c)
    assert len(res.records) == 1
    assert len(read_table(tmp_path / "xx_effective" / "xx_effective.csv")) == 1


def test_empty_records_refused(tmp_path):
    with pytest.raises(ValueError):
        emit_tables(cfg("lemma1", tmp_path), [], tmp_path)


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    c = parse_config({"kind": "xx_effective", "seed": 1, "output": str(blocker / "sub"), "params": {"samples": 1}})
    with pytest.raises(OSError):
        run_experiment(c)


@pytest.mark.parametrize(
    "kind,params",
    [
        ("ls_convergence", {"betas": [0.5], "n_max": 3}),
        ("lemma1", {"samples": 3}),
        ("io_roundtrip", {"samples": 2}),
        ("phase_adjust", {"instances": 3}),
    ],
)
def test_results_are_byte_identical_across_runs_and_workers(tmp_path, kind, params):
    outs = []
    for i, workers in enumerate((1, 1, 2)):
        c = parse_config({"kind": kind, "seed": 11, "output": str(tmp_path / str(i)), "params": params})
        res = run_experiment(c, workers)
        assert res.passed
        outs.append((tmp_path / str(i) / f"{kind}.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_worker_count_from_environment(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(ValueError):
        worker_count()
    monkeypatch.delenv(WORKERS_ENV)
    assert worker_count() == 1


def test_schema_file_is_current():
    assert json.loads(SCHEMA_PATH.read_text()) == json_schema()


def test_bundled_configs_validate():
    root = os.path.join(os.path.dirname(__file__), "..", "configs")
    names = sorted(f for f in os.listdir(root) if f.endswith(".yaml"))
    assert names
    for name in names:
        load_config(os.path.join(root, name))
