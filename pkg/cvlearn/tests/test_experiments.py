import csv
import json
import pytest
from cvlearn.exceptions import ConfigError, InsufficientGridError
from cvlearn.experiments import (
    SWEEP_COLUMNS,
    execute,
    load_config,
    parse_config,
    resolve_object,
    run_config,
    sweep_scaling,
)
from cvlearn.gg import GGState
from cvlearn.serialization import dump
from cvlearn.symplectic import GaussianState

TINY_OPTIMIZER = {
    "population": 6,
    "parents": 2,
    "generations": 2,
    "restarts": 0,
    "max_evaluations": 30,
    "refine": False,
}


def test_prob_config(tmp_path):
    config = parse_config({"kind": "prob", "output-dir": str(tmp_path), "name": "vac"})
    record, files = execute(config)
    assert record.rows[0]["probability"] == pytest.approx(1.0)
    assert [f.name for f in files] == ["vac.csv", "vac.json"]
    written = json.loads(files[1].read_text())
    assert written["config_hash"] == config.hash
    assert written["kind"] == "prob"


def test_config_hash_is_stable(tmp_path):
    raw = {"kind": "bound", "bound": {"setting": "g", "n": [1, 2]}}
    first = parse_config(raw, base_dir=tmp_path)
    second = parse_config(dict(reversed(list(raw.items()))), base_dir=tmp_path / "other")
    assert first.hash == second.hash


def test_bound_rows(tmp_path):
    config = parse_config(
        {"kind": "bound", "output-dir": str(tmp_path), "bound": {"setting": "gp", "n": [1, 2], "K": 3}}
    )
    record, _ = execute(config)
    assert [r["n"] for r in record.rows] == [1, 2]
    assert record.rows[1]["T"] > record.rows[0]["T"]


@pytest.mark.parametrize(
    "raw",
    [
        {"kind": "teleport"},
        {"kind": "prob", "prob": {"bogus": 1}},
        {"kind": "prob", "colour": "red"},
        {"kind": "prob", "seeds": []},
        {"kind": "learn-state", "learn-state": {"optimizer": {"population": 2, "parents": 3}}},
        {"kind": "learn-state", "learn-state": {"loss": "bogus"}},
        {"kind": "learn-state", "learn-state": {"hypothesis": "nope"}},
        {"kind": "learn-state", "learn-state": {"role": "teleport"}},
        {"kind": "learn-state", "learn-state": {"T": -5}},
        {"kind": "learn-state", "learn-state": {"n-test": 50}},
        {"kind": "learn-state", "learn-state": {"role": "channel"}},
        {"kind": "learn-state", "learn-state": {"distribution": {"kind": "bogus"}}},
        {"kind": "sample", "sample": {"T": 0}},
        {"kind": "prob", "prob": {"state": "unicorn"}},
        {"kind": "bound", "bound": {"eps": 2.0}},
        {"kind": "bound", "bound": {"setting": "quantum"}},
        {"kind": "dims", "dims": {"class": "nope"}},
        {"kind": "dims", "dims": {"eps": [0.1, -0.1]}},
        {"kind": "sweep", "sweep": {"ns": [0]}},
        {"kind": "bound", "threads": 0},
    ],
)
def test_invalid_configs(raw):
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_object_references(tmp_path):
    dump(GaussianState.coherent(0.5), tmp_path / "coherent.json")
    state = resolve_object({"file": "coherent.json"}, "state", 1, tmp_path)
    assert isinstance(state, GaussianState)
    assert isinstance(resolve_object("cat-", "state", 1, tmp_path), GGState)
    with pytest.raises(ConfigError):
        resolve_object("cat-", "state", 2, tmp_path)
    with pytest.raises(ConfigError):
        resolve_object(3, "channel", 1, tmp_path)


def test_sample_rows(tmp_path):
    config = parse_config(
        {
            "kind": "sample",
            "seeds": [0, 1],
            "output-dir": str(tmp_path),
            "sample": {"target": "vacuum", "T": 5},
        }
    )
    record, files = execute(config)
    assert len(record.rows) == 10
    assert {r["outcome"] for r in record.rows} <= {0, 1}
    with files[0].open() as f:
        assert len(list(csv.DictReader(f))) == 10


def test_sweep(tmp_path):
    config = parse_config(
        {
            "kind": "sweep",
            "seeds": [0],
            "output-dir": str(tmp_path),
            "sweep": {
                "ns": [1, 2],
                "Ts": [5, 10, 20],
                "target": "vacuum",
                "n-test": 100,
                "bootstrap": 20,
                "optimizer": TINY_OPTIMIZER,
            },
        }
    )
    record, files = execute(config, raise_errors=True)
    assert len(record.rows) == 6
    assert record.failures == 0
    assert record.summary["gap_slope"] is not None
    assert record.summary["n_slope"] is None
    with files[0].open() as f:
        reader = csv.DictReader(f)
        assert tuple(reader.fieldnames) == SWEEP_COLUMNS
        assert len(list(reader)) == 6
    assert len(record.artifacts) == 6


def test_single_point_sweep(tmp_path):
    config = parse_config(
        {
            "kind": "sweep",
            "output-dir": str(tmp_path),
            "sweep": {
                "ns": [1],
                "Ts": [5],
                "target": "vacuum",
                "n-test": 100,
                "optimizer": TINY_OPTIMIZER,
            },
        }
    )
    with pytest.raises(InsufficientGridError):
        execute(config)


def test_sweep_scaling_censors_unreached_targets():
    rows = []
    for n in (1, 2, 3):
        for T in (10, 100):
            rows.append(
                {"n": n, "T": T, "seed": 0, "gap_q50": 0.1, "gap_q95": 0.05 if T >= 10 * n else 0.5}
            )
    summary = sweep_scaling(rows, gap_target=0.1, resamples=10)
    needed = {d["n"]: d["T_needed"] for d in summary.needed}
    assert needed == {1: 10, 2: 100, 3: 100}
    assert summary.n_slope > 0
    assert summary.gap_slope is None
    rows[-1]["gap_q95"] = 0.5
    summary = sweep_scaling(rows, gap_target=0.1, resamples=10)
    assert {d["n"]: d["T_needed"] for d in summary.needed}[3] == 200


def test_run_config_exit_codes(tmp_path):
    good = tmp_path / "good.toml"
    good.write_text('kind = "prob"\nname = "ok"\n\n[prob]\nstate = "cat+"\n')
    code, files = run_config(good)
    assert code == 0
    assert files[0] == tmp_path / "results" / "ok.csv"

    bad = tmp_path / "bad.toml"
    bad.write_text('kind = "prob"\n\n[prob]\nbogus = 1\n')
    assert run_config(bad) == (2, [])

    invalid = tmp_path / "invalid.toml"
    invalid.write_text('kind = "learn-state"\n\n[learn-state]\nloss = "bogus"\n')
    assert run_config(invalid) == (2, [])

    broken = tmp_path / "broken.toml"
    broken.write_text("kind = ")
    assert run_config(broken)[0] == 2


def test_load_config_resolves_relative_paths(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text('kind = "bound"\noutput-dir = "out"\n')
    config = load_config(path)
    assert config.out_dir == tmp_path / "out"


def test_rerun_reproduces_metrics(tmp_path):
    raw = {
        "kind": "learn-state",
        "seeds": [3, 4],
        "learn-state": {
            "target": "random",
            "T": 8,
            "n-test": 100,
            "optimizer": TINY_OPTIMIZER,
        },
    }
    rows = []
    for name in ("first", "second"):
        config = parse_config({**raw, "name": name, "output-dir": str(tmp_path)})
        record, _ = execute(config, raise_errors=True)
        rows.append([{k: v for k, v in r.items() if k != "wall_ms"} for r in record.rows])
    assert rows[0] == rows[1]
