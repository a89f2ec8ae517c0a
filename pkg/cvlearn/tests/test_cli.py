import json
import math
import pytest
from cvlearn.cli import bound, dims, learn_state, learn_task, make, prob, run, sample, sweep, validate
from cvlearn.gg import gg_outcome_probability, gkp_b_constants, make_cat_state
from cvlearn.utils import show_cli_trace

TINY_SEARCH = [
    "--population",
    "6",
    "--generations",
    "2",
    "--restarts",
    "0",
    "--max-evaluations",
    "30",
]


def last_json(output: str):
    "The last line of the output holding a JSON document (logs share the stream)"
    for line in reversed(output.splitlines()):
        if line.startswith(("{", "[")):
            return json.loads(line)
    raise AssertionError(f"No JSON in output:\n{output}")


def test_make_validate_prob(cli_runner, tmp_path):
    path = tmp_path / "cat.json"
    result = cli_runner(make, ["cat", "--alpha", "1.0", "--sign", "plus", "--out", str(path)])
    assert result.exit_code == 0, show_cli_trace(result)
    assert json.loads(path.read_text())["type"] == "gg-state"

    result = cli_runner(validate, [str(path)])
    assert result.exit_code == 0, show_cli_trace(result)
    assert last_json(result.output)["ok"]

    result = cli_runner(prob, ["--state", str(path), "--oracle-cutoff", "0"])
    assert result.exit_code == 0, show_cli_trace(result)
    report = last_json(result.output)
    expected = gg_outcome_probability(make_cat_state(1.0, 1), None, None)
    assert report["probability"] == pytest.approx(expected)
    assert report["state"] == "GGState"
    assert report["oracle_difference"] < 1e-4


def test_prob_shorthands(cli_runner):
    result = cli_runner(prob, [])
    assert result.exit_code == 0, show_cli_trace(result)
    assert last_json(result.output)["probability"] == pytest.approx(1.0)
    result = cli_runner(prob, ["--state", "squeezed-cat"])
    assert result.exit_code == 2


def test_validate_invalid_state(cli_runner, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(
        json.dumps(
            {"type": "gaussian-state", "n": 1, "mean": [0.0, 0.0], "cov": [[0.25, 0.0], [0.0, 0.25]]}
        )
    )
    result = cli_runner(validate, [str(path)])
    assert result.exit_code == 1, show_cli_trace(result)
    assert last_json(result.output)["min_eigenvalue"] == pytest.approx(-0.25)


def test_validate_unreadable_document(cli_runner, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{")
    result = cli_runner(validate, [str(path)])
    assert result.exit_code == 2, show_cli_trace(result)


def test_bound(cli_runner):
    result = cli_runner(bound, ["--setting", "g", "--n", "1", "--eps", "0.1", "--delta", "1.0"])
    assert result.exit_code == 0, show_cli_trace(result)
    assert last_json(result.output)["T"] == pytest.approx(100 * math.log2(10) ** 2)

    result = cli_runner(bound, ["--setting", "gp", "--n", "1", "--n", "2", "--K", "2"])
    assert result.exit_code == 0, show_cli_trace(result)
    rows = last_json(result.output)
    assert [r["n"] for r in rows] == [1, 2]


def test_bound_gg(cli_runner, tmp_path):
    result = cli_runner(bound, ["--setting", "gg"])
    assert result.exit_code == 1
    state = tmp_path / "cat.json"
    assert cli_runner(make, ["cat", "--out", str(state)]).exit_code == 0
    result = cli_runner(bound, ["--setting", "gg", "--state", str(state)])
    assert result.exit_code == 0, show_cli_trace(result)
    assert last_json(result.output)["terms"]["B"] > 0


def test_sample(cli_runner, tmp_path):
    out = tmp_path / "samples.json"
    result = cli_runner(
        sample, ["--target", "vacuum", "--T", "5", "--seed", "0", "--seed", "1", "--out", str(out)]
    )
    assert result.exit_code == 0, show_cli_trace(result)
    assert out.exists()
    assert (tmp_path / "samples.csv").exists()
    assert len(json.loads(out.read_text())["rows"]) == 10


def test_learn_state(cli_runner, tmp_path):
    out = tmp_path / "learn.json"
    result = cli_runner(
        learn_state,
        ["--target", "vacuum", "--T", "10", "--n-test", "100", "--out", str(out)] + TINY_SEARCH,
    )
    assert result.exit_code == 0, show_cli_trace(result)
    report = last_json(result.output)
    assert report["kind"] == "learn-state"
    assert report["failures"] == 0
    assert 0.0 <= report["rows"][0]["gap_q95"] <= 1.0


def test_learn_task(cli_runner, tmp_path):
    out = tmp_path / "task.json"
    result = cli_runner(
        learn_task, ["--alpha", "1.0", "--T", "10", "--out", str(out)] + TINY_SEARCH
    )
    assert result.exit_code == 0, show_cli_trace(result)
    row = last_json(result.output)["rows"][0]
    assert 0.0 <= row["success"] <= 1.0


def test_dims(cli_runner, tmp_path):
    out = tmp_path / "dims.json"
    result = cli_runner(
        dims,
        [
            "--class",
            "constant",
            "--gamma",
            "0.2",
            "--kmax",
            "2",
            "--budget",
            "200",
            "--k",
            "3",
            "--sample-budget",
            "100",
            "--out",
            str(out),
        ],
    )
    assert result.exit_code == 0, show_cli_trace(result)
    assert last_json(result.output)["rows"][0]["k_certified"] == 1


def test_run_exit_codes(cli_runner, tmp_path):
    good = tmp_path / "prob.toml"
    good.write_text('kind = "prob"\nname = "vac"\n')
    result = cli_runner(run, [str(good)])
    assert result.exit_code == 0, show_cli_trace(result)
    assert str(tmp_path / "results" / "vac.csv") in result.output

    bad = tmp_path / "bad.toml"
    bad.write_text('kind = "prob"\nseeds = "many"\n')
    result = cli_runner(run, [str(bad)])
    assert result.exit_code == 2, show_cli_trace(result)


def test_sweep_rejects_other_kinds(cli_runner, tmp_path):
    config = tmp_path / "prob.toml"
    config.write_text('kind = "prob"\n')
    result = cli_runner(sweep, [str(config)])
    assert result.exit_code == 2, show_cli_trace(result)


def test_bound_explicit_constants(cli_runner):
    result = cli_runner(bound, ["--setting", "gg", "--b", "1.0", "2.0", "1.0"])
    assert result.exit_code == 0, show_cli_trace(result)
    assert last_json(result.output)["terms"]["B"] == pytest.approx(2.0)
    result = cli_runner(bound, ["--setting", "gg", "--b", "1.0", "2.0", "0.0"])
    assert result.exit_code == 2


def test_bound_gkp_family(cli_runner):
    result = cli_runner(bound, ["--setting", "gg", "--gkp", "0.1", "4"])
    assert result.exit_code == 0, show_cli_trace(result)
    assert last_json(result.output)["terms"]["B"] == pytest.approx(gkp_b_constants(0.1, 4).ratio)
