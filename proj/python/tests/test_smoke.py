import csv
import json
import math
import os
from pathlib import Path

import jsonschema
import pytest

import seqrisk

SCHEMAS = Path(os.environ.get("SEQRISK_SCHEMAS", Path(__file__).resolve().parents[2] / "schemas"))


def validate(doc, name):
    schema = json.loads((SCHEMAS / f"{name}.schema.json").read_text())
    jsonschema.validate(doc, schema)


def cli_json(*args):
    code, out, err = seqrisk.run_cli(*args)
    assert code == 0, err
    return json.loads(out)


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("seqrisk")
    corpus = root / "corpus.jsonl"
    validate(cli_json("generate", "--users", "20", "--seed", "3", "--out", corpus), "generate")
    config = root / "config.json"
    config.write_text(json.dumps({"max_epochs": 2, "hidden": 4, "factor_hidden": 6, "risk_hidden": 6}))
    return root, corpus, config


def test_closed_form_values():
    assert seqrisk.sord_targets("BR", 1.0) == pytest.approx([0.0723, 0.1966, 0.5344, 0.1966], abs=1e-3)
    assert seqrisk.fleiss_kappa([[2, 1], [1, 2]]) == pytest.approx(-1 / 3)
    chi2, significant = seqrisk.chi_square(10, 20, 20, 10)
    assert chi2 == pytest.approx(6.6667, abs=1e-3) and significant
    assert seqrisk.graded_scores(["BR", "ID", "AT"], ["BR", "BR", "ID"]) == pytest.approx(
        {"gp": 0.5, "gr": 0.5, "fs": 0.5})
    v = seqrisk.hash_embed("alpha alpha", 32)
    assert math.isclose(sum(x * x for x in v), 1.0)
    with pytest.raises(ValueError):
        seqrisk.sord_targets("XX")


def test_generate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    seqrisk.generate(a, users=5, seed=1)
    seqrisk.generate(b, users=5, seed=1)
    assert a.read_bytes() == b.read_bytes()
    code, _, err = seqrisk.run_cli("generate", "--users", "0", "--out", tmp_path / "z.jsonl")
    assert code != 0 and "--users" in err


def test_analyze(workspace, tmp_path):
    _, corpus, _ = workspace
    report = cli_json("analyze", "--corpus", corpus, "--out", tmp_path)
    validate(report, "analysis")
    assert report == seqrisk.analyze(corpus)
    rows = read_csv(tmp_path / "cooccurrence.csv")
    assert rows[0] == ["risk_factor", "SS", "CS", "PC", "SR", "ML"]
    assert len(rows) == 20 and all(len(r) == 6 for r in rows)
    assert read_csv(tmp_path / "chi_square.csv")[0][0] == "code"

    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    code, _, err = seqrisk.run_cli("analyze", "--corpus", empty)
    assert code != 0 and err.startswith("error:")


def test_train_evaluate_explain(workspace):
    root, corpus, config = workspace
    run = root / "run"
    summary = cli_json("train", "--corpus", corpus, "--config", config, "--out", run, "--folds", "2")
    validate(summary, "train")
    for name in ["config.json", "history.csv", "model.bin", "folds.json"]:
        assert (run / name).exists()
    validate(json.loads((run / "config.json").read_text()), "config")
    validate(json.loads((run / "folds.json").read_text()), "folds")
    assert read_csv(run / "history.csv")[0][0] == "epoch"

    code, out, _ = seqrisk.run_cli("evaluate", "--run", run)
    assert code == 0 and out == (run / "evaluation.json").read_text()
    validate(json.loads(out), "evaluation")

    user = json.loads(corpus.read_text().splitlines()[0])["user_id"]
    report = cli_json("explain", "--model", run, "--corpus", corpus, "--user", user, "--window-index", "0")
    validate(report, "explain")
    assert sum(p["attention"] for p in report["posts"]) == pytest.approx(1.0)
    assert report["s_p"] + report["s_r"] == pytest.approx(1.0)

    code, _, err = seqrisk.run_cli("explain", "--model", run, "--corpus", corpus, "--user", "nobody",
                                   "--window-index", "0")
    assert code != 0 and "nobody" in err


def test_evaluate_with_ablation_and_sweep(workspace, tmp_path):
    _, corpus, config = workspace
    report = cli_json("evaluate", "--corpus", corpus, "--config", config, "--folds", "2", "--ablate", "df",
                      "--out", tmp_path / "ev")
    validate(report, "evaluation")
    assert [v["label"] for v in report["variants"]] == ["full", "w/o DF"]
    comparison = read_csv(tmp_path / "ev" / "comparison.csv")
    assert comparison[0] == ["variant", "gp", "gr", "fs"]
    assert comparison[-1][0] == "w/o DF"

    sweep = cli_json("sweep", "--corpus", corpus, "--config", config, "--sweep", "tau", "--values", "0.4,3.0",
                     "--folds", "2", "--out", tmp_path / "sw")
    validate(sweep, "sweep")
    rows = read_csv(tmp_path / "sw" / "sweep.csv")
    assert rows[0] == ["value", "n_windows", "gp", "gr", "fs"]
    assert [float(r[0]) for r in rows[1:]] == [0.4, 3.0]

    direct = seqrisk.evaluate(corpus, json.loads(config.read_text()), folds=2)
    validate(direct, "evaluation")
