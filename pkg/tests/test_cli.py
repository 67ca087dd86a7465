import json
from pathlib import Path

import pytest

from grouptree.cli import main
from grouptree.datasets import monks, to_csv
from grouptree.mps import parse_mps

TOY_CSV = """shade,shape,grade
dark,round,good
dark,square,good
pale,round,bad
pale,square,bad
dark,round,good
pale,round,bad
dark,square,good
pale,square,bad
dark,round,bad
pale,square,good
"""


@pytest.fixture
def toy(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text(TOY_CSV, encoding="utf-8")
    return path


@pytest.fixture
def monks3(tmp_path):
    path = tmp_path / "monks3.csv"
    path.write_text(to_csv(monks(3)), encoding="utf-8")
    return path


def test_encode(toy, tmp_path, capsys):
    out = tmp_path / "enc.json"
    code = main(["encode", "--data", str(toy), "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert len(payload["matrix"]) == 10
    assert payload["schema"]["groups"][0]["column"] == "shade"


def test_train_and_eval_round_trip(toy, tmp_path):
    out = tmp_path / "run.json"
    code = main(
        ["train", "--data", str(toy), "--topology", "depth2", "--seed", "7",
         "--out", str(out)]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["solve"]["status"] == "optimal"
    tree_path = tmp_path / "tree.json"
    tree_path.write_text(json.dumps(payload["tree"]), encoding="utf-8")
    eval_out = tmp_path / "eval.json"
    code = main(
        ["eval", "--data", str(toy), "--tree", str(tree_path), "--out", str(eval_out)]
    )
    assert code == 0
    metrics = json.loads(eval_out.read_text())["metrics"]
    # the tree was trained on 9 of 10 rows; re-evaluating on the training side
    # only is covered in the experiments tests, here the whole file is scored
    assert metrics["tp"] + metrics["fp"] + metrics["tn"] + metrics["fn"] == 10


def test_export_round_trips(toy, tmp_path):
    out = tmp_path / "model.mps"
    code = main(["export", "--data", str(toy), "--topology", "depth2", "--out", str(out)])
    assert code == 0
    model = parse_mps(out.read_text())
    assert any(v.name.startswith("Z_1_") for v in model.variables)
    lp_out = tmp_path / "model.lp"
    assert main(["export", "--data", str(toy), "--emit", "lp", "--out", str(lp_out)]) == 0
    assert lp_out.read_text().startswith("\\ written by grouptree")


def test_oracle_matches_train_objective(toy, tmp_path):
    train_out = tmp_path / "train.json"
    oracle_out = tmp_path / "oracle.json"
    # train on the full file by using the oracle's view: compare objectives on
    # the same 90% split is not possible via CLI, so check the full-data
    # oracle dominates the split objective
    assert main(["train", "--data", str(toy), "--seed", "1", "--out", str(train_out)]) == 0
    assert main(["oracle", "--data", str(toy), "--out", str(oracle_out)]) == 0
    train_obj = json.loads(train_out.read_text())["solve"]["objective"]
    oracle_obj = json.loads(oracle_out.read_text())["objective"]
    assert oracle_obj + 1 >= train_obj  # holdout differs by one sample here


def test_cv_runs(toy, tmp_path):
    out = tmp_path / "cv.json"
    code = main(
        ["cv", "--data", str(toy), "--topologies", "depth2,depth2_5",
         "--seed", "3", "--out", str(out)]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["chosen"] in ("depth2", "depth2_5")


def test_sweep(toy, tmp_path):
    out = tmp_path / "sweep.json"
    code = main(
        ["sweep", "--data", str(toy), "--min-specificity", "0.5,1.0",
         "--seed", "5", "--out", str(out)]
    )
    assert code == 0
    rows = json.loads(out.read_text())["rows"]
    assert [r["min_specificity"] for r in rows] == ["1/2", "1"]
    assert all(r["train_tnr"] >= float(eval(r["min_specificity"])) - 1e-12 for r in rows)


def test_sweep_requires_floors(toy):
    assert main(["sweep", "--data", str(toy)]) == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as err:
        main(["no-such-command"])
    assert err.value.code == 2


def test_missing_column_is_reported(toy, capsys):
    code = main(["train", "--data", str(toy), "--label-col", "missing"])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_node_limit_exit_code(monks3, tmp_path):
    out = tmp_path / "limited.json"
    code = main(
        ["train", "--data", str(monks3), "--label-col", "class",
         "--topology", "depth3", "--node-limit", "4", "--seed", "1",
         "--out", str(out)]
    )
    assert code == 3
    payload = json.loads(out.read_text())
    assert payload["solve"]["status"] == "feasible_time_limit"
    assert payload["solve"]["objective"] is not None


def test_byte_identical_reruns(monks3, tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / f"run_{tag}.json"
        mps = tmp_path / f"model_{tag}.mps"
        assert main(
            ["train", "--data", str(monks3), "--label-col", "class",
             "--topology", "depth2", "--seed", "11", "--out", str(out)]
        ) == 0
        assert main(
            ["export", "--data", str(monks3), "--label-col", "class",
             "--topology", "depth2", "--out", str(mps)]
        ) == 0
        outs.append((out.read_bytes(), mps.read_bytes()))
    assert outs[0] == outs[1]


def test_simple_branching_flag(toy, tmp_path):
    out = tmp_path / "enc2.json"
    code = main(["encode", "--data", str(toy), "--simple-branching", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert len(payload["schema"]["groups"]) == 4  # 2 + 2 original bits
    assert all(g["categories"] == ["1", "0"] for g in payload["schema"]["groups"])


def test_table_emission(toy, capsys):
    code = main(["train", "--data", str(toy), "--seed", "2", "--emit", "table"])
    assert code == 0
    out = capsys.readouterr().out
    assert "accuracy" in out and "train" in out and "leaf" in out


def test_oracle_table_emission(toy, capsys):
    code = main(["oracle", "--data", str(toy), "--emit", "table"])
    assert code == 0
    assert "objective" in capsys.readouterr().out
