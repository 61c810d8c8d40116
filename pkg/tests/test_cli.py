import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from edgemdl.cli import build_parser, main
from edgemdl.synth import default_config

EPS = 1e-9


def _bits(d):
    # KL of a point mass against an empty bin of a smoothed d-bin model
    return math.log2((1 + d * EPS) / EPS)


def _rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def _score(toy_files, out, *extra):
    schema, edges = toy_files
    return main(["score", "--schema", str(schema), "--edges", str(edges), "--out-dir", str(out), *extra])


def test_toy_fixture_golden(toy_files, tmp_path):
    assert _score(toy_files, tmp_path / "a") == 0
    out = tmp_path / "a"
    assert sorted(p.name for p in out.iterdir()) == [
        "cluster_model.json", "cluster_profiles.csv", "ranking_product.csv", "ranking_user.csv"
    ]
    l5, l20 = _bits(5), _bits(20)
    expected = {"u1": 2 * l5 + l20, "u2": 4 / 3 * (l5 - 1) + l20 / 2, "u3": 2 / 3 * l5}
    rows = _rows(out / "ranking_user.csv")
    assert [r["node"] for r in rows] == ["u1", "u2", "u3"]
    for r in rows:
        assert float(r["score"]) == pytest.approx(expected[r["node"]], abs=1e-6)
    assert [r["node"] for r in _rows(out / "ranking_product.csv")] == ["p1", "p2", "p3"]

    assert _score(toy_files, tmp_path / "b") == 0
    for name in ("ranking_user.csv", "ranking_product.csv", "cluster_model.json", "cluster_profiles.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_missing_schema(tmp_path, toy_files, capsys):
    _, edges = toy_files
    missing = tmp_path / "nope.json"
    code = main(["score", "--schema", str(missing), "--edges", str(edges), "--out-dir", str(tmp_path)])
    assert code == 1
    assert str(missing) in capsys.readouterr().err


def test_bad_edge_row_exit_1(tmp_path, toy_files, capsys):
    schema, edges = toy_files
    edges.write_text(edges.read_text() + "rates,u9,p1,7,3\n")
    assert main(["score", "--schema", str(schema), "--edges", str(edges), "--out-dir", str(tmp_path)]) == 1
    assert ":8:" in capsys.readouterr().err


def test_model_in_reproduces_rankings(toy_files, tmp_path):
    model = tmp_path / "m.json"
    assert _score(toy_files, tmp_path / "a", "--model-out", str(model), "--format", "json") == 0
    assert _score(toy_files, tmp_path / "b", "--model-in", str(model), "--format", "json") == 0
    for name in ("ranking_user.json", "ranking_product.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_top_k_flag(toy_files, tmp_path):
    assert _score(toy_files, tmp_path, "--top-k", "2") == 0
    assert len(_rows(tmp_path / "ranking_user.csv")) == 2


def test_synth_rerun_identical(tmp_path):
    args = ["synth", "--honest", "300", "--fraud", "5", "--products", "40", "--seed", "7"]
    assert main([*args, "--out-dir", str(tmp_path / "a")]) == 0
    assert main([*args, "--out-dir", str(tmp_path / "b")]) == 0
    for name in ("edges.csv", "labels.csv", "schema.json", "synth_config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def _config_file(tmp_path, **changes):
    doc = json.loads(default_config(100, 5, 20).to_json())
    doc.update(changes)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


def test_synth_bad_proportions(tmp_path):
    doc = json.loads(default_config(100, 5, 20).to_json())
    doc["archetypes"][0]["proportion"] = 0.5
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    assert main(["synth", "--config", str(path), "--out-dir", str(tmp_path / "o")]) == 1


def test_synth_empty_population(tmp_path, capsys):
    path = _config_file(tmp_path, n_users=0)
    assert main(["synth", "--config", str(path), "--out-dir", str(tmp_path / "o")]) == 1
    assert "empty population" in capsys.readouterr().err


def _perfect_ranking(tmp_path, n=1000, n_fraud=100, shuffle_seed=None):
    nodes = [f"u{i:04d}" for i in range(n)]
    labels = {v: ("fraud:x" if i < n_fraud else "honest") for i, v in enumerate(nodes)}
    if shuffle_seed is not None:
        nodes = list(np.random.default_rng(shuffle_seed).permutation(nodes))
    rk = tmp_path / "ranking.csv"
    rk.write_text("rank,node,score\n" + "".join(f"{i + 1},{v},{n - i}.000000\n" for i, v in enumerate(nodes)))
    lb = tmp_path / "labels.csv"
    lb.write_text("node,label\n" + "".join(f"{k},{v}\n" for k, v in labels.items()))
    return rk, lb


def test_eval_table(tmp_path, capsys):
    rk, lb = _perfect_ranking(tmp_path)
    assert main(["eval", "--ranking", str(rk), "--labels", str(lb), "--k", "1,10,50"]) == 0
    assert capsys.readouterr().out == "k,precision\n1,1.000\n10,1.000\n50,1.000\n"
    assert main(["eval", "--ranking", str(rk), "--labels", str(lb), "--k", "100"]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "100,1.000"


def test_eval_shuffled_near_base_rate(tmp_path, capsys):
    rk, lb = _perfect_ranking(tmp_path, shuffle_seed=0)
    assert main(["eval", "--ranking", str(rk), "--labels", str(lb), "--k", "100"]) == 0
    p = float(capsys.readouterr().out.splitlines()[-1].split(",")[1])
    assert abs(p - 0.1) <= 0.1


def test_eval_k_too_large(tmp_path):
    rk, lb = _perfect_ranking(tmp_path, n=10, n_fraud=1)
    assert main(["eval", "--ranking", str(rk), "--labels", str(lb), "--k", "11"]) == 1


def test_bench_writes_csv(tmp_path):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--edges-target", "5000", "--fractions", "0.5,1.0", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "edges,seconds" and len(lines) == 3


def test_help_lists_every_flag():
    parser = build_parser()
    sub = {a.dest: a for a in parser._actions if a.dest == "command"}["command"]
    for name, p in sub.choices.items():
        text = p.format_help()
        for action in p._actions:
            for flag in action.option_strings:
                assert flag in text
            if action.option_strings and action.default not in (None, False) and action.dest != "help":
                assert "default" in (action.help or ""), (name, action.dest)
    score_help = sub.choices["score"].format_help()
    for flag in ("--schema", "--edges", "--out-dir", "--bins", "--epsilon", "--kmax", "--seed", "--top-k",
                 "--model-in", "--model-out", "--format"):
        assert flag in score_help


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "edgemdl", "--help"], capture_output=True, text=True)
    assert done.returncode == 0 and "score" in done.stdout
