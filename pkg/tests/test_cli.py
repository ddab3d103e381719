import json
import math

import numpy as np
import pytest

from bnexact.cli import EXIT_CAP, EXIT_INPUT, EXIT_NUMERIC, compare_results, main
from bnexact.engine import read_table_dump
from bnexact.oracle import count_dags

RESULT_KEYS = {"variables", "n", "m", "k", "prior", "method", "backend", "log_evidence",
               "runtime_seconds", "rr_h_relative_gap"}


def _run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


@pytest.fixture
def empty2(tmp_path):
    p = tmp_path / "empty2.csv"
    p.write_text("A,B\n")
    return p


@pytest.fixture
def small(tmp_path):
    rng = np.random.default_rng(7)
    p = tmp_path / "small.csv"
    rows = rng.integers(0, 2, size=(40, 4))
    rows[:, 1] = rows[:, 0] ^ (rng.random(40) < 0.1)
    p.write_text("a,b,c,d\n" + "\n".join(",".join(map(str, r)) for r in rows) + "\n")
    return p


def test_edges_empty_two_variables(tmp_path, empty2, capsys):
    code, doc = _run(tmp_path, "edges", "--data", str(empty2), "--max-indegree", "1")
    assert code == 0
    assert set(doc) == RESULT_KEYS | {"edges"}
    assert np.allclose(doc["edges"], [[0, 1 / 3], [1 / 3, 0]], atol=1e-15)
    out = capsys.readouterr().out
    assert out.startswith("log_evidence")
    assert "A -> B" in out


def test_default_k_warns(tmp_path, small, caplog):
    code, doc = _run(tmp_path, "edges", "--data", str(small))
    assert code == 0 and doc["k"] == 3
    assert "max-indegree" in caplog.text


def test_edges_match_oracle(tmp_path, data_dir):
    iris = str(data_dir / "iris.csv")
    _, eng = _run(tmp_path, "edges", "--data", iris, "--max-indegree", "4", name="e.json")
    _, orc = _run(tmp_path, "oracle", "--data", iris, "--max-indegree", "4", name="o.json")
    assert orc["method"] == "oracle" and orc["rr_h_relative_gap"] is None
    assert np.max(np.abs(np.array(eng["edges"]) - orc["edges"])) < 1e-9
    assert eng["log_evidence"] == pytest.approx(orc["log_evidence"], rel=1e-12)


def test_evidence_counts_dags(tmp_path):
    p = tmp_path / "e3.csv"
    p.write_text("x,y,z\n")
    for k in (1, 2):
        code, doc = _run(tmp_path, "evidence", "--data", str(p), "--max-indegree", str(k))
        assert code == 0
        assert "edges" not in doc
        assert doc["log_evidence"] == pytest.approx(math.log(count_dags(3, k)), rel=1e-14)


def test_feature_command_matches_edges(tmp_path, small):
    feat = tmp_path / "f.json"
    feat.write_text(json.dumps({"required_edges": [["a", "b"]]}))
    _, edges = _run(tmp_path, "edges", "--data", str(small), "--max-indegree", "2", name="e.json")
    code, doc = _run(tmp_path, "feature", "--data", str(small), "--max-indegree", "2",
                     "--feature", str(feat), name="fr.json")
    assert code == 0
    assert doc["feature_posterior"] == pytest.approx(edges["edges"][0][1], abs=1e-9)
    _, orc = _run(tmp_path, "oracle", "--data", str(small), "--max-indegree", "2",
                  "--feature", str(feat), name="o.json")
    assert orc["feature_posterior"] == pytest.approx(doc["feature_posterior"], abs=1e-9)


def test_order_modular_prior(tmp_path, small):
    _, uni = _run(tmp_path, "edges", "--data", str(small), "--max-indegree", "3", name="u.json")
    _, om = _run(tmp_path, "edges", "--data", str(small), "--max-indegree", "3",
                 "--prior", "order-modular", name="om.json")
    assert om["prior"] == "order_modular"
    _, mx, _ = compare_results(uni, om)
    assert mx > 1e-3


def test_compare_self(tmp_path, small, capsys):
    _run(tmp_path, "edges", "--data", str(small), "--max-indegree", "2", name="e.json")
    capsys.readouterr()
    scatter = tmp_path / "s.csv"
    code = main(["compare", str(tmp_path / "e.json"), str(tmp_path / "e.json"), "--out", str(scatter)])
    assert code == 0
    lines = scatter.read_text().splitlines()
    assert lines[0] == "u,v,p_a,p_b"
    assert len(lines) == 1 + 12
    assert "max_abs_diff 0 " in capsys.readouterr().out


def test_compare_mismatch(tmp_path, small, empty2):
    _run(tmp_path, "edges", "--data", str(small), "--max-indegree", "2", name="a.json")
    _run(tmp_path, "edges", "--data", str(empty2), "--max-indegree", "1", name="b.json")
    assert main(["compare", str(tmp_path / "a.json"), str(tmp_path / "b.json")]) == EXIT_INPUT


def test_oracle_cap(tmp_path, data_dir):
    code = main(["oracle", "--data", str(data_dir / "synthetic17.csv"), "--max-indegree", "2"])
    assert code == EXIT_CAP


def test_input_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,\n")
    assert main(["edges", "--data", str(bad), "--max-indegree", "1"]) == EXIT_INPUT
    assert main(["edges", "--data", str(tmp_path / "missing.csv"), "--max-indegree", "1"]) == EXIT_INPUT
    ok = tmp_path / "ok.csv"
    ok.write_text("a,b\n1,0\n")
    assert main(["edges", "--data", str(ok), "--max-indegree", "5"]) == EXIT_INPUT
    feat = tmp_path / "f.json"
    feat.write_text("{not json")
    assert main(["feature", "--data", str(ok), "--max-indegree", "1", "--feature", str(feat)]) == EXIT_INPUT


def test_numerical_breakdown_exit(tmp_path, monkeypatch):
    from bnexact import engine
    from bnexact.errors import NumericalBreakdown

    def broken(*a, **kw):
        raise NumericalBreakdown("forced")

    monkeypatch.setattr(engine, "all_edge_posteriors", broken)
    ok = tmp_path / "ok.csv"
    ok.write_text("a,b\n1,0\n")
    assert main(["edges", "--data", str(ok), "--max-indegree", "1"]) == EXIT_NUMERIC


def test_score_cache_and_dump(tmp_path, small):
    cache = tmp_path / "scores.json"
    args = ["edges", "--data", str(small), "--max-indegree", "2", "--score-cache", str(cache),
            "--dump-tables"]
    _, first = _run(tmp_path, *args, name="r1.json")
    assert cache.exists()
    _, second = _run(tmp_path, *args, name="r2.json")
    assert first["edges"] == second["edges"]
    n, k, tid, values = read_table_dump(tmp_path / "r1.rr.bin")
    assert (n, k, tid, len(values)) == (4, 2, 0, 16)


def test_stdout_json_when_no_out(small, capsys):
    assert main(["evidence", "--data", str(small), "--max-indegree", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["k"] == 1
