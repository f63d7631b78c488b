import json

import pytest

from lame_dessins import cli
from lame_dessins.cli import Cache, RunConfig, main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_trees_degree_seven(capsys):
    code, out = run(capsys, "trees", "--degree", "7", "--no-cache")
    data = json.loads(out)
    assert code == 0 and data["schema"] == "lame-dessins/1"
    assert [r["signature"] for r in data["trees"]] == [0, 2, 0, 2, 2]
    assert [r["predicted"]["e"] for r in data["trees"]] == [2, 3, 2, 3, 3]
    assert data["census"]["measured"] == data["census"]["predicted"] == [5, 2, 3]


def test_trees_small_degrees(capsys):
    _, out = run(capsys, "trees", "--degree", "3")
    assert len(json.loads(out)["trees"]) == 1
    _, out = run(capsys, "trees", "--degree", "6", "--format", "markdown")
    assert "[2,2,2] not primitive" in out
    assert sum(l.startswith("| [") for l in out.splitlines()) == 3


def test_census_inconsistency_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(cli, "count_classes", lambda p: (99, 0, 99))
    code, _ = run(capsys, "trees", "--degree", "7")
    assert code == cli.EXIT_INCONSISTENT


def test_precision_floor(capsys):
    code = main(["solve", "--degree", "3", "--precision", "64", "--no-cache"])
    assert code == cli.EXIT_INCONSISTENT
    with pytest.raises(ValueError):
        RunConfig(precision_bits=100)


def test_solve_is_deterministic_and_cached(capsys, tmp_path):
    code, first = run(capsys, "solve", "--degree", "3", "--cache-dir", str(tmp_path))
    assert code == 0
    data = json.loads(first)
    (sol,) = data["solutions"]
    assert sol["exact_coefficients"] == {"q": ["1"], "g": ["1"], "f": ["-1", "0", "0", "1"], "h": ["1"]}
    assert list(tmp_path.glob("solution-N3-*.json"))
    _, second = run(capsys, "solve", "--degree", "3", "--cache-dir", str(tmp_path))
    _, fresh = run(capsys, "solve", "--degree", "3", "--no-cache")
    assert first == second == fresh


def test_corrupted_cache_is_recomputed(capsys, tmp_path):
    _, first = run(capsys, "solve", "--degree", "5", "--cache-dir", str(tmp_path))
    for path in tmp_path.glob("solution-N5-*.json"):
        entry = json.loads(path.read_text())
        entry["payload"]["residual_exponent"] = -1
        path.write_text(json.dumps(entry))
    (tmp_path / "garbage.tmp").write_text("not json")
    code, again = run(capsys, "solve", "--degree", "5", "--cache-dir", str(tmp_path))
    assert code == 0 and again == first


def test_cache_roundtrip_and_truncation(tmp_path):
    c = Cache(tmp_path)
    key = cli._key("solution", 3, RunConfig(), "[1,1,1]")
    c.put(key, {"a": ["1.5", "0"]})
    assert c.get(key) == {"a": ["1.5", "0"]}
    path = next(tmp_path.glob("*.json"))
    path.write_text(path.read_text()[:20])
    assert c.get(key) is None
    assert not list(tmp_path.glob("*.tmp"))


def test_env_cache_dir(monkeypatch, tmp_path):
    monkeypatch.setenv("LAME_CACHE_DIR", str(tmp_path))
    assert cli.default_cache_dir() == tmp_path


def test_incomplete_exit_code(capsys, monkeypatch):
    from lame_dessins.errors import Incomplete
    from lame_dessins.trees import Tree

    def boom(N, cfg=None):
        raise Incomplete("missing", solutions=[], missing=[Tree(1, 2, 10)])

    monkeypatch.setattr("lame_dessins.belyi.solve_all", boom)
    code, out = run(capsys, "solve", "--degree", "13", "--no-cache")
    assert code == cli.EXIT_INCOMPLETE
    assert json.loads(out)["missing"] == ["[1,2,10]"]


def test_certify_degree_three(capsys, tmp_path):
    code, out = run(capsys, "certify", "--degree", "3", "--cache-dir", str(tmp_path))
    data = json.loads(out)
    assert code == 0
    (t,) = data["trees"]
    checks = {c["quantity"]: c["measured"] for c in t["checks"]}
    assert checks["torsion_order"] == 3
    assert checks["theta_vanishes_at_P"] is True
    assert checks["projective_monodromy_order"] == 6
    _, again = run(capsys, "certify", "--degree", "3", "--cache-dir", str(tmp_path))
    assert again == out


def test_contradiction_exit_code(capsys, tmp_path):
    cache = Cache(tmp_path)
    key = cli._key("certify", 3, RunConfig(cache_dir=tmp_path))
    cache.put(key, {"schema": cli.SCHEMA, "command": "certify", "N": 3,
                    "trees": [{"tree": "[1,1,1]", "verdict": "fail", "checks": []}]})
    code, _ = run(capsys, "certify", "--degree", "3", "--cache-dir", str(tmp_path))
    assert code == cli.EXIT_CONTRADICTION


@pytest.mark.parametrize("p,row,value", [(13, "s=0: e=(p+1)/2", 7), (11, "s=0: e=(p+1)/12", 1)])
def test_report_table_rows(capsys, tmp_path, p, row, value):
    code, out = run(capsys, "report", "--prime", str(p), "--cache-dir", str(tmp_path))
    assert code == 0
    line = next(l for l in out.splitlines() if row in l)
    assert f"{value} [paper], {value} [predicted]" in line


def test_report_cells_are_tagged(capsys, tmp_path):
    _, out = run(capsys, "report", "--prime", "13", "--cache-dir", str(tmp_path))
    for line in out.splitlines():
        if not line.startswith("|") or set(line) <= set("|-"):
            continue
        cells = [c.strip() for c in line.strip("|").split("|")]
        for c in cells[1:]:
            if any(ch.isdigit() for ch in c) and not c.startswith("["):
                assert "[" in c, line
