import json
from pathlib import Path

import pytest

from chora.cli import main

ROOT = Path(__file__).resolve().parents[1]
FIX = ROOT / "fixtures"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", FIX / "crossing.json")
    assert code == 0 and json.loads(out)["ok"]


def test_eval_prints_the_point(capsys):
    code, out, _ = run(capsys, "eval", FIX / "diffgate.json", "--model", "euclid2", "--scale", "eps=0.5",
                       "--in", "x=0,0", "--in", "u=1,0", "--in", "v=0,1")
    assert (code, out) == (0, "(-0.5,1)\n")


def test_identities_heis(capsys):
    code, out, _ = run(capsys, "identities", "--model", "heis1", "--samples", 1000, "--tol", 1e-9, "--seed", 0)
    rep = json.loads(out)
    assert code == 0 and rep["pass"] and all(rep["symbolic"].values())


@pytest.mark.parametrize("argv", [[], ["bogus"], ["eval", "f.json"], ["atlas"], ["limits", "f", "--model"]])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "usage" in err


def test_input_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert run(capsys, "validate", bad)[0] == 3
    assert run(capsys, "validate", tmp_path / "missing.json")[0] == 3
    assert run(capsys, "eval", FIX / "crossing.json", "--model", "torus")[0] == 3
    code, _, err = run(capsys, "eval", FIX / "crossing.json", "--model", "euclid2", "--scale", "eps=0.5",
                       "--in", "x=0,0")
    assert code == 3 and "u" in err


def test_rejected_move_is_a_verification_failure(capsys):
    code, _, err = run(capsys, "move", FIX / "crossing.json", "--kind", "r1", "--site", "n2")
    assert code == 1 and "rejected" in err


def test_move_normalize_render_to_files(capsys, tmp_path):
    out = tmp_path / "m.json"
    assert run(capsys, "move", FIX / "crossing.json", "--kind", "to-difference", "--site", "n2", "-o", out)[0] == 0
    assert run(capsys, "validate", out)[0] == 0
    norm = tmp_path / "n.json"
    assert run(capsys, "normalize", FIX / "nested" / "three-choroi.json", "-o", norm)[0] == 0
    assert set(json.loads(norm.read_text())["gates"][0]) >= {"kind"}
    dot = tmp_path / "c.dot"
    assert run(capsys, "render", FIX / "crossing.json", "-o", dot)[0] == 0
    assert dot.read_text().startswith("digraph")


def test_limits_and_residue(capsys):
    code, out, _ = run(capsys, "limits", FIX / "diffgate.json", "--model", "euclid2", "--var", "eps",
                       "--steps", 12, "--samples", 20)
    assert code == 0 and abs(json.loads(out)["slope"] - 1) < 0.1
    code, out, _ = run(capsys, "residue", "--model", "heis1", "--schedule", "0.5,0.25,0.125")
    assert code == 0 and max(json.loads(out)["supErrors"]) == 0
    assert run(capsys, "limits", FIX / "diffgate.json", "--model", "euclid2", "--var", "eps",
               "--factor", 2)[0] == 3


def test_atlas_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "atlas", "metrics", FIX / "atlas" / "relation.json")
    assert code == 0 and abs(json.loads(out)["accuracy"] - 0.2) < 1e-12
    code, out, _ = run(capsys, "atlas", "gh", FIX / "atlas" / "x2.json", FIX / "atlas" / "y2.json")
    assert code == 0 and abs(json.loads(out)["value"] - 0.4) < 1e-12
    assert run(capsys, "atlas", "generalize", FIX / "atlas" / "relation.json", "--eps", 0, "--mu", 0)[0] == 0
    sparse = json.loads((FIX / "atlas" / "relation.json").read_text())
    sparse["pairs"] = sparse["pairs"][:1]
    (tmp_path / "sparse.json").write_text(json.dumps(sparse))
    code, _, err = run(capsys, "atlas", "generalize", tmp_path / "sparse.json", "--eps", 0.5, "--mu", 0.5)
    assert code == 3 and "dense" in err
    code, out, _ = run(capsys, "atlas", "propacc", FIX / "atlas" / "relation.json", "--eps", 0.1, "--mu", 0.1)
    assert code == 1 and {v["item"] for v in json.loads(out)["violations"]} == {"c-lower", "d-lower"}
    assert run(capsys, "atlas", "zoom", "--h", 1e-3)[0] == 0
    assert run(capsys, "atlas", "foveal", "--eps", "0.5,0.25")[0] == 0


SUBCOMMANDS = [["validate"], ["eval"], ["move"], ["normalize"], ["limits"], ["identities"], ["residue"],
               ["render"], ["atlas"], ["atlas", "metrics"], ["atlas", "generalize"], ["atlas", "propacc"],
               ["atlas", "gh"], ["atlas", "zoom"], ["atlas", "foveal"]]


@pytest.mark.parametrize("sub", SUBCOMMANDS, ids=" ".join)
def test_help(capsys, sub):
    code, out, _ = run(capsys, *sub, "--help")
    assert code == 0 and out.startswith("usage")


def test_reports_are_deterministic(capsys):
    argv = ["limits", FIX / "chora.json", "--model", "sphere", "--var", "eps", "--scale", "mu=0.5",
            "--steps", 8, "--samples", 10, "--seed", 4]
    first = run(capsys, *argv)
    assert first == run(capsys, *argv)
    assert run(capsys, "identities", "--model", "sphere", "--samples", 50) == \
        run(capsys, "identities", "--model", "sphere", "--samples", 50)
