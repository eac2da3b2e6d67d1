"""Regenerate the JSON fixtures in this directory: ``python3 fixtures/generate.py``."""
import json
from pathlib import Path

from chora import corpus
from chora.atlas import FiniteMetricSpace
from chora.diagram import serialize
from chora.rewrite import residue_diagram

HERE = Path(__file__).resolve().parent


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _space(labels, d) -> dict:
    return FiniteMetricSpace(labels, d).to_json()


def main():
    _write(HERE / "crossing.json", serialize(corpus.crossing()))
    _write(HERE / "diffgate.json", serialize(corpus.diffgate()))
    _write(HERE / "chora.json", serialize(corpus.chora_fixture()))
    r3, _site = corpus.r3_chora_fixture()
    _write(HERE / "r3-chora.json", serialize(r3))
    _write(HERE / "residue.json", serialize(residue_diagram()))
    for name, d in corpus.nested_corpus().items():
        _write(HERE / "nested" / f"{name}.json", serialize(d))

    atlas = {
        "x2.json": _space(["p", "q"], [[0, 1], [1, 0]]),
        "y2.json": _space(["p'", "q'"], [[0, 1.4], [1.4, 0]]),
        "relation.json": {
            "source": _space(["p", "q"], [[0, 1], [1, 0]]),
            "target": _space(["p'", "q'"], [[0, 1.2], [1.2, 0]]),
            "pairs": [["p", "p'"], ["q", "q'"]],
        },
    }
    for name, doc in atlas.items():
        _write(HERE / "atlas" / name, json.dumps(doc, sort_keys=True, indent=2) + "\n")


if __name__ == "__main__":
    main()
