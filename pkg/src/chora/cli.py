"""Command line entry point: ``chora <subcommand> ...``.

Exit codes: 0 success or pass, 1 verification failure, 2 usage error,
3 input error.  Reports go to standard output as JSON unless ``-o`` names
a file; messages go to standard error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import atlas as A
from . import evaluate as E
from . import models as M
from .diagram import ParseError, SchemaError, parse, serialize, to_dot, validate
from .errors import ChoraError, DivergenceDetected, HypothesisViolated, ScaleMismatch, SiteMismatch
from .rewrite import apply_move, normalize_choroi
from .scale import ScaleError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3


class InputError(Exception):
    """Bad file or bad value supplied on the command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _json(obj) -> str:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return json.dumps(obj, sort_keys=True, indent=2, default=default) + "\n"


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load_diagram(path: str):
    try:
        return parse(_read(path))
    except (ParseError, SchemaError, ScaleError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_json(path: str):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


def _model(name: str) -> M.Model:
    try:
        return M.get_model(name)
    except M.UnknownModel as exc:
        raise InputError(str(exc)) from None


def _kv(items, convert):
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise InputError(f"expected name=value, got {item!r}")
        try:
            out[key] = convert(val)
        except ValueError as exc:
            raise InputError(f"bad value for {key}: {exc}") from None
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


# --- subcommands --------------------------------------------------------------


def cmd_validate(args) -> int:
    d = _load_diagram(args.file)
    rep = validate(d)
    _emit(_json({"file": args.file, **rep.to_json()}), args.out)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_eval(args) -> int:
    d = _load_diagram(args.file)
    model = _model(args.model)
    scales = _kv(args.scale, float)
    points = _kv(args.inp, lambda s: M.parse_point(s, model))
    try:
        out = E.io_function(d, model, scales, hidden=args.hidden)(points)
    except KeyError as exc:
        raise InputError(str(exc)) from None
    if len(out) == 1 and not args.json:
        _emit(M.format_point(next(iter(out.values()))) + "\n", args.out)
    else:
        _emit(_json({k: M.format_point(v) for k, v in out.items()}), args.out)
    return EXIT_OK


def cmd_move(args) -> int:
    d = _load_diagram(args.file)
    site = [s for part in args.site for s in part.split(",") if s]
    opts = {"way": args.way} if args.way is not None else {}
    try:
        nd = apply_move(d, args.kind, site, **opts)
    except (SiteMismatch, ScaleMismatch, HypothesisViolated) as exc:
        print(f"move rejected: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(serialize(nd), args.out)
    return EXIT_OK


def cmd_normalize(args) -> int:
    d = _load_diagram(args.file)
    try:
        nd = normalize_choroi(d)
    except HypothesisViolated as exc:
        print(f"cannot normalize: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(serialize(nd), args.out)
    return EXIT_OK


def cmd_limits(args) -> int:
    d = _load_diagram(args.file)
    model = _model(args.model)
    if args.steps < 2 or not (0 < args.factor < 1) or args.start <= 0:
        raise InputError("need --steps >= 2, 0 < --factor < 1 and --from > 0")
    schedule = [args.start * args.factor ** k for k in range(args.steps)]
    try:
        rep = E.converge_scan(d, model, args.var, schedule, args.samples, args.seed,
                              fixed_scales=_kv(args.scale, float))
    except DivergenceDetected as exc:
        _emit(_json({"name": f"scan:{args.var}", "pass": False, "error": str(exc)}), args.out)
        return EXIT_FAIL
    _emit(_json(rep.to_json()), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_identities(args) -> int:
    model = _model(args.model)
    rep = E.check_identities(model, args.samples, args.tol, args.seed)
    doc = rep.to_json()
    doc["symbolic"] = E.symbolic_identities()
    _emit(_json(doc), args.out)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_residue(args) -> int:
    model = _model(args.model)
    schedule = _floats(args.schedule) if args.schedule else None
    try:
        rep = E.residue_convergence(model, args.mu, args.lam, schedule, args.samples, args.seed)
    except DivergenceDetected as exc:
        _emit(_json({"name": f"residue:{model.name}", "pass": False, "error": str(exc)}), args.out)
        return EXIT_FAIL
    _emit(_json(rep.to_json()), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_render(args) -> int:
    _emit(to_dot(_load_diagram(args.file)), args.out)
    return EXIT_OK


# --- atlas --------------------------------------------------------------------


def _space(doc, base: Path) -> A.FiniteMetricSpace:
    if isinstance(doc, str):
        doc = _load_json(str(base / doc))
    try:
        return A.FiniteMetricSpace.from_json(doc)
    except ValueError as exc:
        raise InputError(f"bad metric space: {exc}") from None


def _relation(path: str) -> A.MapRelation:
    doc = _load_json(path)
    base = Path(path).parent
    try:
        src, tgt = _space(doc["source"], base), _space(doc["target"], base)
        return A.MapRelation.from_json(doc, src, tgt)
    except KeyError as exc:
        raise InputError(f"{path}: relation file lacks field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def cmd_atlas(args) -> int:
    which = args.atlas_cmd
    if which == "metrics":
        _emit(_json(A.metrics(_relation(args.relation))), args.out)
        return EXIT_OK
    if which == "generalize":
        bar = A.generalize(_relation(args.relation), args.eps, args.mu)
        _emit(_json(bar.to_json()), args.out)
        return EXIT_OK
    if which == "propacc":
        rep = A.check_propacc1(_relation(args.relation), args.eps, args.mu)
        _emit(_json(rep.to_json()), args.out)
        return EXIT_OK if rep.ok else EXIT_FAIL
    if which == "gh":
        X = _space(_load_json(args.x), Path("."))
        Y = _space(_load_json(args.y), Path("."))
        value = A.gh_bound(X, Y, args.mode, args.budget, args.seed)
        _emit(_json({"name": "gh", "mode": args.mode, "value": value}), args.out)
        return EXIT_OK
    model = _model(args.model)
    zs = A.zoom_from_model(model, h=args.h)
    eps = _floats(args.eps)
    if any(not (0 < e <= 1) for e in eps):
        raise InputError("scales must lie in (0, 1]")
    if which == "zoom":
        rows = [{"eps": e, "accuracy": zs.accuracy(e)} for e in eps]
        _emit(_json({"name": "zoom", "model": model.name, "h": args.h, "rows": rows}), args.out)
        return EXIT_OK
    rep = A.foveal_properties_check(zs, _floats(args.mu), eps)
    _emit(_json(rep.to_json()), args.out)
    return EXIT_OK if rep.ok else EXIT_FAIL


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chora", description="Tangle diagrams with dilation decorations.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("-o", "--out", help="write the report to this file")
        sp.set_defaults(fn=fn)
        return sp

    sp = add("validate", cmd_validate, "Check a diagram file for structural errors.")
    sp.add_argument("file")

    sp = add("eval", cmd_eval, "Evaluate a diagram's io function in a model.")
    sp.add_argument("file")
    sp.add_argument("--model", required=True)
    sp.add_argument("--scale", action="append", metavar="NAME=VALUE")
    sp.add_argument("--in", dest="inp", action="append", metavar="NAME=COORDS")
    sp.add_argument("--hidden", action="store_true", help="also print garbage outputs")
    sp.add_argument("--json", action="store_true", help="always print a JSON object")

    sp = add("move", cmd_move, "Apply one exact move at an explicit site.")
    sp.add_argument("file")
    sp.add_argument("--kind", required=True)
    sp.add_argument("--site", action="append", required=True, help="ids, comma separated or repeated")
    sp.add_argument("--way", type=int, choices=(1, 2), help="elementary chora decomposition variant")

    sp = add("normalize", cmd_normalize, "Rewrite nested choroi into difference gates and elementary choroi.")
    sp.add_argument("file")

    sp = add("limits", cmd_limits, "Scan a diagram's io function as one scale goes to 0.")
    sp.add_argument("file")
    sp.add_argument("--model", required=True)
    sp.add_argument("--var", required=True)
    sp.add_argument("--from", dest="start", type=float, default=0.5)
    sp.add_argument("--steps", type=int, default=16)
    sp.add_argument("--factor", type=float, default=0.5)
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scale", action="append", metavar="NAME=VALUE", help="other scales, held fixed")

    sp = add("identities", cmd_identities, "Check the irq axioms and the difference/sum identities.")
    sp.add_argument("--model", required=True)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("residue", cmd_residue, "Scan the approximate Reidemeister III residue.")
    sp.add_argument("--model", required=True)
    sp.add_argument("--mu", type=float, default=0.5)
    sp.add_argument("--lambda", dest="lam", type=float, default=0.5)
    sp.add_argument("--schedule", help="comma-separated decreasing scales")
    sp.add_argument("--samples", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("render", cmd_render, "Write a Graphviz DOT rendering.")
    sp.add_argument("file")

    sp = add("atlas", cmd_atlas, "Maps between metric spaces and zoom sequences.")
    asub = sp.add_subparsers(dest="atlas_cmd", required=True, parser_class=_Parser)

    def aadd(name, help_):
        ap = asub.add_parser(name, help=help_, description=help_)
        ap.add_argument("-o", "--out", help="write the report to this file")
        return ap

    ap = aadd("metrics", "Accuracy, precision and resolution of a relation.")
    ap.add_argument("relation")
    for name in ("generalize", "propacc"):
        ap = aadd(name, "Cartographic generalization of a relation." if name == "generalize"
                  else "Check the accuracy inequalities of a generalization.")
        ap.add_argument("relation")
        ap.add_argument("--eps", type=float, required=True)
        ap.add_argument("--mu", type=float, required=True)
    ap = aadd("gh", "Gromov-Hausdorff bound between two finite spaces.")
    ap.add_argument("x")
    ap.add_argument("y")
    ap.add_argument("--mode", choices=("exact", "stochastic"), default="exact")
    ap.add_argument("--budget", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap = aadd("zoom", "Measured zoom modulus of a model's charts.")
    ap.add_argument("--model", default="euclid2")
    ap.add_argument("--h", type=float, default=0.0)
    ap.add_argument("--eps", default="0.5,0.25,0.125")
    ap = aadd("foveal", "Accuracy bounds of foveal maps on a grid of scales.")
    ap.add_argument("--model", default="euclid2")
    ap.add_argument("--h", type=float, default=1e-3)
    ap.add_argument("--eps", default=",".join(str(2.0 ** -k) for k in range(1, 11)))
    ap.add_argument("--mu", default="0.5,0.25")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except InputError as exc:
        print(f"chora: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ChoraError, ValueError, KeyError, ArithmeticError) as exc:
        print(f"chora: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
