"""Command line entry point `hilb`, surface file parsing and artifact export.

Exit codes: 0 success, 1 a check reported failure or a resource limit was
hit, 2 bad input.  Every artifact is written to a temporary file in the
target directory and renamed into place.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import signal
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .errors import HilbError, IoError, ResourceLimit, SchemaError, UnknownName
from .frobenius import SurfaceModel, builtin, load_surface

REQUIRED_FIELDS = ("basis", "products", "integral")
SUBCOMMANDS = ("betti", "ring", "verify", "cr-compare", "chern", "cup")


@dataclass
class CommandSpec:
    subcommand: str
    surface: str
    n: Optional[int] = None
    relations: list = field(default_factory=list)
    poly: Optional[str] = None
    vectors: list = field(default_factory=list)
    out: Optional[str] = None
    fmt: str = "json"
    max_weight: int = 4
    time_budget: float = 600.0
    universal: bool = False
    allow_c1: bool = False


def threads() -> int:
    """Parallelism cap from HILB_THREADS (default 1)."""
    raw = os.environ.get("HILB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise SchemaError(f"HILB_THREADS must be an integer, got {raw!r}")


# input

def parse_surface_file(path) -> SurfaceModel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level must be an object")
    for key in REQUIRED_FIELDS:
        if key not in data:
            raise SchemaError(f"{path}: missing field '{key}'")
    for key in ("products", "integral", "c1", "c2"):
        for entry in _rational_entries(data.get(key, []), key):
            if int(entry.get("den", 1)) == 0:
                raise SchemaError(f"{path}: zero denominator in field '{key}'")
    try:
        return load_surface(data)
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _rational_entries(value, key):
    if not isinstance(value, list):
        raise SchemaError(f"field '{key}' must be a list")
    for item in value:
        if key == "products":
            if not (isinstance(item, list) and len(item) == 3 and isinstance(item[2], list)):
                raise SchemaError(f"field 'products' entries must be [i, j, terms], got {item!r}")
            yield from item[2]
        else:
            if not isinstance(item, dict):
                raise SchemaError(f"field '{key}' entries must be objects, got {item!r}")
            yield item


def resolve_surface(source: str) -> SurfaceModel:
    if os.path.exists(source):
        return parse_surface_file(source)
    try:
        return builtin(source)
    except UnknownName:
        raise UnknownName(f"unknown surface {source!r} (not a builtin and no such file)") from None


# output

def _frac(x) -> dict:
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator}


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def atomic_write(path, text: str):
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror}") from exc
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        os.unlink(tmp)
        raise IoError(f"cannot write {path}: {exc.strerror}") from exc


def table_to_json(table, model: SurfaceModel) -> dict:
    from .fock import format_monomial

    constants = sorted((i, j, k, v) for (i, j), prod in table.constants.items() for k, v in prod.items() if v)
    form = sorted((i, j, v) for (i, j), v in table.form.items() if v)
    return {
        "kind": "ring_table",
        "surface": table.model_name,
        "n": table.n,
        "basis": [{"label": format_monomial(model, mono), "factors": [list(f) for f in mono]} for mono in table.basis],
        "unit": {"index": table.unit_index, **_frac(table.unit_coeff)},
        "constants": [[i, j, k, v.numerator, v.denominator] for i, j, k, v in constants],
        "form": [[i, j, v.numerator, v.denominator] for i, j, v in form],
    }


def table_from_json(data: dict):
    from .taut_ring import RingTable

    try:
        basis = [tuple(tuple(f) for f in b["factors"]) for b in data["basis"]]
        constants = {}
        for i, j, k, num, den in data["constants"]:
            constants.setdefault((i, j), {})[k] = Fraction(num, den)
        form = {(i, j): Fraction(num, den) for i, j, num, den in data["form"]}
        unit = data["unit"]
        return RingTable(data["surface"], data["n"], basis, constants, form, unit["index"],
                         Fraction(unit["num"], unit["den"]))
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"malformed ring table: {exc}") from exc


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def render(obj, fmt: str = "json", model: SurfaceModel | None = None) -> str:
    """Serialize a RingTable, a betti table (list of (n, d, b)) or a JSON-ready dict."""
    from .taut_ring import RingTable

    if isinstance(obj, RingTable):
        if fmt == "csv":
            rows = sorted((i, j, k, v.numerator, v.denominator)
                          for (i, j), prod in obj.constants.items() for k, v in prod.items() if v)
            return _csv(rows, ["i", "j", "k", "num", "den"])
        if model is None:
            raise SchemaError("exporting a ring table as JSON needs its surface model")
        return dumps(table_to_json(obj, model))
    if isinstance(obj, list):
        rows = sorted(obj)
        if fmt == "csv":
            return _csv(rows, ["n", "d", "betti"])
        return dumps({"kind": "betti", "rows": [{"n": n, "d": d, "betti": b} for n, d, b in rows]})
    if fmt == "csv":
        raise SchemaError("CSV export is available for ring and betti tables only")
    return dumps(obj)


def export_table(obj, path, fmt: str = "json", model: SurfaceModel | None = None):
    if fmt not in ("json", "csv"):
        raise SchemaError(f"unknown format {fmt!r}")
    atomic_write(path, render(obj, fmt, model))


# resource budget

@contextmanager
def time_budget(seconds: float):
    if not seconds or seconds <= 0 or not hasattr(signal, "SIGALRM"):
        yield
        return

    def handler(signum, frame):
        raise ResourceLimit(f"time budget of {seconds:g} s exceeded")

    old = signal.signal(signal.SIGALRM, handler)
    signal.setitimer(signal.ITIMER_REAL, seconds)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


# subcommands

def _cmd_betti(spec: CommandSpec, model):
    from .goettsche import betti_table

    return betti_table(model.betti(), spec.n), 0


def _cmd_ring(spec, model):
    from .taut_ring import ring_table

    return ring_table(model, spec.n), 0


def _cmd_verify(spec, model):
    from .heisenberg import RELATION_IDS, check_relation

    lines, ok = [], True
    for rel in spec.relations:
        if rel == "ring":
            from .taut_ring import ring_table, verify_ring_table

            if spec.n is None:
                raise SchemaError("relation 'ring' needs --n")
            checks = verify_ring_table(model, ring_table(model, spec.n))
            for name, (passed, detail) in checks.items():
                ok &= bool(passed)
                lines.append({"relation": f"ring:{name}", "passed": bool(passed), "detail": str(detail)})
            continue
        rep = check_relation(rel, model, spec.max_weight)
        ok &= rep.passed
        lines.append({"relation": rep.relation, "passed": rep.passed, "checked": rep.checked,
                      "residual": rep.residual})
        print(rep.line(), file=sys.stderr)
    return {"kind": "verify", "surface": model.name, "max_weight": spec.max_weight, "results": lines}, 0 if ok else 1


def _cmd_cr(spec, model):
    from .cr_orbifold import compare_rings

    rep = compare_rings(model, spec.n, allow_c1=spec.allow_c1)
    scalars = [{"m": m, "rational": str(r), "i_power": p % 4} for m, (r, p) in sorted(rep.cycle_scalars.items())]
    out = {"kind": "cr_compare", "surface": model.name, "n": spec.n, "iso_found": rep.iso_found,
           "field": rep.field, "residual": rep.residual, "cycle_scalars": scalars}
    return out, 0 if rep.iso_found else 1


def _cmd_chern(spec, model):
    from .egl_cobordism import chern_number, universal_polynomial

    if spec.universal:
        up = universal_polynomial(spec.n, spec.poly, workers=threads())
        terms = [{"a": a, "b": b, **_frac(v)} for (a, b), v in sorted(up.terms.items())]
        return {"n": spec.n, "terms": terms}, 0
    val = chern_number(model, spec.n, spec.poly)
    return {"kind": "chern", "surface": model.name, "n": spec.n, "poly": spec.poly, "value": _frac(val)}, 0


def _read_vector(model, text):
    from .fock import parse_monomial, vector_from_json

    if os.path.exists(text):
        try:
            data = json.loads(Path(text).read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{text}: invalid JSON at line {exc.lineno}") from exc
        return vector_from_json(model, data)
    return parse_monomial(model, text)


def _cmd_cup(spec, model):
    from .fock import weight, vector_to_json
    from .taut_ring import cup

    v, w = (_read_vector(model, t) for t in spec.vectors)
    weights = {weight(m) for m in v.terms} | {weight(m) for m in w.terms}
    if len(weights) > 1:
        raise SchemaError(f"vectors live in different X^[n]: weights {sorted(weights)}")
    n = spec.n if spec.n is not None else (weights.pop() if weights else 0)
    prod = cup(model, n, v, w)
    return {"kind": "cup", "surface": model.name, "n": n, "vector": vector_to_json(model, prod)}, 0


HANDLERS = {"betti": _cmd_betti, "ring": _cmd_ring, "verify": _cmd_verify, "cr-compare": _cmd_cr,
            "chern": _cmd_chern, "cup": _cmd_cup}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SchemaError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hilb", description="Cohomology of Hilbert schemes of points on surfaces.")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp, need_n=True):
        sp.add_argument("--surface", required=True, help="builtin name or path to a surface JSON file")
        sp.add_argument("--n", type=int, required=need_n)
        sp.add_argument("--out", help="write the artifact here instead of stdout")
        sp.add_argument("--time-budget", type=float, default=600.0, help="seconds (0 disables)")

    b = sub.add_parser("betti")
    common(b)
    b.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    r = sub.add_parser("ring")
    common(r)
    r.add_argument("--format", dest="fmt", choices=("csv", "json"), default="json")
    v = sub.add_parser("verify")
    common(v, need_n=False)
    v.add_argument("--relations", required=True, help="comma separated relation ids, or 'ring' with --n")
    v.add_argument("--max-weight", type=int, default=4)
    c = sub.add_parser("cr-compare")
    common(c)
    c.add_argument("--allow-c1", action="store_true")
    ch = sub.add_parser("chern")
    common(ch)
    ch.add_argument("--poly", required=True)
    ch.add_argument("--universal", action="store_true")
    cu = sub.add_parser("cup")
    common(cu, need_n=False)
    cu.add_argument("--v", required=True, help="monomial like 'q2(1)' or a vector JSON file")
    cu.add_argument("--w", required=True)
    return p


def parse_args(argv) -> CommandSpec:
    from .heisenberg import RELATION_IDS

    ns = build_parser().parse_args(argv)
    spec = CommandSpec(ns.subcommand, ns.surface, ns.n, out=ns.out, time_budget=ns.time_budget)
    spec.fmt = getattr(ns, "fmt", "json")
    if spec.n is not None and spec.n < 0:
        raise SchemaError("--n must be non-negative")
    if ns.subcommand == "verify":
        spec.relations = [r.strip() for r in ns.relations.split(",") if r.strip()]
        bad = [r for r in spec.relations if r not in RELATION_IDS + ("ring",)]
        if bad or not spec.relations:
            raise UnknownName(f"unknown relation id(s) {bad}; choose from {', '.join(RELATION_IDS + ('ring',))}")
        spec.max_weight = ns.max_weight
        if spec.max_weight < 1:
            raise SchemaError("--max-weight must be positive")
    if ns.subcommand == "chern":
        from .egl_cobordism import parse_chern_polynomial

        spec.poly, spec.universal = ns.poly, ns.universal
        parse_chern_polynomial(ns.poly)
    if ns.subcommand == "cr-compare":
        spec.allow_c1 = ns.allow_c1
    if ns.subcommand == "cup":
        spec.vectors = [ns.v, ns.w]
    return spec


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        spec = parse_args(argv)
        model = resolve_surface(spec.surface)
        with time_budget(spec.time_budget):
            result, code = HANDLERS[spec.subcommand](spec, model)
        text = render(result, spec.fmt, model)
        if spec.out:
            atomic_write(spec.out, text)
        else:
            sys.stdout.write(text)
        return code
    except ResourceLimit as exc:
        print(f"hilb: resource: {exc}", file=sys.stderr)
        return 1
    except HilbError as exc:
        print(f"hilb: error: {exc}", file=sys.stderr)
        return exc.code
    except RecursionError:
        print("hilb: resource: recursion limit", file=sys.stderr)
        return 1
    except MemoryError:
        print("hilb: resource: out of memory", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
