"""Command-line driver: ``diraclab run | list | selfcheck``.

Exit codes: 0 all verdicts pass, 2 some verdict fails, 1 malformed input.
"""

import argparse
import json
import math
import os
import platform
import re
import sys
import time

import numpy as np

from . import _kernels
from .scenarios import ACCEPTANCE, CATALOG, Context, InputError, resolve_params

EXIT_OK, EXIT_INPUT, EXIT_VERDICT = 0, 1, 2


# --- JSON with 17 significant digits -------------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _encode(obj, indent=0):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(k)}: {_encode(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        return "[" + ", ".join(_encode(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return '"nan"'
        if math.isinf(obj):
            return '"inf"' if obj > 0 else '"-inf"'
        return format(obj, ".17g")
    return json.dumps(obj)


def dumps(obj):
    """Deterministic JSON: sorted-free insertion order, floats at 17 significant digits."""
    return _encode(_plain(obj)) + "\n"


# --- scenario files ------------------------------------------------------------------------------

def load_scenario(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise InputError(f"cannot read scenario: {e.strerror}", path)
    except json.JSONDecodeError as e:
        raise InputError(f"invalid JSON: {e.msg}", f"{path}:{e.lineno}:{e.colno}")
    return validate_scenario(doc, path)


def validate_scenario(doc, where="scenario"):
    if not isinstance(doc, dict):
        raise InputError("scenario must be a JSON object", where)
    extra = sorted(set(doc) - {"kind", "name", "params", "seed"})
    if extra:
        raise InputError(f"unknown key {extra[0]!r}", f"{where}:{extra[0]}")
    kind = doc.get("kind")
    if kind not in CATALOG:
        raise InputError(f"unknown kind {kind!r}; known kinds: {', '.join(sorted(CATALOG))}",
                         f"{where}:kind")
    if not isinstance(doc.get("params", {}), dict):
        raise InputError("params must be an object", f"{where}:params")
    try:
        P = resolve_params(CATALOG[kind], doc.get("params", {}))
    except InputError as e:
        raise e.within(where)
    return {"kind": kind, "name": doc.get("name", kind), "seed": doc.get("seed"),
            "params": P}


def sample_scenario(kind):
    k = CATALOG[kind]
    return {"kind": kind, "name": f"sample-{kind}", "seed": 0, "params": dict(k.sample)}


def write_samples(directory):
    os.makedirs(directory, exist_ok=True)
    paths = []
    for kind in sorted(CATALOG):
        p = os.path.join(directory, f"{kind}.json")
        with open(p, "w") as fh:
            json.dump(sample_scenario(kind), fh, indent=2)
            fh.write("\n")
        paths.append(p)
    return paths


# --- execution -----------------------------------------------------------------------------------

def _threads():
    v = os.environ.get("DIRACLAB_THREADS")
    if not v:
        return None
    try:
        n = int(v)
    except ValueError:
        raise InputError(f"DIRACLAB_THREADS must be an integer, got {v!r}", "env:DIRACLAB_THREADS")
    if n < 1:
        raise InputError("DIRACLAB_THREADS must be positive", "env:DIRACLAB_THREADS")
    return n


def execute(scn, ctx, base_dir="."):
    """Run a validated scenario; returns (report dict, tables, timing dict)."""
    kind = CATALOG[scn["kind"]]
    P = scn["params"]
    n = _threads()
    t0 = time.perf_counter()
    if n is not None:
        from threadpoolctl import threadpool_limits
        with threadpool_limits(limits=n):
            out = _call(kind, P, ctx, base_dir)
    else:
        out = _call(kind, P, ctx, base_dir)
    elapsed = time.perf_counter() - t0
    verdicts, results, tables = out
    verdicts = {k: bool(v) for k, v in verdicts.items()}
    report = {"kind": scn["kind"], "name": scn["name"], "seed": ctx.seed,
              "tol_scale": ctx.tol_scale, "params": P,
              "passed": all(verdicts.values()), "verdicts": verdicts, "results": results}
    timing = {"name": scn["name"], "seconds": elapsed, "threads": n,
              "backend": _kernels.get_backend(), "python": platform.python_version(),
              "numpy": np.__version__}
    return report, tables, timing


def _call(kind, P, ctx, base_dir):
    if kind.name == "kcycle-check":
        return kind.runner(P, ctx, base_dir)
    try:
        return kind.runner(P, ctx)
    except InputError:
        raise
    except (ArithmeticError, np.linalg.LinAlgError) as e:
        return {"numerics": False}, {"error": f"{type(e).__name__}: {e}"}, {}


def write_outputs(out_dir, name, report, tables, timing):
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, f"{name}.report.json")]
    with open(paths[0], "w") as fh:
        fh.write(dumps(report))
    with open(os.path.join(out_dir, f"{name}.timing.json"), "w") as fh:
        fh.write(dumps(timing))
    for tname, text in tables.items():
        p = os.path.join(out_dir, f"{name}.{tname}.csv")
        with open(p, "w") as fh:
            fh.write(text)
        paths.append(p)
    return paths


def _summary_line(report, timing):
    mark = "PASS" if report["passed"] else "FAIL"
    bad = [k for k, v in report["verdicts"].items() if not v]
    tail = f"  failed: {', '.join(bad)}" if bad else ""
    return f"{mark}  {report['name']}  ({timing['seconds']:.2f} s){tail}"


# --- commands -----------------------------------------------------------------------------------

def cmd_run(args):
    scn = load_scenario(args.file)
    seed = args.seed if args.seed is not None else (scn["seed"] or 0)
    ctx = Context(int(seed), float(args.tol_scale))
    try:
        report, tables, timing = execute(scn, ctx, os.path.dirname(os.path.abspath(args.file)))
    except InputError as e:
        raise e.within(args.file)
    if args.out:
        write_outputs(args.out, scn["name"], report, tables, timing)
    if args.json:
        sys.stdout.write(dumps(report))
    else:
        print(_summary_line(report, timing))
    return EXIT_OK if report["passed"] else EXIT_VERDICT


def cmd_list(args):
    if args.json:
        doc = {k.name: {"doc": k.doc, "params": {p: {"type": t, "default": d, "doc": h}
                                                 for p, (t, d, h) in k.schema.items()}}
               for k in CATALOG.values()}
        sys.stdout.write(dumps(doc))
        return EXIT_OK
    for k in CATALOG.values():
        print(f"{k.name}\n    {k.doc}")
        for p, (t, d, h) in k.schema.items():
            extra = f"  {h}" if h else ""
            print(f"    {p:<16} {t:<7} default={json.dumps(_plain(d))}{extra}")
    return EXIT_OK


def cmd_selfcheck(args):
    ctx = Context(int(args.seed or 0), float(args.tol_scale))
    only = set(args.only or [])
    ok = True
    for label, kind, params in ACCEPTANCE:
        if only and label.split()[0].rstrip("abc") not in only:
            continue
        scn = validate_scenario({"kind": kind, "name": label, "params": params})
        report, tables, timing = execute(scn, ctx)
        ok &= report["passed"]
        print(_summary_line(report, timing), flush=True)
        if args.out:
            write_outputs(args.out, re.sub(r"[^A-Za-z0-9=.-]+", "_", label).strip("_"), report, tables, timing)
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_samples(args):
    for p in write_samples(args.directory):
        print(p)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="diraclab", description="Numerical experiments on Dirac-type operators over Hilbert modules.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("file")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--out", default=None, help="directory for report, timing and CSV tables")
    r.add_argument("--tol-scale", type=float, default=1.0)
    r.add_argument("--json", action="store_true", help="print the full report")
    r.set_defaults(func=cmd_run)
    ls = sub.add_parser("list", help="list scenario kinds and their parameters")
    ls.add_argument("--json", action="store_true")
    ls.set_defaults(func=cmd_list)
    s = sub.add_parser("selfcheck", help="run the built-in acceptance scenarios")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tol-scale", type=float, default=1.0)
    s.add_argument("--out", default=None)
    s.add_argument("--only", nargs="*", help="criterion numbers, e.g. 1 4 8")
    s.set_defaults(func=cmd_selfcheck)
    w = sub.add_parser("samples", help="write one sample scenario per kind")
    w.add_argument("directory")
    w.set_defaults(func=cmd_samples)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "tol_scale", 1.0) is not None and getattr(args, "tol_scale", 1.0) <= 0:
        print("error: --tol-scale must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
