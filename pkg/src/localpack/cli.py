"""Command line interface.

Examples::

    localpack body info O
    localpack cell volume config.json
    localpack graph enumerate 6
    localpack bounds steiner O --r "sqrt(2033)/57"
    localpack --format json bounds all C
"""
from __future__ import annotations

import argparse
import json
import math
import pathlib
import sys

import numpy as np
import sympy

from . import bounds as bd
from .bodies import catalog, catalog_index
from .cell import PointConfig, build_cell, classify_packing
from .colorgraph import ColorGraph, adjacency_matrix, graph_from_packing, matrix_to_csv
from .errors import LocalPackError
from .generator import enumerate_triangulations
from .optimizer import OptProblem, minimize


class UsageError(Exception):
    pass


def fmt_float(x: float) -> str:
    """Twelve digits after the point, trailing zeros dropped; scientific outside [1e-4, 1e12)."""
    if not math.isfinite(x):
        return str(x)
    if x == 0.0:
        return "0"
    if 1e-4 <= abs(x) < 1e12:
        s = f"{x:.12f}".rstrip("0")
        return s[:-1] if s.endswith(".") else s
    return f"{x:.12e}"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(fmt_float(x)) if math.isfinite(x) else None
    return obj


def report(result: dict, fmt: str = "table") -> str:
    """Deterministic text for a result map: sorted JSON, or ``key: value`` lines."""
    data = _clean(result)
    if fmt == "json":
        return json.dumps(data, sort_keys=True, indent=1)
    lines = []
    for key in sorted(data):
        val = data[key]
        if isinstance(val, float):
            val = fmt_float(val)
        elif isinstance(val, (dict, list)):
            val = json.dumps(val, sort_keys=True)
        lines.append(f"{key}: {val}")
    return "\n".join(lines)


def parse_number(text: str) -> float:
    """Evaluate a numeric expression such as ``sqrt(2033)/57``."""
    try:
        expr = sympy.sympify(text, locals={"pi": sympy.pi, "sqrt": sympy.sqrt}, evaluate=True)
        value = float(sympy.N(expr, 30))
    except (sympy.SympifyError, TypeError, ValueError) as exc:
        raise UsageError(f"cannot read {text!r} as a number") from exc
    return value


def _load_json(path: str) -> dict:
    p = pathlib.Path(path)
    try:
        return json.loads(p.read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# commands


def cmd_body(args) -> dict:
    if args.action == "list":
        return {"bodies": json.loads(catalog_index())}
    return catalog(args.name).summary()


def cmd_cell(args) -> dict:
    cfg = PointConfig.from_dict(_load_json(args.config))
    cell = build_cell(cfg)
    if args.action == "volume":
        return {"volume": cell.volume()}
    out = cell.to_dict()
    cls = classify_packing(cfg, cell)
    out.update({"reduced": cls.reduced, "general": cls.general, "simple": cls.simple})
    return out


def cmd_graph(args) -> dict:
    if args.action == "extract":
        cfg = PointConfig.from_dict(_load_json(args.target))
        return graph_from_packing(cfg).to_dict()
    if args.action == "matrix":
        G = ColorGraph.from_dict(_load_json(args.target))
        return {"matrix": matrix_to_csv(adjacency_matrix(G))}
    try:
        n = int(args.target)
    except ValueError as exc:
        raise UsageError(f"graph enumerate expects an integer, got {args.target!r}") from exc
    batch = enumerate_triangulations(n)
    if args.out:
        pathlib.Path(args.out).write_text(batch.ndjson())
    if args.stats:
        pathlib.Path(args.stats).write_text(batch.stats_csv())
    return {"n": n, "count": batch.count, "ratio_ok": batch.ratio_ok(),
            "within_tutte": all(s.within_tutte for s in batch.stats)}


def cmd_opt(args) -> dict:
    path = pathlib.Path(args.problem)
    problem = OptProblem.from_dict(_load_json(args.problem), base_dir=path.parent)
    res = minimize(problem, multistarts=args.multistarts, seed=args.seed, threads=args.threads)
    return res.to_dict()


def cmd_bounds(args) -> dict:
    name = args.body
    catalog(name)
    r = parse_number(args.r) if args.r else None
    rho = parse_number(args.rho) if args.rho else None
    if args.action == "tau":
        return bd.tau_and_m_bounds(name)
    if args.action == "steiner":
        if r is None:
            r = bd.parameters(name).r
        return {"steiner": bd.steiner_neighbor_bound(name, bd.Truncater("ball", r))}
    if args.action == "cap":
        prm = bd.parameters(name)
        mu = parse_number(args.mu) if args.mu else prm.cap
        return {"cap": bd.cap_bound(rho if rho is not None else prm.rho, mu)}
    if args.action == "refined":
        return {"refined": bd.refined_cap_bound(name, args.samples)}
    rep = bd.bound_report(name, r, rho, samples_per_axis=args.samples)
    return rep.to_dict()


def _bounds_table(result: dict) -> str:
    lines = [f"{k}: {result[k]['bound']}" for k in ("steiner", "cap", "refined") if k in result]
    rest = {k: v for k, v in result.items() if k not in ("steiner", "cap", "refined")}
    for k in ("steiner", "cap", "refined"):
        if k in result:
            rest.update({f"{k}.{key}": val for key, val in result[k].items() if key != "bound"})
    body = report(rest, "table")
    return "\n".join(lines + ([body] if body else []))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="localpack", description="Local packing cells, colour graphs and bounds.")
    p.add_argument("--seed", type=int, default=0, help="random seed (recorded in the output)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=("json", "table"), default="table")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("body", help="catalog queries")
    b.add_argument("action", choices=("info", "list"))
    b.add_argument("name", nargs="?", default="O")
    b.set_defaults(func=cmd_body)

    c = sub.add_parser("cell", help="local cells of point configurations")
    c.add_argument("action", choices=("build", "volume"))
    c.add_argument("config")
    c.set_defaults(func=cmd_cell)

    g = sub.add_parser("graph", help="colour graphs")
    g.add_argument("action", choices=("extract", "matrix", "enumerate"))
    g.add_argument("target", help="config JSON, graph JSON or vertex count")
    g.add_argument("--out", help="write the enumerated graphs as NDJSON")
    g.add_argument("--stats", help="write per-level counts as CSV")
    g.set_defaults(func=cmd_graph)

    o = sub.add_parser("opt", help="volume minimisation")
    o.add_argument("action", choices=("run",))
    o.add_argument("problem")
    o.add_argument("--multistarts", type=int, default=None)
    o.set_defaults(func=cmd_opt)

    k = sub.add_parser("bounds", help="neighbour count bounds")
    k.add_argument("action", choices=("steiner", "cap", "refined", "tau", "all"))
    k.add_argument("body")
    k.add_argument("--r", help="truncater radius, e.g. sqrt(2033)/57")
    k.add_argument("--rho", help="sphere radius")
    k.add_argument("--mu", help="section area lower bound")
    k.add_argument("--samples", type=int, default=22, help="grid points per axis of the domain search")
    k.set_defaults(func=cmd_bounds)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except LocalPackError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except KeyError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    result = dict(result)
    result["seed"] = args.seed
    if args.format == "table" and args.command == "bounds":
        print(_bounds_table(result))
    elif args.format == "table" and args.command == "graph" and args.action == "matrix":
        print(result["matrix"], end="")
    else:
        print(report(result, args.format))
    return 0


if __name__ == "__main__":
    sys.exit(main())
