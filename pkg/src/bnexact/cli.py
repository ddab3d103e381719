"""Command-line front end.

Subcommands: ``edges``, ``feature``, ``evidence``, ``oracle`` and ``compare``.
Exit codes: 0 ok, 2 input error, 3 numerical breakdown, 4 cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time

import numpy as np

from . import engine, kernels, oracle
from .dataset import load_arities, load_dataset
from .errors import CapExceeded, InputError, NumericalBreakdown, SchemaError
from .model import assemble_B, load_feature, normalize_prior
from .scoring import build_score_tables, check_indegree, load_score_cache, save_score_cache

log = logging.getLogger("bnexact")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_CAP = 0, 2, 3, 4
DEFAULT_MAX_K = 5


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, metavar="PATH", help="CSV file with a header row")
    p.add_argument("--arities", metavar="PATH", help='sidecar JSON {"arities": {name: int}}')
    p.add_argument("--max-indegree", type=int, metavar="K",
                   help=f"parent-set size bound (default min(n-1, {DEFAULT_MAX_K}))")
    p.add_argument("--prior", default="uniform", choices=["uniform", "order-modular"])
    p.add_argument("--out", metavar="PATH", help="result JSON path (default: standard output)")
    p.add_argument("--threads", type=int, default=1, metavar="N")
    p.add_argument("--score-cache", metavar="PATH", help="reuse / store local scores here")
    p.add_argument("--dump-tables", action="store_true",
                   help="write RR and H tables as raw little-endian float64 next to --out")
    p.add_argument("--backend", choices=kernels.available(), help="kernel implementation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bnexact",
        description="Exact posterior probabilities of edges and modular features "
                    "in Bayesian networks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("edges", help="posterior of every directed edge")
    _add_common(p)
    p = sub.add_parser("feature", help="posterior of one modular feature")
    _add_common(p)
    p.add_argument("--feature", required=True, metavar="PATH")
    p = sub.add_parser("evidence", help="log marginal likelihood of the data")
    _add_common(p)
    p = sub.add_parser("oracle", help="brute-force enumeration over all DAGs (n <= 6)")
    _add_common(p)
    p.add_argument("--feature", metavar="PATH", help="feature file; default is all edges")
    p = sub.add_parser("compare", help="scatter data between two edge result files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--out", metavar="PATH", help="scatter CSV path (default: standard output)")
    return parser


def _load(args):
    arities = load_arities(args.arities) if args.arities else None
    ds = load_dataset(args.data, arities)
    if args.max_indegree is None:
        k = min(ds.n - 1, DEFAULT_MAX_K)
        log.warning("--max-indegree not given; using k=%d", k)
    else:
        k = check_indegree(ds.n, args.max_indegree)
    return ds, k


def _scores(args, ds, k):
    if args.score_cache:
        cached = load_score_cache(args.score_cache, ds, k)
        if cached is not None:
            return cached
    tables = build_score_tables(ds, k)
    if args.score_cache:
        save_score_cache(args.score_cache, tables, ds)
    return tables


def _result(ds, k, prior, method, backend):
    return {"variables": list(ds.variable_names), "n": ds.n, "m": ds.m, "k": k,
            "prior": prior, "method": method, "backend": backend}


def _emit(doc, args, summary: str) -> None:
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(summary)
    else:
        print(text)
        print(summary, file=sys.stderr)


def _edge_summary(names, edges, log_ev, top=10) -> str:
    n = len(names)
    pairs = sorted(((edges[u][v], u, v) for u in range(n) for v in range(n) if u != v),
                   key=lambda t: (-t[0], t[1], t[2]))
    lines = [f"log_evidence {log_ev:.10g}"]
    lines += [f"{names[u]} -> {names[v]}  {p:.6f}" for p, u, v in pairs[:top]]
    return "\n".join(lines)


def run_edges(args) -> dict:
    t0 = time.perf_counter()
    prior = normalize_prior(args.prior)
    ds, k = _load(args)
    tables = _scores(args, ds, k)
    t1 = time.perf_counter()
    B = assemble_B(tables, prior, None, k)
    dump = None
    if args.dump_tables:
        dump = args.out.rsplit(".json", 1)[0] if args.out else "bnexact"
    res = engine.all_edge_posteriors(B, args.threads, args.backend, dump)
    t2 = time.perf_counter()
    doc = _result(ds, k, prior, "engine", args.backend or kernels.default_name())
    doc.update(log_evidence=res.log_evidence, edges=res.edges.tolist(),
               runtime_seconds={"scores": t1 - t0, "engine": t2 - t1, "total": t2 - t0},
               rr_h_relative_gap=res.rr_h_relative_gap)
    _emit(doc, args, _edge_summary(ds.variable_names, res.edges, res.log_evidence))
    return doc


def run_feature(args) -> dict:
    t0 = time.perf_counter()
    prior = normalize_prior(args.prior)
    ds, k = _load(args)
    feature = load_feature(args.feature, ds.variable_names)
    tables = _scores(args, ds, k)
    t1 = time.perf_counter()
    res = engine.feature_joint(feature, tables, prior, k, args.threads, args.backend)
    t2 = time.perf_counter()
    doc = _result(ds, k, prior, "engine", args.backend or kernels.default_name())
    doc.update(log_evidence=res.log_evidence, feature_posterior=res.posterior,
               runtime_seconds={"scores": t1 - t0, "engine": t2 - t1, "total": t2 - t0},
               rr_h_relative_gap=res.rr_h_relative_gap)
    _emit(doc, args, f"log_evidence {res.log_evidence:.10g}\nfeature_posterior {res.posterior:.10g}")
    return doc


def run_evidence(args) -> dict:
    t0 = time.perf_counter()
    prior = normalize_prior(args.prior)
    ds, k = _load(args)
    tables = _scores(args, ds, k)
    t1 = time.perf_counter()
    log_ev, gap = engine.log_evidence(tables, prior, k, args.threads, args.backend)
    t2 = time.perf_counter()
    doc = _result(ds, k, prior, "engine", args.backend or kernels.default_name())
    doc.update(log_evidence=log_ev,
               runtime_seconds={"scores": t1 - t0, "engine": t2 - t1, "total": t2 - t0},
               rr_h_relative_gap=gap)
    _emit(doc, args, f"log_evidence {log_ev:.10g}")
    return doc


def run_oracle(args) -> dict:
    t0 = time.perf_counter()
    prior = normalize_prior(args.prior)
    ds, k = _load(args)
    if ds.n > oracle.MAX_N:
        raise CapExceeded(f"oracle is limited to n <= {oracle.MAX_N}; data has n={ds.n}")
    feature = load_feature(args.feature, ds.variable_names) if getattr(args, "feature", None) else None
    tables = _scores(args, ds, k)
    t1 = time.perf_counter()
    doc = _result(ds, k, prior, "oracle", None)
    edges, log_ev = oracle.oracle_edges_tables(tables, prior, k)
    if feature is None:
        doc.update(log_evidence=log_ev, edges=edges.tolist())
        summary = _edge_summary(ds.variable_names, edges, log_ev)
    else:
        p = oracle.oracle_posterior_tables(tables, feature, prior, k)
        doc.update(log_evidence=log_ev, feature_posterior=p)
        summary = f"log_evidence {log_ev:.10g}\nfeature_posterior {p:.10g}"
    t2 = time.perf_counter()
    doc.update(runtime_seconds={"scores": t1 - t0, "engine": t2 - t1, "total": t2 - t0},
               rr_h_relative_gap=None)
    _emit(doc, args, summary)
    return doc


def _read_result(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if "edges" not in doc or "variables" not in doc:
        raise SchemaError(f"{path}: not an edge result file")
    return doc


def compare_results(a: dict, b: dict):
    """Rows (u, v, p_a, p_b) over all ordered pairs, plus (max, mean) abs difference."""
    if a["variables"] != b["variables"] or a.get("n") != b.get("n"):
        raise SchemaError("result files describe different variables")
    names = a["variables"]
    ea, eb = np.asarray(a["edges"], dtype=float), np.asarray(b["edges"], dtype=float)
    rows = [(names[u], names[v], float(ea[u, v]), float(eb[u, v]))
            for u in range(len(names)) for v in range(len(names)) if u != v]
    diffs = [abs(pa - pb) for _, _, pa, pb in rows]
    if not diffs:
        return rows, 0.0, 0.0
    return rows, max(diffs), math.fsum(diffs) / len(diffs)


def run_compare(args):
    rows, max_abs, mean_abs = compare_results(_read_result(args.a), _read_result(args.b))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["u", "v", "p_a", "p_b"])
    w.writerows((u, v, repr(pa), repr(pb)) for u, v, pa, pb in rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    print(f"max_abs_diff {max_abs:.6g} mean_abs_diff {mean_abs:.6g} pairs {len(rows)}")
    return rows, max_abs, mean_abs


COMMANDS = {"edges": run_edges, "feature": run_feature, "evidence": run_evidence,
            "oracle": run_oracle, "compare": run_compare}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except NumericalBreakdown as exc:
        log.error("numerical breakdown: %s", exc)
        return EXIT_NUMERIC
    except CapExceeded as exc:
        log.error("%s", exc)
        return EXIT_CAP
    except (InputError, OSError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
