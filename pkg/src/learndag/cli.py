"""Command-line entry point: ``learndag {learn,simulate,sweep,preprocess,metrics}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, io
from .core import Config, ConfigError, DataError, LearnDagError
from .pipeline import learn_dag
from .preprocess import preprocess
from .simulate import (
    ROW_FIELDS,
    GraphKind,
    SweepCell,
    gen_graph,
    gen_params,
    run_sweep,
    sample,
    structure_metrics,
)

log = logging.getLogger("learndag")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

VARIANTS = {
    "learnDAG": {},
    "learnDAG.noPNS": {"use_pns": False},
    "learnDAG.BIC": {"score_kind": "bic"},
    "learnDAG.noPrun": {"prune_mode": "deviance"},
    "learnDAG.margin": {"use_margin_step": True},
}

GRIDS = {
    "p10": (10, (200, 500, 1000, 2000)),
    "p100": (100, (500, 1000, 2000, 5000)),
}


def _int_list(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x.strip()]


def _str_list(s: str) -> list[str]:
    return [x.strip() for x in s.split(",") if x.strip()]


def _default_threads() -> int:
    env = os.environ.get("LEARNDAG_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _add_algorithm_flags(ap: argparse.ArgumentParser) -> None:
    g = ap.add_argument_group("algorithm")
    g.add_argument("--alpha-pns", type=float, default=None,
                   help="level of the neighbourhood-selection tests (default: sample-size schedule)")
    g.add_argument("--alpha-prune", type=float, default=None,
                   help="level of the pruning tests (default: sample-size schedule)")
    g.add_argument("--alpha-exponent", type=float, default=None,
                   help="schedule exponent e in 2(1-Phi(n^e)); default 0.15 for p<=50 else 0.2")
    g.add_argument("--alpha-margin", type=float, default=0.05)
    g.add_argument("--max-parents", type=int, default=None, help="parent cap m (default p-2)")
    g.add_argument("--score", choices=["loglik", "bic"], default="loglik")
    g.add_argument("--no-pns", action="store_true", help="skip neighbourhood selection")
    g.add_argument("--margin", action="store_true", help="add the marginal-independence screen")
    g.add_argument("--prune", choices=["wald", "deviance", "none"], default="wald")
    g.add_argument("--bootstrap-b", type=int, default=50)
    g.add_argument("--bootstrap-threshold", type=float, default=0.2)
    g.add_argument("--symmetrize", choices=["or", "and"], default="or")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=None)


def _config_from(args) -> Config:
    return Config(
        alpha_pns=args.alpha_pns,
        alpha_prune=args.alpha_prune,
        alpha_exponent=args.alpha_exponent,
        alpha_margin=args.alpha_margin,
        max_parents=args.max_parents,
        score_kind=args.score,
        use_pns=not args.no_pns,
        use_margin_step=args.margin,
        prune_mode=args.prune,
        bootstrap_b=args.bootstrap_b,
        bootstrap_threshold=args.bootstrap_threshold,
        symmetrize=args.symmetrize,
        seed=args.seed,
        n_jobs=args.threads or _default_threads(),
    )


def _flag_echo(args) -> dict:
    keys = ("alpha_pns", "alpha_prune", "alpha_exponent", "alpha_margin", "max_parents",
            "score", "no_pns", "margin", "prune", "bootstrap_b", "bootstrap_threshold",
            "symmetrize", "seed")
    return {k.replace("_", "-"): getattr(args, k) for k in keys}


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_learn(args) -> int:
    data = io.read_counts(args.input)
    cfg = _config_from(args)
    res = learn_dag(data, cfg)
    out = _out_dir(args)
    names = data.names
    io.write_dag(out / "edges.csv", res.dag, names)
    io.write_dag(out / "oriented_edges.csv", res.oriented, names)
    io.write_skeleton(out / "pns_skeleton.csv", res.pns_sets, names)
    resolved = res.config.to_dict()
    resolved.pop("n_jobs")
    report = {
        "input": str(args.input),
        "n": data.n,
        "p": data.p,
        "flags": _flag_echo(args),
        "config": resolved,
        "n_edges": res.dag.n_edges,
        "n_oriented": res.oriented.n_edges,
        "n_skeleton": len(res.pns_sets.undirected_edges()),
        "orientation_trace": [
            {"from": names[i], "to": names[j], "gain": g} for i, j, g in res.trace],
        "prune_tests": [
            {"from": names[r.parent], "to": names[r.child], "z": r.z, "p_value": r.p_value,
             "kept": r.kept, "tested": r.tested} for r in res.prune_table],
    }
    io.write_json(out / "report.json", report)
    if not args.no_timings:
        io.write_json(out / "timings.json", res.timings)
    if args.dot:
        io.write_dot(out / "graph.dot", res.dag, names)
    print(f"{res.dag.n_edges} edges written to {out / 'edges.csv'}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    ss = np.random.SeedSequence(args.seed)
    g, th, d = (np.random.default_rng(s) for s in ss.spawn(3))
    truth = gen_graph(args.p, args.kind, args.edges, seed=g)
    model = gen_params(truth, seed=th)
    data = sample(model, args.n, seed=d)
    out = _out_dir(args)
    io.write_counts(out / "data.csv", data)
    io.write_dag(out / "truth_edges.csv", truth, data.names)
    io.write_json(out / "params.json", {
        "kind": GraphKind(args.kind).value, "p": args.p, "n": args.n, "seed": args.seed,
        "intercepts": dict(zip(data.names, model.intercepts.tolist())),
        "weights": [{"from": data.names[k], "to": data.names[j], "weight": w}
                    for (k, j), w in sorted(model.weights.items())],
    })
    print(f"wrote {data.n}x{data.p} counts to {out / 'data.csv'}")
    return EXIT_OK


def _fmt_cell(mean, sd) -> str:
    return f"{mean:.3f}({sd:.3f})" if np.isfinite(sd) else f"{mean:.3f}"


def format_summary_table(summary: list[dict]) -> str:
    """Fixed-width table, one row per (graph, p, n, algorithm): mean(sd) per statistic."""
    timed = bool(summary) and "seconds_mean" in summary[0]
    head = ["Graph", "p", "n", "Algorithm", "TP", "FP", "FN", "P", "R", "F1"]
    head += ["time"] if timed else []
    lines = []
    for s in summary:
        row = [s["kind"], str(s["p"]), str(s["n"]), s["variant"]] + [
            _fmt_cell(s[f"{k}_mean"], s[f"{k}_sd"])
            for k in ("tp", "fp", "fn", "precision", "recall", "f1")]
        if timed:
            row.append(f"{s['seconds_mean']:.3f}")
        lines.append(row)
    widths = [max(len(r[i]) for r in [head, *lines]) for i in range(len(head))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    return "\n".join(fmt.format(*r).rstrip() for r in [head, *lines]) + "\n"


def cmd_sweep(args) -> int:
    if args.grid:
        p, ns = GRIDS[args.grid]
        ps = [p]
    else:
        ps, ns = _int_list(args.p), _int_list(args.n)
    kinds = [GraphKind(k) for k in _str_list(args.kinds)]
    variants = _str_list(args.variants)
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"unknown variant {v!r}; choose from {sorted(VARIANTS)}")
    base = _config_from(args)
    cells = [SweepCell(kind, p, n, v, replace(base, **VARIANTS[v]), args.edges)
             for kind in kinds for p in ps for n in ns for v in variants]

    def progress(row):
        log.info("%s p=%s n=%s %s rep %s: f1=%.3f", row["kind"], row["p"], row["n"],
                 row["variant"], row["replicate"], row["f1"])

    res = run_sweep(cells, args.replicates, seed=args.seed, progress=progress)
    out = _out_dir(args)
    fields = [f for f in ROW_FIELDS if f != "seconds"]
    io.write_rows(out / "sweep_rows.csv", res.rows, fields)
    summary = [{k: v for k, v in s.items() if k != "seconds_mean"} for s in res.summary]
    sfields = list(summary[0].keys())
    io.write_rows(out / "sweep_summary.csv", summary, sfields)
    (out / "sweep_table.txt").write_text(format_summary_table(summary))
    if not args.no_timings:
        io.write_rows(out / "sweep_timings.csv", res.rows,
                      ["kind", "p", "n", "variant", "replicate", "seconds"])
        (out / "sweep_table_timed.txt").write_text(format_summary_table(res.summary))
    print(format_summary_table(summary), end="")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    names, values = io.read_matrix(args.input)
    counts, report = preprocess(values, names, q=args.quantile, axis=args.axis)
    out = _out_dir(args)
    io.write_counts(out / "counts.csv", counts)
    io.write_json(out / "preprocess_report.json", report.to_dict())
    print(f"alpha={report.alpha:.2f} ks={report.ks:.4f} "
          f"dropped={len(report.dropped_units)} -> {out / 'counts.csv'}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    if args.nodes:
        names = _str_list(args.nodes)
    elif args.data:
        with open(args.data) as fh:
            header = fh.readline().rstrip("\r\n")
        names = [s.strip() for s in header.split("\t" if "\t" in header else ",")]
    else:
        raise ConfigError("declare the node universe with --nodes or --data")
    est = io.read_edges(args.estimate, names)
    truth = io.read_edges(args.truth, names)
    m = structure_metrics(est, truth)
    d = m.as_dict()
    if args.json:
        io.write_json(args.json, d)
    print(" ".join(f"{k}={v}" if isinstance(v, int) else f"{k}={round(v, 6)!r}"
                   for k, v in d.items()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="learndag", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn a DAG from a counts file")
    p.add_argument("input")
    p.add_argument("--out-dir", default="learndag_out")
    p.add_argument("--dot", action="store_true", help="also write graph.dot")
    p.add_argument("--no-timings", action="store_true", help="do not write timings.json")
    _add_algorithm_flags(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("simulate", help="sample a random Poisson DAG dataset")
    p.add_argument("--kind", choices=[k.value for k in GraphKind], default="scalefree")
    p.add_argument("--p", type=int, default=10)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--edges", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="simulated")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="Monte Carlo structure-recovery benchmark")
    p.add_argument("--grid", choices=sorted(GRIDS), default=None,
                   help="preset p and sample sizes (overrides --p/--n)")
    p.add_argument("--kinds", default="scalefree,hub,erdosrenyi")
    p.add_argument("--p", default="10")
    p.add_argument("--n", default="200,2000")
    p.add_argument("--edges", type=int, default=None)
    p.add_argument("--variants", default="learnDAG", help=f"comma list of {sorted(VARIANTS)}")
    p.add_argument("--replicates", type=int, default=5)
    p.add_argument("--out-dir", default="sweep_out")
    p.add_argument("--no-timings", action="store_true")
    _add_algorithm_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("preprocess", help="normalize, power-transform and floor raw data")
    p.add_argument("input")
    p.add_argument("--quantile", type=float, default=0.95)
    p.add_argument("--axis", choices=["rows", "columns"], default="rows",
                   help="which axis holds the statistical units")
    p.add_argument("--out-dir", default="preprocessed")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("metrics", help="compare an estimated edge list against the truth")
    p.add_argument("estimate")
    p.add_argument("truth")
    p.add_argument("--nodes", default=None, help="comma-separated node names")
    p.add_argument("--data", default=None, help="take node names from this file's header")
    p.add_argument("--json", default=None, help="also write metrics to this JSON file")
    p.set_defaults(func=cmd_metrics)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, ConfigError, FileNotFoundError) as exc:
        print(f"learndag: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (LearnDagError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"learndag: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
