"""Command-line entry point: ``tracesize <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

from tracesize import harness
from tracesize.centrality import check_size_identity, profile, write_centrality_csv
from tracesize.estimators import RSOptions
from tracesize.graph import GraphError, gen_ba, gen_er, read_edge_list, save_edge_list
from tracesize.routing import TIE_BREAKS, StudyError, dump_study, run_study

log = logging.getLogger("tracesize")


class CLIError(Exception):
    pass


def _load_graph(path):
    if not os.path.isfile(path):
        raise CLIError(f"graph file not found: {path}")
    try:
        return read_edge_list(path)
    except OSError as exc:
        raise CLIError(f"cannot read graph file {path}: {exc}") from None


def _targets(args, n):
    if args.n_targets is not None:
        return args.n_targets, args.n_targets / n
    return max(2, round(args.q_targets * n)), args.q_targets


def cmd_gen(args):
    if args.kind == "er":
        g = gen_er(args.n, args.avg_degree, args.seed)
    else:
        g = gen_ba(args.n, args.m, args.seed)
    save_edge_list(g, args.out)
    print(f"wrote {args.out}: N={g.num_vertices} M={g.num_edges}")


def cmd_study(args):
    g, _ = _load_graph(args.graph)
    nt, _ = _targets(args, g.num_vertices)
    study = run_study(g, args.n_sources, nt, args.seed, keep_paths=args.out is not None,
                      include_source_paths=args.source_paths, tie_break=args.tie_break)
    if args.out:
        dump_study(study, args.out)
    print(f"N={g.num_vertices} nS={study.n_sources} nT={study.n_targets} "
          f"Nstar={study.n_star} Mstar={study.m_star}")


def cmd_estimate(args):
    g, _ = _load_graph(args.graph)
    nt, q = _targets(args, g.num_vertices)
    est = ("naive", "l1o", "l1o_approx") + (("rs",) if args.rs else ())
    rs = RSOptions(b_initial=args.b_initial, b_max=args.b_max)
    row = harness.run_trial(g, os.path.splitext(os.path.basename(args.graph))[0],
                            args.n_sources, nt, q, 0, args.seed, est, rs, args.tie_break)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(harness.CSV_HEADER)
    w.writerow(row.cells())


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def cmd_sweep(args):
    cfg = harness.load_config(args.config)
    out_path = args.out or cfg.output
    fh = _open_out(out_path)
    try:
        rows = harness.run_sweep(cfg, out=fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    if args.table:
        with open(args.table, "w") as t:
            t.write(harness.summary_table(harness.summarize(rows)))
    if out_path:
        print(f"wrote {len(rows)} rows to {out_path}", file=sys.stderr)


def cmd_validate(args):
    cfg = harness.load_config(args.config)
    text = harness.scaling_csv(harness.validate_scaling(cfg))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_centrality(args):
    g, _ = _load_graph(args.graph)
    prof = profile(g)
    ident = check_size_identity(g, prof)
    n_eq = "undefined" if ident.n_from_eq is None else repr(ident.n_from_eq)
    print(f"N={g.num_vertices} ell={prof.avg_path_length!r}")
    print(f"lhs={ident.lhs:.10g} rhs={ident.rhs:.10g} n_from_eq={n_eq}")
    if args.out:
        write_centrality_csv(g, args.out, prof.betweenness)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tracesize",
                                description="Network size estimation from traceroute samples")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an ER or BA graph as an edge list")
    g.add_argument("--kind", choices=["er", "ba"], required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--avg-degree", type=float, default=6.0)
    g.add_argument("--m", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    def study_args(sp):
        sp.add_argument("--graph", required=True, help="edge-list file")
        sp.add_argument("--n-sources", type=int, default=10)
        tg = sp.add_mutually_exclusive_group(required=True)
        tg.add_argument("--n-targets", type=int)
        tg.add_argument("--q-targets", type=float)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tie-break", choices=TIE_BREAKS, default="path")

    s = sub.add_parser("study", help="run one traceroute study")
    study_args(s)
    s.add_argument("--source-paths", action="store_true",
                   help="also merge source-to-source traces into G*")
    s.add_argument("--out", help="write a study dump (S, T and every trace)")
    s.set_defaults(func=cmd_study)

    e = sub.add_parser("estimate", help="run one study and print its estimates as CSV")
    study_args(e)
    e.add_argument("--rs", action="store_true", help="include the resampling estimator")
    e.add_argument("--b-initial", type=int, default=10)
    e.add_argument("--b-max", type=int, default=80)
    e.set_defaults(func=cmd_estimate)

    w = sub.add_parser("sweep", help="multi-trial sweep from a config file")
    w.add_argument("--config", required=True)
    w.add_argument("--out", help="CSV path (overrides [output] path)")
    w.add_argument("--table", help="also write a whitespace summary table")
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate-scaling", help="compare N*/N with N**/N* at matched ratios")
    v.add_argument("--config", required=True)
    v.add_argument("--out")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("centrality", help="betweenness / path-length identity check")
    c.add_argument("--graph", required=True)
    c.add_argument("--out", help="CSV of vertex, degree, betweenness")
    c.set_defaults(func=cmd_centrality)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CLIError, harness.ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GraphError, StudyError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
