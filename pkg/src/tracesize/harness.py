"""Experiment configuration and deterministic multi-trial sweeps.

A sweep visits every setting (graph size x n_S x target count) in a fixed
order. Each setting gets its own graph, built from a seed derived from the
master seed and the setting index; trials of a setting share that graph
and draw fresh sources and targets. Rows are emitted in (setting, trial)
order, so a config plus its master seed determines every output byte.
"""
from __future__ import annotations

import configparser
import csv
import io
import logging
import math
import os
import time
from dataclasses import dataclass, field, fields, replace
from statistics import mean, stdev

from tracesize import _seeding
from tracesize.estimators import (
    RSOptions,
    estimate_l1o,
    estimate_l1o_approx,
    estimate_rs,
    l1o_stats,
    resample_mean,
)
from tracesize.graph import Graph, gen_ba, gen_er, load_edge_list
from tracesize.routing import TIE_BREAKS, run_study

log = logging.getLogger(__name__)

ESTIMATORS = ("naive", "l1o", "l1o_approx", "rs")
GRAPH_KINDS = ("er", "ba", "edgelist")


class ConfigError(ValueError):
    pass


@dataclass
class GraphSpec:
    kind: str
    n: list[int] = field(default_factory=list)
    avg_degree: float = 6.0
    m: int = 3
    path: str | None = None
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in GRAPH_KINDS:
            raise ConfigError(f"graph.kind: expected one of {GRAPH_KINDS}, got {self.kind!r}")
        if self.kind == "edgelist":
            if not self.path:
                raise ConfigError("graph.path: required for kind=edgelist")
            return
        if not self.n:
            raise ConfigError("graph.n: at least one size required")
        if any(n < 2 for n in self.n):
            raise ConfigError("graph.n: sizes must be >= 2")
        if self.kind == "er" and not self.avg_degree > 0:
            raise ConfigError("graph.avg_degree: must be > 0")
        if self.kind == "ba" and not all(1 <= self.m < n for n in self.n):
            raise ConfigError("graph.m: need 1 <= m < n")

    def sizes(self) -> list[int | None]:
        return [None] if self.kind == "edgelist" else list(self.n)

    def build(self, n: int | None, seed: int) -> Graph:
        if self.kind == "er":
            return gen_er(n, self.avg_degree, seed)
        if self.kind == "ba":
            return gen_ba(n, self.m, seed)
        return load_edge_list(self.path)

    @property
    def topology(self) -> str:
        if self.kind == "edgelist":
            return os.path.splitext(os.path.basename(self.path))[0]
        return self.kind


@dataclass
class ExperimentConfig:
    graph: GraphSpec
    n_sources: list[int]
    q_targets: list[float] | None = None
    n_targets: list[int] | None = None
    trials: int = 20
    master_seed: int = 0
    estimators: tuple[str, ...] = ESTIMATORS
    tie_break: str = "path"
    rs: RSOptions = field(default_factory=RSOptions)
    scaling_B: int = 10
    output: str | None = None
    timing: bool = False

    def validate(self) -> None:
        self.graph.validate()
        if self.trials < 1:
            raise ConfigError("study.trials: must be >= 1")
        if not self.n_sources or any(s < 1 for s in self.n_sources):
            raise ConfigError("study.n_sources: need a nonempty list of positive counts")
        if (self.q_targets is None) == (self.n_targets is None):
            raise ConfigError("study: give exactly one of q_targets / n_targets")
        vals = self.q_targets if self.q_targets is not None else self.n_targets
        if not vals:
            raise ConfigError("study: target list is empty")
        if self.q_targets is not None and any(not 0 < q < 1 for q in self.q_targets):
            raise ConfigError("study.q_targets: fractions must lie in (0, 1)")
        if self.n_targets is not None and any(t < 2 for t in self.n_targets):
            raise ConfigError("study.n_targets: counts must be >= 2")
        bad = set(self.estimators) - set(ESTIMATORS)
        if bad:
            raise ConfigError(f"study.estimators: unknown {sorted(bad)}")
        if self.tie_break not in TIE_BREAKS:
            raise ConfigError(f"study.tie_break: expected one of {TIE_BREAKS}")
        if self.scaling_B < 1:
            raise ConfigError("rs.scaling_b: must be >= 1")


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.replace(",", " ").split()]


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.replace(",", " ").split()]


_KNOWN = {
    "graph": {"kind", "n", "avg_degree", "m", "path", "seed"},
    "study": {"n_sources", "q_targets", "n_targets", "trials", "master_seed",
              "estimators", "tie_break"},
    "rs": {"b_initial", "b_max", "refine_width", "tolerance", "max_iter", "scaling_b"},
    "output": {"path", "timing"},
}


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Read an INI-style experiment config (see README for the keys)."""
    if not os.path.isfile(path):
        raise FileNotFoundError(f"config not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for sec in cp.sections():
        if sec not in _KNOWN:
            raise ConfigError(f"unknown section [{sec}]")
        extra = set(cp[sec]) - _KNOWN[sec]
        if extra:
            raise ConfigError(f"[{sec}]: unknown keys {sorted(extra)}")
    if "graph" not in cp or "study" not in cp:
        raise ConfigError("config needs [graph] and [study] sections")
    g, st = cp["graph"], cp["study"]
    rs = cp["rs"] if "rs" in cp else {}
    out = cp["output"] if "output" in cp else {}
    base = os.path.dirname(os.path.abspath(path))
    try:
        gpath = g.get("path")
        if gpath and not os.path.isabs(gpath):
            gpath = os.path.join(base, gpath)
        spec = GraphSpec(
            kind=g.get("kind", "").strip().lower(),
            n=_ints(g.get("n", "")),
            avg_degree=float(g.get("avg_degree", "6")),
            m=int(g.get("m", "3")),
            path=gpath,
            seed=int(g.get("seed", "0")),
        )
        tol = rs.get("tolerance", "").strip()
        cfg = ExperimentConfig(
            graph=spec,
            n_sources=_ints(st.get("n_sources", "")),
            q_targets=_floats(st["q_targets"]) if "q_targets" in st else None,
            n_targets=_ints(st["n_targets"]) if "n_targets" in st else None,
            trials=int(st.get("trials", "20")),
            master_seed=int(st.get("master_seed", "0")),
            estimators=tuple(
                e.strip() for e in st.get("estimators", ",".join(ESTIMATORS)).split(",") if e.strip()
            ),
            tie_break=st.get("tie_break", "path").strip(),
            rs=RSOptions(
                b_initial=int(rs.get("b_initial", "10")),
                b_max=int(rs.get("b_max", "80")),
                refine_width=int(rs.get("refine_width", "4")),
                tolerance=float(tol) if tol else None,
                max_iter=int(rs.get("max_iter", "64")),
            ),
            scaling_B=int(rs.get("scaling_b", "10")),
            output=out.get("path"),
            timing=out.get("timing", "false").strip().lower() in ("1", "true", "yes"),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg.validate()
    return cfg


CSV_HEADER = ("topology", "N", "nS", "nT", "qT", "trial", "seed", "Nstar", "Mstar", "X",
              "NbarMinus", "L1O", "L1Oapprox", "RS", "nTstar", "iters", "ms")


@dataclass
class TrialRow:
    topology: str
    N: int
    nS: int
    nT: int
    qT: float
    trial: int
    seed: int
    Nstar: int
    Mstar: int
    X: int | None = None
    NbarMinus: float | None = None
    L1O: float | None = None
    L1Oapprox: float | None = None
    RS: float | None = None
    nTstar: int | None = None
    iters: int | None = None
    ms: int | None = None

    def cells(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                out.append("")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out


@dataclass(frozen=True)
class Setting:
    index: int
    n: int | None
    n_sources: int
    n_targets: int | None
    q_targets: float | None


def settings(cfg: ExperimentConfig) -> list[Setting]:
    out = []
    targets = cfg.q_targets if cfg.q_targets is not None else cfg.n_targets
    for n in cfg.graph.sizes():
        for ns in cfg.n_sources:
            for t in targets:
                q, nt = (t, None) if cfg.q_targets is not None else (None, t)
                out.append(Setting(len(out), n, ns, nt, q))
    return out


def graph_seed(cfg: ExperimentConfig, setting: Setting) -> int:
    return _seeding.child_seed(cfg.master_seed, 0, cfg.graph.seed, setting.index)


def trial_seed(cfg: ExperimentConfig, setting: Setting, trial: int) -> int:
    return _seeding.child_seed(cfg.master_seed, 1, setting.index, trial)


def resolve_targets(setting: Setting, n: int) -> tuple[int, float]:
    if setting.q_targets is not None:
        nt = max(2, round(setting.q_targets * n))
        q = setting.q_targets
    else:
        nt = setting.n_targets
        q = nt / n
    if setting.n_sources + nt > n:
        raise ConfigError(
            f"setting {setting.index}: n_S + n_T = {setting.n_sources + nt} exceeds N = {n}"
        )
    return nt, q


def run_trial(g: Graph, topology: str, n_sources: int, n_targets: int, q: float,
              trial: int, seed: int, estimators=ESTIMATORS, rs: RSOptions | None = None,
              tie_break: str = "path", timing: bool = False) -> TrialRow:
    """One study plus the requested estimators.

    Estimator failures are logged and leave NaN in the affected cells.
    """
    t0 = time.perf_counter()
    study = run_study(g, n_sources, n_targets, seed, tie_break=tie_break)
    row = TrialRow(topology, g.num_vertices, n_sources, n_targets, q, trial, seed,
                   study.n_star, study.m_star)
    try:
        stats = l1o_stats(study)
        row.X, row.NbarMinus = stats.X, stats.nbar_minus
        if "l1o" in estimators:
            row.L1O = estimate_l1o(study, stats)
        if "l1o_approx" in estimators:
            row.L1Oapprox = estimate_l1o_approx(study, stats)
    except Exception as exc:  # noqa: BLE001 - isolate trial failures
        log.warning("trial %d: leave-one-out failed: %s", trial, exc)
        row.L1O = row.L1Oapprox = math.nan
    if "rs" in estimators:
        opts = replace(rs or RSOptions(), seed=_seeding.child_seed(seed, 2), tie_break=tie_break)
        try:
            rep = estimate_rs(study, None, opts)
            row.RS, row.nTstar, row.iters = rep.estimate, rep.n_star_T, rep.iterations
        except Exception as exc:  # noqa: BLE001
            log.warning("trial %d: resampling failed: %s", trial, exc)
            row.RS = math.nan
    if timing:
        row.ms = round(1000 * (time.perf_counter() - t0))
    return row


def run_sweep(cfg: ExperimentConfig, out=None) -> list[TrialRow]:
    """Every setting x trial; rows also streamed as CSV to ``out`` if given."""
    cfg.validate()
    writer = None
    if out is not None:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
    rows = []
    for st in settings(cfg):
        g = cfg.graph.build(st.n, graph_seed(cfg, st))
        nt, q = resolve_targets(st, g.num_vertices)
        log.info("setting %d: N=%d n_S=%d n_T=%d", st.index, g.num_vertices, st.n_sources, nt)
        for trial in range(cfg.trials):
            row = run_trial(g, cfg.graph.topology, st.n_sources, nt, q, trial,
                            trial_seed(cfg, st, trial), cfg.estimators, cfg.rs,
                            cfg.tie_break, cfg.timing)
            rows.append(row)
            if writer is not None:
                writer.writerow(row.cells())
    return rows


def rows_to_csv(rows: list[TrialRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def read_rows(path: str | os.PathLike) -> list[TrialRow]:
    ints = {"N", "nS", "nT", "trial", "seed", "Nstar", "Mstar", "X", "nTstar", "iters", "ms"}
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            vals = {}
            for k in CSV_HEADER:
                v = rec[k]
                if k == "topology":
                    vals[k] = v
                elif v == "":
                    vals[k] = None
                else:
                    vals[k] = int(v) if k in ints else float(v)
            rows.append(TrialRow(**vals))
    return rows


RATIO_COLUMNS = ("Nstar", "L1O", "L1Oapprox", "RS")


@dataclass
class Summary:
    topology: str
    N: int
    nS: int
    nT: int
    qT: float
    count: int
    stats: dict[str, tuple[float, float, int]]

    @property
    def single(self) -> bool:
        return self.count == 1


def summarize(rows: list[TrialRow]) -> list[Summary]:
    """Mean and sample standard deviation of each estimate / N per setting."""
    if not rows:
        raise ValueError("no rows to summarize")
    groups: dict[tuple, list[TrialRow]] = {}
    for r in rows:
        groups.setdefault((r.topology, r.N, r.nS, r.nT), []).append(r)
    out = []
    for (topo, n, ns, nt), rs in groups.items():
        stats = {}
        for col in RATIO_COLUMNS:
            vals = [getattr(r, col) / n for r in rs
                    if getattr(r, col) is not None and math.isfinite(getattr(r, col))]
            if vals:
                sd = stdev(vals) if len(vals) > 1 else 0.0
                stats[col] = (mean(vals), sd, len(vals))
        out.append(Summary(topo, n, ns, nt, rs[0].qT, len(rs), stats))
    return out


def summary_table(summaries: list[Summary]) -> str:
    """Whitespace-separated columns for gnuplot; missing values are NaN."""
    cols = ["#topology", "N", "nS", "nT", "qT", "trials"]
    for c in RATIO_COLUMNS:
        cols += [f"{c}_mean", f"{c}_std"]
    lines = [" ".join(cols)]
    for s in summaries:
        cells = [s.topology, str(s.N), str(s.nS), str(s.nT), repr(s.qT), str(s.count)]
        for c in RATIO_COLUMNS:
            m, sd, _ = s.stats.get(c, (math.nan, math.nan, 0))
            cells += [repr(m), repr(sd)]
        lines.append(" ".join(cells))
    return "\n".join(lines) + "\n"


@dataclass
class ScalingRow:
    topology: str
    N: int
    nS: int
    qT: float
    trials: int
    discovery: float
    rediscovery: float
    rel_diff: float


SCALING_HEADER = ("topology", "N", "nS", "qT", "trials", "NstarOverN", "NssOverNstar", "relDiff")


def scaling_point(g: Graph, n_sources: int, q: float, trials: int, seed: int, B: int,
                  tie_break: str = "path") -> tuple[float, float, float]:
    """Mean N*/N, mean N**/N* with q*_T = q_T, and mean relative gap.

    The gap is ``(N*/N - N**/N*) / (N*/N)`` averaged over trials.
    """
    n = g.num_vertices
    disc, redisc, gap = [], [], []
    for trial in range(trials):
        ts = _seeding.child_seed(seed, trial)
        nt = max(2, round(q * n))
        study = run_study(g, n_sources, nt, ts, tie_break=tie_break)
        gs = study.sampled_graph()
        nt_star = min(max(1, round(q * study.n_star)), study.n_star - n_sources)
        r2 = resample_mean(gs, n_sources, nt_star, B, _seeding.child_seed(ts, 3),
                           tie_break) / study.n_star
        r1 = study.n_star / n
        disc.append(r1)
        redisc.append(r2)
        gap.append((r1 - r2) / r1)
    return mean(disc), mean(redisc), mean(gap)


def validate_scaling(cfg: ExperimentConfig) -> list[ScalingRow]:
    """Discovery ratio on G against rediscovery on G* at matched ratios."""
    cfg.validate()
    rows = []
    for st in settings(cfg):
        g = cfg.graph.build(st.n, graph_seed(cfg, st))
        _, q = resolve_targets(st, g.num_vertices)
        d, r, gap = scaling_point(g, st.n_sources, q, cfg.trials,
                                  _seeding.child_seed(cfg.master_seed, 4, st.index),
                                  cfg.scaling_B, cfg.tie_break)
        rows.append(ScalingRow(cfg.graph.topology, g.num_vertices, st.n_sources, q,
                               cfg.trials, d, r, gap))
    return rows


def scaling_csv(rows: list[ScalingRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCALING_HEADER)
    for r in rows:
        w.writerow([r.topology, r.N, r.nS, repr(r.qT), r.trials,
                    repr(r.discovery), repr(r.rediscovery), repr(r.rel_diff)])
    return buf.getvalue()
