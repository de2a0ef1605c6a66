"""Estimators of the true vertex count N from a traceroute study.

All estimators are clamped below at N*, the number of vertices actually
observed, since the true size can never be smaller.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from tracesize import _seeding
from tracesize.graph import Graph, giant_component
from tracesize.routing import TraceStudy, count_discovered, sample_endpoints

log = logging.getLogger(__name__)


class EstimationError(ValueError):
    pass


class RSConvergenceError(EstimationError):
    """Fixed-point search ran out of iterations."""

    def __init__(self, msg, bracket, best):
        super().__init__(msg)
        self.bracket = bracket
        self.best = best


def naive(study: TraceStudy) -> int:
    return study.n_star


@dataclass(frozen=True)
class L1OStats:
    """Leave-one-out summary of a study.

    ``delta[j]`` is 1 when target ``j`` appears on no trace to another
    target; ``unique[j]`` counts the vertices that only traces to target
    ``j`` reach, so the study minus target ``j`` sees ``N* - unique[j]``.
    """

    n_star: int
    n_sources: int
    n_targets: int
    delta: np.ndarray
    unique: np.ndarray

    @property
    def X(self) -> int:
        return int(self.delta.sum())

    @property
    def u_sum(self) -> int:
        return int(self.unique.sum())

    @property
    def nbar_minus(self) -> float:
        return self.n_star - self.u_sum / self.n_targets

    @property
    def n_star_minus(self) -> np.ndarray:
        return self.n_star - self.unique


def l1o_stats(study: TraceStudy) -> L1OStats:
    n_t = study.n_targets
    if n_t < 2:
        raise EstimationError("leave-one-out needs at least 2 targets")
    pos = np.searchsorted(study.vertices, study.cover_vertex)
    hits = np.bincount(pos, minlength=study.n_star)
    only = hits[pos] == 1
    unique = np.bincount(study.cover_target[only], minlength=n_t)
    delta = (hits[np.searchsorted(study.vertices, study.targets)] == 1).astype(np.int8)
    return L1OStats(study.n_star, study.n_sources, n_t, delta, unique)


def l1o_formula(n_sources: int, n_targets: int, X: float, nbar_minus: float) -> float:
    """Leave-one-out size estimate before clamping."""
    num = n_targets * nbar_minus - (n_sources + n_targets - 1) * X
    return (n_targets + 1) / n_targets * num / (n_targets + 1 - X)


def l1o_approx_formula(n_sources: int, n_targets: int, n_star: float, X: float) -> float:
    """Coverage-style form: endpoints counted once, the rest inflated by 1/(1 - w)."""
    w = X / (n_targets + 1)
    base = n_sources + n_targets
    return base + (n_star - base) / (1.0 - w)


def estimate_l1o(study: TraceStudy, stats: L1OStats | None = None) -> float:
    s = stats or l1o_stats(study)
    return max(l1o_formula(s.n_sources, s.n_targets, s.X, s.nbar_minus), float(s.n_star))


def estimate_l1o_approx(study: TraceStudy, stats: L1OStats | None = None) -> float:
    if study.n_targets < 1:
        raise EstimationError("need at least 1 target")
    if stats is None:
        # a lone target is never seen by another trace
        X = int(l1o_stats(study).X) if study.n_targets >= 2 else 1
    else:
        X = stats.X
    value = l1o_approx_formula(study.n_sources, study.n_targets, study.n_star, X)
    return max(value, float(study.n_star))


@dataclass
class RSOptions:
    """Fixed-point search settings for the resampling estimator.

    ``b_initial`` resamples are averaged per probe while bracketing; once
    the bracket is at most ``refine_width`` wide, B doubles per step up to
    ``b_max``. ``tolerance`` defaults to ``0.5 / n_T``.
    """

    b_initial: int = 10
    b_max: int = 80
    refine_width: int = 4
    tolerance: float | None = None
    max_iter: int = 64
    seed: int = 0
    tie_break: str = "path"


@dataclass
class RSReport:
    n_star_T: int
    nbar_star_star: float
    B_used: int
    iterations: int
    bracket: tuple[int, int]
    estimate: float
    residual: float
    degenerate: bool = False
    evaluations: list[tuple[int, int, float]] = field(default_factory=list)


class _Resampler:
    """Cached draws of N** on G*, one independent stream per (n*_T, k)."""

    def __init__(self, g: Graph, n_sources: int, seed: int, tie_break: str):
        self.g = g
        self.n_sources = n_sources
        self.seed = seed
        self.tie_break = tie_break
        self.draws: dict[int, list[int]] = {}

    def draw(self, n_targets: int, k: int) -> int:
        s = _seeding.child_seed(self.seed, n_targets, k)
        src, tgt = sample_endpoints(self.g.num_vertices, self.n_sources, n_targets, s)
        return count_discovered(self.g, src, tgt, s, self.tie_break)

    def mean(self, n_targets: int, B: int) -> float:
        got = self.draws.setdefault(n_targets, [])
        while len(got) < B:
            got.append(self.draw(n_targets, len(got)))
        # exact integer sum before dividing
        return sum(got[:B]) / B


def resample_mean(g_star: Graph, n_sources: int, n_targets: int, B: int, seed: int,
                  tie_break: str = "path") -> float:
    """Mean size of B traceroute studies run on ``g_star`` itself."""
    return _Resampler(g_star, n_sources, seed, tie_break).mean(n_targets, B)


def _connected_sample(study: TraceStudy, g_star: Graph | None) -> Graph:
    g = g_star if g_star is not None else study.sampled_graph()
    if not g.is_connected():
        log.warning("G* is disconnected; resampling within its giant component")
        g = giant_component(g.edges(), num_vertices=g.num_vertices)
    return g


def estimate_rs(study: TraceStudy, g_star: Graph | None = None,
                opts: RSOptions | None = None) -> RSReport:
    """Resampling estimate N*^2 / N** at the self-consistent target count.

    Bisection over the integer n*_T in ``[1, min(n_T, N* - n_S)]`` on the
    sign of ``f(n) = N**(n)/N* - n/n_T``, where N**(n) is the mean size of
    B re-run studies on G* with ``n_S`` sources and ``n`` targets.
    """
    opts = opts or RSOptions()
    g = _connected_sample(study, g_star)
    n_total = g.num_vertices
    n_s, n_t = study.n_sources, study.n_targets
    if n_total < n_s + 2:
        raise EstimationError(f"G* too small for resampling: {n_total} vertices, n_S={n_s}")
    tol = opts.tolerance if opts.tolerance is not None else 0.5 / n_t
    rs = _Resampler(g, n_s, opts.seed, opts.tie_break)
    evals: list[tuple[int, int, float]] = []

    def f(n: int, B: int) -> float:
        ratio = rs.mean(n, B) / n_total
        evals.append((n, B, ratio))
        return ratio - n / n_t

    def report(n, B, iters, bracket, resid, degenerate=False):
        nbar = rs.mean(n, B)
        # N*/ratio reduces to N*^2/N** when G* is connected
        est = max(study.n_star * n_total / nbar, float(study.n_star))
        return RSReport(n, nbar, B, iters, bracket, est, resid, degenerate, evals)

    lo, hi = 1, min(n_t, n_total - n_s)
    B = opts.b_initial
    f_lo = f(lo, B)
    if f_lo <= 0:
        return report(lo, B, 0, (lo, lo), f_lo, degenerate=True)
    if hi == lo:
        return report(lo, B, 0, (lo, hi), f_lo, degenerate=True)
    f_hi = f(hi, B)
    if f_hi > 0:
        return report(hi, B, 0, (hi, hi), f_hi, degenerate=True)
    iters = 0
    while hi - lo > 1:
        if iters >= opts.max_iter:
            best = lo if abs(f_lo) <= abs(f_hi) else hi
            raise RSConvergenceError(
                f"no fixed point within {opts.max_iter} iterations", (lo, hi), best
            )
        if hi - lo <= opts.refine_width:
            B = min(2 * B, opts.b_max)
        mid = (lo + hi) // 2
        fm = f(mid, B)
        iters += 1
        if abs(fm) <= tol:
            return report(mid, B, iters, (lo, hi), fm)
        if fm > 0:
            lo, f_lo = mid, fm
        else:
            hi, f_hi = mid, fm
    f_lo, f_hi = f(lo, B), f(hi, B)
    best, resid = (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)
    return report(best, B, iters, (lo, hi), resid)


def estimate_ping(n_probes: int, n_responses: int, address_space: int = 2**32) -> float:
    """Address-space size times the observed response fraction."""
    if n_probes < 1 or not 0 <= n_responses <= n_probes:
        raise EstimationError("need n_probes >= 1 and 0 <= n_responses <= n_probes")
    return address_space * n_responses / n_probes


@dataclass
class EstimateReport:
    n_star: int
    m_star: int
    l1o_exact: float
    l1o_approx: float
    stats: L1OStats
    rs: RSReport | None = None


def estimate_all(study: TraceStudy, rs: RSOptions | None = None,
                 g_star: Graph | None = None) -> EstimateReport:
    """Every estimator on one study; the resampling one only when ``rs`` is given."""
    stats = l1o_stats(study)
    rep = EstimateReport(
        n_star=study.n_star,
        m_star=study.m_star,
        l1o_exact=estimate_l1o(study, stats),
        l1o_approx=estimate_l1o_approx(study, stats),
        stats=stats,
    )
    if rs is not None:
        rep.rs = estimate_rs(study, g_star, rs)
    for name in ("l1o_exact", "l1o_approx"):
        if not math.isfinite(getattr(rep, name)):
            raise EstimationError(f"non-finite {name}")
    return rep
