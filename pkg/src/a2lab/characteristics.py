"""
A2 and A-infinity characteristics, reverse Hölder and subset-mass checks.

Values are certified lower bounds of suprema over intervals: each reported
number is the exact product of averages (or an exact lower Riemann sum)
for explicit intervals found by search.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace

from .logpos import NEG_INF, ZERO, LogPos, Rat, coord, log2q, lsum
from .operators import SupSearchConfig, maximal_over_containing
from .piecewise import DomainError
from .weights import Restricted, SelfSimilarFn, WeightPair

__all__ = [
    "A2Config",
    "A2Report",
    "AInfReport",
    "HolderCheck",
    "MassCheck",
    "a2_product",
    "a2_dyadic",
    "a2_search",
    "a_infty_estimate",
    "reverse_holder_check",
    "subset_mass_check",
    "subset_mass_sweep",
    "DEFAULT_C_SWEEP",
]

DEFAULT_C_SWEEP = (0.125, 0.25, 0.5, 1.0)

Interval = tuple[Rat, Rat]


@dataclass(frozen=True)
class A2Config:
    budget: int = 96  # candidate endpoints kept for the pairwise scan
    refine_top: int = 8
    refinement_depth: int = 64
    tolerance: float = 1e-10
    extra_levels: int = 6  # self-similar levels scanned beyond log2(1/alpha)
    depth: int | None = None  # dyadic depth; None picks from alpha
    check_convergence: bool = True

    def doubled(self) -> "A2Config":
        return replace(self, budget=2 * self.budget, refine_top=2 * self.refine_top,
                       extra_levels=2 * self.extra_levels, check_convergence=False)


@dataclass
class A2Report:
    value: LogPos
    interval: Interval
    budget: int
    dyadic: LogPos
    dyadic_interval: Interval | None = None
    evaluations: int = 0
    converged: bool | None = None

    def to_dict(self) -> dict:
        return {
            "value_log2": self.value.log2,
            "interval": [str(self.interval[0]), str(self.interval[1])],
            "dyadic_log2": self.dyadic.log2,
            "budget": self.budget,
            "evaluations": self.evaluations,
            "converged": self.converged,
        }


@dataclass
class AInfReport:
    value: float
    grid: int
    diagnostics: list = field(default_factory=list)  # (interval, ratio) per candidate
    approximate: bool = True

    @property
    def epsilon(self) -> float:
        return 1.0 / (4.0 * self.value)


def a2_product(pair: WeightPair, l, r) -> LogPos:
    """``<w>_I <sigma>_I`` for I = [l, r), exactly."""
    l, r = coord(l), coord(r)
    if r <= l:
        raise ValueError("empty interval")
    s = pair.sigma.integrate(l, r)
    w = pair.w.integrate(l, r)
    if s.is_zero or w.is_zero:
        return ZERO
    return LogPos(s.log2 + w.log2 - 2 * log2q(r - l))


def _default_depth(pair: WeightPair) -> int:
    return max(8, math.ceil(math.log2(1 / pair.alpha)) + 16)


def a2_dyadic(pair: WeightPair, depth: int | None = None, with_interval: bool = False):
    """Max of ``<w>_I <sigma>_I`` over dyadic I in [0, 1) of generation <= depth.

    Best-first branch and bound: a dyadic interval's descendants are bounded
    by ``max sigma * max w`` over its closure.
    """
    depth = _default_depth(pair) if depth is None else depth
    if depth < 1:
        raise ValueError("depth must be >= 1")
    best, best_iv = NEG_INF, None

    def bound(l, r):
        _, s_hi = pair.sigma.range_log2(l, r)
        _, w_hi = pair.w.range_log2(l, r)
        return s_hi + w_hi

    heap = [(-bound(Rat(0), Rat(1)), 0, 0)]  # (-bound, generation, index)
    while heap:
        nb, g, j = heapq.heappop(heap)
        if -nb <= best:
            break
        l, r = Rat(j, 1 << g), Rat(j + 1, 1 << g)
        v = a2_product(pair, l, r).log2
        if v > best:
            best, best_iv = v, (l, r)
        if g < depth:
            for c in (2 * j, 2 * j + 1):
                cl, cr = Rat(c, 1 << (g + 1)), Rat(c + 1, 1 << (g + 1))
                b = bound(cl, cr)
                if b > best:
                    heapq.heappush(heap, (-b, g + 1, c))
    out = LogPos(best)
    return (out, best_iv) if with_interval else out


def _candidates(pair: WeightPair, cfg: A2Config) -> list[Rat]:
    f = pair.sigma
    lo, hi = f.support()
    if isinstance(f, SelfSimilarFn):
        levels = math.ceil(math.log2(1 / pair.alpha)) + cfg.extra_levels
        pts = f.breakpoints(lo, hi, levels)
    else:
        pts = f.breakpoints(lo, hi)
    pts = sorted(set(pts) | {lo, hi})
    if len(pts) > cfg.budget:
        # keep the coarsest structure: endpoints first, then by dyadic depth
        pts = sorted(pts, key=lambda x: (x.denominator, x))[: cfg.budget]
        pts = sorted(set(pts) | {lo, hi})
    return pts


def _golden(phi, a: Rat, b: Rat, cfg: A2Config):
    from .operators import INV_PHI, INV_PHI2, _scaled

    h = b - a
    if h <= 0:
        return
    scale = max(abs(a), abs(b), h)
    tol = _scaled(scale, cfg.tolerance)
    if h <= tol:
        return
    n = max(1, min(cfg.refinement_depth, math.ceil(math.log(float(tol / h)) / math.log(INV_PHI))))
    c, d = a + _scaled(h, INV_PHI2), a + _scaled(h, INV_PHI)
    yc, yd = phi(c), phi(d)
    for _ in range(n - 1):
        if yc > yd:
            b, d, yd = d, c, yc
            c = a + _scaled(b - a, INV_PHI2)
            yc = phi(c)
        else:
            a, c, yc = c, d, yd
            d = a + _scaled(b - a, INV_PHI)
            yd = phi(d)


def a2_search(pair: WeightPair, cfg: A2Config | None = None) -> A2Report:
    """Certified lower bound of ``[w]_A2`` over general intervals."""
    cfg = cfg or A2Config()
    depth = cfg.depth if cfg.depth is not None else _default_depth(pair)
    dy, dy_iv = a2_dyadic(pair, depth, with_interval=True)
    pts = _candidates(pair, cfg)
    evals = 0
    scored = []
    for i, L in enumerate(pts):
        for R in pts[i + 1:]:
            scored.append((a2_product(pair, L, R).log2, L, R))
            evals += 1
    if dy_iv is not None:
        scored.append((dy.log2, *dy_iv))
    scored.sort(key=lambda t: (-t[0], t[2] - t[1], t[1]))
    best = list(scored[0]) if scored else [NEG_INF, None, None]

    def offer(v, L, R):
        if v > best[0] or (v == best[0] and (R - L, L) < (best[2] - best[1], best[1])):
            best[:] = [v, L, R]

    lo, hi = pts[0], pts[-1]
    for v0, L0, R0 in scored[: cfg.refine_top]:
        local = [v0, L0, R0]

        def phi_l(x, R=None):
            nonlocal evals
            R = local[2]
            if x >= R:
                return NEG_INF
            evals += 1
            v = a2_product(pair, x, R).log2
            if v > local[0]:
                local[:] = [v, x, R]
            offer(v, x, R)
            return v

        def phi_r(x):
            nonlocal evals
            L = local[1]
            if x <= L:
                return NEG_INF
            evals += 1
            v = a2_product(pair, L, x).log2
            if v > local[0]:
                local[:] = [v, L, x]
            offer(v, L, x)
            return v

        lp = sorted(set(pts) | {L0})
        for a, b in _brackets(L0, lp, lo, R0):
            _golden(phi_l, a, b, cfg)
        rp = sorted(set(pts) | {local[2]})
        for a, b in _brackets(local[2], rp, local[1], hi):
            _golden(phi_r, a, b, cfg)
    report = A2Report(LogPos(best[0]), (best[1], best[2]), cfg.budget, dy, dy_iv, evals)
    if cfg.check_convergence:
        again = a2_search(pair, cfg.doubled())
        report.converged = abs(again.value.log2 - report.value.log2) <= 1e-9 * max(1.0, abs(report.value.log2))
        if again.value > report.value:
            report.value, report.interval = again.value, again.interval
        report.evaluations += again.evaluations
    return report


def _brackets(x, pts, lo, hi):
    inside = sorted(p for p in set(pts) | {x} if lo <= p <= hi)
    if x not in inside:
        return []
    i = inside.index(x)
    out = []
    if i > 0:
        out.append((inside[i - 1], x))
    if i + 1 < len(inside):
        out.append((x, inside[i + 1]))
    return out


# -- A-infinity -------------------------------------------------------------------

AINF_SEARCH = SupSearchConfig(max_candidates=12, refinement_depth=20, tolerance=1e-6, levels=24)


def _grid(w, l: Rat, r: Rat, n: int) -> list[Rat]:
    """Nested grid on [l, r]: uniform core plus geometric clusters at the
    ends and at interior breakpoints.  ``_grid(n) ⊂ _grid(2n)``."""
    L = r - l
    half = max(1, n // 2)
    pts = {l + L * Rat(j, half) for j in range(half + 1)}
    bps = [b for b in (w.breakpoints(l, r, 24) if isinstance(w, SelfSimilarFn) else w.breakpoints(l, r))
           if l < b < r][:16]
    m = max(4, n // (4 * (len(bps) + 2)))
    for i in range(1, m + 1):
        d = L / (1 << i)
        pts.add(l + d)
        pts.add(r - d)
        for b in bps:
            for y in (b - d, b + d):
                if l < y < r:
                    pts.add(y)
    return sorted(pts)


def a_infty_estimate(w, I_set, grid: int = 512, cfg: SupSearchConfig | None = None) -> AInfReport:
    """Lower estimate of ``sup_I w(I)^-1 int_I M(w 1_I)``.

    For each I the integral is bounded below by ``sum |cell| * M_cell``,
    where ``M_cell`` is the best average of ``w 1_I`` over an interval
    containing the whole cell, so every grid value is a certified lower
    bound and refining the grid cannot decrease it.
    """
    if grid < 16:
        raise ValueError("grid must have at least 16 nodes")
    cfg = cfg or AINF_SEARCH
    best = 1.0
    diag = []
    for l, r in I_set:
        l, r = coord(l), coord(r)
        mass = w.integrate(l, r)
        if mass.is_zero:
            raise ValueError(f"w([{l}, {r})) = 0")
        f = Restricted(w, l, r)
        nodes = _grid(w, l, r, grid)
        terms = []
        for a, b in zip(nodes, nodes[1:]):
            m, _ = maximal_over_containing(f, (a, b), cfg)
            if not m.is_zero:
                terms.append(m.log2 + log2q(b - a))
        ratio = 2.0 ** (lsum(terms) - mass.log2)
        diag.append(((l, r), ratio))
        best = max(best, ratio)
    return AInfReport(best, grid, diag)


# -- reverse Hölder and subset mass ---------------------------------------------------


@dataclass
class HolderCheck:
    passed: bool
    ratio: float  # lhs / rhs, pass iff <= 1
    epsilon: float
    lhs: LogPos = ZERO
    rhs: LogPos = ZERO
    integrable: bool = True


def reverse_holder_check(w, I, ainf: float) -> HolderCheck:
    """Compare ``<w^(1+eps)>_I`` against ``2 <w>_I^(1+eps)`` with eps = 1/(4 ainf)."""
    if ainf < 1:
        raise ValueError("A-infinity characteristic is at least 1")
    eps = 1.0 / (4.0 * ainf)
    l, r = coord(I[0]), coord(I[1])
    n = LogPos.of(r - l)
    try:
        lhs = w.pow_scalar(1 + eps).integrate(l, r) / n
    except DomainError:
        return HolderCheck(False, math.inf, eps, integrable=False)
    rhs = LogPos.of(2) * (w.integrate(l, r) / n) ** (1 + eps)
    ratio = 2.0 ** (lhs.log2 - rhs.log2)
    return HolderCheck(ratio <= 1.0, ratio, eps, lhs, rhs)


@dataclass
class MassCheck:
    passed: bool
    margin: float  # log2(rhs) - log2(lhs); pass iff >= 0
    c_const: float


def _union(Q, E) -> list[Interval]:
    ql, qr = coord(Q[0]), coord(Q[1])
    out = []
    for l, r in sorted((coord(a), coord(b)) for a, b in E):
        if l < ql or r > qr or r < l:
            raise ValueError(f"E piece [{l}, {r}) is not inside Q")
        if l == r:
            continue
        if out and l <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], r))
        else:
            out.append((l, r))
    return out


def subset_mass_check(w, Q, E, c_const: float, ainf: float) -> MassCheck:
    """``w(E) <= 2 w(Q) (|E|/|Q|)^(c/ainf)`` for a finite union E inside Q."""
    pieces = _union(Q, E)
    ql, qr = coord(Q[0]), coord(Q[1])
    if not pieces:
        return MassCheck(True, math.inf, c_const)
    lhs = lsum(w.integrate(l, r).log2 for l, r in pieces)
    size = sum((r - l for l, r in pieces), Rat(0))
    rhs = 1 + w.integrate(ql, qr).log2 + (c_const / ainf) * log2q(size / (qr - ql))
    margin = rhs - lhs
    return MassCheck(margin >= 0, margin, c_const)


def subset_mass_sweep(w, Q, E, ainf: float, cs=DEFAULT_C_SWEEP) -> list[float]:
    """The constants in ``cs`` for which the subset-mass inequality holds."""
    return [c for c in cs if subset_mass_check(w, Q, E, c, ainf).passed]
