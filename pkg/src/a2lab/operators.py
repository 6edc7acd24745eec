"""
Sparse families, maximal averages, sparse and strong-sparse operators.

Everything is exact given the piecewise power-law algebra except the
supremum over containing intervals in ``M_B f``, which is a certified lower
bound: the best average over an explicit candidate set plus golden-section
refinement of the endpoints.

Function arguments only need ``integrate(l, r)``, ``evaluate(x)``,
``support()`` and ``breakpoints(lo, hi[, limit])``; both
:class:`~a2lab.piecewise.PiecewisePowerFn` and
:class:`~a2lab.weights.SelfSimilarFn` qualify.
"""

from __future__ import annotations

import math
import re
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Sequence

from .logpos import NEG_INF, ZERO, LogPos, Rat, coord, log2q, lsum
from .piecewise import StepFn, average
from .weights import SelfSimilarFn

__all__ = [
    "UnsupportedFamilyError",
    "NotSparseError",
    "SparseFamily",
    "SupSearchConfig",
    "laminar_forest",
    "check_sparse",
    "nested_family",
    "band_family",
    "parse_family_spec",
    "maximal_over_containing",
    "hl_maximal_at",
    "sparse_apply",
    "strong_sparse_apply",
    "strong_sparse_values",
    "overlay",
    "l2w_norm_sq",
    "l2w_norm_sq_fn",
    "weak_l2w_norm",
]

Interval = tuple[Rat, Rat]

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI2 = (3 - math.sqrt(5)) / 2


class UnsupportedFamilyError(ValueError):
    """The family is not laminar."""


class NotSparseError(ValueError):
    """Some residual set is smaller than gamma times its interval."""


@dataclass(frozen=True)
class SparseFamily:
    intervals: tuple
    gamma: float
    certificate: tuple  # per interval: tuple of disjoint sub-intervals E_A
    parent: tuple = field(repr=False, default=())

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)


@dataclass(frozen=True)
class SupSearchConfig:
    max_expansion: float | None = None  # None: the support length
    refinement_depth: int = 64
    tolerance: float = 1e-10
    max_candidates: int = 32
    levels: int = 48  # breakpoint levels scanned in self-similar inputs
    rounds: int = 1

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.refinement_depth < 1:
            raise ValueError("refinement_depth must be >= 1")


def _norm(intervals) -> list[Interval]:
    out = []
    for l, r in intervals:
        l, r = coord(l), coord(r)
        if not l < r:
            raise ValueError(f"empty interval [{l}, {r})")
        out.append((l, r))
    return out


# -- families ----------------------------------------------------------------


def laminar_forest(intervals: Sequence[Interval]) -> tuple[list[int], list[int]]:
    """Preorder of a laminar family and each member's immediate container.

    Identical copies nest inside one another in input order.
    """
    order = sorted(range(len(intervals)), key=lambda i: (intervals[i][0], -intervals[i][1], i))
    parent = [-1] * len(intervals)
    stack: list[int] = []
    for i in order:
        l, r = intervals[i]
        while stack and intervals[stack[-1]][1] <= l:
            stack.pop()
        if stack:
            pl, pr = intervals[stack[-1]]
            if r > pr:
                raise UnsupportedFamilyError(
                    f"intervals [{float(pl)}, {float(pr)}) and [{float(l)}, {float(r)}) overlap without nesting")
            parent[i] = stack[-1]
        stack.append(i)
    return order, parent


def check_sparse(intervals, gamma: float = 0.5) -> SparseFamily:
    """Certify gamma-sparseness of a laminar family.

    E_A is A minus the union of its maximal children; these sets are
    pairwise disjoint by construction.
    """
    ivs = _norm(intervals.intervals if isinstance(intervals, SparseFamily) else intervals)
    order, parent = laminar_forest(ivs)
    children: dict[int, list[int]] = {i: [] for i in range(len(ivs))}
    for i in order:
        if parent[i] >= 0:
            children[parent[i]].append(i)
    cert = []
    g = Rat(gamma)
    for i, (l, r) in enumerate(ivs):
        gaps, x = [], l
        for c in children[i]:
            cl, cr = ivs[c]
            if cl > x:
                gaps.append((x, cl))
            x = max(x, cr)
        if x < r:
            gaps.append((x, r))
        size = sum((b - a for a, b in gaps), Rat(0))
        if size < g * (r - l):
            raise NotSparseError(
                f"interval [{float(l)}, {float(r)}) keeps only {float(size / (r - l)):.3g} of its length")
        cert.append(tuple(gaps))
    return SparseFamily(tuple(ivs), float(gamma), tuple(cert), tuple(parent))


def nested_family(kmax: int, kmin: int = 1) -> list[Interval]:
    """{[0, 2^-k) : kmin <= k <= kmax}."""
    return [(Rat(0), Rat(1, 1 << k)) for k in range(kmin, kmax + 1)]


def band_family(a: int, jmax: int, kmax: int = 1, kmin: int = 1) -> list[Interval]:
    """{[2^-k - 2^-j, 2^-k) : kmin <= k <= kmax, a+k <= j < a+k+jmax}."""
    out = []
    for k in range(kmin, kmax + 1):
        top = Rat(1, 1 << k)
        for j in range(a + k, a + k + jmax):
            out.append((top - Rat(1, 1 << j), top))
    return out


def parse_family_spec(spec: str) -> list[Interval]:
    """``nested:kmax=40`` or ``bands:a=6,jmax=80[,kmax=1]``."""
    kind, _, rest = spec.partition(":")
    kv = dict(p.split("=", 1) for p in re.split(r"\s*,\s*", rest.strip()) if p)
    kind = kind.strip()
    if kind == "nested":
        return nested_family(int(kv.get("kmax", 40)), int(kv.get("kmin", 1)))
    if kind == "bands":
        return band_family(int(kv["a"]), int(kv.get("jmax", 80)), int(kv.get("kmax", 1)), int(kv.get("kmin", 1)))
    raise ValueError(f"unknown family kind {kind!r}")


# -- the supremum search -------------------------------------------------------


def _scaled(h: Rat, t: float) -> Rat:
    """``h * t`` rounded to ~53 significant bits (keeps Fractions small)."""
    if h == 0:
        return Rat(0)
    e = h.numerator.bit_length() - h.denominator.bit_length()
    m = float(h / (Rat(2) ** e)) * t
    return Rat(m) * Rat(2) ** e


def search_domain(f, cfg: SupSearchConfig) -> Interval:
    lo, hi = f.support()
    span = hi - lo
    ext = span if cfg.max_expansion is None else coord(cfg.max_expansion)
    return lo - ext, hi + ext


def _breakpoints(f, lo, hi, cfg):
    return f.breakpoints(lo, hi, cfg.levels)


def _select(points: list[Rat], n: int, left: bool) -> list[Rat]:
    """From sorted points on one side of B: the nearest n/2, points at
    power-of-two distance ranks, and the farthest.  Nested in n."""
    if len(points) <= n:
        return list(points)
    order = points[::-1] if left else points
    keep = set(order[: max(n // 2, 1)])
    r = 1
    while r < len(order):
        keep.add(order[r])
        r *= 2
    keep.add(order[-1])
    return sorted(keep)


class BreakpointIndex:
    """Sorted breakpoints of f over the search domain, with cached
    candidate selections; reusable across searches on the same f."""

    def __init__(self, f, cfg: SupSearchConfig):
        lo, hi = search_domain(f, cfg)
        self.points = sorted(set(_breakpoints(f, lo, hi, cfg)) | {lo, hi, *f.support()})
        self._cache: dict = {}

    def select(self, lo: Rat, hi: Rat, n: int, left: bool) -> list[Rat]:
        i, j = bisect_left(self.points, lo), bisect_right(self.points, hi)
        key = (i, j, n, left)
        if key not in self._cache:
            self._cache[key] = _select(self.points[i:j], n, left)
        return self._cache[key]


def _with(points: list, extras) -> list:
    """Sorted copy of ``points`` with ``extras`` merged in (no hashing)."""
    out = list(points)
    for x in extras:
        k = bisect_left(out, x)
        if k == len(out) or out[k] != x:
            out.insert(k, x)
    return out


class _Search:
    def __init__(self, f, cfg: SupSearchConfig):
        self.f, self.cfg = f, cfg
        self.evals = 0
        self.best = (NEG_INF, None)

    def avg(self, L: Rat, R: Rat) -> float:
        self.evals += 1
        m = self.f.integrate(L, R)
        if m.is_zero:
            return NEG_INF
        return m.log2 - log2q(R - L)

    def offer(self, v: float, L: Rat, R: Rat):
        bv, bi = self.best
        if bi is None or v > bv or (v == bv and ((R - L), L) < ((bi[1] - bi[0]), bi[0])):
            self.best = (v, (L, R))

    def try_pair(self, L, R):
        if L < R:
            self.offer(self.avg(L, R), L, R)

    def golden(self, phi_pair, a: Rat, b: Rat, scale: Rat):
        """Golden-section maximization over the bracket [a, b]."""
        h = b - a
        tol = _scaled(scale, self.cfg.tolerance) if scale > 0 else Rat(0)
        if h <= 0 or h <= tol:
            return
        if tol > 0:
            n = math.ceil(math.log(float(tol / h)) / math.log(INV_PHI))
        else:
            n = self.cfg.refinement_depth
        n = max(1, min(self.cfg.refinement_depth, n))

        def phi(x):
            L, R = phi_pair(x)
            if not L < R:
                return NEG_INF
            v = self.avg(L, R)
            self.offer(v, L, R)
            return v

        c, d = a + _scaled(h, INV_PHI2), a + _scaled(h, INV_PHI)
        yc, yd = phi(c), phi(d)
        for _ in range(n - 1):
            if yc > yd:
                b, d, yd = d, c, yc
                h = b - a
                c = a + _scaled(h, INV_PHI2)
                yc = phi(c)
            else:
                a, c, yc = c, d, yd
                h = b - a
                d = a + _scaled(h, INV_PHI)
                yd = phi(d)


def _brackets(x: Rat, cands: list[Rat], lo: Rat, hi: Rat):
    inside = _with([c for c in cands if lo <= c <= hi], [y for y in (lo, hi, x) if lo <= y <= hi])
    i = bisect_left(inside, x)
    out = []
    if i > 0:
        out.append((inside[i - 1], x))
    if i + 1 < len(inside):
        out.append((x, inside[i + 1]))
    return out


def maximal_over_containing(f, B, cfg: SupSearchConfig | None = None, seed: Interval | None = None,
                            parent: tuple | None = None, stats: dict | None = None,
                            index: BreakpointIndex | None = None):
    """Certified lower bound for ``M_B f = sup_{A ⊇ B} <f>_A``.

    Returns ``(value, attaining_interval)``.  ``parent`` may carry
    ``(A', value, attaining)`` for an already-searched ``A' ⊇ B``; then only
    intervals containing B but not A' are searched and the parent's result
    is kept as a candidate.  Ties go to the shortest, then leftmost interval.
    ``index`` may pass a :class:`BreakpointIndex` built for f.
    """
    cfg = cfg or SupSearchConfig()
    bl, br = coord(B[0]), coord(B[1])
    lo, hi = search_domain(f, cfg)
    lo, hi = min(lo, bl), max(hi, br)
    s = _Search(f, cfg)
    n = cfg.max_candidates
    if index is None:
        index = BreakpointIndex(f, cfg)
    s_lo, s_hi = f.support()
    lefts = _with(index.select(lo, bl, n, True), [x for x in (lo, bl, s_lo, s_hi) if lo <= x <= bl])
    rights = _with(index.select(br, hi, n, False), [x for x in (br, hi, s_lo, s_hi) if br <= x <= hi])
    l_range, r_range = (lo, bl), (br, hi)
    if parent is not None:
        (pl, pr), pval, patt = parent
        pl, pr = coord(pl), coord(pr)
        s.offer(pval.log2, *patt)
        strip_l = [x for x in lefts if x > pl]
        strip_r = [x for x in rights if x < pr]
        for L in strip_l:
            for R in rights:
                s.try_pair(L, R)
        for L in lefts:
            for R in strip_r:
                s.try_pair(L, R)
        l_range = (pl, bl) if pl < bl else None
        r_range = (br, pr) if br < pr else None
    else:
        for L in lefts:
            for R in rights:
                s.try_pair(L, R)
    if seed is not None:
        sl, sr = coord(seed[0]), coord(seed[1])
        if sl <= bl and sr >= br:
            s.try_pair(sl, sr)
    scale = max(br - bl, abs(bl), abs(br))
    for _ in range(cfg.rounds):
        if s.best[1] is None:
            break
        L0, R0 = s.best[1]
        if l_range is not None:
            for a, b in _brackets(L0, lefts, *l_range) if l_range[0] <= L0 <= l_range[1] else [l_range]:
                s.golden(lambda x, R=R0: (x, R), a, b, max(scale, abs(a), abs(b)))
        L0, R0 = s.best[1]
        if r_range is not None:
            for a, b in _brackets(R0, rights, *r_range) if r_range[0] <= R0 <= r_range[1] else [r_range]:
                s.golden(lambda x, L=L0: (L, x), a, b, max(scale, abs(a), abs(b)))
    if stats is not None:
        stats["evals"] = stats.get("evals", 0) + s.evals
    v, att = s.best
    if att is None:
        return ZERO, (bl, br)
    return LogPos(v), att


def hl_maximal_at(f, x, seed: Interval | None = None, cfg: SupSearchConfig | None = None) -> LogPos:
    """Certified lower bound for the Hardy-Littlewood maximal function at x.

    The returned value dominates the average over ``seed`` when the seed
    contains x.
    """
    x = coord(x)
    return maximal_over_containing(f, (x, x), cfg, seed=seed)[0]


# -- operators -----------------------------------------------------------------


def _intervals(family) -> list[Interval]:
    if isinstance(family, SparseFamily):
        return list(family.intervals)
    return _norm(family)


def _dedup_sorted(xs: list) -> list:
    out = []
    for x in sorted(xs):
        if not out or out[-1] != x:
            out.append(x)
    return out


def overlay(intervals: Sequence[Interval], logs: Sequence[float]) -> StepFn:
    """Step function ``sum_i value_i * 1_{I_i}``.

    Laminar families are resolved by one left-to-right sweep with a stack
    of open intervals; other families fall back to summing per cell.
    """
    ivs = _norm(intervals)
    if not ivs:
        return StepFn.zero()
    bps = _dedup_sorted([x for iv in ivs for x in iv])
    cells = [NEG_INF] * (len(bps) - 1)
    try:
        order, parent = laminar_forest(ivs)
    except UnsupportedFamilyError:
        acc = [[] for _ in cells]
        for (l, r), v in zip(ivs, logs):
            for c in range(bisect_left(bps, l), bisect_left(bps, r)):
                acc[c].append(v)
        return StepFn(bps, [lsum(a) for a in acc])
    cum = [NEG_INF] * len(ivs)
    for i in order:
        up = cum[parent[i]] if parent[i] >= 0 else NEG_INF
        cum[i] = lsum((logs[i], up))
    stack: list[int] = []
    k = 0
    for c in range(len(cells)):
        x = bps[c]
        while stack and ivs[stack[-1]][1] <= x:
            stack.pop()
        while k < len(order) and ivs[order[k]][0] == x:
            while stack and ivs[stack[-1]][1] <= x:
                stack.pop()
            stack.append(order[k])
            k += 1
        if stack:
            cells[c] = cum[stack[-1]]
    return StepFn(bps, cells)


def sparse_apply(family, f) -> StepFn:
    """``sum_{A in S} <f>_A 1_A``."""
    ivs = _intervals(family)
    return overlay(ivs, [average(f, l, r).log2 for l, r in ivs])


def strong_sparse_values(family, f, cfg: SupSearchConfig | None = None, stats: dict | None = None):
    """``[(M_A f, attaining interval)]`` in family order.

    Members are processed in laminar preorder so that each search reuses
    the result of its immediate container.
    """
    cfg = cfg or SupSearchConfig()
    ivs = _intervals(family)
    try:
        order, parent = laminar_forest(ivs)
    except UnsupportedFamilyError:
        order = sorted(range(len(ivs)), key=lambda i: (ivs[i][0], -ivs[i][1], i))
        parent = [-1] * len(ivs)
    out: list = [None] * len(ivs)
    index = BreakpointIndex(f, cfg)
    prev = -1
    for i in order:
        if prev >= 0 and ivs[prev] == ivs[i]:
            out[i] = out[prev]
            continue
        p = parent[i]
        hint = (ivs[p], out[p][0], out[p][1]) if p >= 0 else None
        out[i] = maximal_over_containing(f, ivs[i], cfg, parent=hint, stats=stats, index=index)
        prev = i
    return out


def strong_sparse_apply(family, f, cfg: SupSearchConfig | None = None, stats: dict | None = None) -> StepFn:
    """``sum_{A in S} (M_A f) 1_A``."""
    ivs = _intervals(family)
    vals = strong_sparse_values(ivs, f, cfg, stats)
    return overlay(ivs, [v.log2 for v, _ in vals])


# -- norms -----------------------------------------------------------------------


def l2w_norm_sq(h: StepFn, weight) -> LogPos:
    """``int h^2 w`` exactly, cell by cell."""
    return LogPos(lsum(2 * v.log2 + weight.integrate(l, r).log2 for l, r, v in h.cells() if not v.is_zero))


def l2w_norm_sq_fn(g, weight) -> LogPos:
    """``int g^2 w`` for piecewise power functions sharing offsets."""
    prod = g.product(g).product(weight)
    lo, hi = prod.support()
    return prod.integrate(lo, hi)


def weak_l2w_norm_sq(h: StepFn, weight) -> tuple[LogPos, LogPos]:
    """``(sup_lambda lambda^2 w{h > lambda}, maximizing level)``.

    The sup over lambda inside a gap between consecutive values of h is
    approached at the gap's top, so only the values of h are examined.
    """
    cells = [(v, weight.integrate(l, r).log2) for l, r, v in h.cells() if not v.is_zero]
    cells.sort(key=lambda t: -t[0].log2)
    best, level = ZERO, ZERO
    run = []
    i = 0
    while i < len(cells):
        v = cells[i][0]
        while i < len(cells) and cells[i][0] == v:
            run.append(cells[i][1])
            i += 1
        cand = LogPos(2 * v.log2 + lsum(run))
        if cand > best:
            best, level = cand, v
    return best, level


def weak_l2w_norm(h: StepFn, weight) -> LogPos:
    """``sup_lambda lambda * w{h > lambda}^(1/2)``."""
    return weak_l2w_norm_sq(h, weight)[0] ** 0.5
