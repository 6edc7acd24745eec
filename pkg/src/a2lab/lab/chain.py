"""Flattening a function along a chain of nested intervals.

Each chain member B is enlarged to the largest interval on which the
average of g is still at least half of ``M_B g``; g is then replaced by its
average on every annulus between consecutive enlargements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..logpos import LogPos, Rat, coord, log2q, log_close
from ..operators import SupSearchConfig, maximal_over_containing, search_domain
from ..piecewise import Piece, PiecewisePowerFn, PowerTerm

Interval = tuple[Rat, Rat]


def _avg_log2(g, l, r) -> float:
    return g.integrate(l, r).log2 - log2q(r - l)


def _extend(ok, start: Rat, limit: Rat, e0: Rat, cfg: SupSearchConfig) -> Rat:
    """Push one endpoint from ``start`` toward ``limit`` while ``ok`` holds:
    doubling steps, then bisection.  ``limit`` may lie on either side."""
    sign = 1 if limit >= start else -1
    span = abs(limit - start)
    good, e = start, e0
    while True:
        if e >= span:
            if ok(limit):
                return limit
            bad = limit
            break
        x = start + sign * e
        if not ok(x):
            bad = x
            break
        good = x
        e *= 2
    tol = abs(limit - start) * Rat(cfg.tolerance)
    for _ in range(cfg.refinement_depth):
        if abs(bad - good) <= tol:
            break
        mid = (good + bad) / 2
        if ok(mid):
            good = mid
        else:
            bad = mid
    return good


def project_interval(g, B, cfg: SupSearchConfig | None = None) -> Interval:
    """Largest found interval containing B with ``<g> >= M_B g / 2``.

    The right endpoint is pushed out first (doubling, then bisection), then
    the left one.  If B itself does not qualify the search starts from the
    interval attaining ``M_B g``.
    """
    cfg = cfg or SupSearchConfig()
    bl, br = coord(B[0]), coord(B[1])
    m, att = maximal_over_containing(g, (bl, br), cfg)
    floor = m.log2 - 1 - 1e-12 * max(1.0, abs(m.log2))
    lo, hi = search_domain(g, cfg)
    lo, hi = min(lo, bl), max(hi, br)

    def qualifies(l, r):
        return r > l and _avg_log2(g, l, r) >= floor

    L, R = (bl, br) if br > bl and qualifies(bl, br) else att
    e0 = max(R - L, (hi - lo) * Rat(cfg.tolerance))
    R = _extend(lambda x: qualifies(L, x), R, hi, e0, cfg)
    e0 = max(R - L, e0)
    L = _extend(lambda x: qualifies(x, R), L, lo, e0, cfg)
    return L, R


@dataclass
class ChainState:
    chain: list
    projections: list  # pi(B_i) as found
    nested: list  # forced-nested, deduplicated A_1 ⊇ A_2 ⊇ ...
    g_tilde: PiecewisePowerFn
    annuli: list = field(default_factory=list)  # (pieces, average LogPos) per A_i

    def mean_preserved(self, g, ulps: float = 4) -> bool:
        return all(log_close(g.integrate(l, r), self.g_tilde.integrate(l, r), ulps) for l, r in self.nested)


def _check_chain(chain):
    for (l0, r0), (l1, r1) in zip(chain, chain[1:]):
        if not (l0 <= l1 and r1 <= r0):
            raise ValueError("family is not a chain ordered by inclusion")


def flatten_chain(g: PiecewisePowerFn, chain, cfg: SupSearchConfig | None = None) -> ChainState:
    """Replace g by its averages on the annuli between consecutive enlargements.

    Enlargements are intersected with their predecessor so they nest.  The
    innermost one is flattened entirely; outside the largest one g is kept.
    """
    cfg = cfg or SupSearchConfig()
    chain = [(coord(l), coord(r)) for l, r in chain]
    chain.sort(key=lambda iv: (iv[0] - iv[1], iv[0]))  # outermost first
    _check_chain(chain)
    proj = [project_interval(g, B, cfg) for B in chain]
    nested = []
    for l, r in proj:
        if nested:
            l, r = max(l, nested[-1][0]), min(r, nested[-1][1])
        if not nested or (l, r) != nested[-1]:
            nested.append((l, r))
    pieces = []
    if nested:
        lo, hi = g.support()
        l1, r1 = nested[0]
        if lo < l1:
            pieces.extend(g.restrict(lo, l1).pieces)
        if r1 < hi:
            pieces.extend(g.restrict(r1, hi).pieces)
    annuli = []
    for i, (l, r) in enumerate(nested):
        if i + 1 < len(nested):
            il, ir = nested[i + 1]
            parts = [(a, b) for a, b in ((l, il), (ir, r)) if b > a]
        else:
            parts = [(l, r)]
        if not parts:
            continue
        mass = LogPos.of(0)
        for a, b in parts:
            mass = mass + g.integrate(a, b)
        size = sum((b - a for a, b in parts), Rat(0))
        avg = mass / LogPos.of(size)
        annuli.append((parts, avg))
        if not avg.is_zero:
            pieces.extend(Piece(a, b, PowerTerm(avg, Rat(0), 0.0)) for a, b in parts)
    pieces.sort(key=lambda p: p.l)
    return ChainState(chain, proj, nested, PiecewisePowerFn(pieces), annuli)
