"""
Dual power weights and the lacunary power-weight mixture.

The lacunary weight is exactly self-similar on (0, 1]: sigma(x/2) =
2^(1-alpha) sigma(x).  :class:`SelfSimilarFn` stores one dyadic cell and the
scale factor, and answers integrals and point values at any depth in closed
form.  A truncated explicit :class:`PiecewisePowerFn` is also available for
cross-validation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .logpos import NEG_INF, ONE, ZERO, LogPos, Rat, coord, log2q
from .piecewise import ASC, DESC, Piece, PiecewisePowerFn, PowerTerm

__all__ = [
    "SelfSimilarFn",
    "Restricted",
    "WeightPair",
    "power_pair",
    "lacunary_pair",
    "level_integrals",
    "tail_integrals",
    "eval_sigma",
    "parse_pair_spec",
]


def _one_minus_pow(ratio: LogPos, n) -> float:
    """log2(1 - ratio**n) for ratio < 1; ``n = inf`` gives 0."""
    if n == math.inf:
        return 0.0
    return math.log2(-math.expm1(n * ratio.log2 * math.log(2.0)))


class SelfSimilarFn:
    """f on (0, top) with f(x/2) = scale * f(x) on (0, hinge].

    ``base`` holds f on [hinge/2, hinge); ``outer`` (may be empty) holds f on
    [hinge, top).  Level k is [hinge 2^-(k+1), hinge 2^-k); its integral is
    ``ratio**k`` times the level-0 integral, where ``ratio = scale / 2``.
    """

    def __init__(self, base: PiecewisePowerFn, scale: LogPos, outer: PiecewisePowerFn | None = None,
                 hinge=1):
        self.hinge = coord(hinge)
        lo, hi = base.support()
        if lo < self.hinge / 2 or hi > self.hinge:
            raise ValueError("base cell must lie in [hinge/2, hinge)")
        self.base = base
        self.scale = LogPos.of(scale)
        self.outer = outer if outer is not None else PiecewisePowerFn([])
        if self.outer.pieces and self.outer.support()[0] < self.hinge:
            raise ValueError("outer part must start at the hinge")
        self.ratio = self.scale / 2
        if self.ratio.log2 >= 0:
            raise ValueError("level masses must decay (scale < 2)")
        self.base_mass = base.integrate(self.hinge / 2, self.hinge)

    def __repr__(self):
        return f"SelfSimilarFn(scale=2^{self.scale.log2:.6g}, hinge={self.hinge})"

    # -- geometry ------------------------------------------------------

    def support(self) -> tuple[Rat, Rat]:
        top = self.outer.support()[1] if self.outer.pieces else self.hinge
        return Rat(0), top

    def level_of(self, x: Rat) -> int:
        """k with x in [hinge 2^-(k+1), hinge 2^-k); requires 0 < x < hinge."""
        t = self.hinge / x
        n, d = t.numerator, t.denominator
        m = max(n.bit_length() - d.bit_length(), 0)
        while (d << m) < n:
            m += 1
        while m > 0 and (d << (m - 1)) >= n:
            m -= 1
        return m - 1

    def breakpoints(self, lo=None, hi=None, limit: int | None = None) -> list[Rat]:
        """Breakpoints in [lo, hi], shallow levels first; ``limit`` caps the
        number of levels scanned below the hinge."""
        lo = Rat(0) if lo is None else coord(lo)
        top = self.support()[1]
        hi = top if hi is None else coord(hi)
        pts = {Rat(0)} if lo <= 0 <= hi else set()
        pts.update(x for x in self.outer.breakpoints(lo, hi))
        cell = self.base.breakpoints()
        levels = limit if limit is not None else 64
        if lo > 0:
            levels = min(levels, self.level_of(lo) + 1) if lo < self.hinge else 0
        for k in range(levels):
            s = Rat(1, 1 << k)
            for x in cell:
                y = x * s
                if lo <= y <= hi:
                    pts.add(y)
        return sorted(pts)

    # -- evaluation ----------------------------------------------------

    def evaluate(self, x) -> LogPos:
        x = coord(x)
        if x <= 0:
            return ZERO
        if x >= self.hinge:
            return self.outer.evaluate(x)
        k = self.level_of(x)
        v = self.base.evaluate(x * (1 << k))
        return v * self.scale ** k

    def _level_range(self, k: int, l: Rat, r: Rat) -> tuple[float, float]:
        s = 1 << k
        a, b = max(l, self.hinge / (2 * s)), min(r, self.hinge / s)
        if a > b:
            return math.inf, NEG_INF
        u, v = self.base.range_log2(a * s, b * s)
        return u + k * self.scale.log2, v + k * self.scale.log2

    def range_log2(self, l, r) -> tuple[float, float]:
        """(min, max) of log2 f over the closure of [l, r]."""
        l, r = coord(l), coord(r)
        lo, hi = math.inf, NEG_INF
        if r > self.hinge or l >= self.hinge:
            u, v = self.outer.range_log2(max(l, self.hinge), r)
            lo, hi = min(lo, u), max(hi, v)
            if l >= self.hinge:
                return lo, hi
            r = self.hinge
        kr = 0 if r >= self.hinge else self.level_of(r)
        if l <= 0:
            levels = [kr, kr + 1]
        else:
            kl = self.level_of(l)
            levels = sorted({kr, min(kr + 1, kl), max(kl - 1, kr), kl})
        for k in levels:
            u, v = self._level_range(k, max(l, Rat(0)), r)
            lo, hi = min(lo, u), max(hi, v)
        if l <= 0:
            if self.scale.log2 > 0:
                hi = math.inf
            else:
                lo = NEG_INF
        return lo, hi

    # -- integration -----------------------------------------------------

    def _levels_mass(self, k0: int, k1) -> LogPos:
        """Total mass of full levels k0 <= k < k1 (k1 may be inf)."""
        if k1 <= k0:
            return ZERO
        head = self.base_mass * self.ratio ** k0
        return LogPos(head.log2 + _one_minus_pow(self.ratio, k1 - k0) - _one_minus_pow(self.ratio, 1))

    def _inner(self, l: Rat, r: Rat) -> LogPos:
        # 0 <= l < r <= hinge
        h = self.hinge
        kr = 0 if r == h else self.level_of(r)
        kl = math.inf if l == 0 else self.level_of(l)
        if kl == kr:
            s = 1 << kr
            return self.base.integrate(l * s, r * s) * self.ratio ** kr
        s = 1 << kr
        total = self.base.integrate(h / 2, r * s) * self.ratio ** kr
        total = total + self._levels_mass(kr + 1, kl)
        if kl != math.inf:
            s = 1 << kl
            total = total + self.base.integrate(l * s, h) * self.ratio ** kl
        return total

    def integrate(self, l, r) -> LogPos:
        l, r = coord(l), coord(r)
        lo, top = self.support()
        l, r = max(l, lo), min(r, top)
        if r <= l:
            return ZERO
        out = ZERO
        if r > self.hinge:
            out = self.outer.integrate(max(l, self.hinge), r)
            r = self.hinge
            if r <= l:
                return out
        return out + self._inner(l, r)

    def level_mass(self, k: int) -> LogPos:
        return self.base_mass * self.ratio ** k

    def tail_mass(self, k: int) -> LogPos:
        """Integral over [0, hinge 2^-k)."""
        return self._levels_mass(k, math.inf)

    # -- algebra -------------------------------------------------------

    def reciprocal(self) -> "SelfSimilarFn":
        return SelfSimilarFn(self.base.reciprocal(), self.scale.inverse(), self.outer.reciprocal(), self.hinge)

    def pow_scalar(self, t: float) -> "SelfSimilarFn":
        return SelfSimilarFn(self.base.pow_scalar(t), self.scale ** t, self.outer.pow_scalar(t), self.hinge)

    def scale_by(self, c) -> "SelfSimilarFn":
        c = LogPos.of(c)
        return SelfSimilarFn(self.base.scale(c), self.scale, self.outer.scale(c), self.hinge)

    def dilate(self, lam) -> "SelfSimilarFn":
        """``x -> f(lam x)``; lam must be a power of two."""
        lam = coord(lam)
        return SelfSimilarFn(self.base.dilate(lam), self.scale, self.outer.dilate(lam), self.hinge / lam)

    def explicit(self, levels: int) -> PiecewisePowerFn:
        """Materialize levels 0..levels-1 plus the outer part (zero below)."""
        pieces = []
        for k in range(levels - 1, -1, -1):
            s = Rat(1, 1 << k)
            sk = self.scale ** k
            for p in self.base.pieces:
                t = p.term
                term = PowerTerm(t.coeff * sk * LogPos.exp2(k * t.exponent), t.offset * s, t.exponent, t.orientation)
                pieces.append(Piece(p.l * s, p.r * s, term))
        pieces.extend(self.outer.pieces)
        return PiecewisePowerFn(pieces)


class Restricted:
    """``f * 1_[l, r)`` for any function object with the common interface."""

    def __init__(self, f, l, r):
        self.f, self.l, self.r = f, coord(l), coord(r)

    def support(self):
        a, b = self.f.support()
        return max(a, self.l), min(b, self.r)

    def integrate(self, l, r) -> LogPos:
        l, r = max(coord(l), self.l), min(coord(r), self.r)
        if r <= l:
            return ZERO
        return self.f.integrate(l, r)

    def evaluate(self, x) -> LogPos:
        x = coord(x)
        if x < self.l or x >= self.r:
            return ZERO
        return self.f.evaluate(x)

    def breakpoints(self, lo=None, hi=None, limit=None):
        lo = self.l if lo is None else max(coord(lo), self.l)
        hi = self.r if hi is None else min(coord(hi), self.r)
        pts = set(self.f.breakpoints(lo, hi, limit) if isinstance(self.f, SelfSimilarFn) else self.f.breakpoints(lo, hi))
        pts.update(x for x in (self.l, self.r) if lo <= x <= hi)
        return sorted(pts)

    def range_log2(self, l, r):
        l, r = coord(l), coord(r)
        a, b = max(l, self.l), min(r, self.r)
        if a > b:
            return NEG_INF, NEG_INF
        lo, hi = self.f.range_log2(a, b)
        if l < self.l or r > self.r:
            lo = NEG_INF
        return lo, hi

    def pow_scalar(self, t):
        return Restricted(self.f.pow_scalar(t), self.l, self.r)


@dataclass
class WeightPair:
    """A weight ``w``, its dual ``sigma = 1/w``, and the generating alpha."""

    alpha: float
    sigma: object
    w: object
    representation: str
    a: int | None = None
    tail_tolerance: float | None = None
    _explicit: dict = field(default_factory=dict, repr=False)

    @property
    def self_similar(self) -> bool:
        return isinstance(self.sigma, SelfSimilarFn)

    def truncation_depth(self, tail_tolerance: float | None = None) -> int:
        tol = tail_tolerance if tail_tolerance is not None else (self.tail_tolerance or 1e-10)
        return math.ceil(math.log2(1.0 / tol) / self.alpha) + 4

    def explicit(self, levels: int | None = None) -> "WeightPair":
        """Explicit truncated representation (zero below 2^-levels)."""
        if not self.self_similar:
            return self
        levels = levels if levels is not None else self.truncation_depth()
        if levels not in self._explicit:
            sigma = self.sigma.explicit(levels)
            self._explicit[levels] = WeightPair(self.alpha, sigma, sigma.reciprocal(), "explicit-truncated",
                                                self.a, self.tail_tolerance)
        return self._explicit[levels]


def power_pair(alpha: float, domain=(0, 2), even: bool = False) -> WeightPair:
    """sigma = |x|^(1-alpha), w = |x|^(alpha-1) on ``domain``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    lo, hi = coord(domain[0]), coord(domain[1])
    if lo < 0:
        raise ValueError("domain must lie in [0, inf); use even=True to reflect")
    sigma = PiecewisePowerFn([Piece(lo, hi, PowerTerm(ONE, 0, 1.0 - alpha))])
    if even:
        sigma = sigma.reflect_even()
    return WeightPair(alpha, sigma, sigma.reciprocal(), "power")


def lacunary_sigma_cell(alpha: float) -> PiecewisePowerFn:
    """sigma on [1/2, 1): rising spike, bulk x^(alpha-1), falling spike."""
    a = coord(alpha)
    half = Rat(1, 2)
    inv = LogPos.of(1 / a)
    return PiecewisePowerFn([
        Piece(half, (1 + a) / 2, PowerTerm(inv, half, 1.0 - alpha, ASC)),
        Piece((1 + a) / 2, 1 - a, PowerTerm(ONE, 0, alpha - 1.0, ASC)),
        Piece(1 - a, 1, PowerTerm(inv, 1, 1.0 - alpha, DESC)),
    ])


def lacunary_pair(a: int, tail_tolerance: float = 1e-10, top=2) -> WeightPair:
    """Lacunary mixture of dual power weights with alpha = 2^-a.

    Spiky levels occupy (0, 1); sigma = x^(alpha-1) on [1, top).
    """
    if int(a) != a or a < 2:
        raise ValueError("a must be an integer >= 2")
    a = int(a)
    alpha = 2.0 ** -a
    outer = PiecewisePowerFn([Piece(1, top, PowerTerm(ONE, 0, alpha - 1.0))]) if top > 1 else None
    sigma = SelfSimilarFn(lacunary_sigma_cell(alpha), LogPos(1.0 - alpha), outer, hinge=1)
    return WeightPair(alpha, sigma, sigma.reciprocal(), "self-similar", a, tail_tolerance)


def level_integrals(pair: WeightPair, k: int) -> tuple[LogPos, LogPos]:
    """(w, sigma) integrals over the k-th dyadic level [2^-(k+1), 2^-k)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if pair.self_similar:
        return pair.w.level_mass(k), pair.sigma.level_mass(k)
    lo, hi = Rat(1, 1 << (k + 1)), Rat(1, 1 << k)
    return pair.w.integrate(lo, hi), pair.sigma.integrate(lo, hi)


def tail_integrals(pair: WeightPair, k: int) -> tuple[LogPos, LogPos]:
    """(w, sigma) integrals over [0, 2^-k)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if pair.self_similar:
        return pair.w.tail_mass(k), pair.sigma.tail_mass(k)
    hi = Rat(1, 1 << k)
    return pair.w.integrate(0, hi), pair.sigma.integrate(0, hi)


def eval_sigma(pair: WeightPair, x) -> LogPos:
    x = coord(x)
    if x <= 0:
        raise ValueError("sigma is evaluated at x > 0")
    return pair.sigma.evaluate(x)


_SPEC = re.compile(r"^\s*(\w+)\s*(?::\s*(.*))?$")


def _kv(text: str) -> dict:
    out = {}
    for part in filter(None, (t.strip() for t in (text or "").split(","))):
        k, _, v = part.partition("=")
        out[k.strip()] = v.strip()
    return out


def parse_pair_spec(spec: str) -> WeightPair:
    """``power:alpha=0.25`` or ``lacunary:a=6,tol=1e-10``."""
    m = _SPEC.match(spec)
    if not m:
        raise ValueError(f"bad weight spec {spec!r}")
    kind, kv = m.group(1), _kv(m.group(2))
    if kind == "power":
        return power_pair(float(Rat(kv.get("alpha", "0.25"))))
    if kind == "lacunary":
        return lacunary_pair(int(kv.get("a", 6)), float(kv.get("tol", 1e-10)))
    raise ValueError(f"unknown weight kind {kind!r}")
