"""
Piecewise power-law functions with closed-form integration.

A :class:`PowerTerm` is ``c * (s*(x - a))**p`` with ``s = +1`` (ascending) or
``s = -1`` (descending).  A :class:`PiecewisePowerFn` is an ordered list of
half-open pieces ``[l, r)`` each carrying one term, zero elsewhere.  Every
weight and integrand in the lab lives in this class, and every integral is
evaluated from the antiderivative, never by quadrature.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .logpos import LN2, NEG_INF, ONE, ZERO, LogPos, Rat, coord, log2q, lsum

__all__ = [
    "ASC",
    "DESC",
    "DomainError",
    "PowerTerm",
    "Piece",
    "PiecewisePowerFn",
    "StepFn",
    "integrate_term",
    "average",
    "constant",
    "indicator",
    "power",
]

ASC = 1
DESC = -1


class DomainError(ValueError):
    """Configuration outside the closed-form algebra (e.g. non-integrable)."""


@dataclass(frozen=True)
class PowerTerm:
    coeff: LogPos
    offset: Rat
    exponent: float
    orientation: int = ASC

    def __post_init__(self):
        object.__setattr__(self, "offset", coord(self.offset))
        object.__setattr__(self, "exponent", float(self.exponent))
        if self.orientation not in (ASC, DESC):
            raise ValueError("orientation must be ASC or DESC")

    def distance(self, x: Rat) -> Rat:
        return x - self.offset if self.orientation == ASC else self.offset - x

    def log2_at(self, x) -> float:
        if self.coeff.is_zero:
            return NEG_INF
        p = self.exponent
        if p == 0.0:
            return self.coeff.log2
        u = self.distance(coord(x))
        if u < 0:
            raise DomainError(f"negative argument {float(u)!r} for power term")
        if u == 0:
            if p > 0:
                return NEG_INF
            return math.inf
        return self.coeff.log2 + p * log2q(u)

    def scaled(self, c: LogPos) -> "PowerTerm":
        return replace(self, coeff=self.coeff * c)

    def reciprocal(self) -> "PowerTerm":
        if self.coeff.is_zero:
            raise DomainError("reciprocal of a zero coefficient")
        return replace(self, coeff=self.coeff.inverse(), exponent=-self.exponent)

    def power(self, t: float) -> "PowerTerm":
        return replace(self, coeff=self.coeff ** t, exponent=self.exponent * t)

    def dilated(self, lam: Rat) -> "PowerTerm":
        """Term of ``x -> f(lam * x)``."""
        lam = coord(lam)
        return PowerTerm(
            self.coeff * LogPos.of(lam) ** self.exponent,
            self.offset / lam,
            self.exponent,
            self.orientation,
        )

    def integral(self, l, r) -> LogPos:
        return integrate_term(self, l, r)


def integrate_term(term: PowerTerm, l, r) -> LogPos:
    """Exact integral of ``term`` over ``[l, r]``.

    Uses ``c*(far^q - near^q)/q`` with ``q = p + 1`` evaluated as
    ``far^q * (1 - (near/far)^q)`` through ``expm1`` so that thin intervals
    far from the offset and intervals at extreme depths keep full relative
    precision; ``p = -1`` uses ``c*log(far/near)``.
    """
    l, r = coord(l), coord(r)
    if r <= l or term.coeff.is_zero:
        return ZERO
    c = term.coeff.log2
    p = term.exponent
    if p == 0.0:
        return LogPos(c + log2q(r - l))
    if term.orientation == ASC:
        near, far = l - term.offset, r - term.offset
    else:
        near, far = term.offset - r, term.offset - l
    if near < 0:
        raise DomainError("interval crosses the offset of a power term")
    q = p + 1.0
    if near == 0:
        if q <= 0.0:
            raise DomainError(f"exponent {p} is not integrable at the offset")
        return LogPos(c + q * log2q(far) - math.log2(q))
    delta = (far - near) / near
    if delta < 1:
        lnrho = math.log1p(float(delta))
    else:
        lnrho = log2q(far / near) * LN2
    if q == 0.0:
        return LogPos(c + math.log2(lnrho))
    if q > 0.0:
        return LogPos(c + q * log2q(far) + math.log2(-math.expm1(-q * lnrho) / q))
    return LogPos(c + q * log2q(near) + math.log2(-math.expm1(q * lnrho) / -q))


@dataclass(frozen=True)
class Piece:
    l: Rat
    r: Rat
    term: PowerTerm

    def __post_init__(self):
        object.__setattr__(self, "l", coord(self.l))
        object.__setattr__(self, "r", coord(self.r))
        if not self.l < self.r:
            raise ValueError(f"empty piece [{self.l}, {self.r})")
        t = self.term
        if t.exponent != 0.0 and not t.coeff.is_zero:
            if t.distance(self.l) < 0 or t.distance(self.r) < 0:
                raise DomainError("power term argument negative inside its piece")


class PiecewisePowerFn:
    """Piecewise power-law function on disjoint half-open pieces.

    The cumulative integral at every piece start is kept in ``prefix`` and a
    segment tree over the piece integrals answers range queries with
    ``O(log n)`` nonnegative block sums (no cancellation).
    """

    def __init__(self, pieces: Iterable[Piece]):
        pieces = [p for p in pieces if not p.term.coeff.is_zero]
        for a, b in zip(pieces, pieces[1:]):
            if b.l < a.r:
                raise ValueError("pieces must be sorted and pairwise disjoint")
        self.pieces: tuple[Piece, ...] = tuple(pieces)
        self._starts = [p.l for p in pieces]
        self._ends = [p.r for p in pieces]
        try:
            self._mass = [integrate_term(p.term, p.l, p.r).log2 for p in pieces]
        except DomainError:
            # non-integrable piece (pow_scalar output); fails when integrated
            self._mass = None
            self.prefix = ()
            return
        prefix = [NEG_INF]
        run = ZERO
        for m in self._mass:
            run = run + LogPos(m)
            prefix.append(run.log2)
        self.prefix = tuple(prefix)
        n = 1
        while n < max(1, len(pieces)):
            n *= 2
        tree = [NEG_INF] * (2 * n)
        tree[n:n + len(pieces)] = self._mass
        for i in range(n - 1, 0, -1):
            tree[i] = lsum((tree[2 * i], tree[2 * i + 1]))
        self._tree = tree
        self._n = n

    # -- structure -------------------------------------------------------

    def __len__(self):
        return len(self.pieces)

    def __eq__(self, other):
        return isinstance(other, PiecewisePowerFn) and self.pieces == other.pieces

    def __repr__(self):
        if not self.pieces:
            return "PiecewisePowerFn(<zero>)"
        return f"PiecewisePowerFn({len(self.pieces)} pieces on [{float(self._starts[0]):.6g}, {float(self._ends[-1]):.6g}))"

    def support(self) -> tuple[Rat, Rat]:
        if not self.pieces:
            return Rat(0), Rat(0)
        return self._starts[0], self._ends[-1]

    def breakpoints(self, lo=None, hi=None, limit: int | None = None) -> list[Rat]:
        pts = sorted(set(self._starts) | set(self._ends))
        if lo is not None:
            lo = coord(lo)
            pts = [x for x in pts if x >= lo]
        if hi is not None:
            hi = coord(hi)
            pts = [x for x in pts if x <= hi]
        return pts

    # -- evaluation --------------------------------------------------------

    def _piece_at(self, x: Rat) -> int:
        i = bisect_right(self._starts, x) - 1
        if i >= 0 and x < self._ends[i]:
            return i
        return -1

    def evaluate(self, x) -> LogPos:
        """Point value; at a breakpoint the right-hand piece is used."""
        x = coord(x)
        i = self._piece_at(x)
        if i < 0:
            return ZERO
        return LogPos(self.pieces[i].term.log2_at(x))

    def range_log2(self, l, r) -> tuple[float, float]:
        """(min, max) of log2 f over the closure of [l, r]."""
        l, r = coord(l), coord(r)
        if l == r:
            v = self.evaluate(l).log2
            return v, v
        lo, hi = math.inf, NEG_INF
        covered = l
        i = max(bisect_right(self._starts, l) - 1, 0)
        while i < len(self.pieces) and self._starts[i] < r:
            p = self.pieces[i]
            if p.r > l:
                a, b = max(l, p.l), min(r, p.r)
                if a > covered:
                    lo = NEG_INF
                for v in (p.term.log2_at(a), p.term.log2_at(b)):
                    lo, hi = min(lo, v), max(hi, v)
                covered = b
            i += 1
        if covered < r:
            lo = NEG_INF
        if hi == NEG_INF:
            lo = NEG_INF
        return lo, hi

    # -- integration -------------------------------------------------------

    def _tree_sum(self, i: int, j: int) -> float:
        """log2 of the sum of piece masses with index in [i, j)."""
        out = []
        i += self._n
        j += self._n
        while i < j:
            if i & 1:
                out.append(self._tree[i])
                i += 1
            if j & 1:
                j -= 1
                out.append(self._tree[j])
            i //= 2
            j //= 2
        return lsum(out)

    def integrate(self, l, r) -> LogPos:
        """Integral over [l, r]; the interval may extend past the support."""
        l, r = coord(l), coord(r)
        if not self.pieces or r <= l:
            return ZERO
        if self._mass is None:
            return self.integrate_direct(l, r)
        i = bisect_right(self._starts, l) - 1
        if i < 0 or l >= self._ends[i]:
            i += 1
        j = bisect_left(self._starts, r) - 1
        if i > j:
            return ZERO
        parts = []
        if i == j:
            p = self.pieces[i]
            a, b = max(l, p.l), min(r, p.r)
            if a == p.l and b == p.r:
                return LogPos(self._mass[i])
            return integrate_term(p.term, a, b) if a < b else ZERO
        p = self.pieces[i]
        if l <= p.l:
            parts.append(self._mass[i])
        else:
            parts.append(integrate_term(p.term, l, p.r).log2)
        if j > i + 1:
            parts.append(self._tree_sum(i + 1, j))
        p = self.pieces[j]
        if r >= p.r:
            parts.append(self._mass[j])
        else:
            parts.append(integrate_term(p.term, p.l, r).log2)
        return LogPos(lsum(parts))

    def integrate_direct(self, l, r) -> LogPos:
        """Piece-by-piece summation, no index (reference path)."""
        l, r = coord(l), coord(r)
        parts = []
        for p in self.pieces:
            a, b = max(l, p.l), min(r, p.r)
            if a < b:
                parts.append(integrate_term(p.term, a, b).log2)
        return LogPos(lsum(parts))

    def cumulative(self, x) -> LogPos:
        """Integral over (-inf, x)."""
        x = coord(x)
        i = bisect_right(self._starts, x) - 1
        if i < 0:
            return ZERO
        head = LogPos(self.prefix[i])
        p = self.pieces[i]
        return head + integrate_term(p.term, p.l, min(x, p.r))

    # -- algebra -----------------------------------------------------------

    def scale(self, c) -> "PiecewisePowerFn":
        c = LogPos.of(c)
        return PiecewisePowerFn(Piece(p.l, p.r, p.term.scaled(c)) for p in self.pieces)

    def reciprocal(self) -> "PiecewisePowerFn":
        return PiecewisePowerFn(Piece(p.l, p.r, p.term.reciprocal()) for p in self.pieces)

    def pow_scalar(self, t: float) -> "PiecewisePowerFn":
        """Pointwise ``f**t``; integrability is checked only when integrated."""
        return PiecewisePowerFn(Piece(p.l, p.r, p.term.power(t)) for p in self.pieces)

    def restrict(self, l, r) -> "PiecewisePowerFn":
        l, r = coord(l), coord(r)
        out = []
        for p in self.pieces:
            a, b = max(l, p.l), min(r, p.r)
            if a < b:
                out.append(Piece(a, b, p.term))
        return PiecewisePowerFn(out)

    def dilate(self, lam) -> "PiecewisePowerFn":
        """``x -> f(lam * x)`` for ``lam > 0``."""
        lam = coord(lam)
        return PiecewisePowerFn(
            Piece(p.l / lam, p.r / lam, p.term.dilated(lam)) for p in self.pieces
        )

    def reflect_even(self) -> "PiecewisePowerFn":
        """Even extension ``f(|x|)`` of a function supported on [0, inf)."""
        if self.pieces and self._starts[0] < 0:
            raise ValueError("even reflection needs support in [0, inf)")
        mirrored = []
        for p in reversed(self.pieces):
            t = p.term
            mirrored.append(Piece(-p.r, -p.l, replace(t, offset=-t.offset, orientation=-t.orientation)))
        return PiecewisePowerFn(mirrored + list(self.pieces))

    def multiply_step(self, s: "StepFn") -> "PiecewisePowerFn":
        """Pointwise product with a step function (partition refined)."""
        out = []
        bps = s.breakpoints
        for p in self.pieces:
            cuts = [x for x in bps if p.l < x < p.r]
            edges = [p.l] + cuts + [p.r]
            for lo, hi in zip(edges, edges[1:]):
                v = s.evaluate(lo)
                if not v.is_zero:
                    out.append(Piece(lo, hi, p.term.scaled(v)))
        return PiecewisePowerFn(out)

    def product(self, other: "PiecewisePowerFn") -> "PiecewisePowerFn":
        """Pointwise product; overlapping terms must share offset and
        orientation (or one of them be constant)."""
        cuts = sorted(set(self.breakpoints()) | set(other.breakpoints()))
        out = []
        for lo, hi in zip(cuts, cuts[1:]):
            i, j = self._piece_at(lo), other._piece_at(lo)
            if i < 0 or j < 0:
                continue
            out.append(Piece(lo, hi, _term_product(self.pieces[i].term, other.pieces[j].term)))
        return PiecewisePowerFn(out)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": "piecewise-power",
            "pieces": [
                {
                    "l": _qstr(p.l),
                    "r": _qstr(p.r),
                    "log2_coeff": p.term.coeff.log2,
                    "offset": _qstr(p.term.offset),
                    "exponent": p.term.exponent,
                    "orientation": "ascending" if p.term.orientation == ASC else "descending",
                }
                for p in self.pieces
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewisePowerFn":
        pieces = []
        for e in d["pieces"]:
            orient = ASC if e["orientation"] == "ascending" else DESC
            term = PowerTerm(LogPos(float(e["log2_coeff"])), Rat(e["offset"]), float(e["exponent"]), orient)
            pieces.append(Piece(Rat(e["l"]), Rat(e["r"]), term))
        return cls(pieces)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "PiecewisePowerFn":
        return cls.from_dict(json.loads(s))


def _term_product(s: PowerTerm, t: PowerTerm) -> PowerTerm:
    if s.exponent == 0.0:
        return t.scaled(s.coeff)
    if t.exponent == 0.0:
        return s.scaled(t.coeff)
    if s.offset != t.offset or s.orientation != t.orientation:
        raise DomainError("product of power terms with distinct offsets is not closed-form")
    return PowerTerm(s.coeff * t.coeff, s.offset, s.exponent + t.exponent, s.orientation)


def _qstr(x: Rat) -> str:
    return f"{x.numerator}/{x.denominator}"


def average(f, l, r) -> LogPos:
    """Mean of ``f`` over [l, r]."""
    l, r = coord(l), coord(r)
    if r <= l:
        raise ValueError("average over an interval of zero length")
    return f.integrate(l, r) / LogPos.of(r - l)


def constant(c, l, r) -> PiecewisePowerFn:
    return PiecewisePowerFn([Piece(l, r, PowerTerm(LogPos.of(c), Rat(0), 0.0))])


def indicator(l, r) -> PiecewisePowerFn:
    return constant(1, l, r)


def power(p: float, l, r, c=1, offset=0, orientation: int = ASC) -> PiecewisePowerFn:
    return PiecewisePowerFn([Piece(l, r, PowerTerm(LogPos.of(c), coord(offset), p, orientation))])


class StepFn:
    """Piecewise-constant nonnegative function with log-domain cell values.

    ``values[i]`` (a log2) holds on ``[breakpoints[i], breakpoints[i+1])``;
    the function vanishes outside.
    """

    def __init__(self, breakpoints: Sequence, values: Sequence[float]):
        bps = [coord(x) for x in breakpoints]
        if any(b <= a for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if len(bps) and len(values) != len(bps) - 1:
            raise ValueError("need one value per cell")
        self.breakpoints = bps
        self.values = [float(v.log2 if isinstance(v, LogPos) else v) for v in values]

    @classmethod
    def zero(cls) -> "StepFn":
        return cls([], [])

    def __repr__(self):
        return f"StepFn({len(self.values)} cells)"

    def cells(self):
        for i, v in enumerate(self.values):
            yield self.breakpoints[i], self.breakpoints[i + 1], LogPos(v)

    def evaluate(self, x) -> LogPos:
        x = coord(x)
        i = bisect_right(self.breakpoints, x) - 1
        if 0 <= i < len(self.values):
            return LogPos(self.values[i])
        return ZERO

    def evaluate_many(self, xs) -> list[float]:
        """log2 values at many points."""
        out = []
        for x in xs:
            i = bisect_right(self.breakpoints, coord(x)) - 1
            out.append(self.values[i] if 0 <= i < len(self.values) else NEG_INF)
        return out

    def scale(self, c) -> "StepFn":
        c = LogPos.of(c)
        return StepFn(self.breakpoints, [(LogPos(v) * c).log2 for v in self.values])

    def square(self) -> "StepFn":
        return StepFn(self.breakpoints, [2 * v for v in self.values])

    def to_dict(self) -> dict:
        return {
            "kind": "step",
            "breakpoints": [_qstr(x) for x in self.breakpoints],
            "log2_values": self.values,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StepFn":
        return cls([Rat(x) for x in d["breakpoints"]], [float(v) for v in d["log2_values"]])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "StepFn":
        return cls.from_dict(json.loads(s))
