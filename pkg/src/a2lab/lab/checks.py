"""Randomized invariant suite behind ``a2lab check``.

Every check returns ``(name, passed, detail)``.  Random draws come from a
seeded ``random.Random`` so a run is reproducible from its seed.
"""

from __future__ import annotations

import math
import random

import mpmath

from ..characteristics import a_infty_estimate, reverse_holder_check, subset_mass_check, DEFAULT_C_SWEEP
from ..logpos import LogPos, Rat, log_close
from ..operators import (
    NotSparseError, SupSearchConfig, band_family, check_sparse, nested_family, sparse_apply, strong_sparse_apply,
    l2w_norm_sq, weak_l2w_norm_sq,
)
from ..piecewise import ASC, DESC, PowerTerm, integrate_term
from ..weights import lacunary_pair, power_pair
from .chain import flatten_chain

Result = tuple[str, bool, str]

QUICK = SupSearchConfig(max_candidates=16, refinement_depth=32, tolerance=1e-8, levels=32)


def _rat(rng: random.Random, lo, hi, den: int = 1 << 20) -> Rat:
    lo, hi = Rat(lo), Rat(hi)
    return lo + (hi - lo) * Rat(rng.randrange(den + 1), den)


def _interval(rng, lo, hi) -> tuple[Rat, Rat]:
    while True:
        x, y = sorted((_rat(rng, lo, hi), _rat(rng, lo, hi)))
        if y > x:
            return x, y


def random_term(rng: random.Random) -> tuple[PowerTerm, Rat, Rat]:
    """A term with exponent in (-0.95, 3) and an interval on its domain."""
    p = rng.uniform(-0.95, 3.0)
    offset = _rat(rng, -4, 4)
    orient = rng.choice((ASC, DESC))
    near = _rat(rng, 0, 2) if rng.random() < 0.8 else Rat(0)
    far = near + _rat(rng, Rat(1, 1 << 12), 3)
    l, r = (offset + near, offset + far) if orient == ASC else (offset - far, offset - near)
    return PowerTerm(LogPos(rng.uniform(-20, 20)), offset, p, orient), l, r


def quadrature(term: PowerTerm, l: Rat, r: Rat) -> float:
    """Independent log2 value by tanh-sinh quadrature.

    With ``u = e^t`` the integrand ``u^p du`` becomes ``e^((p+1) t) dt``,
    which is smooth even when the interval touches the offset.
    """
    if term.orientation == ASC:
        a, b = l - term.offset, r - term.offset
    else:
        a, b = term.offset - r, term.offset - l
    q = term.exponent + 1
    with mpmath.workdps(30):
        lo = -mpmath.inf if a == 0 else mpmath.log(mpmath.mpf(a.numerator) / a.denominator)
        hi = mpmath.log(mpmath.mpf(b.numerator) / b.denominator)
        val = mpmath.quad(lambda t: mpmath.exp(q * t), [lo, hi])
        return float(mpmath.log(val, 2)) + term.coeff.log2


def check_quadrature(rng, samples: int = 1000, rel: float = 1e-8) -> Result:
    worst = 0.0
    for _ in range(samples):
        t, l, r = random_term(rng)
        got = integrate_term(t, l, r).log2
        ref = quadrature(t, l, r)
        worst = max(worst, abs(2.0 ** (got - ref) - 1.0))
    return "integrate_vs_quadrature", worst <= rel, f"worst relative error {worst:.2e} over {samples} terms"


def check_sparseness() -> Result:
    fams = {"nested": nested_family(64), "bands": band_family(6, 256, 4)}
    bad = []
    for name, fam in fams.items():
        try:
            check_sparse(fam, 0.5)
        except NotSparseError as e:
            bad.append(f"{name}: {e}")
    return "sparse_certificates", not bad, "; ".join(bad) or "both families certified at gamma=1/2"


def _grid_points(rng, n: int, lo=0, hi=1) -> list[Rat]:
    return sorted(_rat(rng, lo, hi) for _ in range(n))


def check_sandwich(rng, samples: int = 100) -> Result:
    """Plain sparse operator below the strong one, pointwise."""
    pair = lacunary_pair(4)
    worst = -math.inf
    for fam in (band_family(4, 32, 3), nested_family(24)):
        lo = strong_sparse_apply(fam, pair.sigma, QUICK)
        plain = sparse_apply(fam, pair.sigma)
        pts = _grid_points(rng, samples)
        for x, y in zip(plain.evaluate_many(pts), lo.evaluate_many(pts)):
            if x != -math.inf:
                worst = max(worst, x - y)
    return "sparse_below_strong", worst <= 1e-12, f"max log2(A/A*) = {worst:.3g}"


def check_weak_strong() -> Result:
    worst = -math.inf
    for a in (3, 4, 5):
        pair = power_pair(2.0 ** -a)
        g = pair.sigma.restrict(0, 1)
        h = strong_sparse_apply(nested_family(4 << a), g, QUICK)
        weak, _ = weak_l2w_norm_sq(h, pair.w)
        worst = max(worst, weak.log2 - l2w_norm_sq(h, pair.w).log2)
    return "weak_below_strong", worst <= 1e-12, f"max log2(weak^2/strong^2) = {worst:.3g}"


def check_self_similarity(rng, samples: int = 100) -> Result:
    """sigma(x/2) = 2^(1-alpha) sigma(x) on the spiky levels."""
    worst = 0.0
    for a in (3, 6, 10):
        pair = lacunary_pair(a)
        for _ in range(samples // 3 + 1):
            x = _rat(rng, Rat(1, 1 << 12), 1)
            lhs = pair.sigma.evaluate(x / 2).log2
            rhs = pair.sigma.evaluate(x).log2 + (1.0 - pair.alpha)
            if not log_close(LogPos(lhs), LogPos(rhs), 4):
                worst = max(worst, abs(lhs - rhs))
    return "self_similarity", worst == 0.0, "exact to 4 ulp" if worst == 0.0 else f"max log2 gap {worst:.3g}"


def check_mean_preservation() -> Result:
    bad = []
    for a in (3, 4, 5):
        pair = power_pair(2.0 ** -a)
        g = pair.sigma.restrict(0, 1)
        if not flatten_chain(g, nested_family(4 << a), QUICK).mean_preserved(g, 4):
            bad.append(a)
    return "mean_preservation", not bad, f"failed for a in {bad}" if bad else "4 ulp on every enlargement"


def holder_families(a: int = 3):
    """(name, w, window) for the power and lacunary families."""
    return [("power", power_pair(2.0 ** -a).w, (Rat(0), Rat(2))),
            ("lacunary", lacunary_pair(a).w, (Rat(0), Rat(2)))]


def check_reverse_holder(rng, samples: int = 100, a: int = 3) -> Result:
    details, ok = [], True
    for name, w, (lo, hi) in holder_families(a):
        probes = [(Rat(0), Rat(1)), (Rat(0), Rat(1, 4)), (Rat(1, 2), Rat(1)), (Rat(0), Rat(2))]
        ainf = a_infty_estimate(w, probes, grid=64).value
        ivs = [_interval(rng, lo, hi) for _ in range(samples)]
        res = [reverse_holder_check(w, I, ainf) for I in ivs]
        fails = sum(not r.passed for r in res)
        ok &= fails == 0
        details.append(f"{name}: A_inf>={ainf:.3f}, max ratio {max(r.ratio for r in res):.3f}, {fails} failures")
    return "reverse_holder", ok, "; ".join(details)


def random_subset(rng, Q, pieces: int = 4):
    return [_interval(rng, Q[0], Q[1]) for _ in range(rng.randint(1, pieces))]


def check_subset_mass(rng, samples: int = 100, a: int = 3, cs=DEFAULT_C_SWEEP) -> Result:
    details, ok = [], True
    for name, w, (lo, hi) in holder_families(a):
        probes = [(Rat(0), Rat(1)), (Rat(0), Rat(1, 4)), (Rat(1, 2), Rat(1)), (Rat(0), Rat(2))]
        ainf = a_infty_estimate(w, probes, grid=64).value
        cases = []
        for _ in range(samples):
            Q = _interval(rng, lo, hi)
            cases.append((Q, random_subset(rng, Q)))
        good = [c for c in cs if all(subset_mass_check(w, Q, E, c, ainf).passed for Q, E in cases)]
        ok &= bool(good)
        details.append(f"{name}: holds for c in {good}")
    return "subset_mass", ok, "; ".join(details)


def run_checks(seed: int = 0, samples: int = 100) -> list[Result]:
    rng = random.Random(seed)
    return [
        check_sparseness(),
        check_sandwich(rng, samples),
        check_weak_strong(),
        check_quadrature(rng, 10 * samples),
        check_self_similarity(rng, samples),
        check_mean_preservation(),
        check_reverse_holder(rng, samples),
        check_subset_mass(rng, samples),
    ]
