"""
Sweeps over alpha = 2^-a that measure the scaling exponents.

Each experiment returns an :class:`ExperimentReport` whose rows carry
log2 quantities and whose ``assertions`` hold the acceptance verdicts.
"""

from __future__ import annotations

import math
import time

import numpy as np

from ..characteristics import A2Config, a2_search
from ..logpos import Rat, lsum
from ..operators import (
    SupSearchConfig, band_family, l2w_norm_sq, l2w_norm_sq_fn, maximal_over_containing, nested_family, overlay,
    sparse_apply, strong_sparse_apply, strong_sparse_values, weak_l2w_norm_sq,
)
from ..piecewise import indicator
from ..weights import lacunary_pair, power_pair
from .chain import flatten_chain
from .fitting import fit_log2
from .report import ExperimentReport


def default_jmax(alpha: float, factor: int = 32) -> int:
    """Members per band; the inner sum's tail is below 2^-factor."""
    return math.ceil(factor / alpha)


def default_kmax(alpha: float) -> int:
    return min(math.ceil(4 / alpha), 1 << 16)


def _cpu_ms(t0: float) -> float:
    return round((time.process_time() - t0) * 1000.0, 3)


# -- the strong lower bound ----------------------------------------------------------


def strong_oracle_log2(a: int, jmax: int, kmax: int) -> float:
    """Closed form of the squared-norm ratio for the band family.

    Band 1 is ``M_1 sum_j 1_[1/2 - 2^-j, 1/2)`` with ``M_1`` the average
    of sigma over [0, 1/2); on the spike w is a pure power of the distance to
    1/2, so each cell's w-mass is explicit.  Band k is a dilate of band 1
    and contributes ``2^(-(k-1) alpha)`` times as much.
    """
    al = 2.0 ** -a
    r = 2.0 ** -al
    one_r = -math.expm1(-al * math.log(2))  # 1 - r
    rJ = 2.0 ** (-al * jmax)
    one_rJ = -math.expm1(-al * jmax * math.log(2))
    # sum_{n<=J} n r^n and sum_{n<=J} r^n
    s1 = r * (one_rJ - jmax * rJ * one_r) / one_r**2
    s0 = r * one_rJ / one_r
    inner = 2 * s1 - s0  # sum (2n-1) r^n
    bands = -math.expm1(-al * kmax * math.log(2)) / one_r  # sum_{k<kmax} r^k
    # integral of sigma over one level, then over (0, 1)
    level = ((1 - al) ** al - (1 + al) ** al * 2 ** -al) / al + al ** (1 - al) * (1 + 2 ** -(2 - al)) / (2 - al)
    sigma01 = level / one_r
    return math.log2(sigma01) + al * math.log2(al) + math.log2(inner) + math.log2(bands)


def strong_lower_row(a: int, jmax: int | None = None, kmax: int | None = None,
                     cfg: SupSearchConfig | None = None, verify_bands: int = 3, a2: bool = True) -> dict:
    cfg = cfg or SupSearchConfig()
    t0 = time.process_time()
    pair = lacunary_pair(a)
    al = pair.alpha
    jmax = jmax or default_jmax(al)
    kmax = kmax or default_kmax(al)
    fam = band_family(a, jmax, 1, 1)
    stats: dict = {}
    vals = strong_sparse_values(fam, pair.sigma, cfg, stats)
    h1 = overlay(fam, [v.log2 for v, _ in vals])
    band1 = l2w_norm_sq(h1, pair.w)
    m1 = max(v for v, _ in vals)
    # deeper bands: check the dilation law on a few by direct search
    drift = 0.0
    for k in range(2, 2 + verify_bands):
        top = Rat(1, 1 << k)
        B = (top - Rat(1, 1 << (a + k)), top)
        mk, _ = maximal_over_containing(pair.sigma, B, cfg)
        drift = max(drift, abs(mk.log2 - m1.log2 - (k - 1) * (1 - al)))
    total = lsum(band1.log2 - (k - 1) * al for k in range(1, kmax + 1))
    sigma01 = pair.sigma.integrate(0, 1)
    ratio = total - sigma01.log2
    row = {
        "a": a, "alpha": al, "quantity_log2": ratio, "oracle_log2": strong_oracle_log2(a, jmax, kmax),
        "jmax": jmax, "kmax": kmax, "members": len(fam), "evals": stats.get("evals", 0),
        "band_scaling_drift": drift, "m1_log2": m1.log2,
    }
    row["a2_log2"] = a2_search(pair, A2Config(check_convergence=False)).value.log2 if a2 else None
    row["cpu_ms"] = _cpu_ms(t0)
    return row


def exp_strong_lower(a_list=range(6, 11), jmax: int | None = None, kmax: int | None = None,
                     cfg: SupSearchConfig | None = None, slope_target=(4.0, 0.2), oracle_tol: float = 0.02,
                     oracle_max_a: int = 8) -> ExperimentReport:
    rep = ExperimentReport("strong_lower", config={"a_list": list(a_list), "jmax": jmax, "kmax": kmax,
                                                   "search": vars(cfg or SupSearchConfig())})
    for a in a_list:
        row = strong_lower_row(a, jmax, kmax, cfg)
        extra = {k: v for k, v in row.items() if k not in ("a", "alpha", "a2_log2", "quantity_log2", "oracle_log2", "cpu_ms")}
        rep.add_row(a, row["alpha"], row["a2_log2"], row["quantity_log2"], row["oracle_log2"], row["cpu_ms"], **extra)
    rep.fit()
    if rep.slope is not None:
        rep.assertions["slope"] = abs(rep.slope - slope_target[0]) <= slope_target[1]
    rep.assertions["oracle"] = all(abs(r["quantity_log2"] - r["oracle_log2"]) <= oracle_tol
                                   for r in rep.rows if r["a"] <= oracle_max_a)
    rep.assertions["band_scaling"] = all(r["extra"]["band_scaling_drift"] < 1e-9 for r in rep.rows)
    rep.finished = time.time()
    return rep


# -- the weak lower bound --------------------------------------------------------------


def weak_lower_row(a: int, levels: int | None = None, cfg: SupSearchConfig | None = None,
                   cs=(0.5, 1.0, 2.0)) -> dict:
    cfg = cfg or SupSearchConfig()
    t0 = time.process_time()
    al = 2.0 ** -a
    pair = power_pair(al)
    K = levels or math.ceil(4 / al)
    g = pair.sigma.restrict(0, 1)
    h = strong_sparse_apply(nested_family(K), g, cfg)
    weak_sq, level = weak_l2w_norm_sq(h, pair.w)
    g_norm_sq = l2w_norm_sq_fn(g, pair.w)
    ratio_sq = weak_sq.log2 - g_norm_sq.log2
    a2 = a2_search(pair, A2Config(check_convergence=False)).value
    # explicit path: level c/alpha reached on [0, 2^-n) once n/(2-alpha) >= c/alpha
    m = h.evaluate(Rat(1, 4)).log2  # h = M * count, count 1 on [1/4, 1/2)
    paths = {}
    for c in cs:
        n = math.ceil(c * 2.0 ** (-m) / al - 1e-9)
        lam_sq = 2 * (m + math.log2(n)) if n <= K else float("nan")
        paths[str(c)] = lam_sq + pair.w.integrate(0, Rat(1, 1 << n)).log2 - g_norm_sq.log2 if n <= K else None
    return {
        "a": a, "alpha": al, "a2_log2": a2.log2, "quantity_log2": ratio_sq,
        "vs_phi_log2": ratio_sq - 2.8 * a2.log2, "paths": paths, "levels": K,
        "g_norm_sq_log2": g_norm_sq.log2, "weak_level_log2": level.log2, "cpu_ms": _cpu_ms(t0),
    }


def exp_weak_lower(a_list=range(5, 11), cfg: SupSearchConfig | None = None,
                   slope_target=(3.0, 0.2)) -> ExperimentReport:
    rep = ExperimentReport("weak_lower", config={"a_list": list(a_list), "search": vars(cfg or SupSearchConfig())})
    for a in a_list:
        row = weak_lower_row(a, cfg=cfg)
        extra = {k: v for k, v in row.items() if k not in ("a", "alpha", "a2_log2", "quantity_log2", "cpu_ms")}
        rep.add_row(a, row["alpha"], row["a2_log2"], row["quantity_log2"], None, row["cpu_ms"], **extra)
    rep.fit()
    if rep.slope is not None:
        rep.assertions["slope"] = abs(rep.slope - slope_target[0]) <= slope_target[1]
    phi = [r["extra"]["vs_phi_log2"] for r in rep.rows]
    rep.assertions["phi_increasing"] = all(y > x for x, y in zip(phi, phi[1:]))
    path_fits = {}
    for c in rep.rows[0]["extra"]["paths"] if rep.rows else ():
        ys = [r["extra"]["paths"][c] for r in rep.rows]
        if len(ys) >= 3 and all(y is not None for y in ys):
            path_fits[c] = fit_log2([r["a"] for r in rep.rows], ys)[0]
    rep.notes["path_slopes"] = path_fits
    rep.finished = time.time()
    return rep


# -- the chain case -------------------------------------------------------------------


def chain_grid(n: int = 10_000, depth: int = 64) -> list[Rat]:
    """Half uniform on [0, 1), half log-spaced down to 2^-depth."""
    half = n // 2
    pts = {Rat(i, half) for i in range(half)}
    for t in np.linspace(0.0, float(depth), n - half):
        e = int(math.floor(t))
        pts.add(Rat(2.0 ** (e - t)) / (1 << e) / 2)
    return sorted(pts)


def chain_row(a: int, g_kind: str = "sigma", levels: int | None = None, cfg: SupSearchConfig | None = None,
              grid: int = 10_000) -> dict:
    cfg = cfg or SupSearchConfig()
    t0 = time.process_time()
    al = 2.0 ** -a
    pair = power_pair(al)
    K = levels or math.ceil(4 / al)
    fam = nested_family(K)
    if g_kind == "sigma":
        g = pair.sigma.restrict(0, 1)
    elif g_kind == "one":
        g = indicator(0, 1)
    else:
        raise ValueError(f"unknown g {g_kind!r}")
    strong = strong_sparse_apply(fam, g, cfg)
    g_sq = l2w_norm_sq_fn(g, pair.w)
    op_ratio = 0.5 * (l2w_norm_sq(strong, pair.w).log2 - g_sq.log2)
    state = flatten_chain(g, fam, cfg)
    gt_sq = l2w_norm_sq_fn(state.g_tilde, pair.w)
    inflation = gt_sq.log2 - g_sq.log2
    a2 = a2_search(pair, A2Config(check_convergence=False)).value
    # pointwise domination on a fixed grid, against the family itself and
    # against the enlarged chain
    pts = chain_grid(grid, min(K + 2, 1000))
    lhs = strong.evaluate_many(pts)
    rhs_s = sparse_apply(fam, state.g_tilde).evaluate_many(pts)
    rhs_a = sparse_apply(state.nested, state.g_tilde).evaluate_many(pts)

    def worst(rhs):
        c = -math.inf
        for x, y in zip(lhs, rhs):
            if x == -math.inf:
                continue
            c = max(c, x - y)
        return c

    return {
        "a": a, "alpha": al, "a2_log2": a2.log2, "quantity_log2": op_ratio, "g": g_kind,
        "inflation_log2": inflation, "inflation_over_a2_log2": inflation - a2.log2,
        "domination_log2": worst(rhs_s), "domination_nested_log2": worst(rhs_a),
        "mean_preserved": state.mean_preserved(g), "enlargements": len(state.nested), "cpu_ms": _cpu_ms(t0),
    }


def exp_chain(a_list=range(4, 10), g_kinds=("sigma", "one"), cfg: SupSearchConfig | None = None,
              grid: int = 10_000, op_slope_max: float = 1.6, inflation_slope_max: float = 1.1) -> list[ExperimentReport]:
    reports = []
    dom = []
    for gk in g_kinds:
        rep = ExperimentReport(f"chain_{gk}", config={"a_list": list(a_list), "g": gk, "grid": grid,
                                                      "search": vars(cfg or SupSearchConfig())})
        for a in a_list:
            row = chain_row(a, gk, cfg=cfg, grid=grid)
            extra = {k: v for k, v in row.items() if k not in ("a", "alpha", "a2_log2", "quantity_log2", "cpu_ms")}
            rep.add_row(a, row["alpha"], row["a2_log2"], row["quantity_log2"], None, row["cpu_ms"], **extra)
        rep.fit()
        infl = fit_log2([r["a"] for r in rep.rows], [r["extra"]["inflation_log2"] for r in rep.rows])[0] \
            if len(rep.rows) >= 3 else None
        rep.notes["inflation_slope"] = infl
        if rep.slope is not None:
            rep.assertions["operator_slope"] = rep.slope <= op_slope_max
            rep.assertions["inflation_slope"] = infl <= inflation_slope_max
        rep.assertions["mean_preserved"] = all(r["extra"]["mean_preserved"] for r in rep.rows)
        dom.extend(r["extra"]["domination_log2"] for r in rep.rows)
        reports.append(rep)
    c_log2 = max(dom) if dom else -math.inf
    for rep in reports:
        rep.notes["domination_C"] = 2.0 ** c_log2
        rep.assertions["domination_finite"] = math.isfinite(c_log2)
        rep.finished = time.time()
    return reports


# -- the A2 sweep ------------------------------------------------------------------------


def exp_a2(a_list=range(4, 11), cfg: A2Config | None = None, slope_target=(1.0, 0.05)) -> ExperimentReport:
    cfg = cfg or A2Config()
    rep = ExperimentReport("a2_lacunary", config={"a_list": list(a_list), "search": vars(cfg)})
    for a in a_list:
        t0 = time.process_time()
        r = a2_search(lacunary_pair(a), cfg)
        rep.add_row(a, 2.0 ** -a, r.value.log2, r.value.log2, None, _cpu_ms(t0), dyadic_log2=r.dyadic.log2,
                    converged=r.converged, interval=[str(r.interval[0]), str(r.interval[1])])
    rep.fit()
    if rep.slope is not None:
        rep.assertions["slope"] = abs(rep.slope - slope_target[0]) <= slope_target[1]
    ys = [r["quantity_log2"] for r in rep.rows]
    # diagnostics: per-step increments and the slope over the last four points
    rep.notes["increments"] = [y1 - y0 for y0, y1 in zip(ys, ys[1:])]
    rep.notes["alpha_times_a2"] = [2.0 ** (y - r["a"]) for y, r in zip(ys, rep.rows)]
    if len(ys) >= 4:
        rep.notes["tail_slope"] = fit_log2([r["a"] for r in rep.rows[-4:]], ys[-4:])[0]
    rep.finished = time.time()
    return rep
