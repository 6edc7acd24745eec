import json
import math

import pytest

from a2lab import LogPos, Rat, constant, indicator, lacunary_pair, power_pair
from a2lab.lab.chain import flatten_chain, project_interval
from a2lab.lab.cli import main
from a2lab.lab.experiments import (
    chain_row, default_jmax, strong_lower_row, strong_oracle_log2, weak_lower_row,
)
from a2lab.lab.fitting import fit_exponent, fit_log2
from a2lab.lab.report import CSV_COLUMNS, ExperimentReport, emit_report, load_report
from a2lab.operators import SupSearchConfig, nested_family, sparse_apply, strong_sparse_apply

QUICK = SupSearchConfig(max_candidates=16, refinement_depth=48, tolerance=1e-10, levels=32)
PINNED = SupSearchConfig(max_expansion=0, max_candidates=16, refinement_depth=48)
GOLDEN = __import__("pathlib").Path(__file__).parent / "fixtures" / "report_golden.csv"


# -- fitting -----------------------------------------------------------------------------


def test_exact_square():
    slope, _, resid = fit_exponent([1, 2, 4, 8], [1, 4, 16, 64])
    assert slope == pytest.approx(2.0, abs=1e-14) and resid < 1e-14


def test_constant_absorbed_by_intercept():
    xs = [2, 3, 5, 7, 11]
    for c in (0.1, 1.0, 123.0):
        assert fit_exponent(xs, [c * x ** 1.5 for x in xs])[0] == pytest.approx(1.5, abs=1e-12)


def test_hand_least_squares():
    # log2 x = 1, 2, 3 are equally spaced, so the slope is (log2 49 - log2 3) / 2
    assert fit_exponent([2, 4, 8], [3, 11.5, 49])[0] == pytest.approx(2.0149, abs=1e-4)


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_exponent([1, 2], [1, 2])
    with pytest.raises(ValueError):
        fit_exponent([1, 2, 0], [1, 2, 3])
    with pytest.raises(ValueError):
        fit_log2([1, 2, 3], [1, math.inf, 2])


# -- reports --------------------------------------------------------------------------------


def sample_report() -> ExperimentReport:
    rep = ExperimentReport("demo", config={"a_list": [5, 4]}, started=0.0)
    rep.add_row(5, 0.03125, 5.5, 20.25, 20.0, 0.0)
    rep.add_row(4, 0.0625, 4.5, 16.25, None, 12.5, note="x")
    return rep


def test_empty_report_csv(tmp_path):
    (p,) = emit_report(ExperimentReport("empty"), tmp_path, ["csv"])
    assert p.read_text().splitlines() == [",".join(CSV_COLUMNS)]


def test_csv_matches_golden_file(tmp_path):
    (p,) = emit_report(sample_report(), tmp_path, ["csv"])
    assert p.read_text().splitlines() == GOLDEN.read_text().splitlines()


def test_json_round_trip_keeps_fit(tmp_path):
    rep = sample_report()
    rep.add_row(6, 0.015625, 6.5, 24.5, None, 1.0)
    rep.fit()
    (p,) = emit_report(rep, tmp_path, ["json"])
    back = load_report(p)
    assert (back.slope, back.intercept, back.residual) == (rep.slope, rep.intercept, rep.residual)
    assert back.rows == json.loads(json.dumps(rep.rows))


def test_svg_written(tmp_path):
    rep = sample_report()
    rep.add_row(6, 0.015625, 6.5, 24.5)
    rep.fit()
    (p,) = emit_report(rep, tmp_path, ["svg"])
    assert p.read_text().lstrip().startswith("<?xml")


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit_report(sample_report(), tmp_path, ["xlsx"])


# -- chain flattening ---------------------------------------------------------------------


def test_projection_of_the_left_half():
    assert project_interval(indicator(0, 1), (Rat(0), Rat(1, 2)), QUICK) == (0, 2)


def test_projection_of_a_constant_fills_the_domain():
    # g vanishes off its support, so the search domain is pinned to it
    g = constant(3, 0, 4)
    assert project_interval(g, (Rat(1), Rat(2)), PINNED) == (0, 4)


def test_projection_contains_the_interval():
    g = power_pair(0.125).sigma.restrict(0, 1)
    for B in [(Rat(1, 8), Rat(1, 4)), (Rat(0), Rat(1, 1024)), (Rat(3, 4), Rat(7, 8))]:
        L, R = project_interval(g, B, QUICK)
        assert L <= B[0] and B[1] <= R


@pytest.mark.parametrize("a", [3, 5])
def test_mean_preserved_to_four_ulp(a):
    g = power_pair(2.0 ** -a).sigma.restrict(0, 1)
    state = flatten_chain(g, nested_family(4 << a), QUICK)
    assert state.mean_preserved(g, 4)
    for (l0, r0), (l1, r1) in zip(state.nested, state.nested[1:]):
        assert l0 <= l1 and r1 <= r0


def test_constant_input_is_unchanged():
    g = constant(2, 0, 1)
    state = flatten_chain(g, nested_family(6), PINNED)
    for x in (Rat(1, 3), Rat(1, 100), Rat(99, 100)):
        assert abs(state.g_tilde.evaluate(x).log2 - 1.0) < 1e-14


def test_non_chain_rejected():
    with pytest.raises(ValueError):
        flatten_chain(indicator(0, 1), [(Rat(0), Rat(1, 2)), (Rat(1, 2), Rat(1))], QUICK)


def test_domination_with_finite_constant():
    g = power_pair(0.125).sigma.restrict(0, 1)
    fam = nested_family(32)
    state = flatten_chain(g, fam, QUICK)
    lhs = strong_sparse_apply(fam, g, QUICK)
    rhs = sparse_apply(fam, state.g_tilde)
    pts = [Rat(k, 997) for k in range(1, 997)] + [Rat(1, 1 << n) + Rat(1, 1 << (n + 3)) for n in range(1, 33)]
    gap = max(x - y for x, y in zip(lhs.evaluate_many(pts), rhs.evaluate_many(pts)) if x != -math.inf)
    assert gap < 4


# -- experiment rows --------------------------------------------------------------------------


def test_strong_row_matches_oracle():
    row = strong_lower_row(4, cfg=QUICK, a2=False)
    assert abs(row["quantity_log2"] - row["oracle_log2"]) <= 0.02
    assert row["band_scaling_drift"] < 1e-9


def test_strong_row_converged_in_jmax():
    jmax = default_jmax(2.0 ** -3)
    r1 = strong_lower_row(3, jmax, cfg=QUICK, verify_bands=0, a2=False)["quantity_log2"]
    r2 = strong_lower_row(3, 2 * jmax, cfg=QUICK, verify_bands=0, a2=False)["quantity_log2"]
    assert abs(2.0 ** (r2 - r1) - 1) < 1e-6


def test_strong_oracle_by_direct_summation():
    # double sum written out term by term for a small case
    a, J, K = 3, 40, 6
    al = 2.0 ** -a
    r = 2 ** -al
    level = ((1 - al) ** al - (1 + al) ** al * 2 ** -al) / al + al ** (1 - al) * (1 + 2 ** -(2 - al)) / (2 - al)
    sigma01 = level / (1 - r)
    direct = sigma01 * al ** al * sum((2 * n - 1) * r ** n for n in range(1, J + 1)) * sum(r ** k for k in range(K))
    assert strong_oracle_log2(a, J, K) == pytest.approx(math.log2(direct), abs=1e-12)


def test_weak_row_norm_of_the_input():
    row = weak_lower_row(4, cfg=QUICK)
    al = 2.0 ** -4
    assert row["g_norm_sq_log2"] == pytest.approx(-math.log2(2 - al), abs=1e-12)
    assert set(row["paths"]) == {"0.5", "1.0", "2.0"}


def test_chain_row_flat_input():
    row = chain_row(4, "one", cfg=QUICK, grid=400)
    assert row["mean_preserved"] and math.isfinite(row["domination_log2"])
    with pytest.raises(ValueError):
        chain_row(4, "cantor", cfg=QUICK)


# -- command line ---------------------------------------------------------------------------------


def test_cli_single_pair(tmp_path, capsys):
    out = tmp_path / "p.json"
    assert main(["char", "--pair", "power:alpha=0.25", "--json", str(out)]) == 0
    d = json.loads(out.read_text())
    assert 2 ** d["value_log2"] == pytest.approx(1 / (0.25 * 1.75), rel=1e-9)


def test_cli_weak_sweep_writes_reports(tmp_path):
    code = main(["weak-lower", "--a-list", "3..5", "--out", str(tmp_path), "--format", "csv,json"])
    assert code == 0
    assert (tmp_path / "weak_lower.csv").exists() and (tmp_path / "weak_lower.json").exists()


def test_cli_check_suite(capsys):
    assert main(["check", "--samples", "10", "--seed", "3"]) == 0
    assert capsys.readouterr().out.count("PASS") == 8
