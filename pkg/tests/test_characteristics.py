import math

import pytest

from a2lab import LogPos, Rat, WeightPair, constant, lacunary_pair, power, power_pair
from a2lab.characteristics import (
    A2Config, a2_dyadic, a2_product, a2_search, a_infty_estimate, reverse_holder_check, subset_mass_check,
    subset_mass_sweep,
)

FAST = A2Config(budget=48, refine_top=4, check_convergence=False)


def flat_pair() -> WeightPair:
    one = constant(1, 0, 2)
    return WeightPair(0.5, one, one, "constant")


def dilated(pair: WeightPair, lam) -> WeightPair:
    return WeightPair(pair.alpha, pair.sigma.dilate(lam), pair.w.dilate(lam), "dilated")


# -- A2 ------------------------------------------------------------------------------


def test_flat_weight_has_characteristic_one():
    assert a2_dyadic(flat_pair(), 6).value() == pytest.approx(1.0, rel=1e-15)
    assert a2_search(flat_pair(), FAST).value.value() == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("al", [0.5, 0.25, 1 / 64])
def test_power_pair_dyadic_reaches_the_tails(al):
    ref = 1 / (al * (2 - al))
    assert a2_dyadic(power_pair(al), 12).value() >= ref * (1 - 1e-12)


def test_power_pair_search_matches_closed_form():
    rep = a2_search(power_pair(0.25))
    assert rep.value.value() == pytest.approx(1 / (0.25 * 1.75), rel=1e-9)
    assert rep.converged
    assert rep.value.log2 >= rep.dyadic.log2


def test_lacunary_dyadic_is_of_order_one_over_alpha():
    pair = lacunary_pair(4)
    v = a2_dyadic(pair, 24).value()
    assert 1 / 16 <= pair.alpha * v <= 16


@pytest.mark.parametrize("a", [3, 5])
def test_search_never_below_dyadic(a):
    rep = a2_search(lacunary_pair(a), FAST)
    assert rep.value.log2 >= rep.dyadic.log2
    l, r = rep.interval
    assert abs(a2_product(lacunary_pair(a), l, r).log2 - rep.value.log2) < 1e-12


def test_scaling_the_weight_changes_nothing():
    pair = lacunary_pair(3).explicit(40)
    scaled = WeightPair(pair.alpha, pair.sigma.scale(5), pair.w.scale(Rat(1, 5)), "scaled")
    a = a2_search(pair, FAST).value.log2
    b = a2_search(scaled, FAST).value.log2
    assert abs(a - b) < 1e-12


def test_dilation_changes_nothing():
    pair = power_pair(0.25)
    a = a2_search(pair, FAST).value.log2
    b = a2_search(dilated(pair, 2), FAST).value.log2
    assert abs(a - b) < 1e-9


def test_dyadic_depth_must_be_positive():
    with pytest.raises(ValueError):
        a2_dyadic(power_pair(0.5), 0)


def test_report_schema():
    d = a2_search(power_pair(0.5), FAST).to_dict()
    assert {"value_log2", "interval", "dyadic_log2", "budget", "converged"} <= set(d)


# -- A-infinity ------------------------------------------------------------------------


def test_flat_weight_a_infinity():
    assert a_infty_estimate(constant(1, 0, 2), [(0, 1)], grid=32).value == pytest.approx(1.0, rel=1e-12)


def test_square_root_singularity_a_infinity():
    # M(w 1_[0,1]) = 2 w there, so the exact value is 2 = 1/alpha
    w = power(-0.5, 0, 2)
    vals = [a_infty_estimate(w, [(0, 1)], grid=n).value for n in (16, 64, 256)]
    assert all(1 <= v <= 2 + 1e-9 for v in vals)
    assert vals == sorted(vals)
    assert vals[-1] > 1.9


def test_a_infinity_grid_floor():
    with pytest.raises(ValueError):
        a_infty_estimate(constant(1, 0, 1), [(0, 1)], grid=8)


def test_a_infinity_epsilon():
    rep = a_infty_estimate(constant(1, 0, 1), [(0, 1)], grid=16)
    assert rep.epsilon == pytest.approx(0.25)


# -- reverse Hölder and subset mass ----------------------------------------------------


def test_reverse_holder_flat():
    chk = reverse_holder_check(constant(1, 0, 1), (0, 1), 3.0)
    assert chk.passed and chk.ratio == pytest.approx(0.5, rel=1e-13)


def test_reverse_holder_square_root():
    chk = reverse_holder_check(power(-0.5, 0, 1), (0, 1), 1.0)  # eps = 1/4
    ref = (8 / 3) / (2 * 2 ** 1.25)
    assert chk.epsilon == 0.25
    assert chk.ratio == pytest.approx(ref, rel=1e-12)
    assert chk.passed


def test_reverse_holder_non_integrable_fails():
    chk = reverse_holder_check(power(-0.9, 0, 1), (0, 1), 0.25 / 0.25)
    assert not chk.passed and not chk.integrable


def test_subset_mass_trivial_cases():
    w = lacunary_pair(3).w
    Q = (Rat(1, 8), Rat(7, 8))
    assert subset_mass_check(w, Q, [Q], 1.0, 4.0).passed
    assert subset_mass_check(w, Q, [], 1.0, 4.0).passed
    assert subset_mass_sweep(w, Q, [Q], 4.0) == [0.125, 0.25, 0.5, 1.0]


def test_subset_mass_detects_concentration():
    # half of Q carrying nearly all the mass violates the bound for large c
    w = power(-0.99, 0, 1)
    Q = (Rat(0), Rat(1))
    E = [(Rat(0), Rat(1, 1 << 20))]
    assert not subset_mass_check(w, Q, E, 1.0, 1.0).passed


def test_subset_mass_rejects_pieces_outside():
    with pytest.raises(ValueError):
        subset_mass_check(constant(1, 0, 2), (0, 1), [(Rat(1, 2), Rat(3, 2))], 1.0, 1.0)
