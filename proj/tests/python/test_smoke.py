import math

import pytest

import madm


def test_rates_and_brackets():
    assert madm.q_bracket(3, 0.5) == pytest.approx(1.75)
    assert madm.rate_right(2, 2 / 3, 0.6) == pytest.approx(0.4)
    assert madm.rate_left(2, 2 / 3, 0.6) == pytest.approx(0.4 / 3)
    assert madm.gaussian_binomial(4, 2, 0.5) == pytest.approx(2.1875)
    mp = madm.ModelParams.one_param(0.6)
    assert mp.tau == pytest.approx(2 / 3)


def test_validation_error():
    with pytest.raises(ValueError):
        madm.ModelParams.make(0.4, 0.5)


def test_exact_routes_agree():
    xs = [-1, 0, 1]
    master = madm.master_equation_cdf([0, 0], 1, xs, 0.5, 0.6)
    for x, ref in zip(xs, master):
        assert madm.contour_prob_finite([0, 0], 1, x, 0.5, 0.6) == pytest.approx(ref, abs=1e-6)


def test_fredholm_and_simulation():
    r = madm.prob_two_param(1, 1.0, 0, 2 / 3, refine=False)
    assert 0 < r["prob"] < 1
    assert r["imag_residual"] < 1e-7
    xs = madm.sample_xm_step(1, 3.0, 2 / 3, n_big=32, replicas=4000, seed=3)
    emp = sum(1 for v in xs if v <= 0) / len(xs)
    assert abs(emp - r["prob"]) < 4 * math.sqrt(r["prob"] * (1 - r["prob"]) / len(xs))
    assert madm.product_identity(0.3 + 0.1j, 2, 1.0, 2 / 3) < 1e-8


def test_f2_and_airy():
    assert madm.airy_ai(0.0) == pytest.approx(3 ** (-2 / 3) / math.gamma(2 / 3), rel=1e-14)
    assert madm.f2(6.0) > 1 - 1e-8
    assert madm.f2(-2.0) < madm.f2(-1.0)


def test_determinism():
    a = madm.sample_xm([0, 0, 1], 2, 1.0, 0.6, replicas=200, seed=9)
    b = madm.sample_xm([0, 0, 1], 2, 1.0, 0.6, replicas=200, seed=9, threads=2)
    assert a == b
