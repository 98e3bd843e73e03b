import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from serofoi.design import (
    SmoothedBox,
    age_cdf,
    box_density,
    box_sample,
    time_cdf,
    time_marginal,
    time_marginal_sample,
    toy_design,
    trapezoid_eval,
)
from serofoi.errors import InvalidGeometry

UNIT = SmoothedBox((0.0, 1.0), (0.0, 1.0), 0.01, 0.01)


def test_trapezoid_examples():
    assert trapezoid_eval(0.5, 0, 1, 0.01) == 1.0
    assert trapezoid_eval(0.0, 0, 1, 0.01) == pytest.approx(0.5)
    assert trapezoid_eval(-0.02, 0, 1, 0.01) == 0.0
    assert trapezoid_eval(1.0, 0, 1, 0.01) == pytest.approx(0.5)
    assert trapezoid_eval(0.0, 0, 1, 0.0) == 0.5


def test_trapezoid_matches_ramp_formula():
    # 50 x + 0.5 on the left ramp of the unit interval
    x = np.linspace(-0.01, 0.01, 21)
    np.testing.assert_allclose(trapezoid_eval(x, 0, 1, 0.01), 50 * x + 0.5, atol=1e-12)


@pytest.mark.parametrize("lo, hi, edge", [(1, 1, 0.0), (2, 1, 0.0), (0, 1, -0.1), (0, 1, 0.5)])
def test_invalid_geometry(lo, hi, edge):
    with pytest.raises(InvalidGeometry):
        trapezoid_eval(0.3, lo, hi, edge)
    with pytest.raises(InvalidGeometry):
        SmoothedBox((lo, hi), (0, 1), edge, 0.0)


def test_unit_box_center_density():
    assert box_density(UNIT, 0.5, 0.5) == pytest.approx(1.0)
    assert box_density(UNIT, 1.5, 0.5) == 0.0
    assert box_density(UNIT, 0.5, -0.011) == 0.0


def test_toy_age_box_density_scales_by_width():
    box = SmoothedBox((0.0, 1.0), (0.0, 0.05), 0.01, 0.0005)
    # psi(20 a) psi(t) is 1 on the plateau; normalizing divides by the 0.05 width
    assert box_density(box, 0.5, 0.025) == pytest.approx(20.0)


def _integrate_box(box):
    tk = box.t_kinks()
    ak = box.a_kinks()
    total = 0.0
    for t0, t1 in zip(tk[:-1], tk[1:]):
        for a0, a1 in zip(ak[:-1], ak[1:]):
            v, _ = integrate.dblquad(lambda a, t: float(box_density(box, t, a)), t0, t1, a0, a1,
                                     epsabs=1e-13, epsrel=1e-13)
            total += v
    return total


@pytest.mark.parametrize("box", [
    UNIT,
    SmoothedBox((2000, 2001), (4, 5), 0.01, 0.01),
    SmoothedBox((0, 1), (0, 0.05), 0.01, 0.0005, a_floor=0.0),
    SmoothedBox((0, 2), (1, 3), 0.0, 0.3),
])
def test_density_integrates_to_one(box):
    assert _integrate_box(box) == pytest.approx(1.0, abs=1e-10)


def test_time_marginal_integrates_to_one():
    box = SmoothedBox((2.0, 3.0), (0.0, 1.0), 0.01, 0.01)
    tk = box.t_kinks()
    total = sum(integrate.quad(lambda t: float(time_marginal(box, t)), a, b,
                               epsabs=1e-14)[0] for a, b in zip(tk[:-1], tk[1:]))
    assert total == pytest.approx(1.0, abs=1e-10)
    assert time_marginal(UNIT, 0.5) == pytest.approx(1.0)
    assert time_marginal(UNIT, 1.2) == 0.0


def test_time_marginal_is_age_integral():
    box = SmoothedBox((0.0, 1.0), (0.0, 0.05), 0.01, 0.0005, a_floor=0.0)
    ak = box.a_kinks()
    for t in (-0.005, 0.003, 0.5, 0.995):
        v = sum(integrate.quad(lambda a: float(box_density(box, t, a)), a0, a1, epsabs=1e-14)[0]
                for a0, a1 in zip(ak[:-1], ak[1:]))
        assert v == pytest.approx(float(time_marginal(box, t)), abs=1e-12)


def test_sample_mean_and_support(rng):
    t, a = box_sample(UNIT, rng, 100_000)
    sd = np.sqrt(1 / 12 + 0.01 ** 2 / 3)
    assert abs(t.mean() - 0.5) < 4 * sd / np.sqrt(t.size)
    assert t.min() >= -0.01 and t.max() <= 1.01
    assert a.min() >= -0.01 and a.max() <= 1.01


def test_edge_zero_is_uniform(rng):
    box = SmoothedBox((0.0, 1.0), (0.0, 1.0))
    t, _ = box_sample(box, rng, 100_000)
    assert stats.kstest(t, "uniform").pvalue > 0.01


@pytest.mark.parametrize("box", [UNIT, toy_design()[2], SmoothedBox((2000, 2001), (0, 1), 0.01, 0.01, 0.0)])
def test_samples_follow_analytic_cdfs(box, rng):
    t, a = box_sample(box, rng, 100_000)
    assert stats.kstest(t, lambda x: time_cdf(box, x)).pvalue > 0.01
    assert stats.kstest(a, lambda x: age_cdf(box, x)).pvalue > 0.01
    assert a.min() >= box.a_support[0]


def test_time_marginal_sampler(rng):
    box = toy_design()[0]
    t = time_marginal_sample(box, rng, 50_000)
    assert stats.kstest(t, lambda x: time_cdf(box, x)).pvalue > 0.01


def test_box_sample_needs_positive_n(rng):
    with pytest.raises(ValueError):
        box_sample(UNIT, rng, 0)


def test_toy_design_layout():
    boxes = toy_design()
    assert len(boxes) == 6
    assert boxes[3].t_range == (3.0, 4.0)
    assert boxes[3].a_range == (0.0, 0.05)
    assert boxes[3].edge_a == pytest.approx(0.0005)
    assert boxes[3].a_support[0] == 0.0


def test_unit_cell_floor_only_for_newborns():
    assert SmoothedBox.unit_cell(2001, 0).a_floor == 0.0
    assert SmoothedBox.unit_cell(2001, 4).a_floor is None


@settings(max_examples=80, deadline=None)
@given(st.floats(-5, 5), st.floats(0.1, 5), st.floats(0.0, 0.49), st.floats(-10, 10))
def test_trapezoid_bounded_and_continuous(lo, width, rel, x):
    hi = lo + width
    edge = rel * width
    v = trapezoid_eval(x, lo, hi, edge)
    assert 0.0 <= v <= 1.0
    if edge > 0:
        eps = 1e-9
        assert abs(trapezoid_eval(x + eps, lo, hi, edge) - v) <= eps / (2 * edge) + 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 0.49), st.floats(0.0, 0.49), st.floats(-1, 3), st.floats(-1, 3))
def test_density_nonnegative(rt, ra, t, a):
    box = SmoothedBox((0.0, 2.0), (0.0, 2.0), 2 * rt, 2 * ra)
    assert box_density(box, t, a) >= 0.0
