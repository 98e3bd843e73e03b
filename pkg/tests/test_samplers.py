import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from serofoi.analysis import wasserstein_1d
from serofoi.data import generate_synthetic
from serofoi.design import toy_design
from serofoi.inference.likelihood import SeroDataset
from serofoi.inference.priors import PriorSpec, Uniform, UniformAngle, log_prior
from serofoi.inference.samplers import (
    Target,
    _betas_from_gaps,
    apt,
    initial_ladder,
    pm_rwm,
)
from serofoi.models import ToyModel, make_target


def flat_target(spec):
    return Target(lambda th, rng: 0.0, lambda th: log_prior(th, spec), spec.angle_mask, ("x",))


def gaussian_target(mu=2.0, sd=0.3):
    spec = PriorSpec((Uniform(0, 5),))
    return Target(lambda th, rng: -0.5 * ((th[0] - mu) / sd) ** 2,
                  lambda th: log_prior(th, spec), None, ("x",))


def test_pm_prior_recovery():
    spec = PriorSpec((Uniform(0, 5),))
    chain = pm_rwm(flat_target(spec), [2.5], 200_000, 2.0, np.random.default_rng(1))
    draws = chain.theta[::20, 0]
    assert stats.kstest(draws, spec.components[0].cdf).pvalue > 0.01


def test_pm_angle_wraps_and_stays_uniform():
    spec = PriorSpec((UniformAngle(),))
    chain = pm_rwm(flat_target(spec), [0.1], 100_000, 3.0, np.random.default_rng(2))
    x = chain.theta[:, 0]
    assert x.min() >= 0 and x.max() < 2 * np.pi
    assert chain.acceptance_rate == 1.0
    assert stats.kstest(x[::10], spec.components[0].cdf).pvalue > 0.01


def test_pm_reproducible():
    t = gaussian_target()
    a = pm_rwm(t, [1.0], 2000, 0.5, np.random.default_rng(3))
    b = pm_rwm(t, [1.0], 2000, 0.5, np.random.default_rng(3))
    np.testing.assert_array_equal(a.theta, b.theta)
    np.testing.assert_array_equal(a.log_lik, b.log_lik)


def test_pm_retains_estimate_between_moves():
    calls = []

    def noisy(th, rng):
        val = float(rng.normal())
        calls.append(val)
        return val

    spec = PriorSpec((Uniform(0, 5),))
    t = Target(noisy, lambda th: log_prior(th, spec), None, ("x",))
    chain = pm_rwm(t, [2.5], 500, 0.1, np.random.default_rng(4))
    assert len(chain) == 500
    # the stored value only changes on acceptance, and then to a fresh estimate
    for n in range(1, 500):
        if not chain.accepted[n]:
            assert chain.log_lik[n] == chain.log_lik[n - 1]
        else:
            assert chain.log_lik[n] in calls
    assert not chain.interrupted


def test_pm_rejects_off_support_without_likelihood_call():
    calls = []
    spec = PriorSpec((Uniform(0, 1),))
    t = Target(lambda th, rng: calls.append(th[0]) or 0.0, lambda th: log_prior(th, spec), None)
    pm_rwm(t, [0.5], 1000, 5.0, np.random.default_rng(5))
    assert all(0 <= x <= 1 for x in calls)


def test_pm_bad_start():
    with pytest.raises(ValueError):
        pm_rwm(gaussian_target(), [-1.0], 10, 0.5, np.random.default_rng(0))


def test_pm_interrupt_keeps_completed_draws():
    count = [0]

    def stop_after(th, rng):
        count[0] += 1
        if count[0] > 50:
            raise KeyboardInterrupt
        return 0.0

    # support wide enough that every proposal reaches the likelihood
    spec = PriorSpec((Uniform(-1e6, 1e6),))
    t = Target(stop_after, lambda th: log_prior(th, spec), None, ("x",))
    chain = pm_rwm(t, [1.0], 1000, 0.5, np.random.default_rng(6))
    assert chain.interrupted and len(chain) == 49


def test_pm_proposal_shape_scales_coordinates():
    spec = PriorSpec((Uniform(-1e3, 1e3), Uniform(-1e3, 1e3)))
    t = Target(lambda th, rng: 0.0, lambda th: log_prior(th, spec), None)
    chain = pm_rwm(t, [0.0, 0.0], 4000, 1.0, np.random.default_rng(7), proposal_shape=[1.0, 0.01])
    steps = np.diff(chain.theta, axis=0)
    ratio = steps[:, 1].std() / steps[:, 0].std()
    assert ratio == pytest.approx(0.01, rel=0.1)


def test_initial_ladder():
    np.testing.assert_allclose(initial_ladder(4), [1, 0.5, 0.25, 0.125])
    np.testing.assert_allclose(_betas_from_gaps(np.log(np.diff(1 / initial_ladder(4)))),
                               initial_ladder(4))


@settings(max_examples=50)
@given(st.lists(st.floats(-30, 30), min_size=1, max_size=8))
def test_ladder_from_gaps_is_valid(log_gaps):
    betas = _betas_from_gaps(np.array(log_gaps))
    assert betas[0] == 1.0
    assert np.all(betas > 0)
    assert np.all(np.diff(betas) <= 0)


def test_apt_two_levels_flat_swaps_always():
    spec = PriorSpec((Uniform(0, 5),))
    res = apt(flat_target(spec), [2.5], 2, 50_000, np.random.default_rng(8), sigma0=2.0)
    assert np.all(res.swap_prob == 1.0)
    assert res.swap_rate() == 1.0
    for chain in res.chains:
        assert stats.kstest(chain.theta[::10, 0], spec.components[0].cdf).pvalue > 0.01


def test_apt_ladder_stays_ordered():
    res = apt(gaussian_target(sd=0.05), [2.0], 5, 5000, np.random.default_rng(9))
    assert np.all(res.betas[:, 0] == 1.0)
    assert np.all(res.betas > 0)
    assert np.all(np.diff(res.betas, axis=1) < 0)


def test_apt_adapts_towards_targets():
    res = apt(gaussian_target(sd=0.05), [2.0], 3, 40_000, np.random.default_rng(10))
    assert res.level_acceptance(10_000) == pytest.approx([0.1] * 3, abs=0.03)
    assert res.swap_rate(10_000) == pytest.approx(0.234, abs=0.05)


def test_apt_reproducible_and_traces_have_run_length():
    t = gaussian_target()
    a = apt(t, [1.0], 3, 500, np.random.default_rng(11))
    b = apt(t, [1.0], 3, 500, np.random.default_rng(11))
    for ca, cb in zip(a.chains, b.chains):
        np.testing.assert_array_equal(ca.theta, cb.theta)
    np.testing.assert_array_equal(a.betas, b.betas)
    assert a.betas.shape == (500, 3) and len(a.swap_level) == 500
    assert set(np.unique(a.swap_level)) <= {0, 1}


def test_apt_swaps_carry_stored_estimates():
    res = apt(gaussian_target(), [1.0], 3, 2000, np.random.default_rng(12))
    for n in np.nonzero(res.swap_accepted)[0][:50]:
        if n == 0:
            continue
        k = res.swap_level[n]
        hot, cold = res.chains[k + 1], res.chains[k]
        moved = not (hot.accepted[n] or cold.accepted[n])
        if moved:
            assert cold.log_lik[n] == hot.log_lik[n - 1]
            assert hot.log_lik[n] == cold.log_lik[n - 1]


def test_apt_needs_two_levels():
    with pytest.raises(ValueError):
        apt(gaussian_target(), [1.0], 1, 10, np.random.default_rng(0))


def test_apt_cold_chain_matches_pm_rwm():
    t = gaussian_target(mu=2.0, sd=0.3)
    pm = pm_rwm(t, [2.0], 100_000, 0.8, np.random.default_rng(13))
    res = apt(t, [2.0], 4, 100_000, np.random.default_rng(14))
    assert wasserstein_1d(pm.theta[10_000:, 0], res.cold.theta[10_000:, 0]) <= 0.05


@pytest.mark.slow
def test_pm_posterior_does_not_depend_on_m():
    model = ToyModel()
    boxes = toy_design()
    data, _ = generate_synthetic(boxes, model.force(np.array([np.pi])), 10, np.random.default_rng(15))
    chains = []
    for M, seed in ((50, 16), (500, 17)):
        target = make_target(model, data, M)
        chains.append(pm_rwm(target, [np.pi], 30_000, 0.5, np.random.default_rng(seed)))
    assert wasserstein_1d(chains[0].theta[3000:, 0], chains[1].theta[3000:, 0]) <= 0.05


def test_empty_dataset_target_is_prior():
    target = make_target(ToyModel(), SeroDataset(()), 10)
    assert target.log_likelihood(np.array([1.0]), np.random.default_rng(0)) == 0.0
