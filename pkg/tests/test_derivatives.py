import numpy as np
import pytest

from ifshmm import (
    fd_score,
    init_tangent,
    observed_information,
    score,
    simulate,
    tangent_filter_step,
    tangent_run,
)
from ifshmm.derivatives import stationary_derivative
from ifshmm.fixtures import one_state_family, random_family
from ifshmm.model import ModelFamily, StateGrid, GaussianMean


def test_unused_parameter_has_zero_score():
    family = ModelFamily(grid=StateGrid.categorical(1), emission=GaussianMean(0.3),
                         logits=np.zeros((1, 1)), layout=("logit[0,0]", "mu"))
    model = family.build()
    seen = []
    tangent_run(model, [0.1, -1.0, 2.0, 0.5], callback=lambda t, s: seen.append(s.dlog_lik[0]))
    assert seen == [0.0] * 4


def test_m2_score_matches_fd(m2):
    np.testing.assert_allclose(score(m2, [0.0, 0.0]), fd_score(m2, [0.0, 0.0]), atol=1e-6)


def test_one_state_score_at_symmetric_point(one_state):
    assert score(one_state, [0.0])[0] == pytest.approx(0.0, abs=1e-15)


def test_one_state_score_closed_form(rng):
    obs = rng.normal(size=12)
    model = one_state_family(0.4).build()
    assert score(model, obs)[0] == pytest.approx(np.sum(obs - 0.4), rel=1e-12)


def test_stepwise_matches_run(m2_ar, rng):
    obs = rng.normal(size=6)
    state = init_tangent(m2_ar, obs[0])
    for j in range(1, obs.size):
        state = tangent_filter_step(state, obs[j], obs[j - 1], m2_ar)
    full = tangent_run(m2_ar, obs)
    np.testing.assert_allclose(state.dlog_lik, full.dlog_lik, rtol=1e-13, atol=1e-15)
    assert state.base.log_lik == pytest.approx(full.base.log_lik, abs=1e-13)


def test_theta_argument(m2):
    theta = m2.theta.replace(mu=0.2)
    np.testing.assert_array_equal(score(m2, [0.0, 1.0], theta), score(m2.at(theta), [0.0, 1.0]))


def test_stationary_derivative_against_closed_form(m2):
    # two states: pi_0 = b / (a + b) with a = P01, b = P10
    dpi = stationary_derivative(m2)
    a, b = m2.P[0, 1], m2.P[1, 0]
    da = a * (1 - a)          # d P01 / d logit[0,1]
    db = b * (1 - b)          # d P10 / d logit[1,0]
    np.testing.assert_allclose(dpi[0], [-b * da / (a + b) ** 2, b * da / (a + b) ** 2], atol=1e-9)
    np.testing.assert_allclose(dpi[1], [a * db / (a + b) ** 2, -a * db / (a + b) ** 2], atol=1e-9)
    assert not np.any(dpi[2])


@pytest.mark.parametrize("seed", range(10))
def test_random_gradient_and_tangent_rows(seed):
    rng = np.random.default_rng(seed)
    model = random_family(rng).build()
    obs = rng.normal(size=int(rng.integers(1, 15)))
    rows = []
    state = tangent_run(model, obs, callback=lambda t, s: rows.append(s.dfilter @ model.grid.weights))
    assert np.abs(rows).max() <= 1e-10
    assert np.abs(state.dlog_lik - fd_score(model, obs)).max() <= 1e-5


def test_information_methods_agree(m2):
    obs = simulate(m2, 49, 7)
    a = observed_information(m2, obs)
    b = observed_information(m2, obs, method="full-fd")
    assert np.abs(a.matrix - b.matrix).max() <= 1e-4
    assert a.asymmetry <= 1e-4
    np.testing.assert_array_equal(a.matrix, a.matrix.T)


@pytest.mark.parametrize("method", ["analytic-fd", "full-fd"])
def test_one_state_information_is_length(method, rng):
    model = one_state_family(0.1).build()
    obs = rng.normal(size=50)
    info = observed_information(model, obs, method=method)
    assert info.matrix[0, 0] == pytest.approx(50.0, abs=1e-8)


def test_unknown_method(m2):
    with pytest.raises(ValueError):
        observed_information(m2, [0.0], method="bogus")

