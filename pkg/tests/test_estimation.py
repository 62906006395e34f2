import numpy as np
import pytest

from ifshmm import ModelError, mle_fit, profile_loglik, score, simulate
from ifshmm.fixtures import m2_family, one_state_family


@pytest.fixture(scope="module")
def data():
    family = m2_family()
    return family, simulate(family.build(), 600, 21)


@pytest.fixture(scope="module")
def fit(data):
    family, obs = data
    theta0 = family.theta0()
    return mle_fit(family, obs, theta0.with_values(theta0.values + 0.3))


def test_fit_converges(fit, data):
    family, obs = data
    assert fit.converged, fit.message
    assert np.abs(score(family.build(fit.theta_hat), obs)).max() <= 1e-6
    assert fit.info.is_positive_definite()
    assert np.all(fit.std_errors > 0)


def test_fit_monotone_ascent(fit):
    lls = [row["log_lik"] for row in fit.trace]
    assert all(b >= a for a, b in zip(lls, lls[1:]))


def test_restart_at_optimum(fit, data):
    family, obs = data
    again = mle_fit(family, obs, fit.theta_hat)
    assert again.iterations <= 2
    np.testing.assert_allclose(again.theta_hat.values, fit.theta_hat.values, atol=1e-5)


def test_fit_invariant_to_parameter_order(fit, data):
    family, obs = data
    theta0 = family.theta0()
    start = theta0.with_values(theta0.values + 0.3)
    order = ("mu", "logit[1,0]", "logit[0,1]")
    permuted = mle_fit(family, obs, start.reordered(order))
    assert permuted.theta_hat.names == order
    np.testing.assert_allclose(permuted.theta_hat.reordered(fit.theta_hat.names).values,
                               fit.theta_hat.values, atol=1e-6)
    a = [row["log_lik"] for row in fit.trace]
    b = [row["log_lik"] for row in permuted.trace]
    assert len(a) == len(b)
    np.testing.assert_allclose(a, b, rtol=1e-10)


def test_one_state_fit_is_sample_mean(rng):
    obs = rng.normal(loc=0.7, size=80)
    result = mle_fit(one_state_family(), obs)
    assert result.converged
    assert result.theta_hat["mu"] == pytest.approx(obs.mean(), abs=1e-7)
    assert result.std_errors[0] == pytest.approx(1 / np.sqrt(80), rel=1e-6)


def test_nonfinite_start_rejected(data):
    family, obs = data
    with pytest.raises(ModelError):
        mle_fit(family, obs, [0.0, np.inf, 0.0])


def test_iteration_cap_reports_not_converged(data):
    family, obs = data
    result = mle_fit(family, obs, max_iter=1)
    assert not result.converged
    assert result.iterations == 1 and len(result.trace) == 2


def test_failed_evaluations_count_as_minus_inf():
    from ifshmm.estimation import _evaluate
    family = one_state_family()
    f, g = _evaluate(family, np.array([500.0]), np.array([0.0]), ("mu",))
    assert f == -np.inf and g is None


def test_nonfinite_objective_at_start():
    from ifshmm import NumericalError
    with pytest.raises(NumericalError, match="starting point"):
        mle_fit(one_state_family(), [500.0, 501.0])


def test_profile_one_state(rng):
    obs = rng.normal(loc=0.3, size=40)
    centre = obs.mean()
    grid = centre + np.linspace(-1, 1, 21)
    rows = profile_loglik(one_state_family(), obs, "mu", grid)
    best = max(rows, key=lambda r: r[1])
    assert best[0] == pytest.approx(grid[10])


def test_profile_unimodal(data):
    family, obs = data
    rows = profile_loglik(family, obs, "mu", np.linspace(-1, 1, 21))
    values = np.array([v for _, v in rows])
    peak = int(np.argmax(values))
    assert np.all(np.diff(values[: peak + 1]) > 0) and np.all(np.diff(values[peak:]) < 0)


def test_profile_parallel_matches_serial(data):
    family, obs = data
    grid = np.linspace(-0.5, 0.5, 4)
    assert profile_loglik(family, obs, "mu", grid, jobs=2) == profile_loglik(family, obs, "mu", grid)


def test_profile_impossible_points_are_minus_inf():
    from ifshmm import ModelFamily, StateGrid, TableEmission
    from oracles import M2_P
    family = ModelFamily(grid=StateGrid.categorical(2),
                         emission=TableEmission((0, 1), [[0.5, 0.5], [0.5, 0.5]]), matrix=M2_P)
    # fixed kernel and table: no free parameter to profile
    with pytest.raises(ModelError):
        profile_loglik(family, [0.0, 5.0], "mu", [0.0])


def test_profile_empty_grid(data):
    family, obs = data
    with pytest.raises(ModelError):
        profile_loglik(family, obs, "mu", [])
