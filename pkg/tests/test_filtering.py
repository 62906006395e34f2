import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifshmm import (
    ImpossibleObservation,
    ModelFamily,
    StateGrid,
    TableEmission,
    init_filter,
    joint_density_bruteforce,
    loglik,
    predict_update_step,
    run_filter,
    simulate,
    unnormalized_filter_trace,
)
from ifshmm.fixtures import LOG_PHI0, random_family

from oracles import M2_LOGLIK_0, M2_LOGLIK_00, M2_M0, M2_P


def test_init_filter_m2(m2):
    state = init_filter(m2, 0.0)
    np.testing.assert_allclose(state.filter, M2_M0 / M2_M0.sum(), rtol=1e-14)
    assert state.log_lik == pytest.approx(M2_LOGLIK_0, abs=1e-12)


def test_init_filter_one_state(one_state):
    assert init_filter(one_state, 2.3).filter.tolist() == [1.0]


def test_init_filter_impossible():
    family = ModelFamily(grid=StateGrid.categorical(2),
                         emission=TableEmission((0, 1), [[1.0, 1.0], [0.0, 0.0]]),
                         matrix=M2_P)
    with pytest.raises(ImpossibleObservation):
        init_filter(family.build(), 1.0)


def test_step_matches_two_step_density(m2):
    state = predict_update_step(init_filter(m2, 0.0), 0.0, 0.0, m2)
    assert state.log_lik == pytest.approx(M2_LOGLIK_00, abs=1e-12)
    assert state.step == 1


def test_step_constant_emission_is_prediction(m2):
    state = init_filter(m2, 0.4)
    new = predict_update_step(state, 9.0, 0.4, m2, density=np.ones(2))
    np.testing.assert_allclose(new.filter, m2.P.T @ state.filter, atol=1e-15)
    assert new.log_c == pytest.approx(0.0, abs=1e-15)


def test_step_one_state(one_state):
    state = init_filter(one_state, 0.0)
    new = predict_update_step(state, 1.0, 0.0, one_state)
    assert new.filter.tolist() == [1.0]
    assert new.log_lik - state.log_lik == pytest.approx(LOG_PHI0 - 0.5, abs=1e-14)


def test_step_impossible_reports_index():
    family = ModelFamily(grid=StateGrid.categorical(2),
                         emission=TableEmission((0, 1), [[0.5, 0.5], [0.5, 0.5]]),
                         matrix=M2_P)
    with pytest.raises(ImpossibleObservation) as err:
        loglik(family.build(), [0.0, 1.0, 7.0])
    assert err.value.step == 2


def test_loglik_values(m2):
    assert loglik(m2, [0.0]) == pytest.approx(M2_LOGLIK_0, abs=1e-9)
    assert loglik(m2, [0.0, 0.0]) == pytest.approx(M2_LOGLIK_00, abs=1e-9)


def test_loglik_long_sequence_is_finite(m2):
    obs = simulate(m2, 2000, 7)
    assert np.isfinite(loglik(m2, obs))


def test_trace_values(m2):
    np.testing.assert_allclose(unnormalized_filter_trace(m2, [0.0, 0.0]),
                               [M2_LOGLIK_0, M2_LOGLIK_00], atol=1e-12)


def test_trace_prefix_consistency(m2):
    obs = simulate(m2, 30, 5)
    trace = unnormalized_filter_trace(m2, obs)
    for k in range(len(obs)):
        assert trace[k] == loglik(m2, obs.prefix(k + 1))


def test_degeneracy_long_run(m2):
    obs = simulate(m2, 200, 7)
    assert unnormalized_filter_trace(m2, obs)[-1] < -180


def test_order_matters_under_ar(m2_ar):
    assert loglik(m2_ar, [0.0, 2.0]) != pytest.approx(loglik(m2_ar, [2.0, 0.0]), abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_filter_properties(seed):
    rng = np.random.default_rng(seed)
    model = random_family(rng).build()
    n = int(rng.integers(1, 9))
    obs = rng.normal(scale=2, size=n)
    run = run_filter(model, obs)
    np.testing.assert_allclose(run.filters @ model.grid.weights, 1.0, atol=1e-12)
    assert run.filters.min() >= 0
    # unit-variance Gaussian: each normalizer is at most phi(0)
    assert np.all(run.log_mass <= LOG_PHI0 * np.arange(1, n + 1) + 1e-12)
    ref = joint_density_bruteforce(model, obs)
    assert abs(np.exp(run.log_lik) - ref) <= 1e-9 * ref
