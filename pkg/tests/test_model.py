import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifshmm import (
    GaussianAR,
    GaussianMean,
    ModelError,
    ModelFamily,
    ParamVector,
    ReducibleChainError,
    StateGrid,
    TableEmission,
    build_model,
    simulate,
    stationary_distribution,
)
from ifshmm.fixtures import m2_family, random_family

from oracles import M2_P, M2_PI


def m2_config():
    return {
        "grid": {"points": [0, 1], "weights": [1, 1]},
        "transition": {"matrix": M2_P.tolist()},
        "emission": {"family": "gaussian_mean", "params": {"mu": 0.0}},
        "theta": {"layout": ["mu"]},
    }


def test_build_from_config():
    model = build_model(m2_config())
    np.testing.assert_allclose(model.P, M2_P)
    np.testing.assert_allclose(model.pi, M2_PI, atol=1e-15)


def test_m2_family_reproduces_matrix(m2):
    np.testing.assert_allclose(m2.P, M2_P, atol=1e-15)
    assert m2.theta.names == ("logit[0,1]", "logit[1,0]", "mu")


def test_identity_is_reducible():
    config = m2_config()
    config["transition"]["matrix"] = [[1.0, 0.0], [0.0, 1.0]]
    with pytest.raises(ReducibleChainError, match="reducible"):
        build_model(config)


def test_weights_wrong_length():
    config = m2_config()
    config["grid"] = {"points": [0, 1, 2], "weights": [1, 1]}
    config["transition"]["matrix"] = np.full((3, 3), 1 / 3).tolist()
    with pytest.raises(ModelError, match="length"):
        build_model(config)


def test_non_stochastic_rows():
    config = m2_config()
    config["transition"]["matrix"] = [[0.7, 0.4], [0.4, 0.6]]
    with pytest.raises(ModelError, match="non-stochastic"):
        build_model(config)


@pytest.mark.parametrize("bad", [
    {"grid": {"points": [1, 0]}},
    {"emission": {"family": "poisson"}},
    {"theta": {"layout": ["sigma"]}},
    {"theta": {"layout": ["logit[0,1]"]}},
])
def test_config_errors(bad):
    config = {**m2_config(), **bad}
    with pytest.raises(ModelError):
        build_model(config)


def test_missing_key():
    config = m2_config()
    del config["emission"]
    with pytest.raises(ModelError, match="emission"):
        build_model(config)


def test_config_round_trip(m2):
    again = ModelFamily.from_config(m2.family.to_config()).build()
    np.testing.assert_array_equal(again.P, m2.P)
    assert again.theta.names == m2.theta.names


# -- stationary distribution ------------------------------------------------

def test_stationary_m2():
    grid = StateGrid.categorical(2)
    np.testing.assert_allclose(stationary_distribution(M2_P, grid), [4 / 7, 3 / 7], atol=1e-15)


def test_stationary_symmetric():
    grid = StateGrid.categorical(2)
    np.testing.assert_allclose(stationary_distribution(np.full((2, 2), 0.5), grid), [0.5, 0.5])


def test_stationary_identity_raises():
    with pytest.raises(ReducibleChainError):
        stationary_distribution(np.eye(2), StateGrid.categorical(2))


def test_stationary_with_weights():
    grid = StateGrid.trapezoid([0.0, 0.5, 1.5, 2.0])
    masses = np.array([[.5, .2, .2, .1], [.1, .6, .2, .1], [.3, .3, .3, .1], [.25, .25, .25, .25]])
    P = masses / grid.weights[None, :]
    pi = stationary_distribution(P, grid)
    assert np.dot(pi, grid.weights) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose((pi * grid.weights) @ P, pi, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_validated_model_invariants(seed):
    rng = np.random.default_rng(seed)
    model = random_family(rng).build()
    w = model.grid.weights
    np.testing.assert_allclose(model.P @ w, 1.0, atol=1e-12)
    assert np.dot(model.pi, w) == pytest.approx(1.0, abs=1e-12)
    assert np.abs((model.pi * w) @ model.P - model.pi).max() <= 1e-10
    obs = rng.normal(scale=3, size=5)
    table = model.emission_table(obs)
    assert np.all(table >= 0) and np.all(np.isfinite(table))


# -- params and emissions -----------------------------------------------------

def test_param_vector():
    theta = ParamVector(("a", "b"), [1.0, 2.0])
    assert theta["b"] == 2.0
    assert theta.replace(a=5.0).as_dict() == {"a": 5.0, "b": 2.0}
    assert theta.reordered(["b", "a"]).values.tolist() == [2.0, 1.0]
    with pytest.raises(ModelError):
        ParamVector(("a", "a"), [1, 2])


def test_family_rejects_nonfinite_theta():
    with pytest.raises(ModelError):
        m2_family().build([0.0, np.nan, 0.0])


def test_gaussian_mean_density():
    em = GaussianMean(0.5)
    table = em.density_table(np.array([1.0]), np.array([0.0, 1.0]))
    expected = np.exp(-0.5 * np.array([0.5, -0.5]) ** 2) / np.sqrt(2 * np.pi)
    np.testing.assert_allclose(table[0], expected, rtol=1e-15)


def test_gaussian_ar_uses_previous_observation():
    em = GaussianAR(0.0, 0.5)
    table = em.density_table(np.array([2.0, 1.0]), np.array([0.0]))
    # initial: mean 0; next: mean 0 + 0.5 * 2 = 1
    np.testing.assert_allclose(table[:, 0], [np.exp(-2) / np.sqrt(2 * np.pi), 1 / np.sqrt(2 * np.pi)])


def test_table_emission_unknown_symbol_is_zero():
    em = TableEmission(symbols=(0, 1), density=[[0.9, 0.2], [0.1, 0.8]])
    table = em.density_table(np.array([1.0, 3.0]), np.array([0.0, 1.0]))
    np.testing.assert_array_equal(table, [[0.1, 0.8], [0.0, 0.0]])


# -- simulation ---------------------------------------------------------------

def test_simulate_boundary(m2):
    seq = simulate(m2, 0, 1)
    assert len(seq) == 1 and seq.hidden.shape == (1,) and seq.seed == 1


def test_simulate_deterministic(m2):
    a, b = simulate(m2, 100, 7), simulate(m2, 100, 7)
    assert a.obs.tobytes() == b.obs.tobytes()
    assert a.hidden.tobytes() == b.hidden.tobytes()


def test_simulate_frequency_matches_stationary(m2):
    seq = simulate(m2, 5000, 11)
    assert abs(np.mean(seq.hidden == 0) - m2.pi[0]) <= 0.03


def test_simulate_table_emission():
    family = ModelFamily(grid=StateGrid.categorical(2),
                         emission=TableEmission((0, 1), [[0.9, 0.2], [0.1, 0.8]]),
                         matrix=M2_P)
    seq = simulate(family.build(), 200, 3)
    assert set(np.unique(seq.obs)) <= {0.0, 1.0}


def test_simulate_rejects_negative_length(m2):
    with pytest.raises(ModelError):
        simulate(m2, -1, 0)
