"""Reference model families used by the diagnostics, tests and demos."""
from __future__ import annotations

import math

import numpy as np

from .model import GaussianAR, GaussianMean, ModelFamily, StateGrid

M2_MATRIX = np.array([[0.7, 0.3], [0.4, 0.6]])
M2_LAYOUT = ("logit[0,1]", "logit[1,0]", "mu")


def logits_from_matrix(P) -> np.ndarray:
    """Logits with zero diagonal reproducing a strictly positive row-stochastic ``P``."""
    P = np.asarray(P, dtype=float)
    return np.log(P) - np.log(np.diag(P))[:, None]


def m2_family(mu: float = 0.0, layout=M2_LAYOUT) -> ModelFamily:
    """Two states at 0 and 1, ``P = [[.7, .3], [.4, .6]]``, unit Gaussian mean ``x + mu``.

    Free parameters: the two off-diagonal logits (diagonal fixed at 0) and ``mu``.
    """
    return ModelFamily(grid=StateGrid.categorical(2), emission=GaussianMean(mu),
                       logits=logits_from_matrix(M2_MATRIX), layout=layout)


def m2_ar_family(mu: float = 0.0, rho: float = 0.5) -> ModelFamily:
    """M2 chain with autoregressive emission mean ``x + mu + rho * xi_{t-1}``."""
    return ModelFamily(grid=StateGrid.categorical(2), emission=GaussianAR(mu, rho),
                       logits=logits_from_matrix(M2_MATRIX), layout=M2_LAYOUT + ("rho",))


def symmetric_family(n_states: int = 2, stay: float = 0.8) -> ModelFamily:
    """Symmetric doubly-stochastic fixed kernel; uniform stationary law."""
    off = (1.0 - stay) / (n_states - 1)
    P = np.full((n_states, n_states), off)
    np.fill_diagonal(P, stay)
    return ModelFamily(grid=StateGrid.categorical(n_states), emission=GaussianMean(0.0),
                       matrix=P, layout=("mu",))


def one_state_family(mu: float = 0.0) -> ModelFamily:
    """Degenerate chain: iid unit Gaussian observations with mean ``mu``."""
    return ModelFamily(grid=StateGrid.categorical(1), emission=GaussianMean(mu),
                       logits=np.zeros((1, 1)), layout=("mu",))


def random_family(rng: np.random.Generator, max_states: int = 4, ar: bool | None = None) -> ModelFamily:
    """Random positive chain on 1..max_states states with Gaussian emissions.

    All logits are free; means sit on a random increasing grid.
    """
    K = int(rng.integers(1, max_states + 1))
    points = np.sort(rng.uniform(-2, 2, size=K))
    while K > 1 and np.any(np.diff(points) <= 1e-3):
        points = np.sort(rng.uniform(-2, 2, size=K))
    if ar is None:
        ar = bool(rng.integers(2))
    mu = float(rng.normal(scale=0.5))
    emission = GaussianAR(mu, float(rng.uniform(-0.6, 0.6))) if ar else GaussianMean(mu)
    logits = rng.normal(size=(K, K))
    layout = tuple(f"logit[{i},{j}]" for i in range(K) for j in range(K) if i != j)
    layout += emission.param_names
    return ModelFamily(grid=StateGrid.categorical(K, points), emission=emission,
                       logits=logits, layout=layout)


LOG_PHI0 = -0.5 * math.log(2 * math.pi)
