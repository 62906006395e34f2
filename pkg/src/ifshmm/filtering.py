"""Normalized prediction filter with log-likelihood accumulation.

Each step applies the corrected operator to the current filter and divides
by the total mass ``c_n``.  The filter stays a probability density over the
grid; only the scalar ``sum log c_n`` carries the (vanishing) joint density.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ImpossibleObservation
from .model import Model, as_observations


@dataclass(frozen=True)
class FilterState:
    """``filter[i] = p(X_{n+1} = x_i | xi_0..xi_n)`` as a density, plus ``sum log c``."""

    filter: np.ndarray
    log_lik: float
    step: int
    log_c: float


def _normalize(u, w, step):
    c = float(np.dot(u, w))
    if not c > 0.0:
        raise ImpossibleObservation(step)
    return u / c, c


def init_filter(model: Model, xi_0: float, density=None) -> FilterState:
    """Apply the initial operator to ``pi`` and normalize."""
    f = model.emission_table([xi_0])[0] if density is None else np.asarray(density, float)
    w = model.grid.weights
    u = model.P.T @ (f * model.pi * w)
    filt, c = _normalize(u, w, 0)
    log_c = float(np.log(c))
    return FilterState(filt, log_c, 0, log_c)


def predict_update_step(state: FilterState, xi_j: float, xi_prev: float, model: Model,
                        density=None) -> FilterState:
    """One corrected-operator step from ``state`` followed by renormalization.

    ``density`` overrides the emission column ``f(xi_j | ., xi_prev)``.
    """
    if density is None:
        density = model.emission_table([xi_prev, xi_j])[1]
    return _step(state, np.asarray(density, float), model)


def _step(state, f, model):
    w = model.grid.weights
    u = model.P.T @ (f * state.filter * w)
    step = state.step + 1
    filt, c = _normalize(u, w, step)
    log_c = float(np.log(c))
    return FilterState(filt, state.log_lik + log_c, step, log_c)


@dataclass(frozen=True)
class FilterRun:
    """Every filter of a pass over a sequence.

    ``filters[k]`` is the filter after ``xi_0..xi_k``; ``log_c[k]`` the log
    normalizer of that step; ``log_mass[k]`` their running sum, i.e. the log
    of the total mass of the unnormalized ``M_k``.
    """

    filters: np.ndarray
    log_c: np.ndarray

    @property
    def log_mass(self) -> np.ndarray:
        return np.cumsum(self.log_c)

    @property
    def log_lik(self) -> float:
        return float(self.log_mass[-1])


def run_filter(model: Model, obs) -> FilterRun:
    """Filter the whole sequence, keeping every intermediate state."""
    xi = as_observations(obs).obs
    table = model.emission_table(xi)
    w = model.grid.weights
    PT = model.P.T
    filters = np.empty((xi.size, model.n_states))
    log_c = np.empty(xi.size)
    h = model.pi
    for t in range(xi.size):
        u = PT @ (table[t] * h * w)
        h, c = _normalize(u, w, t)
        filters[t] = h
        log_c[t] = np.log(c)
    return FilterRun(filters, log_c)


def loglik(model: Model, obs) -> float:
    """``log p(xi_0..xi_n)``.

    Raises :class:`ImpossibleObservation` carrying the failing index.
    """
    return run_filter(model, obs).log_lik


def unnormalized_filter_trace(model: Model, obs) -> np.ndarray:
    """``log`` of the total mass of ``M_k`` for every prefix ``k = 0..n``.

    For unit-variance Gaussian emissions each ``c_k <= 1/sqrt(2 pi)``, so the
    trace drifts to ``-inf`` at least linearly.
    """
    return run_filter(model, obs).log_mass
