"""Observation-indexed operators on grid functions, and exact path-sum oracles.

Two conventions for the operator indexed by an observation ``xi_j`` are
implemented side by side.  For a grid function ``h``:

* forward-kernel form, integrating the *second* kernel argument::

      (A h)(x) = sum_y p(x, y) f(xi_j | y, xi_{j-1}) h(y) w(y)

* corrected form, integrating the *first* kernel argument::

      (C h)(x) = sum_y p(y, x) f(xi_j | y, xi_{j-1}) h(y) w(y)

Iterating the corrected form from ``pi`` yields ``M_n(x) = p(X_{n+1}=x,
xi_0..xi_n)``, whose integral is the joint density of the observations.
Composing the forward-kernel form the other way produces a scalar that puts
the stationary density on the *last* state instead of the first; see
:func:`fuh_scalar_chain`.

Everything here works in linear space and is meant for short sequences and
oracle checks.  Long sequences go through :mod:`ifshmm.filtering`.
"""
from __future__ import annotations

import numpy as np

from .exceptions import ChainUnderflowError, EnumerationBudgetError, ModelError
from .model import Model, as_observations

ENUMERATION_BUDGET = 10 ** 7


def _check_h(h, model):
    h = np.asarray(h, dtype=float)
    if h.shape != (model.n_states,):
        raise ModelError(f"grid function has shape {h.shape}, expected ({model.n_states},)")
    return h


def _density_column(model, xi_j, xi_prev):
    """``f(xi_j | ., xi_prev)`` over the grid; ``xi_prev=None`` gives the initial density."""
    if xi_prev is None:
        return model.emission_table([xi_j])[0]
    return model.emission_table([xi_prev, xi_j])[1]


def apply_fuh_operator(h, xi_j, xi_prev, model: Model, density=None) -> np.ndarray:
    """Forward-kernel operator: integrates over the second kernel argument.

    ``density`` overrides the emission column (used to plug in pseudo
    emissions such as the constant 1).
    """
    h = _check_h(h, model)
    f = _density_column(model, xi_j, xi_prev) if density is None else np.asarray(density, float)
    return model.P @ (f * h * model.grid.weights)


def apply_corrected_operator(h, xi_j, xi_prev, model: Model, density=None) -> np.ndarray:
    """Corrected operator: integrates over the first kernel argument.

    With ``h = M_{n-1}`` the result is ``M_n(x) = p(X_{n+1}=x, xi_0..xi_n)``.
    """
    h = _check_h(h, model)
    f = _density_column(model, xi_j, xi_prev) if density is None else np.asarray(density, float)
    return model.P.T @ (f * h * model.grid.weights)


def corrected_chain(model: Model, obs) -> np.ndarray:
    """Unnormalized ``M_n`` over ``x_{n+1}``, starting from ``pi``.

    Raises :class:`ChainUnderflowError` when every entry underflows to 0.
    """
    xi = as_observations(obs).obs
    table = model.emission_table(xi)
    w = model.grid.weights
    h = model.pi.copy()
    for j in range(xi.size):
        h = model.P.T @ (table[j] * h * w)
        if not np.any(h):
            if np.any(table[j]):
                raise ChainUnderflowError(
                    f"chain too long for linear-space evaluation (underflow at step {j})")
            break
    return h


def joint_density_via_composition(model: Model, obs) -> float:
    """``p(xi_0..xi_n)`` as the integral of the corrected chain over ``x_{n+1}``."""
    return model.grid.integrate(corrected_chain(model, obs))


def fuh_scalar_chain(model: Model, obs) -> float:
    """Sum over all paths of ``pi(x_n) prod_{j>=1} p(x_{j-1}, x_j) f(xi_j|x_j) . f(xi_0|x_0)``.

    This is what the forward-kernel composition evaluates to: the stationary
    density sits on ``x_n`` instead of ``x_0``.  It agrees with the joint
    density for ``n = 0`` and for symmetric kernels with uniform ``pi``, and
    differs otherwise.  Accumulated left to right over ``x_0, x_1, ...``.
    """
    xi = as_observations(obs).obs
    table = model.emission_table(xi)
    w = model.grid.weights
    acc = table[0] * w
    for j in range(1, xi.size):
        acc = (acc @ model.P) * table[j] * w
    return float(np.dot(acc, model.pi))


def joint_density_bruteforce(model: Model, obs, budget: int = ENUMERATION_BUDGET,
                             chunk: int = 1 << 18) -> float:
    """Exact joint density by enumerating every hidden path.

    ``sum_{x_0..x_n} pi(x_0) w(x_0) f(xi_0|x_0) prod_j p(x_{j-1},x_j) w(x_j) f(xi_j|x_j,xi_{j-1})``
    """
    xi = as_observations(obs).obs
    K = model.n_states
    n_paths = K ** xi.size
    if n_paths > budget:
        raise EnumerationBudgetError(
            f"{K}^{xi.size} = {n_paths} paths exceeds the enumeration budget {budget}")
    table = model.emission_table(xi)
    w = model.grid.weights
    shape = (K,) * xi.size
    total = 0.0
    for start in range(0, n_paths, chunk):
        paths = np.unravel_index(np.arange(start, min(start + chunk, n_paths)), shape)
        term = model.pi[paths[0]] * w[paths[0]] * table[0, paths[0]]
        for j in range(1, xi.size):
            term = term * model.P[paths[j - 1], paths[j]] * w[paths[j]] * table[j, paths[j]]
        total += float(term.sum())
    return total
