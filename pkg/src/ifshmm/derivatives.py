"""Score and observed information through the tangent filter recursion.

The parameter enters every step of the filter recursion, so the score cannot
be written as a sum over consecutive filter pairs alone.  Instead the filter
is propagated jointly with its parameter derivative.  For one step with
``g = f * F * w`` and ``u = P^T g``::

    du_k = (dP_k)^T g + P^T ((df_k) * F * w + f * dF_k * w)
    c    = sum(u * w),      dc_k = sum(du_k * w)
    F'   = u / c,           dF'_k = (du_k - (dc_k / c) u) / c
    dlog_lik_k += dc_k / c

The first step uses ``F = pi`` and ``dF = d pi``, the latter by central
differences of the stationary solve.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import ImpossibleObservation, ModelError
from .filtering import FilterState, loglik
from .model import Model, ParamVector, as_observations, stationary_distribution

log = logging.getLogger(__name__)

PI_FD_STEP = 1e-6
FD_REL_STEP = 1e-5
FULL_FD_REL_STEP = 1e-2


@dataclass(frozen=True)
class TangentState:
    base: FilterState
    dfilter: np.ndarray
    dlog_lik: np.ndarray


@dataclass(frozen=True)
class InformationMatrix:
    """Observed information ``-d^2 log p / d theta^2``."""

    matrix: np.ndarray
    names: tuple
    method: str
    asymmetry: float = 0.0

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())

    def is_positive_definite(self) -> bool:
        return self.min_eigenvalue() > 0.0


def _resolve(model: Model, theta) -> Model:
    if theta is None:
        return model
    return model.at(theta)


def stationary_derivative(model: Model, step: float = PI_FD_STEP) -> np.ndarray:
    """``d pi / d theta`` by central differences, shape ``(d, K)``."""
    family, theta = model.family, model.theta
    out = np.zeros((len(theta), model.n_states))
    for k, name in enumerate(theta.names):
        if not family.affects_transition(name):
            continue
        plus = theta.replace(**{name: theta[name] + step})
        minus = theta.replace(**{name: theta[name] - step})
        pi_plus = stationary_distribution(family.transition_matrix(plus), family.grid)
        pi_minus = stationary_distribution(family.transition_matrix(minus), family.grid)
        out[k] = (pi_plus - pi_minus) / (2 * step)
    return out


class _Sensitivities:
    """Per-sequence derivative tables of a model, in layout order."""

    def __init__(self, model: Model, xi: np.ndarray):
        self.names = model.theta.names
        self.dP = model.family.transition_derivatives(model.theta)
        self.table = model.emission_table(xi)
        points = model.grid.points
        dlog = np.zeros((len(self.names),) + self.table.shape)
        for k, name in enumerate(self.names):
            if name in model.emission.param_names:
                dlog[k] = model.emission.dlog_table(name, xi, points)
        # (t, d, K): derivative of the emission density itself
        self.dtable = np.transpose(dlog * self.table[None], (1, 0, 2))


def _tangent_update(F, dF, f, df, model, dP, step, log_lik, dlog_lik):
    w = model.grid.weights
    g = f * F * w
    u = model.P.T @ g
    du = np.einsum("kyx,y->kx", dP, g) + (df * (F * w) + dF * (f * w)) @ model.P
    c = float(np.dot(u, w))
    if not c > 0.0:
        raise ImpossibleObservation(step)
    dc = du @ w
    new_F = u / c
    new_dF = (du - np.outer(dc / c, u)) / c
    log_c = float(np.log(c))
    base = FilterState(new_F, log_lik + log_c, step, log_c)
    return TangentState(base, new_dF, dlog_lik + dc / c)


def init_tangent(model: Model, xi_0: float) -> TangentState:
    """Tangent state after the initial observation."""
    sens = _Sensitivities(model, np.array([xi_0], dtype=float))
    dpi = stationary_derivative(model)
    return _tangent_update(model.pi, dpi, sens.table[0], sens.dtable[0], model, sens.dP,
                           0, 0.0, np.zeros(len(sens.names)))


def tangent_filter_step(tstate: TangentState, xi_j: float, xi_prev: float,
                        model: Model) -> TangentState:
    """Propagate filter, filter derivative and score one observation forward."""
    sens = _Sensitivities(model, np.array([xi_prev, xi_j], dtype=float))
    return _tangent_update(tstate.base.filter, tstate.dfilter, sens.table[1], sens.dtable[1],
                           model, sens.dP, tstate.base.step + 1, tstate.base.log_lik,
                           tstate.dlog_lik)


def tangent_run(model: Model, obs, theta=None, callback=None) -> TangentState:
    """Run the tangent recursion over a whole sequence.

    ``callback(t, tstate)`` is invoked after every step when given.
    """
    model = _resolve(model, theta)
    xi = as_observations(obs).obs
    sens = _Sensitivities(model, xi)
    d = len(sens.names)
    F, dF = model.pi, stationary_derivative(model)
    state = None
    log_lik, dlog_lik = 0.0, np.zeros(d)
    for t in range(xi.size):
        state = _tangent_update(F, dF, sens.table[t], sens.dtable[t], model, sens.dP,
                                t, log_lik, dlog_lik)
        if callback is not None:
            callback(t, state)
        F, dF = state.base.filter, state.dfilter
        log_lik, dlog_lik = state.base.log_lik, state.dlog_lik
    return state


def loglik_and_score(model: Model, obs, theta=None):
    state = tangent_run(model, obs, theta)
    return state.base.log_lik, state.dlog_lik


def score(model: Model, obs, theta=None) -> np.ndarray:
    """Gradient of ``log p(xi_0..xi_n)`` in the layout order of ``theta``.

    ``theta`` defaults to ``model.theta``; a plain array is read in the
    family's layout order.
    """
    return tangent_run(model, obs, theta).dlog_lik


def _steps(theta: ParamVector, rel):
    return rel * np.maximum(1.0, np.abs(theta.values))


def fd_score(model: Model, obs, theta=None, rel_step: float = FD_REL_STEP) -> np.ndarray:
    """Central finite differences of :func:`loglik`, an independent check on :func:`score`."""
    model = _resolve(model, theta)
    theta = model.theta
    out = np.empty(len(theta))
    for k, h in enumerate(_steps(theta, rel_step)):
        name = theta.names[k]
        up = loglik(model.at(theta.replace(**{name: theta[name] + h})), obs)
        down = loglik(model.at(theta.replace(**{name: theta[name] - h})), obs)
        out[k] = (up - down) / (2 * h)
    return out


def _second_differences(model, obs, theta, steps):
    d = len(theta)
    base = theta.values

    def ll(delta):
        return loglik(model.at(theta.with_values(base + delta)), obs)

    D = np.empty((d, d))
    f0 = ll(np.zeros(d))
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = steps[i]
        D[i, i] = (ll(ei) - 2 * f0 + ll(-ei)) / steps[i] ** 2
        for j in range(i):
            ej = np.zeros(d)
            ej[j] = steps[j]
            val = ll(ei + ej) - ll(ei - ej) - ll(-ei + ej) + ll(-ei - ej)
            D[i, j] = D[j, i] = val / (4 * steps[i] * steps[j])
    return D


def observed_information(model: Model, obs, theta=None, method: str = "analytic-fd",
                         rel_step: float | None = None) -> InformationMatrix:
    """Observed information at ``theta``.

    ``analytic-fd`` differentiates the analytic score by central differences
    (relative step 1e-5) and symmetrizes.  ``full-fd`` uses second
    differences of the log-likelihood at relative steps 1e-2 and 5e-3,
    Richardson-combined to cancel the O(h^2) error; steps small enough to
    skip the extrapolation drown in round-off of the O(n) log-likelihood.
    """
    model = _resolve(model, theta)
    theta = model.theta
    d = len(theta)
    H = np.empty((d, d))
    if method == "analytic-fd":
        steps = _steps(theta, FD_REL_STEP if rel_step is None else rel_step)
        for j, h in enumerate(steps):
            name = theta.names[j]
            s_up = score(model.at(theta.replace(**{name: theta[name] + h})), obs)
            s_down = score(model.at(theta.replace(**{name: theta[name] - h})), obs)
            H[:, j] = -(s_up - s_down) / (2 * h)
    elif method == "full-fd":
        steps = _steps(theta, FULL_FD_REL_STEP if rel_step is None else rel_step)
        coarse = _second_differences(model, obs, theta, steps)
        fine = _second_differences(model, obs, theta, steps / 2)
        H = -(4 * fine - coarse) / 3
    else:
        raise ModelError(f"unknown information method {method!r}")
    scale = max(np.abs(H).max(), 1e-300)
    asymmetry = float(np.abs(H - H.T).max() / scale)
    log.debug("observed information asymmetry before symmetrizing: %.3g", asymmetry)
    if asymmetry > 1e-4:
        log.warning("observed information is asymmetric before symmetrizing (%.3g)", asymmetry)
    return InformationMatrix((H + H.T) / 2, theta.names, method, asymmetry)
