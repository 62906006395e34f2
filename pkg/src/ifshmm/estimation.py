"""Maximum-likelihood fitting by BFGS ascent on the analytic score."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .derivatives import InformationMatrix, loglik_and_score, observed_information
from .exceptions import ModelError, NumericalError
from .filtering import loglik
from .model import ModelFamily, ParamVector, as_observations

log = logging.getLogger(__name__)


@dataclass
class FitResult:
    theta_hat: ParamVector
    log_lik_hat: float
    info: InformationMatrix | None
    std_errors: np.ndarray
    converged: bool
    iterations: int
    trace: list = field(default_factory=list)
    message: str = ""

    def summary(self) -> dict:
        return {
            "theta_hat": self.theta_hat.as_dict(),
            "log_lik": self.log_lik_hat,
            "std_errors": dict(zip(self.theta_hat.names, map(float, self.std_errors))),
            "converged": self.converged,
            "iterations": self.iterations,
            "message": self.message,
        }


def _evaluate(family, obs, values, names):
    """Log-likelihood and score, with any evaluation failure mapped to ``-inf``."""
    try:
        model = family.build(ParamVector(names, values))
        return loglik_and_score(model, obs)
    except (NumericalError, ModelError, FloatingPointError):
        return -np.inf, None


def mle_fit(family: ModelFamily, obs, theta0=None, *, gtol: float = 1e-6,
            max_iter: int = 500, c1: float = 1e-4, shrink: float = 0.5,
            max_backtracks: int = 60, information: bool = True) -> FitResult:
    """Maximize the log-likelihood over the family's free parameters.

    BFGS on the inverse negative Hessian with a backtracking line search
    under the sufficient-increase condition.  Trial points whose evaluation
    fails (impossible observation, degenerate chain) count as ``-inf`` and
    are backtracked from.  Stops when ``max|score| <= gtol``.

    ``theta0`` may order its components differently from the family layout;
    the result follows ``theta0``'s order.
    """
    obs = as_observations(obs)
    if theta0 is None:
        theta0 = family.theta0()
    elif not isinstance(theta0, ParamVector):
        theta0 = ParamVector(family.layout, theta0)
    if not theta0.is_finite():
        raise ModelError(f"non-finite starting point {theta0.as_dict()}")
    names = theta0.names
    x = theta0.values.copy()
    f, g = _evaluate(family, obs, x, names)
    if not np.isfinite(f):
        raise NumericalError("log-likelihood is not finite at the starting point")

    d = x.size
    H = np.eye(d) / max(1.0, float(np.abs(g).max()))
    trace = [_trace_row(0, names, x, f, g)]
    converged = False
    message = "iteration limit reached"
    it = 0
    while True:
        if np.abs(g).max() <= gtol:
            converged, message = True, "score below tolerance"
            break
        if it >= max_iter:
            break
        it += 1
        direction = H @ g
        slope = float(g @ direction)
        if slope <= 0:
            H = np.eye(d) / max(1.0, float(np.abs(g).max()))
            direction = H @ g
            slope = float(g @ direction)
        alpha = 1.0
        for _ in range(max_backtracks):
            x_new = x + alpha * direction
            f_new, g_new = _evaluate(family, obs, x_new, names)
            if np.isfinite(f_new) and f_new >= f + c1 * alpha * slope:
                break
            alpha *= shrink
        else:
            message = "line search failed"
            break
        s = x_new - x
        y = g - g_new
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if it == 1:
                H = np.eye(d) * sy / float(y @ y)
            rho = 1.0 / sy
            V = np.eye(d) - rho * np.outer(s, y)
            H = V @ H @ V.T + rho * np.outer(s, s)
        x, f, g = x_new, f_new, g_new
        trace.append(_trace_row(it, names, x, f, g))
        log.debug("iter %d  loglik %.12g  |score| %.3g  step %.3g", it, f, np.abs(g).max(), alpha)

    theta_hat = ParamVector(names, x)
    info = None
    std_errors = np.full(d, np.nan)
    if information:
        model = family.build(theta_hat)
        info = observed_information(model, obs, theta_hat)
        if info.is_positive_definite():
            std_errors = np.sqrt(np.diag(np.linalg.inv(info.matrix)))
        elif converged:
            converged, message = False, "observed information is not positive definite"
    return FitResult(theta_hat, float(f), info, std_errors, converged, it, trace, message)


def _trace_row(it, names, x, f, g):
    row = {"iteration": it}
    row.update(zip(names, map(float, x)))
    row["log_lik"] = float(f)
    row["score_norm"] = float(np.abs(g).max())
    return row


def _profile_point(args):
    family, obs, theta = args
    try:
        return loglik(family.build(theta), obs)
    except (NumericalError, ModelError):
        return -np.inf


def profile_loglik(family: ModelFamily, obs, component: str, grid, theta_rest=None,
                   jobs: int = 1) -> list:
    """``(value, loglik)`` along one coordinate with the others held at ``theta_rest``.

    Points whose evaluation fails are reported with ``-inf``.
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise ModelError("profile grid is empty")
    obs = as_observations(obs)
    base = family.theta0() if theta_rest is None else theta_rest
    if not isinstance(base, ParamVector):
        base = ParamVector(family.layout, base)
    if component not in base.names:
        raise ModelError(f"unknown component {component!r}; have {base.names}")
    tasks = [(family, obs, base.replace(**{component: v})) for v in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(_profile_point, tasks))
    else:
        values = [_profile_point(t) for t in tasks]
    return list(zip(grid, values))
