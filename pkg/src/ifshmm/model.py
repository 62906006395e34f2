"""Parametric hidden Markov models with one-step observation feedback.

The hidden chain lives on a finite grid ``x_1 < ... < x_K`` carrying
quadrature weights ``w_i`` for the reference measure ``m``.  All kernels are
stored as densities against those weights:

* ``P[i, j] = p(x_i, x_j)`` with ``sum_j P[i, j] * w[j] == 1``,
* ``pi[i]`` with ``sum_i pi[i] * w[i] == 1`` and ``sum_i pi[i] w[i] P[i, j] == pi[j]``.

For a categorical chain every weight is 1 and these reduce to the usual
row-stochastic matrix and probability vector.

Observations follow ``xi_t | X_t, xi_{t-1} ~ f(. | X_t, xi_{t-1})``; ``xi_0``
uses the initial density ``f(. | X_0)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .exceptions import ModelError, ReducibleChainError

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

_LOGIT_RE = re.compile(r"^logit\[(\d+),\s*(\d+)\]$")


# --------------------------------------------------------------------------
# State grid and parameters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StateGrid:
    """Grid points and quadrature weights of the hidden state space."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if points.size < 1:
            raise ModelError("state grid needs at least one point")
        if weights.shape != points.shape:
            raise ModelError(
                f"grid weights have length {weights.size}, expected {points.size}")
        if not np.all(np.isfinite(points)) or np.any(np.diff(points) <= 0):
            raise ModelError("grid points must be finite and strictly increasing")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise ModelError("grid weights must be finite and strictly positive")
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def categorical(cls, n_states: int, points: Sequence[float] | None = None) -> "StateGrid":
        """Finite state space with counting measure."""
        if points is None:
            points = np.arange(n_states, dtype=float)
        return cls(np.asarray(points, dtype=float), np.ones(n_states))

    @classmethod
    def trapezoid(cls, points: Sequence[float]) -> "StateGrid":
        """Trapezoid-rule weights for a discretized continuous state space."""
        points = np.asarray(points, dtype=float)
        if points.size < 2:
            raise ModelError("trapezoid grid needs at least two points")
        gaps = np.diff(points)
        weights = np.zeros_like(points)
        weights[:-1] += gaps / 2
        weights[1:] += gaps / 2
        return cls(points, weights)

    def __len__(self):
        return self.points.size

    def integrate(self, h: np.ndarray) -> float:
        """Integral of a grid function against ``m``."""
        return float(np.dot(h, self.weights))


@dataclass(frozen=True)
class ParamVector:
    """Named, ordered parameter vector."""

    names: tuple
    values: np.ndarray

    def __post_init__(self):
        names = tuple(self.names)
        values = np.array(self.values, dtype=float).ravel()
        if len(set(names)) != len(names):
            raise ModelError(f"duplicate parameter names in {names}")
        if values.size != len(names):
            raise ModelError(
                f"{len(names)} parameter names but {values.size} values")
        values.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.names)

    def __getitem__(self, name):
        return float(self.values[self.index(name)])

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None

    def with_values(self, values) -> "ParamVector":
        return ParamVector(self.names, values)

    def replace(self, **updates) -> "ParamVector":
        values = self.values.copy()
        for name, value in updates.items():
            values[self.index(name)] = value
        return ParamVector(self.names, values)

    def reordered(self, names: Sequence[str]) -> "ParamVector":
        """Same parameters listed in a different order."""
        if sorted(names) != sorted(self.names):
            raise ModelError(f"{names} is not a permutation of {self.names}")
        return ParamVector(tuple(names), [self[n] for n in names])

    def as_dict(self) -> dict:
        return dict(zip(self.names, map(float, self.values)))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


# --------------------------------------------------------------------------
# Emission kernels
# --------------------------------------------------------------------------

class Emission:
    """Base class for emission kernels ``f(xi_t | x_t, xi_{t-1})``.

    Subclasses implement :meth:`density_table`; differentiable families also
    implement :meth:`dlog_table` for each name in :attr:`param_names`.
    """

    family = "abstract"
    param_names: tuple = ()

    def density_table(self, obs: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Densities for a whole sequence, shape ``(len(obs), len(points))``.

        Row 0 holds the initial density ``f(xi_0 | x)``; row ``t`` holds
        ``f(xi_t | x, xi_{t-1})``.
        """
        raise NotImplementedError

    def dlog_table(self, name: str, obs: np.ndarray, points: np.ndarray) -> np.ndarray:
        """``d/d name`` of ``log f`` on the same layout as :meth:`density_table`."""
        raise ModelError(f"emission family {self.family!r} has no parameter {name!r}")

    def params(self) -> dict:
        return {}

    def with_params(self, **params) -> "Emission":
        if params:
            raise ModelError(
                f"emission family {self.family!r} has no parameters {sorted(params)}")
        return self

    def sample(self, rng: np.random.Generator, point: float, xi_prev: float | None) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianMean(Emission):
    """Unit-variance Gaussian with mean ``x + mu``."""

    mu: float = 0.0

    family = "gaussian_mean"
    param_names = ("mu",)

    def _means(self, obs, points):
        return points[None, :] + self.mu

    def density_table(self, obs, points):
        obs = np.asarray(obs, dtype=float)
        resid = obs[:, None] - self._means(obs, points)
        return np.exp(-0.5 * resid ** 2 - LOG_SQRT_2PI)

    def dlog_table(self, name, obs, points):
        obs = np.asarray(obs, dtype=float)
        resid = obs[:, None] - self._means(obs, points)
        if name == "mu":
            return resid
        return super().dlog_table(name, obs, points)

    def params(self):
        return {"mu": float(self.mu)}

    def with_params(self, **params):
        unknown = set(params) - set(self.param_names)
        if unknown:
            raise ModelError(f"emission family {self.family!r} has no parameters {sorted(unknown)}")
        return type(self)(**{**self.params(), **params})

    def sample(self, rng, point, xi_prev):
        return point + self.mu + rng.standard_normal()


@dataclass(frozen=True)
class GaussianAR(GaussianMean):
    """Unit-variance Gaussian with mean ``x + mu + rho * xi_{t-1}``.

    The initial observation has no predecessor and uses mean ``x + mu``.
    """

    rho: float = 0.0

    family = "gaussian_ar"
    param_names = ("mu", "rho")

    def _means(self, obs, points):
        prev = np.concatenate(([0.0], obs[:-1]))
        return points[None, :] + self.mu + self.rho * prev[:, None]

    def dlog_table(self, name, obs, points):
        if name == "rho":
            obs = np.asarray(obs, dtype=float)
            resid = obs[:, None] - self._means(obs, points)
            prev = np.concatenate(([0.0], obs[:-1]))
            return resid * prev[:, None]
        return super().dlog_table(name, obs, points)

    def params(self):
        return {"mu": float(self.mu), "rho": float(self.rho)}

    def sample(self, rng, point, xi_prev):
        lag = 0.0 if xi_prev is None else self.rho * xi_prev
        return point + self.mu + lag + rng.standard_normal()


@dataclass(frozen=True)
class TableEmission(Emission):
    """Lookup table over a finite observation alphabet.

    ``density[k, i]`` is the probability of symbol ``symbols[k]`` in state
    ``i``; observations outside the alphabet get density 0.  There is no
    dependence on the previous observation and no free parameters.
    """

    symbols: tuple = ()
    density: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    family = "table"

    def __post_init__(self):
        symbols = tuple(float(s) for s in self.symbols)
        density = np.array(self.density, dtype=float)
        if density.ndim != 2 or density.shape[0] != len(symbols):
            raise ModelError("emission table needs one row of state densities per symbol")
        if np.any(density < 0) or not np.all(np.isfinite(density)):
            raise ModelError("emission table entries must be finite and nonnegative")
        density.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "density", density)

    def density_table(self, obs, points):
        if self.density.shape[1] != len(points):
            raise ModelError(
                f"emission table has {self.density.shape[1]} states, grid has {len(points)}")
        lookup = {s: k for k, s in enumerate(self.symbols)}
        out = np.zeros((len(obs), len(points)))
        for t, xi in enumerate(obs):
            k = lookup.get(float(xi))
            if k is not None:
                out[t] = self.density[k]
        return out

    def params(self):
        return {"symbols": list(self.symbols), "density": self.density.tolist()}

    def sample(self, rng, point, xi_prev):
        raise NotImplementedError("use TableEmission.sample_state")

    def sample_state(self, rng, state):
        probs = self.density[:, state]
        total = probs.sum()
        if total <= 0:
            raise ModelError(f"state {state} emits no symbol")
        return self.symbols[int(np.searchsorted(np.cumsum(probs / total), rng.random(), side="right"))]


EMISSION_FAMILIES = {
    "gaussian_mean": GaussianMean,
    "gaussian_ar": GaussianAR,
    "table": TableEmission,
}


# --------------------------------------------------------------------------
# Transition kernels and stationary law
# --------------------------------------------------------------------------

def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax (probability masses, not densities)."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def check_transition(P: np.ndarray, grid: StateGrid, tol: float = 1e-12) -> None:
    """Raise unless ``P`` is a transition density against the grid weights."""
    K = len(grid)
    if P.shape != (K, K):
        raise ModelError(f"transition matrix has shape {P.shape}, expected {(K, K)}")
    if not np.all(np.isfinite(P)) or np.any(P < 0):
        raise ModelError("transition entries must be finite and nonnegative")
    row_mass = P @ grid.weights
    bad = np.flatnonzero(np.abs(row_mass - 1.0) > tol)
    if bad.size:
        raise ModelError(
            f"non-stochastic rows {bad.tolist()}: weighted sums {row_mass[bad].tolist()}")


def is_irreducible(P: np.ndarray) -> bool:
    n_comp, _ = connected_components(P > 0, directed=True, connection="strong")
    return n_comp == 1


def stationary_distribution(P: np.ndarray, grid: StateGrid) -> np.ndarray:
    """Stationary density of an irreducible transition kernel.

    Solves ``(K^T - I) q = 0`` for the probability masses ``q`` with the last
    equation replaced by ``sum(q) = 1``, where ``K = P * w`` is the mass
    matrix.  Returns the density ``q / w``.

    Raises
    ------
    ReducibleChainError
        If the chain is reducible or the constrained system is singular.
    """
    P = np.asarray(P, dtype=float)
    check_transition(P, grid)
    if not is_irreducible(P):
        raise ReducibleChainError("reducible chain: no unique stationary distribution")
    K = P * grid.weights[None, :]
    n = K.shape[0]
    A = K.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    if np.linalg.cond(A) > 1e12:
        raise ReducibleChainError("reducible chain: stationary system is singular")
    q = np.linalg.solve(A, b)
    q = np.clip(q, 0.0, None)
    q /= q.sum()
    return q / grid.weights


# --------------------------------------------------------------------------
# Model family and model
# --------------------------------------------------------------------------

def _parse_logit(name):
    m = _LOGIT_RE.match(name)
    return (int(m.group(1)), int(m.group(2))) if m else None


@dataclass(frozen=True)
class ModelFamily:
    """A parametric family: fixed structure plus a declared free-parameter layout.

    Exactly one of ``logits`` and ``matrix`` is given.  ``layout`` lists the
    free parameter names, drawn from ``logit[i,j]`` (requires ``logits``) and
    the emission's parameter names.  Values not in the layout stay at the
    base values stored here.
    """

    grid: StateGrid
    emission: Emission
    logits: np.ndarray | None = None
    matrix: np.ndarray | None = None
    layout: tuple = ()

    def __post_init__(self):
        K = len(self.grid)
        if (self.logits is None) == (self.matrix is None):
            raise ModelError("give exactly one of transition logits or transition matrix")
        for attr in ("logits", "matrix"):
            arr = getattr(self, attr)
            if arr is not None:
                arr = np.array(arr, dtype=float)
                if arr.shape != (K, K):
                    raise ModelError(
                        f"transition {attr} has shape {arr.shape}, expected {(K, K)}")
                if not np.all(np.isfinite(arr)):
                    raise ModelError(f"transition {attr} must be finite")
                arr.setflags(write=False)
                object.__setattr__(self, attr, arr)
        layout = tuple(self.layout)
        if len(set(layout)) != len(layout):
            raise ModelError(f"duplicate names in parameter layout {layout}")
        for name in layout:
            ij = _parse_logit(name)
            if ij is not None:
                if self.logits is None:
                    raise ModelError(f"{name} needs transition logits, not a fixed matrix")
                if max(ij) >= K:
                    raise ModelError(f"{name} out of range for {K} states")
            elif name not in self.emission.param_names:
                raise ModelError(
                    f"unknown parameter {name!r} for emission family {self.emission.family!r}")
        object.__setattr__(self, "layout", layout)

    @property
    def n_states(self) -> int:
        return len(self.grid)

    def theta0(self) -> ParamVector:
        """Parameter vector at the family's base values."""
        values = []
        emission_params = self.emission.params()
        for name in self.layout:
            ij = _parse_logit(name)
            values.append(self.logits[ij] if ij is not None else emission_params[name])
        return ParamVector(self.layout, values)

    def _coerce(self, theta) -> ParamVector:
        if theta is None:
            return self.theta0()
        if not isinstance(theta, ParamVector):
            theta = ParamVector(self.layout, theta)
        if sorted(theta.names) != sorted(self.layout):
            raise ModelError(f"parameters {theta.names} do not match layout {self.layout}")
        if not theta.is_finite():
            raise ModelError(f"non-finite parameter values {theta.as_dict()}")
        return theta

    def transition_matrix(self, theta=None) -> np.ndarray:
        theta = self._coerce(theta)
        if self.matrix is not None:
            return self.matrix.copy()
        logits = self.logits.copy()
        for name, value in zip(theta.names, theta.values):
            ij = _parse_logit(name)
            if ij is not None:
                logits[ij] = value
        return softmax_rows(logits) / self.grid.weights[None, :]

    def transition_derivatives(self, theta=None) -> np.ndarray:
        """``d P / d theta_k`` for every component, shape ``(d, K, K)``."""
        theta = self._coerce(theta)
        K = self.n_states
        out = np.zeros((len(theta), K, K))
        if self.matrix is not None:
            return out
        masses = self.transition_matrix(theta) * self.grid.weights[None, :]
        for k, name in enumerate(theta.names):
            ij = _parse_logit(name)
            if ij is None:
                continue
            i, j = ij
            row = -masses[i] * masses[i, j]
            row[j] += masses[i, j]
            out[k, i] = row / self.grid.weights
        return out

    def emission_at(self, theta=None) -> Emission:
        theta = self._coerce(theta)
        updates = {n: v for n, v in theta.as_dict().items() if _parse_logit(n) is None}
        return self.emission.with_params(**updates)

    def affects_transition(self, name: str) -> bool:
        return _parse_logit(name) is not None

    def build(self, theta=None) -> "Model":
        theta = self._coerce(theta)
        P = self.transition_matrix(theta)
        check_transition(P, self.grid)
        pi = stationary_distribution(P, self.grid)
        return Model(family=self, theta=theta, P=P, pi=pi, emission=self.emission_at(theta))

    # -- config round trip -------------------------------------------------

    @classmethod
    def from_config(cls, config: Mapping) -> "ModelFamily":
        try:
            grid_cfg = config["grid"]
            points = grid_cfg["points"]
            weights = grid_cfg.get("weights")
            if weights is None:
                weights = np.ones(len(points))
            grid = StateGrid(points, weights)
            trans = config["transition"]
            em_cfg = config["emission"]
            family = em_cfg["family"]
        except KeyError as exc:
            raise ModelError(f"model config is missing key {exc.args[0]!r}") from None
        except TypeError as exc:
            raise ModelError(f"malformed model config: {exc}") from None
        if family not in EMISSION_FAMILIES:
            raise ModelError(
                f"emission.family {family!r} not one of {sorted(EMISSION_FAMILIES)}")
        params = dict(em_cfg.get("params", {}))
        try:
            emission = EMISSION_FAMILIES[family](**params)
        except TypeError as exc:
            raise ModelError(f"emission.params: {exc}") from None
        layout = tuple(config.get("theta", {}).get("layout", ()))
        return cls(grid=grid, emission=emission, logits=trans.get("logits"),
                   matrix=trans.get("matrix"), layout=layout)

    def to_config(self, theta=None) -> dict:
        theta = self._coerce(theta)
        config = {"grid": {"points": self.grid.points.tolist(),
                           "weights": self.grid.weights.tolist()}}
        if self.matrix is not None:
            config["transition"] = {"matrix": self.matrix.tolist()}
        else:
            logits = self.logits.copy()
            for name, value in zip(theta.names, theta.values):
                ij = _parse_logit(name)
                if ij is not None:
                    logits[ij] = value
            config["transition"] = {"logits": logits.tolist()}
        config["emission"] = {"family": self.emission.family,
                              "params": self.emission_at(theta).params()}
        config["theta"] = {"layout": list(self.layout)}
        return config


@dataclass(frozen=True)
class Model:
    """A fully specified model: one member of a :class:`ModelFamily`.

    Construct through :func:`build_model` or :meth:`ModelFamily.build`.
    """

    family: ModelFamily
    theta: ParamVector
    P: np.ndarray
    pi: np.ndarray
    emission: Emission

    @property
    def grid(self) -> StateGrid:
        return self.family.grid

    @property
    def n_states(self) -> int:
        return len(self.family.grid)

    def emission_table(self, obs) -> np.ndarray:
        return self.emission.density_table(np.asarray(obs, dtype=float), self.grid.points)

    def at(self, theta) -> "Model":
        """Another member of the same family."""
        return self.family.build(theta)


def build_model(config) -> Model:
    """Validated :class:`Model` from a config mapping or a :class:`ModelFamily`."""
    family = config if isinstance(config, ModelFamily) else ModelFamily.from_config(config)
    return family.build()


# --------------------------------------------------------------------------
# Observations and simulation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ObservationSequence:
    """Observations ``xi_0..xi_n``, optionally with the hidden path that made them."""

    obs: np.ndarray
    hidden: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        obs = np.array(self.obs, dtype=float).ravel()
        if obs.size == 0:
            raise ModelError("observation sequence must be nonempty")
        if not np.all(np.isfinite(obs)):
            raise ModelError("observations must be finite")
        obs.setflags(write=False)
        object.__setattr__(self, "obs", obs)
        if self.hidden is not None:
            hidden = np.array(self.hidden, dtype=int).ravel()
            if hidden.shape != obs.shape:
                raise ModelError("hidden path and observations differ in length")
            hidden.setflags(write=False)
            object.__setattr__(self, "hidden", hidden)

    def __len__(self):
        return self.obs.size

    def prefix(self, length: int) -> "ObservationSequence":
        hidden = None if self.hidden is None else self.hidden[:length]
        return ObservationSequence(self.obs[:length], hidden, self.seed)

    def check_states(self, n_states: int) -> None:
        if self.hidden is not None and (self.hidden.min() < 0 or self.hidden.max() >= n_states):
            raise ModelError(f"hidden state index out of range for {n_states} states")


def as_observations(obs) -> ObservationSequence:
    return obs if isinstance(obs, ObservationSequence) else ObservationSequence(obs)


def simulate(model: Model, n: int, seed: int) -> ObservationSequence:
    """Draw ``X_0..X_n`` and ``xi_0..xi_n`` from ``model``.

    ``X_0`` is drawn from the stationary law.  The result is a pure function
    of ``(model, n, seed)``.
    """
    if n < 0:
        raise ModelError("simulation length n must be >= 0")
    rng = np.random.default_rng(seed)
    w = model.grid.weights
    points = model.grid.points
    init_cdf = np.cumsum(model.pi * w)
    trans_cdf = np.cumsum(model.P * w[None, :], axis=1)
    K = model.n_states

    def draw(cdf):
        return min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), K - 1)

    hidden = np.empty(n + 1, dtype=int)
    obs = np.empty(n + 1)
    table = isinstance(model.emission, TableEmission)
    xi_prev = None
    state = draw(init_cdf)
    for t in range(n + 1):
        if t > 0:
            state = draw(trans_cdf[state])
        hidden[t] = state
        if table:
            obs[t] = model.emission.sample_state(rng, state)
        else:
            obs[t] = model.emission.sample(rng, points[state], xi_prev)
        xi_prev = obs[t]
    return ObservationSequence(obs, hidden, seed)
