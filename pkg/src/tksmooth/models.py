"""Nonlinear state-space models x_k = g_k(x_{k-1}) + w_k, z_k = h_k(x_k) + v_k.

Stage 1 has no predecessor: its process residual is x_1 - g0 with g0 a known
constant, so the ``g`` of the first stage is never called.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite

DEFAULT_DOF = 4.0


def spd_inverse(M, name="matrix"):
    """Inverse of an SPD matrix via Cholesky; raises NotPositiveDefinite."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {M.shape}")
    if not np.allclose(M, M.T, rtol=1e-12, atol=0):
        raise NotPositiveDefinite(f"{name} is not symmetric")
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(f"{name} is not positive definite") from None
    Linv = np.linalg.inv(L)
    return Linv.T @ Linv


class LinearMap:
    """x -> A x with constant Jacobian A."""

    def __init__(self, A):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))

    def __call__(self, x):
        return self.A @ x

    def jacobian(self, x):
        return self.A

    def __repr__(self):
        return f"LinearMap({self.A.tolist()})"

    @staticmethod
    def batched(maps, rows):
        A = np.zeros((len(maps), rows, maps[0].A.shape[1]))
        for k, mp in enumerate(maps):
            A[k, :mp.A.shape[0]] = mp.A
        return _BatchLinear(A)


class VdpEuler:
    """Explicit Euler step of the Van der Pol oscillator.

    x1' = x1 + x2 dt
    x2' = x2 + (mu (1 - x1^2) x2 - x1) dt
    """

    def __init__(self, mu, dt):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.mu = float(mu)
        self.dt = float(dt)

    def __call__(self, x):
        x1, x2 = x
        mu, dt = self.mu, self.dt
        return np.array([x1 + x2 * dt, x2 + (mu * (1.0 - x1 * x1) * x2 - x1) * dt])

    def jacobian(self, x):
        x1, x2 = x
        mu, dt = self.mu, self.dt
        return np.array([[1.0, dt],
                         [(-2.0 * mu * x1 * x2 - 1.0) * dt, 1.0 + mu * (1.0 - x1 * x1) * dt]])

    def __repr__(self):
        return f"VdpEuler(mu={self.mu}, dt={self.dt})"

    @staticmethod
    def batched(maps, rows):
        return _BatchVdp(np.array([mp.mu for mp in maps]), np.array([mp.dt for mp in maps]))


class _BatchLinear:
    def __init__(self, A):
        self.A = A

    def __call__(self, X):
        return np.einsum("kij,kj->ki", self.A, X)

    def jacobian(self, X):
        return self.A


class _BatchVdp:
    def __init__(self, mu, dt):
        self.mu, self.dt = mu, dt

    def __call__(self, X):
        x1, x2 = X[:, 0], X[:, 1]
        return np.stack([x1 + x2 * self.dt,
                         x2 + (self.mu * (1.0 - x1 * x1) * x2 - x1) * self.dt], axis=1)

    def jacobian(self, X):
        x1, x2 = X[:, 0], X[:, 1]
        J = np.empty((X.shape[0], 2, 2))
        J[:, 0, 0] = 1.0
        J[:, 0, 1] = self.dt
        J[:, 1, 0] = (-2.0 * self.mu * x1 * x2 - 1.0) * self.dt
        J[:, 1, 1] = 1.0 + self.mu * (1.0 - x1 * x1) * self.dt
        return J


class _BatchGeneric:
    """Stage-by-stage fallback; outputs zero-padded to ``rows``."""

    def __init__(self, funcs, jacs, rows):
        self.funcs, self.jacs, self.rows = funcs, jacs, rows

    def __call__(self, X):
        out = np.zeros((len(self.funcs), self.rows))
        for k, (f, x) in enumerate(zip(self.funcs, X)):
            y = np.atleast_1d(f(x))
            out[k, :y.size] = y
        return out

    def jacobian(self, X):
        out = np.zeros((len(self.jacs), self.rows, X.shape[1]))
        for k, (f, x) in enumerate(zip(self.jacs, X)):
            J = np.atleast_2d(f(x))
            out[k, :J.shape[0]] = J
        return out


def _batch(funcs, jacs, rows):
    kind = type(funcs[0])
    shared = all(type(f) is kind and getattr(j, "__self__", None) is f for f, j in zip(funcs, jacs))
    if shared and hasattr(kind, "batched"):
        return kind.batched(list(funcs), rows)
    return _BatchGeneric(list(funcs), list(jacs), rows)


@dataclass(frozen=True)
class StageModel:
    """One time step: process map, measurement map, covariances, data and dofs."""

    g: Callable
    g_jac: Callable
    Q: np.ndarray
    h: Callable
    h_jac: Callable
    R: np.ndarray
    z: np.ndarray
    s: float = DEFAULT_DOF
    r: float = DEFAULT_DOF
    index: int = 0
    Qinv: np.ndarray = field(init=False, repr=False)
    Rinv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        z = np.atleast_1d(np.asarray(self.z, dtype=float))
        if z.ndim != 1 or z.size < 1:
            raise DimensionMismatch("z must be a non-empty vector")
        if R.shape != (z.size, z.size):
            raise DimensionMismatch(f"R has shape {R.shape}, expected {(z.size, z.size)}")
        if self.s <= 0 or self.r <= 0:
            raise ValueError("degrees of freedom must be positive")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "Qinv", spd_inverse(Q, "Q"))
        object.__setattr__(self, "Rinv", spd_inverse(R, "R"))

    @property
    def n(self):
        return self.Q.shape[0]

    @property
    def m(self):
        return self.z.size

    def with_measurement(self, z):
        return StageModel(self.g, self.g_jac, self.Q, self.h, self.h_jac, self.R, z,
                          self.s, self.r, self.index)


def linear_stage(G, Q, H, R, z, s=DEFAULT_DOF, r=DEFAULT_DOF, index=0):
    """Stage with g(x) = G x and h(x) = H x."""
    g, h = LinearMap(G), LinearMap(H)
    return StageModel(g, g.jacobian, Q, h, h.jacobian, R, z, s, r, index)


def vdp_stage(mu, dt, Q, H, R, z, s=DEFAULT_DOF, r=DEFAULT_DOF, index=0):
    """Stage with an Euler-discretized Van der Pol drift and linear measurement."""
    g, h = VdpEuler(mu, dt), LinearMap(H)
    return StageModel(g, g.jacobian, Q, h, h.jacobian, R, z, s, r, index)


@dataclass(frozen=True)
class SequenceModel:
    stages: Sequence[StageModel]
    g0: np.ndarray

    def __post_init__(self):
        stages = tuple(self.stages)
        if not stages:
            raise DimensionMismatch("a sequence model needs at least one stage")
        g0 = np.atleast_1d(np.asarray(self.g0, dtype=float))
        n = g0.size
        for k, st in enumerate(stages):
            if st.n != n:
                raise DimensionMismatch(f"stage {k + 1} has state dimension {st.n}, expected {n}")
        object.__setattr__(self, "stages", stages)
        object.__setattr__(self, "g0", g0)

    @property
    def n(self):
        return self.g0.size

    @property
    def N(self):
        return len(self.stages)

    @cached_property
    def m(self):
        return np.array([st.m for st in self.stages])

    @cached_property
    def Qinv(self):
        return np.stack([st.Qinv for st in self.stages])

    @cached_property
    def Rinv(self):
        """(N, M, M) with M = max m(k); padding rows and columns are zero."""
        M = int(self.m.max())
        out = np.zeros((self.N, M, M))
        for k, st in enumerate(self.stages):
            out[k, :st.m, :st.m] = st.Rinv
        return out

    @cached_property
    def z(self):
        out = np.zeros((self.N, int(self.m.max())))
        for k, st in enumerate(self.stages):
            out[k, :st.m] = st.z
        return out

    @cached_property
    def s(self):
        return np.array([st.s for st in self.stages], dtype=float)

    @cached_property
    def r(self):
        return np.array([st.r for st in self.stages], dtype=float)

    @cached_property
    def process(self):
        """Batched g_k for stages 2..N, applied to x_1..x_{N-1}."""
        rest = self.stages[1:]
        if not rest:
            return None
        return _batch([st.g for st in rest], [st.g_jac for st in rest], self.n)

    @cached_property
    def measurement(self):
        """Batched h_k for all stages, zero-padded to max m(k)."""
        return _batch([st.h for st in self.stages], [st.h_jac for st in self.stages], int(self.m.max()))

    def with_measurements(self, zs):
        if len(zs) != self.N:
            raise DimensionMismatch(f"got {len(zs)} measurements for {self.N} stages")
        return SequenceModel([st.with_measurement(z) for st, z in zip(self.stages, zs)], self.g0)


@dataclass(frozen=True)
class StateTrajectory:
    """State sequence stored as an (N, n) array with time stamps."""

    states: np.ndarray
    times: np.ndarray = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.states, dtype=float))
        object.__setattr__(self, "states", x)
        t = np.arange(1, x.shape[0] + 1, dtype=float) if self.times is None else np.asarray(self.times, float)
        if t.shape != (x.shape[0],):
            raise DimensionMismatch("one time stamp per state is required")
        object.__setattr__(self, "times", t)

    @property
    def N(self):
        return self.states.shape[0]

    @property
    def n(self):
        return self.states.shape[1]


def as_states(model, x):
    """Coerce a trajectory, flat vector or (N, n) array to an (N, n) array."""
    if isinstance(x, StateTrajectory):
        x = x.states
    x = np.asarray(x, dtype=float)
    if x.size != model.N * model.n or x.ndim > 2 or (x.ndim == 2 and x.shape != (model.N, model.n)):
        raise DimensionMismatch(f"trajectory of shape {x.shape} does not match N={model.N}, n={model.n}")
    return x.reshape(model.N, model.n)


def residual_arrays(model, x):
    """Process residuals (N, n) and zero-padded measurement residuals (N, max m)."""
    x = as_states(model, x)
    w = x.copy()
    w[0] -= model.g0
    if model.N > 1:
        w[1:] -= model.process(x[:-1])
    v = model.z - model.measurement(x)
    return w, v


def residuals(model, x):
    """Process residuals w (N, n) and measurement residuals v (list of length-m(k) arrays)."""
    w, v = residual_arrays(model, x)
    return w, [vk[:m] for vk, m in zip(v, model.m)]


def forward_simulate(model, noise=None):
    """Propagate through the process maps from g0 (noise is an optional (N, n) array)."""
    N, n = model.N, model.n
    x = np.empty((N, n))
    x[0] = model.g0 if noise is None else model.g0 + noise[0]
    for k in range(1, N):
        x[k] = model.stages[k].g(x[k - 1])
        if noise is not None:
            x[k] += noise[k]
    return x
