"""Smoothing objectives and their Gauss-Newton quadratic models.

All three objectives share the residuals w_k = x_k - g_k(x_{k-1}) and
v_k = z_k - h_k(x_k). With q_w = |w_k|^2_{Q_k^-1} and q_v = |v_k|^2_{R_k^-1}:

    trobust   1/2 sum (s_k + m_k) log(1 + q_v / s_k) + q_w
    ttrend    1/2 sum (r_k + n) log(1 + q_w / r_k) + q_v
    l2        1/2 sum q_w + q_v

The Student's t terms enter the curvature through per-stage weights
omega_k = (s_k + m_k) / (s_k + q_v) and lambda_k = (r_k + n) / (r_k + q_w)
that multiply every block originating from the corresponding residual.
"""
import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from . import block_tridiag
from .block_tridiag import BlockTridiagonalMatrix
from .models import as_states, residual_arrays, residuals


class ObjectiveKind(str, enum.Enum):
    TROBUST = "trobust"
    TTREND = "ttrend"
    GAUSSIAN = "l2"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"gaussian": "l2", "gaussianl2": "l2", "ks": "l2", "tks": "trobust",
                   "t-robust": "trobust", "t-trend": "ttrend"}
        key = str(value).lower()
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class ObjectiveEvaluation:
    value: float
    gradient: np.ndarray
    curvature: BlockTridiagonalMatrix
    w: np.ndarray
    v: list
    weights: np.ndarray


def _weighted_terms(kind, model, w, v):
    """Per-stage values, whitened residuals and weights (omega, lambda)."""
    Qw = np.einsum("kij,kj->ki", model.Qinv, w)
    Rv = np.einsum("kij,kj->ki", model.Rinv, v)
    qw = np.einsum("ki,ki->k", w, Qw)
    qv = np.einsum("ki,ki->k", v, Rv)
    ones = np.ones(model.N)
    if kind is ObjectiveKind.TROBUST:
        s, m = model.s, model.m
        values = 0.5 * ((s + m) * np.log1p(qv / s) + qw)
        omega, lam = (s + m) / (s + qv), ones
    elif kind is ObjectiveKind.TTREND:
        r, n = model.r, model.n
        values = 0.5 * ((r + n) * np.log1p(qw / r) + qv)
        omega, lam = ones, (r + n) / (r + qw)
    else:
        values = 0.5 * (qw + qv)
        omega, lam = ones, ones
    return values, Qw, Rv, omega, lam


def objective_value(kind, model, x):
    """Objective value only (no derivatives)."""
    kind = ObjectiveKind.parse(kind)
    w, v = residual_arrays(model, x)
    return float(np.sum(_weighted_terms(kind, model, w, v)[0]))


def evaluate(kind, model, x):
    """Value, gradient and Gauss-Newton curvature at trajectory ``x``."""
    kind = ObjectiveKind.parse(kind)
    x = as_states(model, x)
    w, v = residual_arrays(model, x)
    values, Qw, Rv, omega, lam = _weighted_terms(kind, model, w, v)
    Jh = model.measurement.jacobian(x)
    grad = lam[:, None] * Qw - omega[:, None] * np.einsum("kji,kj->ki", Jh, Rv)
    diag = (lam[:, None, None] * model.Qinv
            + omega[:, None, None] * np.einsum("kji,kjl,klm->kim", Jh, model.Rinv, Jh))
    if model.N > 1:
        # d w_k / d x_{k-1} = -G_k
        G = model.process.jacobian(x[:-1])
        QG = np.einsum("kij,kjl->kil", model.Qinv[1:], G)
        grad[:-1] -= lam[1:, None] * np.einsum("kji,kj->ki", G, Qw[1:])
        diag[:-1] += lam[1:, None, None] * np.einsum("kji,kjl->kil", G, QG)
        sub = -lam[1:, None, None] * QG
    else:
        sub = np.zeros((0, model.n, model.n))
    weights = omega if kind is ObjectiveKind.TROBUST else lam
    v_list = [vk[:m] for vk, m in zip(v, model.m)]
    return ObjectiveEvaluation(float(np.sum(values)), grad, BlockTridiagonalMatrix(diag, sub),
                               w, v_list, weights)


def delta(kind, model, x, d, evaluation=None):
    """Predicted change a^T d + 1/2 d^T C d of the curvature-augmented local model."""
    ev = evaluate(kind, model, x) if evaluation is None else evaluation
    d = np.asarray(d, dtype=float).reshape(ev.gradient.shape)
    Cd = block_tridiag.multiply(ev.curvature, d)
    return float(np.sum(ev.gradient * d) + 0.5 * np.sum(d * Cd))


def _dense_jacobians(model, x):
    """Dense Jacobians of the stacked w (nN x nN) and v (M x nN)."""
    N, n = model.N, model.n
    m = [st.m for st in model.stages]
    offs = np.concatenate([[0], np.cumsum(m)])
    Jw = np.eye(N * n)
    Jv = np.zeros((offs[-1], N * n))
    for k, st in enumerate(model.stages):
        Jv[offs[k]:offs[k + 1], k * n:(k + 1) * n] = -st.h_jac(x[k])
        if k > 0:
            Jw[k * n:(k + 1) * n, (k - 1) * n:k * n] = -st.g_jac(x[k - 1])
    return Jw, Jv, offs


def delta_composite(kind, model, x, d):
    """rho(F(x) + F'(x) d) + 1/2 d^T H d - K(x), assembled densely.

    K = rho o F with rho(c, u) = c + 1/2 |u|^2_{A^-1} and F = (f, r): f collects
    the log terms and r the Gaussian-penalized residuals. H carries the
    weighted Gauss-Newton curvature of f. Dense and O((nN)^3); meant as an
    independent check on :func:`delta` for small problems.
    """
    kind = ObjectiveKind.parse(kind)
    x = as_states(model, x)
    d = np.asarray(d, dtype=float).ravel()
    N, n = model.N, model.n
    w, v = residuals(model, x)
    Jw, Jv, offs = _dense_jacobians(model, x)
    wflat = w.ravel()
    vflat = np.concatenate(v)
    Qinv = block_diag(*[st.Qinv for st in model.stages])
    Rinv = block_diag(*[st.Rinv for st in model.stages])

    if kind is ObjectiveKind.GAUSSIAN:
        r = np.concatenate([wflat, vflat])
        Jr = np.vstack([Jw, Jv])
        Ainv = block_diag(Qinv, Rinv)
        f, grad_f, H = 0.0, np.zeros(N * n), np.zeros((N * n, N * n))
    else:
        if kind is ObjectiveKind.TROBUST:
            p, Jp, Binv, r, Jr, Ainv = vflat, Jv, Rinv, wflat, Jw, Qinv
            bounds = [(offs[k], offs[k + 1]) for k in range(N)]
            dofs = [(st.s, st.m) for st in model.stages]
        else:
            p, Jp, Binv, r, Jr, Ainv = wflat, Jw, Qinv, vflat, Jv, Rinv
            bounds = [(k * n, (k + 1) * n) for k in range(N)]
            dofs = [(st.r, n) for st in model.stages]
        f = 0.0
        grad_f = np.zeros(N * n)
        H = np.zeros((N * n, N * n))
        for (lo, hi), (b, l) in zip(bounds, dofs):
            pk, Jk, Bk = p[lo:hi], Jp[lo:hi], Binv[lo:hi, lo:hi]
            q = pk @ Bk @ pk
            f += 0.5 * (b + l) * np.log1p(q / b)
            weight = (b + l) / (b + q)
            grad_f += weight * (Jk.T @ Bk @ pk)
            H += weight * (Jk.T @ Bk @ Jk)

    K = f + 0.5 * r @ Ainv @ r
    u = r + Jr @ d
    rho_lin = f + grad_f @ d + 0.5 * u @ Ainv @ u
    return float(rho_lin + 0.5 * d @ H @ d - K)
