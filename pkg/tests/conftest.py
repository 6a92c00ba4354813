import numpy as np
import pytest

from tksmooth.block_tridiag import BlockTridiagonalMatrix
from tksmooth.experiments import LINEAR_DT, integrated_noise_system, linear_model, vdp_model


def random_spd_blocktri(rng, n, N, delta=0.5):
    """B B^T with B lower block-bidiagonal is block-tridiagonal; delta I forces SPD."""
    Bd = rng.standard_normal((N, n, n))
    Bs = rng.standard_normal((max(N - 1, 0), n, n))
    diag = np.einsum("kij,klj->kil", Bd, Bd) + delta * np.eye(n)
    if N > 1:
        diag[1:] += np.einsum("kij,klj->kil", Bs, Bs)
    sub = np.einsum("kij,klj->kil", Bs, Bd[:-1]) if N > 1 else np.zeros((0, n, n))
    return BlockTridiagonalMatrix(diag, sub)


def central_gradient(f, x, h=None):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        step = 1e-6 * (1.0 + abs(flat[i])) if h is None else h
        xp, xm = flat.copy(), flat.copy()
        xp[i] += step
        xm[i] -= step
        gflat[i] = (f(xp.reshape(x.shape)) - f(xm.reshape(x.shape))) / (2 * step)
    return g


def central_jacobian(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    step = h * (1.0 + np.linalg.norm(x))
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * step))
    return np.stack(cols, axis=-1)


def rel_err(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), 1e-300)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def linear_seq(rng):
    z = rng.standard_normal(25)
    return linear_model(z, LINEAR_DT, 0.25)


@pytest.fixture
def vdp_seq(rng):
    z = rng.standard_normal(30)
    return vdp_model(z)


@pytest.fixture
def linear_system():
    return integrated_noise_system(LINEAR_DT)


def dense_gaussian_solution(model):
    """Global minimizer of the L2 objective for a linear model via dense normal equations."""
    N, n = model.N, model.n
    rows_w = N * n
    M = int(model.m.sum())
    J = np.zeros((rows_w + M, N * n))
    b = np.zeros(rows_w + M)
    W = np.zeros((rows_w + M, rows_w + M))
    r = rows_w
    for k, st in enumerate(model.stages):
        J[k * n:(k + 1) * n, k * n:(k + 1) * n] = np.eye(n)
        if k:
            J[k * n:(k + 1) * n, (k - 1) * n:k * n] = -st.g_jac(np.zeros(n))
        else:
            b[:n] = model.g0
        W[k * n:(k + 1) * n, k * n:(k + 1) * n] = st.Qinv
        J[r:r + st.m, k * n:(k + 1) * n] = st.h_jac(np.zeros(n))
        b[r:r + st.m] = st.z
        W[r:r + st.m, r:r + st.m] = st.Rinv
        r += st.m
    return np.linalg.solve(J.T @ W @ J, J.T @ W @ b).reshape(N, n)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
