"""Symmetric positive definite block-tridiagonal systems.

The matrix is stored as ``diag`` with shape (N, n, n) and ``sub`` with shape
(N-1, n, n); ``sub[k]`` is the block at block-row k+1, block-column k. The
super-diagonal is implied by symmetry.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import dpotrf, dtrtrs

from .errors import DimensionMismatch, NotPositiveDefinite


@dataclass(frozen=True)
class BlockTridiagonalMatrix:
    diag: np.ndarray
    sub: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        if diag.ndim != 3 or diag.shape[1] != diag.shape[2]:
            raise DimensionMismatch(f"diag must have shape (N, n, n), got {diag.shape}")
        N, n, _ = diag.shape
        if N < 1 or n < 1:
            raise DimensionMismatch("need at least one block of positive size")
        sub = np.asarray(self.sub, dtype=float).reshape(-1, n, n) if N > 1 else np.zeros((0, n, n))
        if sub.shape != (N - 1, n, n):
            raise DimensionMismatch(f"sub must have shape {(N - 1, n, n)}, got {sub.shape}")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "sub", sub)

    @property
    def N(self):
        return self.diag.shape[0]

    @property
    def n(self):
        return self.diag.shape[1]

    def to_dense(self):
        N, n = self.N, self.n
        M = np.zeros((N * n, N * n))
        for k in range(N):
            M[k * n:(k + 1) * n, k * n:(k + 1) * n] = self.diag[k]
        for k in range(N - 1):
            r, c = (k + 1) * n, k * n
            M[r:r + n, c:c + n] = self.sub[k]
            M[c:c + n, r:r + n] = self.sub[k].T
        return M

    @classmethod
    def identity(cls, n, N):
        return cls(np.broadcast_to(np.eye(n), (N, n, n)).copy(), np.zeros((N - 1, n, n)))


@dataclass(frozen=True)
class BlockCholeskyFactor:
    """Lower block-bidiagonal factor L with L @ L.T equal to the factored matrix.

    ``diag[k]`` is lower triangular, ``sub[k]`` is the block at row k+1, column k.
    """

    diag: np.ndarray
    sub: np.ndarray

    @property
    def N(self):
        return self.diag.shape[0]

    @property
    def n(self):
        return self.diag.shape[1]

    def to_dense(self):
        return dense_lower(self)


def _chol(block, k):
    # Exact sign test on the pivots; no regularization.
    L, info = dpotrf(block, lower=1, clean=1)
    if info != 0 or not np.all(np.diag(L) > 0):
        raise NotPositiveDefinite(f"Schur complement block {k} is not positive definite")
    return L


def _trsolve(L, b, trans=0):
    x, info = dtrtrs(L, b, lower=1, trans=trans)
    if info != 0:
        raise NotPositiveDefinite("singular triangular factor")
    return x


def factor(M):
    """Block Cholesky factorization in O(n^3 N).

    Forward sweep: L_1 L_1^T = C_1, then for k >= 2
    B_k = A_k L_{k-1}^{-T} and L_k L_k^T = C_k - B_k B_k^T.
    """
    N, n = M.N, M.n
    Ld = np.empty((N, n, n))
    Ls = np.empty((max(N - 1, 0), n, n))
    Ld[0] = _chol(M.diag[0], 0)
    for k in range(1, N):
        # B = A L^{-T}  <=>  L B^T = A^T
        B = _trsolve(Ld[k - 1], M.sub[k - 1].T).T
        Ls[k - 1] = B
        Ld[k] = _chol(M.diag[k] - B @ B.T, k)
    return BlockCholeskyFactor(Ld, Ls)


def _as_blocks(v, N, n):
    v = np.asarray(v, dtype=float)
    if v.size != N * n or (v.ndim == 2 and v.shape != (N, n)) or v.ndim > 2:
        raise DimensionMismatch(f"expected a block vector of {N} blocks of size {n}, got shape {v.shape}")
    return v.reshape(N, n)


def solve(F, rhs):
    """Solve (L L^T) d = rhs. Returns d with the same shape as ``rhs``."""
    N, n = F.N, F.n
    shape = np.shape(rhs)
    b = _as_blocks(rhs, N, n)
    y = np.empty((N, n))
    y[0] = _trsolve(F.diag[0], b[0])
    for k in range(1, N):
        y[k] = _trsolve(F.diag[k], b[k] - F.sub[k - 1] @ y[k - 1])
    d = np.empty((N, n))
    d[N - 1] = _trsolve(F.diag[N - 1], y[N - 1], trans=1)
    for k in range(N - 2, -1, -1):
        d[k] = _trsolve(F.diag[k], y[k] - F.sub[k].T @ d[k + 1], trans=1)
    return d.reshape(shape)


def multiply(M, v):
    """Blockwise product of the assembled matrix with ``v``."""
    shape = np.shape(v)
    x = _as_blocks(v, M.N, M.n)
    out = np.einsum("kij,kj->ki", M.diag, x)
    if M.N > 1:
        out[1:] += np.einsum("kij,kj->ki", M.sub, x[:-1])
        out[:-1] += np.einsum("kji,kj->ki", M.sub, x[1:])
    return out.reshape(shape)


def dense_lower(F):
    """Assemble the dense lower-triangular factor (testing aid)."""
    N, n = F.N, F.n
    L = np.zeros((N * n, N * n))
    for k in range(N):
        L[k * n:(k + 1) * n, k * n:(k + 1) * n] = F.diag[k]
    for k in range(N - 1):
        L[(k + 1) * n:(k + 2) * n, k * n:(k + 1) * n] = F.sub[k]
    return L
