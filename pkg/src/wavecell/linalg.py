"""Sparse symmetric helpers and a factor-once direct solver."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class FactorizationError(ArithmeticError):
    """Raised for non-positive pivots, i.e. a matrix that is not SPD."""

    def __init__(self, index, pivot):
        super().__init__(f"non-positive pivot {pivot:.3e} at index {index}")
        self.index = index
        self.pivot = pivot


def as_sparse(A):
    return A.tocsr() if sp.issparse(A) else sp.csr_matrix(np.atleast_2d(A))


def matvec(A, x):
    x = np.asarray(x)
    if A.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape} @ {x.shape}")
    return A @ x


def is_diagonal(A):
    A = sp.coo_matrix(A)
    off = A.row != A.col
    return not np.any(A.data[off] != 0.0)


def symmetry_defect(A):
    """``max|A - A^T| / max|A|``."""
    A = as_sparse(A)
    scale = abs(A).max()
    if scale == 0:
        return 0.0
    return abs(A - A.T).max() / scale


class Factorization:
    """LU factors of a symmetric positive-definite matrix, reused for many solves.

    The decomposition uses a symmetric fill-reducing ordering and no row
    pivoting, so for SPD input the factor is a scaled Cholesky factor and a
    non-positive pivot flags an indefinite matrix.
    """

    def __init__(self, A):
        A = sp.csc_matrix(A)
        if A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise ValueError(f"need a nonempty square matrix, got {A.shape}")
        self.shape = A.shape
        self._lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                             options={"SymmetricMode": True})
        if np.any(self._lu.perm_r != self._lu.perm_c):
            raise FactorizationError(-1, float("nan"))
        piv = self._lu.U.diagonal()
        bad = np.flatnonzero(~(piv > 0.0))
        if len(bad):
            k = bad[0]
            # pivot k sits in permuted column k, i.e. original column j with perm_c[j] == k
            orig = int(np.flatnonzero(self._lu.perm_c == k)[0])
            raise FactorizationError(orig, float(piv[k]))

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.shape[0]:
            raise ValueError(f"rhs of length {b.shape[0]} for a {self.shape} system")
        return self._lu.solve(b)


def factorize(A):
    return Factorization(A)


def solve(F, b):
    return F.solve(b)


def solve_diagonal(m, b):
    m = np.asarray(m, dtype=float)
    if np.any(m == 0.0):
        raise ZeroDivisionError(f"zero diagonal entry at index {int(np.flatnonzero(m == 0.0)[0])}")
    return np.asarray(b, dtype=float) / m
