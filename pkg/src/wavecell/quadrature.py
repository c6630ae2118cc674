"""One-dimensional quadrature rules and Lagrange bases on GLL nodes.

All rules live on the reference interval [-1, 1]. Tensor-product functions
are numbered lexicographically with the x index running fastest, i.e. the
function with per-axis indices ``(i0, i1, i2)`` has flat index
``i0 + (p+1)*i1 + (p+1)**2*i2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

NEWTON_TOL = 1e-14
_MAX_NEWTON = 100


class QuadratureError(RuntimeError):
    """Root finding for a quadrature rule failed to converge."""


@dataclass(frozen=True)
class Rule1D:
    points: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.points)

    def integrate(self, f):
        return float(np.dot(self.weights, f(self.points)))


def _legendre(n, x):
    """Return (L_n(x), L_n'(x)) via the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p0 = np.ones_like(x)
    if n == 0:
        return p0, np.zeros_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    # derivative from L_n and L_{n-1}; valid away from x = +-1
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = n * (x * p1 - p0) / (x * x - 1.0)
    end = np.abs(np.abs(x) - 1.0) < 1e-300
    if np.any(end):
        dp = np.where(end, np.sign(x) ** (n + 1) * n * (n + 1) / 2.0, dp)
    return p1, dp


def _legendre_d2(n, x, val, dval):
    # (1 - x^2) L'' = 2 x L' - n(n+1) L
    return (2.0 * x * dval - n * (n + 1) * val) / (1.0 - x * x)


@lru_cache(maxsize=None)
def _gll_cached(p):
    if p < 1:
        raise ValueError(f"GLL rule needs p >= 1, got {p}")
    if p == 1:
        return np.array([-1.0, 1.0]), np.array([1.0, 1.0])
    # roots of L_p' interlace the roots of L_p, which bracket them
    brackets, _ = np.polynomial.legendre.leggauss(p)
    roots = np.empty(p - 1)
    for j in range(p - 1):
        lo, hi = brackets[j], brackets[j + 1]
        s_lo = np.sign(_legendre(p, lo)[1])
        xi = -np.cos(np.pi * (j + 1) / p)
        if not lo < xi < hi:
            xi = 0.5 * (lo + hi)
        for _ in range(_MAX_NEWTON):
            val, dval = _legendre(p, xi)
            if np.sign(dval) == s_lo:
                lo = xi
            else:
                hi = xi
            xn = xi - dval / _legendre_d2(p, xi, val, dval)
            if not lo <= xn <= hi:
                xn = 0.5 * (lo + hi)
            done = abs(xn - xi) < NEWTON_TOL
            xi = xn
            if done:
                break
        else:
            raise QuadratureError(f"GLL Newton iteration failed for p={p}, root {j}")
        roots[j] = xi
    roots = 0.5 * (roots - roots[::-1])  # enforce exact symmetry
    pts = np.concatenate(([-1.0], roots, [1.0]))
    lp, _ = _legendre(p, pts)
    w = 2.0 / (p * (p + 1) * lp**2)
    return pts, w


def gll_rule(p):
    """Gauss-Lobatto-Legendre rule with ``p + 1`` points (exact to degree 2p-1)."""
    pts, w = _gll_cached(int(p))
    return Rule1D(pts.copy(), w.copy())


@lru_cache(maxsize=None)
def _gauss_cached(n):
    if n < 1:
        raise ValueError(f"Gauss-Legendre rule needs n >= 1, got {n}")
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre_rule(n):
    """Gauss-Legendre rule with ``n`` points (exact to degree 2n-1)."""
    pts, w = _gauss_cached(int(n))
    return Rule1D(pts.copy(), w.copy())


def lagrange_matrices(nodes, x):
    """Values and derivatives of all Lagrange polynomials on ``nodes`` at ``x``.

    Returns
    -------
    V, D : ndarray, shape (len(x), len(nodes))
        ``V[q, i] = N_i(x_q)`` and ``D[q, i] = N_i'(x_q)``.
    """
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = len(nodes)
    diff = x[:, None] - nodes[None, :]  # (nq, n)
    denom = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(denom, 1.0)
    V = np.ones((len(x), n))
    D = np.zeros((len(x), n))
    for i in range(n):
        others = [j for j in range(n) if j != i]
        scale = np.prod(denom[i, others])
        terms = diff[:, others]
        V[:, i] = np.prod(terms, axis=1) / scale
        # product rule: sum over the factor that gets differentiated
        for k in range(len(others)):
            D[:, i] += np.prod(np.delete(terms, k, axis=1), axis=1)
        D[:, i] /= scale
    return V, D


@dataclass(frozen=True)
class ShapeSet:
    """Tensor-product Lagrange shape functions of degree ``p`` in ``dim`` dimensions."""

    p: int
    dim: int = 1

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("polynomial degree must be >= 1")
        if self.dim not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")

    @property
    def nodes(self):
        return gll_rule(self.p).points

    @property
    def n_per_axis(self):
        return self.p + 1

    @property
    def n_functions(self):
        return (self.p + 1) ** self.dim


def lagrange_eval(shape, i, xi):
    """Value and derivative of the ``i``-th (0-based) 1D Lagrange polynomial at ``xi``."""
    if not 0 <= i <= shape.p:
        raise IndexError(f"shape index {i} out of range for p={shape.p}")
    V, D = lagrange_matrices(shape.nodes, [xi])
    return float(V[0, i]), float(D[0, i])


def tensor_product(factors):
    """Combine per-axis tables ``(nq, n)`` into ``(nq, n**d)`` with x fastest."""
    out = factors[0]
    for f in factors[1:]:
        out = (f[:, :, None] * out[:, None, :]).reshape(out.shape[0], -1)
    return out


def tensor_tables(shape, xi):
    """Shape values and reference gradients at many points.

    Parameters
    ----------
    shape : ShapeSet
    xi : array_like, shape (nq, dim)
        Points in the reference cube.

    Returns
    -------
    N : ndarray, shape (nq, nf)
    G : ndarray, shape (dim, nq, nf)
        Derivatives with respect to the reference coordinates.
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if xi.shape[1] != shape.dim:
        raise ValueError(f"expected points of dimension {shape.dim}, got {xi.shape[1]}")
    nodes = shape.nodes
    VD = [lagrange_matrices(nodes, xi[:, a]) for a in range(shape.dim)]
    N = tensor_product([v for v, _ in VD])
    G = np.empty((shape.dim,) + N.shape)
    for a in range(shape.dim):
        G[a] = tensor_product([VD[b][1] if b == a else VD[b][0] for b in range(shape.dim)])
    return N, G


def tensor_shape_eval(shape, xi):
    """Values and gradients of all ``(p+1)**d`` shape functions at one point."""
    N, G = tensor_tables(shape, np.reshape(xi, (1, shape.dim)))
    return N[0], G[:, 0, :].T


def tensor_rule(rule, dim):
    """Tensor product of a 1D rule; returns points ``(n**d, d)`` and weights."""
    grids = np.meshgrid(*([rule.points] * dim), indexing="ij")
    # reverse so that axis 0 (x) runs fastest, matching the function numbering
    pts = np.stack([g.ravel() for g in grids[::-1]], axis=1)
    w = rule.weights
    W = w
    for _ in range(dim - 1):
        W = (w[:, None] * W[None, :]).ravel()
    return pts, W
