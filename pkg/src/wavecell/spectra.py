"""Largest generalized eigenvalues and critical time steps ``dt = 2 / omega_max``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .assembly import Material, cut_element_data, cut_element_matrices, hrz_lump, uncut_element_matrices
from .cutcell import CellKind, composite_rule
from .geometry import AxisBox, HalfSpace, ImplicitDomain, IndicatorConfig
from .linalg import factorize, is_diagonal
from .quadrature import ShapeSet

MAX_ITER = 10_000


class EigenConvergenceError(RuntimeError):
    def __init__(self, rayleigh, iterations):
        super().__init__(f"power iteration did not converge after {iterations} iterations "
                         f"(last Rayleigh quotient {rayleigh:.10g})")
        self.rayleigh = rayleigh


@dataclass(frozen=True)
class CriticalDtReport:
    omega_max: float
    dt_crit: float
    scope: str

    @classmethod
    def from_eigenvalue(cls, lam, scope):
        if not lam > 0:
            raise ValueError(f"largest eigenvalue must be positive, got {lam}")
        omega = float(np.sqrt(lam))
        return cls(omega, 2.0 / omega, scope)


def _mass_solver(M):
    if np.ndim(M) == 1:
        m = np.asarray(M, dtype=float)
        return lambda b: b / m
    if sp.issparse(M) and is_diagonal(M):
        m = M.diagonal()
        return lambda b: b / m
    F = factorize(M)
    return F.solve


def _mass_apply(M):
    if np.ndim(M) == 1:
        m = np.asarray(M, dtype=float)
        return lambda x: m * x
    return lambda x: M @ x


def max_eig(K, M, rel_tol=1e-8, max_iter=MAX_ITER, seed=0):
    """``lambda_max`` of ``K x = lambda M x`` by power iteration on ``M^-1 K``.

    ``M`` may be a vector of diagonal entries, a diagonal sparse matrix or a
    general SPD matrix (factorized once).
    """
    n = K.shape[0]
    msolve = _mass_solver(M)
    mapply = _mass_apply(M)
    x = np.random.default_rng(seed).standard_normal(n)
    x /= np.sqrt(x @ mapply(x))
    rq_old = np.inf
    rq = 0.0
    for it in range(1, max_iter + 1):
        Kx = K @ x
        rq = float(x @ Kx)  # x is M-normalized
        if abs(rq - rq_old) <= rel_tol * abs(rq):
            return rq
        rq_old = rq
        y = msolve(Kx)
        norm = np.sqrt(y @ mapply(y))
        if norm == 0.0:
            return 0.0
        x = y / norm
    raise EigenConvergenceError(rq, max_iter)


def max_eig_dense(K, M):
    """Dense reference for ``lambda_max`` (intended for small systems)."""
    K = K.toarray() if sp.issparse(K) else np.asarray(K, dtype=float)
    if np.ndim(M) == 1:
        M = np.diag(M)
    M = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    n = K.shape[0]
    return float(sla.eigh(K, M, eigvals_only=True, subset_by_index=[n - 1, n - 1])[0])


def max_eig_auto(K, M, rel_tol=1e-8, dense_limit=200):
    if K.shape[0] <= dense_limit:
        return max_eig_dense(K, M)
    return max_eig(K, M, rel_tol)


def critical_dt(system, scope="global", rel_tol=1e-8, dense_limit=200):
    """Critical CDM step of the whole system or of the explicit (diagonal) subsystem."""
    if scope == "global":
        K, M = system.K, system.M
    elif scope == "explicit_subsystem":
        if system.partition.n_d == 0:
            raise ValueError("explicit subsystem is empty")
        K, M = system.K_dd, system.M_dd
    else:
        raise ValueError(f"unknown scope {scope!r}")
    lam = max_eig_auto(K, M, rel_tol, dense_limit)
    return CriticalDtReport.from_eigenvalue(lam, scope)


def _element_lambda(K_e, M_e):
    n = K_e.shape[0]
    return float(sla.eigh(K_e, M_e, eigvals_only=True, subset_by_index=[n - 1, n - 1])[0])


def cellwise_critical_dt(mesh, material, cfg=None, lumping="consistent", cut_data=None):
    """Per-cell critical steps ``{cell: dt}``; empty cells are omitted."""
    cfg = cfg or IndicatorConfig()
    out = {}
    uncut = mesh.cells_of_kind(CellKind.UNCUT)
    if len(uncut):
        Mu, Ku = uncut_element_matrices(mesh.shape, mesh.h, material)
        dt_u = 2.0 / np.sqrt(_element_lambda(Ku, Mu))
        out.update({int(c): dt_u for c in uncut})
    if cut_data is None:
        cut_data = cut_element_data(mesh, material, cfg)
    for c, (Me, Ke) in cut_data.items():
        if lumping == "hrz":
            Me = hrz_lump(Me)
        out[int(c)] = 2.0 / np.sqrt(_element_lambda(Ke, Me))
    return dict(sorted(out.items()))


def cut_cell_spectrum(eta, p, depth, rho_f=1e-6, lx=1.0, ly=1.0):
    """Highest eigenfrequency of one square cell cut by a horizontal line.

    The physical part lies below ``y = eta * ly`` with ``rho = c = 1``; above
    it the density is ``rho_f``. A fully physical cell (``eta == 1``) is an
    uncut spectral element with GLL-lumped mass; every other fill ratio uses
    the consistent spacetree-integrated mass.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("fill ratio must lie in [0, 1]")
    shape = ShapeSet(p, 2)
    material = Material(1.0, 1.0)
    box = AxisBox((0.0, 0.0), (lx, ly))
    if eta == 1.0:
        Me, Ke = uncut_element_matrices(shape, box.size, material)
    else:
        domain = ImplicitDomain(HalfSpace((0.0, 1.0), eta * ly))
        cfg = IndicatorConfig(-np.log10(rho_f))
        rule = composite_rule(domain, cfg, box, depth, p + 1)
        Me, Ke = cut_element_matrices(rule, box, shape, material)
    return float(np.sqrt(_element_lambda(Ke, Me)))
