"""Element and global mass/stiffness/force assembly for the spectral cell method.

The indicator scales density (``rho* = alpha * rho``), which enters both
the mass and the stiffness integrals; the wave speed is left untouched.
Uncut cells use a GLL rule for the mass (diagonal by construction) and
Gauss-Legendre for stiffness and load; cut cells use the spacetree rule for
everything.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .cutcell import CellKind, composite_rule
from .geometry import IndicatorConfig
from .linalg import is_diagonal
from .mesh import DofPartition, partition_dofs
from .quadrature import gauss_legendre_rule, gll_rule, tensor_rule, tensor_tables


@dataclass(frozen=True)
class Material:
    rho: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if not (self.rho > 0 and self.c > 0):
            raise ValueError("density and wave speed must be positive")


def _cell_integrals(shape, xi, weights, density, material, h, with_mass=True, with_stiffness=True):
    """Mass and stiffness over reference points ``xi`` with physical ``weights``."""
    N, G = tensor_tables(shape, xi)
    wm = weights * density * material.rho
    M = (N * wm[:, None]).T @ N if with_mass else None
    K = None
    if with_stiffness:
        wk = wm * material.c**2
        K = np.zeros((N.shape[1], N.shape[1]))
        for a in range(shape.dim):
            Ga = G[a] * (2.0 / h[a])
            K += (Ga * wk[:, None]).T @ Ga
    return M, K


def uncut_element_matrices(shape, h, material):
    """GLL-lumped mass and Gauss-Legendre stiffness of a fully physical cell."""
    h = np.asarray(h, dtype=float)
    jac = np.prod(h) / 2.0**shape.dim
    xg, wg = tensor_rule(gll_rule(shape.p), shape.dim)
    M, _ = _cell_integrals(shape, xg, wg * jac, 1.0, material, h, with_stiffness=False)
    xq, wq = tensor_rule(gauss_legendre_rule(shape.p + 1), shape.dim)
    _, K = _cell_integrals(shape, xq, wq * jac, 1.0, material, h, with_mass=False)
    # GLL collocation gives an exactly diagonal mass; drop round-off
    return np.diag(np.diag(M)), K


def cut_element_matrices(rule, box, shape, material):
    """Consistent mass and stiffness of a cut cell from its composite rule."""
    lo = np.asarray(box.lo)
    h = box.size
    xi = 2.0 * (rule.points - lo) / h - 1.0
    return _cell_integrals(shape, xi, rule.weights, rule.alpha, material, h)


def element_matrices(domain, box, kind, material, cfg, shape, tree_depth, n_samples=2, tree=None):
    """``(M_e, K_e)`` for one retained cell."""
    if kind == CellKind.EMPTY:
        raise ValueError("empty cells carry no element matrices")
    if kind == CellKind.UNCUT:
        return uncut_element_matrices(shape, box.size, material)
    rule = composite_rule(domain, cfg, box, tree_depth, shape.p + 1, n_samples, tree=tree)
    return cut_element_matrices(rule, box, shape, material)


def hrz_lump(M_e, m_e=None):
    """Diagonal HRZ approximation preserving the total element mass.

    ``m_e`` defaults to the sum of all entries of the consistent matrix.
    """
    M_e = np.asarray(M_e, dtype=float)
    diag = np.diag(M_e)
    tr = diag.sum()
    if not tr > 0:
        raise ValueError("HRZ lumping needs a positive trace")
    if m_e is None:
        m_e = M_e.sum()
    return np.diag(diag * (m_e / tr))


@dataclass
class PartitionedSystem:
    """``M a + K u = f_t(t) f_x`` with DOFs split into diagonal and cut blocks."""

    M: sp.csr_matrix
    K: sp.csr_matrix
    f_x: np.ndarray
    partition: DofPartition

    def __post_init__(self):
        self.M = sp.csr_matrix(self.M)
        self.K = sp.csr_matrix(self.K)
        self.f_x = np.asarray(self.f_x, dtype=float)
        n = self.M.shape[0]
        if self.K.shape != (n, n) or self.f_x.shape != (n,):
            raise ValueError("inconsistent system dimensions")
        d = self.partition.I_d
        if len(d):
            rows = self.M[d]
            coo = rows.tocoo()
            off = coo.col != d[coo.row]
            if np.any(coo.data[off] != 0.0):
                raise ValueError("mass matrix couples diagonal DOFs to other DOFs")
            if not np.all(self.M_dd > 0):
                raise ValueError("diagonal mass block must be strictly positive")

    @classmethod
    def from_matrices(cls, M, K, f_x, I_d):
        n = M.shape[0]
        I_d = np.asarray(sorted(set(int(i) for i in I_d)), dtype=np.int64)
        mask = np.zeros(n, dtype=bool)
        mask[I_d] = True
        return cls(M, K, f_x, DofPartition(I_d, np.flatnonzero(~mask)))

    def with_partition(self, I_d):
        return PartitionedSystem.from_matrices(self.M, self.K, self.f_x, I_d)

    @property
    def n_dof(self):
        return self.M.shape[0]

    @property
    def I_d(self):
        return self.partition.I_d

    @property
    def I_c(self):
        return self.partition.I_c

    @cached_property
    def M_dd(self):
        return self.M.diagonal()[self.I_d]

    @cached_property
    def M_cc(self):
        return self.M[self.I_c][:, self.I_c].tocsr()

    @cached_property
    def K_d(self):
        return self.K[self.I_d].tocsr()

    @cached_property
    def K_c(self):
        return self.K[self.I_c].tocsr()

    @cached_property
    def K_dd(self):
        return self.K_d[:, self.I_d].tocsr()

    @cached_property
    def K_dc(self):
        return self.K_d[:, self.I_c].tocsr()

    @cached_property
    def K_cd(self):
        return self.K_c[:, self.I_d].tocsr()

    @cached_property
    def K_cc(self):
        return self.K_c[:, self.I_c].tocsr()

    @property
    def f_d(self):
        return self.f_x[self.I_d]

    @property
    def f_c(self):
        return self.f_x[self.I_c]

    @property
    def mass_is_diagonal(self):
        return is_diagonal(self.M)


def _scatter(dofs, mats):
    """COO triplets for element matrices ``mats[k]`` on rows ``dofs[k]``."""
    nf = dofs.shape[1]
    rows = np.repeat(dofs, nf, axis=1).ravel()
    cols = np.tile(dofs, (1, nf)).ravel()
    return rows, cols, np.asarray(mats).reshape(len(dofs), -1).ravel()


def cell_rule(mesh, c, cfg, n_per_axis=None):
    box = mesh.cell_box(c)
    n = mesh.p + 1 if n_per_axis is None else n_per_axis
    return box, composite_rule(mesh.domain, cfg, box, mesh.tree_depth, n, mesh.n_samples,
                               tree=mesh.trees.get(c))


def cut_element_data(mesh, material, cfg):
    """Consistent element matrices of every cut cell: ``{cell: (M_e, K_e)}``."""
    out = {}
    shape = mesh.shape
    for c in mesh.cells_of_kind(CellKind.CUT):
        box, rule = cell_rule(mesh, c, cfg)
        out[int(c)] = cut_element_matrices(rule, box, shape, material)
    return out


def assemble(mesh, material, cfg=None, lumping="consistent", source=None, cut_data=None):
    """Global partitioned system of a spectral-cell mesh.

    Parameters
    ----------
    lumping : {"consistent", "hrz"}
        Treatment of cut-cell mass matrices.
    source : callable, optional
        Spatial source profile ``f(points) -> values`` for ``f_x``.
    """
    if lumping not in ("consistent", "hrz"):
        raise ValueError(f"unknown lumping {lumping!r}")
    cfg = cfg or IndicatorConfig()
    if mesh.n_dof == 0:
        raise ValueError("mesh has no retained degrees of freedom")
    n = mesh.n_dof
    uncut = mesh.cells_of_kind(CellKind.UNCUT)
    Mu, Ku = uncut_element_matrices(mesh.shape, mesh.h, material)

    m_diag = np.zeros(n)
    if len(uncut):
        dofs = mesh.dof_map[uncut]
        np.add.at(m_diag, dofs.ravel(), np.tile(np.diag(Mu), len(uncut)))
        kr, kc, kv = _scatter(dofs, np.broadcast_to(Ku, (len(uncut),) + Ku.shape))
    else:
        kr = kc = np.zeros(0, dtype=np.int64)
        kv = np.zeros(0)

    if cut_data is None:
        cut_data = cut_element_data(mesh, material, cfg)
    cut_cells = np.array(sorted(cut_data), dtype=np.int64)
    mr = [np.arange(n)]
    mc = [np.arange(n)]
    mv = [m_diag]
    kr, kc, kv = [kr], [kc], [kv]
    if len(cut_cells):
        dofs = mesh.dof_map[cut_cells]
        Me = np.array([cut_data[c][0] for c in cut_cells])
        Ke = np.array([cut_data[c][1] for c in cut_cells])
        if lumping == "hrz":
            Me = np.array([hrz_lump(m) for m in Me])
        r, c_, v = _scatter(dofs, Me)
        mr.append(r), mc.append(c_), mv.append(v)
        r, c_, v = _scatter(dofs, Ke)
        kr.append(r), kc.append(c_), kv.append(v)
    M = sp.coo_matrix((np.concatenate(mv), (np.concatenate(mr), np.concatenate(mc))),
                      shape=(n, n)).tocsr()
    K = sp.coo_matrix((np.concatenate(kv), (np.concatenate(kr), np.concatenate(kc))),
                      shape=(n, n)).tocsr()
    M.eliminate_zeros()
    K.sum_duplicates()
    # exact symmetry of the stored values
    K = ((K + K.T) * 0.5).tocsr()
    M = ((M + M.T) * 0.5).tocsr()
    f_x = assemble_force(mesh, source, cfg) if source is not None else np.zeros(n)
    return PartitionedSystem(M, K, f_x, partition_dofs(mesh))


def assemble_force(mesh, spatial_source, cfg=None, n_per_axis=None):
    """``f_i = int alpha f(x) N_i dOmega`` with each cell's quadrature rule."""
    cfg = cfg or IndicatorConfig()
    shape = mesh.shape
    n = mesh.p + 1 if n_per_axis is None else n_per_axis
    f = np.zeros(mesh.n_dof)
    h = mesh.h
    xq, wq = tensor_rule(gauss_legendre_rule(n), mesh.dim)
    N_ref, _ = tensor_tables(shape, xq)
    jac = np.prod(h) / 2.0**mesh.dim
    for c in mesh.cells_of_kind(CellKind.UNCUT):
        lo = np.asarray(mesh.cell_box(c).lo)
        pts = lo + 0.5 * (xq + 1.0) * h
        vals = np.asarray(spatial_source(pts), dtype=float) * wq * jac
        if not np.any(vals):
            continue
        np.add.at(f, mesh.dof_map[c], N_ref.T @ vals)
    for c in mesh.cells_of_kind(CellKind.CUT):
        box, rule = cell_rule(mesh, c, cfg, n)
        vals = np.asarray(spatial_source(rule.points), dtype=float) * rule.weights * rule.alpha
        if not np.any(vals):
            continue
        xi = 2.0 * (rule.points - np.asarray(box.lo)) / box.size - 1.0
        N, _ = tensor_tables(shape, xi)
        np.add.at(f, mesh.dof_map[c], N.T @ vals)
    return f


def write_coo(A, path):
    """Dump a sparse matrix as ``row col value`` lines (0-based)."""
    A = sp.coo_matrix(A)
    with open(path, "w") as fh:
        for r, c, v in zip(A.row, A.col, A.data):
            fh.write(f"{r} {c} {v:.17g}\n")
