"""Cartesian spectral-cell grid with C0 numbering over GLL nodes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cutcell import EMPTY_THRESHOLD, CellKind, build_spacetree, classify_cell
from .geometry import AxisBox, FullSpace, ImplicitDomain
from .quadrature import ShapeSet, gll_rule, lagrange_matrices, tensor_product


@dataclass
class SpectralMesh:
    extent: AxisBox
    cells_per_axis: tuple
    p: int
    domain: ImplicitDomain
    tree_depth: int
    kinds: np.ndarray  # CellKind per cell, lexicographic cell order (x fastest)
    fill_ratios: np.ndarray
    dof_map: np.ndarray  # (n_cells, (p+1)**d); -1 on empty cells
    node_coords: np.ndarray  # (n_dof, d)
    trees: dict = field(default_factory=dict, repr=False)  # cut cell -> Spacetree
    n_samples: int = 2

    @property
    def dim(self):
        return len(self.cells_per_axis)

    @property
    def n_cells(self):
        return len(self.kinds)

    @property
    def n_dof(self):
        return len(self.node_coords)

    @property
    def h(self):
        return self.extent.size / np.asarray(self.cells_per_axis)

    @property
    def shape(self):
        return ShapeSet(self.p, self.dim)

    def cell_index(self, multi):
        idx, stride = 0, 1
        for a, n in zip(multi, self.cells_per_axis):
            idx += a * stride
            stride *= n
        return idx

    def cell_multi_index(self, c):
        out = []
        for n in self.cells_per_axis:
            out.append(c % n)
            c //= n
        return tuple(out)

    def cell_box(self, c):
        lo = np.asarray(self.extent.lo) + self.h * np.asarray(self.cell_multi_index(c))
        return AxisBox(tuple(lo), tuple(lo + self.h))

    def cells_of_kind(self, kind):
        return np.flatnonzero(self.kinds == kind)

    def fill_ratio_histogram(self, eps=EMPTY_THRESHOLD):
        """Counts per bucket ``empty, [eps,0.1), [0.1,0.2), ..., [0.9,1), full``."""
        counts = np.zeros(12, dtype=int)
        for kind, eta in zip(self.kinds, self.fill_ratios):
            if kind == CellKind.EMPTY:
                counts[0] += 1
            elif kind == CellKind.UNCUT:
                counts[11] += 1
            else:
                counts[1 + min(int(eta * 10), 9)] += 1
        return counts


@dataclass(frozen=True)
class DofPartition:
    I_d: np.ndarray
    I_c: np.ndarray

    @property
    def n_d(self):
        return len(self.I_d)

    @property
    def n_c(self):
        return len(self.I_c)


def _axis_nodes(lo, h, n_cells, p):
    ref = 0.5 * (gll_rule(p).points + 1.0)
    pts = [lo + h * (c + ref[:-1]) for c in range(n_cells)]
    pts.append([lo + h * n_cells])
    return np.concatenate(pts)


def build_mesh(extent, cells_per_axis, p, domain=None, tree_depth=0, eps=EMPTY_THRESHOLD,
               n_samples=2):
    """Classify every grid cell and number the retained GLL nodes.

    Global DOFs follow the lexicographic order of the node grid (x fastest);
    nodes touched only by empty cells are dropped.
    """
    cells_per_axis = tuple(int(n) for n in cells_per_axis)
    if len(cells_per_axis) != extent.dim:
        raise ValueError("cells_per_axis must match the extent dimension")
    if any(n < 1 for n in cells_per_axis):
        raise ValueError("need at least one cell per axis")
    if extent.measure <= 0.0:
        raise ValueError("degenerate extent")
    if p < 1:
        raise ValueError("polynomial degree must be >= 1")
    if domain is None:
        domain = ImplicitDomain(FullSpace())
    dim = extent.dim
    n_cells = int(np.prod(cells_per_axis))
    h = extent.size / np.asarray(cells_per_axis)
    lo0 = np.asarray(extent.lo)

    kinds = np.empty(n_cells, dtype=int)
    fills = np.empty(n_cells)
    trees = {}
    for c in range(n_cells):
        multi, k = [], c
        for n in cells_per_axis:
            multi.append(k % n)
            k //= n
        lo = lo0 + h * np.asarray(multi)
        box = AxisBox(tuple(lo), tuple(lo + h))
        cls = classify_cell(domain, box, tree_depth, eps, n_samples=n_samples)
        kinds[c] = cls.kind
        fills[c] = cls.fill_ratio
        if cls.kind == CellKind.CUT:
            trees[c] = build_spacetree(domain, box, tree_depth, n_samples)

    # full node grid, x fastest
    n_nodes = [n * p + 1 for n in cells_per_axis]
    local = np.arange(p + 1)
    cell_multi = np.stack(np.unravel_index(np.arange(n_cells), cells_per_axis[::-1])[::-1], axis=1)
    # per-axis global node index tables, combined lexicographically
    full = np.zeros((n_cells, (p + 1) ** dim), dtype=np.int64)
    stride = 1
    for a in range(dim):
        ax = (cell_multi[:, a] * p)[:, None] + local[None, :]  # (n_cells, p+1)
        # broadcast the axis index into the tensor layout (axis 0 fastest)
        shape = [1] * dim
        shape[dim - 1 - a] = p + 1
        grid = np.broadcast_to(local.reshape(shape), [p + 1] * dim).reshape(-1)
        full += stride * ax[:, grid]
        stride *= n_nodes[a]

    active = kinds != CellKind.EMPTY
    if not active.any():
        raise ValueError("all cells are empty; no degrees of freedom retained")
    used = np.zeros(int(np.prod(n_nodes)), dtype=bool)
    used[full[active].ravel()] = True
    number = np.full(used.shape, -1, dtype=np.int64)
    number[used] = np.arange(int(used.sum()))
    dof_map = number[full]
    dof_map[~active] = -1

    axes = [_axis_nodes(lo0[a], h[a], cells_per_axis[a], p) for a in range(dim)]
    grids = np.meshgrid(*axes[::-1], indexing="ij")
    coords = np.stack([g.ravel() for g in grids[::-1]], axis=1)[used]

    return SpectralMesh(extent, cells_per_axis, p, domain, tree_depth, kinds, fills,
                        dof_map, coords, trees, n_samples)


def partition_dofs(mesh):
    """Split DOFs into those supported only by uncut cells and the rest."""
    cut = np.zeros(mesh.n_dof, dtype=bool)
    rows = mesh.dof_map[mesh.kinds == CellKind.CUT]
    cut[rows.ravel()] = True
    return DofPartition(np.flatnonzero(~cut), np.flatnonzero(cut))


def locate(mesh, points):
    """Containing cell and reference coordinates of each point.

    Points on a face shared by two cells go to the lower-index cell.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    lo = np.asarray(mesh.extent.lo)
    hi = np.asarray(mesh.extent.hi)
    tol = 1e-12 * np.max(mesh.extent.size)
    if np.any(x < lo - tol) or np.any(x > hi + tol):
        raise ValueError("evaluation point outside the mesh extent")
    h = mesh.h
    n = np.asarray(mesh.cells_per_axis)
    idx = np.clip(np.ceil((x - lo) / h).astype(int) - 1, 0, n - 1)
    xi = 2.0 * (x - lo - idx * h) / h - 1.0
    xi = np.clip(xi, -1.0, 1.0)
    stride = np.cumprod(np.concatenate(([1], n[:-1])))
    return idx @ stride, xi


def interpolation_matrix(mesh, points):
    """Sparse ``(n_points, n_dof)`` operator evaluating a field at ``points``."""
    cells, xi = locate(mesh, points)
    nodes = gll_rule(mesh.p).points
    N = tensor_product([lagrange_matrices(nodes, xi[:, a])[0] for a in range(mesh.dim)])
    dofs = mesh.dof_map[cells]
    rows = np.repeat(np.arange(len(cells)), N.shape[1])
    ok = dofs.ravel() >= 0
    return sp.csr_matrix((N.ravel()[ok], (rows[ok], dofs.ravel()[ok])),
                         shape=(len(cells), mesh.n_dof))


def evaluate_field(mesh, coefficients, x):
    """Evaluate ``sum_i N_i(x) u_i`` at one point (scalar) or many points."""
    x = np.asarray(x, dtype=float)
    vals = interpolation_matrix(mesh, x) @ np.asarray(coefficients)
    return float(vals[0]) if x.ndim == 1 else vals
