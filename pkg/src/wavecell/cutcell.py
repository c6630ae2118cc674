"""Spacetree integration of cut cells and cell classification.

A tree node is split into ``2**d`` children when the membership samples on
it disagree. Samples are the node corners plus its center; a feature that
fits between the samples of a node is missed (use ``n_samples`` > 2 to
sample a denser lattice per node).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .geometry import AxisBox, IndicatorConfig
from .quadrature import gauss_legendre_rule, tensor_rule

EMPTY_THRESHOLD = 1e-10


class CellKind(enum.IntEnum):
    UNCUT = 0
    CUT = 1
    EMPTY = 2


@dataclass(frozen=True)
class CellClass:
    kind: CellKind
    fill_ratio: float


@dataclass(frozen=True)
class Spacetree:
    """Leaves of a spacetree as arrays of lower/upper corners."""

    lo: np.ndarray
    hi: np.ndarray
    depth: np.ndarray
    all_inside: bool
    all_outside: bool

    def __len__(self):
        return len(self.depth)

    @property
    def measures(self):
        return np.prod(self.hi - self.lo, axis=1)


def _sample_offsets(dim, n_samples):
    t = np.linspace(0.0, 1.0, n_samples)
    grids = np.meshgrid(*([t] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids[::-1]], axis=1)
    return np.vstack([pts, np.full((1, dim), 0.5)])


def build_spacetree(domain, cell, max_depth, n_samples=2):
    """Subdivide ``cell`` towards the domain boundary.

    Parameters
    ----------
    domain : ImplicitDomain
    cell : AxisBox
    max_depth : int
        Maximum number of refinement levels.
    n_samples : int
        Samples per axis on every tree node (2 means corners only); the node
        center is always sampled as well.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    dim = cell.dim
    offs = _sample_offsets(dim, n_samples)
    children = _sample_offsets(dim, 2)[:-1]  # 2**d child offsets in {0, 1}
    lo = np.asarray(cell.lo)[None, :]
    hi = np.asarray(cell.hi)[None, :]
    leaves_lo, leaves_hi, leaves_d = [], [], []
    any_in = any_out = False
    for level in range(max_depth + 1):
        size = hi - lo
        pts = lo[:, None, :] + offs[None, :, :] * size[:, None, :]
        inside = domain.contains(pts.reshape(-1, dim)).reshape(len(lo), -1)
        any_in |= bool(inside.any())
        any_out |= bool((~inside).any())
        mixed = inside.any(axis=1) & ~inside.all(axis=1)
        if level == max_depth:
            mixed[:] = False
        keep = ~mixed
        leaves_lo.append(lo[keep])
        leaves_hi.append(hi[keep])
        leaves_d.append(np.full(int(keep.sum()), level))
        if not mixed.any():
            break
        half = 0.5 * size[mixed]
        base = lo[mixed]
        lo = (base[:, None, :] + children[None, :, :] * half[:, None, :]).reshape(-1, dim)
        hi = lo + np.repeat(half, len(children), axis=0)
    return Spacetree(
        np.vstack(leaves_lo),
        np.vstack(leaves_hi),
        np.concatenate(leaves_d),
        all_inside=not any_out,
        all_outside=not any_in,
    )


@dataclass(frozen=True)
class CompositeRule:
    points: np.ndarray
    weights: np.ndarray
    alpha: np.ndarray

    def integrate(self, values):
        return float(np.dot(self.weights, values))


def composite_rule(domain, cfg, cell, max_depth, n_per_axis, n_samples=2, tree=None):
    """Tensor Gauss-Legendre rules on every spacetree leaf, with indicator values."""
    if n_per_axis < 1:
        raise ValueError("n_per_axis must be >= 1")
    if tree is None:
        tree = build_spacetree(domain, cell, max_depth, n_samples)
    ref_pts, ref_w = tensor_rule(gauss_legendre_rule(n_per_axis), cell.dim)
    unit = 0.5 * (ref_pts + 1.0)  # map to [0, 1]^d
    size = tree.hi - tree.lo
    pts = tree.lo[:, None, :] + unit[None, :, :] * size[:, None, :]
    w = ref_w[None, :] * (tree.measures / 2.0**cell.dim)[:, None]
    pts = pts.reshape(-1, cell.dim)
    w = w.ravel()
    a = np.where(domain.contains(pts), 1.0, cfg.alpha_f)
    return CompositeRule(pts, w, a)


def classify_cell(domain, cell, tree_depth, eps=EMPTY_THRESHOLD, n_samples=2, n_per_axis=2):
    """Classify a grid cell as uncut, cut or empty."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    tree = build_spacetree(domain, cell, tree_depth, n_samples)
    if tree.all_inside:
        return CellClass(CellKind.UNCUT, 1.0)
    rule = composite_rule(domain, IndicatorConfig(), cell, tree_depth, n_per_axis, tree=tree)
    eta = float(np.sum(rule.weights[rule.alpha == 1.0]) / cell.measure)
    if eta < eps:
        return CellClass(CellKind.EMPTY, eta)
    return CellClass(CellKind.CUT, eta)


def cell_box(lo, hi):
    return AxisBox(tuple(lo), tuple(hi))
