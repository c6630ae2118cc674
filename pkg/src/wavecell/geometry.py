"""Implicit CSG description of the physical domain.

Membership is evaluated for arrays of points of shape ``(n, d)``. The
physical domain is closed: points on the boundary of a primitive count as
inside, and a ``Difference`` removes only the open interior of the
subtracted set, so hole boundaries stay physical too.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, field

import numpy as np


def _points(x):
    x = np.asarray(x, dtype=float)
    return x[None, :] if x.ndim == 1 else x


class Node:
    """Base class of all CSG nodes."""

    def member(self, x, closed=True):
        """Boolean membership of points ``x`` (shape ``(n, d)``).

        ``closed=False`` evaluates the open interior instead.
        """
        raise NotImplementedError


@dataclass(frozen=True)
class FullSpace(Node):
    def member(self, x, closed=True):
        return np.ones(len(_points(x)), dtype=bool)


@dataclass(frozen=True)
class HalfSpace(Node):
    """Points with ``normal . x <= offset``."""

    normal: tuple
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = np.linalg.norm(n)
        if norm == 0.0:
            raise ValueError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", tuple(n / norm))
        object.__setattr__(self, "offset", float(self.offset) / norm)

    def member(self, x, closed=True):
        s = _points(x) @ np.asarray(self.normal)
        return s <= self.offset if closed else s < self.offset


@dataclass(frozen=True)
class Ball(Node):
    """Disk in 2D, sphere in 3D, interval in 1D."""

    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def member(self, x, closed=True):
        r2 = np.sum((_points(x) - np.asarray(self.center)) ** 2, axis=1)
        rr = self.radius**2
        return r2 <= rr if closed else r2 < rr


Disk = Ball
Sphere = Ball


@dataclass(frozen=True)
class AxisBox(Node):
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise ValueError("box corners differ in dimension")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"box needs lo < hi componentwise, got {lo}, {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return len(self.lo)

    @property
    def size(self):
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def measure(self):
        return float(np.prod(self.size))

    def member(self, x, closed=True):
        x = _points(x)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        if closed:
            return np.all((x >= lo) & (x <= hi), axis=1)
        return np.all((x > lo) & (x < hi), axis=1)


@dataclass(frozen=True)
class Union(Node):
    children: tuple = field(default_factory=tuple)

    def member(self, x, closed=True):
        x = _points(x)
        out = np.zeros(len(x), dtype=bool)
        for c in self.children:
            out |= c.member(x, closed)
        return out


@dataclass(frozen=True)
class Difference(Node):
    base: Node
    subtracted: Node

    def member(self, x, closed=True):
        x = _points(x)
        # the complement of an open set is closed and vice versa
        return self.base.member(x, closed) & ~self.subtracted.member(x, not closed)


@dataclass(frozen=True)
class ImplicitDomain:
    root: Node

    def contains(self, x):
        return self.root.member(x, closed=True)


@dataclass(frozen=True)
class IndicatorConfig:
    """Fictitious-domain scaling ``alpha_f = 10**-beta``."""

    beta: float = 6

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive so that 0 < alpha_f < 1")

    @property
    def alpha_f(self):
        return 10.0 ** (-self.beta)


def contains(domain, x):
    """Membership of a single point (returns bool) or an array of points."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("membership query needs finite coordinates")
    res = domain.contains(x)
    return bool(res[0]) if x.ndim == 1 else res


def alpha(domain, cfg, x):
    """Indicator value: 1 inside the physical domain, ``alpha_f`` outside."""
    x = np.asarray(x, dtype=float)
    res = np.where(domain.contains(x), 1.0, cfg.alpha_f)
    return float(res[0]) if x.ndim == 1 else res


def fill_ratio(domain, cell, tree_depth, n_per_axis=2):
    """Physical volume fraction of ``cell`` under the spacetree quadrature."""
    from .cutcell import composite_rule

    rule = composite_rule(domain, IndicatorConfig(), cell, tree_depth, n_per_axis)
    inside = rule.alpha == 1.0
    return float(np.sum(rule.weights[inside]) / cell.measure)


# --- textual CSG expressions -------------------------------------------------

_PRIMITIVES = ("halfspace", "disk", "sphere", "box", "union", "difference", "fullspace")


def _build(node):
    if not isinstance(node, ast.Call) or not isinstance(node.func, ast.Name):
        raise ValueError(f"unexpected CSG term: {ast.dump(node)}")
    name = node.func.id.lower()
    if name not in _PRIMITIVES:
        raise ValueError(f"unknown CSG primitive {name!r}; expected one of {_PRIMITIVES}")
    if name in ("union", "difference"):
        kids = [_build(a) for a in node.args]
        if name == "union":
            return Union(tuple(kids))
        if len(kids) < 2:
            raise ValueError("difference needs a base and at least one subtracted term")
        base = kids[0]
        sub = kids[1] if len(kids) == 2 else Union(tuple(kids[1:]))
        return Difference(base, sub)
    args = [ast.literal_eval(a) for a in node.args]
    if name == "fullspace":
        return FullSpace()
    if name == "halfspace":
        *normal, offset = args
        return HalfSpace(tuple(normal), float(offset))
    if name in ("disk", "sphere"):
        *center, radius = args
        return Ball(tuple(center), float(radius))
    # box(lo..., hi...)
    if len(args) % 2:
        raise ValueError("box needs an even number of coordinates")
    k = len(args) // 2
    return AxisBox(tuple(args[:k]), tuple(args[k:]))


def parse_csg(text):
    """Parse an expression such as ``difference(box(0,0,10,4), disk(3,2,0.5))``.

    Arguments of primitives are flat coordinate lists: ``halfspace(nx, ny, offset)``,
    ``disk(cx, cy, r)``, ``sphere(cx, cy, cz, r)``, ``box(lo..., hi...)``.
    """
    tree = ast.parse(text.strip(), mode="eval")
    return ImplicitDomain(_build(tree.body))


def to_csg(node):
    """Inverse of :func:`parse_csg` for round-tripping configs."""
    if isinstance(node, ImplicitDomain):
        node = node.root

    def fmt(vals):
        return ", ".join(repr(float(v)) for v in vals)

    if isinstance(node, FullSpace):
        return "fullspace()"
    if isinstance(node, HalfSpace):
        return f"halfspace({fmt(node.normal + (node.offset,))})"
    if isinstance(node, Ball):
        kind = "sphere" if len(node.center) == 3 else "disk"
        return f"{kind}({fmt(node.center + (node.radius,))})"
    if isinstance(node, AxisBox):
        return f"box({fmt(node.lo + node.hi)})"
    if isinstance(node, Union):
        return "union(" + ", ".join(to_csg(c) for c in node.children) + ")"
    if isinstance(node, Difference):
        return f"difference({to_csg(node.base)}, {to_csg(node.subtracted)})"
    raise TypeError(f"cannot serialise {type(node).__name__}")
