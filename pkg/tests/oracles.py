"""Independent reference computations used by several test modules."""
import numpy as np
from numpy.polynomial import legendre as L
from scipy.interpolate import lagrange

from wavecell.cutcell import composite_rule
from wavecell.geometry import AxisBox, Ball, HalfSpace, ImplicitDomain, IndicatorConfig


def gll_nodes(p):
    """Endpoints plus roots of P_p' from numpy's Legendre class."""
    inner = L.Legendre.basis(p).deriv().roots()
    return np.concatenate([[-1.0], np.sort(inner.real), [1.0]])


def brute_element(rule, box, p, rho=1.0, c=1.0):
    """Dense mass/stiffness by explicit loops over 2D tensor basis functions."""
    nodes = gll_nodes(p)
    polys = [lagrange(nodes, np.eye(p + 1)[i]) for i in range(p + 1)]
    derivs = [q.deriv() for q in polys]
    lo, h = np.asarray(box.lo), np.asarray(box.size)
    xi = 2.0 * (rule.points - lo) / h - 1.0
    n = (p + 1) ** 2
    phi = np.empty((n, len(xi)))
    gx = np.empty_like(phi)
    gy = np.empty_like(phi)
    for j in range(p + 1):
        for i in range(p + 1):
            k = i + (p + 1) * j
            phi[k] = polys[i](xi[:, 0]) * polys[j](xi[:, 1])
            gx[k] = derivs[i](xi[:, 0]) * polys[j](xi[:, 1]) * 2.0 / h[0]
            gy[k] = polys[i](xi[:, 0]) * derivs[j](xi[:, 1]) * 2.0 / h[1]
    w = rule.weights * rule.alpha * rho
    M = np.zeros((n, n))
    K = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            M[a, b] = np.sum(w * phi[a] * phi[b])
            K[a, b] = c**2 * np.sum(w * (gx[a] * gx[b] + gy[a] * gy[b]))
    return M, K


def random_cut_configs(n, seed=0):
    """``(domain, box, p, depth)`` with a boundary crossing the box."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        lo = rng.uniform(-1, 1, 2)
        h = rng.uniform(0.3, 2.0, 2)
        box = AxisBox(tuple(lo), tuple(lo + h))
        if rng.random() < 0.5:
            ang = rng.uniform(0, 2 * np.pi)
            nrm = np.array([np.cos(ang), np.sin(ang)])
            mid = lo + h * rng.uniform(0.2, 0.8, 2)
            dom = ImplicitDomain(HalfSpace(tuple(nrm), float(nrm @ mid)))
        else:
            ctr = lo + h * rng.uniform(0, 1, 2)
            dom = ImplicitDomain(Ball(tuple(ctr), float(rng.uniform(0.2, 1.0) * h.min())))
        p = int(rng.integers(1, 5))
        depth = int(rng.integers(1, 5))
        rule = composite_rule(dom, IndicatorConfig(), box, depth, p + 1)
        inside = rule.alpha == 1.0
        if inside.any() and not inside.all():
            out.append((dom, box, p, depth))
    return out
