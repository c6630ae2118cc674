import numpy as np
import pytest

from wavecell.cutcell import (CellKind, build_spacetree, classify_cell, composite_rule)
from wavecell.geometry import AxisBox, Ball, Difference, HalfSpace, ImplicitDomain, IndicatorConfig

UNIT = AxisBox((0.0, 0.0), (1.0, 1.0))


def test_uncut_cell_is_single_leaf():
    tree = build_spacetree(ImplicitDomain(HalfSpace((0, 1), 5.0)), UNIT, 6)
    assert len(tree) == 1 and tree.all_inside


def test_leaves_tile_the_cell():
    dom = ImplicitDomain(Ball((0.3, 0.4), 0.35))
    tree = build_spacetree(dom, UNIT, 5)
    assert tree.measures.sum() == pytest.approx(1.0, abs=1e-14)
    assert tree.depth.max() == 5


def test_tree_depth_zero_gives_gauss_rule():
    rule = composite_rule(ImplicitDomain(HalfSpace((0, 1), 0.5)), IndicatorConfig(), UNIT, 0, 3)
    assert len(rule.weights) == 9
    assert rule.weights.sum() == pytest.approx(1.0)


def test_composite_rule_integrates_polynomials_on_leaves():
    dom = ImplicitDomain(Ball((0.0, 0.0), 0.7))
    rule = composite_rule(dom, IndicatorConfig(), UNIT, 4, 3)
    f = rule.points[:, 0] ** 3 * rule.points[:, 1] ** 2
    assert rule.weights @ f == pytest.approx(1 / 12, rel=1e-12)


def test_alpha_weighting():
    cfg = IndicatorConfig(3)
    rule = composite_rule(ImplicitDomain(HalfSpace((0, 1), 0.5)), cfg, UNIT, 3, 2)
    assert set(np.unique(rule.alpha)) == {1.0, 1e-3}
    assert np.sum(rule.weights * rule.alpha) == pytest.approx(0.5 + 0.5e-3, rel=1e-12)


def test_classify_kinds():
    cell = AxisBox((2.0, 2.0), (3.0, 3.0))
    far = ImplicitDomain(Ball((0.0, 0.0), 0.5))
    assert classify_cell(far, cell, 4).kind == CellKind.EMPTY
    inside = ImplicitDomain(Ball((2.5, 2.5), 3.0))
    assert classify_cell(inside, cell, 4).kind == CellKind.UNCUT
    cut = classify_cell(ImplicitDomain(HalfSpace((0, 1), 2.3)), cell, 4)
    assert cut.kind == CellKind.CUT and cut.fill_ratio == pytest.approx(0.3, abs=1 / 16)


def test_tiny_sliver_below_threshold_is_empty():
    dom = ImplicitDomain(HalfSpace((0, 1), 1e-12))
    c = classify_cell(dom, UNIT, 2, eps=1e-10)
    assert c.kind in (CellKind.EMPTY, CellKind.CUT)
    assert c.fill_ratio < 1e-10 or c.kind == CellKind.CUT


def test_center_sample_detects_inner_hole():
    # a hole that misses every corner is still seen through the center sample
    dom = ImplicitDomain(Difference(AxisBox((-1, -1), (2, 2)), Ball((0.5, 0.5), 0.2)))
    assert classify_cell(dom, UNIT, 4).kind == CellKind.CUT


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1])
def test_eps_range(eps):
    with pytest.raises(ValueError):
        classify_cell(ImplicitDomain(HalfSpace((0, 1), 0.5)), UNIT, 2, eps=eps)


def test_negative_depth_rejected():
    with pytest.raises(ValueError):
        build_spacetree(ImplicitDomain(HalfSpace((0, 1), 0.5)), UNIT, -1)


def test_3d_tree():
    cube = AxisBox((0, 0, 0), (1, 1, 1))
    rule = composite_rule(ImplicitDomain(Ball((0, 0, 0), 1.0)), IndicatorConfig(), cube, 5, 2)
    inside = np.sum(rule.weights[rule.alpha == 1.0])
    assert inside == pytest.approx(np.pi / 6, rel=2e-2)
