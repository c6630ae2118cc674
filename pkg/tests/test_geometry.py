import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavecell.geometry import (AxisBox, Ball, Difference, FullSpace, HalfSpace, ImplicitDomain,
                               IndicatorConfig, Union, alpha, contains, fill_ratio, parse_csg,
                               to_csg)
from wavecell.scenarios import plate_domain, plate_holes

coord = st.floats(-5, 5, allow_nan=False)


def test_halfspace_membership_and_normalization():
    h = HalfSpace((0.0, 2.0), 1.0)  # y <= 0.5 after normalizing
    np.testing.assert_allclose(h.normal, (0.0, 1.0))
    assert contains(ImplicitDomain(h), (3.0, 0.5))
    assert not contains(ImplicitDomain(h), (3.0, 0.51))


def test_zero_normal_rejected():
    with pytest.raises(ValueError):
        HalfSpace((0.0, 0.0), 1.0)


@pytest.mark.parametrize("r", [0.0, -1.0])
def test_ball_radius_must_be_positive(r):
    with pytest.raises(ValueError):
        Ball((0.0, 0.0), r)


def test_box_rejects_inverted_corners():
    with pytest.raises(ValueError):
        AxisBox((0.0, 1.0), (1.0, 0.5))


def test_difference_keeps_hole_boundary():
    # the physical domain is closed: a point on the hole rim belongs to it
    dom = ImplicitDomain(Difference(AxisBox((0, 0), (4, 4)), Ball((2, 2), 1)))
    assert contains(dom, (3.0, 2.0))
    assert not contains(dom, (2.5, 2.0))
    assert contains(dom, (0.0, 0.0))


@given(coord, coord)
def test_union_is_logical_or(x, y):
    a, b = Ball((0, 0), 1.0), AxisBox((0, 0), (2, 3))
    p = np.array([[x, y]])
    assert Union((a, b)).member(p)[0] == (a.member(p)[0] or b.member(p)[0])


@given(coord, coord)
def test_difference_complement(x, y):
    base, hole = AxisBox((-3, -3), (3, 3)), Ball((0.5, 0), 1.2)
    p = np.array([[x, y]])
    inside = Difference(base, hole).member(p)[0]
    if inside:
        assert base.member(p)[0]
    if hole.member(p, closed=False)[0]:
        assert not inside


def test_non_finite_point_rejected():
    with pytest.raises(ValueError):
        contains(ImplicitDomain(FullSpace()), (np.nan, 0.0))


def test_alpha_values():
    dom = ImplicitDomain(Ball((0, 0), 1))
    cfg = IndicatorConfig(6)
    assert alpha(dom, cfg, (0.0, 0.0)) == 1.0
    assert alpha(dom, cfg, (2.0, 0.0)) == pytest.approx(1e-6)


def test_beta_must_be_positive():
    with pytest.raises(ValueError):
        IndicatorConfig(0)


def test_plate_hole_center_is_fictitious():
    holes = plate_holes(3)
    dom = plate_domain(holes)
    assert not contains(dom, holes[0, :2])
    assert contains(dom, (0.5, 2.0))


@pytest.mark.parametrize("eta", [0.25, 0.5, 0.75])
def test_fill_ratio_dyadic_halfspace_exact(eta):
    dom = ImplicitDomain(HalfSpace((0.0, 1.0), eta))
    assert fill_ratio(dom, AxisBox((0, 0), (1, 1)), 4) == pytest.approx(eta, abs=1e-14)


def test_fill_ratio_disk_converges():
    dom = ImplicitDomain(Ball((0.0, 0.0), 0.8))
    cell = AxisBox((0, 0), (1, 1))
    exact = np.pi * 0.8**2 / 4
    errs = [abs(fill_ratio(dom, cell, d) - exact) for d in (3, 5, 7)]
    assert errs[2] < errs[0] and errs[2] < 5e-3


@pytest.mark.parametrize("text", [
    "difference(box(0, 0, 10, 4), disk(3, 2, 0.5), disk(6, 1, 0.3))",
    "union(halfspace(0, 1, 0.5), sphere(0, 0, 0, 1))",
    "fullspace()",
])
def test_csg_round_trip(text):
    dom = parse_csg(text)
    again = parse_csg(to_csg(dom))
    pts = np.random.default_rng(0).uniform(-1, 11, (500, 3 if "sphere" in text else 2))
    if "sphere" in text:
        return  # mixed dimensions are only checked for parseability
    np.testing.assert_array_equal(dom.contains(pts), again.contains(pts))


@pytest.mark.parametrize("bad", ["cube(1, 2)", "difference(box(0,0,1,1))", "box(0, 0, 1)", "1 + 2"])
def test_csg_errors(bad):
    with pytest.raises(ValueError):
        parse_csg(bad)
