import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavecell.cutcell import CellKind
from wavecell.geometry import AxisBox, Ball, Difference, HalfSpace, ImplicitDomain
from wavecell.mesh import build_mesh, evaluate_field, interpolation_matrix, locate, partition_dofs


@pytest.mark.parametrize("cells,p,expected", [((2, 1), 1, 6), ((1, 1), 3, 16), ((3,), 2, 7),
                                              ((2, 2, 2), 1, 27), ((4, 3), 5, 21 * 16)])
def test_dof_counts(cells, p, expected):
    ext = AxisBox((0.0,) * len(cells), tuple(float(n) for n in cells))
    assert build_mesh(ext, cells, p).n_dof == expected


def test_lexicographic_numbering_x_fastest():
    m = build_mesh(AxisBox((0, 0), (2, 1)), (2, 1), 1)
    np.testing.assert_allclose(m.node_coords[:3], [[0, 0], [1, 0], [2, 0]])
    np.testing.assert_array_equal(m.dof_map[1], [1, 2, 4, 5])


@pytest.mark.parametrize("bad", [dict(cells=(0, 1)), dict(cells=(1,)), dict(p=0)])
def test_invalid_meshes(bad):
    args = dict(cells=(2, 2), p=1)
    args.update(bad)
    with pytest.raises(ValueError):
        build_mesh(AxisBox((0, 0), (1, 1)), args["cells"], args["p"])


def test_all_empty_rejected():
    dom = ImplicitDomain(Ball((10.0, 10.0), 0.5))
    with pytest.raises(ValueError):
        build_mesh(AxisBox((0, 0), (1, 1)), (2, 2), 1, dom, 3)


def test_empty_cells_drop_their_nodes():
    dom = ImplicitDomain(HalfSpace((1.0, 0.0), 1.0))  # x <= 1
    m = build_mesh(AxisBox((0, 0), (3, 1)), (3, 1), 1, dom, 3)
    assert list(m.kinds) == [CellKind.UNCUT, CellKind.CUT, CellKind.EMPTY] or \
        list(m.kinds) == [CellKind.UNCUT, CellKind.EMPTY, CellKind.EMPTY]
    assert np.all(m.dof_map[m.kinds == CellKind.EMPTY] == -1)
    assert m.node_coords[:, 0].max() <= 2.0


def test_partition_oracle():
    # hole inside the middle cell of a 3 x 1 strip
    dom = ImplicitDomain(Difference(AxisBox((0, 0), (3, 1)), Ball((1.5, 0.5), 0.2)))
    m = build_mesh(AxisBox((0, 0), (3, 1)), (3, 1), 2, dom, 3)
    part = partition_dofs(m)
    touched = np.unique(m.dof_map[1])
    np.testing.assert_array_equal(part.I_c, touched)
    assert part.n_d + part.n_c == m.n_dof
    assert len(np.intersect1d(part.I_d, part.I_c)) == 0


def test_no_cut_cells_all_diagonal():
    part = partition_dofs(build_mesh(AxisBox((0, 0), (1, 1)), (2, 2), 2))
    assert part.n_c == 0 and part.n_d == 25


def test_histogram_buckets():
    dom = ImplicitDomain(Difference(AxisBox((0, 0), (3, 1)), Ball((1.5, 0.5), 0.2)))
    m = build_mesh(AxisBox((0, 0), (4, 1)), (4, 1), 1, dom, 4)
    h = m.fill_ratio_histogram()
    assert len(h) == 12 and h.sum() == 4
    assert h[0] == 1 and h[-1] == 2 and h[9] == 1  # eta = 1 - 0.04 pi


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
def test_polynomial_reproduction(a, b, p_extra):
    p = max(a, b, 1) + p_extra
    m = build_mesh(AxisBox((0.0, -1.0), (2.0, 1.0)), (2, 3), p)
    f = lambda x: x[:, 0] ** a * x[:, 1] ** b
    coeffs = f(m.node_coords)
    pts = np.random.default_rng(a + 7 * b).uniform([0, -1], [2, 1], (20, 2))
    np.testing.assert_allclose(evaluate_field(m, coeffs, pts), f(pts), atol=1e-10)


def test_locate_shared_face_goes_to_lower_cell():
    m = build_mesh(AxisBox((0, 0), (2, 1)), (2, 1), 1)
    cells, _ = locate(m, np.array([[1.0, 0.5], [0.0, 0.0], [2.0, 1.0]]))
    np.testing.assert_array_equal(cells, [0, 0, 1])


def test_locate_outside_raises():
    m = build_mesh(AxisBox((0, 0), (1, 1)), (1, 1), 1)
    with pytest.raises(ValueError):
        locate(m, np.array([[1.5, 0.5]]))


def test_interpolation_rows_sum_to_one():
    m = build_mesh(AxisBox((0, 0, 0), (1, 1, 1)), (2, 2, 2), 2)
    P = interpolation_matrix(m, np.random.default_rng(1).random((30, 3)))
    np.testing.assert_allclose(np.asarray(P.sum(axis=1)).ravel(), 1.0, atol=1e-12)
