import numpy as np
import pytest
import scipy.sparse as sp

from oracles import brute_element, random_cut_configs
from wavecell.assembly import (Material, PartitionedSystem, assemble, assemble_force,
                               cut_element_matrices, element_matrices, hrz_lump,
                               uncut_element_matrices, write_coo)
from wavecell.cutcell import CellKind, composite_rule
from wavecell.geometry import AxisBox, Ball, Difference, HalfSpace, ImplicitDomain, IndicatorConfig
from wavecell.mesh import build_mesh
from wavecell.quadrature import ShapeSet
from wavecell.signals import gaussian_bell


def test_1d_linear_chain():
    m = build_mesh(AxisBox((0.0,), (2.0,)), (2,), 1)
    s = assemble(m, Material())
    np.testing.assert_allclose(s.K.toarray(), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]], atol=1e-14)
    np.testing.assert_allclose(s.M.toarray(), np.diag([0.5, 1, 0.5]), atol=1e-14)


def test_bilinear_square_stiffness():
    _, K = uncut_element_matrices(ShapeSet(1, 2), (1.0, 1.0), Material())
    ref = np.array([[4, -1, -1, -2], [-1, 4, -2, -1], [-1, -2, 4, -1], [-2, -1, -1, 4]]) / 6
    np.testing.assert_allclose(K, ref, atol=1e-14)


@pytest.mark.parametrize("p", [1, 2, 3, 5])
def test_uncut_mass_diagonal_and_total(p):
    M, K = uncut_element_matrices(ShapeSet(p, 2), (0.5, 2.0), Material(rho=3.0, c=2.0))
    assert np.count_nonzero(M - np.diag(np.diag(M))) == 0
    assert M.sum() == pytest.approx(3.0, rel=1e-13)
    np.testing.assert_allclose(K.sum(axis=1), 0.0, atol=1e-10)  # constants have no energy
    assert np.linalg.eigvalsh(K).min() > -1e-10


@pytest.mark.parametrize("dom,box,p,depth", random_cut_configs(10, seed=4))
def test_cut_element_matches_brute_force(dom, box, p, depth):
    cfg = IndicatorConfig()
    mat = Material(rho=2.0, c=1.5)
    rule = composite_rule(dom, cfg, box, depth, p + 1)
    M, K = cut_element_matrices(rule, box, ShapeSet(p, 2), mat)
    Mb, Kb = brute_element(rule, box, p, mat.rho, mat.c)
    assert np.abs(M - Mb).max() <= 1e-8 * np.abs(Mb).max()
    assert np.abs(K - Kb).max() <= 1e-8 * np.abs(Kb).max()


def test_element_matrices_empty_rejected():
    with pytest.raises(ValueError):
        element_matrices(None, AxisBox((0, 0), (1, 1)), CellKind.EMPTY, Material(),
                         IndicatorConfig(), ShapeSet(1, 2), 2)


@pytest.mark.parametrize("seed", range(5))
def test_hrz_preserves_mass(seed):
    rng = np.random.default_rng(seed)
    B = rng.random((6, 6))
    M = B @ B.T + np.eye(6)
    D = hrz_lump(M)
    assert np.count_nonzero(D - np.diag(np.diag(D))) == 0
    assert D.sum() == pytest.approx(M.sum(), rel=1e-14)
    assert np.all(np.diag(D) > 0)


def test_hrz_needs_positive_trace():
    with pytest.raises(ValueError):
        hrz_lump(np.zeros((2, 2)))


def test_global_mass_total_with_indicator():
    dom = ImplicitDomain(HalfSpace((0.0, 1.0), 0.75))
    cfg = IndicatorConfig(3)
    m = build_mesh(AxisBox((0, 0), (2, 1)), (2, 2), 2, dom, 4)
    s = assemble(m, Material(), cfg)
    assert s.M.sum() == pytest.approx(1.5 + 0.5e-3, rel=1e-12)
    assert abs(s.K - s.K.T).max() == 0.0


def test_partition_structure_and_blocks():
    dom = ImplicitDomain(Difference(AxisBox((0, 0), (4, 2)), Ball((2.0, 1.0), 0.3)))
    m = build_mesh(AxisBox((0, 0), (4, 2)), (4, 2), 3, dom, 4)
    s = assemble(m, Material(), IndicatorConfig())
    d, c = s.partition.I_d, s.partition.I_c
    Mdd = s.M[d][:, d]
    assert abs(Mdd - sp.diags(Mdd.diagonal())).max() == 0.0
    assert s.M[d][:, c].nnz == 0 or abs(s.M[d][:, c]).max() == 0.0
    np.testing.assert_allclose(s.M_dd, Mdd.diagonal())
    np.testing.assert_allclose((s.K_d @ np.ones(s.n_dof)), 0.0, atol=1e-10)
    assert s.K_dd.shape == (len(d), len(d)) and s.K_cd.shape == (len(c), len(d))


def test_hrz_global_is_diagonal():
    dom = ImplicitDomain(Difference(AxisBox((0, 0), (4, 2)), Ball((2.0, 1.0), 0.3)))
    m = build_mesh(AxisBox((0, 0), (4, 2)), (4, 2), 2, dom, 4)
    s = assemble(m, Material(), lumping="hrz")
    assert s.mass_is_diagonal
    assert s.partition.n_c > 0


def test_from_matrices_rejects_coupled_diagonal_rows():
    M = sp.csr_matrix([[1.0, 0.1], [0.1, 1.0]])
    with pytest.raises(ValueError):
        PartitionedSystem.from_matrices(M, sp.identity(2), np.zeros(2), [0])


def test_force_integrates_bell():
    m = build_mesh(AxisBox((0, 0), (2, 2)), (4, 4), 4)
    src = lambda x: gaussian_bell(x, (1.0, 1.0), 0.1, 10.0)
    f = assemble_force(m, src, n_per_axis=12)
    assert f.sum() == pytest.approx(10 * 2 * np.pi * 0.01, rel=1e-4)


def test_write_coo(tmp_path):
    A = sp.csr_matrix([[1.0, 0.0], [2.0, 3.0]])
    path = tmp_path / "a.coo"
    write_coo(A, path)
    assert path.read_text().strip()
