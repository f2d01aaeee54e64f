import numpy as np
import pytest
import scipy.sparse as sp

from obstacle_control import (
    GAMMA1,
    GAMMA2,
    ConfigurationError,
    assemble,
    build_grid,
    estimate_coercivity,
    export_coo,
    trace_norm,
)


def test_grid_2d_counts():
    g = build_grid(2, 4, "x=0")
    assert g.n_nodes == 16
    assert g.gamma1.size == 4
    assert np.allclose(g.coords[g.gamma1, 0], 0.0)
    assert g.gamma2.size == 8
    assert set(g.gamma1).isdisjoint(g.gamma2)


def test_boundary_partition_covers_boundary():
    g = build_grid(2, 6, "left,bottom")
    X = g.coords
    on_bd = (X[:, 0] == 0) | (X[:, 0] == 1) | (X[:, 1] == 0) | (X[:, 1] == 1)
    labelled = (g.labels == GAMMA1) | (g.labels == GAMMA2)
    assert np.array_equal(on_bd, labelled)


@pytest.mark.parametrize("bad", [(3, 5), (1, 2), (1, 4.5)])
def test_build_grid_rejects(bad):
    with pytest.raises(ConfigurationError):
        build_grid(*bad)


def test_1d_point_mass():
    p = assemble(build_grid(1, 9, "left"))
    C = p.C.toarray()
    assert C[0, 0] == 1.0
    assert np.count_nonzero(C) == 1


def test_matrices_symmetric_and_consistent(grid2d):
    p = assemble(grid2d)
    for m in (p.A, p.B_H, p.B_V, p.C):
        assert abs(m - m.T).max() < 1e-14
    assert abs(p.B_V - (p.A + p.B_H)).max() < 1e-14
    # constants are in the kernel of the Neumann stiffness, mass integrates to |Omega|
    one = np.ones(grid2d.n_nodes)
    assert np.abs(p.A @ one).max() < 1e-12
    assert one @ (p.B_H @ one) == pytest.approx(1.0, abs=1e-13)
    # Gamma_1 is the side x = 0 of length 1
    assert one @ (p.C @ one) == pytest.approx(1.0, abs=1e-13)


def test_stiffness_is_z_matrix(grid2d):
    A = assemble(grid2d).A.tocoo()
    off = A.row != A.col
    assert np.all(A.data[off] <= 1e-15)


def test_gamma2_flux_weights_length(grid2d):
    # three sides of length 1, minus the half cells at the two corners owned by Gamma_1
    p = assemble(grid2d, q=1.0)
    assert p.q_vec.sum() == pytest.approx(3.0 - 1 / 16, abs=1e-13)
    assert np.all(p.q_vec[grid2d.gamma1] == 0)


def test_lumped_mass_is_diagonal(grid1d):
    p = assemble(grid1d, mass="lumped")
    assert sp.triu(p.B_H, 1).nnz == 0
    assert p.B_H.sum() == pytest.approx(1.0)


def test_rhs_robin_contains_boundary_term(grid1d):
    p = assemble(grid1d, g=0.0, b=2.0, mode="robin", h=5.0)
    F = p.load()
    assert F[0] == pytest.approx(10.0)
    assert np.all(F[1:] == 0)


def test_mode_validation(grid1d):
    with pytest.raises(ConfigurationError):
        assemble(grid1d, mode="robin")
    with pytest.raises(ConfigurationError):
        assemble(grid1d, mode="neumann")
    with pytest.raises(ConfigurationError):
        assemble(grid1d, g=np.ones(3))


def test_coercivity_against_dense_eig(grid1d):
    import scipy.linalg as sla

    p = assemble(build_grid(1, 17, "left"))
    I = p.grid.not_gamma1
    ref = sla.eigh(p.A[I][:, I].toarray(), p.B_V[I][:, I].toarray(), eigvals_only=True)[0]
    assert estimate_coercivity(p) == pytest.approx(ref, rel=1e-7)
    pr = p.with_mode("robin", 10.0)
    K = (p.A + 10 * p.C).toarray()
    ref = sla.eigh(K, p.B_V.toarray(), eigvals_only=True)[0]
    assert estimate_coercivity(pr) == pytest.approx(ref, rel=1e-7)
    tn = np.sqrt(sla.eigh(p.C.toarray(), p.B_V.toarray(), eigvals_only=True)[-1])
    assert trace_norm(p) == pytest.approx(tn, rel=1e-8)


def test_coercivity_bounded_by_one(grid2d):
    p = assemble(grid2d)
    m = estimate_coercivity(p)
    assert 0 < m < 1


def test_export_coo_roundtrip(tmp_path):
    p = assemble(build_grid(2, 4, "left"))
    path = tmp_path / "A.txt"
    export_coo(p.A, path)
    data = np.loadtxt(path)
    M = sp.coo_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))),
                      shape=p.A.shape)
    assert abs(M - p.A).max() == 0
