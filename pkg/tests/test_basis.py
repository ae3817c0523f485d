import numpy as np
import pytest

from kinlab.basis import build_basis, kernel_projector, maxwellian, multi_indices


def test_maxwellian_pointwise():
    assert maxwellian(np.zeros(2)) == pytest.approx(1.0 / (2 * np.pi), abs=1e-15)
    assert maxwellian(np.zeros(3)) == pytest.approx((2 * np.pi) ** -1.5, abs=1e-15)


def test_maxwellian_normalization_and_second_moment():
    b2 = build_basis(2, 4)
    assert np.sum(b2.quad_weights) == pytest.approx(1.0, abs=1e-12)
    b3 = build_basis(3, 4)
    # Gaussian second-moment oracle: int |v|^2 M dv = d
    vsq = np.sum(b3.quad_nodes**2, axis=-1)
    assert b3.quad_weights @ vsq == pytest.approx(3.0, abs=1e-10)


@pytest.mark.parametrize(
    "d,K,size", [(2, 2, 6), (2, 6, 28), (3, 2, 10), (2, 8, 45), (3, 3, 20)]
)
def test_basis_sizes(d, K, size):
    assert len(multi_indices(d, K)) == size


def test_gram_identity(basis6):
    G = (basis6.eval_table * basis6.quad_weights[:, None]).T @ basis6.eval_table
    assert np.abs(G - np.eye(basis6.size)).max() < 1e-12


def test_gram_identity_3d():
    b = build_basis(3, 3)
    G = (b.eval_table * b.quad_weights[:, None]).T @ b.eval_table
    assert np.abs(G - np.eye(b.size)).max() < 1e-12


def test_rejects_low_degree_and_quadrature():
    with pytest.raises(ValueError):
        build_basis(2, 1)
    with pytest.raises(ValueError):
        build_basis(2, 4, quadrature_order=3)
    with pytest.raises(ValueError):
        build_basis(4, 4)


def test_kernel_projector_structure(basis6):
    P = kernel_projector(basis6)
    assert np.abs(P @ P - P).max() < 1e-12
    assert np.abs(P - P.T).max() < 1e-12
    assert np.trace(P) == pytest.approx(basis6.d + 2, abs=1e-12)


def test_kernel_projector_fixes_equilibrium(basis6):
    P = kernel_projector(basis6)
    e0 = np.zeros(basis6.size)
    e0[basis6.index_of[(0, 0)]] = 1.0       # coefficients of sqrt(M)
    assert np.abs(P @ e0 - e0).max() < 1e-14
    vv = np.zeros(basis6.size)
    vv[basis6.index_of[(1, 1)]] = 1.0       # v1 v2 sqrt(M), orthogonal by parity
    assert np.abs(P @ vv).max() < 1e-12


def test_kernel_projection_stable_across_degree():
    # coefficients of a fixed degree <= 2 function agree for K = 2 and K = 6
    vals = {}
    for K in (2, 4, 6):
        b = build_basis(2, K)
        f = 0.3 - 0.2 * b.quad_nodes[:, 0] + 0.1 * np.sum(b.quad_nodes**2, axis=-1)
        coeffs = kernel_projector(b) @ b.project(f)
        vals[K] = {a: c for a, c in zip(b.indices, coeffs)}
    for a, c in vals[2].items():
        assert vals[4][a] == pytest.approx(c, abs=1e-12)
        assert vals[6][a] == pytest.approx(c, abs=1e-12)


def test_velocity_matrix_matches_quadrature(basis6):
    V = basis6.velocity_matrix(0)
    assert np.abs(V - V.T).max() == 0.0
    Vquad = (basis6.eval_table * (basis6.quad_weights * basis6.quad_nodes[:, 0])[:, None]).T \
        @ basis6.eval_table
    assert np.abs(V - Vquad).max() < 1e-12


def test_eval_functions_include_gaussian(basis6):
    pts = np.array([[0.3, -1.2], [2.0, 0.5]])
    phi = basis6.eval_functions(pts)
    p = basis6.eval_poly(pts)
    assert np.allclose(phi, p * np.sqrt(maxwellian(pts))[:, None])
