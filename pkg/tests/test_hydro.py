import numpy as np
import pytest

from kinlab.basis import build_basis, kernel_projector
from kinlab.collision import assemble_bgk, assemble_hard_sphere
from kinlab.grids import FluidTriple
from kinlab.harness import default_wellprepared_data, random_mean_free_triple
from kinlab.hydro import lift, moments, solve_phi_psi, viscosities, well_prepare
from kinlab.spectral import projector_family


def _tensor_rhs_coeffs(basis, i, j):
    nodes = basis.quad_nodes
    vsq = np.sum(nodes**2, axis=-1)
    vals = (vsq / basis.d if i == j else 0.0) - nodes[:, i] * nodes[:, j]
    return basis.project(vals)


def test_bgk_phi_is_negated_rhs(bgk6, basis6):
    pp = solve_phi_psi(bgk6)
    for i in range(2):
        for j in range(2):
            rhs = _tensor_rhs_coeffs(basis6, i, j)
            assert np.abs(pp.phi[i, j] + rhs).max() < 1e-12


def test_phi_orthogonal_to_kernel(hs6, basis6):
    pp = solve_phi_psi(hs6)
    ker = basis6.kernel_coefficients()
    assert np.abs(ker @ pp.phi.reshape(-1, basis6.size).T).max() < 1e-10
    assert np.abs(ker @ pp.psi.T).max() < 1e-10


def test_phi_psi_residuals(hs6):
    pp = solve_phi_psi(hs6)
    assert pp.phi_residual < 1e-8
    assert pp.psi_residual < 1e-8


def test_psi_needs_cubic_degree():
    b = build_basis(2, 2)
    m = assemble_bgk(b, 1.0)
    with pytest.raises(ValueError):
        solve_phi_psi(m)


def test_bgk_viscosities_match_gaussian_moment_oracle(bgk6, basis6):
    # oracle: mu1 = ||A||^2_{L2(M)} / ((d-1)(d+2)), A = |v|^2/d Id - v x v,
    # computed by raw quadrature, no collision code involved
    nodes, w = basis6.quad_nodes, basis6.quad_weights
    vsq = np.sum(nodes**2, axis=-1)
    a_sq = 0.0
    for i in range(2):
        for j in range(2):
            Aij = (vsq / 2.0 if i == j else 0.0) - nodes[:, i] * nodes[:, j]
            a_sq += w @ Aij**2
    mu1_oracle = a_sq / ((2 - 1) * (2 + 2))
    psi_sq = 0.0
    for i in range(2):
        Psi_i = nodes[:, i] * (2.0 - vsq / 2.0)
        psi_sq += w @ Psi_i**2
    mu2_oracle = 2.0 * psi_sq / (2.0 * (2 + 2))
    assert mu1_oracle == pytest.approx(1.0, abs=1e-12)
    assert mu2_oracle == pytest.approx(1.0, abs=1e-12)
    co = viscosities(bgk6)
    assert co.mu1 == pytest.approx(mu1_oracle, abs=1e-10)
    assert co.mu2 == pytest.approx(mu2_oracle, abs=1e-10)


def test_hard_sphere_viscosities_cross_validate(hs6):
    co = viscosities(hs6, cross_validate=True)
    assert co.mu1 > 0 and co.mu2 > 0
    assert co.warning is None
    assert abs(co.mu1 - co.beta4) / co.mu1 <= 0.05
    assert abs(co.mu2 - co.beta3) / co.mu2 <= 0.05


def test_viscosity_stability_under_refinement(hs8):
    b10 = build_basis(2, 10)
    hs10 = assemble_hard_sphere(b10)
    c8 = viscosities(hs8)
    c10 = viscosities(hs10)
    assert abs(c10.mu1 - c8.mu1) / c10.mu1 < 0.01
    assert abs(c10.mu2 - c8.mu2) / c10.mu2 < 0.01


# ---------------------------------------------------------------------------
# well-preparation
# ---------------------------------------------------------------------------


def test_well_prepare_fixed_point(grid16):
    data = default_wellprepared_data(grid16)   # already satisfies constraints
    out = well_prepare(data)
    assert np.abs(out.rho - data.rho).max() < 1e-14
    assert np.abs(out.u - data.u).max() < 1e-14
    assert np.abs(out.theta - data.theta).max() < 1e-14


def test_well_prepare_enforces_constraints(grid16, rng):
    data = random_mean_free_triple(grid16, rng)
    out = well_prepare(data)
    assert np.abs(out.rho + out.theta).max() == 0.0
    k = grid16.wavevectors()
    _, uh, _ = out.spectral()
    assert np.abs(np.sum(k * uh, axis=0)).max() < 1e-13


def test_well_prepare_idempotent(grid16, rng):
    data = random_mean_free_triple(grid16, rng)
    once = well_prepare(data)
    twice = well_prepare(once)
    assert np.abs(once.rho - twice.rho).max() < 1e-13
    assert np.abs(once.u - twice.u).max() < 1e-13


def test_well_prepare_bar_combination(grid16, rng):
    data = random_mean_free_triple(grid16, rng)
    out = well_prepare(data)
    want = 0.5 * (data.rho - data.theta)       # 2/(d+2) rho - d/(d+2) theta, d=2
    assert np.abs(out.rho - want).max() < 1e-12


# ---------------------------------------------------------------------------
# lift / moments
# ---------------------------------------------------------------------------


def test_lift_zero(grid16, basis6):
    z = FluidTriple(grid16, np.zeros(grid16.shape),
                    np.zeros((2,) + grid16.shape), np.zeros(grid16.shape))
    st = lift(z, basis6)
    assert np.abs(st.coeffs).max() == 0.0


def test_lift_lands_in_kernel(grid16, basis6, rng):
    data = random_mean_free_triple(grid16, rng)
    st = lift(data, basis6)
    P = kernel_projector(basis6)
    proj = st.coeffs @ P.T
    assert np.abs(proj - st.coeffs).max() < 1e-14


def test_moments_roundtrip(grid16, basis6, rng):
    data = random_mean_free_triple(grid16, rng)
    out = moments(lift(data, basis6))
    assert np.abs(out.rho - data.rho).max() < 1e-12
    assert np.abs(out.u - data.u).max() < 1e-12
    assert np.abs(out.theta - data.theta).max() < 1e-12


def test_moments_vanish_on_cubic_elements(grid16, basis6):
    coeffs = np.zeros(grid16.shape + (basis6.size,), dtype=complex)
    for alpha in basis6.indices:
        if sum(alpha) == 3:
            coeffs[..., basis6.index_of[alpha]] = 1.0
    from kinlab.grids import KineticState

    st = KineticState(grid=grid16, basis=basis6, coeffs=coeffs)
    out = moments(st)
    assert np.abs(out.rho).max() < 1e-12
    assert np.abs(out.u).max() < 1e-12
    assert np.abs(out.theta).max() < 1e-12


def test_moments_of_uniform_equilibrium(grid16, basis6):
    from kinlab.grids import KineticState

    coeffs = np.zeros(grid16.shape + (basis6.size,), dtype=complex)
    coeffs[(0,) * 2 + (basis6.index_of[(0, 0)],)] = 1.0   # sqrt(M), uniform in x
    st = KineticState(grid=grid16, basis=basis6, coeffs=coeffs)
    out = moments(st)
    assert np.abs(out.rho - 1.0).max() < 1e-12
    assert np.abs(out.u).max() < 1e-12
    assert np.abs(out.theta).max() < 1e-12


def test_moments_linear_superposition(grid16, basis6, rng):
    a = random_mean_free_triple(grid16, rng)
    b = random_mean_free_triple(grid16, rng)
    sa, sb = lift(a, basis6), lift(b, basis6)
    from kinlab.grids import KineticState

    combo = KineticState(grid=grid16, basis=basis6,
                         coeffs=2.0 * sa.coeffs - 0.5 * sb.coeffs)
    out = moments(combo)
    assert np.abs(out.rho - (2 * a.rho - 0.5 * b.rho)).max() < 1e-12
    assert np.abs(out.u - (2 * a.u - 0.5 * b.u)).max() < 1e-12


def test_projection_law_matches_numerical_projectors(grid16, basis6, bgk6, rng):
    # lift(well_prepare(.)) equals the fiberwise (P3^0 + P4^0) of lift(.)
    data = random_mean_free_triple(grid16, rng, kmax=2)
    lifted_bar = lift(well_prepare(data), basis6).coeffs
    raw = lift(data, basis6).coeffs
    k = grid16.wavevectors().reshape(2, -1).T
    flat_raw = raw.reshape(-1, basis6.size)
    flat_bar = lifted_bar.reshape(-1, basis6.size)
    fams = {}
    worst = 0.0
    for idx in range(grid16.size):
        xi = k[idx]
        nrm = np.linalg.norm(xi)
        if nrm == 0.0:
            continue
        key = tuple(np.round(xi / nrm, 12))
        if key not in fams:
            fam = projector_family(bgk6, xi / nrm)
            fams[key] = fam.leading[3] + fam.leading[4]
        out = fams[key] @ flat_raw[idx]
        worst = max(worst, np.abs(out - flat_bar[idx]).max())
    assert worst < 1e-6
