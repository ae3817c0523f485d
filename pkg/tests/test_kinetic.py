import numpy as np
import pytest

from kinlab.grids import KineticState, zero_state
from kinlab.harness import default_wellprepared_data
from kinlab.hydro import lift, well_prepare
from kinlab.kinetic import (
    KineticSolverError,
    _phi_block,
    build_propagators,
    direct_linear_evolution,
    simulate,
    step,
    zero_mode_invariants,
    positivity_diagnostic,
)


@pytest.fixture(scope="module")
def cache16(bgk6, grid16):
    return build_propagators(bgk6, 0.5, 1.0 / 64.0, grid16)


def _wp_state(grid, basis, amplitude=0.3):
    return lift(well_prepare(default_wellprepared_data(grid, amplitude=amplitude)), basis)


def test_phi_functions_at_zero():
    E, P1, P2 = _phi_block(np.zeros((4, 4)))
    assert np.allclose(E, np.eye(4), atol=1e-14)
    assert np.allclose(P1, np.eye(4), atol=1e-14)           # phi1(0) = Id
    assert np.allclose(P2, 0.5 * np.eye(4), atol=1e-14)     # phi2(0) = Id/2


def test_propagator_kernel_invariance(bgk6, grid16, cache16):
    # at xi = 0 the exponential restricted to Ker L is the identity
    ker = bgk6.basis.kernel_coefficients()
    E0 = cache16.exp[0, 0]
    assert np.abs(E0 @ ker.T - ker.T).max() < 1e-12


def test_propagator_contractive(cache16):
    # dissipativity: 2-norm of every cached exponential <= 1
    N = cache16.exp.shape[-1]
    flat = cache16.exp.reshape(-1, N, N)
    radii = np.linalg.svd(flat, compute_uv=False)[:, 0]
    assert radii.max() <= 1 + 1e-10


def test_propagator_rejects_bad_arguments(bgk6, grid16):
    with pytest.raises(ValueError):
        build_propagators(bgk6, 0.1, -0.5, grid16)


def test_zero_state_is_fixed_point(bgk6, grid16, cache16):
    st = zero_state(grid16, bgk6.basis, eps=0.5)
    out = step(st, cache16, bgk6)
    assert np.abs(out.coeffs).max() == 0.0
    assert out.time == pytest.approx(1.0 / 64.0)


def test_linear_run_matches_direct_exponential(hs6, grid16):
    g0 = _wp_state(grid16, hs6.basis)
    eps, T, dt = 0.5, 0.25, 1.0 / 64.0
    states = simulate(g0, eps, T, dt, hs6, gamma_on=False, snapshot_times=[T])
    ref = direct_linear_evolution(g0, eps, T, hs6)
    assert np.abs(states[-1].coeffs - ref.coeffs).max() < 1e-10


def test_linear_flow_dissipates_l2(hs6, grid16):
    g0 = _wp_state(grid16, hs6.basis)
    # kernel-orthogonal component decays monotonically; full norm never grows
    eps, dt = 0.5, 1.0 / 64.0
    cache = build_propagators(hs6, eps, dt, grid16)
    st = KineticState(grid=grid16, basis=hs6.basis, coeffs=g0.coeffs.copy(), eps=eps)
    prev = st.l2_norm()
    for _ in range(16):
        st = step(st, cache, hs6, gamma_on=False)
        cur = st.l2_norm()
        assert cur <= prev * (1 + 1e-10)
        prev = cur


def test_kernel_orthogonal_data_decays_monotonically(hs6, grid16, rng):
    from kinlab.basis import kernel_projector

    Q = np.eye(hs6.size) - kernel_projector(hs6.basis)
    coeffs = np.zeros(grid16.shape + (hs6.size,), dtype=complex)
    for mode in [(1, 0), (0, 1), (2, 1)]:
        vec = rng.normal(size=hs6.size) + 1j * rng.normal(size=hs6.size)
        coeffs[grid16.mode_index(mode)] = Q @ vec
    st = KineticState(grid=grid16, basis=hs6.basis, coeffs=coeffs, eps=0.5)
    cache = build_propagators(hs6, 0.5, 1.0 / 64.0, grid16)
    prev = st.l2_norm()
    for _ in range(12):
        st = step(st, cache, hs6, gamma_on=False)
        cur = st.l2_norm()
        assert cur < prev
        prev = cur


def test_conservation_of_zero_mode_moments(hs6, grid32):
    g0 = _wp_state(grid32, hs6.basis)
    states = simulate(g0, 0.2, 1.0, 1.0 / 256.0, hs6, snapshot_times=[0.0, 1.0])
    i0 = zero_mode_invariants(states[0])
    i1 = zero_mode_invariants(states[-1])
    assert np.abs(i1 - i0).max() <= 1e-8        # drift per unit time over T=1


def test_reality_preserved(hs6, grid16):
    g0 = _wp_state(grid16, hs6.basis)
    states = simulate(g0, 0.2, 0.25, 1.0 / 128.0, hs6, snapshot_times=[0.25])
    assert states[-1].reality_defect() <= 1e-10


def test_vortex_data_stays_bounded(hs6, grid32):
    g0 = _wp_state(grid32, hs6.basis)
    states = simulate(g0, 0.1, 1.0, 1.0 / 256.0, hs6,
                      snapshot_times=np.linspace(0, 1, 5))
    norms = [st.l2_norm() for st in states]
    assert np.isfinite(norms).all()
    assert max(norms) <= 2.0 * norms[0]


def test_dt_self_convergence_second_order(hs6, grid16):
    g0 = _wp_state(grid16, hs6.basis)
    eps, T = 0.5, 0.25
    sols = {}
    for dt in (1.0 / 32, 1.0 / 64, 1.0 / 128):
        sols[dt] = simulate(g0, eps, T, dt, hs6, snapshot_times=[T])[-1].coeffs
    e1 = np.linalg.norm(sols[1.0 / 32] - sols[1.0 / 64])
    e2 = np.linalg.norm(sols[1.0 / 64] - sols[1.0 / 128])
    order = np.log2(e1 / e2)
    assert 1.8 <= order <= 2.2


def test_eps_uniform_boundedness(hs6, grid32):
    g0 = _wp_state(grid32, hs6.basis)
    norm0 = g0.l2_norm()
    sups = []
    for eps in (0.4, 0.2, 0.1, 0.05):
        states = simulate(g0, eps, 0.25, 1.0 / 256.0, hs6,
                          snapshot_times=np.linspace(0, 0.25, 6))
        sups.append(max(st.l2_norm() for st in states))
    assert max(sups) <= 2.0 * norm0
    assert max(sups) / min(sups) <= 2.0


def test_norm_blowup_aborts(hs6, grid16):
    g0 = _wp_state(grid16, hs6.basis, amplitude=2e4)
    with pytest.raises(KineticSolverError):
        simulate(g0, 0.1, 0.5, 1.0 / 64.0, hs6)


def test_bad_horizon_rejected(hs6, grid16):
    g0 = _wp_state(grid16, hs6.basis)
    with pytest.raises(ValueError):
        simulate(g0, 0.1, 0.1001, 1.0 / 64.0, hs6)


def test_mismatched_cache_rejected(bgk6, grid16, cache16):
    st = zero_state(grid16, bgk6.basis, eps=0.25)   # cache was built for 0.5
    with pytest.raises(ValueError):
        step(st, cache16, bgk6)


def test_positivity_diagnostic_clean_for_small_data(hs6, grid16):
    g0 = _wp_state(grid16, hs6.basis, amplitude=0.05)
    assert positivity_diagnostic(g0, 0.1) < 1e-8
    g_big = _wp_state(grid16, hs6.basis, amplitude=50.0)
    assert positivity_diagnostic(g_big, 0.5) > 1e-3
