"""Transport coefficients, well-preparation and kinetic/fluid conversions.

The momentum viscosity mu1 and thermal diffusivity mu2 come from the two
auxiliary problems

    L Phi = |v|^2/d Id - v (x) v,      L Psi = v ((d+2)/2 - |v|^2/2),

solved on the orthogonal complement of the equilibrium manifold, and the
Dirichlet forms

    mu1 = -<Phi, L Phi> / ((d-1)(d+2)),   mu2 = -2 <Psi, L Psi> / (d(d+2)).

The minus sign makes both coefficients positive (L is negative
semidefinite); the diffusive eigenvalue branches of the streaming-collision
symbol provide an independent cross-check (beta_4 = mu1, beta_3 = mu2).
"""

from dataclasses import dataclass

import numpy as np

from .grids import FluidTriple, KineticState, leray_project


@dataclass(frozen=True)
class PhiPsi:
    """Solutions of the auxiliary problems, as basis coefficients."""

    phi: np.ndarray        # (d, d, N)
    psi: np.ndarray        # (d, N)
    phi_residual: float
    psi_residual: float


@dataclass(frozen=True)
class HydroCoefficients:
    mu1: float
    mu2: float
    phi_residual: float
    psi_residual: float
    beta3: float | None = None
    beta4: float | None = None
    warning: str | None = None


def _pseudo_inverse_apply(L, rhs, cutoff=1e-8):
    w, Q = np.linalg.eigh(0.5 * (L + L.T))
    keep = w < -cutoff
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    return Q @ (inv * (Q.T @ rhs))


def solve_phi_psi(model, orth_tol=1e-8):
    """Solve the Phi/Psi problems on (Ker L)^perp via the spectral pseudo-inverse.

    The right-hand sides are exact degree-2/3 polynomials; a non-orthogonal
    right-hand side indicates a defective assembly and raises.
    """
    basis = model.basis
    d = basis.d
    if basis.K < 3:
        raise ValueError("the Psi problem needs polynomial degree K >= 3")
    ker = basis.kernel_coefficients()
    nodes = basis.quad_nodes
    vsq = np.sum(nodes * nodes, axis=-1)

    phi = np.zeros((d, d, basis.size))
    phi_res = 0.0
    for i in range(d):
        for j in range(d):
            vals = (vsq / d if i == j else 0.0) - nodes[:, i] * nodes[:, j]
            rhs = basis.project(vals)
            if np.abs(ker @ rhs).max() > orth_tol:
                raise RuntimeError(
                    "Phi right-hand side is not orthogonal to the collision "
                    "invariants; the assembled L is defective"
                )
            phi[i, j] = _pseudo_inverse_apply(model.L, rhs)
            phi_res = max(phi_res, float(np.abs(model.L @ phi[i, j] - rhs).max()))

    psi = np.zeros((d, basis.size))
    psi_res = 0.0
    for i in range(d):
        vals = nodes[:, i] * ((d + 2) / 2.0 - vsq / 2.0)
        rhs = basis.project(vals)
        if np.abs(ker @ rhs).max() > orth_tol:
            raise RuntimeError(
                "Psi right-hand side is not orthogonal to the collision "
                "invariants; the assembled L is defective"
            )
        psi[i] = _pseudo_inverse_apply(model.L, rhs)
        psi_res = max(psi_res, float(np.abs(model.L @ psi[i] - rhs).max()))

    return PhiPsi(phi=phi, psi=psi, phi_residual=phi_res, psi_residual=psi_res)


def viscosities(model, cross_validate=False):
    """Momentum viscosity and thermal diffusivity of the collision model.

    With ``cross_validate`` the diffusive branch curvatures are fitted from
    the symbol spectrum and compared; a >10% mismatch is recorded as a
    warning (not an error).
    """
    d = model.basis.d
    pp = solve_phi_psi(model)
    mu1 = -sum(
        float(pp.phi[i, j] @ (model.L @ pp.phi[i, j]))
        for i in range(d)
        for j in range(d)
    ) / ((d - 1) * (d + 2))
    mu2 = -2.0 * sum(
        float(pp.psi[i] @ (model.L @ pp.psi[i])) for i in range(d)
    ) / (d * (d + 2))
    beta3 = beta4 = None
    warning = None
    if cross_validate:
        from .spectral import eigenbranches

        zeta = np.zeros(d)
        zeta[0] = 1.0
        branches = {b.label: b for b in eigenbranches(model, zeta)}
        beta3, beta4 = branches[3].beta, branches[4].beta
        msgs = []
        if abs(mu1 - beta4) > 0.10 * mu1:
            msgs.append(f"mu1={mu1:.6g} vs beta4={beta4:.6g}")
        if abs(mu2 - beta3) > 0.10 * mu2:
            msgs.append(f"mu2={mu2:.6g} vs beta3={beta3:.6g}")
        if msgs:
            warning = "branch cross-validation mismatch >10%: " + "; ".join(msgs)
    return HydroCoefficients(
        mu1=float(mu1),
        mu2=float(mu2),
        phi_residual=pp.phi_residual,
        psi_residual=pp.psi_residual,
        beta3=beta3,
        beta4=beta4,
        warning=warning,
    )


# ---------------------------------------------------------------------------
# fluid <-> kinetic conversions
# ---------------------------------------------------------------------------


def _moment_rows(basis):
    """Rows mapping coefficients to (rho, u_1..u_d, theta)."""
    ker = basis.kernel_coefficients()
    rows = ker.copy()
    d = basis.d
    rows[d + 1] *= np.sqrt(2.0 * d) / d      # theta = (1/d) <(|v|^2-d) .>
    return rows


def _lift_columns(basis):
    """Columns mapping (rho, u, theta) to coefficients of the equilibrium lift."""
    ker = basis.kernel_coefficients()
    cols = ker.copy()
    d = basis.d
    cols[d + 1] *= np.sqrt(2.0 * d) / 2.0    # (1/2)(|v|^2-d) theta
    return cols


def well_prepare(triple):
    """Project a fluid triple onto the well-prepared manifold.

    Fourier-exact: rho_bar = 2/(d+2) rho - d/(d+2) theta, u replaced by its
    divergence-free part (zero mode untouched), theta_bar = -rho_bar.
    Idempotent, and the identity on already well-prepared data.
    """
    g = triple.grid
    d = g.d
    rho_h, u_h, th_h = triple.spectral()
    bar = (2.0 / (d + 2)) * rho_h - (d / (d + 2)) * th_h
    u_h = leray_project(u_h, g)
    rho = g.to_physical(bar).real
    u = g.to_physical(u_h, axes=tuple(a + 1 for a in g.axes)).real
    return FluidTriple(grid=g, rho=rho, u=u, theta=-rho)


def lift(triple, basis):
    """Kinetic state sqrt(M) (rho + u.v + (|v|^2-d)/2 theta) as coefficients."""
    g = triple.grid
    cols = _lift_columns(basis)
    coeffs = np.zeros(g.shape + (basis.size,), dtype=complex)
    rho_h, u_h, th_h = triple.spectral()
    coeffs += rho_h[..., None] * cols[0]
    for j in range(g.d):
        coeffs += u_h[j][..., None] * cols[1 + j]
    coeffs += th_h[..., None] * cols[g.d + 1]
    return KineticState(grid=g, basis=basis, coeffs=coeffs)


def moments(state):
    """Fluid moments (rho, u, theta) of a kinetic state, Fourier-exact."""
    basis = state.basis
    g = state.grid
    rows = _moment_rows(basis)
    d = g.d
    fields = np.einsum("mn,...n->m...", rows, state.coeffs)
    sp_axes = tuple(a + 1 for a in g.axes)
    phys = g.to_physical(fields, axes=sp_axes).real
    return FluidTriple(grid=g, rho=phys[0], u=phys[1 : 1 + d], theta=phys[d + 1])
