"""End-to-end experiments: norm proxies, epsilon sweeps, decay and dichotomy.

This module wires the kinetic and fluid solvers together: it runs the
relaxation-to-limit sweep (kinetic solution against the lifted limit
solution, error measured in the weighted-supremum norm proxy), fits the
log-log convergence rate, measures the semigroup decay laws, and probes
the well-/ill-prepared dichotomy through the acoustic branch amplitudes.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import fluid as fluid_mod
from . import kinetic as kinetic_mod
from .grids import FluidTriple, KineticState
from .hydro import lift, viscosities, well_prepare
from .kinetic import KineticSolverError
from .spectral import (
    acoustic_speed,
    closed_form_projectors,
    estimate_kappa,
    fit_w_envelope,
    measure_W_decay,
    sharp_decay_rate,
)


@dataclass(frozen=True)
class NormSpec:
    """Parameters of the weighted-supremum norm proxy.

    ell is the Sobolev order in x, k the velocity weight exponent; the
    supremum over v is taken on a finite validation node set (quadrature
    nodes inside |v| <= node_radius plus the origin).
    """

    ell: float = 2.0
    k: float = 3.0
    node_radius: float = 6.0

    def validate(self, d):
        if not self.ell > d / 2:
            raise ValueError(f"ell > d/2 required (ell={self.ell}, d={d})")
        if not self.k > d / 2 + 1:
            raise ValueError(f"k > d/2+1 required (k={self.k}, d={d})")

    def nodes(self, basis):
        pts = basis.quad_nodes
        keep = np.linalg.norm(pts, axis=-1) <= self.node_radius
        return np.vstack([pts[keep], np.zeros((1, basis.d))])


def xellk_norm(state, spec):
    """max over nodes of <v>^k ||f(., v)||_{H^ell_x} with <v> = 1 + |v|."""
    spec.validate(state.grid.d)
    basis = state.basis
    nodes = spec.nodes(basis)
    phi = basis.eval_functions(nodes)                    # (n_nodes, N)
    slices = state.coeffs @ phi.T                        # grid.shape + (n_nodes,)
    w = state.grid.sobolev_weights(spec.ell)
    h_ell = np.sqrt(np.sum(np.abs(slices) ** 2 * w[..., None],
                           axis=tuple(range(state.grid.d))))
    weight = (1.0 + np.linalg.norm(nodes, axis=-1)) ** spec.k
    return float((weight * h_ell).max())


def fit_loglog_rate(eps_values, errors, drop_sigma=3.0):
    """Least-squares slope of log(err) vs log(eps).

    The largest eps may be dropped when its residual exceeds
    ``drop_sigma`` standard deviations of the remaining residuals
    (pre-asymptotic contamination).  Returns (slope, intercept,
    dropped_eps or None).  Requires >= 4 points.
    """
    eps_values = np.asarray(eps_values, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(eps_values) < 4:
        raise ValueError("rate fit requires at least 4 epsilon values")
    x = np.log(eps_values)
    y = np.log(errors)
    slope, intercept = np.polyfit(x, y, 1)
    dropped = None
    if len(eps_values) > 4:
        # leave-one-out check on the largest eps (pre-asymptotic candidate)
        imax = int(np.argmax(eps_values))
        keep = np.arange(len(eps_values)) != imax
        s1, i1 = np.polyfit(x[keep], y[keep], 1)
        sigma = max(float((y[keep] - (s1 * x[keep] + i1)).std()), 1e-6)
        if abs(y[imax] - (s1 * x[imax] + i1)) > drop_sigma * sigma:
            dropped = float(eps_values[imax])
            slope, intercept = s1, i1
    return float(slope), float(intercept), dropped


@dataclass(frozen=True)
class ConvergenceReport:
    eps_values: tuple
    times: np.ndarray
    errors: dict = field(repr=False)        # eps -> array over times
    sup_errors: dict
    failed: tuple
    slope: float
    intercept: float
    dropped_eps: float | None
    fingerprint: str


def _simulate_pair(data, model, coeffs, eps, T, dt, grid, snapshot_times,
                   kinetic_init, fluid_snapshots, spec):
    bar = well_prepare(data)
    init_triple = bar if kinetic_init == "prepared" else data
    g_in = lift(init_triple, model.basis)
    states = kinetic_mod.simulate(g_in, eps, T, dt, model,
                                  snapshot_times=snapshot_times)
    errs = []
    for st, fl in zip(states, fluid_snapshots):
        ref = lift(fl.triple(), model.basis)
        diff = KineticState(grid=grid, basis=model.basis,
                            coeffs=st.coeffs - ref.coeffs, time=st.time, eps=eps)
        errs.append(xellk_norm(diff, spec))
    return np.array(errs)


def convergence_sweep(data, model, eps_values, T, dt, spec=None,
                      snapshot_times=None, kinetic_init="prepared",
                      fingerprint=""):
    """Run the kinetic flow for each eps against the shared limit solution.

    Both solvers use the same grid, step and snapshot times; the limit
    solution starts from the well-prepared projection of ``data`` and the
    kinetic runs from its lift (or from the raw data when
    ``kinetic_init='raw'``, the ill-prepared configuration).  Failed runs
    are recorded; the rate fit needs at least 4 surviving eps values.
    """
    grid = data.grid
    spec = spec or NormSpec()
    spec.validate(grid.d)
    if snapshot_times is None:
        snapshot_times = np.linspace(0.0, T, 11)
    coeffs = viscosities(model)
    fluid_snaps = fluid_mod.nsf_simulate(data, T, dt, coeffs.mu1, coeffs.mu2,
                                         snapshot_times=snapshot_times)
    times = np.array([fs.time for fs in fluid_snaps])
    errors, sup_errors, failed = {}, {}, []
    for eps in eps_values:
        try:
            errs = _simulate_pair(data, model, coeffs, eps, T, dt, grid,
                                  snapshot_times, kinetic_init, fluid_snaps, spec)
            errors[eps] = errs
            sup_errors[eps] = float(errs.max())
        except KineticSolverError:
            failed.append(eps)
    slope = intercept = np.nan
    dropped = None
    if len(sup_errors) >= 4 and all(v > 0 for v in sup_errors.values()):
        eps_ok = sorted(sup_errors)
        slope, intercept, dropped = fit_loglog_rate(
            eps_ok, [sup_errors[e] for e in eps_ok])
    return ConvergenceReport(
        eps_values=tuple(eps_values),
        times=times,
        errors=errors,
        sup_errors=sup_errors,
        failed=tuple(failed),
        slope=slope,
        intercept=intercept,
        dropped_eps=dropped,
        fingerprint=fingerprint,
    )


# ---------------------------------------------------------------------------
# well-/ill-prepared dichotomy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AcousticModeFit:
    eps: float
    mode: tuple
    fitted_freq: float
    predicted_freq: float

    @property
    def rel_error(self):
        return abs(self.fitted_freq - self.predicted_freq) / self.predicted_freq


@dataclass(frozen=True)
class OscillationReport:
    fits: tuple
    acoustic_sup: float          # sup_t of the dispersive part norm
    acoustic_series: np.ndarray
    times: np.ndarray
    sup_errors: dict             # eps -> sup_t error vs limit (reported only)


def acoustic_amplitudes(model, g_in, eps, times, kappa=None):
    """Per-mode acoustic amplitudes of the dispersive semigroup part.

    For each retained mode the initial data is projected with the
    leading-order acoustic projectors (they annihilate well-prepared data
    identically) and propagated with the exact branch eigenvalue of the
    mode's symbol, i.e. the dispersive part of the linear semigroup.
    Returns {integer mode: {label: complex L^2_v amplitude series}}.
    """
    grid = g_in.grid
    times = np.asarray(times, dtype=float)
    if kappa is None:
        zeta0 = np.zeros(grid.d)
        zeta0[0] = 1.0
        kappa = estimate_kappa(model, zeta0)
    from .spectral import _classify_cluster, chi_cutoff  # internal reuse

    kfund = 2.0 * np.pi / grid.box
    k = grid.wavevectors().reshape(grid.d, -1).T
    out = {}
    flatg = g_in.coeffs.reshape(-1, model.size)
    for flat in range(grid.size):
        xi = k[flat]
        nrm = np.linalg.norm(xi)
        if nrm == 0.0:
            continue
        fhat = flatg[flat]
        if np.abs(fhat).max() < 1e-14:
            continue
        s = eps * nrm
        cut = chi_cutoff(s / kappa)
        if cut == 0.0:
            continue
        zeta = xi / nrm
        cl, groups = _classify_cluster(model, zeta, s)
        p0 = closed_form_projectors(model.basis, zeta)
        series = {}
        for j in (1, 2):
            lam = cl.eigenvalue(groups[j])
            comp = p0[j] @ fhat
            series[j] = np.linalg.norm(comp) * cut * np.exp(times * lam / eps**2)
        out[tuple(int(m) for m in np.rint(xi / kfund))] = series
    return out


def _fit_frequency(times, series):
    """Dominant angular frequency via averaged phase increments."""
    z = np.asarray(series)
    good = np.abs(z) > 1e-14
    if good.sum() < 3:
        return np.nan
    ratios = z[1:] / z[:-1]
    dt = np.diff(np.asarray(times))
    ang = np.angle(ratios[good[1:] & good[:-1]])
    step = dt[good[1:] & good[:-1]]
    return float(np.abs((ang / step).mean()))


def illprepared_experiment(data, model, eps_values, T, dt, spec=None,
                           n_times=256, run_sweep=True):
    """Oscillation frequencies of the acoustic components vs c |xi| / eps.

    ``data`` is used raw (ill-prepared content allowed); for each eps the
    acoustic amplitudes of the linear flow are fitted for their dominant
    frequency.  With ``run_sweep`` the full nonlinear error sweep against
    the limit solution is also recorded (reported, not asserted: on the
    torus the ill-prepared error need not vanish).
    """
    grid = data.grid
    d = grid.d
    c = acoustic_speed(d)
    g_in = lift(data, model.basis)
    fits = []
    acoustic_sup = 0.0
    series_store = None
    times_store = None
    for eps in eps_values:
        times = np.linspace(0.0, min(T, 50 * eps), n_times)
        amps = acoustic_amplitudes(model, g_in, eps, times)
        total = np.zeros(len(times))
        for mode, branches in amps.items():
            for j, series in branches.items():
                total += np.abs(series) ** 2
        total = np.sqrt(total)
        acoustic_sup = max(acoustic_sup, float(total.max()) if len(amps) else 0.0)
        if series_store is None:
            series_store, times_store = total, times
        for mode, branches in amps.items():
            nrm = np.linalg.norm(np.asarray(mode, dtype=float))
            predicted = c * nrm / eps
            fitted = _fit_frequency(times, branches[1])
            if np.isfinite(fitted):
                fits.append(AcousticModeFit(eps=eps, mode=mode,
                                            fitted_freq=fitted,
                                            predicted_freq=predicted))
    sup_errors = {}
    if run_sweep:
        report = convergence_sweep(data, model, eps_values, T, dt, spec=spec,
                                   kinetic_init="raw")
        sup_errors = report.sup_errors
    return OscillationReport(
        fits=tuple(fits),
        acoustic_sup=acoustic_sup,
        acoustic_series=series_store if series_store is not None else np.zeros(0),
        times=times_store if times_store is not None else np.zeros(0),
        sup_errors=sup_errors,
    )


# ---------------------------------------------------------------------------
# decay suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayReport:
    eps_values: tuple
    sharp_rates: dict
    sharp_ratios: tuple
    w_times: np.ndarray
    w_samples: dict                    # eps -> norms
    w_sigma: dict
    w_logC: dict
    w_max_resid: dict
    kernel_output_max: float


def shear_mode_vector(basis):
    """Coefficient vector of the v1 v2 element: orthogonal to the kernel
    and, to leading order, to the acoustic branches (clean decay probe)."""
    vec = np.zeros(basis.size)
    a = [0] * basis.d
    a[0] = 1
    a[1] = 1
    vec[basis.index_of[tuple(a)]] = 1.0
    return vec


def decay_suite(model, eps_values, xi=None, w_times=None, w_modes=None):
    """Remainder decay rates and rescaled off-manifold decay samples.

    Checks aggregated by the caller: the fitted remainder rate must scale
    like 1/eps^2 (ratio ~ 4 under halving), and the off-manifold samples
    must follow a C e^{-sigma t}/sqrt(t) envelope with sigma > 0, stable
    in eps.
    """
    d = model.basis.d
    if xi is None:
        xi = np.zeros(d)
        xi[0] = 1.0
    rates = {}
    for eps in eps_values:
        rate, _, _ = sharp_decay_rate(model, eps, xi)
        rates[eps] = rate
    eps_sorted = sorted(eps_values, reverse=True)
    ratios = []
    for a, b in zip(eps_sorted, eps_sorted[1:]):
        if abs(a / b - 2.0) < 1e-12:
            ratios.append(rates[b] / rates[a])
    if w_times is None:
        # sample where sqrt(t)*||W|| already decays: after 1/(2 beta_min)
        from .spectral import eigenbranches

        beta_min = min(
            b.beta for b in eigenbranches(model, xi / np.linalg.norm(xi))
        )
        w_times = np.linspace(0.75 / beta_min, 6.0 / beta_min, 24)
    vec = shear_mode_vector(model.basis)
    if w_modes is None:
        w_modes = [(1,) + (0,) * (d - 1), (0, 1) + (0,) * (d - 2)]
    f_modes = {m: vec for m in w_modes}
    w_samples, w_sigma, w_logC, w_resid = {}, {}, {}, {}
    for eps in eps_values:
        norms = measure_W_decay(model, eps, f_modes, w_times)
        sigma, logC, resid = fit_w_envelope(w_times, norms)
        w_samples[eps] = norms
        w_sigma[eps] = sigma
        w_logC[eps] = logC
        w_resid[eps] = resid
    # equilibrium data is annihilated identically
    ker = model.basis.kernel_coefficients()
    knorm = measure_W_decay(model, eps_values[0], {w_modes[0]: ker[0]}, w_times)
    return DecayReport(
        eps_values=tuple(eps_values),
        sharp_rates=rates,
        sharp_ratios=tuple(ratios),
        w_times=np.asarray(w_times),
        w_samples=w_samples,
        w_sigma=w_sigma,
        w_logC=w_logC,
        w_max_resid=w_resid,
        kernel_output_max=float(knorm.max()),
    )


# ---------------------------------------------------------------------------
# deterministic data generators
# ---------------------------------------------------------------------------


def default_wellprepared_data(grid, amplitude=0.3, theta_amplitude=0.2):
    """Smooth well-prepared field: single-cell vortex plus a temperature mode."""
    X = grid.coordinates()
    tri = fluid_mod.taylor_green(grid, amplitude=amplitude)
    theta = theta_amplitude * np.sin(X[0]) * np.sin(X[1])
    return FluidTriple(grid=grid, rho=-theta, u=tri.u, theta=theta)


def default_illprepared_data(grid, amplitude=0.3):
    """Mean-free data with acoustic content (rho + theta != 0, div u != 0)."""
    X = grid.coordinates()
    rho = amplitude * np.cos(X[0])
    u = np.zeros((grid.d,) + grid.shape)
    u[0] = amplitude * np.sin(X[0])          # gradient part, killed by Leray
    u[1] = amplitude * np.sin(X[0]) * np.cos(X[1])
    theta = np.zeros(grid.shape)
    return FluidTriple(grid=grid, rho=rho, u=u, theta=theta)


def random_mean_free_triple(grid, rng, amplitude=0.2, kmax=3):
    """Band-limited random smooth fields, mean free, for property tests."""
    def fld():
        fhat = np.zeros(grid.shape, dtype=complex)
        idx = np.fft.fftfreq(grid.n, 1.0 / grid.n).astype(int)
        for ii in range(grid.n):
            for jj in range(grid.n):
                if abs(idx[ii]) <= kmax and abs(idx[jj]) <= kmax and (ii, jj) != (0, 0):
                    fhat[ii, jj] = rng.normal() + 1j * rng.normal()
        f = grid.to_physical(fhat).real
        return amplitude * f / max(np.abs(f).max(), 1e-12)

    u = np.stack([fld() for _ in range(grid.d)])
    return FluidTriple(grid=grid, rho=fld(), u=u, theta=fld())


def config_fingerprint(payload):
    """Stable hex fingerprint of a flat key=value mapping."""
    text = "\n".join(f"{k}={payload[k]}" for k in sorted(payload))
    return hashlib.sha256(text.encode()).hexdigest()[:16]
