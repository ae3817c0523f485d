"""Command-line front end.

Subcommands map one-to-one onto the laboratory experiments:

    spectrum            eigenvalue branches, fitted coefficients, projectors
    viscosity           transport coefficients with the branch cross-check
    simulate-boltzmann  kinetic run, snapshots + summary CSV
    simulate-nsf        limit-system run, snapshots + summary CSV
    converge            epsilon sweep against the limit solution, rate fit
    decay               semigroup decay laws
    ill-prepared        acoustic oscillation frequencies and dichotomy data

Exit codes: 0 success, 1 validation error, 2 numerical abort.
"""

import argparse
import os
import sys
import time
from contextlib import contextmanager

import numpy as np

from . import harness
from .basis import build_basis
from .collision import BGK, HARD_SPHERE, load_or_assemble
from .config import ConfigError, parse_config
from .fluid import FluidSolverError, nsf_simulate
from .grids import SpatialGrid
from .hydro import lift, viscosities, well_prepare
from .kinetic import (
    KineticSolverError,
    simulate,
    zero_mode_invariants,
    positivity_diagnostic,
)
from .reports import fmt, write_csv, write_json, write_snapshot
from .spectral import BranchTrackingError, eigenbranches, estimate_kappa, projector_family


class _RunLog:
    """Plain-text run log with wall-clock timings per phase."""

    def __init__(self, path):
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        self.fh = open(path, "a")

    def line(self, msg):
        self.fh.write(msg + "\n")
        self.fh.flush()

    @contextmanager
    def phase(self, name):
        t0 = time.perf_counter()
        self.line(f"phase {name}: start")
        yield
        self.line(f"phase {name}: done in {time.perf_counter() - t0:.3f}s")

    def close(self):
        self.fh.close()


def _add_common(p):
    p.add_argument("--config", help="path to a flat key = value config file")
    for key, help_ in [
        ("d", "dimension (2 or 3)"),
        ("K", "max polynomial degree of the velocity basis"),
        ("grid-n", "spatial modes per axis (power of two)"),
        ("box", "box length"),
        ("eps", "comma-separated Knudsen numbers"),
        ("dt", "time step"),
        ("T", "final time"),
        ("ell", "Sobolev order of the error norm"),
        ("k", "velocity weight exponent of the error norm"),
        ("model", "collision model: hard_sphere | bgk"),
        ("rate", "BGK relaxation rate"),
        ("amplitude", "initial data amplitude"),
        ("seed", "random seed"),
        ("output-dir", "directory for CSV/JSON/snapshot outputs"),
        ("cache-dir", "directory for collision-tensor caches"),
    ]:
        p.add_argument(f"--{key}", help=help_)


def _config_from_args(args):
    overrides = {
        k.replace("-", "_"): getattr(args, k.replace("-", "_"))
        for k in (
            "d", "K", "grid_n", "box", "eps", "dt", "T", "ell", "k",
            "model", "rate", "amplitude", "seed", "output_dir", "cache_dir",
        )
    }
    return parse_config(args.config, overrides)


def _model_for(cfg, log):
    basis = build_basis(cfg.d, cfg.K)
    kind = HARD_SPHERE if cfg.model == "hard_sphere" else BGK
    with log.phase(f"collision model ({cfg.model}, d={cfg.d}, K={cfg.K})"):
        model, hit = load_or_assemble(
            cfg.cache_dir, basis, kind=kind, rate=cfg.rate, log=log.line
        )
    log.line(f"collision cache {'hit' if hit else 'miss'}")
    return model


def _tag(cfg, name):
    return f"{name}_{cfg.d}_{cfg.K}_{cfg.grid_n}"


def _grid(cfg):
    return SpatialGrid(d=cfg.d, n=cfg.grid_n, box=cfg.box)


def _norm_spec(cfg):
    return harness.NormSpec(ell=cfg.ell, k=cfg.k)


def cmd_spectrum(cfg, log):
    model = _model_for(cfg, log)
    zeta = np.zeros(cfg.d)
    zeta[0] = 1.0
    with log.phase("eigenvalue branches"):
        kappa = estimate_kappa(model, zeta)
        branches = eigenbranches(model, zeta, kappa=kappa)
        family = projector_family(model, zeta, kappa=kappa)
    rows = []
    for b in branches:
        for s, lam in zip(b.s_samples, b.lambdas):
            rows.append([b.label, s, lam.real, lam.imag])
    out = os.path.join(cfg.output_dir, _tag(cfg, "branches") + ".csv")
    write_csv(out, ["j", "xi", "re_lambda", "im_lambda"], rows)
    payload = {
        "model": cfg.model,
        "d": cfg.d,
        "K": cfg.K,
        "kappa": kappa,
        "spectral_gap": model.spectral_gap,
        "fingerprint": cfg.fingerprint(),
    }
    for b in branches:
        payload[f"alpha{b.label}"] = b.alpha
        payload[f"beta{b.label}"] = b.beta
        payload[f"residual{b.label}"] = b.residual_const
    from .basis import kernel_projector

    payload["projector_sum_defect"] = float(
        np.abs(sum(family.leading.values()) - kernel_projector(model.basis)).max()
    )
    write_json(os.path.join(cfg.output_dir, _tag(cfg, "branches") + ".json"), payload)
    log.line(f"wrote {out}")


def cmd_viscosity(cfg, log):
    model = _model_for(cfg, log)
    with log.phase("transport coefficients"):
        coeffs = viscosities(model, cross_validate=True)
        zeta = np.zeros(cfg.d)
        zeta[0] = 1.0
        branches = {b.label: b for b in eigenbranches(model, zeta)}
    payload = {
        "model": cfg.model,
        "d": cfg.d,
        "K": cfg.K,
        "mu1": coeffs.mu1,
        "mu2": coeffs.mu2,
        "residuals": {"phi": coeffs.phi_residual, "psi": coeffs.psi_residual},
        "warning": coeffs.warning,
        "fingerprint": cfg.fingerprint(),
    }
    for j, b in branches.items():
        payload[f"alpha{j}"] = b.alpha
        payload[f"beta{j}"] = b.beta
    out = os.path.join(cfg.output_dir, _tag(cfg, "viscosity") + ".json")
    write_json(out, payload)
    log.line(f"wrote {out}")


def _snapshot_rows(states, spec):
    rows = []
    for st in states:
        inv = zero_mode_invariants(st)
        rows.append(
            [st.time, st.l2_norm(), *inv, harness.xellk_norm(st, spec)]
        )
    return rows


def cmd_simulate_boltzmann(cfg, log):
    model = _model_for(cfg, log)
    grid = _grid(cfg)
    data = well_prepare(harness.default_wellprepared_data(grid, amplitude=cfg.amplitude))
    eps = cfg.eps[0]
    g_in = lift(data, model.basis)
    snap_times = np.linspace(0.0, cfg.T, 9)
    with log.phase(f"kinetic run (eps={eps})"):
        states = simulate(g_in, eps, cfg.T, cfg.dt, model, snapshot_times=snap_times)
    spec = _norm_spec(cfg)
    d = cfg.d
    header = ["t", "l2", "mass", *[f"momentum{i+1}" for i in range(d)], "energy", "xellk"]
    out = os.path.join(cfg.output_dir, _tag(cfg, "boltzmann") + ".csv")
    write_csv(out, header, _snapshot_rows(states, spec))
    for st in states:
        write_snapshot(
            os.path.join(cfg.output_dir, _tag(cfg, "boltzmann") + f"_t{st.time:.6f}.snap"),
            st,
        )
    log.line(f"positivity negative-node fraction at T: "
             f"{positivity_diagnostic(states[-1], eps):.3e}")
    log.line(f"wrote {out}")


def cmd_simulate_nsf(cfg, log):
    model = _model_for(cfg, log)
    grid = _grid(cfg)
    coeffs = viscosities(model)
    data = harness.default_wellprepared_data(grid, amplitude=cfg.amplitude)
    snap_times = np.linspace(0.0, cfg.T, 9)
    with log.phase("limit-system run"):
        states = nsf_simulate(data, cfg.T, cfg.dt, coeffs.mu1, coeffs.mu2,
                              snapshot_times=snap_times)
    k_half = np.sqrt(grid.k_squared())
    rows = []
    for st in states:
        h_half = np.sqrt(np.sum(k_half * np.sum(np.abs(st.uhat) ** 2, axis=0)))
        rows.append([st.time, np.sqrt(st.energy()),
                     np.sqrt(np.sum(np.abs(st.thetahat) ** 2)),
                     st.divergence_defect(), h_half])
    out = os.path.join(cfg.output_dir, _tag(cfg, "nsf") + ".csv")
    # u_hhalf: the critical-regularity size of u, reported as a diagnostic
    write_csv(out, ["t", "u_l2", "theta_l2", "div_defect", "u_hhalf"], rows)
    # kinetic lift of the final limit state, in the shared snapshot format
    final = lift(states[-1].triple(), model.basis)
    final.time = states[-1].time
    write_snapshot(
        os.path.join(cfg.output_dir, _tag(cfg, "nsf") + f"_t{final.time:.6f}.snap"),
        final,
    )
    log.line(f"wrote {out}")


def cmd_converge(cfg, log):
    model = _model_for(cfg, log)
    grid = _grid(cfg)
    data = harness.default_wellprepared_data(grid, amplitude=cfg.amplitude)
    with log.phase(f"convergence sweep over eps={list(cfg.eps)}"):
        report = harness.convergence_sweep(
            data, model, cfg.eps, cfg.T, cfg.dt, spec=_norm_spec(cfg),
            fingerprint=cfg.fingerprint(),
        )
    tag = _tag(cfg, "converge")
    sup_rows = [[e, report.sup_errors[e]] for e in sorted(report.sup_errors, reverse=True)]
    write_csv(os.path.join(cfg.output_dir, tag + ".csv"), ["eps", "sup_error"], sup_rows)
    ts_rows = []
    for e in sorted(report.errors, reverse=True):
        for t, val in zip(report.times, report.errors[e]):
            ts_rows.append([e, t, val])
    write_csv(os.path.join(cfg.output_dir, tag + "_timeseries.csv"),
              ["eps", "t", "error"], ts_rows)
    monotone = all(
        report.sup_errors[a] > report.sup_errors[b]
        for a, b in zip(sorted(report.sup_errors, reverse=True),
                        sorted(report.sup_errors, reverse=True)[1:])
    )
    write_json(os.path.join(cfg.output_dir, tag + ".json"), {
        "config": cfg.as_dict(),
        "eps": list(report.eps_values),
        "failed": list(report.failed),
        "sup_errors": {fmt(e): report.sup_errors[e] for e in report.sup_errors},
        "slope": report.slope,
        "intercept": report.intercept,
        "dropped_eps": report.dropped_eps,
        "fingerprint": report.fingerprint,
        "monotone": monotone,
        "pass": bool(monotone and not report.failed and report.slope >= 0.4),
    })
    log.line(f"fitted slope {report.slope:.4f}")


def cmd_decay(cfg, log):
    model = _model_for(cfg, log)
    with log.phase("decay suite"):
        report = harness.decay_suite(model, list(cfg.eps))
    tag = _tag(cfg, "decay")
    rows = [[e, report.sharp_rates[e]] for e in report.eps_values]
    write_csv(os.path.join(cfg.output_dir, tag + "_sharp.csv"), ["eps", "rate"], rows)
    wrows = []
    for e in report.eps_values:
        for t, v in zip(report.w_times, report.w_samples[e]):
            wrows.append([e, t, v])
    write_csv(os.path.join(cfg.output_dir, tag + "_w.csv"), ["eps", "t", "norm"], wrows)
    write_json(os.path.join(cfg.output_dir, tag + ".json"), {
        "config": cfg.as_dict(),
        "sharp_rates": {fmt(e): report.sharp_rates[e] for e in report.eps_values},
        "sharp_ratios": list(report.sharp_ratios),
        "w_sigma": {fmt(e): report.w_sigma[e] for e in report.eps_values},
        "w_logC": {fmt(e): report.w_logC[e] for e in report.eps_values},
        "w_max_resid": {fmt(e): report.w_max_resid[e] for e in report.eps_values},
        "kernel_output_max": report.kernel_output_max,
        "fingerprint": cfg.fingerprint(),
        "pass": bool(
            all(3.6 <= r <= 4.4 for r in report.sharp_ratios)
            and all(report.w_sigma[e] > 0 for e in report.eps_values)
        ),
    })
    log.line(f"sharp-rate ratios: {report.sharp_ratios}")


def cmd_ill_prepared(cfg, log):
    model = _model_for(cfg, log)
    grid = _grid(cfg)
    raw = harness.default_illprepared_data(grid, amplitude=cfg.amplitude)
    wp = well_prepare(harness.default_wellprepared_data(grid, amplitude=cfg.amplitude))
    with log.phase("ill-prepared experiment"):
        report = harness.illprepared_experiment(raw, model, cfg.eps, cfg.T, cfg.dt,
                                                spec=_norm_spec(cfg))
        wp_report = harness.illprepared_experiment(wp, model, cfg.eps, cfg.T, cfg.dt,
                                                   spec=_norm_spec(cfg), run_sweep=False)
    tag = _tag(cfg, "illprepared")
    rows = [
        [f.eps, *f.mode, f.fitted_freq, f.predicted_freq, f.rel_error]
        for f in report.fits
    ]
    dim_cols = [f"m{i+1}" for i in range(cfg.d)]
    write_csv(os.path.join(cfg.output_dir, tag + ".csv"),
              ["eps", *dim_cols, "fitted_freq", "predicted_freq", "rel_error"], rows)
    max_rel = max((f.rel_error for f in report.fits), default=np.nan)
    write_json(os.path.join(cfg.output_dir, tag + ".json"), {
        "config": cfg.as_dict(),
        "max_rel_error": max_rel,
        "wellprepared_acoustic_sup": wp_report.acoustic_sup,
        "illprepared_sup_errors": {fmt(e): v for e, v in report.sup_errors.items()},
        "fingerprint": cfg.fingerprint(),
        "pass": bool(max_rel <= 0.05 and wp_report.acoustic_sup <= 1e-6),
    })
    log.line(f"wrote {tag}.csv")


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "viscosity": cmd_viscosity,
    "simulate-boltzmann": cmd_simulate_boltzmann,
    "simulate-nsf": cmd_simulate_nsf,
    "converge": cmd_converge,
    "decay": cmd_decay,
    "ill-prepared": cmd_ill_prepared,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="kinlab",
        description="kinetic-to-hydrodynamic limit laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        _add_common(p)
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    log = _RunLog(os.path.join(cfg.output_dir, "run.log"))
    log.line(f"command {args.command} fingerprint {cfg.fingerprint()}")
    try:
        _COMMANDS[args.command](cfg, log)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (KineticSolverError, FluidSolverError, BranchTrackingError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 2
    finally:
        log.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
