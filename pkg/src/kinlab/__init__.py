"""kinlab: a numerical laboratory for kinetic equations near equilibrium.

Builds Galerkin collision operators (hard spheres and BGK), analyzes the
small-frequency spectral branches of the streaming-collision symbol,
integrates the rescaled kinetic equation with exponential integrators,
solves the incompressible limit system, and measures the convergence of
one to the other as the Knudsen number vanishes.
"""

from .basis import VelocityBasis, build_basis, kernel_projector, maxwellian
from .collision import (
    BGK,
    HARD_SPHERE,
    CollisionModel,
    apply_gamma,
    assemble_bgk,
    assemble_hard_sphere,
    build_model,
    load_or_assemble,
    nu,
    nu_bounds,
)
from .config import RunConfig, parse_config
from .fluid import FluidState, nsf_simulate, nsf_step, taylor_green
from .grids import FluidTriple, KineticState, SpatialGrid, zero_state
from .harness import (
    NormSpec,
    convergence_sweep,
    decay_suite,
    default_illprepared_data,
    default_wellprepared_data,
    illprepared_experiment,
    xellk_norm,
)
from .hydro import HydroCoefficients, lift, moments, solve_phi_psi, viscosities, well_prepare
from .kinetic import PropagatorCache, build_propagators, simulate, step
from .spectral import (
    ProjectorFamily,
    SpectralBranch,
    closed_form_projectors,
    eigenbranches,
    estimate_kappa,
    measure_W_decay,
    projector_family,
    semigroup_split,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
