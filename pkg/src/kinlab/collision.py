"""Galerkin collision operators: hard spheres and a BGK relaxation surrogate.

The linearized operator L and the symmetrized bilinear term Gamma are
assembled in the weighted frame, where a perturbation h of the equilibrium
enters as f = M + sqrt(M) h.  With basis functions phi = p sqrt(M) the
matrix elements reduce to integrals of polynomials against
|v - v*| M(v) M(v*) over pre/post-collision velocities.

Assembly uses the symmetrized (Dirichlet) weak form

    <p_g, L p_a>   = -1/4 int B M M* (Dp_g)(Dp_a),
    <p_g, G(a,b)>  = -1/8 int B M M* (Dp_g)(gain_ab - loss_ab),

with Dp = p' + p'* - p - p*.  Because the collision invariants satisfy
Dp = 0 pointwise, the discrete operators annihilate mass, momentum and
energy exactly, are exactly symmetric and negative semidefinite, and
L = 2 Gamma(. , const) holds to rounding.

The quadrature is exact: in center/relative coordinates z = (v+v*)/sqrt2,
w = (v-v*)/sqrt2 the measure factorizes into a Gaussian in z, a radial
weight rho^d exp(-rho^2/2) that absorbs the hard-sphere kernel, and two
sphere integrals; after symmetric angular quadrature the radial integrand
is an even polynomial in rho, handled exactly by generalized Gauss-Laguerre
in t = rho^2/2.
"""

import os
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ive, roots_genlaguerre, roots_legendre

from .basis import VelocityBasis, build_basis, gauss_hermite, kernel_projector

CACHE_MAGIC = "kinlab-collision-cache"
CACHE_VERSION = 1

HARD_SPHERE = "hard_sphere"
BGK = "bgk"


class CollisionAssemblyError(RuntimeError):
    """Raised when the assembled operator violates its structural contract."""


class CacheError(RuntimeError):
    """Raised when a collision cache file is unreadable or corrupted."""


# ---------------------------------------------------------------------------
# quadrature building blocks
# ---------------------------------------------------------------------------


def sphere_rule(d, degree):
    """Nodes/weights on S^(d-1) exact for polynomials up to ``degree``.

    d=2: uniform angles (trapezoid), d=3: Gauss-Legendre in cos(theta)
    times uniform azimuth.  Node counts are rounded so the set is
    antipodally symmetric, which the radial-parity argument of the
    assembly requires.
    """
    if d == 2:
        n = degree + 2
        n += n % 2
        th = 2.0 * np.pi * np.arange(n) / n
        nodes = np.stack([np.cos(th), np.sin(th)], axis=-1)
        weights = np.full(n, 2.0 * np.pi / n)
        return nodes, weights
    nmu = int(np.ceil((degree + 1) / 2.0))
    nphi = degree + 2
    nphi += nphi % 2
    mu, wmu = roots_legendre(nmu)
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    smu = np.sqrt(1.0 - mu**2)
    nodes = np.stack(
        [
            np.outer(smu, np.cos(phi)).ravel(),
            np.outer(smu, np.sin(phi)).ravel(),
            np.outer(mu, np.ones(nphi)).ravel(),
        ],
        axis=-1,
    )
    weights = np.outer(wmu, np.full(nphi, 2.0 * np.pi / nphi)).ravel()
    return nodes, weights


def radial_rule(d, n):
    """Gauss rule for int_0^inf f(rho) rho^d exp(-rho^2/2) drho, f even poly.

    Returns (rho, w) with the normalization (2*pi)^(-d/2) * sqrt(2) * rho
    of the relative-speed kernel absorbed, i.e. weights for
    sqrt(2) rho * rho^(d-1) exp(-rho^2/2) (2 pi)^(-d/2) drho.
    """
    t, wt = roots_genlaguerre(n, (d - 1) / 2.0)
    return np.sqrt(2.0 * t), wt * np.pi ** (-d / 2.0)


@dataclass(frozen=True)
class CollisionKernelSpec:
    """Hard-sphere cross-section |v - v*| and the sphere rule used with it."""

    d: int
    sphere_nodes: np.ndarray = field(repr=False)
    sphere_weights: np.ndarray = field(repr=False)

    def speed(self, v, vstar):
        return np.linalg.norm(np.asarray(v) - np.asarray(vstar), axis=-1)


@dataclass(frozen=True)
class CollisionModel:
    """Galerkin matrices of L (and its Grad split) and the Gamma tensor.

    ``gamma`` is indexed [in1, in2, out]: apply_gamma contracts the first
    two slots with coefficient vectors.  ``nu_matrix`` is the Galerkin
    matrix of multiplication by the collision frequency; K = L + nu holds
    by construction.
    """

    kind: str
    basis: VelocityBasis
    L: np.ndarray = field(repr=False)
    nu_matrix: np.ndarray = field(repr=False)
    gamma: np.ndarray = field(repr=False)
    spectral_gap: float
    rate: float | None = None
    gamma_source: str = HARD_SPHERE
    quad_orders: tuple = ()

    @property
    def K_matrix(self):
        return self.L + self.nu_matrix

    @property
    def size(self):
        return self.basis.size


def _flat_outer(a, b):
    return (a[:, :, None] * b[:, None, :]).reshape(a.shape[0], -1)


def _assemble_hard_sphere_raw(basis, target_bytes=2 * 10**8):
    """Exact-quadrature L, nu and Gamma matrices before structure cleanup.

    Work proceeds in blocks of center-points z so the transient pair-product
    tables stay below ``target_bytes`` regardless of K.
    """
    d, K, N = basis.d, basis.K, basis.size
    nz = int(np.ceil((3 * K + 1) / 2.0))
    nt = int(np.ceil((1.5 * K + 1) / 2.0)) + 1
    x1, w1 = gauss_hermite(nz)
    mesh = np.meshgrid(*([x1] * d), indexing="ij")
    Z = np.stack([m.ravel() for m in mesh], axis=-1)
    wmesh = np.meshgrid(*([w1] * d), indexing="ij")
    Wz = np.prod(np.stack([m.ravel() for m in wmesh]), axis=0)
    rho, Wr = radial_rule(d, nt)
    Om, Ws = sphere_rule(d, 3 * K)
    ns = len(Ws)
    stot = Ws.sum()

    L = np.zeros((N, N))
    NU = np.zeros((N, N))
    graw = np.zeros((N, N * N))
    per_z = nt * ns
    zblk = max(1, int(target_bytes / (per_z * N * N * 8)))
    for start in range(0, len(Z), zblk):
        zb = Z[start : start + zblk]
        wzb = Wz[start : start + zblk]
        # evaluation points (z +- rho*omega)/sqrt2 over (zblk, rho, angle)
        pts = (zb[:, None, None, :] + rho[None, :, None, None] * Om[None, None, :, :]) / np.sqrt(2.0)
        Pp = basis.eval_poly(pts)
        pts = (zb[:, None, None, :] - rho[None, :, None, None] * Om[None, None, :, :]) / np.sqrt(2.0)
        Pm = basis.eval_poly(pts)
        A = Pp + Pm
        W2 = wzb[:, None] * Wr[None, :]
        wq = (W2[:, :, None] * Ws[None, None, :]).reshape(-1)
        nb = wq.size
        Af = A.reshape(nb, N)
        Ppf = Pp.reshape(nb, N)
        Pmf = Pm.reshape(nb, N)
        SA = np.einsum("zrsn,s->zrn", A, Ws)
        SAw = (SA * W2[:, :, None]).reshape(-1, N)
        Aw = Af * (wq * stot)[:, None]
        L += Aw.T @ Af - SAw.T @ SA.reshape(-1, N)
        NU += (Ppf * (wq * stot)[:, None]).T @ Ppf
        U = np.einsum("zrsa,zrsb,s->zrab", Pm, Pp, Ws, optimize=True)
        graw += Aw.T @ _flat_outer(Pmf, Ppf) - SAw.T @ U.reshape(-1, N * N)
    L *= -0.5
    graw = graw.reshape(N, N, N)
    G = -0.25 * (graw + graw.transpose(0, 2, 1))
    quad = (nz, nt, ns)
    return L, NU, np.ascontiguousarray(G.transpose(1, 2, 0)), quad


def _enforce_structure(L, basis, positive_tol=1e-10, kernel_tol=1e-6):
    """Symmetrize, pin the analytic kernel, clip rounding-level positives.

    Returns the cleaned matrix and the spectral gap.  A positive eigenvalue
    above ``positive_tol`` or a near-null space of the wrong dimension
    signals an under-resolved assembly and raises.
    """
    d = basis.d
    L = 0.5 * (L + L.T)
    P = np.eye(basis.size) - kernel_projector(basis)
    L = P @ L @ P
    L = 0.5 * (L + L.T)
    w, Q = np.linalg.eigh(L)
    if w.max() > positive_tol:
        raise CollisionAssemblyError(
            f"assembled L has a positive eigenvalue {w.max():.3e}"
        )
    w = np.minimum(w, 0.0)
    near_null = int(np.sum(w > -kernel_tol))
    if near_null != d + 2:
        raise CollisionAssemblyError(
            f"kernel dimension {near_null} != d+2 = {d + 2}; "
            "collision quadrature appears under-resolved"
        )
    gap = -np.sort(w)[::-1][d + 2]
    return Q @ (w[:, None] * Q.T), float(gap)


def assemble_hard_sphere(basis):
    """Hard-sphere collision model on the given basis (exact quadrature)."""
    L, NU, G, quad = _assemble_hard_sphere_raw(basis)
    L, gap = _enforce_structure(L, basis)
    NU = 0.5 * (NU + NU.T)
    return CollisionModel(
        kind=HARD_SPHERE,
        basis=basis,
        L=L,
        nu_matrix=NU,
        gamma=G,
        spectral_gap=gap,
        gamma_source=HARD_SPHERE,
        quad_orders=quad,
    )


def assemble_bgk(basis, relaxation_rate, gamma_source="zero"):
    """BGK surrogate L = rate (Pi_L - Id), optionally with hard-sphere Gamma.

    The linear surrogate keeps the exact d+2 kernel and a flat relaxation
    spectrum; it serves as an analytic cross-check for the transport
    coefficients (all of which equal 1/rate).
    """
    if relaxation_rate <= 0:
        raise ValueError(f"relaxation_rate must be > 0, got {relaxation_rate}")
    N = basis.size
    Pi = kernel_projector(basis)
    L = relaxation_rate * (Pi - np.eye(N))
    if gamma_source == "zero":
        G = np.zeros((N, N, N))
        NU = relaxation_rate * np.eye(N)
        quad = ()
    elif gamma_source == HARD_SPHERE:
        _, NU, G, quad = _assemble_hard_sphere_raw(basis)
        NU = 0.5 * (NU + NU.T)
    else:
        raise ValueError(f"unknown gamma_source {gamma_source!r}")
    return CollisionModel(
        kind=BGK,
        basis=basis,
        L=L,
        nu_matrix=NU,
        gamma=G,
        spectral_gap=float(relaxation_rate),
        rate=float(relaxation_rate),
        gamma_source=gamma_source,
        quad_orders=quad,
    )


def apply_gamma(model, f_coeffs, g_coeffs):
    """Contract the Gamma tensor with two coefficient vectors (or batches).

    Accepts arrays of shape (..., N); symmetric in the two arguments by
    construction of the tensor.
    """
    f = np.asarray(f_coeffs)
    g = np.asarray(g_coeffs)
    N = model.size
    if f.shape[-1] != N or g.shape[-1] != N:
        raise ValueError(
            f"coefficient length mismatch: expected {N}, "
            f"got {f.shape[-1]} and {g.shape[-1]}"
        )
    T = model.gamma.reshape(N * N, N)
    fg = (f[..., :, None] * g[..., None, :]).reshape(f.shape[:-1] + (N * N,))
    return fg @ T


def hard_sphere_kernel_spec(d, degree=None):
    nodes, weights = sphere_rule(d, degree if degree is not None else 12)
    return CollisionKernelSpec(d=d, sphere_nodes=nodes, sphere_weights=weights)


# ---------------------------------------------------------------------------
# collision frequency
# ---------------------------------------------------------------------------


def nu(v, d=None, order=48):
    """Collision frequency nu(v) = int |v-v*| M(v*) dsigma dv*.

    Reduced to a single radial integral (the angular factor is a modified
    Bessel function for d=2 and elementary for d=3), evaluated with a
    generalized Gauss-Laguerre rule; essentially exact for |v| <~ 15, with
    the standard large-|v| expansion beyond.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        raise ValueError("v must have a velocity axis")
    if d is None:
        d = v.shape[-1]
    if v.shape[-1] != d:
        raise ValueError(f"velocity has dimension {v.shape[-1]}, expected {d}")
    r = np.linalg.norm(v, axis=-1)
    surf = 2.0 * np.pi if d == 2 else 4.0 * np.pi
    out = np.empty(r.shape)
    rr = np.atleast_1d(r)
    res = np.empty(rr.shape)
    big = rr >= 15.0
    if big.any():
        rb = rr[big]
        res[big] = surf * (rb + (d - 1) / (2.0 * rb) - (d - 1) * (d - 3) / (8.0 * rb**3))
    if (~big).any():
        rs = rr[~big][:, None]
        t, wt = roots_genlaguerre(order, (d - 1) / 2.0)
        rho = np.sqrt(2.0 * t)[None, :]
        # the Laguerre weight absorbs rho^d e^{-rho^2/2}; the remaining
        # angular factor is e^{-r^2/2} I0(rho r) (d=2) or
        # e^{-r^2/2} sinh(rho r)/(rho r) (d=3), evaluated in scaled form
        if d == 2:
            f = ive(0, rho * rs) * np.exp(rho * rs - 0.5 * rs**2)
            vals = 2.0 * np.pi * np.sqrt(2.0) * (f * wt[None, :]).sum(axis=1)
        else:
            x = rho * rs
            a = np.exp(x - 0.5 * rs**2)
            bneg = np.exp(-x - 0.5 * rs**2)
            f = np.where(x > 1e-8, (a - bneg) / np.where(x > 1e-8, 2.0 * x, 1.0),
                         np.exp(-0.5 * rs**2) * np.ones_like(x))
            vals = 32.0 * np.pi**2 / (2.0 * np.pi) ** 1.5 * (f * wt[None, :]).sum(axis=1)
        res[~big] = vals
    out[...] = res.reshape(r.shape)
    return out if out.shape else float(out)


def nu_bounds(d, rmax=8.0, num=161):
    """Fit constants 0 < nu0 <= nu1 with nu0 (1+|v|) <= nu(v) <= nu1 (1+|v|).

    Scanned on a radial grid up to ``rmax``; returns (nu0, nu1).
    """
    r = np.linspace(0.0, rmax, num)
    v = np.zeros((num, d))
    v[:, 0] = r
    vals = nu(v, d=d)
    ratio = vals / (1.0 + r)
    return float(ratio.min()), float(ratio.max())


# ---------------------------------------------------------------------------
# on-disk cache
# ---------------------------------------------------------------------------


def cache_key(d, K, kind, quad_orders, rate=None, gamma_source=HARD_SPHERE):
    quad = "x".join(str(q) for q in quad_orders) if quad_orders else "none"
    tag = f"{kind}_d{d}_K{K}_q{quad}"
    if kind == BGK:
        tag += f"_r{rate:g}_g{gamma_source}"
    return f"{tag}_v{CACHE_VERSION}.kcc"


def save_cache(path, model):
    """Write the documented binary cache: ASCII header, f64 LE payload, checksum."""
    header = (
        f"{CACHE_MAGIC} {CACHE_VERSION} d={model.basis.d} K={model.basis.K} "
        f"kind={model.kind} quad={','.join(str(q) for q in model.quad_orders) or 'none'} "
        f"rate={model.rate if model.rate is not None else 'none'} "
        f"gamma={model.gamma_source} gap={model.spectral_gap!r} n={model.size}\n"
    )
    arrays = [model.L, model.nu_matrix, model.gamma]
    checksum = float(sum(float(np.sum(a)) for a in arrays))
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(header.encode("ascii"))
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
        fh.write(struct.pack("<d", checksum))
    os.replace(tmp, path)


def read_cache(path, basis):
    """Load a cached model, validating header metadata and the checksum."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii", errors="replace").strip()
        fields = header.split()
        if len(fields) < 2 or fields[0] != CACHE_MAGIC or fields[1] != str(CACHE_VERSION):
            raise CacheError(f"{path}: bad cache header {header!r}")
        meta = dict(f.split("=", 1) for f in fields[2:])
        if int(meta["d"]) != basis.d or int(meta["K"]) != basis.K:
            raise CacheError(
                f"{path}: cache is for d={meta['d']} K={meta['K']}, "
                f"requested d={basis.d} K={basis.K}"
            )
        N = int(meta["n"])
        if N != basis.size:
            raise CacheError(f"{path}: basis size mismatch ({N} != {basis.size})")
        payload = fh.read()
    want = (2 * N * N + N**3) * 8 + 8
    if len(payload) != want:
        raise CacheError(f"{path}: truncated payload ({len(payload)} != {want} bytes)")
    flat = np.frombuffer(payload[:-8], dtype="<f8")
    stored = struct.unpack("<d", payload[-8:])[0]
    L = flat[: N * N].reshape(N, N).copy()
    NU = flat[N * N : 2 * N * N].reshape(N, N).copy()
    G = flat[2 * N * N :].reshape(N, N, N).copy()
    checksum = float(np.sum(L)) + float(np.sum(NU)) + float(np.sum(G))
    if checksum != stored:
        raise CacheError(f"{path}: checksum mismatch ({checksum!r} != {stored!r})")
    rate = None if meta["rate"] == "none" else float(meta["rate"])
    quad = () if meta["quad"] == "none" else tuple(int(q) for q in meta["quad"].split(","))
    return CollisionModel(
        kind=meta["kind"],
        basis=basis,
        L=L,
        nu_matrix=NU,
        gamma=G,
        spectral_gap=float(meta["gap"]),
        rate=rate,
        gamma_source=meta["gamma"],
        quad_orders=quad,
    )


def load_or_assemble(cache_dir, basis, kind=HARD_SPHERE, rate=1.0,
                     gamma_source=None, log=None):
    """Fetch a model from the cache directory, assembling on miss/corruption.

    Returns (model, cache_hit).  A corrupted cache file is replaced and a
    warning is emitted through ``log`` (a callable) when provided.
    """
    if kind == HARD_SPHERE:
        probe_quad = _default_quad(basis)
        gamma_source = HARD_SPHERE
    else:
        gamma_source = gamma_source or "zero"
        probe_quad = _default_quad(basis) if gamma_source == HARD_SPHERE else ()
    key = cache_key(basis.d, basis.K, kind, probe_quad, rate=rate, gamma_source=gamma_source)
    path = os.path.join(cache_dir, key)
    if os.path.exists(path):
        try:
            return read_cache(path, basis), True
        except CacheError as exc:
            if log is not None:
                log(f"warning: {exc}; re-assembling")
    os.makedirs(cache_dir, exist_ok=True)
    if kind == HARD_SPHERE:
        model = assemble_hard_sphere(basis)
    else:
        model = assemble_bgk(basis, rate, gamma_source=gamma_source)
    save_cache(path, model)
    return model, False


def _default_quad(basis):
    K = basis.K
    nz = int(np.ceil((3 * K + 1) / 2.0))
    nt = int(np.ceil((1.5 * K + 1) / 2.0)) + 1
    ns = len(sphere_rule(basis.d, 3 * K)[1])
    return (nz, nt, ns)


def build_model(d, K, kind=HARD_SPHERE, rate=1.0, gamma_source=None, cache_dir=None):
    """Convenience constructor: basis + model, optionally cached on disk."""
    basis = build_basis(d, K)
    if cache_dir is not None:
        model, _ = load_or_assemble(cache_dir, basis, kind=kind, rate=rate,
                                    gamma_source=gamma_source)
        return model
    if kind == HARD_SPHERE:
        return assemble_hard_sphere(basis)
    return assemble_bgk(basis, rate, gamma_source=gamma_source or "zero")
