"""Velocity-space discretization: Gaussian weight, Hermite basis, quadrature.

Velocity space is discretized with the orthonormal functions

    phi_alpha(v) = p_alpha(v) * sqrt(M(v)),   M(v) = (2*pi)^(-d/2) exp(-|v|^2/2),

where p_alpha is a product of normalized probabilists' Hermite polynomials
he_n = He_n / sqrt(n!) and alpha runs over multi-indices of total degree <= K
in graded lexicographic order.  All inner products of the form
int f(v) g(v) M(v) dv are evaluated with tensor Gauss-Hermite quadrature that
is exact for polynomial integrands of the degrees used here.

The five (d=2) or six (d=3) collision invariants 1, v_i, |v|^2 span the
degree <= 2 block exactly, so the equilibrium projector is available in
closed form on the coefficients.
"""

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from numpy.polynomial import hermite_e


def maxwellian(v):
    """Global equilibrium density (2*pi)^(-d/2) exp(-|v|^2/2).

    ``v`` is an array whose last axis is the velocity dimension.
    """
    v = np.asarray(v, dtype=float)
    d = v.shape[-1]
    return (2.0 * np.pi) ** (-d / 2.0) * np.exp(-0.5 * np.sum(v * v, axis=-1))


def multi_indices(d, K):
    """Multi-indices |alpha| <= K in graded lexicographic order."""
    idx = [a for a in product(range(K + 1), repeat=d) if sum(a) <= K]
    idx.sort(key=lambda a: (sum(a), a))
    return tuple(idx)


def hermite_table(x, K):
    """Values of he_0..he_K at ``x``; shape (K+1,) + x.shape.

    Uses the stable three-term recurrence
    he_{n+1} = (x*he_n - sqrt(n)*he_{n-1}) / sqrt(n+1).
    """
    x = np.asarray(x, dtype=float)
    T = np.zeros((K + 1,) + x.shape)
    T[0] = 1.0
    if K >= 1:
        T[1] = x
    for n in range(1, K):
        T[n + 1] = (x * T[n] - np.sqrt(n) * T[n - 1]) / np.sqrt(n + 1)
    return T


def gauss_hermite(n):
    """Probabilists' Gauss-Hermite rule normalized against N(0,1).

    Returns nodes and weights with sum(w) = 1, i.e. quadrature for
    int f(x) (2*pi)^(-1/2) exp(-x^2/2) dx, exact for deg(f) <= 2n-1.
    """
    x, w = hermite_e.hermegauss(n)
    return x, w / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class VelocityBasis:
    """Orthonormal Hermite-function basis of velocity space.

    Attributes
    ----------
    d : spatial/velocity dimension (2 or 3)
    K : maximal total polynomial degree
    indices : multi-indices in graded lexicographic order
    quad_nodes : quadrature points, shape (n_nodes, d)
    quad_weights : weights absorbing the Gaussian M(v) dv, shape (n_nodes,)
    eval_table : p_alpha values at the quadrature nodes, shape (n_nodes, N)
    """

    d: int
    K: int
    quadrature_order: int
    indices: tuple = field(repr=False)
    index_of: dict = field(repr=False)
    quad_nodes: np.ndarray = field(repr=False)
    quad_weights: np.ndarray = field(repr=False)
    eval_table: np.ndarray = field(repr=False)

    @property
    def size(self):
        return len(self.indices)

    def eval_poly(self, pts):
        """Evaluate all basis polynomials p_alpha at points (..., d)."""
        pts = np.asarray(pts, dtype=float)
        tabs = [hermite_table(pts[..., j], self.K) for j in range(self.d)]
        cols = []
        for a in self.indices:
            v = tabs[0][a[0]].copy()
            for j in range(1, self.d):
                v = v * tabs[j][a[j]]
            cols.append(v)
        return np.stack(cols, axis=-1)

    def eval_functions(self, pts):
        """Evaluate phi_alpha = p_alpha * sqrt(M) at points (..., d)."""
        return self.eval_poly(pts) * np.sqrt(maxwellian(pts))[..., None]

    def inner(self, fvals, gvals):
        """Quadrature inner product of nodal value arrays (n_nodes, ...)."""
        return np.tensordot(self.quad_weights, fvals * gvals, axes=(0, 0))

    def project(self, fvals):
        """Coefficients of nodal values (n_nodes,) against the basis."""
        return (self.eval_table * self.quad_weights[:, None]).T @ fvals

    # -- collision invariants ------------------------------------------------

    def kernel_coefficients(self):
        """Orthonormal coefficient rows spanning {1, v_i, |v|^2} * sqrt(M).

        Shape (d+2, N): the constant, the d linear elements, and the
        normalized energy (|v|^2 - d) / sqrt(2 d).
        """
        rows = np.zeros((self.d + 2, self.size))
        rows[0, self.index_of[(0,) * self.d]] = 1.0
        for j in range(self.d):
            a = [0] * self.d
            a[j] = 1
            rows[1 + j, self.index_of[tuple(a)]] = 1.0
        for j in range(self.d):
            a = [0] * self.d
            a[j] = 2
            rows[self.d + 1, self.index_of[tuple(a)]] = 1.0 / np.sqrt(self.d)
        return rows

    def velocity_matrix(self, j):
        """Galerkin matrix of multiplication by v_j (exact, from recurrence)."""
        N = self.size
        V = np.zeros((N, N))
        for i, a in enumerate(self.indices):
            up = list(a)
            up[j] += 1
            if sum(up) <= self.K:
                V[self.index_of[tuple(up)], i] = np.sqrt(a[j] + 1)
            dn = list(a)
            dn[j] -= 1
            if dn[j] >= 0:
                V[self.index_of[tuple(dn)], i] = np.sqrt(a[j])
        return V

    def velocity_matrices(self):
        return [self.velocity_matrix(j) for j in range(self.d)]


def build_basis(d, K, quadrature_order=None):
    """Construct the velocity basis with its quadrature and value tables.

    ``quadrature_order`` is the Gauss-Hermite node count per axis; the
    default 2K+2 leaves all Galerkin inner products of degree <= 2K+2
    integrands exact.  K < 2 is rejected because the equilibrium manifold
    needs the degree-2 block.
    """
    if d not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {d}")
    if K < 2:
        raise ValueError(f"polynomial degree K must be >= 2, got {K}")
    if quadrature_order is None:
        quadrature_order = 2 * K + 2
    if quadrature_order < K + 1:
        raise ValueError(
            f"quadrature_order must be >= K+1 = {K + 1}, got {quadrature_order}"
        )
    idx = multi_indices(d, K)
    x1, w1 = gauss_hermite(quadrature_order)
    nodes = np.array(list(product(x1, repeat=d)))
    weights = np.array([np.prod(c) for c in product(w1, repeat=d)])
    basis = VelocityBasis(
        d=d,
        K=K,
        quadrature_order=quadrature_order,
        indices=idx,
        index_of={a: i for i, a in enumerate(idx)},
        quad_nodes=nodes,
        quad_weights=weights,
        eval_table=np.empty(0),
    )
    object.__setattr__(basis, "eval_table", basis.eval_poly(nodes))
    return basis


def kernel_projector(basis):
    """Rank-(d+2) orthogonal projector onto the collision invariants.

    Exact on the coefficients: P = B^T B with B the orthonormal rows of
    :meth:`VelocityBasis.kernel_coefficients`.
    """
    B = basis.kernel_coefficients()
    return B.T @ B
