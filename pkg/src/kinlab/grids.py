"""Periodic spatial grids, Fourier helpers and state containers.

Fields live on a uniform d-dimensional torus grid and are manipulated
through their Fourier coefficients with the convention
f(x) = sum_xi fhat(xi) exp(i xi . x), so Parseval reads
(1/|box|) int |f|^2 dx = sum |fhat|^2 and discrete Sobolev norms are
plain weighted coefficient sums.
"""

from dataclasses import dataclass, replace

import numpy as np

from .basis import VelocityBasis


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid on [0, box)^d."""

    d: int
    n: int
    box: float = 2.0 * np.pi

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def size(self):
        return self.n**self.d

    @property
    def axes(self):
        return tuple(range(self.d))

    def coordinates(self):
        x1 = np.arange(self.n) * (self.box / self.n)
        return np.meshgrid(*([x1] * self.d), indexing="ij")

    def wavevectors(self):
        """Angular wavenumbers per axis, shape (d, n, ..., n)."""
        k1 = np.fft.fftfreq(self.n, d=1.0 / self.n) * (2.0 * np.pi / self.box)
        mesh = np.meshgrid(*([k1] * self.d), indexing="ij")
        return np.stack(mesh)

    def k_squared(self):
        k = self.wavevectors()
        return np.sum(k * k, axis=0)

    def dealias_mask(self):
        """Sharp 2/3-rule mask for quadratic nonlinearities."""
        idx = np.fft.fftfreq(self.n, d=1.0 / self.n)
        keep1 = np.abs(idx) <= self.n / 3.0
        mask = np.ones(self.shape, dtype=bool)
        for ax in range(self.d):
            shape = [1] * self.d
            shape[ax] = self.n
            mask &= keep1.reshape(shape)
        return mask

    def to_spectral(self, f, axes=None):
        axes = self.axes if axes is None else axes
        return np.fft.fftn(f, axes=axes) / self.size

    def to_physical(self, fhat, axes=None):
        axes = self.axes if axes is None else axes
        return np.fft.ifftn(fhat, axes=axes) * self.size

    def mode_index(self, xi_int):
        """Array index of the integer mode tuple along the fft layout."""
        return tuple(int(m) % self.n for m in xi_int)

    def sobolev_weights(self, ell):
        """Inhomogeneous weights <xi>^(2 ell) with <xi> = 1 + |xi|."""
        kabs = np.sqrt(self.k_squared())
        return (1.0 + kabs) ** (2.0 * ell)


def leray_project(uhat, grid):
    """Remove the gradient part: uhat - k (k.uhat)/|k|^2, zero mode untouched."""
    k = grid.wavevectors()
    k2 = np.sum(k * k, axis=0)
    k2safe = np.where(k2 > 0, k2, 1.0)
    div = np.sum(k * uhat, axis=0)
    return uhat - k * (div / k2safe)


@dataclass
class KineticState:
    """Fourier (space) x Galerkin (velocity) coefficients of a perturbation.

    ``coeffs`` has shape grid.shape + (basis.size,), complex; reality of the
    physical-space field corresponds to Hermitian symmetry in the modes.
    ``eps`` is the Knudsen number of the evolution the state belongs to
    (None for bare data not yet attached to a flow).
    """

    grid: SpatialGrid
    basis: VelocityBasis
    coeffs: np.ndarray
    time: float = 0.0
    eps: float | None = None

    def copy(self):
        return replace(self, coeffs=self.coeffs.copy())

    def l2_norm(self):
        """L^2_{x,v} norm (mean-square in x, orthonormal in v)."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def zero_mode(self):
        return self.coeffs[(0,) * self.grid.d]

    def physical(self):
        """Nodal coefficient fields on the spatial grid (complex)."""
        return self.grid.to_physical(self.coeffs, axes=self.grid.axes)

    def reality_defect(self):
        """Max |Im| of the physical-space reconstruction."""
        return float(np.abs(self.physical().imag).max())


def zero_state(grid, basis, eps=None):
    return KineticState(
        grid=grid,
        basis=basis,
        coeffs=np.zeros(grid.shape + (basis.size,), dtype=complex),
        eps=eps,
    )


@dataclass
class FluidTriple:
    """Real fields (rho, u, theta) on the torus grid; u has shape (d,) + grid."""

    grid: SpatialGrid
    rho: np.ndarray
    u: np.ndarray
    theta: np.ndarray

    def copy(self):
        return FluidTriple(self.grid, self.rho.copy(), self.u.copy(), self.theta.copy())

    def spectral(self):
        g = self.grid
        return g.to_spectral(self.rho), g.to_spectral(self.u, axes=tuple(a + 1 for a in g.axes)), g.to_spectral(self.theta)
