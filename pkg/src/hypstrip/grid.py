"""Strip discretisation: Fourier in the periodic horizontal directions, nodal in y.

Coefficient arrays are indexed ``(..., k1, k2, y)`` in numpy FFT order, with the
convention ``f(x) = sum_k c_k exp(i k.x)``. Leading axes hold vector components.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import DomainError, StructuralError

_HAXES = (-3, -2)


@dataclass(frozen=True, eq=False)
class StripGrid:
    N1: int
    N2: int
    Ny: int
    period: float = 2 * np.pi
    workers: int = 1
    dy: float = field(init=False)

    def __post_init__(self):
        for name in ("N1", "N2"):
            n = getattr(self, name)
            if int(n) != n or n <= 0 or n % 2:
                raise DomainError(f"{name} must be an even positive integer, got {n!r}")
        if int(self.Ny) != self.Ny or self.Ny < 8:
            raise DomainError(f"Ny must be an integer >= 8, got {self.Ny!r}")
        if not np.isfinite(self.period) or self.period <= 0:
            raise DomainError(f"period must be positive, got {self.period!r}")
        object.__setattr__(self, "dy", 1.0 / (self.Ny - 1))
        self._build()

    def _set(self, name, value):
        if isinstance(value, np.ndarray):
            value.setflags(write=False)
        object.__setattr__(self, name, value)

    def _build(self):
        scale = 2 * np.pi / self.period
        n1 = np.fft.fftfreq(self.N1, 1.0 / self.N1)
        n2 = np.fft.fftfreq(self.N2, 1.0 / self.N2)
        self._set("n1", n1)
        self._set("n2", n2)
        self._set("k1", n1 * scale)
        self._set("k2", n2 * scale)
        K1, K2 = np.meshgrid(self.k1, self.k2, indexing="ij")
        self._set("K1", K1)
        self._set("K2", K2)
        self._set("ksq", K1**2 + K2**2)
        # per-direction 2/3 rule: |n_j| < N_j/3 (removes the Nyquist mode too)
        mask = (np.abs(n1)[:, None] < self.N1 / 3.0) & (np.abs(n2)[None, :] < self.N2 / 3.0)
        self._set("mask", mask)
        self._set("y", np.linspace(0.0, 1.0, self.Ny))
        self._set("quad", trapezoid_weights(self.Ny))
        self._set("Dy", first_derivative_matrix(self.Ny))
        self._set("Dyy", second_derivative_matrix(self.Ny))
        self._set("G", cumulative_trapezoid_matrix(self.Ny))
        # index map k -> -k used for Hermitian symmetry
        self._set("neg1", (-np.arange(self.N1)) % self.N1)
        self._set("neg2", (-np.arange(self.N2)) % self.N2)

    @property
    def shape(self):
        return (self.N1, self.N2, self.Ny)

    @property
    def area(self):
        return self.period**2

    def dims(self):
        return {"N1": self.N1, "N2": self.N2, "Ny": self.Ny, "period": float(self.period)}

    def same_as(self, other):
        return isinstance(other, StripGrid) and self.dims() == other.dims()

    def zeros(self, ncomp=None):
        shape = self.shape if ncomp is None else (ncomp,) + self.shape
        return np.zeros(shape, dtype=complex)

    # transforms -----------------------------------------------------------

    def to_physical(self, coeffs, real=True):
        f = sfft.ifft2(coeffs, axes=_HAXES, norm="forward", workers=self.workers)
        return f.real if real else f

    def to_spectral(self, values):
        return sfft.fft2(values, axes=_HAXES, norm="forward", workers=self.workers)

    def nodes(self):
        x1 = np.arange(self.N1) * self.period / self.N1
        x2 = np.arange(self.N2) * self.period / self.N2
        return np.meshgrid(x1, x2, self.y, indexing="ij")

    def symmetrize(self, coeffs):
        """Project onto Hermitian-symmetric coefficients (real physical fields)."""
        mirrored = np.conj(coeffs[..., self.neg1, :, :][..., :, self.neg2, :])
        return 0.5 * (coeffs + mirrored)

    def hermitian_defect(self, coeffs):
        mirrored = np.conj(coeffs[..., self.neg1, :, :][..., :, self.neg2, :])
        return float(np.max(np.abs(coeffs - mirrored), initial=0.0))

    # vertical quadrature --------------------------------------------------

    def l2_sq(self, coeffs):
        """Physical L^2 norm squared over the box (Parseval with trapezoid in y)."""
        return self.area * float(np.sum(np.abs(coeffs) ** 2 * self.quad))

    def mode_l2_sq(self, coeffs):
        """Per-mode y-norm squared, summed over leading component axes."""
        per = np.sum(np.abs(coeffs) ** 2 * self.quad, axis=-1)
        return per.reshape((-1,) + per.shape[-2:]).sum(axis=0)

    def mode_grad_sq(self, coeffs):
        """Per-mode ||d_y f||^2 from cell-face differences (summation-by-parts form)."""
        diff = np.diff(coeffs, axis=-1)
        per = np.sum(np.abs(diff) ** 2, axis=-1) / self.dy
        return per.reshape((-1,) + per.shape[-2:]).sum(axis=0)


def trapezoid_weights(ny):
    dy = 1.0 / (ny - 1)
    q = np.full(ny, dy)
    q[0] = q[-1] = 0.5 * dy
    return q


def first_derivative_matrix(ny):
    dy = 1.0 / (ny - 1)
    D = np.zeros((ny, ny))
    i = np.arange(1, ny - 1)
    D[i, i - 1] = -0.5
    D[i, i + 1] = 0.5
    D[0, :3] = [-1.5, 2.0, -0.5]
    D[-1, -3:] = [0.5, -2.0, 1.5]
    return D / dy


def second_derivative_matrix(ny):
    dy = 1.0 / (ny - 1)
    D = np.zeros((ny, ny))
    i = np.arange(1, ny - 1)
    D[i, i - 1] = 1.0
    D[i, i] = -2.0
    D[i, i + 1] = 1.0
    D[0, :4] = [2.0, -5.0, 4.0, -1.0]
    D[-1, -4:] = [-1.0, 4.0, -5.0, 2.0]
    return D / dy**2


def cumulative_trapezoid_matrix(ny):
    """G with (G f)_i = trapezoid integral of f from 0 to y_i."""
    dy = 1.0 / (ny - 1)
    G = np.tril(np.full((ny, ny), dy), -1)
    G[:, 0] = 0.5 * dy
    G[np.arange(ny), np.arange(ny)] = 0.5 * dy
    G[0, 0] = 0.0
    return G


def apply_y(matrix, coeffs):
    return coeffs @ matrix.T


# ---------------------------------------------------------------------------
# Field wrapper


class Field:
    """Spectral coefficients on a StripGrid, optionally with leading component axes."""

    __slots__ = ("grid", "coeffs", "hermitian", "dirichlet")

    def __init__(self, grid, coeffs, hermitian=True, dirichlet=False):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape[-3:] != grid.shape:
            raise StructuralError(f"coefficient shape {coeffs.shape} does not match grid {grid.shape}")
        self.grid = grid
        self.coeffs = coeffs
        self.hermitian = hermitian
        self.dirichlet = dirichlet

    @classmethod
    def from_physical(cls, grid, values, dirichlet=False):
        values = np.asarray(values, dtype=float)
        return cls(grid, grid.to_spectral(values), hermitian=True, dirichlet=dirichlet)

    @classmethod
    def zeros(cls, grid, ncomp=None, dirichlet=True):
        return cls(grid, grid.zeros(ncomp), hermitian=True, dirichlet=dirichlet)

    def physical(self):
        return self.grid.to_physical(self.coeffs, real=self.hermitian)

    def copy(self):
        return Field(self.grid, self.coeffs.copy(), self.hermitian, self.dirichlet)

    def with_coeffs(self, coeffs, dirichlet=None):
        d = self.dirichlet if dirichlet is None else dirichlet
        return Field(self.grid, coeffs, self.hermitian, d)

    @property
    def ncomp(self):
        return self.coeffs.shape[0] if self.coeffs.ndim == 4 else None

    def component(self, i):
        return Field(self.grid, self.coeffs[i], self.hermitian, self.dirichlet)

    def _other(self, other):
        if isinstance(other, Field):
            if not self.grid.same_as(other.grid):
                raise StructuralError("fields live on different grids")
            return other.coeffs
        return other

    def __add__(self, other):
        c = self._other(other)
        d = self.dirichlet and getattr(other, "dirichlet", False)
        return Field(self.grid, self.coeffs + c, self.hermitian, d)

    def __sub__(self, other):
        c = self._other(other)
        d = self.dirichlet and getattr(other, "dirichlet", False)
        return Field(self.grid, self.coeffs - c, self.hermitian, d)

    def __mul__(self, scalar):
        if isinstance(scalar, Field):
            raise TypeError("use dealias_product for field products")
        herm = self.hermitian and np.isreal(scalar)
        return Field(self.grid, self.coeffs * scalar, herm, self.dirichlet)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def l2_sq(self):
        return self.grid.l2_sq(self.coeffs)

    def boundary_max(self):
        phys = self.grid.to_physical(self.coeffs, real=False)
        return float(max(np.max(np.abs(phys[..., 0])), np.max(np.abs(phys[..., -1]))))

    def hermitian_defect(self):
        return self.grid.hermitian_defect(self.coeffs)


def stack(fields):
    g = fields[0].grid
    for f in fields[1:]:
        if not g.same_as(f.grid):
            raise StructuralError("fields live on different grids")
    return Field(g, np.stack([f.coeffs for f in fields]), all(f.hermitian for f in fields),
                 all(f.dirichlet for f in fields))


def _kvec(grid, direction):
    if direction == 1:
        return grid.K1[:, :, None]
    if direction == 2:
        return grid.K2[:, :, None]
    raise DomainError(f"direction must be 1 or 2, got {direction!r}")


def dx(field, direction):
    return field.with_coeffs(1j * _kvec(field.grid, direction) * field.coeffs)


def dy(field):
    return field.with_coeffs(apply_y(field.grid.Dy, field.coeffs), dirichlet=False)


def dyy(field):
    return field.with_coeffs(apply_y(field.grid.Dyy, field.coeffs), dirichlet=False)


def integral_y_cumulative(field):
    return field.with_coeffs(apply_y(field.grid.G, field.coeffs), dirichlet=False)


def integral_y_total(field):
    """Total vertical integral, returned as a y-independent (constant-in-y) Field."""
    tot = np.sum(field.coeffs * field.grid.quad, axis=-1, keepdims=True)
    return field.with_coeffs(np.broadcast_to(tot, field.coeffs.shape).copy(), dirichlet=False)


def divergence_x(field):
    """d_{x1} u1 + d_{x2} u2 for a two-component field."""
    if field.ncomp != 2:
        raise StructuralError("divergence needs a two-component field")
    g = field.grid
    c = 1j * (g.K1[:, :, None] * field.coeffs[0] + g.K2[:, :, None] * field.coeffs[1])
    return Field(g, c, field.hermitian, False)


def truncate(grid, coeffs):
    return coeffs * grid.mask[:, :, None]


def dealias_product(a, b):
    """Physical-space product of two fields truncated by the 2/3 rule."""
    if not isinstance(a, Field) or not isinstance(b, Field):
        raise StructuralError("dealias_product expects Field operands")
    if not a.grid.same_as(b.grid):
        raise StructuralError("fields live on different grids")
    g = a.grid
    real = a.hermitian and b.hermitian
    pa = g.to_physical(a.coeffs, real=real)
    pb = g.to_physical(b.coeffs, real=real)
    c = truncate(g, g.to_spectral(pa * pb))
    return Field(g, c, real, a.dirichlet or b.dirichlet)
