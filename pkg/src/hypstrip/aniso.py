"""Anisotropic hyperbolic Navier-Stokes in the strip at finite eps.

    (d_t^2 + d_t + u.d_x + v d_y - eps^2 lap_x - d_y^2) u + d_x p = 0,
    eps^2 (d_t^2 + d_t + u.d_x + v d_y - eps^2 lap_x - d_y^2) v + d_y p = 0,
    d_x.u + d_y v = 0,   u = v = 0 at y = 0, 1.

The divergence constraint with v(0) = 0 fixes v = -int_0^y d_x.u, so the state is
advanced in (u, u_t) alone with v slaved to u. The per-mode mass and stiffness
matrices carry the eps^2 |v|^2 kinetic and eps^2 |d_y v|^2 + eps^4 |d_x v|^2
potential contributions (see ``modal``); the pressure never has to be formed.
Wall condition v(1) = 0 is the same vertical-mean constraint as in the
hydrostatic system and is again enforced by a Lagrange multiplier.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .errors import DomainError, PressureCompatibilityError
from .gevrey import RadiusSchedule
from .grid import Field, apply_y
from .hydro import HydroSolver, advection_parts, recover_v
from .diagnostics import pair_norm

DIVERGENCE_TOL = 1e-9
PRESSURE_COMPAT_TOL = 1e-2


@dataclass
class AnisoState:
    t: float
    eps: float
    u: Field
    v: Field
    ut: Field
    vt: Field
    schedule: RadiusSchedule | None = None
    prev_force: tuple | None = field(default=None, repr=False)
    prev_dt: float | None = None

    @property
    def grid(self):
        return self.u.grid

    @property
    def w(self):
        return self.ut

    def copy(self):
        return replace(self, u=self.u.copy(), v=self.v.copy(), ut=self.ut.copy(), vt=self.vt.copy())


def make_aniso_state(eps, u0, u1, schedule=None, t=0.0):
    """State with (v0, v1) derived from (u0, u1) through the divergence constraint."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    v0 = recover_v(u0)
    v1 = recover_v(u1)
    v0.dirichlet = v1.dirichlet = True
    return AnisoState(t, float(eps), u0.copy(), v0, u1.copy(), v1, schedule)


class AnisoSolver(HydroSolver):
    """IMEX integrator for the anisotropic system; v is slaved to u."""

    def __init__(self, grid, eps, nonlinear=True, constraint_tol=1e-10):
        if not eps > 0:
            raise DomainError("eps must be positive")
        self.eps = float(eps)
        super().__init__(grid, nonlinear, constraint_tol)

    def modal_force(self, uc):
        m = self.modal
        if not self.nonlinear:
            z = np.zeros((len(m.kappa), m.n), dtype=complex)
            return (z, z.copy()), 0.0
        n, nv, umax = advection_parts(self.grid, uc, with_v_terms=True)
        par, perp = m.to_modal(n)
        return m.forces(par, perp, m.scalar_to_modal(nv)), umax

    def _new_state(self, state, uc, wc, t, force, dt):
        g = self.grid
        u = Field(g, uc, True, True)
        ut = Field(g, wc, True, True)
        v, vt = recover_v(u), recover_v(ut)
        v.dirichlet = vt.dirichlet = True
        return AnisoState(t, self.eps, u, v, ut, vt, state.schedule, force, dt)

    def _enforce_constraint(self, state):
        super()._enforce_constraint(state)
        if self.drift_events:
            state.v, state.vt = recover_v(state.u), recover_v(state.ut)

    def initial_state(self, u0, u1, schedule=None, t=0.0):
        return make_aniso_state(self.eps, u0, u1, schedule, t)

    def acceleration(self, state):
        return super().acceleration(state)


def step_aniso(solver, state, dt):
    return solver.step(state, dt)


def divergence_residual(state):
    """Residual of d_x.u + d_y v = 0 (box scheme) and of v(1) = 0, for both levels,
    relative to the horizontal gradient norm of u (resp. u_t)."""
    g = state.grid
    worst = 0.0
    for u, v in ((state.u, state.v), (state.ut, state.vt)):
        uc, vc = u.coeffs, v.coeffs
        div = 1j * (g.K1[:, :, None] * uc[0] + g.K2[:, :, None] * uc[1])
        box = 0.5 * (div[..., 1:] + div[..., :-1]) + np.diff(vc, axis=-1) / g.dy
        ref = np.sqrt(np.sum(g.ksq[:, :, None] * np.sum(np.abs(uc) ** 2, axis=0) * g.quad))
        r = max(np.sqrt(np.sum(np.abs(box) ** 2) * g.dy), np.sqrt(np.sum(np.abs(vc[..., -1]) ** 2)))
        worst = max(worst, float(r / ref) if ref > 0 else float(r))
    return worst


def weighted_norm(state, rho):
    """|(u, eps v)|_{X_rho} with time slots (u_t, eps v_t)."""
    g = state.grid
    e = state.eps
    a = np.concatenate([state.u.coeffs, e * state.v.coeffs[None]])
    b = np.concatenate([state.ut.coeffs, e * state.vt.coeffs[None]])
    return pair_norm(g, a, b, rho)


# ---------------------------------------------------------------------------
# anisotropic pressure (diagnostic)


def solve_aniso_poisson(grid, f, g0, g1, eps, compat_tol=PRESSURE_COMPAT_TOL):
    """Per mode (-|k|^2 + eps^-2 d_y^2) p = f with d_y p = g0 at y = 0 and g1 at y = 1.

    Second-order ghost-node Neumann closure; one tridiagonal solve per live mode.
    The k = 0 problem is singular: its compatibility defect is measured against
    ``compat_tol``, removed, and the solution fixed to zero vertical mean.
    """
    ny, h = grid.Ny, grid.dy
    c = 1.0 / eps**2
    p = np.zeros(grid.shape, dtype=complex)
    live = np.any(f != 0, axis=-1) | (g0 != 0) | (g1 != 0)
    live[0, 0] = True
    for i1, i2 in zip(*np.nonzero(live)):
        ksq = grid.ksq[i1, i2]
        rhs = f[i1, i2].astype(complex).copy()
        rhs[0] += 2 * c * g0[i1, i2] / h
        rhs[-1] -= 2 * c * g1[i1, i2] / h
        ab = np.zeros((3, ny))
        ab[0, 1:] = c / h**2
        ab[2, :-1] = c / h**2
        ab[0, 1] = 2 * c / h**2
        ab[2, -2] = 2 * c / h**2
        ab[1, :] = -ksq - 2 * c / h**2
        if ksq == 0:
            defect = grid.quad @ rhs
            scale = grid.quad @ np.abs(f[i1, i2]) + c * (abs(g0[i1, i2]) + abs(g1[i1, i2]))
            if abs(defect) > compat_tol * scale + 1e-300 and abs(defect) > 1e-14:
                raise PressureCompatibilityError(
                    f"Neumann data incompatible at k = 0: defect {abs(defect):.3e}")
            rhs = rhs - defect / grid.quad.sum()
            # pin p at y = 0, then remove the vertical mean
            ab2 = ab.copy()
            ab2[1, 0] = 1.0
            ab2[0, 1] = 0.0
            rhs[0] = 0.0
            sol = solve_banded((1, 1), ab2, rhs)
            sol -= grid.quad @ sol
        else:
            sol = solve_banded((1, 1), ab, rhs)
        p[i1, i2] = sol
    return Field(grid, p, hermitian=True)


def solve_pressure_aniso(state):
    """(lap_x + eps^-2 d_y^2) p = -[d_x.((u.d_x)u + v d_y u) + d_y((u.d_x)v + v d_y v)],
    d_y p = eps^2 d_y^2 v at the walls."""
    g = state.grid
    n, nv, _ = advection_parts(g, state.u.coeffs, with_v_terms=True)
    divn = 1j * (g.K1[:, :, None] * n[0] + g.K2[:, :, None] * n[1])
    f = -(divn + apply_y(g.Dy, nv))
    vyy = apply_y(g.Dyy, state.v.coeffs)
    e2 = state.eps**2
    return solve_aniso_poisson(g, f, e2 * vyy[..., 0], e2 * vyy[..., -1], state.eps)
