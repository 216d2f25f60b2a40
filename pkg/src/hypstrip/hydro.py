"""Hyperbolic hydrostatic Navier-Stokes in the strip, as a first-order system in (u, w = u_t).

    u_tt + u_t + (u.d_x)u + v d_y u - d_y^2 u + d_x p = 0,   d_y p = 0,
    d_x.u + d_y v = 0,   u = v = 0 at y = 0, 1.

The time step is Crank-Nicolson on the linear part and Adams-Bashforth 2 on the
advection, per horizontal mode. The y-independent pressure acts as the Lagrange
multiplier of the vertical-mean constraint int_0^1 d_x.u dy = 0, so each step
lands exactly on the constraint surface.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowUpError, ConstraintDriftError, DomainError, StabilityError
from .gevrey import RadiusSchedule
from .grid import Field, apply_y, truncate
from .modal import ModalSystem

log = logging.getLogger(__name__)

CONSTRAINT_TOL = 1e-10
DT_CAP = 0.5
CFL_FACTOR = 0.25
RK4_STABILITY = 2.5


@dataclass
class HydroState:
    t: float
    u: Field
    w: Field
    schedule: RadiusSchedule | None = None
    # force at the previous step (modal form) and its dt, for Adams-Bashforth
    prev_force: tuple | None = field(default=None, repr=False)
    prev_dt: float | None = None

    @property
    def grid(self):
        return self.u.grid

    def copy(self):
        return replace(self, u=self.u.copy(), w=self.w.copy())


@dataclass
class PressureField:
    grid: object
    coeffs: np.ndarray  # (N1, N2), no y-dependence
    gauge_mean_zero: bool = True

    def field(self):
        c = np.repeat(self.coeffs[:, :, None], self.grid.Ny, axis=2)
        return Field(self.grid, c, hermitian=True)

    def gradient(self):
        g = self.grid
        return np.stack([1j * g.K1 * self.coeffs, 1j * g.K2 * self.coeffs])

    def physical(self):
        return self.grid.to_physical(self.coeffs[:, :, None])[..., 0]


@dataclass
class CompatibilityReport:
    u_residual: float
    w_residual: float
    scale: float
    mode: tuple
    tol: float

    @property
    def ok(self):
        return max(self.u_residual, self.w_residual) <= self.tol * self.scale


# ---------------------------------------------------------------------------
# diagnostic operators


def _div(grid, c):
    return 1j * (grid.K1[:, :, None] * c[0] + grid.K2[:, :, None] * c[1])


def recover_v(u):
    """v = -int_0^y d_x.u."""
    g = u.grid
    return Field(g, -apply_y(g.G, _div(g, u.coeffs)), hermitian=u.hermitian)


def _vertical_mean_div(grid, c):
    return np.sum(_div(grid, c) * grid.quad, axis=-1)


def check_compatibility(state, tol=CONSTRAINT_TOL, strict=False):
    """Max over x of |int_0^1 d_x.u dy| (and the same for w)."""
    g = state.grid
    res = []
    worst_mode, worst = (0, 0), -1.0
    for f in (state.u, state.w):
        m = _vertical_mean_div(g, f.coeffs)
        res.append(float(np.max(np.abs(g.to_physical(m[:, :, None], real=False)))))
        i = np.unravel_index(np.argmax(np.abs(m)), m.shape)
        if np.abs(m[i]) > worst:
            worst = np.abs(m[i])
            worst_mode = (int(g.n1[i[0]]), int(g.n2[i[1]]))
    scale = max(np.sqrt(state.u.l2_sq() / g.area), np.sqrt(state.w.l2_sq() / g.area), 1e-300)
    rep = CompatibilityReport(res[0], res[1], float(scale), worst_mode, tol)
    if strict and not rep.ok:
        raise ConstraintDriftError(
            f"compatibility residual {max(res):.3e} exceeds {tol:g} x {scale:.3e}",
            residual=max(res), mode=worst_mode)
    return rep


def _physical_batch(grid, arrays):
    return grid.to_physical(np.stack(arrays))


def advection_parts(grid, uc, with_v_terms=False):
    """Dealiased (u.d_x)u + v d_y u, optionally also (u.d_x)v + v d_y v.

    Returns (N, Nv or None, max |u|).
    """
    k1 = 1j * grid.K1[:, :, None]
    k2 = 1j * grid.K2[:, :, None]
    div = k1 * uc[0] + k2 * uc[1]
    vc = -apply_y(grid.G, div)
    dyu = apply_y(grid.Dy, uc)
    arrays = [uc[0], uc[1], k1 * uc[0], k1 * uc[1], k2 * uc[0], k2 * uc[1], vc, dyu[0], dyu[1]]
    if with_v_terms:
        arrays += [k1 * vc, k2 * vc, div]
    p = _physical_batch(grid, arrays)
    u1, u2, d1u1, d1u2, d2u1, d2u2, v, dyu1, dyu2 = p[:9]
    n1 = u1 * d1u1 + u2 * d2u1 + v * dyu1
    n2 = u1 * d1u2 + u2 * d2u2 + v * dyu2
    phys = [n1, n2]
    if with_v_terms:
        d1v, d2v, dv = p[9:]
        # d_y v = -d_x.u exactly in the continuum
        phys.append(u1 * d1v + u2 * d2v - v * dv)
    spec = truncate(grid, grid.to_spectral(np.stack(phys)))
    umax = float(np.sqrt(np.max(u1**2 + u2**2))) if uc.size else 0.0
    nv = spec[2] if with_v_terms else None
    return spec[:2], nv, umax


def nonlinear_term(u):
    """N(u) = (u.d_x)u + v d_y u with v = recover_v(u), dealiased."""
    n, _, _ = advection_parts(u.grid, u.coeffs)
    return Field(u.grid, n, hermitian=True)


def solve_pressure(u):
    """Pressure from the vertically integrated momentum balance.

    f = -d_x.int_0^1 [(u.d_x)u + (d_x.u)u] dy + d_x.(d_y u|_{y=1} - d_y u|_{y=0}),
    lap_x p = f, zero horizontal mean.
    """
    g = u.grid
    uc = u.coeffs
    k1 = 1j * g.K1[:, :, None]
    k2 = 1j * g.K2[:, :, None]
    div = k1 * uc[0] + k2 * uc[1]
    p = _physical_batch(g, [uc[0], uc[1], k1 * uc[0], k1 * uc[1], k2 * uc[0], k2 * uc[1], div])
    u1, u2, d1u1, d1u2, d2u1, d2u2, dv = p
    q1 = u1 * d1u1 + u2 * d2u1 + dv * u1
    q2 = u1 * d1u2 + u2 * d2u2 + dv * u2
    qh = truncate(g, g.to_spectral(np.stack([q1, q2])))
    iq = np.sum(qh * g.quad, axis=-1)
    flux = apply_y(g.Dy, uc)
    jump = flux[..., -1] - flux[..., 0]
    K1, K2 = 1j * g.K1, 1j * g.K2
    f = -(K1 * iq[0] + K2 * iq[1]) + (K1 * jump[0] + K2 * jump[1])
    ksq = np.where(g.ksq > 0, g.ksq, 1.0)
    ph = np.where(g.ksq > 0, -f / ksq, 0.0)
    return PressureField(g, ph)


def initial_acceleration(u0, u1):
    """u_tt(0) = -u1 - (u0.d_x)u0 - v0 d_y u0 + d_y^2 u0 - d_x p(0); walls set to 0."""
    g = u0.grid
    n = nonlinear_term(u0).coeffs
    p = solve_pressure(u0).gradient()[:, :, :, None]
    acc = -u1.coeffs - n + apply_y(g.Dyy, u0.coeffs) - p
    acc[..., 0] = 0.0
    acc[..., -1] = 0.0
    return Field(g, acc, hermitian=True, dirichlet=True)


def linear_energy(state):
    """2||w||^2 + 2||d_y u||^2 + 2 Re<u, w> + ||u||^2 (nonincreasing without advection)."""
    g = state.grid
    u, w = state.u.coeffs, state.w.coeffs
    cross = g.area * float(np.sum(np.real(np.conj(u) * w) * g.quad))
    grad = g.area * float(np.sum(g.mode_grad_sq(u)))
    return 2 * state.w.l2_sq() + 2 * grad + 2 * cross + state.u.l2_sq()


# ---------------------------------------------------------------------------
# initial data


def _random_low_modes(grid, rng, max_mode=2, only_n2=False):
    psi = np.zeros((grid.N1, grid.N2), dtype=complex)
    sel1 = np.abs(grid.n1) <= (0 if only_n2 else max_mode)
    sel2 = np.abs(grid.n2) <= max_mode
    box = sel1[:, None] & sel2[None, :] & grid.mask
    vals = rng.standard_normal(box.shape) + 1j * rng.standard_normal(box.shape)
    psi[box] = vals[box]
    psi[0, 0] = 0.0
    psi = 0.5 * (psi + np.conj(psi[grid.neg1][:, grid.neg2]))
    return psi


def _family_shape(family, grid, rng):
    s = np.sin(np.pi * grid.y)
    if family == "a":
        psi = _random_low_modes(grid, rng)
        c = np.stack([1j * grid.K2 * psi, -1j * grid.K1 * psi])
    elif family == "b":
        f = _random_low_modes(grid, rng, only_n2=True)
        c = np.stack([f, np.zeros_like(f)])
    else:
        raise DomainError(f"unknown initial-data family {family!r}")
    out = c[..., None] * s
    out[..., 0] = 0.0
    out[..., -1] = 0.0
    return out


def make_initial_data(family, eps0, rho0, grid, seed=0, u1_factor=0.0):
    """Compatible Gevrey data (u0, u1) with |u0|_{X_{2 rho0}} = eps0.

    family "a": u = eps0 (d2 psi, -d1 psi) sin(pi y), psi random on |n_j| <= 2.
    family "b": u = eps0 (f(x2) sin(pi y), 0), f random on |n2| <= 2.
    u1 has the same family shape (independent draw) scaled to u1_factor * eps0.
    """
    from .diagnostics import static_norm

    if not eps0 > 0:
        raise DomainError("eps0 must be positive")
    rng = np.random.default_rng(seed)
    fam = str(family).lower().strip("()")
    shape0 = _family_shape(fam, grid, rng)
    n0 = static_norm(grid, shape0, 2 * rho0)
    if not n0 > 0:
        raise DomainError("initial data shape has zero norm")
    u0 = Field(grid, shape0 * (eps0 / n0), hermitian=True, dirichlet=True)
    u1c = np.zeros_like(shape0)
    if u1_factor:
        shape1 = _family_shape(fam, grid, rng)
        u1c = shape1 * (u1_factor * eps0 / static_norm(grid, shape1, 2 * rho0))
    return u0, Field(grid, u1c, hermitian=True, dirichlet=True)


# ---------------------------------------------------------------------------
# solver


def cfl_limit(grid, umax):
    lim = DT_CAP
    if umax > 0:
        lim = min(lim, CFL_FACTOR * grid.period / (max(grid.N1, grid.N2) * umax))
    return lim


class HydroSolver:
    """IMEX integrator for the hydrostatic system."""

    eps = 0.0

    def __init__(self, grid, nonlinear=True, constraint_tol=CONSTRAINT_TOL):
        self.grid = grid
        self.nonlinear = nonlinear
        self.constraint_tol = constraint_tol
        self.modal = ModalSystem(grid, self.eps)
        self.last_lambda = None
        self.drift_events = 0
        self._rk4_limit = None

    # forces ---------------------------------------------------------------

    def modal_force(self, uc):
        m = self.modal
        if not self.nonlinear:
            z = np.zeros((len(m.kappa), m.n), dtype=complex)
            return (z, z.copy()), 0.0
        n, _, umax = advection_parts(self.grid, uc)
        par, perp = m.to_modal(n)
        return m.forces(par, perp), umax

    def _check_dt(self, dt, umax):
        if not dt > 0:
            raise StabilityError(f"time step must be positive, got {dt!r}")
        lim = cfl_limit(self.grid, umax)
        if dt > lim:
            raise StabilityError(f"dt = {dt:g} exceeds the advective limit {lim:g}")

    def _wrap(self, state, par_u, perp_u, par_w, perp_w, t, force, dt):
        m = self.modal
        g = self.grid
        uc = g.symmetrize(m.from_modal(par_u, perp_u))
        wc = g.symmetrize(m.from_modal(par_w, perp_w))
        if not (np.all(np.isfinite(uc)) and np.all(np.isfinite(wc))):
            raise BlowUpError(f"non-finite coefficients after step to t = {t:g}", last_valid_time=state.t)
        new = self._new_state(state, uc, wc, t, force, dt)
        self._enforce_constraint(new)
        return new

    def _new_state(self, state, uc, wc, t, force, dt):
        g = self.grid
        return HydroState(t, Field(g, uc, True, True), Field(g, wc, True, True), state.schedule, force, dt)

    def _enforce_constraint(self, state):
        rep = check_compatibility(state, self.constraint_tol)
        if rep.ok:
            return
        # mode-wise removal of the vertical mean of the divergence
        self.drift_events += 1
        log.warning("constraint drift %.3e at t = %g; projecting", max(rep.u_residual, rep.w_residual), state.t)
        m = self.modal
        for f in self._velocity_fields(state):
            par, perp = m.to_modal(f.coeffs)
            mean = (par @ m.q) / m.q.sum()
            par = par - mean[:, None] * m.constrained_mode[:, None]
            f.coeffs = self.grid.symmetrize(m.from_modal(par, perp))
        check_compatibility(state, self.constraint_tol, strict=True)

    def _velocity_fields(self, state):
        return state.u, state.w

    # stepping -------------------------------------------------------------

    def step(self, state, dt):
        m = self.modal
        u = m.to_modal(state.u.coeffs)
        w = m.to_modal(state.w.coeffs)
        f0, umax = self.modal_force(state.u.coeffs)
        self._check_dt(dt, umax)
        if state.prev_force is not None and state.prev_dt == dt:
            fbar = tuple(1.5 * a - 0.5 * b for a, b in zip(f0, state.prev_force))
        elif self.nonlinear:
            us, _, _ = m.cn_advance(dt, u, w, f0)
            fs, _ = self.modal_force(m.from_modal(*us))
            fbar = tuple(0.5 * (a + b) for a, b in zip(f0, fs))
        else:
            fbar = f0
        un, wn, lam = m.cn_advance(dt, u, w, fbar)
        self.last_lambda = lam
        return self._wrap(state, un[0], un[1], wn[0], wn[1], state.t + dt, f0, dt)

    def acceleration_modal(self, u, w):
        f, _ = self.modal_force(self.modal.from_modal(*u))
        return self.modal.acceleration(u, w, f)

    def rk4_limit(self):
        if self._rk4_limit is None:
            self._rk4_limit = RK4_STABILITY / self.modal.max_frequency()
        return self._rk4_limit

    def reference_step_rk4(self, state, dt):
        """Classical RK4 on the same semi-discretisation (verification only).

        Stable for dt <= 2.5 / |mu_max|, mu the eigenvalues of the linear first-order
        system; on this wave-type operator |mu_max| ~ 2/dy, so dt <~ 1.25 dy.
        """
        lim = self.rk4_limit()
        if not 0 < dt <= lim:
            raise StabilityError(f"RK4 step dt = {dt:g} outside the stability bound {lim:g}")
        m = self.modal
        u = m.to_modal(state.u.coeffs)
        w = m.to_modal(state.w.coeffs)

        def rhs(uu, ww):
            acc, _ = self.acceleration_modal(uu, ww)
            return ww, acc

        def axpy(x, a, y):
            return tuple(xi + a * yi for xi, yi in zip(x, y))

        k1u, k1w = rhs(u, w)
        k2u, k2w = rhs(axpy(u, dt / 2, k1u), axpy(w, dt / 2, k1w))
        k3u, k3w = rhs(axpy(u, dt / 2, k2u), axpy(w, dt / 2, k2w))
        k4u, k4w = rhs(axpy(u, dt, k3u), axpy(w, dt, k3w))
        un = tuple(a + dt / 6 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(u, k1u, k2u, k3u, k4u))
        wn = tuple(a + dt / 6 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(w, k1w, k2w, k3w, k4w))
        return self._wrap(state, m.clean(un[0]), un[1], m.clean(wn[0]), wn[1], state.t + dt, None, None)

    def acceleration(self, state):
        """Projected w_t of the semi-discrete system at the given state."""
        m = self.modal
        acc, lam = self.acceleration_modal(m.to_modal(state.u.coeffs), m.to_modal(state.w.coeffs))
        return Field(self.grid, self.grid.symmetrize(m.from_modal(*acc)), True, True)

    def multiplier_pressure(self, lam=None):
        """Pressure coefficients from the constraint multiplier lam = i|k| p."""
        m = self.modal
        lam = self.last_lambda if lam is None else lam
        p = np.zeros((self.grid.N1, self.grid.N2), dtype=complex)
        if lam is None:
            return PressureField(self.grid, p)
        kap = np.where(m.kappa > 0, m.kappa, 1.0)
        p[m.I1, m.I2] = np.where(m.kappa > 0, lam / (1j * kap), 0.0)
        return PressureField(self.grid, p)

    def initial_state(self, u0, u1, schedule=None, t=0.0):
        return HydroState(t, u0.copy(), u1.copy(), schedule)

    def run(self, state, dt, T, callback=None, stride=1):
        """Advance to time T; callback(state, step_index) every `stride` steps and at the end."""
        # reject a step outside the advective cap even if it would never be taken
        self._check_dt(dt, 0.0)
        nsteps = int(round((T - state.t) / dt))
        if callback is not None:
            callback(state, 0)
        for i in range(1, nsteps + 1):
            state = self.step(state, dt)
            if callback is not None and (i % stride == 0 or i == nsteps):
                callback(state, i)
        return state
