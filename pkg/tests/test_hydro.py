import numpy as np
import pytest

from hypstrip.diagnostics import static_norm
from hypstrip.errors import BlowUpError, ConstraintDriftError, DomainError, StabilityError
from hypstrip.grid import (Field, StripGrid, cumulative_trapezoid_matrix, first_derivative_matrix,
                           trapezoid_weights)
from hypstrip.hydro import (HydroSolver, HydroState, check_compatibility, initial_acceleration,
                            linear_energy, make_initial_data, nonlinear_term, recover_v, solve_pressure)


def vec(g, u1, u2):
    return Field.from_physical(g, np.stack([u1, u2]), dirichlet=True)


def rel(a, b):
    return np.sqrt(np.sum(np.abs(a - b) ** 2) / np.sum(np.abs(b) ** 2))


@pytest.fixture(scope="module")
def g():
    return StripGrid(8, 8, 17)


# recover_v ------------------------------------------------------------------

def test_recover_v_divergence_free(g):
    X1, X2, Y = g.nodes()
    # psi = sin x1 sin x2, u = (d2 psi, -d1 psi) sin(pi y)
    u = vec(g, np.sin(X1) * np.cos(X2) * np.sin(np.pi * Y), -np.cos(X1) * np.sin(X2) * np.sin(np.pi * Y))
    assert np.max(np.abs(recover_v(u).coeffs)) <= 1e-15


def test_recover_v_shear(g):
    X1, X2, Y = g.nodes()
    u = vec(g, np.cos(2 * X2) * np.sin(np.pi * Y), 0 * X1)
    assert np.max(np.abs(recover_v(u).coeffs)) <= 1e-15


def test_recover_v_single_mode(g):
    X1, _, Y = g.nodes()
    prof = np.cos(2 * np.pi * Y)  # zero vertical mean
    v = recover_v(vec(g, np.sin(X1) * prof, 0 * X1)).physical()
    exact = -np.cos(X1) * np.sin(2 * np.pi * Y) / (2 * np.pi)
    assert np.max(np.abs(v - exact)) <= 2 * g.dy**2
    assert np.max(np.abs(v[..., -1])) <= 1e-14


# compatibility --------------------------------------------------------------

def test_compatibility_divergence_free_field(g):
    X1, X2, Y = g.nodes()
    s = np.sin(np.pi * Y)
    u = vec(g, np.sin(X1) * np.cos(X2) * s, -np.cos(X1) * np.sin(X2) * s)
    rep = check_compatibility(HydroState(0.0, u, Field.zeros(g, 2)))
    assert rep.u_residual <= 1e-15 and rep.ok


def test_compatibility_flags_violation(g):
    X1, _, Y = g.nodes()
    u = vec(g, np.sin(X1) * np.sin(np.pi * Y), 0 * X1)
    state = HydroState(0.0, u, Field.zeros(g, 2))
    rep = check_compatibility(state)
    quad = float(np.sum(trapezoid_weights(g.Ny) * np.sin(np.pi * g.y)))
    assert not rep.ok
    assert rep.u_residual == pytest.approx(quad, rel=1e-12)
    assert abs(quad - 2 / np.pi) <= g.dy**2
    assert rep.mode in ((1, 0), (-1, 0))
    with pytest.raises(ConstraintDriftError):
        check_compatibility(state, strict=True)


def test_compatibility_after_steps(g):
    u0, u1 = make_initial_data("a", 1e-3, 0.5, g, seed=3, u1_factor=0.5)
    s = HydroSolver(g)
    st = s.initial_state(u0, u1)
    for _ in range(20):
        st = s.step(st, 0.02)
        rep = check_compatibility(st)
        assert max(rep.u_residual, rep.w_residual) <= 1e-10 * rep.scale
    assert s.drift_events == 0


# pressure -------------------------------------------------------------------

def test_pressure_trivial_cases(g):
    assert np.max(np.abs(solve_pressure(Field.zeros(g, 2)).coeffs)) == 0.0
    X1, _, Y = g.nodes()
    u = vec(g, 0.3 * np.sin(np.pi * Y) + 0 * X1, 0 * X1)
    assert np.max(np.abs(solve_pressure(u).coeffs)) <= 1e-16


def test_pressure_single_mode_quadrature_oracle():
    g = StripGrid(16, 16, 33)
    eps = 0.1
    X1, _, Y = g.nodes()
    u1 = eps * np.sin(X1) * np.sin(2 * np.pi * Y)
    p = solve_pressure(vec(g, u1, 0 * u1)).coeffs
    # oracle: physical-space integrand, trapezoid in y, FFT in x, divide by -|k|^2
    q1 = u1 * (eps * np.cos(X1) * np.sin(2 * np.pi * Y)) * 2.0  # u1 d1 u1 + (d_x.u) u1
    iq = np.sum(q1 * trapezoid_weights(g.Ny), axis=-1)
    iqh = np.fft.fft2(iq) / iq.size
    duy = np.einsum("ij,abj->abi", first_derivative_matrix(g.Ny), u1)
    jump = np.fft.fft2(duy[..., -1] - duy[..., 0]) / iq.size
    K1 = g.K1
    f = -(1j * K1 * iqh) + 1j * K1 * jump
    ref = np.where(g.ksq > 0, -f / np.where(g.ksq > 0, g.ksq, 1), 0)
    assert np.max(np.abs(p - ref)) <= 1e-10 * eps**2
    assert abs(p[2, 0] - eps**2 / 8) <= 1e-12


# nonlinear term -------------------------------------------------------------

def test_nonlinear_trivial_cases(g):
    assert np.max(np.abs(nonlinear_term(Field.zeros(g, 2)).coeffs)) == 0.0
    Y = g.nodes()[2]
    u = vec(g, np.sin(np.pi * Y) * np.cos(np.pi * Y), 0 * Y)
    assert np.max(np.abs(nonlinear_term(u).coeffs)) <= 1e-17


def test_nonlinear_fine_grid_oracle(g):
    eps = 1e-2
    X1, _, Y = g.nodes()
    s = np.sin(np.pi * Y)
    n = nonlinear_term(vec(g, eps * np.sin(X1) * s, 0 * X1)).coeffs
    # reference: 2x horizontal resolution, plain physical products, no truncation
    N = 2 * g.N1
    x = np.arange(N) * 2 * np.pi / N
    A1, _, Yf = np.meshgrid(x, x, g.y, indexing="ij")
    u1 = eps * np.sin(A1) * np.sin(np.pi * Yf)
    d1u1 = eps * np.cos(A1) * np.sin(np.pi * Yf)
    v = -np.einsum("ij,abj->abi", cumulative_trapezoid_matrix(g.Ny), d1u1)
    dyu1 = np.einsum("ij,abj->abi", first_derivative_matrix(g.Ny), u1)
    ref1 = u1 * d1u1 + v * dyu1
    refh = np.fft.fft2(ref1, axes=(0, 1)) / N**2
    sel = np.r_[0:g.N1 // 2, N - g.N1 // 2:N]
    low = refh[np.ix_(sel, sel)]
    assert np.max(np.abs(n[0] - low)) <= 1e-8 * eps**2
    assert np.max(np.abs(n[1])) <= 1e-20
    # and against the closed form to O(dy^2)
    exact = eps**2 * np.sin(X1) * np.cos(X1) * (s**2 - (1 - np.cos(np.pi * Y)) * np.cos(np.pi * Y))
    assert np.max(np.abs(g.to_physical(n[0]) - exact)) <= 5 * eps**2 * g.dy**2


# stepping -------------------------------------------------------------------

def test_zero_state_fixed_point(g):
    s = HydroSolver(g)
    st = s.initial_state(Field.zeros(g, 2), Field.zeros(g, 2))
    for _ in range(5):
        st = s.step(st, 0.02)
    r = s.reference_step_rk4(s.initial_state(Field.zeros(g, 2), Field.zeros(g, 2)), 0.01)
    assert np.all(st.u.coeffs == 0) and np.all(st.w.coeffs == 0)
    assert np.all(r.u.coeffs == 0) and np.all(r.w.coeffs == 0)


def _single_mode_run(g, dt, T, rk4=False):
    X1, _, Y = g.nodes()
    u0 = vec(g, 0 * X1, np.sin(X1) * np.sin(np.pi * Y))
    s = HydroSolver(g, nonlinear=False)
    st = s.initial_state(u0, Field.zeros(g, 2))
    for _ in range(int(round(T / dt))):
        st = s.reference_step_rk4(st, dt) if rk4 else s.step(st, dt)
    return u0, st


def _alpha(lam, t):
    om = np.sqrt(lam - 0.25)
    return np.exp(-t / 2) * (np.cos(om * t) + 0.5 / om * np.sin(om * t))


def test_linear_mode_matches_damped_oscillator():
    # continuum: alpha'' + alpha' + pi^2 alpha = 0
    errs = []
    for ny, dt in ((33, 0.01), (65, 0.005)):
        g = StripGrid(8, 8, ny)
        u0, st = _single_mode_run(g, dt, 1.0)
        errs.append(rel(st.u.coeffs, _alpha(np.pi**2, 1.0) * u0.coeffs))
    assert errs[1] <= 0.01
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.25)


@pytest.mark.parametrize("rk4,dts,min_slope", [(False, (0.02, 0.01, 0.005), 1.8),
                                               (True, (0.04, 0.02, 0.01), 3.8)])
def test_time_refinement_slopes(g, rk4, dts, min_slope):
    # semi-discrete eigenvalue of the nodal d_y^2 on sin(pi y)
    lam = 4 / g.dy**2 * np.sin(np.pi * g.dy / 2) ** 2
    errs = []
    for dt in dts:
        u0, st = _single_mode_run(g, dt, 1.0, rk4)
        errs.append(rel(st.u.coeffs, _alpha(lam, 1.0) * u0.coeffs))
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert slope >= min_slope, (errs, slope)


def test_imex_and_rk4_agree_under_refinement(g):
    u0, u1 = make_initial_data("a", 1e-3, 0.5, g, seed=1, u1_factor=1.0)
    s = HydroSolver(g)
    diffs = []
    for dt in (0.02, 0.01):
        a = s.initial_state(u0, u1)
        b = s.initial_state(u0, u1)
        for _ in range(int(round(0.5 / dt))):
            a = s.step(a, dt)
            b = s.reference_step_rk4(b, dt)
        diffs.append(rel(a.u.coeffs, b.u.coeffs))
    assert diffs[1] < diffs[0] / 3


def test_linear_energy_nonincreasing(g):
    u0, u1 = make_initial_data("b", 1e-3, 0.5, g, seed=2, u1_factor=1.0)
    s = HydroSolver(g, nonlinear=False)
    st = s.initial_state(u0, u1)
    e = [linear_energy(st)]
    for _ in range(50):
        st = s.step(st, 0.02)
        e.append(linear_energy(st))
    assert np.all(np.diff(e) <= 1e-12 * e[0])


def test_stability_rejections(g):
    s = HydroSolver(g)
    u0, u1 = make_initial_data("a", 1e-3, 0.5, g)
    st = s.initial_state(u0, u1)
    with pytest.raises(StabilityError):
        s.step(st, 5.0)
    with pytest.raises(StabilityError):
        s.step(st, 0.0)
    with pytest.raises(StabilityError):
        s.reference_step_rk4(st, 2 * s.rk4_limit())


def test_blow_up_detection(g):
    s = HydroSolver(g, nonlinear=False)
    u0, u1 = make_initial_data("a", 1e-3, 0.5, g)
    u0.coeffs[0, 1, 1, 3] = np.nan
    with pytest.raises(BlowUpError) as info:
        s.step(s.initial_state(u0, u1, t=2.0), 0.02)
    assert info.value.last_valid_time == 2.0


# initial acceleration -------------------------------------------------------

def test_initial_acceleration_trivial(g):
    z = Field.zeros(g, 2)
    assert np.all(initial_acceleration(z, z).coeffs == 0)
    _, u1 = make_initial_data("a", 1e-3, 0.5, g, seed=5, u1_factor=1.0)
    assert np.array_equal(initial_acceleration(z, u1).coeffs, -u1.coeffs)


def test_initial_acceleration_matches_projected_rhs():
    g = StripGrid(16, 16, 33)
    u0, u1 = make_initial_data("a", 1e-3, 0.5, g, seed=0, u1_factor=1.0)
    a0 = initial_acceleration(u0, u1).coeffs
    acc = HydroSolver(g).acceleration(HydroState(0.0, u0, u1)).coeffs
    assert rel(acc, a0) <= 1e-8


# initial data ---------------------------------------------------------------

@pytest.mark.parametrize("family", ["a", "b"])
def test_initial_data_properties(g, family):
    u0, u1 = make_initial_data(family, 1e-3, 0.5, g, seed=11, u1_factor=0.5)
    assert static_norm(g, u0.coeffs, 1.0) == pytest.approx(1e-3, rel=1e-12)
    assert static_norm(g, u1.coeffs, 1.0) == pytest.approx(5e-4, rel=1e-12)
    phys = u0.physical()
    assert np.all(phys[..., 0] == 0) and np.all(phys[..., -1] == 0)
    div = 1j * (g.K1[:, :, None] * u0.coeffs[0] + g.K2[:, :, None] * u0.coeffs[1])
    assert np.max(np.abs(np.sum(div * g.quad, axis=-1))) <= 1e-18
    assert u0.hermitian_defect() <= 1e-18


def test_initial_data_family_a_divergence_free(g):
    u0, _ = make_initial_data("a", 1e-3, 0.5, g, seed=4)
    div = 1j * (g.K1[:, :, None] * u0.coeffs[0] + g.K2[:, :, None] * u0.coeffs[1])
    assert np.max(np.abs(div)) <= 1e-18


def test_initial_data_errors(g):
    with pytest.raises(DomainError):
        make_initial_data("c", 1e-3, 0.5, g)
    with pytest.raises(DomainError):
        make_initial_data("a", 0.0, 0.5, g)


def test_initial_data_deterministic(g):
    a = make_initial_data("a", 1e-3, 0.5, g, seed=9)[0].coeffs
    b = make_initial_data("a", 1e-3, 0.5, g, seed=9)[0].coeffs
    c = make_initial_data("a", 1e-3, 0.5, g, seed=10)[0].coeffs
    assert a.tobytes() == b.tobytes() and a.tobytes() != c.tobytes()
