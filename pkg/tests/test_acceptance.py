"""Acceptance criteria; each test prints one PASS/FAIL line with the measured value.

Tolerances are pinned here as constants and are not tuned to the implementation.
"""

import time

import numpy as np
import pytest

from hypstrip import cli
from hypstrip.aniso import AnisoSolver, divergence_residual
from hypstrip.diagnostics import RATE, SLACK
from hypstrip.grid import Field, StripGrid
from hypstrip.hydro import HydroSolver, check_compatibility, initial_acceleration, make_initial_data
from hypstrip.limit import SweepPlan, run_sweep
from hypstrip.pipeline import reference_run
from hypstrip.verify import (check_norm_equivalence, check_poincare, check_radius_identity,
                             check_weight_certificates)

# criterion 1, 2, 4
EPS0 = 1e-3
DELTA0 = 1e-3
RHO0 = 0.5
REF_GRID = dict(N=32, Ny=65, dt=0.02, T=64.0)
REF_RUNTIME = 600.0
# criterion 3
SWEEP_EPS = (0.2, 0.1, 0.05)
MIN_ORDER = 0.9
SWEEP_RUNTIME = 1800.0
# criterion 5
ORACLE_TOL = 1e-4
IMEX_SLOPE = 1.8
RK4_SLOPE = 3.8
# criterion 6-8
IDENTITY_TOL = 1e-12
CERT_TOL = 1e-9
# criterion 10
HYDRO_CONSTRAINT_TOL = 1e-10
ANISO_DIV_TOL = 1e-9
# criterion 11
ACC_SLOPE = 0.9


def rel(a, b):
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2) / np.sum(np.abs(b) ** 2)))


@pytest.fixture(scope="module")
def hydro_reference():
    t0 = time.perf_counter()
    res = reference_run(family="a", eps0=EPS0, rho0=RHO0, **REF_GRID)
    return res, time.perf_counter() - t0


def test_criterion_01_decay_bound(hydro_reference, report):
    res, secs = hydro_reference
    c_all = all(r.C_holds for r in res.records)
    ok = c_all and res.decay_rate <= -RATE and secs < REF_RUNTIME
    report("criterion 1 decay bound", ok,
           f"C(t) at {len(res.records)} samples: {c_all}; rate {res.decay_rate:.4f} (<= {-RATE:.5f}); "
           f"runtime {secs:.0f}s (< {REF_RUNTIME:.0f}s)")
    assert ok


def test_criterion_02_energy_bound(hydro_reference, report):
    res, _ = hydro_reference
    v = res.energy
    ok = v.holds and all(r.energy_bound_holds for r in res.records)
    report("criterion 2 weighted energy bound", ok,
           f"worst e^(t/16)|u|^2 / limit = {v.worst_ratio:.3e} (<= {1 + SLACK}); first violation {v.first_violation}")
    assert ok


def test_criterion_03_hydrostatic_limit(report):
    t0 = time.perf_counter()
    rep = run_sweep(SweepPlan(list(SWEEP_EPS), N=16, Ny=65, T=32.0, eps0=EPS0, rho0=RHO0))
    secs = time.perf_counter() - t0
    ok = all(s == "ok" for s in rep.status) and rep.order >= MIN_ORDER and secs < SWEEP_RUNTIME
    errs = ", ".join(f"{e:.3e}" for e in rep.sup_error)
    report("criterion 3 hydrostatic limit", ok,
           f"errors [{errs}] fit q = {rep.order:.3f} (>= {MIN_ORDER}); runtime {secs:.0f}s")
    assert ok


def test_criterion_04_aniso_decay(report):
    res = reference_run(family="a", eps0=DELTA0, rho0=RHO0, eps=0.1, **REF_GRID)
    c_all = all(r.C_holds for r in res.records)
    worst = max(r.x_norm / r.bound for r in res.records)
    report("criterion 4 anisotropic decay", c_all,
           f"eps = 0.1, worst |(u, eps v)|_X / (4 delta0 e^(-t/32)) = {worst:.3e} (<= {1 + SLACK})")
    assert c_all


def _linear_mode_errors(g, dts, rk4):
    X1, _, Y = g.nodes()
    u2 = np.sin(X1) * np.sin(np.pi * Y)
    u0 = Field.from_physical(g, np.stack([0 * u2, u2]), dirichlet=True)
    lam = 4 / g.dy**2 * np.sin(np.pi * g.dy / 2) ** 2
    om = np.sqrt(lam - 0.25)
    alpha = np.exp(-0.5) * (np.cos(om) + 0.5 / om * np.sin(om))
    errs = []
    for dt in dts:
        s = HydroSolver(g, nonlinear=False)
        st = s.initial_state(u0, Field.zeros(g, 2))
        for _ in range(int(round(1.0 / dt))):
            st = s.reference_step_rk4(st, dt) if rk4 else s.step(st, dt)
        errs.append(rel(st.u.coeffs, alpha * u0.coeffs))
    return errs


def test_criterion_05_oracle_equivalence(report):
    g = StripGrid(8, 8, 17)
    u0, u1 = make_initial_data("a", EPS0, RHO0, g, seed=0, u1_factor=1.0)
    s = HydroSolver(g)
    a, b = s.initial_state(u0, u1), s.initial_state(u0, u1)
    for _ in range(200):
        a = s.step(a, 0.005)
    for _ in range(2000):
        b = s.reference_step_rk4(b, 0.0005)
    # the gate is on the solution u; the u_t slot is reported alongside
    diff = rel(a.u.coeffs, b.u.coeffs)
    diff_w = rel(a.w.coeffs, b.w.coeffs)
    dts_imex, dts_rk4 = (0.02, 0.01, 0.005), (0.04, 0.02, 0.01)
    si = np.polyfit(np.log(dts_imex), np.log(_linear_mode_errors(g, dts_imex, False)), 1)[0]
    sr = np.polyfit(np.log(dts_rk4), np.log(_linear_mode_errors(g, dts_rk4, True)), 1)[0]
    ok = diff <= ORACLE_TOL and si >= IMEX_SLOPE and sr >= RK4_SLOPE
    report("criterion 5 oracle equivalence", ok,
           f"IMEX vs RK4 rel L2 of u {diff:.3e} (<= {ORACLE_TOL}), of u_t {diff_w:.3e}; slopes IMEX {si:.2f} (>= {IMEX_SLOPE}), "
           f"RK4 {sr:.2f} (>= {RK4_SLOPE})")
    assert ok


def test_criterion_06_radius_identity(report):
    r = check_radius_identity(tol=IDENTITY_TOL)
    worst = max(r["max_residual"].values())
    report("criterion 6 radius identity", r["pass"], f"max residual {worst:.3e} (<= {IDENTITY_TOL})")
    assert r["pass"]


def test_criterion_07_poincare(report):
    r = check_poincare(ny=65, count=100, seed=0)
    report("criterion 7 discrete Poincare", r["pass"],
           f"max ratio {r['max_ratio']:.4f} (<= 0.25); sine ratio {r['sine_ratio']:.6f}, "
           f"|error| {r['sine_error']:.2e} (<= dy^2 = {r['dy2']:.2e})")
    assert r["pass"]


def test_criterion_08_weight_certificates(report):
    r = check_weight_certificates(tol=CERT_TOL)
    worst = max(max(v["rel_change"]) for v in r["by_rho"].values())
    c = r["by_rho"]["0.5"]
    report("criterion 8 weight inequalities", r["pass"],
           f"C1 = {c['C1']:.10g}, C2 = {c['C2']:.10g}; max rel change 60 -> 120: {worst:.2e} (<= {CERT_TOL})")
    assert r["pass"]


def test_criterion_09_norm_equivalence(report):
    r = check_norm_equivalence(count=100, seed=0)
    report("criterion 9 norm equivalence", r["pass"],
           f"{r['samples']} samples: lower failures {r['lower_failures']}, upper failures {r['upper_failures']}")
    assert r["pass"]


def test_criterion_10_constraints(report):
    g = StripGrid(16, 16, 33)
    u0, u1 = make_initial_data("a", EPS0, RHO0, g, seed=0, u1_factor=1.0)
    s = HydroSolver(g)
    st = s.initial_state(u0, u1)
    worst_h = 0.0
    for _ in range(1000):
        st = s.step(st, 0.02)
        rep = check_compatibility(st)
        worst_h = max(worst_h, max(rep.u_residual, rep.w_residual) / rep.scale)
    # sheared data with nonzero divergence, so the slaved v is active
    X1, _, Y = g.nodes()
    a = EPS0 * np.sin(X1) * np.sin(2 * np.pi * Y)
    ua = Field.from_physical(g, np.stack([a, 0 * a]), dirichlet=True)
    wa = Field.from_physical(g, np.stack([0.5 * a, -0.5 * a]), dirichlet=True)
    sa = AnisoSolver(g, 0.1)
    st = sa.initial_state(ua, wa)
    worst_a = 0.0
    for _ in range(1000):
        st = sa.step(st, 0.02)
        worst_a = max(worst_a, divergence_residual(st))
    ok = worst_h <= HYDRO_CONSTRAINT_TOL and worst_a <= ANISO_DIV_TOL
    report("criterion 10 constraint preservation", ok,
           f"hydro max per-step residual {worst_h:.2e} (<= {HYDRO_CONSTRAINT_TOL}); "
           f"aniso max divergence residual over 1000 steps {worst_a:.2e} (<= {ANISO_DIV_TOL})")
    assert ok


def test_criterion_11_initial_acceleration(report):
    g = StripGrid(16, 16, 65)
    u0, u1 = make_initial_data("a", EPS0, RHO0, g, seed=0, u1_factor=1.0)
    a0 = initial_acceleration(u0, u1).coeffs
    s = HydroSolver(g)
    dts = (0.04, 0.02, 0.01, 0.005)
    errs = []
    for dt in dts:
        st = s.initial_state(u0, u1)
        nxt = s.step(st, dt)
        errs.append(rel((nxt.w.coeffs - st.w.coeffs) / dt, a0))
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    ok = slope >= ACC_SLOPE
    report("criterion 11 initial acceleration", ok,
           f"errors {', '.join(f'{e:.2e}' for e in errs)}; slope {slope:.3f} (>= {ACC_SLOPE})")
    assert ok


def test_criterion_12_determinism(tmp_path, report):
    args = ["--override", "N1=16", "--override", "N2=16", "--override", "Ny=33", "--override", "T=8",
            "--seed", "5"]
    codes = [cli.main(["run-hydro", "--out", str(tmp_path / d)] + args) for d in ("a", "b")]
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in ("diagnostics.jsonl", "diagnostics.csv", "summary.json", "final.ckpt"))
    ok = codes == [0, 0] and same
    report("criterion 12 determinism", ok, f"exit codes {codes}; byte-identical outputs: {same}")
    assert ok
