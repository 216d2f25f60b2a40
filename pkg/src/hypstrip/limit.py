"""Hydrostatic-limit sweep: matched anisotropic and hydrostatic runs across eps."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .aniso import AnisoSolver
from .diagnostics import pair_norm, static_norm
from .errors import DomainError, HypStripError, StructuralError
from .gevrey import RadiusSchedule
from .grid import Field, StripGrid
from .hydro import HydroSolver, _family_shape, make_initial_data
from .pipeline import data_hash


@dataclass
class SweepPlan:
    eps_values: list
    N: int = 16
    Ny: int = 65
    period: float = 2 * math.pi
    family: str = "a"
    eps0: float = 1e-3
    rho0: float = 0.5
    seed: int = 0
    u1_factor: float = 0.0
    dt: float = 0.02
    T: float = 32.0
    sample_every: float = 0.5
    mismatch: float = 0.0  # |u0^eps - u0|_{X_{2 rho0}} offset

    def __post_init__(self):
        e = [float(x) for x in self.eps_values]
        if len(e) == 0 or any(x <= 0 or x > 0.5 for x in e):
            raise DomainError("eps values must lie in (0, 0.5]")
        if any(b >= a for a, b in zip(e, e[1:])):
            raise DomainError("eps values must be strictly decreasing")
        self.eps_values = e

    def grid(self):
        return StripGrid(self.N, self.N, self.Ny, self.period)


@dataclass
class ConvergenceReport:
    eps: list
    sup_error: list
    status: list
    order: float
    constant: float
    mismatch_u0: float
    mismatch_u1: float
    monotone: bool
    monotonicity_violations: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=str)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("# " + json.dumps(self.provenance, sort_keys=True, default=str) + "\n")
            fh.write("eps,sup_error,status,fit_order,fit_constant,mismatch_u0,mismatch_u1\n")
            for e, s, st in zip(self.eps, self.sup_error, self.status):
                fh.write(f"{e!r},{s!r},{st},{self.order!r},{self.constant!r},"
                         f"{self.mismatch_u0!r},{self.mismatch_u1!r}\n")


def error_norm(a, b, t, rho):
    """|u_a - u_b|_{X_rho} with time slots from the respective time-derivative fields.

    ``rho`` is the radius at which to evaluate (the sweep uses rho(t)/2).
    """
    if not a.grid.same_as(b.grid):
        raise StructuralError("states live on different grids")
    if abs(a.t - t) > 1e-9 or abs(b.t - t) > 1e-9:
        raise StructuralError("states are not at the requested time")
    du = a.u.coeffs - b.u.coeffs
    dw = a.w.coeffs - b.w.coeffs
    return pair_norm(a.grid, du, dw, rho)


def fit_order(eps, err):
    eps = np.asarray(eps, dtype=float)
    err = np.asarray(err, dtype=float)
    ok = np.isfinite(err) & (err > 0)
    if ok.sum() < 3:
        return float("nan"), float("nan")
    q, logc = np.polyfit(np.log(eps[ok]), np.log(err[ok]), 1)
    return float(q), float(np.exp(logc))


def matched_data(plan, grid):
    u0, u1 = make_initial_data(plan.family, plan.eps0, plan.rho0, grid, seed=plan.seed, u1_factor=plan.u1_factor)
    u0e = u0
    if plan.mismatch:
        rng = np.random.default_rng(plan.seed + 7919)
        shape = _family_shape(str(plan.family).lower(), grid, rng)
        shape *= plan.mismatch / static_norm(grid, shape, 2 * plan.rho0)
        u0e = Field(grid, u0.coeffs + shape, True, True)
    return u0, u1, u0e, u1


def _hydro_samples(plan, grid, u0, u1):
    solver = HydroSolver(grid)
    stride = max(1, int(round(plan.sample_every / plan.dt)))
    samples = []
    solver.run(solver.initial_state(u0, u1), plan.dt, plan.T,
               lambda st, i: samples.append((st.t, st.u.coeffs.copy(), st.w.coeffs.copy())), stride)
    return samples


def _aniso_job(args):
    plan, eps, samples, u0e, u1e = args
    grid = plan.grid()
    schedule = RadiusSchedule(plan.rho0)
    solver = AnisoSolver(grid, eps)
    stride = max(1, int(round(plan.sample_every / plan.dt)))
    errs = []
    it = iter(samples)

    def cb(st, i):
        t, uh, wh = next(it)
        if abs(t - st.t) > 1e-9:
            raise StructuralError("sample times out of step")
        rho = 0.5 * float(schedule.radius(st.t))
        errs.append(pair_norm(grid, st.u.coeffs - uh, st.ut.coeffs - wh, rho))

    try:
        solver.run(solver.initial_state(Field(grid, u0e, True, True), Field(grid, u1e, True, True)),
                   plan.dt, plan.T, cb, stride)
        return float(max(errs)), "ok"
    except HypStripError as exc:
        return float("nan"), f"failed: {type(exc).__name__}: {exc}"


def run_sweep(plan, workers=1):
    grid = plan.grid()
    u0, u1, u0e, u1e = matched_data(plan, grid)
    samples = _hydro_samples(plan, grid, u0, u1)
    jobs = [(plan, e, samples, u0e.coeffs, u1e.coeffs) for e in plan.eps_values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_aniso_job, jobs))
    else:
        results = [_aniso_job(j) for j in jobs]
    errs = [r[0] for r in results]
    status = [r[1] for r in results]
    q, c = fit_order(plan.eps_values, errs)
    viol = []
    for i in range(1, len(errs)):
        if np.isfinite(errs[i]) and np.isfinite(errs[i - 1]) and errs[i] > 1.1 * errs[i - 1]:
            viol.append(plan.eps_values[i])
    mm0 = static_norm(grid, u0e.coeffs - u0.coeffs, 2 * plan.rho0)
    mm1 = static_norm(grid, u1e.coeffs - u1.coeffs, 2 * plan.rho0)
    prov = {"plan": asdict(plan), "initial_data_sha256": data_hash(u0.coeffs, u1.coeffs, u0e.coeffs),
            "norm_radius": "rho(t)/2", "samples": len(samples)}
    return ConvergenceReport(plan.eps_values, errs, status, q, c, float(mm0), float(mm1),
                             not viol, viol, prov)
