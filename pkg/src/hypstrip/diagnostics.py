"""Gevrey norms on live states, the decay/energy bounds and the bootstrap monitor.

Norms are evaluated on the Fourier side: for every mode k the y-norms of the
state are weighted by S(rho, |k_1|) + S(rho, |k_2|), the two directional symbols.
All L^2 norms are over the whole box (area factor included).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .gevrey import SymbolKind, symbol_values

SLACK = 0.05
RATE = 1.0 / 32.0


def _directional_symbols(grid, rho, kind):
    s1 = symbol_values(rho, np.abs(grid.k1), kind)
    s2 = symbol_values(rho, np.abs(grid.k2), kind)
    return s1[:, None] + s2[None, :]


def _blocks(grid, u, w=None):
    """Per-mode (time-derivative, d_y, zeroth) y-norms squared, components summed."""
    zero = grid.mode_l2_sq(u)
    grad = grid.mode_grad_sq(u)
    dt = grid.mode_l2_sq(w) if w is not None else np.zeros_like(zero)
    return dt, grad, zero


def norm_sq_arrays(grid, u, w, rho, which="X"):
    dt, grad, zero = _blocks(grid, u, w)
    if which == "X":
        s = _directional_symbols(grid, rho, SymbolKind.X)
        total = np.sum(s * (dt + grad + zero))
    else:
        s1 = _directional_symbols(grid, rho, SymbolKind.Y1)
        s0 = _directional_symbols(grid, rho, SymbolKind.Y0)
        total = np.sum(s1 * (dt + grad) + s0 * zero)
    return grid.area * float(total)


def static_norm(grid, u, rho):
    """X-norm of time-independent data (no time-derivative slot)."""
    return np.sqrt(norm_sq_arrays(grid, u, None, rho))


def _slots(state):
    if hasattr(state, "ut"):
        return state.u.coeffs, state.ut.coeffs
    return state.u.coeffs, state.w.coeffs


def x_norm(state, rho):
    u, w = _slots(state)
    return np.sqrt(norm_sq_arrays(state.u.grid, u, w, rho, "X"))


def y_norm(state, rho):
    u, w = _slots(state)
    return np.sqrt(norm_sq_arrays(state.u.grid, u, w, rho, "Y"))


def pair_norm(grid, u, w, rho):
    return np.sqrt(norm_sq_arrays(grid, u, w, rho, "X"))


# ---------------------------------------------------------------------------
# records and monitors


@dataclass
class DiagnosticsRecord:
    t: float
    rho: float
    x_norm: float
    y_norm: float
    energy: float
    bound: float
    hypothesis_bound: float
    energy_limit: float
    C_holds: bool
    H_holds: bool
    energy_bound_holds: bool
    dudt_norm: float = float("nan")
    dyu_norm: float = float("nan")
    constraint_residual: float = 0.0

    def to_row(self):
        return asdict(self)


def decay_bound(eps0, t, factor=4.0):
    return factor * eps0 * np.exp(-RATE * t)


def bootstrap_monitor(record, eps0, slack=SLACK):
    """(H holds, C holds) at one sample: x_norm <= 8 eps0 e^{-t/32}, <= 4 eps0 e^{-t/32}."""
    h = record.x_norm <= decay_bound(eps0, record.t, 8.0) * (1 + slack)
    c = record.x_norm <= decay_bound(eps0, record.t, 4.0) * (1 + slack)
    return bool(h), bool(c)


def initial_energy(grid, u0, u1, rho0):
    """16 (|u0|^2 + |u1|^2) at radius 2 rho0."""
    return 16.0 * (static_norm(grid, u0.coeffs, 2 * rho0) ** 2 + static_norm(grid, u1.coeffs, 2 * rho0) ** 2)


def make_record(t, rho, xn, yn, eps0, energy_limit, slack=SLACK, **extra):
    energy = float(np.exp(t / 16.0) * xn**2)
    bound = float(decay_bound(eps0, t, 4.0))
    hyp = float(decay_bound(eps0, t, 8.0))
    rec = DiagnosticsRecord(
        t=float(t), rho=float(rho), x_norm=float(xn), y_norm=float(yn), energy=energy,
        bound=bound, hypothesis_bound=hyp, energy_limit=float(energy_limit),
        C_holds=False, H_holds=False, energy_bound_holds=False, **extra)
    rec.H_holds, rec.C_holds = bootstrap_monitor(rec, eps0, slack)
    rec.energy_bound_holds = bool(energy <= energy_limit * (1 + slack))
    return rec


@dataclass
class EnergyVerdict:
    holds: bool
    first_violation: float | None
    limit: float
    worst_ratio: float


def energy_bound_check(history, eps0, u0, u1, rho0, slack=SLACK):
    """e^{t/16} |u(t)|^2_{X_rho(t)} <= 16 (|u0|^2 + |u1|^2)_{X_{2 rho0}} (1 + slack) at every sample.

    ``history`` holds DiagnosticsRecords or states carrying a radius schedule.
    """
    grid = u0.grid
    limit = initial_energy(grid, u0, u1, rho0)
    first, worst = None, 0.0
    for item in history:
        if isinstance(item, DiagnosticsRecord):
            t, xn = item.t, item.x_norm
        else:
            t = item.t
            xn = x_norm(item, float(item.schedule.radius(t)))
        e = np.exp(t / 16.0) * xn**2
        ratio = e / limit if limit > 0 else (0.0 if e == 0 else np.inf)
        worst = max(worst, ratio)
        if e > limit * (1 + slack) and first is None:
            first = float(t)
    return EnergyVerdict(first is None, first, float(limit), float(worst))


def bootstrap_log(records):
    """Counts of the implication pattern H observed => C observed."""
    h = sum(r.H_holds for r in records)
    hc = sum(r.H_holds and r.C_holds for r in records)
    return {"samples": len(records), "H": h, "H_and_C": hc, "implication_holds": h == hc}


def fit_decay_rate(times, norms, t_min=8.0, t_max=64.0):
    """Least-squares slope of log(norm) against t over [t_min, t_max]."""
    t = np.asarray(times, dtype=float)
    n = np.asarray(norms, dtype=float)
    sel = (t >= t_min - 1e-12) & (t <= t_max + 1e-12) & (n > 0)
    if sel.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(t[sel], np.log(n[sel]), 1)
    return float(slope)


def dy_state_norm(grid, u, w, rho):
    """|d_y u|_{X_rho} with time slot d_y w, derivatives by the nodal d_y stencil."""
    du = u @ grid.Dy.T
    dw = w @ grid.Dy.T if w is not None else None
    dt, _, zero = _blocks(grid, du, dw)
    # d_y of d_y u by the dyy stencil
    grad = grid.mode_l2_sq(u @ grid.Dyy.T)
    s = _directional_symbols(grid, rho, SymbolKind.X)
    return float(np.sqrt(grid.area * np.sum(s * (dt + grad + zero))))


def write_jsonl(path, records, header=None):
    with open(path, "w") as fh:
        if header is not None:
            fh.write(json.dumps({"header": header}, sort_keys=True) + "\n")
        for r in records:
            fh.write(json.dumps(asdict(r)) + "\n")


def write_csv(path, records, header=None):
    rows = [asdict(r) for r in records]
    if not rows:
        return
    cols = list(rows[0])
    with open(path, "w") as fh:
        if header is not None:
            fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in cols) + "\n")
