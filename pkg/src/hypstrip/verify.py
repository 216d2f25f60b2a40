"""Property suite run by the ``verify`` subcommand."""

import numpy as np

from .gevrey import (RadiusSchedule, certify_weight_inequalities, norm_equivalence_parts,
                     norm_equivalence_terms, radius_identity_residual)
from .grid import Field, StripGrid


def identity_times(n=1000, t_max=1000.0):
    return np.concatenate([[0.0], np.logspace(-3, np.log10(t_max), n - 1)])


def check_radius_identity(rho0s=(0.1, 0.5, 1.0, 2.0), tol=1e-12):
    t = identity_times()
    worst = {str(r): float(np.max(radius_identity_residual(RadiusSchedule(r), t))) for r in rho0s}
    return {"pass": max(worst.values()) <= tol, "max_residual": worst, "tol": tol}


def random_dirichlet_profiles(rng, count, ny):
    f = rng.standard_normal((count, ny)) + 1j * rng.standard_normal((count, ny))
    f[:, 0] = f[:, -1] = 0.0
    return f


def poincare_ratios(profiles, dy):
    q = np.full(profiles.shape[-1], dy)
    q[0] = q[-1] = 0.5 * dy
    l2 = np.sum(np.abs(profiles) ** 2 * q, axis=-1)
    grad = np.sum(np.abs(np.diff(profiles, axis=-1)) ** 2, axis=-1) / dy
    return l2 / grad


def check_poincare(ny=65, count=100, seed=0):
    dy = 1.0 / (ny - 1)
    rng = np.random.default_rng(seed)
    r = poincare_ratios(random_dirichlet_profiles(rng, count, ny), dy)
    y = np.linspace(0, 1, ny)
    sharp = float(poincare_ratios(np.sin(np.pi * y)[None], dy)[0])
    sharp_err = abs(sharp - 1 / np.pi**2)
    return {"pass": bool(np.all(r <= 0.25)) and sharp_err <= dy**2,
            "max_ratio": float(r.max()), "bound": 0.25,
            "sine_ratio": sharp, "sine_error": sharp_err, "dy2": dy**2}


def check_weight_certificates(rhos=(0.25, 0.5, 1.0), m_small=60, m_large=120, tol=1e-9):
    out, ok = {}, True
    for rho in rhos:
        c_small = certify_weight_inequalities(rho, m_small)
        c_large = certify_weight_inequalities(rho, m_large)
        rel = [abs(a - b) / abs(b) for a, b in zip(c_small, c_large)]
        good = all(np.isfinite(c_small + c_large)) and max(rel) <= tol
        ok &= good
        out[str(rho)] = {"C1": c_large[0], "C2": c_large[1], "rel_change": rel, "pass": good}
    return {"pass": ok, "by_rho": out, "tol": tol}


def random_band_limited(grid, rng, max_mode=4):
    c = np.zeros(grid.shape, dtype=complex)
    sel = (np.abs(grid.n1)[:, None] <= max_mode) & (np.abs(grid.n2)[None, :] <= max_mode)
    prof = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    prof[..., 0] = prof[..., -1] = 0.0
    c[sel] = prof[sel]
    return Field(grid, grid.symmetrize(c), hermitian=True, dirichlet=True)


def check_norm_equivalence(rhos=(0.25, 0.5), count=100, seed=0):
    grid = StripGrid(16, 16, 17)
    rng = np.random.default_rng(seed)
    fails_low = fails_up = 0
    for _ in range(count):
        f = random_band_limited(grid, rng)
        for rho in rhos:
            low, up = norm_equivalence_parts(f, rho)
            fails_low += not low
            fails_up += not up
    # axis-mode probe: the m = 0 term appears in both directional sums
    probe = np.zeros(grid.shape, dtype=complex)
    probe[1, 0, 1:-1] = np.sin(np.pi * grid.y[1:-1])
    lo, mid, up = norm_equivalence_terms(Field(grid, probe, hermitian=False), 0.25)
    return {"pass": fails_low == 0 and fails_up == 0, "lower_failures": fails_low,
            "upper_failures": fails_up, "samples": count * len(rhos),
            "axis_mode_probe": {"k": [1, 0], "rho": 0.25, "lower": lo, "X": mid, "full": up,
                                "upper_holds": mid <= up * (1 + 1e-12), "X_le_2full": mid <= 2 * up}}


def run_all(seed=0):
    checks = {
        "radius_identity": check_radius_identity(),
        "poincare": check_poincare(seed=seed),
        "weight_inequalities": check_weight_certificates(),
        "norm_equivalence": check_norm_equivalence(seed=seed),
    }
    return all(c["pass"] for c in checks.values()), checks
