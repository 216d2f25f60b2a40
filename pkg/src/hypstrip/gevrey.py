"""Gevrey-class weights, the shrinking radius schedule and per-wavenumber norm symbols.

The tangential Gevrey weight is

    L(rho, m) = rho**(m + 1) * (m + 1)**7 / (m!)**2,

and the norms used throughout the package are sums over derivative order m of
``c_m * L(rho, m)**2 * ||d_{x_j}^m h||**2``. On a periodic box a derivative of order
m in direction j acts as multiplication by ``|k_j|**m`` on each Fourier mode, so the
m-sum collapses into a per-mode symbol ``S(rho, |k_j|) = sum_m c_m L(rho, m)**2 |k_j|**(2m)``.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError, PrecisionError

DEFAULT_M_MAX = 400
DEFAULT_TAIL_TOL = 1e-14
LOOKAHEAD = 20
DEFAULT_DECAY_RATE = 1.0 / 96.0

# exp(log L) for m = 400 lies near 1e-1740: far outside double range, and the log
# itself (~ -4000) only carries ~5e-13 absolute accuracy in double. Extended precision
# keeps both the value and its logarithm accurate to ~1e-15 relative.
_LD = np.longdouble


class SymbolKind(str, enum.Enum):
    X = "X"
    Y1 = "Y-first-order"
    Y0 = "Y-zeroth-order"


def _check_rho(rho):
    if not np.isfinite(rho) or rho <= 0:
        raise DomainError(f"radius must be positive, got {rho!r}")


def _log_factorials(m_max):
    logs = np.log(np.arange(1, m_max + 1, dtype=_LD))
    return np.concatenate([np.zeros(1, dtype=_LD), np.cumsum(logs)])


@functools.lru_cache(maxsize=8)
def _log_factorial_table(m_max):
    table = _log_factorials(m_max)
    table.setflags(write=False)
    return table


def log_weight(rho, m, m_max=DEFAULT_M_MAX):
    """Natural log of L(rho, m) in extended precision."""
    _check_rho(rho)
    if int(m) != m or m < 0 or m > m_max:
        raise DomainError(f"derivative order must be an integer in [0, {m_max}], got {m!r}")
    m = int(m)
    lf = _log_factorial_table(m_max)[m]
    return (m + 1) * np.log(_LD(rho)) + 7 * np.log(_LD(m + 1)) - 2 * lf


def weight(rho, m, m_max=DEFAULT_M_MAX):
    """L(rho, m) = rho^(m+1) (m+1)^7 / (m!)^2, returned as ``numpy.longdouble``."""
    return np.exp(log_weight(rho, m, m_max))


@dataclass(frozen=True)
class WeightTable:
    """log L(rho, m) for m = 0..M_max built from the multiplicative recurrence

    L(rho, m+1) / L(rho, m) = rho * ((m+2)/(m+1))**7 / (m+1)**2.
    """

    rho: float
    M_max: int = DEFAULT_M_MAX
    log_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        _check_rho(self.rho)
        m = np.arange(self.M_max, dtype=_LD)
        steps = np.log(_LD(self.rho)) + 7 * np.log((m + 2) / (m + 1)) - 2 * np.log(m + 1)
        logs = np.concatenate([[np.log(_LD(self.rho))], np.log(_LD(self.rho)) + np.cumsum(steps)])
        logs.setflags(write=False)
        object.__setattr__(self, "log_weights", logs)

    def increments(self):
        return np.diff(self.log_weights)

    def weights(self):
        return np.exp(self.log_weights)


# ---------------------------------------------------------------------------
# radius schedule


@dataclass(frozen=True)
class RadiusSchedule:
    """rho(t) = rho0/2 + (rho0/2) exp(-a t)."""

    rho0: float
    a: float = DEFAULT_DECAY_RATE

    def __post_init__(self):
        _check_rho(self.rho0)
        # a = 0 is accepted as the degenerate constant-radius schedule
        if not np.isfinite(self.a) or self.a < 0:
            raise DomainError(f"decay rate must be nonnegative, got {self.a!r}")

    def _decay(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise DomainError("time must be finite and nonnegative")
        return np.exp(-self.a * t)

    def radius(self, t):
        e = self._decay(t)
        return 0.5 * self.rho0 * (1.0 + e)

    def d1(self, t):
        return -0.5 * self.rho0 * self.a * self._decay(t)

    def d2(self, t):
        return 0.5 * self.rho0 * self.a**2 * self._decay(t)

    @property
    def limit(self):
        return 0.5 * self.rho0


def radius(schedule: RadiusSchedule, t):
    return schedule.radius(t)


def radius_identity_rhs(schedule: RadiusSchedule, t):
    e = schedule._decay(t)
    return schedule.rho0 * schedule.a**2 * e / (2.0 * (1.0 + e))


def radius_identity_residual(schedule: RadiusSchedule, t):
    """|(rho'' - rho'^2/rho) - rho0 a^2 e^{-at} / (2 (1 + e^{-at}))|."""
    r = schedule.radius(t)
    lhs = schedule.d2(t) - schedule.d1(t) ** 2 / r
    return np.abs(lhs - radius_identity_rhs(schedule, t))


# ---------------------------------------------------------------------------
# norm symbols


def _log_coefficients(kind, rho, m):
    kind = SymbolKind(kind)
    if kind is SymbolKind.X:
        return np.zeros_like(m, dtype=float)
    if kind is SymbolKind.Y1:
        return np.log(m + 1.0) - np.log(rho)
    return 3.0 * (np.log(m + 1.0) - np.log(rho))


def _log_terms(rho, kappa, kind, m_max):
    """log(c_m L(rho,m)^2 kappa^(2m)), shape (len(kappa), m_max + 1)."""
    m = np.arange(m_max + 1, dtype=float)
    log_l2 = 2.0 * ((m + 1) * np.log(rho) + 7 * np.log(m + 1) - 2 * gammaln(m + 1))
    kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_k = np.log(kappa)[:, None]
        power = np.where(m[None, :] == 0, 0.0, 2.0 * m[None, :] * log_k)
    return log_l2[None, :] + power + _log_coefficients(kind, rho, m)[None, :]


def _truncated_sums(log_terms, tail_tol):
    """Sum each row up to the first index whose next LOOKAHEAD terms are negligible."""
    n_rows, n_terms = log_terms.shape
    top = np.max(log_terms, axis=1, keepdims=True)
    scaled = np.exp(log_terms - top)
    csum = np.cumsum(scaled, axis=1)
    values = np.empty(n_rows)
    stops = np.empty(n_rows, dtype=int)
    last = n_terms - 1 - LOOKAHEAD
    for i in range(n_rows):
        ahead = csum[i, LOOKAHEAD:] - csum[i, :-LOOKAHEAD]
        ok = np.nonzero(ahead[: last + 1] < tail_tol * csum[i, : last + 1])[0]
        if ok.size == 0:
            raise PrecisionError(
                f"norm symbol did not converge within {n_terms - 1} terms (row {i})"
            )
        stop = ok[0]
        stops[i] = stop
        values[i] = logsumexp(log_terms[i, : stop + 1])
    return np.exp(values), stops


@functools.lru_cache(maxsize=4096)
def _symbol_cached(rho, kappas, kind, tail_tol, m_max):
    values, _ = _truncated_sums(_log_terms(rho, np.array(kappas), kind, m_max), tail_tol)
    values.setflags(write=False)
    return values


def symbol_values(rho, kappa, kind=SymbolKind.X, tail_tol=DEFAULT_TAIL_TOL, m_max=DEFAULT_M_MAX):
    """Vectorised norm symbol over an array of nonnegative wavenumber magnitudes."""
    _check_rho(rho)
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0) or not np.all(np.isfinite(kappa)):
        raise DomainError("wavenumber magnitudes must be finite and nonnegative")
    flat = tuple(float(k) for k in kappa.ravel())
    out = _symbol_cached(float(rho), flat, SymbolKind(kind), float(tail_tol), int(m_max))
    return np.array(out).reshape(kappa.shape)


def norm_symbol(rho, kappa, kind=SymbolKind.X, tail_tol=DEFAULT_TAIL_TOL, m_max=DEFAULT_M_MAX):
    """sum_m c_m L(rho,m)^2 kappa^(2m) for a single wavenumber magnitude."""
    return float(symbol_values(rho, [kappa], kind, tail_tol, m_max)[0])


@dataclass(frozen=True)
class NormSymbol:
    """Tabulated symbol S(rho, kappa) for one kind on a fixed set of magnitudes."""

    rho: float
    kind: SymbolKind
    values: dict
    tail_tol: float = DEFAULT_TAIL_TOL

    @classmethod
    def build(cls, rho, kappas, kind=SymbolKind.X, tail_tol=DEFAULT_TAIL_TOL):
        kappas = sorted({float(k) for k in np.ravel(kappas)})
        vals = symbol_values(rho, kappas, kind, tail_tol)
        return cls(rho=float(rho), kind=SymbolKind(kind), values=dict(zip(kappas, map(float, vals))), tail_tol=tail_tol)

    def __call__(self, kappa):
        return self.values[float(kappa)]

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("kappa,value\n")
            for k, v in sorted(self.values.items()):
                fh.write(f"{float(k)!r},{float(v)!r}\n")


def full_symbol(rho, k1, k2, tail_tol=DEFAULT_TAIL_TOL, m_max=DEFAULT_M_MAX):
    """Symbol of the all-multi-index norm: sum_m L(rho,m)^2 sum_{|alpha|=m} k1^(2 a1) k2^(2 a2)."""
    _check_rho(rho)
    k1 = np.abs(np.atleast_1d(np.asarray(k1, dtype=float)))
    k2 = np.abs(np.atleast_1d(np.asarray(k2, dtype=float)))
    k1, k2 = np.broadcast_arrays(k1, k2)
    hi = np.maximum(k1, k2).ravel()
    lo = np.minimum(k1, k2).ravel()
    m = np.arange(m_max + 1, dtype=float)
    log_l2 = 2.0 * ((m + 1) * np.log(rho) + 7 * np.log(m + 1) - 2 * gammaln(m + 1))
    # complete homogeneous sum h_m(a, b) = sum_j a^j b^(m-j), a = hi^2, b = lo^2
    with np.errstate(divide="ignore", invalid="ignore"):
        log_hi = np.log(hi)[:, None]
        r = np.where(hi > 0, (lo / np.where(hi > 0, hi, 1.0)) ** 2, 0.0)[:, None]
        r_safe = np.where(r < 1.0, r, 0.0)
        geom = np.where(
            r < 1.0,
            np.log1p(-(r_safe ** (m[None, :] + 1))) - np.log1p(-r_safe),
            np.log(m[None, :] + 1),
        )
        log_h = np.where(m[None, :] == 0, 0.0, 2.0 * m[None, :] * log_hi) + geom
    log_h = np.where((hi[:, None] == 0) & (m[None, :] > 0), -np.inf, log_h)
    values, _ = _truncated_sums(log_l2[None, :] + log_h, tail_tol)
    return values.reshape(k1.shape)


# ---------------------------------------------------------------------------
# combinatorial weight inequalities


def _log_l(rho, m):
    return (m + 1) * np.log(rho) + 7 * np.log(m + 1) - 2 * gammaln(m + 1)


def weight_inequality_ratios(rho, m_max):
    """Ratios (left side)/(claimed shape) for both binomial weight inequalities.

    Returns ``(ratio1, ratio2)``, arrays of shape (m_max+1, m_max+1) indexed [m, k],
    NaN outside each inequality's (m, k) range.
    """
    _check_rho(rho)
    m, k = np.meshgrid(np.arange(m_max + 1.0), np.arange(m_max + 1.0), indexing="ij")
    log_binom = gammaln(m + 1) - gammaln(k + 1) - gammaln(np.maximum(m - k, 0) + 1)
    lr = np.log(rho)

    in1 = k <= np.floor(m / 2)
    lhs1 = log_binom + _log_l(rho, m) - _log_l(rho, k + 2) - _log_l(rho, np.maximum(m - k, 0) + 1)
    shape1 = (-2 * lr - np.log(k + 1) + 0.5 * (np.log(m + 1) - lr)
              + 1.5 * (np.log(np.maximum(m - k, 0) + 2) - lr))
    ratio1 = np.where(in1, np.exp(lhs1 - shape1), np.nan)

    in2 = (k >= np.floor(m / 2) + 1) & (k <= m)
    lhs2 = log_binom + _log_l(rho, m) - _log_l(rho, k) - _log_l(rho, np.maximum(m - k, 0) + 3)
    shape2 = -4 * lr - np.log(np.maximum(m - k, 0) + 1)
    ratio2 = np.where(in2, np.exp(lhs2 - shape2), np.nan)
    return ratio1, ratio2


def certify_weight_inequalities(rho, m_max):
    """Measured constants (C1, C2) of the two binomial weight inequalities up to m_max."""
    if m_max < 4:
        raise DomainError("m_max must be at least 4")
    ratio1, ratio2 = weight_inequality_ratios(rho, m_max)
    c1, c2 = np.nanmax(ratio1), np.nanmax(ratio2)
    if not (np.isfinite(c1) and np.isfinite(c2)):
        raise PrecisionError("non-finite weight-inequality ratio")
    return float(c1), float(c2)


def certificate_argmax(rho, m_max):
    """(m, k) locations of C1 and C2; a location at m == m_max means not yet stabilised."""
    ratio1, ratio2 = weight_inequality_ratios(rho, m_max)
    a1 = np.unravel_index(np.nanargmax(ratio1), ratio1.shape)
    a2 = np.unravel_index(np.nanargmax(ratio2), ratio2.shape)
    return tuple(int(i) for i in a1), tuple(int(i) for i in a2)


def multi_index_bound_holds(k1, k2, order):
    """|k^alpha|^2 <= |k1|^(2|alpha|) + |k2|^(2|alpha|) for every alpha with |alpha| = order."""
    k1, k2 = abs(float(k1)), abs(float(k2))
    bound = k1 ** (2 * order) + k2 ** (2 * order)
    worst = max(k1 ** (2 * a) * k2 ** (2 * (order - a)) for a in range(order + 1))
    return worst <= bound * (1 + 1e-15)


# ---------------------------------------------------------------------------
# equivalence with the all-multi-index norm


def norm_equivalence_terms(field, rho, time_slot=None):
    """(1/2)||h||^2_{rho/2}, |h|^2_{X_rho}, ||h||^2_rho for a spectral field on a strip grid.

    ``field`` needs ``grid`` and ``coeffs`` attributes; ``time_slot`` optionally fills
    the time-derivative block.
    """
    grid = field.grid
    c = field.coeffs
    q = grid.mode_l2_sq(c) + grid.mode_grad_sq(c)
    if time_slot is not None:
        q = q + grid.mode_l2_sq(time_slot)
    live = q > 0
    if not np.any(live):
        return 0.0, 0.0, 0.0
    k1 = np.abs(grid.K1[live])
    k2 = np.abs(grid.K2[live])
    qv = q[live]
    sx = symbol_values(rho, k1) + symbol_values(rho, k2)
    middle = grid.area * float(np.sum(sx * qv))
    upper = grid.area * float(np.sum(full_symbol(rho, k1, k2) * qv))
    lower = 0.5 * grid.area * float(np.sum(full_symbol(0.5 * rho, k1, k2) * qv))
    return lower, middle, upper


def norm_equivalence_check(field, rho, slack=1e-12, time_slot=None):
    """True iff (1/2)||h||^2_{rho/2} <= |h|^2_{X_rho} <= ||h||^2_rho within relative slack.

    The upper inequality counts the m = 0 term once in ||h||_rho but twice (j = 1, 2)
    in |h|_{X_rho}, so it fails for fields concentrated on axis modes k_1 k_2 = 0;
    ``norm_equivalence_parts`` reports the two halves separately.
    """
    low_ok, up_ok = norm_equivalence_parts(field, rho, slack, time_slot)
    return low_ok and up_ok


def norm_equivalence_parts(field, rho, slack=1e-12, time_slot=None):
    lower, middle, upper = norm_equivalence_terms(field, rho, time_slot)
    return lower <= middle * (1 + slack), middle <= upper * (1 + slack)
