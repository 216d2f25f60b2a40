"""Per-mode linear algebra shared by the hydrostatic and anisotropic solvers.

For a horizontal mode k the tangential velocity is split into the part along k
(``par = khat . u``) and the part across it (``perp = khat_perp . u``). With
interior nodal values, mass W = dy I, stiffness K = -W D_yy (Dirichlet) and the
interior cumulative trapezoid B, the semi-discrete equations read

    M w' + M w + A u + q lam = F,   u' = w,   q^T u = 0,

where q = W 1 discretises the vertical mean. For ``par`` with |k| > 0

    M = W + eps^2 |k|^2 B^T W B,
    A = K + eps^2 |k|^2 B^T K B + eps^2 |k|^2 M,

which is the energy of (u, eps v) with the slaved vertical velocity v = -i|k| B par.
For ``perp`` (and the k = 0 mode, which carries no constraint) M = W and
A = K + eps^2 |k|^2 W. eps = 0 gives the hydrostatic system, where lam = i|k| p.
"""

import numpy as np

from .errors import DomainError


class ModalSystem:
    def __init__(self, grid, eps=0.0):
        if eps < 0:
            raise DomainError("eps must be nonnegative")
        self.grid = grid
        self.eps = float(eps)
        n = grid.Ny - 2
        self.n = n
        h = grid.dy

        I1, I2 = np.nonzero(grid.mask)
        self.I1, self.I2 = I1, I2
        nn = (grid.n1[I1] ** 2 + grid.n2[I2] ** 2).astype(np.int64)
        k1, k2 = grid.k1[I1], grid.k2[I2]
        kappa = np.hypot(k1, k2)
        safe = np.where(kappa > 0, kappa, 1.0)
        self.kappa = kappa
        self.khat = np.stack([np.where(kappa > 0, k1 / safe, 1.0), np.where(kappa > 0, k2 / safe, 0.0)])
        self.constrained_mode = kappa > 0

        self.W = h * np.eye(n)
        self.K = (2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / h
        B = np.tril(np.full((n, n), h), -1) + 0.5 * h * np.eye(n)
        self.B = B
        self.q = np.full(n, h)
        self.BtWB = B.T @ self.W @ B
        self.BtKB = B.T @ self.K @ B

        # group modes sharing identical operators
        if self.eps > 0:
            key_par = np.where(kappa > 0, nn, -1)
            key_perp = nn
        else:
            key_par = np.where(kappa > 0, 1, -1)
            key_perp = np.zeros_like(nn)
        self.groups_par = self._groups(key_par, kappa, par=True)
        self.groups_perp = self._groups(key_perp, kappa, par=False)
        self._cn_cache = {}
        self._acc = None

    def _groups(self, keys, kappa, par):
        out = []
        for key in np.unique(keys):
            idx = np.nonzero(keys == key)[0]
            kap = float(kappa[idx[0]])
            constrained = par and kap > 0
            if par and kap > 0:
                M, A = self.par_matrices(kap)
            else:
                M, A = self.perp_matrices(kap)
            out.append({"idx": idx, "kappa": kap, "constrained": constrained, "M": M, "A": A})
        return out

    def par_matrices(self, kappa):
        e2k2 = self.eps**2 * kappa**2
        M = self.W + e2k2 * self.BtWB
        A = self.K + e2k2 * self.BtKB + e2k2 * M
        return M, A

    def perp_matrices(self, kappa):
        e2k2 = self.eps**2 * kappa**2
        return self.W.copy(), self.K + e2k2 * self.W

    # layout conversions ---------------------------------------------------

    def to_modal(self, coeffs):
        """(2, N1, N2, Ny) coefficients -> (par, perp), each (nmodes, Ny-2)."""
        c = coeffs[:, self.I1, self.I2, 1:-1]
        h1, h2 = self.khat[0][:, None], self.khat[1][:, None]
        return h1 * c[0] + h2 * c[1], -h2 * c[0] + h1 * c[1]

    def from_modal(self, par, perp):
        g = self.grid
        out = np.zeros((2,) + g.shape, dtype=complex)
        h1, h2 = self.khat[0][:, None], self.khat[1][:, None]
        out[0, self.I1, self.I2, 1:-1] = h1 * par - h2 * perp
        out[1, self.I1, self.I2, 1:-1] = h2 * par + h1 * perp
        return out

    def scalar_to_modal(self, coeffs):
        return coeffs[self.I1, self.I2, 1:-1]

    def scalar_from_modal(self, vals, boundary=None):
        out = np.zeros(self.grid.shape, dtype=complex)
        out[self.I1, self.I2, 1:-1] = vals
        if boundary is not None:
            out[self.I1, self.I2, 0] = boundary[0]
            out[self.I1, self.I2, -1] = boundary[1]
        return out

    def slaved_v(self, par):
        """Interior values of v = -i|k| B par together with the wall value at y = 1."""
        kap = self.kappa[:, None]
        interior = -1j * kap * (par @ self.B.T)
        top = -1j * self.kappa * (par @ self.q)
        return interior, top

    def forces(self, n_par, n_perp, n_v=None):
        """Generalised forces from nonlinear terms given at interior nodes."""
        h = self.grid.dy
        f_par = -h * n_par
        if n_v is not None and self.eps > 0:
            f_par = f_par - 1j * self.kappa[:, None] * self.eps**2 * (n_v @ (self.W @ self.B))
        return f_par, -h * n_perp

    # Crank-Nicolson -------------------------------------------------------

    def cn_operators(self, dt):
        key = float(dt)
        if key in self._cn_cache:
            return self._cn_cache[key]
        ops = {"par": [self._cn_group(g, dt) for g in self.groups_par],
               "perp": [self._cn_group(g, dt) for g in self.groups_perp]}
        self._cn_cache = {key: ops}
        return ops

    def _cn_group(self, g, dt):
        M, A = g["M"], g["A"]
        c = 2.0 / dt + 1.0
        S = c * M + 0.5 * dt * A
        R = c * M - 0.5 * dt * A
        Sinv = np.linalg.inv(S)
        n = self.n
        P = np.eye(n)
        lam_row = np.zeros(n)
        if g["constrained"]:
            s = Sinv @ self.q
            qs = self.q @ s
            P = P - np.outer(s, self.q) / qs
            lam_row = (self.q @ Sinv) / (qs * dt)
        PS = P @ Sinv
        return {
            "idx": g["idx"],
            "Tu": (PS @ R).T.copy(),
            "Tw": (2.0 * PS @ M).T.copy(),
            "Tf": (dt * PS).T.copy(),
            "Lu": lam_row @ R,
            "Lw": 2.0 * lam_row @ M,
            "Lf": dt * lam_row,
        }

    def cn_advance(self, dt, u, w, f):
        """One CN update of (u, w) with averaged force f; returns (u, w, lam)."""
        ops = self.cn_operators(dt)
        u_new = np.empty_like(u[0]), np.empty_like(u[1])
        lam = np.zeros(u[0].shape[0], dtype=complex)
        for part, (uu, ww, ff) in enumerate(zip(u, w, f)):
            for op in ops["par" if part == 0 else "perp"]:
                i = op["idx"]
                u_new[part][i] = uu[i] @ op["Tu"] + ww[i] @ op["Tw"] + ff[i] @ op["Tf"]
                if part == 0:
                    lam[i] = uu[i] @ op["Lu"] + ww[i] @ op["Lw"] + ff[i] @ op["Lf"]
        w_new = tuple(2.0 * (un - uo) / dt - wo for un, uo, wo in zip(u_new, u, w))
        # the w-update carries constraint roundoff forward undamped; strip it
        return (self.clean(u_new[0]), u_new[1]), (self.clean(w_new[0]), w_new[1]), lam

    def clean(self, par):
        """Remove the q-component of par on constrained modes (roundoff hygiene)."""
        c = (par @ self.q) / (self.q @ self.q)
        return par - np.where(self.constrained_mode, c, 0.0)[:, None] * self.q

    # explicit acceleration ------------------------------------------------

    def _acc_operators(self):
        if self._acc is not None:
            return self._acc
        out = {}
        for name, groups in (("par", self.groups_par), ("perp", self.groups_perp)):
            lst = []
            for g in groups:
                Minv = np.linalg.inv(g["M"])
                n = self.n
                P = np.eye(n)
                lam_row = np.zeros(n)
                if g["constrained"]:
                    mq = Minv @ self.q
                    qmq = self.q @ mq
                    P = P - np.outer(mq, self.q) / qmq
                    lam_row = (self.q @ Minv) / qmq
                PM = P @ Minv
                lst.append({
                    "idx": g["idx"],
                    "Eu": (-PM @ g["A"]).T.copy(),
                    "Ew": (-PM @ g["M"]).T.copy(),
                    "Ef": PM.T.copy(),
                    "Lu": -lam_row @ g["A"],
                    "Lw": -lam_row @ g["M"],
                    "Lf": lam_row,
                })
            out[name] = lst
        self._acc = out
        return out

    def acceleration(self, u, w, f):
        """Projected w' = M^{-1}(F - M w - A u - q lam) with q^T w' = 0; returns (acc, lam)."""
        ops = self._acc_operators()
        acc = np.empty_like(u[0]), np.empty_like(u[1])
        lam = np.zeros(u[0].shape[0], dtype=complex)
        for part, (uu, ww, ff) in enumerate(zip(u, w, f)):
            for op in ops["par" if part == 0 else "perp"]:
                i = op["idx"]
                acc[part][i] = uu[i] @ op["Eu"] + ww[i] @ op["Ew"] + ff[i] @ op["Ef"]
                if part == 0:
                    lam[i] = uu[i] @ op["Lu"] + ww[i] @ op["Lw"] + ff[i] @ op["Lf"]
        return acc, lam

    def constraint_residual(self, par):
        """Per-mode |int_0^1 div_x u dy| = |k| |q^T par|."""
        return self.kappa * np.abs(par @ self.q)

    def max_frequency(self):
        """Largest |eigenvalue| of the first-order system matrix (for explicit steps)."""
        worst = 0.0
        for groups in (self.groups_par, self.groups_perp):
            for g in groups:
                ev = np.linalg.eigvals(np.linalg.solve(g["M"], g["A"])).real.max()
                # roots of mu^2 + mu + ev = 0
                mu = np.abs(np.roots([1.0, 1.0, ev]))
                worst = max(worst, float(mu.max()))
        return worst
