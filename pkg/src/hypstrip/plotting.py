"""Report figures written next to the CSV/JSONL output."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (5.0, 3.2),
    "savefig.dpi": 120,
    # keep PNG bytes independent of the matplotlib build date
    "svg.hashsalt": "hypstrip",
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_decay(records, path, label="|u|_X"):
    t = np.array([r.t for r in records])
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.semilogy(t, [r.x_norm for r in records], "k-", label=label)
        ax.semilogy(t, [r.bound for r in records], "C0--", label="4 eps0 exp(-t/32)")
        ax.semilogy(t, [r.hypothesis_bound for r in records], "C1:", label="8 eps0 exp(-t/32)")
        if np.all(np.isfinite([r.dyu_norm for r in records])):
            ax.semilogy(t, [r.dyu_norm for r in records], "C2-", lw=0.8, label="|d_y u|_X at rho/2")
        ax.set_xlabel("t")
        ax.set_ylabel("norm")
        ax.legend(loc="best")
        _save(fig, path)


def plot_energy(records, path):
    t = np.array([r.t for r in records])
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.semilogy(t, [r.energy for r in records], "k-", label="exp(t/16) |u|^2_X")
        ax.semilogy(t, [r.energy_limit * 1.05 for r in records], "C3--", label="bound (5% slack)")
        ax.set_xlabel("t")
        ax.legend(loc="best")
        _save(fig, path)


def plot_convergence(report, path):
    eps = np.asarray(report.eps)
    err = np.asarray(report.sup_error)
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.loglog(eps, err, "ko", label="sup_t error")
        if np.isfinite(report.order):
            e = np.geomspace(eps.min(), eps.max(), 20)
            ax.loglog(e, report.constant * e**report.order, "C0-",
                      label=f"fit q = {report.order:.2f}")
        ax.set_xlabel("eps")
        ax.set_ylabel("error")
        ax.legend(loc="best")
        _save(fig, path)
