"""Figure rendering for the CLI report paths.  All figures go to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_symbol_figure(rows: np.ndarray, path) -> None:
    """Eigenvalue branches against radius: real parts and spectral abscissa."""
    r = rows[:, 0]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    for i, style in zip(range(3), ("-", "--", ":")):
        ax1.plot(r, -rows[:, 1 + 2 * i], style, label=f"branch {i + 1}")
    ax1.plot(r, 2.0 + 2.0 / r**2, lw=0.8, alpha=0.6, label="2 + 2/r^2")
    ax1.plot(r, (2.0 / 3.0) * r**2, lw=0.8, alpha=0.6, label="(2/3) r^2")
    ax1.set_xscale("log")
    ax1.set_yscale("log")
    ax1.set_xlabel("r")
    ax1.set_ylabel("-Re lambda")
    ax1.legend(fontsize=7)
    ax1.set_title("decay rates of the three branches")

    ax2.plot(r, rows[:, 7], "k-")
    ax2.set_xscale("log")
    ax2.set_xlabel("r")
    ax2.set_ylabel("spectral abscissa")
    ax2.axhline(0.0, color="r", lw=0.8)
    ax2.set_title("max Re lambda (must stay below 0)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_decay_figure(times, values, fit, path, label="norm") -> None:
    times = np.asarray(times)
    values = np.asarray(values)
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.loglog(1.0 + times, values, "b.", ms=3, label=label)
    lo, hi = fit.window
    tt = np.linspace(max(lo, times.min()), min(hi, times.max()), 50)
    mask = (times >= lo) & (times <= hi)
    if mask.any():
        ref = values[mask][0] * ((1.0 + tt) / (1.0 + times[mask][0])) ** fit.exponent
        ax.loglog(
            1.0 + tt, ref, "r-", lw=1.2,
            label=f"slope {fit.exponent:.3f} +/- {fit.stderr:.3f}",
        )
    ax.set_xlabel("1 + t")
    ax.set_ylabel(label)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_diagnostics_figure(series, path) -> None:
    t = np.asarray(series.times)
    if len(t) == 0:
        fig, ax = plt.subplots(figsize=(5, 2))
        ax.text(0.5, 0.5, "no diagnostic samples recorded", ha="center", va="center")
        ax.set_axis_off()
        fig.savefig(path, dpi=150)
        plt.close(fig)
        return
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.4))
    axes[0].plot(t, series.E, label="E")
    axes[0].plot(t, series.D, label="D")
    if np.any(np.asarray(series.E) > 0.0):
        axes[0].set_yscale("log")
    axes[0].set_xlabel("t")
    axes[0].legend(fontsize=8)
    axes[0].set_title("energy and dissipation functionals")

    axes[1].plot(t, series.lyapunov, "k-")
    if np.any(np.asarray(series.lyapunov) > 0.0):
        axes[1].set_yscale("log")
    axes[1].set_xlabel("t")
    axes[1].set_title("Lyapunov functional")

    ma = np.asarray(series.mass_a)
    mb = np.asarray(series.mass_b)
    en = np.asarray(series.total_energy)
    axes[2].plot(t, ma - ma[0], label="mass(a) drift")
    axes[2].plot(t, mb - mb[0], label="mass(b) drift")
    axes[2].plot(t, (en - en[0]) / max(abs(en[0]), 1e-300), label="energy rel drift")
    axes[2].set_xlabel("t")
    axes[2].legend(fontsize=7)
    axes[2].set_title("conservation drifts")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_partition_figure(family, path) -> None:
    rho = np.logspace(-2, 2, 800)
    fig, ax = plt.subplots(figsize=(6, 3.4))
    total = np.zeros_like(rho)
    for j in range(-8, 9):
        psi = family.bump(rho * 2.0**-j)
        total += psi
        if np.max(psi) > 1e-3:
            ax.semilogx(rho, psi, lw=0.8, alpha=0.7)
    ax.semilogx(rho, total, "k-", lw=1.5, label="sum over j")
    ax.set_xlabel("|xi|")
    ax.set_ylabel("psi(2^-j xi)")
    ax.legend(fontsize=8)
    ax.set_title("dyadic bumps and their partition of unity")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_consistency_figure(times, errors, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.semilogy(times, np.maximum(np.asarray(errors), 1e-300), "b.-", ms=3)
    ax.set_xlabel("t")
    ax.set_ylabel("|| phi_evolved - phi(a, theta, b) ||_L2")
    ax.set_title("dual-formulation consistency")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
