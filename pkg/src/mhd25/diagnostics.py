"""Energy-type functionals, Lyapunov monitors, and decay-rate fitting.

Tuple norms follow the summation convention ||(f, ..., g)||_X = ||f||_X +
... + ||g||_X, with the velocity treated as a single vector field (joint L2
block norms of its components).  Every functional excludes the zero mode,
which the grid layer tracks separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import BesovParams, DyadicBlocks
from .grid import SpectralField
from .system import MhdState, Params, ReformulatedState, total_energy

Vector = tuple[SpectralField, SpectralField]


class FitError(ValueError):
    """Decay fit asked on unusable data (nonpositive values or short window)."""


# ---------------------------------------------------------------------------
# pointwise-in-time functionals


def energy_E(
    blocks: DyadicBlocks,
    phi: SpectralField,
    u: Vector,
    theta: SpectralField,
    a: SpectralField,
    b: SpectralField,
) -> float:
    """Low B^0 norm of (phi, u, theta, a, b) plus high B^3 of (phi, theta,
    a, b) plus high B^2 of u."""
    low0 = BesovParams(0.0, 1, range="low")
    high3 = BesovParams(3.0, 1, range="high")
    high2 = BesovParams(2.0, 1, range="high")
    out = blocks.besov_norm(u, low0) + blocks.besov_norm(u, high2)
    for f in (phi, theta, a, b):
        out += blocks.besov_norm(f, low0) + blocks.besov_norm(f, high3)
    return out


def dissipation_D(
    blocks: DyadicBlocks, phi: SpectralField, u: Vector, theta: SpectralField
) -> float:
    """Low B^2 of (phi, u, theta) plus high B^3, B^4, B^5 of phi, u, theta."""
    low2 = BesovParams(2.0, 1, range="low")
    out = blocks.besov_norm(phi, low2) + blocks.besov_norm(u, low2) + blocks.besov_norm(theta, low2)
    out += blocks.besov_norm(phi, BesovParams(3.0, 1, range="high"))
    out += blocks.besov_norm(u, BesovParams(4.0, 1, range="high"))
    out += blocks.besov_norm(theta, BesovParams(5.0, 1, range="high"))
    return out


def smallness_X0(
    blocks: DyadicBlocks,
    a: SpectralField,
    u: Vector,
    theta: SpectralField,
    b: SpectralField,
) -> float:
    """The smallness functional of the initial data."""
    low0 = BesovParams(0.0, 1, range="low")
    high3 = BesovParams(3.0, 1, range="high")
    out = blocks.besov_norm(u, low0) + blocks.besov_norm(u, BesovParams(2.0, 1, range="high"))
    for f in (a, theta, b):
        out += blocks.besov_norm(f, low0) + blocks.besov_norm(f, high3)
    return out


def negative_besov_Y(
    blocks: DyadicBlocks,
    a: SpectralField,
    phi: SpectralField,
    u: Vector,
    theta: SpectralField,
    sigma: float,
) -> float:
    """Low-frequency negative-index norm of (a, phi, u, theta)."""
    if not (0.0 < sigma <= 1.0):
        raise ValueError(f"sigma must lie in (0, 1], got {sigma}")
    params = BesovParams(-sigma, np.inf, range="low")
    return (
        blocks.besov_norm(a, params)
        + blocks.besov_norm(phi, params)
        + blocks.besov_norm(u, params)
        + blocks.besov_norm(theta, params)
    )


def lyapunov_functional(
    blocks: DyadicBlocks, phi: SpectralField, u: Vector, theta: SpectralField
) -> float:
    """The decaying bracket: low B^0 of (phi, u, theta) + high B^3 of
    (phi, theta) + high B^2 of u."""
    low0 = BesovParams(0.0, 1, range="low")
    high3 = BesovParams(3.0, 1, range="high")
    return (
        blocks.besov_norm(phi, low0)
        + blocks.besov_norm(u, low0)
        + blocks.besov_norm(theta, low0)
        + blocks.besov_norm(phi, high3)
        + blocks.besov_norm(theta, high3)
        + blocks.besov_norm(u, BesovParams(2.0, 1, range="high"))
    )


def lambda_gamma_norm(
    phi: SpectralField, u: Vector, theta: SpectralField, gamma: float
) -> float:
    """||Lambda^gamma phi|| + ||Lambda^gamma u|| + ||Lambda^gamma theta||
    in the box-averaged L2, zero mode excluded."""
    grid = phi.grid
    with np.errstate(divide="ignore"):
        w = np.where(grid.k_abs > 0.0, grid.k_abs, 1.0) ** (2.0 * gamma)
    w[0, 0] = 0.0

    def norm(*comps: SpectralField) -> float:
        tot = 0.0
        for f in comps:
            c = f.coefficients
            tot += float(np.sum(w * (c.real**2 + c.imag**2)))
        return float(np.sqrt(tot))

    return norm(phi) + norm(*u) + norm(theta)


def localized_lyapunov(
    blocks: DyadicBlocks,
    phi: SpectralField,
    u: Vector,
    theta: SpectralField,
    j: int,
    eta: float,
    regime: str,
) -> tuple[float, float]:
    """Frequency-localized quadratic functionals (L^2, Ltilde^2) at level j.

    L^2 combines the block energies with the cross term eta * int(u . grad
    phi); the high regime adds the (eta/4) ||grad phi||^2 piece.  Ltilde^2 is
    the paired dissipation functional with its -2 ||div u||^2 and mixed
    gradient terms.  All inner products are evaluated in coefficient space.
    """
    if not (0.0 < eta <= 0.2):
        raise ValueError(f"eta must lie in (0, 0.2], got {eta}")
    if regime not in ("low", "high"):
        raise ValueError(f"regime must be 'low' or 'high', got {regime!r}")
    g = blocks.grid
    mult = blocks.multiplier(j) if blocks.j_min <= j <= blocks.j_max else 0.0
    pc = mult * phi.coefficients
    u1c = mult * u[0].coefficients
    u2c = mult * u[1].coefficients
    tc = mult * theta.coefficients

    def nsq(c) -> float:
        return float(np.sum(c.real**2 + c.imag**2))

    def ip(c1, c2) -> float:
        return float(np.real(np.sum(c1 * np.conj(c2))))

    ikx, iky = g._ikx, g._iky
    k2 = g.k2
    gpx, gpy = ikx * pc, iky * pc
    div_c = ikx * u1c + iky * u2c

    cross = ip(u1c, gpx) + ip(u2c, gpy)
    l2 = 0.25 * nsq(pc) + 0.5 * (nsq(u1c) + nsq(u2c)) + 0.5 * nsq(tc) + eta * cross
    grad_phi_sq = float(np.sum(k2 * (pc.real**2 + pc.imag**2)))
    if regime == "high":
        l2 += 0.25 * eta * grad_phi_sq

    grad_u_sq = float(np.sum(k2 * (u1c.real**2 + u1c.imag**2 + u2c.real**2 + u2c.imag**2)))
    grad_t_sq = float(np.sum(k2 * (tc.real**2 + tc.imag**2)))
    grad_t_dot_grad_phi = ip(ikx * tc, gpx) + ip(iky * tc, gpy)
    lt = grad_u_sq + grad_t_sq
    if regime == "low":
        lap_u_dot_grad_phi = ip(-k2 * u1c, gpx) + ip(-k2 * u2c, gpy)
        lt += eta * (
            grad_phi_sq - 2.0 * nsq(div_c) + grad_t_dot_grad_phi - lap_u_dot_grad_phi
        )
    else:
        lt += eta * (grad_phi_sq - 2.0 * nsq(div_c) + grad_t_dot_grad_phi)
    return l2, lt


# ---------------------------------------------------------------------------
# time series


@dataclass
class FitResult:
    exponent: float
    stderr: float
    window: tuple[float, float]
    n_points: int


def fit_decay(
    times: np.ndarray, values: np.ndarray, window: tuple[float, float]
) -> FitResult:
    """Least-squares slope of log(value) against log(1 + t) over a window.

    The window must span at least one decade in (1 + t) and the values inside
    it must be strictly positive.
    """
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    lo, hi = window
    mask = (times >= lo) & (times <= hi)
    if np.log10((1.0 + hi) / (1.0 + lo)) < 1.0 - 1e-12:
        raise FitError(f"window {window} spans less than one decade in (1 + t)")
    if mask.sum() < 3:
        raise FitError(f"window {window} contains only {int(mask.sum())} samples")
    v = values[mask]
    if np.any(v <= 0.0):
        raise FitError("nonpositive values inside the fit window")
    x = np.log(1.0 + times[mask])
    y = np.log(v)
    xbar = x.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    resid = y - (y.mean() + slope * (x - xbar))
    dof = max(len(x) - 2, 1)
    stderr = float(np.sqrt(np.sum(resid**2) / dof / sxx))
    return FitResult(slope, stderr, (float(lo), float(hi)), int(mask.sum()))


def default_fit_window(times: np.ndarray) -> tuple[float, float]:
    """Drop the t < 10 transient and the final tenth of the run."""
    t_end = float(np.max(times))
    return (max(10.0, float(np.min(times))), 0.9 * t_end)


@dataclass
class MonitorReport:
    c_tilde: float
    max_increment: float
    violations: list[tuple[float, float]]

    @property
    def nonincreasing(self) -> bool:
        return not self.violations


def lyapunov_monitor(
    times: np.ndarray,
    values: np.ndarray,
    sigma: float,
    tol: float | None = None,
    t_start: float = 0.0,
) -> MonitorReport:
    """Check the differential inequality d/dt N + c N^{1 + sigma/2} <= 0.

    Derivatives use centered differences in the interior and one-sided stencils
    at the ends.  Reports the largest c for which the inequality holds at every
    sample with t >= t_start, plus all increments above tol (default dt^2).
    """
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if len(times) < 3:
        raise ValueError("monitor needs at least three samples")
    dt = float(times[1] - times[0])
    if tol is None:
        tol = max(1e-14, dt * dt)

    dv = np.gradient(values, times, edge_order=2)
    keep = times >= t_start
    violations = []
    inc = np.diff(values)
    for i in np.nonzero(inc > tol)[0]:
        if times[i + 1] >= t_start:
            violations.append((float(times[i + 1]), float(inc[i])))
    max_inc = float(np.max(inc[keep[1:]])) if np.any(keep[1:]) else 0.0

    pos = keep & (values > 0.0)
    if not np.any(pos):
        return MonitorReport(0.0, max_inc, violations)
    rates = -dv[pos] / values[pos] ** (1.0 + 0.5 * sigma)
    return MonitorReport(float(max(np.min(rates), 0.0)), max_inc, violations)


@dataclass
class DiagnosticSeries:
    """Time-stamped functional records accumulated along a trajectory."""

    sigma: float
    gamma_list: tuple[float, ...]
    x0: float = 0.0
    times: list[float] = field(default_factory=list)
    E: list[float] = field(default_factory=list)
    D: list[float] = field(default_factory=list)
    Y: list[float] = field(default_factory=list)
    lam: dict[float, list[float]] = field(default_factory=dict)
    mass_a: list[float] = field(default_factory=list)
    mass_b: list[float] = field(default_factory=list)
    total_energy: list[float] = field(default_factory=list)
    lyapunov: list[float] = field(default_factory=list)
    sup_abs_a: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        for g in self.gamma_list:
            self.lam.setdefault(g, [])

    def header(self) -> list[str]:
        cols = ["t", "E", "D", "X0_ref", "Y_sigma"]
        cols += [f"lam_gamma_norm[{g:g}]" for g in self.gamma_list]
        cols += ["mass_a", "mass_b", "total_energy", "lyapunov_value"]
        return cols

    def rows(self):
        for i, t in enumerate(self.times):
            row = [t, self.E[i], self.D[i], self.x0, self.Y[i]]
            row += [self.lam[g][i] for g in self.gamma_list]
            row += [self.mass_a[i], self.mass_b[i], self.total_energy[i], self.lyapunov[i]]
            yield row


class DiagnosticsRecorder:
    """Evaluates the functional set on states and accumulates the series."""

    def __init__(
        self,
        blocks: DyadicBlocks,
        sigma: float = 1.0,
        gamma_list: tuple[float, ...] = (0.0,),
        params: Params | None = None,
    ):
        self.blocks = blocks
        self.params = params or Params()
        self.series = DiagnosticSeries(sigma=sigma, gamma_list=tuple(gamma_list))

    def record(self, state: MhdState | ReformulatedState) -> None:
        phi = state.phi() if isinstance(state, MhdState) else state.phi
        u, theta, a, b = state.u, state.theta, state.a, state.b
        s = self.series
        if not s.times:
            s.x0 = smallness_X0(self.blocks, a, u, theta, b)
        s.times.append(float(state.time))
        s.E.append(energy_E(self.blocks, phi, u, theta, a, b))
        s.D.append(dissipation_D(self.blocks, phi, u, theta))
        s.Y.append(negative_besov_Y(self.blocks, a, phi, u, theta, s.sigma))
        for g in s.gamma_list:
            s.lam[g].append(lambda_gamma_norm(phi, u, theta, g))
        s.mass_a.append(a.zero_mode)
        s.mass_b.append(b.zero_mode)
        s.total_energy.append(total_energy(state, self.params))
        s.lyapunov.append(lyapunov_functional(self.blocks, phi, u, theta))
        s.sup_abs_a.append(state.sup_abs_a())
