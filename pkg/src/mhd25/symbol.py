"""Fourier-side analysis of the linearized combined-variable system.

At wavenumber xi with r = |xi| the linear dynamics split into a solenoidal
heat scalar (eigenvalue -r^2) and a 3x3 compressible block on the coordinates
(phi_hat, d_hat, theta_hat), where d_hat is the transform of div u:

    M(r) = [[0,   -2,   0  ],
            [r^2, -r^2, r^2],
            [0,   -1,   -r^2]]

with characteristic polynomial l^3 + 2 r^2 l^2 + (r^4 + 3 r^2) l + 2 r^4.
The spectrum realizes the dissipative dichotomy this package exists to
measure: all branches behave like -(2/3) r^2 at low frequency, while at high
frequency one branch saturates near the constant -2 (damping of phi) and the
other two scale like -r^2 (smoothing of u and theta).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .diagnostics import FitResult, fit_decay
from .dyadic import DyadicBlocks
from .grid import Grid

EIG_SEPARATION_TOL = 1e-6
ROOT_RESIDUAL_TOL = 1e-12


class SymbolError(ValueError):
    """Invalid wavenumber or parameter for the symbol analysis."""


class RootFindingError(RuntimeError):
    """Root polishing failed to reach the residual tolerance."""


@dataclass(frozen=True)
class SymbolMatrix:
    r: float
    compressible: np.ndarray
    incompressible: float

    def trace(self) -> float:
        return float(np.trace(self.compressible))

    def determinant(self) -> float:
        return float(np.linalg.det(self.compressible))


@dataclass(frozen=True)
class SymbolSpectrum:
    """Eigenvalues at one radius, sorted by real part descending."""

    r: float
    eigenvalues: np.ndarray
    damped_branch: complex

    def __post_init__(self) -> None:
        r2 = self.r**2
        scale = max(1.0, 2.0 * r2)
        if abs(np.sum(self.eigenvalues) + 2.0 * r2) > 1e-9 * scale:
            raise RootFindingError(f"eigenvalue sum violates trace identity at r={self.r}")
        scale = max(1.0, 2.0 * r2**2)
        if abs(np.prod(self.eigenvalues) + 2.0 * r2**2) > 1e-9 * scale:
            raise RootFindingError(f"eigenvalue product violates det identity at r={self.r}")

    @property
    def abscissa(self) -> float:
        return float(np.max(self.eigenvalues.real))


def build_symbol(r: float) -> SymbolMatrix:
    if r < 0:
        raise SymbolError(f"wavenumber magnitude must be nonnegative, got {r}")
    if r == 0.0:
        # d_hat = i xi . u_hat vanishes identically at xi = 0, so the zero
        # mode is neutral; the zero matrix is the dynamics' correct limit.
        return SymbolMatrix(r=0.0, compressible=np.zeros((3, 3)), incompressible=0.0)
    r2 = r * r
    m = np.array([[0.0, -2.0, 0.0], [r2, -r2, r2], [0.0, -1.0, -r2]])
    return SymbolMatrix(r=float(r), compressible=m, incompressible=-r2)


def char_coeffs(r: float) -> np.ndarray:
    """Monic characteristic polynomial coefficients, highest degree first."""
    r2 = r * r
    return np.array([1.0, 2.0 * r2, r2 * r2 + 3.0 * r2, 2.0 * r2 * r2])


def _polish_roots(coeffs: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """Newton-polish cubic roots to a relative residual <= 1e-12."""
    c = coeffs
    dc = np.array([3.0 * c[0], 2.0 * c[1], c[2]])
    roots = roots.astype(np.complex128)
    for _ in range(60):
        p = np.polyval(c, roots)
        scale = np.polyval(np.abs(c), np.abs(roots))
        if np.all(np.abs(p) <= ROOT_RESIDUAL_TOL * np.maximum(scale, 1.0)):
            return roots
        dp = np.polyval(dc, roots)
        safe = np.where(np.abs(dp) > 0, dp, 1.0)
        roots = roots - np.where(np.abs(dp) > 0, p / safe, 0.0)
    p = np.polyval(c, roots)
    scale = np.polyval(np.abs(c), np.abs(roots))
    if np.all(np.abs(p) <= ROOT_RESIDUAL_TOL * np.maximum(scale, 1.0)):
        return roots
    raise RootFindingError("cubic root polishing did not converge")


def eigenvalues(r: float) -> SymbolSpectrum:
    """Spectrum of the compressible block at radius r."""
    if r < 0:
        raise SymbolError(f"wavenumber magnitude must be nonnegative, got {r}")
    if r == 0.0:
        return SymbolSpectrum(0.0, np.zeros(3, dtype=np.complex128), 0.0 + 0.0j)
    coeffs = char_coeffs(r)
    roots = _polish_roots(coeffs, np.roots(coeffs))
    order = np.argsort(-roots.real)
    roots = roots[order]
    damped = _identify_damped(r, roots)
    return SymbolSpectrum(float(r), roots, damped)


def _identify_damped(r: float, roots: np.ndarray) -> complex:
    """The branch that saturates at a constant as r grows.

    The cubic keeps one real root and one complex pair for every r > 0; the
    real root is that branch (it runs from -(2/3) r^2 at low r to -2 - 2/r^2
    at high r).
    """
    imag_scale = 1e-9 * np.maximum(np.abs(roots), 1.0)
    real_mask = np.abs(roots.imag) <= imag_scale
    candidates = roots[real_mask] if real_mask.any() else roots
    target = -2.0 - 2.0 / r**2 if r >= 1.0 else -(2.0 / 3.0) * r**2
    return complex(candidates[np.argmin(np.abs(candidates - target))])


def incompressible_eigenvalue(r: float) -> float:
    if r < 0:
        raise SymbolError(f"wavenumber magnitude must be nonnegative, got {r}")
    return -float(r) ** 2


def expm_compressible(r: float, t: float) -> np.ndarray:
    """exp(t M(r)) for the 3x3 compressible block.

    Uses the eigendecomposition when the eigenvalues are well separated and
    falls back to scaling-and-squaring near branch collisions.
    """
    m = build_symbol(r).compressible
    lam, v = np.linalg.eig(m)
    sep = np.min(
        [np.abs(lam[i] - lam[j]) for i in range(3) for j in range(i + 1, 3)]
    )
    if sep > EIG_SEPARATION_TOL * max(1.0, np.max(np.abs(lam))):
        return (v @ np.diag(np.exp(lam * t)) @ np.linalg.inv(v)).real
    return scipy.linalg.expm(m * t)


def semigroup_evolve(
    xi: np.ndarray, phi: complex, u: np.ndarray, theta: complex, t: float
) -> tuple[complex, np.ndarray, complex]:
    """Exact linear evolution of one mode's amplitudes over time t >= 0.

    The velocity amplitude is split into its longitudinal part (coupled to
    phi and theta through d_hat = i xi . u_hat) and its solenoidal part
    (pure heat decay).
    """
    if t < 0:
        raise SymbolError(f"time must be nonnegative, got {t}")
    xi = np.asarray(xi, dtype=np.float64)
    u = np.asarray(u, dtype=np.complex128)
    r = float(np.hypot(xi[0], xi[1]))
    if r == 0.0:
        return phi, u.copy(), theta
    khat = xi / r
    d = 1j * r * (khat[0] * u[0] + khat[1] * u[1])
    upar = khat * (khat[0] * u[0] + khat[1] * u[1])
    uperp = u - upar

    p = expm_compressible(r, t)
    vec = p @ np.array([phi, d, theta])
    heat = np.exp(-(r**2) * t)
    u_new = khat * (-1j * vec[1] / r) + uperp * heat
    return complex(vec[0]), u_new, complex(vec[2])


def sweep(r_values: np.ndarray, threads: int = 1) -> np.ndarray:
    """Eigenvalue sweep; rows are (r, re1, im1, re2, im2, re3, im3, abscissa)."""
    r_values = np.asarray(r_values, dtype=np.float64)

    def row(r: float) -> list[float]:
        spec = eigenvalues(float(r))
        lam = spec.eigenvalues
        return [
            float(r),
            lam[0].real, lam[0].imag,
            lam[1].real, lam[1].imag,
            lam[2].real, lam[2].imag,
            spec.abscissa,
        ]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, r_values))
    else:
        rows = [row(r) for r in r_values]
    return np.array(rows)


def batched_expm(mats: np.ndarray, t: float) -> np.ndarray:
    """exp(t M) for a stack of small real matrices.

    Eigendecomposition with a scaling-and-squaring fallback wherever the
    spectrum nearly collides (including defective cases).
    """
    lam, v = np.linalg.eig(mats)
    e = np.exp(lam * t)
    with np.errstate(all="ignore"):
        vinv = np.linalg.inv(v)
        p = np.einsum("nij,nj,njk->nik", v, e, vinv).real
    sep = np.min(np.abs(lam[:, [0, 0, 1]] - lam[:, [1, 2, 2]]), axis=1)
    bad = sep <= EIG_SEPARATION_TOL * np.maximum(1.0, np.max(np.abs(lam), axis=1))
    bad |= ~np.isfinite(p).all(axis=(1, 2))
    for idx in np.nonzero(bad)[0]:
        p[idx] = scipy.linalg.expm(mats[idx] * t)
    return p


class LatticePropagator:
    """Batched exact propagators over the distinct radii of a grid's lattice.

    The lattice is grouped by the integer |k|^2 / k_min^2, one
    eigendecomposition per distinct radius; propagators at any t are then
    assembled from cached eigenpairs.  Shells whose eigenvalues nearly
    collide fall back to scaling-and-squaring.
    """

    def __init__(self, radii: np.ndarray):
        self.radii = np.asarray(radii, dtype=np.float64)
        n = len(self.radii)
        mats = np.zeros((n, 3, 3))
        r2 = self.radii**2
        mats[:, 0, 1] = -2.0
        mats[:, 1, 0] = r2
        mats[:, 1, 1] = -r2
        mats[:, 1, 2] = r2
        mats[:, 2, 1] = -1.0
        mats[:, 2, 2] = -r2
        lam, v = np.linalg.eig(mats)
        self.lam = lam
        self.v = v
        self.vinv = np.linalg.inv(v)
        sep = np.min(
            np.abs(lam[:, [0, 0, 1]] - lam[:, [1, 2, 2]]), axis=1
        )
        self.degenerate = sep <= EIG_SEPARATION_TOL * np.maximum(
            1.0, np.max(np.abs(lam), axis=1)
        )
        self._mats = mats

    def propagators(self, t: float) -> np.ndarray:
        """(len(radii), 3, 3) real array of exp(t M(r))."""
        e = np.exp(self.lam * t)
        p = np.einsum("nij,nj,njk->nik", self.v, e, self.vinv).real
        for idx in np.nonzero(self.degenerate)[0]:
            p[idx] = scipy.linalg.expm(self._mats[idx] * t)
        return p


def lattice_radii(grid: Grid, band: tuple[float, float] | None = None):
    """Distinct nonzero radii on the lattice and the per-radius mode counts.

    Returns (radii, counts) restricted to band (inclusive) when given.
    """
    n = grid.n
    idx = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
    m2 = idx[:, None] ** 2 + idx[None, :] ** 2
    m2 = m2.ravel()
    m2 = m2[m2 > 0]
    if band is not None:
        lo = (band[0] / grid.k_min) ** 2 - 1e-9
        hi = (band[1] / grid.k_min) ** 2 + 1e-9
        m2 = m2[(m2 >= lo) & (m2 <= hi)]
    uniq, counts = np.unique(m2, return_counts=True)
    radii = grid.k_min * np.sqrt(uniq.astype(np.float64))
    return radii, counts


@dataclass
class DecayEnvelope:
    """Predicted L2-norm history of the linear flow and its fitted exponent."""

    times: np.ndarray
    norms: np.ndarray
    fit: FitResult
    sigma: float
    gamma: float
    branch: str


def decay_envelope(
    grid: Grid,
    blocks: DyadicBlocks,
    sigma: float,
    gamma: float,
    t_grid: np.ndarray,
    amplitude=None,
    band: tuple[float, float] | None = None,
    branch: str = "full",
    fit_window: tuple[float, float] | None = None,
) -> DecayEnvelope:
    """Exact linear decay of low-frequency data, with a fitted exponent.

    The data loads every field with the radial amplitude profile (default
    |k|^(sigma-1), which spreads the weighted block norms flat across the
    dyadic levels), normalized so the low-frequency negative-index norm of
    the tuple is 1.  branch="heat" evolves a single scalar with exp(-r^2 t)
    as the optimality baseline; branch="full" evolves the coupled symbol.
    """
    if not (0.0 < sigma <= 1.0):
        raise SymbolError(f"sigma must lie in (0, 1], got {sigma}")
    if not (-sigma < gamma <= 0.0):
        raise SymbolError(f"gamma must lie in (-sigma, 0], got {gamma}")
    if branch not in ("full", "heat"):
        raise SymbolError(f"unknown branch {branch!r}")
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if band is None:
        band = (grid.k_min, min(1.0, 0.5 * grid.k_max))

    radii, counts = lattice_radii(grid, band)
    if len(radii) == 0:
        raise SymbolError("band contains no lattice modes")
    amp = (radii ** (sigma - 1.0)) if amplitude is None else np.asarray(
        [amplitude(r) for r in radii], dtype=np.float64
    )

    # Low-frequency negative-index norm of the tuple from per-level block sums.
    levels = [j for j in blocks.levels if j <= 0]
    weights = np.array([blocks.family.bump(radii * 2.0**-j) for j in levels])
    if branch == "heat":
        field_sq = [amp**2]
    else:
        # per-field squared amplitudes: phi, u (longitudinal+solenoidal), theta
        field_sq = [amp**2, 0.5 * amp**2 + 0.5 * amp**2, amp**2]
    norm0 = 0.0
    for sq in field_sq:
        block_l2 = np.sqrt((weights**2 * (counts * sq)[None, :]).sum(axis=1))
        norm0 += float(np.max(block_l2 * np.array([2.0 ** (-j * sigma) for j in levels])))
    if norm0 <= 0:
        raise SymbolError("initial data has zero low-frequency content")
    amp = amp / norm0

    w_gamma = counts * radii ** (2.0 * gamma)
    norms = np.empty_like(t_grid)
    if branch == "heat":
        for i, t in enumerate(t_grid):
            decay = np.exp(-2.0 * radii**2 * t)
            norms[i] = np.sqrt(float(np.sum(w_gamma * amp**2 * decay)))
    else:
        prop = LatticePropagator(radii)
        amp0 = np.stack(
            [
                amp.astype(np.complex128),
                1j * radii * amp / np.sqrt(2.0),
                amp.astype(np.complex128),
            ],
            axis=1,
        )
        perp0 = amp / np.sqrt(2.0)
        for i, t in enumerate(t_grid):
            p = prop.propagators(t)
            vec = np.einsum("nij,nj->ni", p, amp0)
            heat = np.exp(-(radii**2) * t)
            phi_sq = np.abs(vec[:, 0]) ** 2
            u_sq = np.abs(vec[:, 1] / radii) ** 2 + (perp0 * heat) ** 2
            th_sq = np.abs(vec[:, 2]) ** 2
            norms[i] = (
                np.sqrt(float(np.sum(w_gamma * phi_sq)))
                + np.sqrt(float(np.sum(w_gamma * u_sq)))
                + np.sqrt(float(np.sum(w_gamma * th_sq)))
            )
    if fit_window is None:
        fit_window = (max(10.0, float(t_grid[0])), 0.9 * float(t_grid[-1]))
    fit = fit_decay(t_grid, norms, fit_window)
    return DecayEnvelope(t_grid, norms, fit, sigma, gamma, branch)
