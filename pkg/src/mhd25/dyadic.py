"""Dyadic frequency decomposition, homogeneous Besov norms, and block tools.

The radial cutoff chi is a concrete smooth bump assembled from the standard
exp(-1/x) mollifier: chi is identically 1 up to radius 3/4, falls smoothly to
0 at radius 4/3, and psi(rho) = chi(rho/2) - chi(rho) is the dyadic bump
supported in [3/4, 8/3].  Because chi is built from a smoothstep S with
S(t) + S(1-t) = 1, the dyadic sums telescope, so the partition of unity is
exact to rounding over any annulus the level range covers.

Conventions (fixed throughout the package):
  * the zero mode never enters any block or norm (psi(0) = 0 and the mean is
    tracked separately by the grid layer);
  * low-frequency norms sum levels j <= 0 and high-frequency norms sum
    j >= -1 (the overlap at {-1, 0} is intentional);
  * the field split uses j <= -1 for the low part and j >= 0 for the high
    part, so low + high reconstructs the mean-free field.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .grid import Grid, GridError, SpectralField, dealias, gradient

LOW_NORM_MAX_J = 0
HIGH_NORM_MIN_J = -1
LOW_SPLIT_MAX_J = -1


class CutoffError(ValueError):
    """Cutoff profile fails its support or partition-of-unity contract."""


class BesovError(ValueError):
    """Unsupported Besov parameters or an uncovered wavenumber lattice."""


def _smoothstep(t: np.ndarray, sharpness: float) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(t > 0.0, np.exp(-sharpness / np.maximum(t, 1e-300)), 0.0)
        g = np.where(t < 1.0, np.exp(-sharpness / np.maximum(1.0 - t, 1e-300)), 0.0)
    return f / (f + g)


@dataclass(frozen=True)
class DyadicCutoffFamily:
    """Radial profile chi and dyadic bump psi with pinned supports."""

    sharpness: float = 1.0

    CHI_FLAT_RADIUS = 0.75
    CHI_SUPPORT_RADIUS = 4.0 / 3.0

    def chi(self, rho) -> np.ndarray:
        rho = np.abs(np.asarray(rho, dtype=np.float64))
        t = (self.CHI_SUPPORT_RADIUS - rho) / (self.CHI_SUPPORT_RADIUS - self.CHI_FLAT_RADIUS)
        out = _smoothstep(t, self.sharpness)
        out = np.where(rho <= self.CHI_FLAT_RADIUS, 1.0, out)
        out = np.where(rho >= self.CHI_SUPPORT_RADIUS, 0.0, out)
        return out

    def bump(self, rho) -> np.ndarray:
        """psi(rho) = chi(rho/2) - chi(rho), supported in [3/4, 8/3]."""
        rho = np.asarray(rho, dtype=np.float64)
        return self.chi(rho / 2.0) - self.chi(rho)


def build_cutoffs(profile_sharpness: float = 1.0) -> DyadicCutoffFamily:
    """Construct the cutoff family and verify its defining invariants."""
    if not (0.05 <= profile_sharpness <= 20.0):
        raise CutoffError(
            f"profile sharpness {profile_sharpness} outside supported range [0.05, 20]"
        )
    family = DyadicCutoffFamily(profile_sharpness)

    rho = np.logspace(-3, 3, 301)
    total = np.zeros_like(rho)
    for j in range(-14, 15):
        total += family.bump(rho * 2.0**-j)
    if np.max(np.abs(total - 1.0)) > 1e-10:
        raise CutoffError("dyadic bumps fail the partition-of-unity tolerance")
    if np.any(family.bump(rho) < -1e-15) or np.any(family.bump(rho) > 1.0 + 1e-15):
        raise CutoffError("dyadic bump leaves [0, 1]")
    return family


@dataclass(frozen=True)
class BesovParams:
    """Parameters of a homogeneous Besov norm restricted to p = 2."""

    s: float
    r: float = 1
    p: int = 2
    range: Literal["all", "low", "high"] = "all"

    def __post_init__(self) -> None:
        if self.p != 2:
            raise BesovError(f"only p = 2 is supported, got p = {self.p}")
        if self.r not in (1, np.inf):
            raise BesovError(f"summation exponent r must be 1 or inf, got {self.r}")
        if self.range not in ("all", "low", "high"):
            raise BesovError(f"unknown range {self.range!r}")


FieldOrVector = SpectralField | Sequence[SpectralField]


def _coefficient_arrays(f: FieldOrVector) -> list[np.ndarray]:
    if isinstance(f, SpectralField):
        return [f.coefficients]
    return [comp.coefficients for comp in f]


class DyadicBlocks:
    """Dyadic block machinery bound to one grid and one cutoff family.

    Level-j multipliers are cached; block L2 norms are evaluated directly in
    coefficient space (Parseval), which keeps the per-snapshot diagnostics
    free of extra transforms.
    """

    def __init__(self, grid: Grid, family: DyadicCutoffFamily | None = None):
        self.grid = grid
        self.family = family if family is not None else build_cutoffs()
        self.j_min = int(np.ceil(np.log2(grid.k_min))) - 1
        self.j_max = int(np.floor(np.log2(grid.k_max))) + 1
        self._mult: dict[int, np.ndarray] = {}
        self._w2: dict[int, np.ndarray] = {}
        self._check_coverage()

    def _check_coverage(self) -> None:
        # The telescoped sum over [j_min, j_max] equals
        # chi(2^-(j_max+1) xi) - chi(2^-j_min xi); both endpoint factors must
        # saturate on the lattice or reconstruction is silently lossy.
        corner = np.sqrt(2.0) * self.grid.k_max
        if corner * 2.0 ** -(self.j_max + 1) > self.family.CHI_FLAT_RADIUS:
            raise BesovError("resolvable level range misses the lattice corner modes")
        if self.grid.k_min * 2.0**-self.j_min < self.family.CHI_SUPPORT_RADIUS:
            raise BesovError("resolvable level range misses the fundamental mode")

    @property
    def levels(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def levels_for(self, rng: str) -> list[int]:
        if rng == "all":
            return list(self.levels)
        if rng == "low":
            return [j for j in self.levels if j <= LOW_NORM_MAX_J]
        if rng == "high":
            return [j for j in self.levels if j >= HIGH_NORM_MIN_J]
        raise BesovError(f"unknown range {rng!r}")

    def multiplier(self, j: int) -> np.ndarray:
        if j not in self._mult:
            self._mult[j] = self.family.bump(self.grid.k_abs * 2.0**-j)
        return self._mult[j]

    def _weight2(self, j: int) -> np.ndarray:
        if j not in self._w2:
            self._w2[j] = self.multiplier(j) ** 2
        return self._w2[j]

    def block(self, f: SpectralField, j: int) -> SpectralField:
        """Homogeneous dyadic block of f at level j."""
        if j < self.j_min or j > self.j_max:
            warnings.warn(
                f"dyadic level {j} is unresolvable on this grid "
                f"(range [{self.j_min}, {self.j_max}]); returning the zero field",
                stacklevel=2,
            )
            return SpectralField.zeros(self.grid)
        return SpectralField.from_coefficients(self.grid, self.multiplier(j) * f.coefficients)

    def block_norm(self, f: FieldOrVector, j: int) -> float:
        if j < self.j_min or j > self.j_max:
            return 0.0
        w2 = self._weight2(j)
        total = 0.0
        for c in _coefficient_arrays(f):
            total += float(np.sum(w2 * (c.real**2 + c.imag**2)))
        return float(np.sqrt(total))

    def block_norms(self, f: FieldOrVector, js: Sequence[int] | None = None) -> np.ndarray:
        js = list(self.levels) if js is None else list(js)
        power = np.zeros((self.grid.n, self.grid.n))
        for c in _coefficient_arrays(f):
            power += c.real**2 + c.imag**2
        return np.array([np.sqrt(np.sum(self._weight2(j) * power)) for j in js])

    def besov_norm(self, f: FieldOrVector, params: BesovParams) -> float:
        """2^{js}-weighted l^r aggregation of block L2 norms over a j-range.

        A sequence of components is treated as one vector field (joint L2
        block norms).
        """
        js = self.levels_for(params.range)
        norms = self.block_norms(f, js)
        weighted = np.array([2.0 ** (j * params.s) for j in js]) * norms
        if params.r == 1:
            return float(np.sum(weighted))
        return float(np.max(weighted)) if len(weighted) else 0.0

    def besov_report(self, f: FieldOrVector, params: BesovParams) -> dict:
        """Norm value plus its per-level contributions, for the report files."""
        js = self.levels_for(params.range)
        norms = self.block_norms(f, js)
        contrib = [(j, float(2.0 ** (j * params.s) * v)) for j, v in zip(js, norms)]
        return {
            "norm_kind": "besov",
            "s": params.s,
            "r": "inf" if params.r == np.inf else int(params.r),
            "range": params.range,
            "value": self.besov_norm(f, params),
            "j_contributions": contrib,
        }

    def low_high_split(self, f: SpectralField) -> tuple[SpectralField, SpectralField]:
        """Split into blocks j <= -1 and j >= 0; the parts sum to f - mean(f)."""
        low_mult = np.zeros((self.grid.n, self.grid.n))
        for j in range(self.j_min, LOW_SPLIT_MAX_J + 1):
            low_mult += self.multiplier(j)
        high_mult = np.zeros_like(low_mult)
        for j in range(LOW_SPLIT_MAX_J + 1, self.j_max + 1):
            high_mult += self.multiplier(j)
        c = f.coefficients
        return (
            SpectralField.from_coefficients(self.grid, low_mult * c),
            SpectralField.from_coefficients(self.grid, high_mult * c),
        )

    def reconstruct(self, f: SpectralField) -> SpectralField:
        """Sum of all resolvable blocks; equals f - mean(f) by the partition."""
        total = np.zeros((self.grid.n, self.grid.n))
        for j in self.levels:
            total += self.multiplier(j)
        return SpectralField.from_coefficients(self.grid, total * f.coefficients)


def chemin_lerner_norm(
    blocks: DyadicBlocks,
    samples: Sequence[FieldOrVector],
    times: Sequence[float],
    q: float,
    params: BesovParams,
) -> float:
    """Time-inside-block norm: l^r over j of 2^{js} ||Delta_j u||_{L^q_t(L^2)}.

    The inner time norm uses the trapezoid rule for q = 1 and the maximum
    over samples for q = inf; samples must be uniformly spaced in time.
    """
    if q not in (1, np.inf):
        raise BesovError(f"time exponent q must be 1 or inf, got {q}")
    times = np.asarray(times, dtype=np.float64)
    if len(times) != len(samples):
        raise BesovError("sample/time count mismatch")
    if q == 1 and len(samples) < 2:
        raise BesovError("q = 1 needs at least two samples for the trapezoid rule")
    if len(times) > 2:
        dt = np.diff(times)
        if np.max(np.abs(dt - dt[0])) > 1e-9 * max(abs(dt[0]), 1e-30):
            raise BesovError("samples must be uniformly spaced in time")

    js = blocks.levels_for(params.range)
    per_sample = np.array([blocks.block_norms(s, js) for s in samples])  # (t, j)
    if q == 1:
        time_norms = np.trapezoid(per_sample, times, axis=0)
    else:
        time_norms = per_sample.max(axis=0)
    weighted = np.array([2.0 ** (j * params.s) for j in js]) * time_norms
    if params.r == 1:
        return float(np.sum(weighted))
    return float(np.max(weighted)) if len(weighted) else 0.0


def advect(u: tuple[SpectralField, SpectralField], f: SpectralField) -> SpectralField:
    """Dealiased advection u . grad f."""
    fx, fy = gradient(f)
    return dealias(u[0] * fx + u[1] * fy)


def block_commutator(
    blocks: DyadicBlocks,
    u: tuple[SpectralField, SpectralField],
    f: SpectralField,
    j: int,
) -> SpectralField:
    """Commutator [Delta_j, u . grad] f with dealiased products."""
    if u[0].grid is not f.grid and u[0].grid != f.grid:
        raise GridError("commutator operands live on different grids")
    return blocks.block(advect(u, f), j) - advect(u, blocks.block(f, j))
