"""Initial-data generation with prescribed low-frequency regularity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import smallness_X0
from .dyadic import DyadicBlocks
from .grid import Grid, SpectralField
from .system import MhdState

FIELD_NAMES = ("a", "u1", "u2", "theta", "b")


class InitialDataError(ValueError):
    """Initial-data specification is invalid or its target is unreachable."""


@dataclass(frozen=True)
class InitialSpec:
    """Recipe for the initial perturbation.

    kind "random_spectrum" draws independent uniform phases on a wavenumber
    band with deterministic radial amplitudes |k|^(spectral_slope + 2); the
    dyadic block norms of such a field scale like 2^(j (spectral_slope + 3)),
    so slope -2 spreads the 2^-j weighted (sigma = 1) low-frequency profile
    flat across the levels.  With calibrate_x0 the fields are rescaled so the
    smallness functional equals `amplitude` exactly (the functional is
    1-homogeneous).

    kind "single_mode" puts one conjugate mode pair per field at `mode` (in
    integer lattice units) with literal coefficient amplitude `amplitude`.
    """

    kind: str = "random_spectrum"
    amplitude: float = 1e-3
    spectral_slope: float = -2.0
    seed: int = 0
    band: tuple[float, float] | None = None
    mode: tuple[int, int] = (1, 0)
    calibrate_x0: bool = True
    path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("equilibrium", "single_mode", "random_spectrum", "file"):
            raise InitialDataError(f"unknown initial-data kind {self.kind!r}")
        if self.amplitude < 0:
            raise InitialDataError("amplitude must be nonnegative")
        if self.band is not None and not (0 < self.band[0] < self.band[1]):
            raise InitialDataError(f"band must satisfy 0 < lo < hi, got {self.band}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "amplitude": self.amplitude,
            "spectral_slope": self.spectral_slope,
            "seed": self.seed,
            "band": list(self.band) if self.band else None,
            "mode": list(self.mode),
            "calibrate_x0": self.calibrate_x0,
            "path": self.path,
        }


def _hermitian_random(
    grid: Grid, rng: np.random.Generator, amp_law, band: tuple[float, float]
) -> np.ndarray:
    """Coefficients with deterministic radial amplitude and random phase."""
    n = grid.n
    idx = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
    i1 = np.broadcast_to(idx[:, None], (n, n))
    i2 = np.broadcast_to(idx[None, :], (n, n))
    in_band = (grid.k_abs >= band[0] - 1e-12) & (grid.k_abs <= band[1] + 1e-12)
    in_band &= (np.abs(i1) != n // 2) & (np.abs(i2) != n // 2)
    half = (i1 > 0) | ((i1 == 0) & (i2 > 0))
    sel = in_band & half

    c = np.zeros((n, n), dtype=np.complex128)
    rows, cols = np.nonzero(sel)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=len(rows))
    amps = amp_law(grid.k_abs[rows, cols])
    c[rows, cols] = amps * np.exp(1j * phases)
    c[(-rows) % n, (-cols) % n] = np.conj(c[rows, cols])
    return c


def generate_initial(spec: InitialSpec, grid: Grid, blocks: DyadicBlocks) -> MhdState:
    """Build the initial perturbation state the recipe prescribes."""
    if spec.kind == "file":
        from .io import read_state

        if spec.path is None:
            raise InitialDataError("kind 'file' needs a path")
        state, _ = read_state(spec.path, grid)
        return state

    if spec.kind == "equilibrium" or spec.amplitude == 0.0:
        return MhdState.equilibrium(grid)

    rng = np.random.default_rng(spec.seed)
    coeffs: dict[str, np.ndarray] = {}
    if spec.kind == "single_mode":
        n = grid.n
        m1, m2 = spec.mode
        if (m1, m2) == (0, 0) or max(abs(m1), abs(m2)) > n // 2 - 1:
            raise InitialDataError(f"mode {spec.mode} is not a usable lattice mode")
        for name in FIELD_NAMES:
            c = np.zeros((n, n), dtype=np.complex128)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            c[m1 % n, m2 % n] = 0.5 * spec.amplitude * np.exp(1j * phase)
            c[(-m1) % n, (-m2) % n] = np.conj(c[m1 % n, m2 % n])
            coeffs[name] = c
    else:
        band = spec.band if spec.band is not None else (grid.k_min, min(1.0, 0.5 * grid.k_max))
        if band[1] > grid.k_max * np.sqrt(2.0):
            raise InitialDataError("band exceeds the lattice")
        exponent = spec.spectral_slope + 2.0

        def amp_law(r):
            return r**exponent

        for name in FIELD_NAMES:
            coeffs[name] = _hermitian_random(grid, rng, amp_law, band)

    f = {name: SpectralField.from_coefficients(grid, c) for name, c in coeffs.items()}
    state = MhdState(grid, f["a"], (f["u1"], f["u2"]), f["theta"], f["b"], 0.0)

    if spec.kind == "random_spectrum" and spec.calibrate_x0:
        x0 = smallness_X0(blocks, state.a, state.u, state.theta, state.b)
        if x0 <= 0.0:
            raise InitialDataError("band produced no low/high-frequency content to calibrate")
        scale = spec.amplitude / x0
        for name in coeffs:
            coeffs[name] = coeffs[name] * scale
        f = {name: SpectralField.from_coefficients(grid, c) for name, c in coeffs.items()}
        state = MhdState(grid, f["a"], (f["u1"], f["u2"]), f["theta"], f["b"], 0.0)
    return state
