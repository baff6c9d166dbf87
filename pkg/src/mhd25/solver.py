"""Time integration: exact linear propagation plus explicit two-stage rule.

The scheme is the integrating-factor midpoint method

    U_mid = E(dt/2) (U + dt/2 N(U))
    U_new = E(dt/2) (E(dt/2) U + dt N(U_mid))

where E is the exact propagator of the stiff linear part and N collects
everything else.  It is globally second order and reduces exactly to the
semigroup when N vanishes.

For the combined-variable formulation E is the per-shell 3x3 matrix
exponential of the coupled symbol (plus heat decay of the solenoidal
velocity); the transported auxiliaries (a, b) have no linear part, so the
formula degenerates to the explicit midpoint rule for them, and likewise for
every zero mode (the propagators are the identity at k = 0).  For the
primitive formulation E applies only the diagonal heat multipliers of u and
theta; the first-order acoustic coupling is non-stiff and stays in N, which
is why the primitive path carries the dt <= 0.5 / k_max^2 guard.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .diagnostics import DiagnosticsRecorder
from .grid import Grid, SpectralField
from .symbol import LatticePropagator
from .system import (
    MhdState,
    Params,
    ReformulatedState,
    SMALLNESS_BOUND,
    VACUUM_FLOOR,
    VacuumError,
    compute_phi,
    nonlinear_F,
    rhs_primitive,
    transport_rhs,
)

FORMULATIONS = ("primitive", "reformulated", "both")


class SolverConfigError(ValueError):
    """Solver configuration violates an invariant (dt, stride, CFL guard)."""


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    formulation: str = "reformulated"
    dealias: bool = True
    snapshot_stride: int = 1
    diag_stride: int | None = None
    seed: int = 0
    linear_only: bool = False
    halt_on_smallness: bool = False

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise SolverConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= self.dt:
            raise SolverConfigError("t_end must be at least one step long")
        if self.formulation not in FORMULATIONS:
            raise SolverConfigError(f"unknown formulation {self.formulation!r}")
        if self.snapshot_stride < 1:
            raise SolverConfigError("snapshot_stride must be >= 1")
        if self.diag_stride is not None and self.diag_stride < 1:
            raise SolverConfigError("diag_stride must be >= 1")

    def validate_for_grid(self, grid: Grid) -> None:
        # The primitive path integrates the first-order linear coupling
        # explicitly; cap dt at the parabolic scale of the finest mode.
        if self.formulation in ("primitive", "both"):
            cap = 0.5 / grid.k_max**2
            if self.dt > cap * (1.0 + 1e-12):
                raise SolverConfigError(
                    f"dt = {self.dt} exceeds the explicit-remainder guard "
                    f"0.5 / k_max^2 = {cap:.3e}"
                )

    def effective_diag_stride(self) -> int:
        return self.diag_stride if self.diag_stride is not None else self.snapshot_stride

    def n_steps(self) -> int:
        n = int(round(self.t_end / self.dt))
        if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise SolverConfigError("t_end must be an integer number of steps")
        return n

    def to_dict(self) -> dict:
        return {
            "dt": self.dt,
            "t_end": self.t_end,
            "formulation": self.formulation,
            "dealias": self.dealias,
            "snapshot_stride": self.snapshot_stride,
            "diag_stride": self.diag_stride,
            "seed": self.seed,
            "linear_only": self.linear_only,
            "halt_on_smallness": self.halt_on_smallness,
        }


@dataclass
class Trajectory:
    """Result of one integration: sampled states, diagnostics, and guards."""

    grid: Grid
    formulation: str
    times: list[float] = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    diagnostics: DiagnosticsRecorder | None = None
    termination: str = "completed"
    sup_abs_a: float = 0.0
    smallness_violated: bool = False
    companion: "Trajectory | None" = None
    phi_consistency: list[tuple[float, float]] = field(default_factory=list)

    @property
    def final(self):
        return self.snapshots[-1] if self.snapshots else None

    def max_phi_error(self) -> float:
        return max((e for _, e in self.phi_consistency), default=0.0)


class _ReformulatedPropagator:
    """Half-step propagator arrays for the combined-variable linear part.

    Built to be exactly consistent with the discrete operators: d_hat is
    i k_d . u_hat with the Nyquist-zeroed derivative multipliers, so on the
    Nyquist lines (where k_d drops a component) the 3x3 block uses the
    gradient norm |k_d|^2 in its coupling rows while the heat entries keep
    the full |k|^2.  Off those lines the two coincide and the block is the
    radial symbol.
    """

    def __init__(self, grid: Grid, dt_half: float):
        from .symbol import batched_expm

        self.grid = grid
        n = grid.n
        idx = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        idx_d = idx.copy()
        idx_d[n // 2] = 0
        m2 = (idx[:, None] ** 2 + idx[None, :] ** 2).ravel()
        m2d = (idx_d[:, None] ** 2 + idx_d[None, :] ** 2).ravel()
        pairs = np.stack([m2, m2d], axis=1)
        uniq, inverse = np.unique(pairs, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        k2u = grid.k_min**2 * uniq[:, 0].astype(np.float64)
        kd2u = grid.k_min**2 * uniq[:, 1].astype(np.float64)
        mats = np.zeros((len(uniq), 3, 3))
        mats[:, 0, 1] = -2.0
        mats[:, 1, 0] = kd2u
        mats[:, 1, 1] = -k2u
        mats[:, 1, 2] = kd2u
        mats[:, 2, 1] = -1.0
        mats[:, 2, 2] = -k2u
        prop = batched_expm(mats, dt_half)
        prop[(uniq[:, 0] == 0)] = np.eye(3)
        full = prop[inverse].reshape(n, n, 3, 3)
        self.E = full.transpose(2, 3, 0, 1)  # E[a][b] is an (n, n) array
        self.heat = np.exp(-grid.k2 * dt_half)
        self.kxd = grid._ikx.imag
        self.kyd = grid._iky.imag
        kd2 = self.kxd**2 + self.kyd**2
        with np.errstate(divide="ignore"):
            self.invkd2 = np.where(kd2 > 0.0, 1.0 / np.where(kd2 > 0.0, kd2, 1.0), 0.0)

    def apply(self, c: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        kd = self.kxd * c["u1"] + self.kyd * c["u2"]
        d = 1j * kd
        upar1 = self.kxd * kd * self.invkd2
        upar2 = self.kyd * kd * self.invkd2
        uperp1 = c["u1"] - upar1
        uperp2 = c["u2"] - upar2
        E = self.E
        phi = E[0][0] * c["phi"] + E[0][1] * d + E[0][2] * c["theta"]
        dnew = E[1][0] * c["phi"] + E[1][1] * d + E[1][2] * c["theta"]
        theta = E[2][0] * c["phi"] + E[2][1] * d + E[2][2] * c["theta"]
        kd_new = -1j * dnew
        out = dict(c)
        out["phi"] = phi
        out["theta"] = theta
        out["u1"] = self.kxd * kd_new * self.invkd2 + self.heat * uperp1
        out["u2"] = self.kyd * kd_new * self.invkd2 + self.heat * uperp2
        return out


class _PrimitivePropagator:
    """Half-step diagonal heat multipliers for u and theta."""

    def __init__(self, grid: Grid, dt_half: float, params: Params):
        params.require_normalized("the primitive integrator")
        self.grid = grid
        self.heat = np.exp(-grid.k2 * dt_half)

    def apply(self, c: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        out = dict(c)
        out["u1"] = self.heat * c["u1"]
        out["u2"] = self.heat * c["u2"]
        out["theta"] = self.heat * c["theta"]
        return out


@lru_cache(maxsize=8)
def _propagator(grid: Grid, dt: float, formulation: str) -> object:
    if formulation == "reformulated":
        return _ReformulatedPropagator(grid, 0.5 * dt)
    return _PrimitivePropagator(grid, 0.5 * dt, Params())


def _coeffs_from_primitive(state: MhdState) -> dict[str, np.ndarray]:
    return {
        "a": state.a.coefficients,
        "u1": state.u[0].coefficients,
        "u2": state.u[1].coefficients,
        "theta": state.theta.coefficients,
        "b": state.b.coefficients,
    }


def _primitive_from_coeffs(grid: Grid, c: dict, t: float) -> MhdState:
    fc = SpectralField.from_coefficients
    return MhdState(
        grid,
        fc(grid, c["a"]),
        (fc(grid, c["u1"]), fc(grid, c["u2"])),
        fc(grid, c["theta"]),
        fc(grid, c["b"]),
        t,
    )


def _coeffs_from_reformulated(state: ReformulatedState) -> dict[str, np.ndarray]:
    return {
        "phi": state.phi.coefficients,
        "u1": state.u[0].coefficients,
        "u2": state.u[1].coefficients,
        "theta": state.theta.coefficients,
        "a": state.a.coefficients,
        "b": state.b.coefficients,
    }


def _reformulated_from_coeffs(grid: Grid, c: dict, t: float) -> ReformulatedState:
    fc = SpectralField.from_coefficients
    return ReformulatedState(
        grid,
        fc(grid, c["phi"]),
        (fc(grid, c["u1"]), fc(grid, c["u2"])),
        fc(grid, c["theta"]),
        fc(grid, c["a"]),
        fc(grid, c["b"]),
        t,
    )


def _explicit_part_primitive(
    grid: Grid, c: dict, t: float, config: SolverConfig, params: Params
) -> dict[str, np.ndarray]:
    state = _primitive_from_coeffs(grid, c, t)
    da, du, dtheta, db = rhs_primitive(
        state, params, dealias_products=config.dealias, linear_only=config.linear_only
    )
    k2 = grid.k2
    return {
        "a": da.coefficients,
        "u1": du[0].coefficients + k2 * c["u1"],
        "u2": du[1].coefficients + k2 * c["u2"],
        "theta": dtheta.coefficients + k2 * c["theta"],
        "b": db.coefficients,
    }


def _explicit_part_reformulated(
    grid: Grid, c: dict, t: float, config: SolverConfig, params: Params
) -> dict[str, np.ndarray]:
    if config.linear_only:
        zeros = np.zeros_like(c["phi"])
        return {k: zeros for k in c}
    state = _reformulated_from_coeffs(grid, c, t)
    state.check_vacuum()
    f1, f2, f3, _, _ = nonlinear_F(
        state.phi, state.u, state.theta, state.a, config.dealias
    )
    da = transport_rhs(state.a, state.u, config.dealias)
    db = transport_rhs(state.b, state.u, config.dealias)
    return {
        "phi": f1.coefficients,
        "u1": f2[0].coefficients,
        "u2": f2[1].coefficients,
        "theta": f3.coefficients,
        "a": da.coefficients,
        "b": db.coefficients,
    }


_CORE = {
    "primitive": ("u1", "u2", "theta"),
    "reformulated": ("phi", "u1", "u2", "theta"),
}


def _advance(
    grid: Grid,
    c: dict,
    t: float,
    dt: float,
    config: SolverConfig,
    params: Params,
    formulation: str,
) -> dict[str, np.ndarray]:
    prop = _propagator(grid, dt, formulation)
    explicit = (
        _explicit_part_primitive if formulation == "primitive" else _explicit_part_reformulated
    )
    core = _CORE[formulation]

    # The propagator touches only the core keys and passes auxiliaries through,
    # so the same two-stage formula advances everything: auxiliaries and zero
    # modes see the identity propagator and reduce to explicit midpoint.
    n0 = explicit(grid, c, t, config, params)
    mid = prop.apply({k: c[k] + 0.5 * dt * n0[k] for k in c})

    n1 = explicit(grid, mid, t + 0.5 * dt, config, params)
    half = prop.apply(c)
    out = {k: (half[k] if k in core else c[k]) + dt * n1[k] for k in c}
    return prop.apply(out)


def step(
    state: MhdState | ReformulatedState, dt: float, config: SolverConfig, params: Params | None = None
):
    """One integrator step of the given state; pure, returns a new state."""
    params = params or Params()
    grid = state.grid
    if isinstance(state, MhdState):
        config.validate_for_grid(grid)
        c = _coeffs_from_primitive(state)
        out = _advance(grid, c, state.time, dt, config, params, "primitive")
        return _primitive_from_coeffs(grid, out, state.time + dt)
    c = _coeffs_from_reformulated(state)
    out = _advance(grid, c, state.time, dt, config, params, "reformulated")
    return _reformulated_from_coeffs(grid, out, state.time + dt)


def _coeffs_finite(c: dict) -> bool:
    return all(np.isfinite(v).all() for v in c.values())


def _run_single(
    initial,
    grid: Grid,
    config: SolverConfig,
    params: Params,
    recorder: DiagnosticsRecorder | None,
    formulation: str,
) -> Trajectory:
    traj = Trajectory(grid, formulation, diagnostics=recorder)
    if formulation == "primitive":
        c = _coeffs_from_primitive(initial)
        rebuild = _primitive_from_coeffs
    else:
        c = _coeffs_from_reformulated(initial)
        rebuild = _reformulated_from_coeffs

    n_steps = config.n_steps()
    diag_stride = config.effective_diag_stride()

    def sample(i: int, coeffs: dict, want_diag: bool, want_snap: bool) -> bool:
        """Record diagnostics/guards; False signals an abort."""
        t = i * config.dt
        state = rebuild(grid, coeffs, t)

        def keep() -> None:
            traj.times.append(t)
            traj.snapshots.append(state)

        if not _coeffs_finite(coeffs):
            traj.termination = "nan_abort"
            keep()
            return False
        if not config.linear_only:
            if state.density_floor() < VACUUM_FLOOR:
                traj.termination = "vacuum_abort"
                keep()
                return False
            sup_a = state.sup_abs_a()
            traj.sup_abs_a = max(traj.sup_abs_a, sup_a)
            if sup_a > SMALLNESS_BOUND:
                traj.smallness_violated = True
                if config.halt_on_smallness:
                    traj.termination = "smallness_violation"
                    keep()
                    return False
        if want_diag and recorder is not None:
            recorder.record(state)
        if want_snap:
            keep()
        return True

    if not sample(0, c, True, True):
        return traj
    for i in range(1, n_steps + 1):
        try:
            c = _advance(grid, c, (i - 1) * config.dt, config.dt, config, params, formulation)
        except VacuumError:
            traj.termination = "vacuum_abort"
            traj.times.append((i - 1) * config.dt)
            return traj
        want_diag = i % diag_stride == 0 or i == n_steps
        want_snap = i % config.snapshot_stride == 0 or i == n_steps
        if want_diag or want_snap:
            if not sample(i, c, want_diag, want_snap):
                return traj
    return traj


def simulate(
    initial: MhdState,
    config: SolverConfig,
    params: Params | None = None,
    recorder: DiagnosticsRecorder | None = None,
    companion_recorder: DiagnosticsRecorder | None = None,
) -> Trajectory:
    """Integrate from an initial primitive state under the configuration.

    formulation="both" runs the primitive and combined-variable integrations
    independently from the same data and records the history of
    ||phi_evolved - phi(a, theta, b)||_L2 in phi_consistency.
    """
    params = params or Params()
    grid = initial.grid
    config.validate_for_grid(grid)

    if config.formulation == "primitive":
        return _run_single(initial, grid, config, params, recorder, "primitive")
    if config.formulation == "reformulated":
        ref0 = ReformulatedState.from_primitive(initial)
        return _run_single(ref0, grid, config, params, recorder, "reformulated")

    prim = _run_single(initial, grid, config, params, recorder, "primitive")
    ref0 = ReformulatedState.from_primitive(initial)
    ref = _run_single(ref0, grid, config, params, companion_recorder, "reformulated")
    prim.companion = ref
    for (t_p, s_p), (t_r, s_r) in zip(
        zip(prim.times, prim.snapshots), zip(ref.times, ref.snapshots)
    ):
        if t_p != t_r:
            break
        derived = compute_phi(s_p.a, s_p.theta, s_p.b)
        err = (s_r.phi - derived).l2()
        prim.phi_consistency.append((t_p, err))
    return prim


@dataclass
class ConservationReport:
    mass_a_drift: float
    mass_b_drift: float
    energy_rel_drift: float
    t_span: float


def conservation_report(traj: Trajectory) -> ConservationReport:
    """Drifts of the conserved integrals along a recorded trajectory."""
    rec = traj.diagnostics
    if rec is None or not rec.series.times:
        raise ValueError("trajectory carries no diagnostics series")
    s = rec.series
    ma = np.asarray(s.mass_a)
    mb = np.asarray(s.mass_b)
    en = np.asarray(s.total_energy)
    return ConservationReport(
        mass_a_drift=float(np.max(np.abs(ma - ma[0]))),
        mass_b_drift=float(np.max(np.abs(mb - mb[0]))),
        energy_rel_drift=float(np.max(np.abs(en - en[0])) / max(abs(en[0]), 1e-300)),
        t_span=float(s.times[-1] - s.times[0]),
    )
