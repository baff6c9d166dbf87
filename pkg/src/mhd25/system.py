"""The 2.5D compressible MHD perturbation system and its reformulation.

Two equivalent systems around the equilibrium (density, velocity,
temperature, vertical magnetic scalar) = (1, 0, 1, 1):

  * the primitive unknowns (a, u, theta, b), where a, theta, b are the
    deviations from 1 and u is the planar velocity;
  * the combined variable phi = a*(theta+1) + (b+1)^2/2 - 1/2 together with
    (u, theta), whose linear part carries all of the dissipation.

Nonlinear products are evaluated pointwise in physical space and dealiased
with the 2/3 rule.  The rational factors a/(1+a) and 1/(1+a) are evaluated
pointwise without truncation; this is the one deliberate spectral impurity,
and it is what makes the pointwise algebraic identities between the two
formulations hold to rounding when dealiasing is off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, SpectralField, dealias as _dealias, divergence, gradient, laplacian

VACUUM_FLOOR = 0.1
SMALLNESS_BOUND = 0.5


class VacuumError(RuntimeError):
    """Density 1 + a fell at or below the vacuum guard threshold."""


class ParameterError(ValueError):
    """Physical parameters violate their admissibility constraints."""


@dataclass(frozen=True)
class Params:
    """Viscosity, heat, and gas parameters with the pinned normalization.

    The defaults mu = c_v = R = kappa = 1, lam = -1 (so lam + 2 mu = 1 > 0)
    and unit backgrounds are the normalization every derived quantity in this
    package assumes; the reformulated system and the symbol analysis require
    it and refuse anything else.
    """

    mu: float = 1.0
    lam: float = -1.0
    c_v: float = 1.0
    kappa: float = 1.0
    R: float = 1.0
    rho_bg: float = 1.0
    theta_bg: float = 1.0
    b_bg: float = 1.0

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise ParameterError(f"mu must be positive, got {self.mu}")
        if not self.lam + 2 * self.mu > 0:
            raise ParameterError(f"lam + 2*mu must be positive, got {self.lam + 2 * self.mu}")
        if not (self.c_v > 0 and self.kappa > 0 and self.R > 0):
            raise ParameterError("c_v, kappa, R must be positive")
        if (self.rho_bg, self.theta_bg, self.b_bg) != (1.0, 1.0, 1.0):
            raise ParameterError("only unit backgrounds are supported")

    @property
    def is_normalized(self) -> bool:
        return (self.mu, self.lam, self.c_v, self.kappa, self.R) == (1.0, -1.0, 1.0, 1.0, 1.0)

    def require_normalized(self, what: str) -> None:
        if not self.is_normalized:
            raise ParameterError(f"{what} requires the pinned parameter normalization")

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "lam": self.lam,
            "c_v": self.c_v,
            "kappa": self.kappa,
            "R": self.R,
        }


Vector = tuple[SpectralField, SpectralField]


@dataclass
class MhdState:
    """Primitive perturbation unknowns on one grid at one time."""

    grid: Grid
    a: SpectralField
    u: Vector
    theta: SpectralField
    b: SpectralField
    time: float = 0.0

    @classmethod
    def equilibrium(cls, grid: Grid) -> "MhdState":
        z = SpectralField.zeros(grid)
        return cls(grid, z, (z, z), z, z)

    def density_floor(self) -> float:
        return float(1.0 + np.min(self.a.values))

    def check_vacuum(self) -> None:
        if self.density_floor() < VACUUM_FLOOR:
            raise VacuumError(
                f"min(1 + a) = {self.density_floor():.3e} below guard {VACUUM_FLOOR}"
            )

    def sup_abs_a(self) -> float:
        return float(np.max(np.abs(self.a.values)))

    def phi(self) -> SpectralField:
        return compute_phi(self.a, self.theta, self.b)

    def fields(self) -> dict[str, SpectralField]:
        return {"a": self.a, "u1": self.u[0], "u2": self.u[1], "theta": self.theta, "b": self.b}


@dataclass
class ReformulatedState:
    """Combined-variable unknowns (phi, u, theta).

    The rational coefficients in the nonlinear terms need the density
    deviation, and the energy functionals need the magnetic deviation, so the
    state carries (a, b) as auxiliary fields advanced by their own transport
    equations; they do not feed the linear part.
    """

    grid: Grid
    phi: SpectralField
    u: Vector
    theta: SpectralField
    a: SpectralField
    b: SpectralField
    time: float = 0.0

    @classmethod
    def from_primitive(cls, state: MhdState) -> "ReformulatedState":
        return cls(
            state.grid,
            state.phi(),
            state.u,
            state.theta,
            state.a,
            state.b,
            state.time,
        )

    def density_floor(self) -> float:
        return float(1.0 + np.min(self.a.values))

    def check_vacuum(self) -> None:
        if self.density_floor() < VACUUM_FLOOR:
            raise VacuumError(
                f"min(1 + a) = {self.density_floor():.3e} below guard {VACUUM_FLOOR}"
            )

    def sup_abs_a(self) -> float:
        return float(np.max(np.abs(self.a.values)))

    def fields(self) -> dict[str, SpectralField]:
        return {
            "phi": self.phi,
            "u1": self.u[0],
            "u2": self.u[1],
            "theta": self.theta,
            "a": self.a,
            "b": self.b,
        }


def rational_I(a: SpectralField) -> SpectralField:
    """The rational factor I(a) = a / (1 + a), evaluated pointwise."""
    av = a.values
    if np.min(1.0 + av) <= 0.0:
        raise VacuumError("1 + a touches zero; I(a) undefined")
    return SpectralField.from_values(a.grid, av / (1.0 + av))


def compute_phi(a: SpectralField, theta: SpectralField, b: SpectralField) -> SpectralField:
    """Combined field a*(theta+1) + (b+1)^2/2 - 1/2.

    Algebraically identical to a + a*theta + b^2/2 + b, the composition the
    initial data satisfies.
    """
    av, tv, bv = a.values, theta.values, b.values
    return SpectralField.from_values(a.grid, av * (tv + 1.0) + 0.5 * (bv + 1.0) ** 2 - 0.5)


def compute_delta(phi: SpectralField, a: SpectralField) -> SpectralField:
    """Transported combination delta = phi - 2a."""
    return SpectralField.from_values(phi.grid, phi.values - 2.0 * a.values)


def recover_a(phi: SpectralField, delta: SpectralField) -> SpectralField:
    """Invert compute_delta: a = (phi - delta) / 2."""
    return SpectralField.from_values(phi.grid, 0.5 * (phi.values - delta.values))


def lorentz_reduction_check(m: SpectralField) -> float:
    """Residual of the planar Lorentz-force reduction for B = (0, 0, m).

    Evaluates (curl B) x B on the slice with spectral derivatives and
    compares against -grad(m^2)/2; returns the max pointwise difference over
    both in-plane components.  The out-of-plane component vanishes
    identically.
    """
    mx, my = gradient(m)
    mv = m.values
    lhs1 = -mv * mx.values
    lhs2 = -mv * my.values
    m2 = SpectralField.from_values(m.grid, mv * mv)
    gx, gy = gradient(m2)
    rhs1 = -0.5 * gx.values
    rhs2 = -0.5 * gy.values
    return float(max(np.max(np.abs(lhs1 - rhs1)), np.max(np.abs(lhs2 - rhs2))))


def viscous_heating(u: Vector, params: Params | None = None) -> SpectralField:
    """Pointwise 2 mu |D(u)|^2 + lam (div u)^2.

    At the pinned normalization this equals (d1u1 - d2u2)^2 + (d1u2 + d2u1)^2,
    a sum of squares, so it is evaluated in that form and is nonnegative to
    rounding.
    """
    params = params or Params()
    g = u[0].grid
    u1x, u1y = gradient(u[0])
    u2x, u2y = gradient(u[1])
    if params.is_normalized:
        w = (u1x.values - u2y.values) ** 2 + (u1y.values + u2x.values) ** 2
        return SpectralField.from_values(g, w)
    d_sq = u1x.values**2 + u2y.values**2 + 0.5 * (u1y.values + u2x.values) ** 2
    div_sq = (u1x.values + u2y.values) ** 2
    return SpectralField.from_values(g, 2.0 * params.mu * d_sq + params.lam * div_sq)


def _maybe_dealias(f: SpectralField, on: bool) -> SpectralField:
    return _dealias(f) if on else f


def rhs_primitive(
    state: MhdState,
    params: Params | None = None,
    dealias_products: bool = True,
    linear_only: bool = False,
) -> tuple[SpectralField, Vector, SpectralField, SpectralField]:
    """Tendencies of (a, u, theta, b) under the primitive system.

    With linear_only the constant-coefficient linearization is returned
    (pressure and magnetic gradients reduce to grad(a + theta + b)); this is
    the 4x4 counterpart of the symbol analysis and needs the pinned
    normalization.
    """
    params = params or Params()
    g = state.grid
    u = state.u

    if linear_only:
        params.require_normalized("the primitive linearization")
        div_u = divergence(*u)
        lap_u = (laplacian(u[0]), laplacian(u[1]))
        s = SpectralField.from_values(
            g, state.a.values + state.theta.values + state.b.values
        )
        sx, sy = gradient(s)
        da = -1.0 * div_u
        du = (lap_u[0] - sx, lap_u[1] - sy)
        dtheta = laplacian(state.theta) - div_u
        db = -1.0 * div_u
        return da, du, dtheta, db

    state.check_vacuum()
    av = state.a.values
    tv = state.theta.values
    bv = state.b.values
    rho = 1.0 + av

    div_u = divergence(*u)
    div_uv = div_u.values
    ax, ay = gradient(state.a)
    tx, ty = gradient(state.theta)
    bx, by = gradient(state.b)
    u1v, u2v = u[0].values, u[1].values
    u1x, u1y = gradient(u[0])
    u2x, u2y = gradient(u[1])
    lap_u1 = laplacian(u[0])
    lap_u2 = laplacian(u[1])
    lap_t = laplacian(state.theta)

    on = dealias_products

    # mass and induction: d/dt = -u.grad(f) - (1 + f) div u
    da = -1.0 * div_u + _maybe_dealias(
        SpectralField.from_values(g, -(u1v * ax.values + u2v * ay.values) - av * div_uv), on
    )
    db = -1.0 * div_u + _maybe_dealias(
        SpectralField.from_values(g, -(u1v * bx.values + u2v * by.values) - bv * div_uv), on
    )

    # momentum; the (lam + mu) grad(div u) piece vanishes at the pinned
    # normalization but belongs to the general form
    pg = SpectralField.from_values(g, params.R * (av + tv + av * tv))
    pgx, pgy = gradient(pg)
    msq = SpectralField.from_values(g, (bv + 1.0) ** 2)
    mx, my = gradient(msq)
    bulk = params.lam + params.mu
    dvx, dvy = gradient(div_u) if bulk != 0.0 else (None, None)
    nonlin_u1 = SpectralField.from_values(
        g,
        -(u1v * u1x.values + u2v * u1y.values)
        + (params.mu / rho - params.mu) * lap_u1.values
        + (bulk / rho * dvx.values if bulk != 0.0 else 0.0)
        - (pgx.values + 0.5 * mx.values) / rho,
    )
    nonlin_u2 = SpectralField.from_values(
        g,
        -(u1v * u2x.values + u2v * u2y.values)
        + (params.mu / rho - params.mu) * lap_u2.values
        + (bulk / rho * dvy.values if bulk != 0.0 else 0.0)
        - (pgy.values + 0.5 * my.values) / rho,
    )
    du = (
        params.mu * lap_u1 + _maybe_dealias(nonlin_u1, on),
        params.mu * lap_u2 + _maybe_dealias(nonlin_u2, on),
    )

    # temperature
    heat = params.kappa / params.c_v
    w = viscous_heating(u, params)
    nonlin_t = SpectralField.from_values(
        g,
        -(u1v * tx.values + u2v * ty.values)
        + (heat / rho - heat) * lap_t.values
        - (params.R / params.c_v) * tv * div_uv
        + w.values / (params.c_v * rho),
    )
    dtheta = (
        heat * lap_t
        - (params.R / params.c_v) * div_u
        + _maybe_dealias(nonlin_t, on)
    )
    return da, du, dtheta, db


def nonlinear_F(
    phi: SpectralField,
    u: Vector,
    theta: SpectralField,
    a: SpectralField,
    dealias_products: bool = True,
) -> tuple[SpectralField, Vector, SpectralField, SpectralField, Vector]:
    """The five nonlinear terms of the reformulated system.

    Returns (F1, F2, F3, F4, F5) with F2 and F5 as vectors.  The definitions
    imply F1 = F4 - u.grad(phi), and the implementation satisfies that
    identity to rounding.
    """
    g = phi.grid
    av = a.values
    if np.min(1.0 + av) <= 0.0:
        raise VacuumError("1 + a touches zero in nonlinear terms")
    i_a = av / (1.0 + av)
    tv = theta.values
    pv = phi.values
    u1v, u2v = u[0].values, u[1].values

    div_u = divergence(*u)
    div_uv = div_u.values
    px, py = gradient(phi)
    tx, ty = gradient(theta)
    u1x, u1y = gradient(u[0])
    u2x, u2y = gradient(u[1])
    lap_t = laplacian(theta)
    lap_u1 = laplacian(u[0])
    lap_u2 = laplacian(u[1])
    w = (u1x.values - u2y.values) ** 2 + (u1y.values + u2x.values) ** 2

    on = dealias_products
    f4_v = -2.0 * pv * div_uv - tv * div_uv + i_a * lap_t.values + i_a * w
    f1 = _maybe_dealias(
        SpectralField.from_values(g, -(u1v * px.values + u2v * py.values) + f4_v), on
    )
    f4 = _maybe_dealias(SpectralField.from_values(g, f4_v), on)
    f5_1v = i_a * px.values + i_a * tx.values - i_a * lap_u1.values
    f5_2v = i_a * py.values + i_a * ty.values - i_a * lap_u2.values
    f2 = (
        _maybe_dealias(
            SpectralField.from_values(g, -(u1v * u1x.values + u2v * u1y.values) + f5_1v), on
        ),
        _maybe_dealias(
            SpectralField.from_values(g, -(u1v * u2x.values + u2v * u2y.values) + f5_2v), on
        ),
    )
    f3 = _maybe_dealias(
        SpectralField.from_values(
            g,
            -(u1v * tx.values + u2v * ty.values)
            - tv * div_uv
            - i_a * lap_t.values
            + w / (1.0 + av),
        ),
        on,
    )
    f5 = (
        _maybe_dealias(SpectralField.from_values(g, f5_1v), on),
        _maybe_dealias(SpectralField.from_values(g, f5_2v), on),
    )
    return f1, f2, f3, f4, f5


def rhs_reformulated(
    state: ReformulatedState,
    params: Params | None = None,
    dealias_products: bool = True,
    linear_only: bool = False,
) -> tuple[SpectralField, Vector, SpectralField]:
    """Tendencies of (phi, u, theta): exact linear part plus F1, F2, F3."""
    params = params or Params()
    params.require_normalized("the reformulated system")
    g = state.grid
    div_u = divergence(*state.u)
    px, py = gradient(state.phi)
    tx, ty = gradient(state.theta)
    dphi_lin = -2.0 * div_u
    du_lin = (laplacian(state.u[0]) - px - tx, laplacian(state.u[1]) - py - ty)
    dtheta_lin = laplacian(state.theta) - div_u
    if linear_only:
        return dphi_lin, du_lin, dtheta_lin

    state.check_vacuum()
    f1, f2, f3, _, _ = nonlinear_F(
        state.phi, state.u, state.theta, state.a, dealias_products
    )
    return (
        dphi_lin + f1,
        (du_lin[0] + f2[0], du_lin[1] + f2[1]),
        dtheta_lin + f3,
    )


def transport_rhs(
    f: SpectralField, u: Vector, dealias_products: bool = True
) -> SpectralField:
    """Tendency -u.grad(f) - (1 + f) div u shared by the a and b equations."""
    g = f.grid
    fx, fy = gradient(f)
    div_u = divergence(*u)
    nl = SpectralField.from_values(
        g,
        -(u[0].values * fx.values + u[1].values * fy.values) - f.values * div_u.values,
    )
    return -1.0 * div_u + _maybe_dealias(nl, dealias_products)


def chain_rule_residual(state: MhdState, params: Params | None = None) -> float:
    """Max pointwise gap between the two evaluations of d/dt phi.

    One side differentiates phi = a (theta + 1) + (b + 1)^2 / 2 - 1/2 along
    the primitive tendencies; the other evaluates the combined-variable
    equation -2 div u + F1 directly.  Both sides are computed without
    dealiasing, where the identity is exact pointwise algebra.
    """
    params = params or Params()
    params.require_normalized("the chain-rule consistency check")
    da, _, dtheta, db = rhs_primitive(state, params, dealias_products=False)
    av, tv, bv = state.a.values, state.theta.values, state.b.values
    chain = (tv + 1.0) * da.values + av * dtheta.values + (bv + 1.0) * db.values

    phi = compute_phi(state.a, state.theta, state.b)
    ref = ReformulatedState(state.grid, phi, state.u, state.theta, state.a, state.b, state.time)
    dphi, _, _ = rhs_reformulated(ref, params, dealias_products=False)
    return float(np.max(np.abs(chain - dphi.values)))


def mass_integrals(state: MhdState | ReformulatedState) -> tuple[float, float]:
    """Box means of the conserved deviations a and b."""
    return state.a.zero_mode, state.b.zero_mode


def total_energy(state: MhdState | ReformulatedState, params: Params | None = None) -> float:
    """Box mean of kinetic + internal + magnetic energy density.

    Exactly conserved by the primitive system on the torus (viscous heating
    returns kinetic losses to the internal energy and every flux integrates
    to zero).
    """
    params = params or Params()
    av = state.a.values
    tv = state.theta.values
    bv = state.b.values
    u1v, u2v = state.u[0].values, state.u[1].values
    dens = (
        0.5 * (1.0 + av) * (u1v**2 + u2v**2)
        + params.c_v * (1.0 + av) * (1.0 + tv)
        + 0.5 * (1.0 + bv) ** 2
    )
    return float(np.mean(dens))


def energy_rate(
    state: MhdState, params: Params | None = None, dealias_products: bool = False
) -> float:
    """Discrete d/dt of total_energy assembled from the primitive tendencies.

    Analytically zero; with dealiasing off and band-limited data the
    pointwise rational cancellations make it zero to rounding.
    """
    params = params or Params()
    da, du, dtheta, db = rhs_primitive(state, params, dealias_products)
    av, tv, bv = state.a.values, state.theta.values, state.b.values
    u1v, u2v = state.u[0].values, state.u[1].values
    rate = (
        0.5 * (u1v**2 + u2v**2) * da.values
        + (1.0 + av) * (u1v * du[0].values + u2v * du[1].values)
        + params.c_v * (1.0 + tv) * da.values
        + params.c_v * (1.0 + av) * dtheta.values
        + (1.0 + bv) * db.values
    )
    return float(np.mean(rate))
