"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  The long nonlinear run uses the sanctioned n = 256 fallback box
(tolerance 0.2 on the fitted exponent); everything else runs at its stated
scale.
"""

import time

import numpy as np
import pytest

from mhd25.diagnostics import (
    DiagnosticsRecorder,
    fit_decay,
    lyapunov_monitor,
)
from mhd25.dyadic import DyadicBlocks
from mhd25.grid import Grid, SpectralField
from mhd25.initial import InitialSpec, generate_initial
from mhd25.lpsuite import random_band_field, run_lp_suite
from mhd25.solver import SolverConfig, conservation_report, simulate
from mhd25.symbol import decay_envelope, eigenvalues, semigroup_evolve, sweep
from mhd25.system import MhdState, ReformulatedState, chain_rule_residual
from mhd25.config import load_preset


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")


@pytest.fixture(scope="session")
def big_grid():
    return Grid(512, 128 * np.pi)


@pytest.fixture(scope="session")
def big_blocks(big_grid):
    return DyadicBlocks(big_grid)


@pytest.fixture(scope="session")
def nonlinear_run():
    """Shared nonlinear decay run (criteria 3 and 5 support)."""
    cfg = load_preset("nonlinear_eps1e-3")
    blocks = DyadicBlocks(cfg.grid)
    state0 = generate_initial(cfg.initial, cfg.grid, blocks)
    recorder = DiagnosticsRecorder(blocks, cfg.sigma, cfg.gamma_list)
    start = time.monotonic()
    traj = simulate(state0, cfg.solver, recorder=recorder)
    elapsed = time.monotonic() - start
    return {"traj": traj, "series": recorder.series, "elapsed": elapsed, "cfg": cfg}


@pytest.fixture(scope="session")
def smallness_run():
    """Primitive-formulation run to T = 50 at the calibrated smallness level."""
    cfg = load_preset("smallness")
    blocks = DyadicBlocks(cfg.grid)
    state0 = generate_initial(cfg.initial, cfg.grid, blocks)
    recorder = DiagnosticsRecorder(blocks, cfg.sigma, cfg.gamma_list)
    traj = simulate(state0, cfg.solver, recorder=recorder)
    return {"traj": traj, "series": recorder.series, "cfg": cfg}


@pytest.fixture(scope="session")
def consistency_run():
    cfg = load_preset("consistency")
    blocks = DyadicBlocks(cfg.grid)
    state0 = generate_initial(cfg.initial, cfg.grid, blocks)
    recorder = DiagnosticsRecorder(blocks, cfg.sigma, cfg.gamma_list)
    traj = simulate(state0, cfg.solver, recorder=recorder)
    return {"traj": traj, "cfg": cfg, "blocks": blocks}


def test_criterion_1_symbol_dichotomy():
    start = time.monotonic()
    r_values = np.logspace(-3, 3, 200)
    rows = sweep(r_values)
    ok_abscissa = bool(np.all(rows[:, 7] < 0.0))

    ok_damped = True
    ok_parabolic = True
    for r in r_values[r_values >= 10.0]:
        spec = eigenvalues(float(r))
        if r >= 30.0 and abs(spec.damped_branch - (-2.0 - 2.0 / r**2)) > 1e-3:
            ok_damped = False
        others = [l for l in spec.eigenvalues if abs(l - spec.damped_branch) > 1e-9]
        if any(l.real > -0.4 * r**2 for l in others):
            ok_parabolic = False

    ok_low = True
    for r in r_values[r_values <= 0.05]:
        for lam in eigenvalues(float(r)).eigenvalues:
            if abs(lam.real + (2.0 / 3.0) * r**2) > 0.1 * r**2:
                ok_low = False
    elapsed = time.monotonic() - start
    ok = ok_abscissa and ok_damped and ok_parabolic and ok_low and elapsed < 5.0
    _report(
        1, ok,
        f"symbol dichotomy over 200 radii (abscissa<0: {ok_abscissa}, "
        f"damped: {ok_damped}, parabolic: {ok_parabolic}, low-freq: {ok_low}, "
        f"{elapsed:.2f}s < 5s)",
    )
    assert ok


def test_criterion_2_linear_heat_optimal_decay(big_grid, big_blocks):
    start = time.monotonic()
    t_grid = np.unique(np.concatenate([[0.0], np.geomspace(1.0, 200.0, 60)]))
    env0 = decay_envelope(
        big_grid, big_blocks, sigma=1.0, gamma=0.0, t_grid=t_grid,
        branch="full", fit_window=(10.0, 200.0),
    )
    envm = decay_envelope(
        big_grid, big_blocks, sigma=1.0, gamma=-0.5, t_grid=t_grid,
        branch="full", fit_window=(10.0, 200.0),
    )
    elapsed = time.monotonic() - start
    ok0 = abs(env0.fit.exponent - (-0.5)) <= 0.05
    okm = abs(envm.fit.exponent - (-0.25)) <= 0.05
    ok = ok0 and okm and elapsed < 120.0
    _report(
        2, ok,
        f"linear decay exponents gamma=0: {env0.fit.exponent:+.4f} (target -0.50 +/- 0.05), "
        f"gamma=-0.5: {envm.fit.exponent:+.4f} (target -0.25 +/- 0.05), {elapsed:.1f}s < 120s",
    )
    assert ok


def test_criterion_3_nonlinear_decay(nonlinear_run):
    series = nonlinear_run["series"]
    traj = nonlinear_run["traj"]
    elapsed = nonlinear_run["elapsed"]
    t = np.asarray(series.times)
    fit = fit_decay(t, np.asarray(series.lam[0.0]), (10.0, 180.0))
    monitor = lyapunov_monitor(
        t, np.asarray(series.lyapunov), sigma=1.0, tol=1e-6, t_start=1.0
    )
    ok_exp = abs(fit.exponent - (-0.5)) <= 0.2  # n = 256 fallback tolerance
    ok_lyap = monitor.nonincreasing
    ok_run = traj.termination == "completed" and elapsed < 1800.0
    ok = ok_exp and ok_lyap and ok_run
    _report(
        3, ok,
        f"nonlinear decay exponent {fit.exponent:+.4f} (target -0.5 +/- 0.2, n=256 fallback), "
        f"Lyapunov increments after t=1 at most {monitor.max_increment:.2e} "
        f"(violations: {len(monitor.violations)}), recorded c~ {monitor.c_tilde:.3f}, "
        f"{elapsed:.0f}s < 1800s",
    )
    assert ok


def test_criterion_4_reformulation_consistency(consistency_run):
    traj = consistency_run["traj"]
    cfg = consistency_run["cfg"]
    blocks = consistency_run["blocks"]
    phi_err = traj.max_phi_error()
    ok_phi = traj.termination == "completed" and phi_err <= 1e-6

    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        fields = [random_band_field(cfg.grid, rng, k_hi=cfg.grid.k_max / 4.0)
                  for _ in range(5)]
        scale = 0.2 / max(float(np.max(np.abs(fields[0].values))), 1e-300)
        a, u1, u2, theta, b = (scale * f for f in fields)
        state = MhdState(cfg.grid, a, (u1, u2), theta, b)
        worst = max(worst, chain_rule_residual(state))
    ok_chain = worst <= 1e-9
    ok = ok_phi and ok_chain
    _report(
        4, ok,
        f"dual-formulation sup_t ||phi gap||_L2 = {phi_err:.2e} <= 1e-6; "
        f"chain-rule residual on 100 random states {worst:.2e} <= 1e-9",
    )
    assert ok


def test_criterion_5_smallness_preservation(nonlinear_run, smallness_run):
    sup_primitive = smallness_run["traj"].sup_abs_a
    sup_reform = nonlinear_run["traj"].sup_abs_a
    t_end_p = smallness_run["cfg"].solver.t_end
    ok = (
        smallness_run["traj"].termination == "completed"
        and sup_primitive <= 0.5
        and sup_reform <= 0.5
    )
    _report(
        5, ok,
        f"smallness preserved: sup|a| = {sup_primitive:.3e} (primitive, T={t_end_p:g}) "
        f"and {sup_reform:.3e} (combined-variable, T=200), bound 0.5",
    )
    assert ok


def test_criterion_6_littlewood_paley_suite():
    start = time.monotonic()
    grid = Grid(128, 2 * np.pi)
    results = run_lp_suite(grid, seeds=100, rng_seed=0)
    elapsed = time.monotonic() - start
    failed = [r.name for r in results if not r.passed]
    ok = not failed and elapsed < 60.0
    detail = ", ".join(f"{r.name}={r.observed:.2e}" for r in results[:4])
    _report(
        6, ok,
        f"dyadic property suite (100 seeds) all green in {elapsed:.1f}s < 60s "
        f"({detail}, ...); failed: {failed or 'none'}",
    )
    assert ok


def test_criterion_7_conservation(smallness_run, consistency_run, grid32, blocks32):
    rep_long = conservation_report(smallness_run["traj"])
    t_long = rep_long.t_span
    ok_mass = (
        rep_long.mass_a_drift <= 1e-10 * t_long
        and rep_long.mass_b_drift <= 1e-10 * t_long
    )
    rep_dual = conservation_report(consistency_run["traj"])
    ok_mass &= rep_dual.mass_a_drift <= 1e-10 * max(rep_dual.t_span, 1.0)

    # dedicated dealias-off energy run, T = 1, amplitude 1e-3
    spec = InitialSpec(kind="random_spectrum", amplitude=1e-3, seed=21, band=(1.0, 2.0))
    state0 = generate_initial(spec, grid32, blocks32)
    cfg = SolverConfig(dt=1e-3, t_end=1.0, formulation="primitive", dealias=False,
                       snapshot_stride=1000, diag_stride=100)
    recorder = DiagnosticsRecorder(blocks32, 1.0, (0.0,))
    traj = simulate(state0, cfg, recorder=recorder)
    rep_energy = conservation_report(traj)
    ok_energy = rep_energy.energy_rel_drift <= 1e-6
    ok = ok_mass and ok_energy
    _report(
        7, ok,
        f"mass drifts {rep_long.mass_a_drift:.2e}/{rep_long.mass_b_drift:.2e} "
        f"<= 1e-10*T (T={t_long:g}); dealias-off energy relative drift "
        f"{rep_energy.energy_rel_drift:.2e} <= 1e-6",
    )
    assert ok


def test_criterion_8_solver_order(grid32, blocks32):
    spec = InitialSpec(kind="random_spectrum", amplitude=0.05, seed=4, band=(1.0, 2.0))
    state0 = generate_initial(spec, grid32, blocks32)

    def final_state(dt):
        cfg = SolverConfig(dt=dt, t_end=1.0, formulation="reformulated",
                           snapshot_stride=10**9)
        return simulate(state0, cfg).final

    states = [final_state(dt) for dt in (1e-2, 5e-3, 2.5e-3, 1.25e-3)]

    def dist(a, b):
        return max(
            (a.phi - b.phi).l2(), (a.u[0] - b.u[0]).l2(),
            (a.u[1] - b.u[1]).l2(), (a.theta - b.theta).l2(),
        )

    errs = [dist(states[k], states[k + 1]) for k in range(3)]
    slopes = [float(np.log2(errs[k] / errs[k + 1])) for k in range(2)]
    ok_order = all(abs(s - 2.0) <= 0.1 for s in slopes)

    # linear fidelity: single mode against the exact semigroup at t = 1
    n = grid32.n
    amps = np.array([0.2 + 0.1j, -0.3 + 0.05j, 0.15 - 0.2j, 0.1 + 0.3j])
    cs = []
    for amp in amps:
        c = np.zeros((n, n), complex)
        c[1, 2] = amp
        c[-1, -2] = np.conj(amp)
        cs.append(SpectralField.from_coefficients(grid32, c))
    z = SpectralField.zeros(grid32)
    ref = ReformulatedState(grid32, cs[0], (cs[1], cs[2]), cs[3], z, z)
    cfg = SolverConfig(dt=1e-2, t_end=1.0, formulation="reformulated",
                       linear_only=True, snapshot_stride=100)
    from mhd25.solver import step

    state = ref
    for _ in range(100):
        state = step(state, 1e-2, cfg)
    p_e, u_e, t_e = semigroup_evolve(np.array([1.0, 2.0]), amps[0], amps[1:3], amps[3], 1.0)
    got = np.array([
        state.phi.coefficients[1, 2],
        state.u[0].coefficients[1, 2],
        state.u[1].coefficients[1, 2],
        state.theta.coefficients[1, 2],
    ])
    expected = np.array([p_e, u_e[0], u_e[1], t_e])
    lin_err = float(np.max(np.abs(got - expected)) / np.max(np.abs(expected)))
    ok_lin = lin_err <= 1e-10
    ok = ok_order and ok_lin
    _report(
        8, ok,
        f"self-convergence slopes {slopes[0]:.3f}, {slopes[1]:.3f} (target 2.0 +/- 0.1); "
        f"linear single-mode error at t=1: {lin_err:.2e} <= 1e-10",
    )
    assert ok


def test_criterion_9_localized_lyapunov_equivalence(wide_blocks):
    from mhd25.diagnostics import localized_lyapunov

    rng = np.random.default_rng(31)
    levels = [j for j in wide_blocks.levels if j <= 0]
    lo_seen, hi_seen = np.inf, 0.0
    for trial in range(100):
        phi = random_band_field(wide_blocks.grid, rng)
        u = (random_band_field(wide_blocks.grid, rng),
             random_band_field(wide_blocks.grid, rng))
        theta = random_band_field(wide_blocks.grid, rng)
        for j in levels:
            l2, _ = localized_lyapunov(wide_blocks, phi, u, theta, j, 0.1, "low")
            plain = (
                wide_blocks.block_norm(phi, j) ** 2
                + wide_blocks.block_norm(u, j) ** 2
                + wide_blocks.block_norm(theta, j) ** 2
            )
            if plain <= 1e-24:
                continue
            ratio = l2 / plain
            lo_seen, hi_seen = min(lo_seen, ratio), max(hi_seen, ratio)
    ok = lo_seen >= 0.11 and hi_seen <= 0.9
    _report(
        9, ok,
        f"localized Lyapunov vs plain block energy over levels {levels}: "
        f"ratios in [{lo_seen:.3f}, {hi_seen:.3f}], required within [0.11, 0.9]",
    )
    assert ok
