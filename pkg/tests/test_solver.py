import numpy as np
import pytest

from mhd25.diagnostics import DiagnosticsRecorder
from mhd25.grid import SpectralField
from mhd25.initial import InitialSpec, generate_initial
from mhd25.solver import (
    SolverConfig,
    SolverConfigError,
    conservation_report,
    simulate,
    step,
)
from mhd25.symbol import semigroup_evolve
from mhd25.system import MhdState, ReformulatedState


def single_mode_reformulated(grid, i, j, amps):
    cs = []
    n = grid.n
    for amp in amps:
        c = np.zeros((n, n), complex)
        c[i, j] = amp
        c[-i, -j] = np.conj(amp)
        cs.append(SpectralField.from_coefficients(grid, c))
    z = SpectralField.zeros(grid)
    return ReformulatedState(grid, cs[0], (cs[1], cs[2]), cs[3], z, z)


class TestSolverConfig:
    def test_validation(self):
        with pytest.raises(SolverConfigError):
            SolverConfig(dt=0.0, t_end=1.0)
        with pytest.raises(SolverConfigError):
            SolverConfig(dt=0.1, t_end=1.0, formulation="spectral")
        with pytest.raises(SolverConfigError):
            SolverConfig(dt=0.1, t_end=1.0, snapshot_stride=0)
        with pytest.raises(SolverConfigError):
            SolverConfig(dt=0.1, t_end=1.0, diag_stride=-1)
        with pytest.raises(SolverConfigError):
            SolverConfig(dt=0.3, t_end=1.0).n_steps()

    def test_cfl_guard_for_primitive(self, grid128):
        # k_max = 64 caps the primitive step at 0.5 / 4096
        cfg = SolverConfig(dt=1e-3, t_end=1.0, formulation="primitive")
        with pytest.raises(SolverConfigError):
            cfg.validate_for_grid(grid128)
        SolverConfig(dt=1e-4, t_end=1.0, formulation="primitive").validate_for_grid(grid128)
        # the combined-variable propagator is exact; no guard applies
        SolverConfig(dt=1e-3, t_end=1.0, formulation="reformulated").validate_for_grid(grid128)


class TestLinearFidelity:
    def test_equilibrium_stays_put(self, grid32):
        st0 = MhdState.equilibrium(grid32)
        cfg = SolverConfig(dt=0.1, t_end=1.0, formulation="reformulated", snapshot_stride=10)
        traj = simulate(st0, cfg)
        final = traj.final
        for f in (final.phi, final.u[0], final.u[1], final.theta):
            assert f.l2() == 0.0
        assert traj.termination == "completed"

    def test_one_step_matches_semigroup(self, grid32):
        rng = np.random.default_rng(0)
        amps = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        ref = single_mode_reformulated(grid32, 2, 1, amps)
        dt = 0.01
        cfg = SolverConfig(dt=dt, t_end=1.0, formulation="reformulated", linear_only=True)
        out = step(ref, dt, cfg)
        p_e, u_e, t_e = semigroup_evolve(np.array([2.0, 1.0]), amps[0], amps[1:3], amps[3], dt)
        got = np.array(
            [
                out.phi.coefficients[2, 1],
                out.u[0].coefficients[2, 1],
                out.u[1].coefficients[2, 1],
                out.theta.coefficients[2, 1],
            ]
        )
        expected = np.array([p_e, u_e[0], u_e[1], t_e])
        assert np.max(np.abs(got - expected)) <= 1e-12

    def test_trajectory_matches_semigroup_at_t1(self, grid32):
        # every mode of a random band-limited state, 100 steps to t = 1
        spec = InitialSpec(kind="random_spectrum", amplitude=1.0, seed=5,
                           band=(1.0, 4.0), calibrate_x0=False)
        st0 = generate_initial(spec, grid32, None)
        ref0 = ReformulatedState.from_primitive(st0)
        cfg = SolverConfig(dt=0.01, t_end=1.0, formulation="reformulated",
                           linear_only=True, snapshot_stride=100)
        traj = simulate(st0, cfg)
        final = traj.final

        n = grid32.n
        idx = np.fft.fftfreq(n, d=1.0 / n).astype(int)
        worst = 0.0
        scale = 0.0
        for i in range(n):
            for j in range(n):
                ki, kj = idx[i], idx[j]
                amp = np.array(
                    [
                        ref0.phi.coefficients[i, j],
                        ref0.u[0].coefficients[i, j],
                        ref0.u[1].coefficients[i, j],
                        ref0.theta.coefficients[i, j],
                    ]
                )
                if np.max(np.abs(amp)) == 0.0:
                    continue
                p_e, u_e, t_e = semigroup_evolve(
                    np.array([float(ki), float(kj)]) * grid32.k_min,
                    amp[0], amp[1:3], amp[3], 1.0,
                )
                got = np.array(
                    [
                        final.phi.coefficients[i, j],
                        final.u[0].coefficients[i, j],
                        final.u[1].coefficients[i, j],
                        final.theta.coefficients[i, j],
                    ]
                )
                expected = np.array([p_e, u_e[0], u_e[1], t_e])
                worst = max(worst, float(np.max(np.abs(got - expected))))
                scale = max(scale, float(np.max(np.abs(expected))))
        assert worst <= 1e-10 * scale


class TestNyquistLine:
    def test_nyquist_line_mode_evolves_consistently(self, grid32):
        # on the x-Nyquist line the derivative multipliers drop the x
        # component, so the coupling acts through |k_d|^2 = k_min^2 while the
        # heat entries keep the full |k|^2; oracle: dense expm of that block
        import scipy.linalg

        n = grid32.n
        c_phi = np.zeros((n, n), complex)
        c_u2 = np.zeros((n, n), complex)
        c_th = np.zeros((n, n), complex)
        c_phi[16, 1] = 0.3 + 0.2j
        c_u2[16, 1] = 0.1 - 0.4j
        c_th[16, 1] = -0.2 + 0.1j
        for c in (c_phi, c_u2, c_th):
            c[16, -1] = np.conj(c[16, 1])
        fc = SpectralField.from_coefficients
        z = SpectralField.zeros(grid32)
        ref = ReformulatedState(
            grid32, fc(grid32, c_phi), (z, fc(grid32, c_u2)), fc(grid32, c_th), z, z
        )
        dt = 1e-3
        cfg = SolverConfig(dt=dt, t_end=0.01, formulation="reformulated", linear_only=True)
        state = ref
        for _ in range(10):
            state = step(state, dt, cfg)

        k2 = 16.0**2 + 1.0
        m = np.array([[0.0, -2.0, 0.0], [1.0, -k2, 1.0], [0.0, -1.0, -k2]])
        amp = np.array([0.3 + 0.2j, 1j * (0.1 - 0.4j), -0.2 + 0.1j])
        out = scipy.linalg.expm(m * 10 * dt) @ amp
        assert abs(state.phi.coefficients[16, 1] - out[0]) <= 1e-13
        assert abs(state.theta.coefficients[16, 1] - out[2]) <= 1e-13
        assert abs(state.u[1].coefficients[16, 1] - (-1j * out[1])) <= 1e-13
        assert abs(state.u[0].coefficients[16, 1]) <= 1e-15
        assert np.max(np.abs(state.phi.values - state.phi.values.real)) == 0.0


class TestOrder:
    def test_second_order_self_convergence(self, grid32, blocks32):
        spec = InitialSpec(kind="random_spectrum", amplitude=0.05, seed=4, band=(1.0, 2.0))
        st0 = generate_initial(spec, grid32, blocks32)

        def final_state(dt):
            cfg = SolverConfig(dt=dt, t_end=1.0, formulation="reformulated",
                               snapshot_stride=10**9)
            return simulate(st0, cfg).final

        states = [final_state(dt) for dt in (1e-2, 5e-3, 2.5e-3, 1.25e-3)]

        def dist(a, b):
            return max(
                (a.phi - b.phi).l2(),
                (a.u[0] - b.u[0]).l2(),
                (a.u[1] - b.u[1]).l2(),
                (a.theta - b.theta).l2(),
            )

        errs = [dist(states[k], states[k + 1]) for k in range(3)]
        slopes = [np.log2(errs[k] / errs[k + 1]) for k in range(2)]
        for s in slopes:
            assert s == pytest.approx(2.0, abs=0.1)


class TestDeterminism:
    def test_bit_identical_reruns(self, grid32, blocks32):
        spec = InitialSpec(kind="random_spectrum", amplitude=1e-2, seed=9, band=(1.0, 3.0))
        cfg = SolverConfig(dt=0.01, t_end=0.5, formulation="reformulated", snapshot_stride=50)

        def run():
            st0 = generate_initial(spec, grid32, blocks32)
            return simulate(st0, cfg).final

        a, b = run(), run()
        for fa, fb in (
            (a.phi, b.phi), (a.u[0], b.u[0]), (a.u[1], b.u[1]),
            (a.theta, b.theta), (a.a, b.a), (a.b, b.b),
        ):
            assert np.array_equal(fa.coefficients, fb.coefficients)


class TestGuards:
    def test_vacuum_abort(self, grid32):
        z = SpectralField.zeros(grid32)
        st0 = MhdState(grid32, SpectralField.constant(grid32, -0.95), (z, z), z, z)
        cfg = SolverConfig(dt=0.001, t_end=0.01, formulation="primitive")
        traj = simulate(st0, cfg)
        assert traj.termination == "vacuum_abort"

    def test_nan_abort(self, grid32):
        z = SpectralField.zeros(grid32)
        bad = np.zeros((32, 32))
        bad[3, 3] = np.nan
        st0 = MhdState(grid32, SpectralField.from_values(grid32, bad), (z, z), z, z)
        cfg = SolverConfig(
            dt=0.01, t_end=0.1, formulation="reformulated", linear_only=True
        )
        traj = simulate(st0, cfg)
        assert traj.termination == "nan_abort"

    def test_smallness_halt(self, grid32):
        x, _ = grid32.meshgrid()
        a = SpectralField.from_values(grid32, 0.7 * np.cos(x))
        z = SpectralField.zeros(grid32)
        st0 = MhdState(grid32, a, (z, z), z, z)
        cfg = SolverConfig(dt=0.001, t_end=0.01, formulation="primitive",
                           halt_on_smallness=True)
        traj = simulate(st0, cfg)
        assert traj.termination == "smallness_violation"
        # monitor-only mode records but completes
        cfg2 = SolverConfig(dt=0.001, t_end=0.01, formulation="primitive")
        traj2 = simulate(st0, cfg2)
        assert traj2.termination == "completed"
        assert traj2.smallness_violated
        assert traj2.sup_abs_a > 0.5


class TestDualFormulation:
    def test_short_consistency_run(self, grid32, blocks32):
        spec = InitialSpec(kind="random_spectrum", amplitude=1e-3, seed=3, band=(1.0, 2.0))
        st0 = generate_initial(spec, grid32, blocks32)
        cfg = SolverConfig(dt=1e-3, t_end=0.5, formulation="both",
                           snapshot_stride=100, diag_stride=100)
        rec = DiagnosticsRecorder(blocks32, 1.0, (0.0,))
        traj = simulate(st0, cfg, recorder=rec)
        assert traj.termination == "completed"
        assert traj.companion is not None
        assert traj.max_phi_error() <= 1e-7

    def test_conservation_report(self, grid32, blocks32):
        spec = InitialSpec(kind="random_spectrum", amplitude=1e-3, seed=13, band=(1.0, 2.0))
        st0 = generate_initial(spec, grid32, blocks32)
        cfg = SolverConfig(dt=1e-3, t_end=0.2, formulation="primitive",
                           snapshot_stride=200, diag_stride=20, dealias=False)
        rec = DiagnosticsRecorder(blocks32, 1.0, (0.0,))
        traj = simulate(st0, cfg, recorder=rec)
        rep = conservation_report(traj)
        assert rep.mass_a_drift <= 1e-10 * max(rep.t_span, 1.0)
        assert rep.mass_b_drift <= 1e-10 * max(rep.t_span, 1.0)
        assert rep.energy_rel_drift <= 1e-6

    def test_report_needs_diagnostics(self, grid32):
        st0 = MhdState.equilibrium(grid32)
        cfg = SolverConfig(dt=0.01, t_end=0.05, formulation="reformulated")
        traj = simulate(st0, cfg)
        with pytest.raises(ValueError):
            conservation_report(traj)
