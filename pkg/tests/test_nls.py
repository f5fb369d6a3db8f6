import math

import numpy as np
import pytest

from nlslab.bubbles import bump_values, make_mollifier
from nlslab.errors import DomainError
from nlslab.nls import (
    NLSRun,
    default_dt,
    energy,
    evolve,
    madelung,
    mass,
    spectral_tail_fraction,
    start_run,
    strang_step,
)
from nlslab.spectral import Field, Grid, convolve, l2_norm, spectral_derivative


def bubble_datum(grid, r1=1.5, amp=math.e):
    raw = Field(grid, bump_values(grid, grid.length / 2.0, r1, amp))
    sm = convolve(raw, make_mollifier(grid, r1 / 10.0))
    return Field(grid, sm.values.astype(complex))


@pytest.fixture
def run256():
    g = Grid(1, 256, 2 * np.pi)
    return start_run(bubble_datum(g), epsilon=0.1, m=3)


class TestStrangStep:
    def test_plane_wave_linear_flow_exact(self):
        g = Grid(1, 256, 2 * np.pi)
        x = g.axis_coords()
        K = 5.0
        run = start_run(Field(g, np.exp(1j * K * x)), epsilon=0.1, m=3,
                        dt=1e-3, linear_only=True)
        for _ in range(100):
            strang_step(run)
        expected = np.exp(1j * (K * x - 0.5 * 0.1 * K ** 2 * run.t))
        assert np.abs(run.u - expected).max() < 1e-12

    def test_gauge_flow_preserves_modulus(self, run256):
        before = np.abs(run256.u).copy()
        from nlslab.nls import _gauge_kick
        _gauge_kick(run256, 0.3)
        assert np.abs(np.abs(run256.u) - before).max() < 1e-14

    def test_free_flow_preserves_spectral_modulus(self):
        g = Grid(1, 256, 2 * np.pi)
        rng = np.random.default_rng(0)
        u0 = rng.standard_normal(256) + 1j * rng.standard_normal(256)
        run = start_run(Field(g, u0), epsilon=0.1, m=3, dt=1e-3, linear_only=True)
        before = np.abs(np.fft.fft(run.u))
        strang_step(run)
        after = np.abs(np.fft.fft(run.u))
        assert np.abs(after - before).max() < 1e-10 * before.max()

    def test_invalid_dt(self, run256):
        with pytest.raises(DomainError):
            strang_step(run256, dt=-1.0)

    def test_strang_second_order(self):
        # self-convergence against a dt/8 reference: error ratio 4 +- 12%
        g = Grid(1, 512, 2 * np.pi)
        eps, t_end = 0.1, 0.05
        sols = {}
        for div in (1, 2, 8):
            run = start_run(bubble_datum(g), eps, 3, dt=t_end / (40 * div))
            evolve(run, t_end)
            sols[div] = run.u.copy()
        e1 = np.linalg.norm(sols[1] - sols[8])
        e2 = np.linalg.norm(sols[2] - sols[8])
        assert e1 / e2 == pytest.approx(4.0, rel=0.12)


class TestEvolve:
    def test_noop_at_current_time(self, run256):
        u_before = run256.u.copy()
        evolve(run256, run256.t)
        assert np.array_equal(run256.u, u_before)

    def test_backwards_target_rejected(self, run256):
        run256.t = 1.0
        with pytest.raises(DomainError):
            evolve(run256, 0.5)

    def test_mass_conservation_1000_steps(self, run256):
        m0 = mass(run256)
        for _ in range(1000):
            strang_step(run256)
        assert abs(mass(run256) - m0) <= 1e-10 * m0

    def test_energy_drift_small(self):
        g = Grid(1, 512, 2 * np.pi)
        run = start_run(bubble_datum(g), 0.1, 3)
        e0 = energy(run)
        evolve(run, 0.05)
        assert abs(energy(run) - e0) / e0 <= 1e-4

    def test_time_reversal(self):
        g = Grid(1, 512, 2 * np.pi)
        run = start_run(bubble_datum(g), 0.1, 3)
        u0 = run.u.copy()
        evolve(run, 0.05)
        back = NLSRun(grid=g, epsilon=0.1, m=3, u=np.conj(run.u), dt=run.dt)
        evolve(back, back.t + 0.05)
        assert np.abs(np.conj(back.u) - u0).max() < 1e-6

    def test_gauge_invariance(self):
        g = Grid(1, 256, 2 * np.pi)
        theta = 0.7
        r1 = start_run(bubble_datum(g), 0.1, 3)
        r2 = start_run(Field(g, bubble_datum(g).values * np.exp(1j * theta)), 0.1, 3)
        evolve(r1, 0.02)
        evolve(r2, 0.02)
        assert np.abs(r2.u - np.exp(1j * theta) * r1.u).max() < 1e-12

    def test_observer_called(self, run256):
        seen = []
        evolve(run256, 100 * run256.dt, observer=lambda r: seen.append(r.t),
               observe_every=10)
        assert len(seen) >= 10

    def test_observer_energy_reports(self):
        from nlslab.diagnostics import EnergyReport, plateau_cutoff, report_collector

        g = Grid(1, 256, 2 * np.pi)
        run = start_run(bubble_datum(g), 0.1, 3)
        V = [Field(g, np.zeros(g.shape))]
        rho = Field(g, np.abs(run.u) ** 2)
        chi = plateau_cutoff(g, np.pi, 2.0, 2.8)
        obs, reports = report_collector(V, rho, chi, sigmas=(0.5,))
        evolve(run, 40 * run.dt, observer=obs, observe_every=10)
        assert len(reports) >= 4
        assert all(isinstance(r, EnergyReport) for r in reports)
        assert reports[0].t < reports[-1].t

    def test_nan_aborts(self):
        g = Grid(1, 256, 2 * np.pi)
        with np.errstate(over="ignore", invalid="ignore"):
            huge = Field(g, 1e80 * np.ones(g.shape, dtype=complex))
            run = start_run(huge, 0.1, 3, dt=1e-3)
            with pytest.raises(FloatingPointError):
                for _ in range(5):
                    strang_step(run)

    def test_under_resolved_warns(self):
        g = Grid(1, 64, 2 * np.pi)
        rng = np.random.default_rng(5)
        rough = Field(g, (rng.standard_normal(g.shape)
                          + 1j * rng.standard_normal(g.shape)))
        run = start_run(rough, 0.1, 3)
        with pytest.warns(RuntimeWarning, match="under-resolved"):
            evolve(run, 120 * run.dt)

    def test_regularized_nonlinearity_variant(self):
        g = Grid(1, 256, 2 * np.pi)
        run = start_run(bubble_datum(g), 0.1, 3, delta_n=0.1)
        m0 = mass(run)
        evolve(run, 20 * run.dt)
        assert abs(mass(run) - m0) <= 1e-10 * m0

    def test_default_dt_rule(self):
        g = Grid(1, 256, 2 * np.pi)
        eps = 0.05
        assert default_dt(g, eps) == pytest.approx(
            min(10.0 * eps * g.dx ** 2, 1e-3 * eps)
        )

    def test_tail_fraction_resolved_field(self, run256):
        assert spectral_tail_fraction(run256) < 1e-8


class TestMadelung:
    def test_real_field_zero_current(self, run256):
        rho, J = madelung(run256)
        assert np.abs(J[0].values).max() < 1e-12
        assert np.all(rho.values >= 0.0)

    def test_wkb_current(self):
        # u = a exp(i phi / eps): J = rho grad(phi)
        g = Grid(1, 1024, 2 * np.pi)
        eps = 0.2
        x = g.axis_coords()
        a = bump_values(g, np.pi, 2.0, 1.0) + 0.2
        phi = 0.3 * np.sin(x)
        run = start_run(Field(g, a * np.exp(1j * phi / eps)), eps, 3)
        rho, J = madelung(run)
        grad_phi = spectral_derivative(Field(g, phi), 0).values
        expected = rho.values * grad_phi
        assert np.abs(J[0].values - expected).max() < 1e-8

    def test_density_integrates_to_mass(self, run256):
        rho, _ = madelung(run256)
        total = float(rho.values.sum()) * run256.grid.cell_volume
        assert total == pytest.approx(mass(run256), rel=1e-12)
