import math

import numpy as np
import pytest

from phasedrop import (
    ModelParams,
    Variant,
    forced_circle_trajectory,
    mcf_radius,
    propulsion_sign,
    radial_coupled_solve,
    steady_radial_concentration,
)


class TestMcfRadius:
    def test_analytic_value(self):
        assert mcf_radius(0.3, 0.02, 2) == pytest.approx(math.sqrt(0.05))

    def test_t_zero(self):
        assert mcf_radius(0.3, 0.0, 2) == 0.3

    def test_three_dimensional_rate(self):
        assert mcf_radius(0.3, 0.01, 3) == pytest.approx(math.sqrt(0.09 - 0.04))

    def test_extinction_rejected(self):
        with pytest.raises(ValueError, match="extinction"):
            mcf_radius(0.3, 0.045, 2)
        with pytest.raises(ValueError):
            mcf_radius(0.3, 0.1, 2)

    def test_matches_rk4(self):
        # independent cross-check of the closed form
        traj = forced_circle_trajectory(0.3, 0.0, 0.0, n=2, dt=1e-4, t_end=0.02)
        assert traj.radii[-1] == pytest.approx(mcf_radius(0.3, 0.02, 2), abs=1e-8)


class TestForcedCircle:
    def test_reduces_to_mcf(self):
        traj = forced_circle_trajectory(0.3, 0.0, 0.0, dt=2e-4, t_end=0.02)
        for t, r in zip(traj.times[::20], traj.radii[::20]):
            assert r == pytest.approx(mcf_radius(0.3, t, 2) if t < 0.045 else r,
                                      abs=1e-8)

    def test_rk4_order(self):
        # fixed-step global error drops ~16x per halving
        from phasedrop.oracle import _rk4_circle

        exact = mcf_radius(0.3, 0.02, 2)
        e = []
        for dt in (2e-3, 1e-3):
            _, radii, _ = _rk4_circle(0.3, 0.0, 0.0, 2, dt, 0.02, 1e-6)
            e.append(abs(radii[-1] - exact))
        ratio = e[0] / e[1]
        assert 12 <= ratio <= 20

    def test_unstable_fixed_point(self):
        # gamma_hat = 2 sqrt(2): balance radius R* = (n-1)/(sqrt(2) gamma) = 1/4.
        # dR/dt = -1/R + 4 is increasing in R, so R* repels: departures grow
        # away from 0.25 on both sides.
        g = 2 * math.sqrt(2)
        up = forced_circle_trajectory(0.26, g, 0.0, dt=1e-4, t_end=0.05)
        down = forced_circle_trajectory(0.24, g, 0.0, dt=1e-4, t_end=0.05)
        assert up.radii[-1] > 0.26
        assert down.radii[-1] < 0.24
        # starting exactly at the balance radius, nothing moves
        still = forced_circle_trajectory(0.25, g, 0.0, dt=1e-4, t_end=0.05)
        assert np.allclose(still.radii, 0.25, atol=1e-12)

    def test_volume_locking_at_large_alpha(self):
        traj = forced_circle_trajectory(
            0.3, 1.0, 1e4, dt=1e-5, t_end=0.02, richardson_tol=1e-10
        )
        assert abs(traj.radii[-1] - 0.3) <= 10.0 / 1e4

    def test_alpha_locking_tightens(self):
        drifts = []
        for alpha in (1e3, 4e3, 1.6e4):
            traj = forced_circle_trajectory(0.3, 0.0, alpha, dt=1e-5, t_end=0.01)
            drifts.append(abs(traj.radii[-1] - 0.3))
        assert drifts[0] > drifts[1] > drifts[2]

    def test_extinction_marker(self):
        traj = forced_circle_trajectory(0.1, 0.0, 0.0, dt=1e-5, t_end=0.02)
        assert traj.extinct
        assert traj.times[-1] < 0.02
        assert traj.radii[-1] <= 1e-3 + 1e-12

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            forced_circle_trajectory(-0.1, 0.0, 0.0)
        with pytest.raises(ValueError):
            forced_circle_trajectory(0.3, 0.0, 0.0, n=4)
        with pytest.raises(ValueError):
            forced_circle_trajectory(0.3, 0.0, 0.0, dt=-1e-4)


def coupled_params(**kw):
    kw.setdefault("epsilon", 0.01)
    kw.setdefault("alpha", 0.0)
    kw.setdefault("k", 1.0)
    kw.setdefault("gamma0", 0.1)
    kw.setdefault("u1", 1.0)
    kw.setdefault("m", 2)
    return ModelParams(**kw)


class TestRadialCoupled:
    def test_const_gamma_matches_forced(self):
        p = coupled_params(
            variant=Variant.CONST_GAMMA, gamma_const=1.5, alpha=100.0
        )
        traj = radial_coupled_solve(
            0.25, 0.5, p, r_max=0.8, dr=0.004, dt=5e-5, t_end=0.01
        )
        ref = forced_circle_trajectory(
            0.25, 1.5, 100.0, dt=5e-5, t_end=0.01, richardson_tol=1e-10
        )
        assert traj.radii[-1] == pytest.approx(ref.radii[-1], abs=1e-6)

    def test_steady_state_matches_direct_solve(self):
        # frozen interface (the infinite-penalty limit): long-time u equals
        # the direct linear solve of (k - Lap) u = chi
        p = coupled_params(alpha=1e6, k=1.0)
        traj = radial_coupled_solve(
            0.25, 1.0 / p.k, p, r_max=1.0, dr=0.004, dt=4e-4, t_end=16.0,
            freeze_radius=True,
        )
        assert traj.radii[-1] == 0.25
        r, u_direct = steady_radial_concentration(0.25, p, r_max=1.0, dr=0.004)
        rel = np.max(np.abs(traj.u_final - u_direct)) / np.max(np.abs(u_direct))
        assert rel <= 1e-4

    def test_stiff_penalty_dt_guard(self):
        p = coupled_params(alpha=1e6)
        with pytest.raises(ValueError, match="stiffness"):
            radial_coupled_solve(
                0.25, 0.5, p, r_max=1.0, dr=0.004, dt=2e-4, t_end=0.1,
            )

    def test_fast_relaxation_limit(self):
        # k large: u ~= phi / k pointwise away from the interface layer
        p = coupled_params(k=1e3, alpha=1e6)
        traj = radial_coupled_solve(
            0.25, lambda r: np.where(r < 0.25, 1.0, 0.0) / p.k, p,
            r_max=0.8, dr=0.004, dt=1e-6, t_end=0.01,
        )
        r = traj.r_grid
        chi = np.where(r < 0.25, 1.0, 0.0)
        inner = np.abs(r - 0.25) > 7.5 * math.sqrt(1 / p.k)
        err = np.abs(traj.u_final - chi / p.k)[inner]
        assert np.max(err) <= 2.0 / p.k ** 2

    def test_positivity_preserved(self):
        p = coupled_params(alpha=0.0, k=2.0)
        traj = radial_coupled_solve(
            0.25, 1e-6, p, r_max=0.8, dr=0.004, dt=1e-4, t_end=0.005,
        )
        assert np.all(traj.u_final > 0.0)
        assert np.all(traj.u_at_interface > 0.0)

    def test_interface_sample_interpolated(self):
        p = coupled_params(alpha=1e5)
        traj = radial_coupled_solve(
            0.25, 0.5, p, r_max=0.8, dr=0.004, dt=5e-5, t_end=0.002,
        )
        assert traj.u_at_interface[0] == pytest.approx(0.5, abs=1e-12)
        r = traj.r_grid
        u = traj.u_final
        # droplet feeds the inside, decay drains the far field; the
        # interface sample sits between the two
        inside = float(u[np.argmin(np.abs(r - 0.1))])
        outside = float(u[np.argmin(np.abs(r - 0.7))])
        assert inside > 0.5 > outside
        assert outside < traj.u_at_interface[-1] < inside

    def test_window_guard(self):
        p = coupled_params(variant=Variant.CONST_GAMMA, gamma_const=30.0)
        from phasedrop.errors import NumericalFailure

        with pytest.raises(NumericalFailure, match="validity window"):
            radial_coupled_solve(
                0.25, 0.5, p, r_max=0.8, dr=0.004, dt=1e-4, t_end=0.05,
            )

    def test_resolution_guards(self):
        p = coupled_params()
        with pytest.raises(ValueError, match="r_max"):
            radial_coupled_solve(0.25, 0.5, p, r_max=0.5, dr=0.004, dt=1e-4,
                                 t_end=0.01)
        with pytest.raises(ValueError, match="dr"):
            radial_coupled_solve(0.25, 0.5, p, r_max=0.8, dr=0.01, dt=1e-4,
                                 t_end=0.01)

    def test_extinction(self):
        p = coupled_params(variant=Variant.CONST_GAMMA, gamma_const=0.0)
        traj = radial_coupled_solve(
            0.1, 0.5, p, r_max=0.8, dr=0.002, dt=2e-5, t_end=0.02,
        )
        assert traj.extinct
        assert traj.times[-1] <= 0.006  # analytic extinction at 0.005


class TestPropulsionSign:
    def test_drifts_toward_lower_concentration(self):
        p = coupled_params(u1=0.5, m=4)
        assert propulsion_sign(0.2, 0.8, p) == +1
        assert propulsion_sign(0.8, 0.2, p) == -1

    def test_tie(self):
        p = coupled_params()
        assert propulsion_sign(0.5, 0.5, p) == 0
