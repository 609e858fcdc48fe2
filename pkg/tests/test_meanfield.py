"""Moment-closure dynamics for randomly treated epidemics."""

from __future__ import annotations

import numpy as np
import pytest

from sdra.meanfield import (
    LOGNORMAL_GUARD,
    MeanFieldParams,
    MomentState,
    integrate,
    moment_rhs,
    write_trajectory_csv,
)


def make_params(**kw):
    base = dict(beta=0.2, delta=1.0, rho=1.0, budget=5, mean_degree=10.0, n=100)
    base.update(kw)
    return MeanFieldParams(**base)


def reference_rhs(m1, m2, p, closure):
    """Independent transcription of the closed moment equations."""
    bk = p.beta * p.mean_degree
    drain = p.rho * p.budget
    if closure == "deterministic":
        d1 = (bk - p.delta) * m1 - (bk / p.n) * m1 * m1 - drain
        return d1, 2 * m1 * d1
    if closure == "lognormal" and m1 >= LOGNORMAL_GUARD * p.n:
        m3 = (m2 / m1) ** 3
    else:
        m3 = 3 * m2 * m1 - 2 * m1**3
    d1 = (bk - p.delta) * m1 - (bk / p.n) * m2 - drain
    d2 = (
        (bk + p.delta - 2 * drain) * m1
        + (2 * (bk - p.delta) - bk / p.n) * m2
        - 2 * (bk / p.n) * m3
        + drain
    )
    return d1, d2


class TestMomentRhs:
    def test_extinction_is_a_fixed_point_without_treatment(self):
        p = make_params(budget=0)
        for closure in ("normal", "lognormal", "deterministic"):
            d1, d2 = moment_rhs(MomentState(0.0, 0.0, p, closure))
            assert d1 == pytest.approx(0.0)
            assert d2 == pytest.approx(0.0)

    def test_balanced_rates_leave_only_saturation_term(self):
        # beta*k = delta, b = 0: dm1 = -(beta*k/N) m2
        p = make_params(beta=0.1, delta=1.0, rho=0.0, budget=0)
        s = MomentState(30.0, 1000.0, p, "normal")
        d1, _ = moment_rhs(s)
        assert d1 == pytest.approx(-(0.1 * 10.0 / 100.0) * 1000.0)

    def test_matches_independent_transcription(self, rng):
        for closure in ("normal", "lognormal", "deterministic"):
            for _ in range(40):
                p = make_params(
                    beta=float(rng.uniform(0.05, 0.5)),
                    delta=float(rng.uniform(0.1, 2.0)),
                    rho=float(rng.uniform(0.0, 3.0)),
                    budget=int(rng.integers(0, 10)),
                    mean_degree=float(rng.uniform(2.0, 20.0)),
                    n=int(rng.integers(50, 500)),
                )
                m1 = float(rng.uniform(0.5, p.n * 0.8))
                m2 = m1**2 * float(rng.uniform(1.0, 1.5))
                got = moment_rhs(MomentState(m1, m2, p, closure))
                want = reference_rhs(m1, m2, p, closure)
                np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_lognormal_guard_falls_back_near_extinction(self):
        p = make_params(n=100)
        tiny = LOGNORMAL_GUARD * p.n / 2
        lo = moment_rhs(MomentState(tiny, tiny**2, p, "lognormal"))
        no = moment_rhs(MomentState(tiny, tiny**2, p, "normal"))
        assert lo == no

    def test_deterministic_closure_propagates_square(self):
        p = make_params()
        m1 = 25.0
        d1, d2 = moment_rhs(MomentState(m1, m1**2, p, "deterministic"))
        assert d2 == pytest.approx(2 * m1 * d1)


class TestValidation:
    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            make_params(beta=-0.1)
        with pytest.raises(ValueError):
            make_params(budget=-1)
        with pytest.raises(ValueError):
            make_params(mean_degree=0.0)
        with pytest.raises(ValueError):
            make_params(n=0)

    def test_state_validation(self):
        p = make_params()
        with pytest.raises(ValueError):
            MomentState(10.0, 25.0, p, "gamma")
        with pytest.raises(ValueError):
            MomentState(-1.0, 1.0, p)
        with pytest.raises(ValueError):
            MomentState(200.0, 200.0**2, p)
        with pytest.raises(ValueError):
            MomentState(10.0, 50.0, p)  # variance would be negative

    def test_integration_validation(self):
        s = MomentState(50.0, 2500.0, make_params())
        with pytest.raises(ValueError):
            integrate(s, 0.0)
        with pytest.raises(ValueError):
            integrate(s, 1.0, dt=0.0)


class TestIntegrate:
    def test_grid_includes_both_endpoints(self):
        traj = integrate(MomentState(50.0, 2500.0, make_params()), 2.0, dt=0.25)
        assert traj.times[0] == 0.0
        assert traj.times[-1] == 2.0
        assert traj.m1.shape == traj.times.shape

    def test_refining_output_grid_does_not_move_solution(self):
        # adaptive integrator: dt only picks sample points
        s = MomentState(50.0, 2600.0, make_params())
        coarse = integrate(s, 3.0, dt=0.5)
        fine = integrate(s, 3.0, dt=0.05)
        on_coarse = np.isin(np.round(fine.times, 9), np.round(coarse.times, 9))
        np.testing.assert_allclose(
            fine.m1[on_coarse], coarse.m1, rtol=1e-6, atol=1e-6
        )

    def test_supercritical_epidemic_approaches_endemic_level(self):
        # beta*k = 2, delta = 1, no treatment: logistic fixed point at
        # N(1 - delta/(beta*k)) = N/2 for the deterministic closure
        p = make_params(beta=0.2, delta=1.0, rho=0.0, budget=0)
        s = MomentState(10.0, 100.0, p, "deterministic")
        traj = integrate(s, 40.0)
        assert traj.m1[-1] == pytest.approx(50.0, rel=1e-3)

    def test_treatment_drain_forces_extinction_and_holds_zero(self):
        # subcritical with a strong constant drain: m1 hits zero and stays
        p = make_params(beta=0.05, delta=1.0, rho=5.0, budget=10)
        s = MomentState(20.0, 450.0, p, "normal")
        traj = integrate(s, 30.0)
        assert traj.m1[-1] == 0.0
        assert np.all(traj.m1 >= 0.0)
        hit = np.flatnonzero(traj.m1 == 0.0)[0]
        assert np.all(traj.m1[hit:] == 0.0)

    def test_deterministic_closure_keeps_m2_consistent(self):
        p = make_params(rho=0.0, budget=0)
        traj = integrate(MomentState(30.0, 900.0, p, "deterministic"), 5.0)
        np.testing.assert_allclose(traj.m2, traj.m1**2, rtol=1e-9)

    def test_deterministic_mean_dominates_normal_closure(self):
        # Jensen: E[X^2] >= (EX)^2, so dropping the variance inflates
        # growth; the deterministic curve runs above the closed mean
        p = make_params(beta=0.3, delta=1.0, rho=1.0, budget=5)
        m1 = 20.0
        var = 36.0
        det = integrate(MomentState(m1, m1**2, p, "deterministic"), 4.0)
        nrm = integrate(MomentState(m1, m1**2 + var, p, "normal"), 4.0)
        assert np.all(det.m1 >= nrm.m1 - 1e-6)

    def test_closures_agree_at_zero_variance_start(self):
        # with m2 = m1^2 the normal closure's third moment equals m1^3
        # and the two systems launch from identical derivatives
        p = make_params(beta=0.25, delta=1.0, rho=0.5, budget=4)
        s_n = MomentState(40.0, 1600.0, p, "normal")
        s_l = MomentState(40.0, 1600.0, p, "lognormal")
        d_n = moment_rhs(s_n)
        d_l = moment_rhs(s_l)
        assert d_n[0] == pytest.approx(d_l[0])
        assert d_n[1] == pytest.approx(d_l[1])


class TestTrajectoryCsv:
    def test_csv_has_header_grid_and_closure(self, tmp_path):
        traj = integrate(MomentState(50.0, 2500.0, make_params()), 1.0, dt=0.5)
        path = tmp_path / "mf.csv"
        write_trajectory_csv(traj, path, header_lines=["config=deadbeef0123"])
        lines = path.read_text().splitlines()
        assert lines[0] == "# config=deadbeef0123"
        assert lines[1].split(",") == ["t", "m1", "m2", "closure"]
        rows = [ln.split(",") for ln in lines[2:]]
        assert len(rows) == traj.times.size
        assert rows[0][0] == "0.0"
        assert all(r[3] == "normal" for r in rows)
        np.testing.assert_allclose(
            [float(r[1]) for r in rows], traj.m1, rtol=1e-15
        )
