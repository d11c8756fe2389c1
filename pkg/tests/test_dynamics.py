import numpy as np
import pytest

from immunokit.dynamics import (
    Cd8Params,
    Exhaustion,
    ImmuneState,
    ProliferationParams,
    Trajectory,
    classify_outcome,
    convergence_ratio,
    dose_sweep,
    saturating_rate,
    simulate_cd8,
    simulate_proliferation,
)


class TestSaturatingRate:
    def test_zero_antigen(self):
        assert saturating_rate(0.0, ProliferationParams(rho=1.0, h=0.01)) == 0.0

    def test_half_saturation(self):
        p = ProliferationParams(rho=1.0, h=0.01)
        assert saturating_rate(0.01, p) == pytest.approx(0.5, abs=1e-15)

    def test_direct_evaluation(self):
        p = ProliferationParams(rho=1.0, h=0.01)
        assert saturating_rate(0.09, p) == pytest.approx(0.9, abs=1e-12)

    def test_strictly_increasing_and_bounded(self):
        p = ProliferationParams(rho=2.0, h=0.05)
        grid = np.logspace(-4, 3, 40)
        rates = [saturating_rate(i, p) for i in grid]
        assert all(a < b for a, b in zip(rates, rates[1:]))
        assert all(r < p.rho for r in rates)

    def test_exhaustion_vanishes_at_high_antigen(self):
        p = ProliferationParams(rho=1.0, h=0.01, exhaustion=Exhaustion(k_ex=1.0, n_ex=2))
        assert saturating_rate(1e6, p) < 1e-9

    def test_negative_antigen_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            saturating_rate(-1.0, ProliferationParams())


class TestProliferation:
    def test_zero_antigen_flat(self):
        p = ProliferationParams(rho=1.0, h=0.01, t0_cells=100.0, duration_days=7.0)
        traj = simulate_proliferation(p, 0.0)
        assert np.all(traj.column("T") == 100.0)

    def test_saturating_antigen_matches_exponential(self):
        # oracle: T(t) = T0 * exp(rate * t) for constant antigen
        p = ProliferationParams(rho=1.0, h=0.01, t0_cells=100.0, duration_days=7.0)
        traj = simulate_proliferation(p, 0.01 * 1e4)
        target = 100.0 * np.exp(7.0)
        assert abs(traj.final_state()[0] - target) / target < 1e-3

    def test_matches_closed_form_along_whole_trajectory(self):
        p = ProliferationParams(rho=0.7, h=0.3, t0_cells=50.0, duration_days=5.0)
        antigen = 0.9
        rate = saturating_rate(antigen, p)
        traj = simulate_proliferation(p, antigen)
        exact = 50.0 * np.exp(rate * traj.times)
        assert np.max(np.abs(traj.column("T") - exact) / exact) < 1e-3

    def test_time_dependent_antigen(self):
        p = ProliferationParams(rho=1.0, h=0.01, t0_cells=100.0, duration_days=2.0)
        flat = simulate_proliferation(p, lambda t: 0.0)
        assert np.all(flat.column("T") == 100.0)

    def test_exhaustion_gives_interior_peak(self):
        # grid sweep oracle: some mid-range antigen beats the high-dose limit
        p = ProliferationParams(rho=1.0, h=0.01, duration_days=7.0,
                                exhaustion=Exhaustion(k_ex=0.5, n_ex=2))
        sweep = dose_sweep(p, [0.01, 0.1, 0.5, 2.0, 100.0])
        finals = [t for _, t in sweep]
        assert max(finals[:-1]) > finals[-1]

    def test_bad_step(self):
        with pytest.raises(ValueError, match="step"):
            simulate_proliferation(ProliferationParams(), 1.0, step=0.0)


class TestDoseSweep:
    def test_monotone_without_exhaustion(self):
        p = ProliferationParams(rho=1.0, h=0.05, duration_days=7.0)
        sweep = dose_sweep(p, np.logspace(-4, 1, 20))
        finals = [t for _, t in sweep]
        assert all(a <= b for a, b in zip(finals, finals[1:]))

    def test_lower_h_rises_earlier(self):
        grid = np.logspace(-4, 1, 20)
        low = dose_sweep(ProliferationParams(rho=1.0, h=0.01, duration_days=7.0), grid)
        high = dose_sweep(ProliferationParams(rho=1.0, h=0.1, duration_days=7.0), grid)
        for (_, t_low), (_, t_high) in zip(low, high):
            assert t_low >= t_high

    def test_singleton_grid(self):
        sweep = dose_sweep(ProliferationParams(), [0.5])
        assert len(sweep) == 1
        assert sweep[0][0] == 0.5

    def test_empty_grid(self):
        with pytest.raises(ValueError, match="empty"):
            dose_sweep(ProliferationParams(), [])


class TestCd8:
    def test_fixed_point_when_no_infection(self):
        traj = simulate_cd8(Cd8Params(), ImmuneState(100.0, 0.0, 5.0, 0.0), 5.0, 0.01)
        assert np.max(np.abs(traj.states - traj.states[0])) == 0.0

    def test_pure_decay_matches_exponential(self):
        params = Cd8Params(beta_t=0.0, beta_tv=0.0, p=0.0, k_ie=0.0, rho_i=0.0, c_v=1.0)
        traj = simulate_cd8(params, ImmuneState(100.0, 0.0, 0.0, 50.0), 10.0, step=1e-3)
        exact = 50.0 * np.exp(-traj.times)
        assert np.max(np.abs(traj.column("V") - exact) / np.maximum(exact, 1e-300)) < 1e-6

    def test_fourth_order_convergence(self):
        params = Cd8Params()
        initial = ImmuneState(100.0, 10.0, 1.0, 10.0)
        ratio = convergence_ratio(params, initial, duration_days=5.0, step=0.02)
        assert 12.0 <= ratio <= 20.0

    def test_states_stay_nonnegative_under_fuzzing(self):
        rng = np.random.default_rng(10)
        for _ in range(60):
            params = Cd8Params(
                beta_t=float(rng.uniform(0, 1)),
                beta_tv=float(rng.uniform(0, 0.01)),
                p=float(rng.uniform(0, 5)),
                k_ie=float(rng.uniform(0, 1)),
                rho_i=float(rng.uniform(0, 1)),
                c_v=float(rng.uniform(0.1, 5)),
            )
            initial = ImmuneState(*(float(v) for v in rng.uniform(0, 100, size=4)))
            traj = simulate_cd8(params, initial, duration_days=3.0, step=0.01)
            assert np.all(traj.states >= 0.0)

    def test_trajectory_sampling(self):
        traj = simulate_cd8(Cd8Params(), ImmuneState(1, 1, 1, 1), 1.0, step=0.1)
        assert len(traj.times) == 11
        assert np.allclose(np.diff(traj.times), 0.1)


class TestClassifyOutcome:
    def _traj(self, v):
        t = np.linspace(0.0, 10.0, len(v))
        states = np.column_stack([np.ones(len(v))] * 3 + [v])
        return Trajectory(t, states, ("T", "I", "E", "V"))

    def test_monotone_decay_is_clearance(self):
        v = 50 * np.exp(-np.linspace(0, 10, 100))
        assert classify_outcome(self._traj(v), detection_limit=1.0) == "clearance"

    def test_dip_and_rebound_is_resurgence(self):
        v = 50 * np.exp(-np.linspace(0, 10, 100))
        v[60:] = 5.0
        assert classify_outcome(self._traj(v), detection_limit=1.0) == "resurgence"

    def test_constant_above_limit_is_persistence(self):
        assert classify_outcome(self._traj(np.full(100, 9.0)), 1.0) == "persistence"

    def test_invariant_under_time_rescaling(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            v = np.abs(rng.normal(5, 4, size=50))
            traj = self._traj(v)
            scaled = Trajectory(traj.times * 7.3, traj.states, traj.columns)
            assert classify_outcome(traj, 2.0) == classify_outcome(scaled, 2.0)

    def test_needs_ten_samples(self):
        t = np.linspace(0, 1, 5)
        states = np.ones((5, 4))
        with pytest.raises(ValueError, match=">= 10"):
            classify_outcome(Trajectory(t, states, ("T", "I", "E", "V")), 1.0)


class TestTrajectory:
    def test_rejects_non_increasing_times(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            Trajectory(np.array([0.0, 0.0, 1.0]), np.ones((3, 1)), ("T",))

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            Trajectory(np.array([0.0, 1.0]), np.ones((3, 1)), ("T",))

    def test_csv_round_trip_values(self, tmp_path):
        traj = simulate_cd8(Cd8Params(), ImmuneState(1, 2, 3, 4), 0.5, step=0.1)
        path = tmp_path / "traj.csv"
        traj.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,T,I,E,V"
        first = [float(x) for x in lines[1].split(",")]
        assert first == [0.0, 1.0, 2.0, 3.0, 4.0]
