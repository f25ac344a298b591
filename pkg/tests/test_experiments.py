import math

import numpy as np
import pytest

from ccube.experiments import (CSV_COLUMNS, ExperimentSpec, MetricsRow, TAG_ORDER, apply_snr,
                               hit_rate, match_estimates, measured_snr, power_spread_scene,
                               rmse, rows_from_csv, rows_to_csv, run_montecarlo, signal_seed)
from ccube.scene import TargetScene, random_scene, table_config, two_target_scene
from ccube.signal import synthesize

TOL = {'theta': 0.1, 'phi': 0.1, 'r': 500.0, 'v': 200.0}


def rows_equal(a, b):
    for x, y in zip(a, b):
        for k in CSV_COLUMNS:
            u, v = getattr(x, k), getattr(y, k)
            if isinstance(u, float) and math.isnan(u):
                assert math.isnan(v)
            else:
                assert u == v
    return len(a) == len(b)


class TestSnr:

    def test_hits_target(self):
        cfg = table_config('C-Cube')
        clean = synthesize(cfg, two_target_scene(), 0, sigma_n2=0.0)
        noisy = apply_snr(clean, 0.0, 1)
        assert measured_snr(clean, noisy.sigma_n2) == pytest.approx(0.0, abs=0.01)
        assert noisy.x.shape == clean.x.shape
        assert not np.array_equal(noisy.x, clean.x)

    def test_ratio(self):
        cfg = table_config('C-Cube')
        clean = synthesize(cfg, two_target_scene(), 0, sigma_n2=0.0)
        a = apply_snr(clean, 0.0, 1).sigma_n2
        b = apply_snr(clean, 10.0, 1).sigma_n2
        assert a / b == pytest.approx(10.0, rel=1e-12)

    def test_zero_signal(self):
        clean = synthesize(table_config('C-Cube'), TargetScene(()), 0, sigma_n2=0.0)
        with pytest.raises(ValueError):
            apply_snr(clean, 0.0, 1)
        with pytest.raises(ValueError):
            apply_snr(synthesize(table_config('C-Cube'), two_target_scene(), 0), np.inf, 1)


class TestHitRate:

    def test_exact(self):
        s = two_target_scene()
        assert hit_rate(s.params(), s, TOL) == 1.0

    def test_shifted(self):
        s = two_target_scene()
        e = s.params() + 10 * np.array([TOL['theta'], TOL['phi'], TOL['r'], TOL['v']])
        assert hit_rate(e, s, TOL) == 0.0

    def test_partial_and_one_to_one(self):
        s = two_target_scene()
        e = s.params().copy()
        e[1] = e[0]
        assert hit_rate(e, s, TOL) == 0.5

    def test_ignored_dimension(self):
        s = two_target_scene()
        e = s.params().copy()
        e[:, 2] = np.nan
        assert hit_rate(e, s, dict(TOL, r=None)) == 1.0
        assert hit_rate(e, s, TOL) == 0.0

    def test_mismatch(self):
        with pytest.raises(ValueError):
            hit_rate(np.zeros((1, 4)), two_target_scene(), TOL)


class TestRmse:

    def test_exact(self):
        s = two_target_scene()
        assert all(v == 0 for v in rmse([s.params()], s).values())

    def test_single_error(self):
        t = np.array([[0.3, 0.2, 1000.0, 100.0]])
        e = t + np.array([[0.01, -0.02, 5.0, -3.0]])
        r = rmse([e], t)
        assert r['theta'] == pytest.approx(0.01) and r['phi'] == pytest.approx(0.02)
        assert r['r'] == pytest.approx(5.0) and r['v'] == pytest.approx(3.0)

    def test_matching(self):
        s = two_target_scene()
        e = s.params()[::-1]
        assert np.array_equal(match_estimates(e, s), s.params())
        assert rmse([e], s)['r'] == 0

    def test_gaussian_errors(self):
        # One target per trial: the statistic is the mean absolute error,
        # sigma sqrt(2 / pi) in expectation.
        rng = np.random.default_rng(0)
        t = np.array([[0.5, 0.1, 2000.0, 150.0]])
        sigma = np.array([1e-3, 2e-3, 1.0, 0.5])
        trials = [t + sigma * rng.standard_normal((1, 4)) for _ in range(20000)]
        r = rmse(trials, t)
        for k, sd in zip(('theta', 'phi', 'r', 'v'), sigma):
            assert r[k] == pytest.approx(sd * np.sqrt(2 / np.pi), rel=0.03)


class TestPowerSpread:

    def test_zero(self):
        s = power_spread_scene(two_target_scene().with_powers([1.0, 3.0]), 0.0)
        assert s.sigma2.tolist() == [2.0, 2.0]

    @pytest.mark.parametrize('sd', [0.1, 0.3, 0.6])
    def test_moments(self, sd):
        base = random_scene(np.random.default_rng(2), 4)
        s = power_spread_scene(base, sd)
        assert np.mean(s.sigma2) == pytest.approx(1.0, abs=1e-12)
        assert np.sqrt(np.mean((s.sigma2 - 1.0) ** 2)) == pytest.approx(sd, abs=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            power_spread_scene(two_target_scene(), -0.1)
        with pytest.raises(ValueError):
            power_spread_scene(two_target_scene(), 1.5)


class TestMonteCarlo:

    def test_noiseless_zero_row(self):
        spec = ExperimentSpec(config_matrix=['C-Cube'], trials=1, noiseless=True,
                              scene=two_target_scene())
        (row,) = run_montecarlo(spec)
        assert row.failed == 0 and row.hit_rate == 1.0
        for k in ('theta', 'phi', 'r', 'v'):
            assert getattr(row, 'rmse_' + k) < 1e-9 * max(1.0, np.max(getattr(
                two_target_scene(), k)))

    def test_byte_identical(self):
        spec = ExperimentSpec(config_matrix=['U-Cube', 'C-Cube'], snr_grid=[0.0, 10.0],
                              trials=4, master_seed=3, scene=two_target_scene())
        a = rows_to_csv(run_montecarlo(spec))
        b = rows_to_csv(run_montecarlo(spec))
        assert a == b
        assert a.splitlines()[0] == ','.join(CSV_COLUMNS)

    def test_worker_count_invariant(self):
        spec = ExperimentSpec(config_matrix=['C-Cube', 'CUC'], snr_grid=[5.0], trials=3,
                              master_seed=11, n_targets=3)
        one = rows_to_csv(run_montecarlo(spec))
        spec.workers = 2
        two = rows_to_csv(run_montecarlo(spec))
        assert one == two

    def test_order_independent(self):
        a = ExperimentSpec(config_matrix=['C-Cube', 'U-Cube'], trials=2, master_seed=1,
                           scene=two_target_scene())
        b = ExperimentSpec(config_matrix=['U-Cube', 'C-Cube'], trials=2, master_seed=1,
                           scene=two_target_scene())
        assert rows_to_csv(run_montecarlo(a)) == rows_to_csv(run_montecarlo(b))

    def test_infeasible_skipped(self):
        spec = ExperimentSpec(config_matrix=['U-Cube'], trials=2, n_targets=7)
        (row,) = run_montecarlo(spec)
        assert row.trials == 0 and row.note.startswith('infeasible')
        assert 'C6' in row.note and math.isnan(row.rmse_theta)

    def test_crb_columns(self):
        spec = ExperimentSpec(config_matrix=['C-Cube'], trials=2, snr_grid=[10.0],
                              scene=two_target_scene(), compute_crb=True)
        (row,) = run_montecarlo(spec)
        assert 0 < row.rcrb_theta < row.rmse_theta

    def test_non_fda_range_nan(self):
        spec = ExperimentSpec(config_matrix=['C-C'], trials=2, scene=two_target_scene())
        (row,) = run_montecarlo(spec)
        assert math.isnan(row.rmse_r) and row.rmse_theta > 0

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ExperimentSpec(trials=0)
        with pytest.raises(ValueError):
            ExperimentSpec(snr_grid=[np.nan])
        with pytest.raises(ValueError):
            ExperimentSpec(config_matrix=['XXX'])


class TestCsv:

    def test_round_trip(self):
        nan = float('nan')
        rows = [MetricsRow('C-Cube', 10.0, 200, 1, 1e-3, 2.5e-4, 0.123456789012345, 7.0, 0.97,
                           1 / 3, nan, 1e-300, 2.0, 'failed: RankDeficiencyError', 1.5),
                MetricsRow('UCC', -15.0, 0, 0, nan, nan, nan, nan, nan, nan, nan, nan, nan,
                           'infeasible: C6,C7')]
        text = rows_to_csv(rows)
        back = rows_from_csv(text)
        assert rows_equal(rows, back)
        assert 'wall_time' not in text.splitlines()[0]
        assert rows_from_csv(rows_to_csv(rows, timing=True))[0].wall_time == 1.5

    def test_real_rows(self):
        spec = ExperimentSpec(config_matrix=['C-Cube'], trials=3, scene=two_target_scene(),
                              snr_grid=[0.0, 3.0])
        rows = run_montecarlo(spec)
        assert rows_equal(rows, rows_from_csv(rows_to_csv(rows)))


class TestSeeds:

    def test_no_collisions(self):
        spec = ExperimentSpec(master_seed=2024)
        states = set()
        n = 0
        per = 10 ** 6 // (len(TAG_ORDER) * 4) + 1
        for tag in TAG_ORDER:
            for si in range(4):
                for j in range(per):
                    s = signal_seed(spec, tag, si, j).generate_state(2, np.uint64)
                    states.add((int(s[0]), int(s[1])))
                    n += 1
        assert n >= 10 ** 6
        assert len(states) == n
