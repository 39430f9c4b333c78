import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import naive_alpha, naive_fluctuation

from queuefractal.core import CalendarWindow, DataError, TimeSeries
from queuefractal.dfa import (FluctuationCurve, WindowSkipped, alpha_t, dfa_global, dfa_local,
                              fit_alpha, fluctuation, power_of_two_scales, profile)
from queuefractal.synth import CorridorSpec, NoiseSpec, gen_corridor, gen_fgn, gen_powerlaw

LOCAL_SCALES = [16, 32, 64, 128, 256]
EXACT = 1e-12


def ts(v, dt=120.0, t0=None):
    return TimeSeries(np.asarray(v, float), dt, t0)


def _series(seed, n=1024):
    r = np.random.default_rng(seed)
    v = r.standard_normal(n)
    return np.cumsum(v) if seed % 3 == 0 else v * r.uniform(0.1, 10)


class TestProfile:
    def test_constant(self):
        assert profile(ts([1, 1, 1, 1])).tolist() == [0, 0, 0, 0]

    def test_alternating(self):
        assert profile(ts([1, -1, 1, -1])).tolist() == [1, 0, 1, 0]

    def test_ends_at_zero(self, rng):
        v = rng.standard_normal(5000) * 4 + 2
        assert abs(profile(ts(v))[-1]) <= 1e-9 * v.size * v.std()
        assert profile(ts(v)).size == v.size


class TestFluctuation:
    def test_ramp_matches_oracle(self):
        v = np.arange(2048.0)
        curve = fluctuation(v, power_of_two_scales(16, 512))
        for s, f in zip(curve.scales, curve.fluctuation):
            assert f == pytest.approx(naive_fluctuation(v, int(s))[0], rel=EXACT)

    @pytest.mark.parametrize("n", [1024, 1000, 1537])
    def test_segment_count(self, n):
        curve = fluctuation(np.random.default_rng(n).standard_normal(n), [16, 20, 64, 250])
        assert curve.n_segments.tolist() == [2 * (n // s) for s in (16, 20, 64, 250)]
        assert [naive_fluctuation(np.arange(n) % 7, s)[1] for s in (16, 250)] == \
            [2 * (n // 16), 2 * (n // 250)]

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_matches_oracle_higher_order(self, order):
        v = _series(7, 600)
        curve = fluctuation(v, [8, 16, 40, 150], detrend_order=order)
        want = [naive_fluctuation(v, s, order)[0] for s in (8, 16, 40, 150)]
        np.testing.assert_allclose(curve.fluctuation, want, rtol=1e-10)

    def test_white_alpha(self):
        x = gen_fgn(NoiseSpec("fgn", 2 ** 15, 2, hurst=0.5))
        curve = fit_alpha(fluctuation(x, power_of_two_scales(16, 2 ** 13)))
        assert 0.45 <= curve.alpha <= 0.55

    def test_errors(self):
        v = np.random.default_rng(0).standard_normal(1000)
        with pytest.raises(DataError):
            fluctuation(v, [16, 251])
        with pytest.raises(ValueError):
            fluctuation(v, [2, 16], detrend_order=1)
        with pytest.raises(DataError):
            fluctuation(np.full(1000, 0.1), [16, 32])

    def test_gaps_rejected(self):
        v = np.arange(100.0)
        v[3] = np.nan
        with pytest.raises(DataError):
            fluctuation(ts(v), [16])


class TestFitAlpha:
    def test_exact_power_law(self):
        s = np.array([16, 32, 64, 128, 256, 512])
        curve = fit_alpha(FluctuationCurve(s, s ** 0.8))
        assert abs(curve.alpha - 0.8) < EXACT
        assert curve.r_squared == pytest.approx(1.0)

    def test_needs_four_positive(self):
        s = np.array([16, 32, 64])
        with pytest.raises(DataError):
            fit_alpha(FluctuationCurve(s, s * 1.0))
        s = np.array([16, 32, 64, 128])
        with pytest.raises(DataError):
            fit_alpha(FluctuationCurve(s, np.array([1.0, 2.0, 0.0, 3.0])))

    def test_fgn_h09(self):
        a = [dfa_global(gen_fgn(NoiseSpec("fgn", 2 ** 15, s, hurst=0.9))).alpha
             for s in range(20)]
        assert 0.85 <= np.mean(a) <= 0.95


class TestGlobal:
    def test_46_days(self):
        x = gen_fgn(NoiseSpec("fgn", 46 * 720, 1, hurst=0.8))
        curve = dfa_global(x)
        assert curve.scales.tolist() == [2 ** k for k in range(4, 14)]

    def test_too_short(self):
        with pytest.raises(DataError):
            dfa_global(gen_fgn(NoiseSpec("fgn", 2 ** 14, 1, hurst=0.8)))

    def test_span_enforced(self):
        with pytest.raises(DataError):
            dfa_global(gen_fgn(NoiseSpec("fgn", 2 ** 12, 1, hurst=0.8)), 16, 256)

    def test_pink_wk(self):
        for s in range(10):
            a = dfa_global(gen_powerlaw(NoiseSpec("powerlaw", 2 ** 15, s, beta=1.0))).alpha
            assert 0.85 <= 2 * a - 1 <= 1.15

    def test_monotone_in_hurst(self):
        means = [np.mean([dfa_global(gen_fgn(NoiseSpec("fgn", 2 ** 15, s, hurst=h))).alpha
                          for s in range(10)]) for h in (0.6, 0.7, 0.8, 0.9)]
        assert all(a < b for a, b in zip(means, means[1:]))


class TestLocal:
    def test_fgn_windows(self):
        x = gen_fgn(NoiseSpec("fgn", 100 * 1024, 1, hurst=0.7))
        a = np.array([dfa_local(x, CalendarWindow(i * 1024, 1024)).alpha for i in range(100)])
        assert 0.55 <= a.mean() <= 0.85
        assert np.mean((a >= 0.55) & (a <= 0.85)) >= 0.95

    def test_identical_windows(self):
        v = np.random.default_rng(5).standard_normal(1024)
        x = ts(np.concatenate([v, v]))
        assert dfa_local(x, CalendarWindow(0, 1024)) == dfa_local(x, CalendarWindow(1024, 1024))

    def test_constant_window(self):
        with pytest.raises(WindowSkipped):
            dfa_local(ts(np.full(1024, 3.0)), CalendarWindow(0, 1024))

    def test_gap_window(self):
        v = np.random.default_rng(5).standard_normal(2048)
        v[1500] = np.nan
        x = ts(v)
        dfa_local(x, CalendarWindow(0, 1024))
        with pytest.raises(WindowSkipped):
            dfa_local(x, CalendarWindow(1000, 1024))

    def test_scales(self):
        v = _series(4)
        got = dfa_local(ts(v), CalendarWindow(0, 1024))
        assert got.alpha == pytest.approx(naive_alpha(v, LOCAL_SCALES), rel=1e-10)


class TestAlphaT:
    def test_two_entries(self):
        tr = alpha_t(ts(np.random.default_rng(0).standard_normal(1024 + 15)))
        assert [e.start_index for e in tr.entries] == [0, 15]

    @pytest.mark.parametrize("n,step", [(2048, 15), (5000, 15), (1024, 15), (3000, 7)])
    def test_window_count(self, n, step):
        tr = alpha_t(ts(np.random.default_rng(1).standard_normal(n)), step=step)
        assert len(tr) == (n - 1024) // step + 1
        assert np.all(np.diff(tr.starts) == step)

    def test_stationary_fgn_flat(self):
        tr = alpha_t(gen_fgn(NoiseSpec("fgn", 20160, 3, hurst=0.7)))
        assert tr.alphas.std() < 0.15

    def test_gap_windows_skipped(self):
        v = np.random.default_rng(2).standard_normal(3000)
        v[1500:1520] = np.nan
        tr = alpha_t(ts(v), step=15)
        assert all(e.start_index + 1024 <= 1500 or e.start_index >= 1520 for e in tr.entries)
        assert len(tr) + len(tr.skipped) == (3000 - 1024) // 15 + 1
        assert all(s % 15 == 0 for s in tr.starts)
        assert np.isfinite(tr.alphas).all()

    def test_too_short(self):
        with pytest.raises(DataError):
            alpha_t(ts(np.zeros(1000)))

    def test_parallel_same_order(self):
        x = ts(np.random.default_rng(3).standard_normal(4000))
        assert alpha_t(x, step=50) == alpha_t(x, step=50, workers=4)

    def test_corridor_weekday_above_weekend(self):
        (x,) = gen_corridor(CorridorSpec(n_days=28, seed=1))
        tr = alpha_t(x)
        from queuefractal.core import day_type
        kinds = np.array([day_type(x.t0, s, x.dt_seconds) for s in tr.starts])
        assert tr.alphas[kinds == "weekday"].mean() > tr.alphas[kinds == "weekend"].mean()


class TestInvariance:
    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(1e-3, 1e3), m=st.floats(-1e4, 1e4))
    def test_scale_shift_reverse(self, seed, c, m):
        v = _series(seed)
        a = fit_alpha(fluctuation(v, LOCAL_SCALES)).alpha
        assert abs(fit_alpha(fluctuation(c * v, LOCAL_SCALES)).alpha - a) < EXACT
        assert abs(fit_alpha(fluctuation(v + m, LOCAL_SCALES)).alpha - a) < EXACT
        assert abs(fit_alpha(fluctuation(v[::-1], LOCAL_SCALES)).alpha - a) < EXACT

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_oracle_equivalence(self, seed):
        v = _series(seed)
        got = fluctuation(v, LOCAL_SCALES).fluctuation
        want = [naive_fluctuation(v, s)[0] for s in LOCAL_SCALES]
        np.testing.assert_allclose(got, want, rtol=1e-10)
