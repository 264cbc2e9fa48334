import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from iterlab import identification as ident
from iterlab import kernels as kern
from iterlab import processes as proc
from iterlab.harness import AR3, _noise_sd, kink_series, nonparam_series
from iterlab.summability import StepSequence

ZERO = proc.Discrete((0.0,), (1.0,))
CAUCHY = kern.builtin_kernel("cauchy")


def _ar3(seed, n):
    return proc.simulate_series(proc.AR(AR3, proc.Normal()), seed, n)


class TestLms:
    def test_zero_noise_from_truth_stays(self):
        y = proc.simulate_series(proc.AR(AR3, ZERO, init=(1.0, 0.0, 0.0)), 0, 2000)
        run = ident.identify_lms(y, 3, StepSequence.harmonic(), b0=AR3, horizon=1500, truth=AR3)
        assert np.array_equal(run.trace.states, np.tile(AR3, (1501, 1)))
        assert run.final_error == 0.0

    def test_first_step_by_hand(self):
        y = np.array([1.0, 2.0, 3.0, 5.0, 4.0])
        run = ident.identify_lms(y, 2, StepSequence.harmonic(), horizon=2)
        # steps 1/(i+1) from i = 0, so the first gain is 1
        b1 = np.array([0.0, 0.0]) + 1.0 * np.array([2.0, 1.0]) * 3.0
        np.testing.assert_allclose(run.trace.states[1], b1)
        v = np.array([3.0, 2.0])
        np.testing.assert_allclose(run.trace.states[2], b1 + 0.5 * v * (5.0 - b1 @ v))

    def test_order_mismatch(self):
        with pytest.raises(ValueError):
            ident.identify_lms(np.ones(20), 3, StepSequence.harmonic(), b0=[0.0, 0.0])

    def test_short_series(self):
        with pytest.raises(ValueError):
            ident.identify_lms(np.ones(5), 3, StepSequence.harmonic(), horizon=10)

    @pytest.mark.slow
    @pytest.mark.xfail(strict=True, reason="5/10 harness seeds within 0.15 at 1e5: harmonic gains "
                       "overshoot early because the regressor covariance has eigenvalue ~15.7")
    def test_ar3_band(self):
        errs = [ident.identify_lms(_ar3(proc.mix_seed(0, r), 100_000), 3, StepSequence.harmonic(),
                                   horizon=100_000, truth=AR3).final_error for r in range(10)]
        assert sum(e <= 0.15 for e in errs) >= 8


class TestNormalized:
    def test_ar3_band(self):
        errs = [ident.identify_normalized(_ar3(proc.mix_seed(0, r), 30_000), 3, horizon=30_000,
                                          truth=AR3).final_error for r in range(10)]
        assert sum(e <= 0.1 for e in errs) >= 8

    def test_zero_noise_exact_recovery(self):
        c = (2 * np.cos(0.7), -1.0)  # undamped oscillator keeps the regressors exciting
        y = proc.simulate_series(proc.AR(c, ZERO, init=(0.0, 1.0)), 0, 1200)
        run = ident.identify_normalized(y, 2, horizon=1000, truth=c)
        assert run.final_error <= 1e-6
        assert run.flags == ()

    def test_white_noise(self):
        y = proc.SampleStream(proc.Normal(), 4).sample(20_000)
        run = ident.identify_normalized(y, 3, truth=(0.0, 0.0, 0.0))
        assert run.final_error <= 0.1

    def test_singular_flag(self):
        run = ident.identify_normalized(np.zeros(200), 2, horizon=150)
        assert run.flags == ("singular_after_warmup",)
        assert run.trace.meta["fallback_steps"] == 150
        np.testing.assert_array_equal(run.final, [0.0, 0.0])

    def test_warmup_fallback_only_early(self):
        run = ident.identify_normalized(_ar3(1, 2000), 3, horizon=2000)
        assert 0 < run.trace.meta["fallback_steps"] <= 30
        assert run.flags == ()


class TestAr1:
    def test_ratio_estimator(self):
        y = proc.simulate_series(proc.AR((0.99,), proc.Normal(0.0, 3.0)), 0, 300_000)
        run = ident.ar1_ratio_estimate(y)
        assert abs(run.final[0] - 0.99) <= 0.01

    def test_exact_on_noiseless(self):
        y = 0.8 ** np.arange(30)
        np.testing.assert_allclose(ident.ar1_ratio_estimate(y).trace.states[:, 0], 0.8)


class TestScalar:
    def test_band(self):
        errs = []
        for r in range(10):
            y = kink_series(0.9, 5000, proc.mix_seed(0, r))
            run = ident.identify_scalar_nonlinear(y, StepSequence.harmonic(), 0.5)
            errs.append(abs(run.final[0] - 0.9))
        assert sum(e <= 0.1 for e in errs) >= 7

    def test_zero_noise_constant(self):
        y = ident.simulate_kink_system(0.6, np.zeros(300), y0=2.0)
        run = ident.identify_scalar_nonlinear(y, StepSequence.harmonic(), 0.6, truth=0.6)
        assert np.all(run.trace.states[:, 0] == 0.6)
        assert "eta_mean" in run.trace.aux

    def test_eta_mean_column(self):
        y = kink_series(0.9, 50, 1)
        run = ident.identify_scalar_nonlinear(y, StepSequence.harmonic(), 0.5, truth=0.9)
        q = run.trace.states[:-1, 0]
        ref = np.cumsum([float(ident.eta(a, 0.9, b)) for a, b in zip(y[:50], q)]) / np.arange(1, 51)
        np.testing.assert_allclose(run.trace.column("eta_mean")[1:], ref)

    @given(st.floats(-5, 5), st.floats(0, 2), st.floats(0, 2))
    def test_eta_below_chi(self, x, p, q):
        assert ident.eta(x, p, q) <= ident.chi(x, p, q) + 1e-12

    def test_eta_bound_needs_nonnegative_max(self):
        # on the middle region chi - eta = max(p,q)/2 * (x - min)/(max - min)
        assert ident.eta(-1.5, -1.0, -2.0) > ident.chi(-1.5, -1.0, -2.0)

    @given(st.floats(-5, 5), st.floats(-2, 2), st.floats(-2, 2))
    def test_chi_is_difference_quotient(self, x, p, q):
        if abs(p - q) < 1e-3:
            return
        dq = (ident.kink_map(x, p) - ident.kink_map(x, q)) / (p - q)
        assert float(ident.chi(x, p, q)) == pytest.approx(float(dq), rel=1e-9, abs=1e-9)

    def test_kink_map(self):
        np.testing.assert_allclose(ident.kink_map([0.2, 0.9, 2.0], 0.9), [0.18, 0.81, 1.305])

    def test_divergence_truncates(self):
        y = np.array([0.0, 1e200, -1e200, 1e200, 0.0])
        run = ident.identify_scalar_nonlinear(y, StepSequence(lambda i: 1e200 + 0 * i, "huge"), 0.5)
        assert run.trace.diverged
        assert np.isfinite(run.trace.states).all()


class TestNonparametric:
    def test_contracting_map(self):
        rng = np.random.default_rng(0)
        segs = [s * 0.5 ** np.arange(6) for s in rng.uniform(-4, 4, 300)]
        g = np.linspace(-2, 2, 81)
        est = ident.identify_nonparametric(segs, kern.builtin_kernel("epanechnikov"),
                                           kern.power_bandwidth(0.5), g)
        assert est.valid.all()
        assert np.max(np.abs(est.values - 0.5 * g)) <= 0.05

    def test_too_short(self):
        with pytest.raises(ValueError):
            ident.identify_nonparametric([1.0], CAUCHY, kern.power_bandwidth(0.5), [0.0])

    def test_range_envelope(self):
        x = nonparam_series(800, 2, lambda v: ident.kink_map(v, 0.9))
        est = ident.identify_nonparametric(x, kern.builtin_kernel("epanechnikov"),
                                           kern.power_bandwidth(0.5), np.linspace(-4, 3, 71))
        v = est.values[est.valid]
        assert v.min() >= x[1:].min() - 1e-9 and v.max() <= x[1:].max() + 1e-9

    @staticmethod
    def _l1(x, fmap, lo, hi):
        g = np.linspace(lo, hi, 201)
        est = ident.identify_nonparametric(x, CAUCHY, kern.power_bandwidth(0.5), g)
        d = np.where(est.valid, np.abs(est.values - fmap(g)), 0.0)
        return float(np.trapezoid(d, g)), float(d.max())

    @pytest.mark.slow
    def test_kink_error_decreases(self):
        f = lambda v: ident.kink_map(v, 0.9)
        e3, e6 = [], []
        for s in range(5):
            x = nonparam_series(6000, s, f, sd_fn=_noise_sd("sin2"))
            e3.append(self._l1(x[:3001], f, -2.5, 0.65)[0])
            e6.append(self._l1(x, f, -2.5, 0.65)[0])
        assert np.median(e6) < np.median(e3)
        assert np.median(e6) <= 2 * np.median(e3)

    @pytest.mark.slow
    @pytest.mark.xfail(strict=True, reason="the four-segment map jumps at -2, 0 and 0.5; kernel "
                       "smoothing leaves sup error 0.47-0.77 on the central interval")
    def test_four_segment_band(self):
        ok = 0
        for r in range(10):
            x = nonparam_series(6000, proc.mix_seed(0, r), ident.four_segment_map,
                                sd_fn=_noise_sd("sin2"))
            ok += self._l1(x, ident.four_segment_map, -2.5, -0.2)[1] <= 0.3
        assert ok >= 7

    @pytest.mark.slow
    def test_correlated_noise_hurts(self):
        f = lambda v: ident.kink_map(v, 0.9)
        ind, cor = [], []
        for s in range(10):
            ind.append(self._l1(nonparam_series(6000, s, f), f, -2.5, 0.65)[0])
            cor.append(self._l1(nonparam_series(6000, s, f, correlated=True), f, -2.5, 0.65)[0])
        assert np.median(cor) > np.median(ind)

    def test_ma_noise(self):
        z = np.array([1.0, 0.0, 0.0, 2.0])
        np.testing.assert_allclose(ident.ma_noise(z), [1.0, 0.3, -0.2, 2.0])

    def test_four_segment_values(self):
        np.testing.assert_allclose(ident.four_segment_map([-3.0, -1.0, 0.25, 1.0]),
                                   [-2.4, -1.2, 1.0, 0.1])
