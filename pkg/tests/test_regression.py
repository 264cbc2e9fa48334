import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iterlab import kernels as kern
from iterlab import processes as proc
from iterlab import regression as reg
from iterlab.harness import MIXTURE, _reg_data

EPAN = kern.builtin_kernel("epanechnikov")
GAUSS = kern.builtin_kernel("gaussian")

pairs = st.lists(st.tuples(st.floats(-3, 3), st.floats(-10, 10)), min_size=1, max_size=30)


class TestBatch:
    def test_constant_response(self):
        x = proc.SampleStream(proc.Normal(), 0).sample(200)
        est = reg.batch_regression(x, np.full(200, 2.5), EPAN, 0.4, np.linspace(-3, 3, 61))
        np.testing.assert_allclose(est.values[est.valid], 2.5)
        assert est.valid.any()

    def test_square_sup_error(self):
        x, y = _reg_data("square", 1000, 0)
        g = np.linspace(-2, 2, 201)
        est = reg.batch_regression(x, y, EPAN, 1000**-0.4, g)
        assert est.valid.all()
        assert np.max(np.abs(est.values - reg.square(g))) <= 0.5

    @pytest.mark.xfail(strict=True, reason="integrated L1 on [-2, 2] is 0.42-0.61 over seeds 0-9 "
                       "at h = n^-0.4; the 0.3 band is not attainable (see ledger)")
    def test_clipped_identity_l1(self):
        x, y = _reg_data("clipped-identity", 1000, 0)
        g = np.linspace(-2, 2, 201)
        est = reg.batch_regression(x, y, EPAN, 1000**-0.4, g)
        assert np.trapezoid(np.abs(est.values - reg.clipped_identity(g)), g) <= 0.3

    def test_all_masked_warns(self):
        with pytest.warns(UserWarning):
            est = reg.batch_regression([0.0], [1.0], EPAN, 0.1, [5.0, 6.0])
        assert not est.valid.any()

    def test_bad_bandwidth(self):
        with pytest.raises(ValueError):
            reg.batch_regression([0.0], [1.0], EPAN, -1.0, [0.0])

    @given(pairs, st.floats(-3, 3), st.floats(-5, 5))
    def test_affine_equivariance(self, data, a, b):
        x, y = np.array(data).T
        g = np.linspace(-3, 3, 25)
        e1 = reg.batch_regression(x, y, GAUSS, 0.5, g)
        e2 = reg.batch_regression(x, a * y + b, GAUSS, 0.5, g)
        v = e1.valid & e2.valid
        np.testing.assert_allclose(e2.values[v], a * e1.values[v] + b, rtol=1e-9, atol=1e-9)


class TestRecursive:
    def test_first_update(self):
        s = reg.recursive_regression_update(reg.RegressionState.empty(np.linspace(-2, 2, 41),
                                                                      kern.power_bandwidth(0.4)),
                                            0.3, -1.7, EPAN)
        r = reg.evaluate_ratio(s)
        assert r.valid.any()
        np.testing.assert_allclose(r.values[r.valid], -1.7)
        assert r.meta["weighted_mean_deviation"] == pytest.approx(0.0, abs=1e-12)

    def test_empty_fully_masked(self):
        r = reg.evaluate_ratio(reg.RegressionState.empty(np.linspace(0, 1, 11),
                                                         kern.power_bandwidth(0.4)))
        assert not r.valid.any()

    def test_constant_stream(self):
        x = proc.SampleStream(proc.Normal(), 3).sample(150)
        g = np.linspace(-3, 3, 31)
        s = reg.RegressionState.empty(g, kern.power_bandwidth(0.4))
        for xi in x.tolist():
            s = reg.recursive_regression_update(s, xi, 4.0, EPAN)
            r = reg.evaluate_ratio(s)
            np.testing.assert_allclose(r.values[r.valid], 4.0, rtol=1e-12)

    def test_weighted_mean_identity(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=100)
        y = np.sin(x) + rng.normal(size=100)
        g = np.linspace(-3, 3, 121)
        s = reg.RegressionState.empty(g, kern.power_bandwidth(0.35))
        worst = 0.0
        for a, b in zip(x.tolist(), y.tolist()):
            s = reg.recursive_regression_update(s, a, b, kern.builtin_kernel("cauchy"))
            worst = max(worst, reg.evaluate_ratio(s).meta["weighted_mean_deviation"])
        assert worst <= 1e-9

    def test_closed_form_sums(self):
        rng = np.random.default_rng(6)
        x, y = rng.normal(size=300), rng.normal(size=300)
        g = np.linspace(-3, 3, 61)
        bw = kern.power_bandwidth(0.4, 0.8)
        s = reg.recursive_regression(x, y, GAUSS, bw, g)
        num, den = reg.closed_form_sums(x, y, GAUSS, bw, g)
        np.testing.assert_allclose(s.q, num, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(s.phi, den, rtol=1e-10, atol=1e-12)

    @settings(max_examples=30)
    @given(pairs)
    def test_range_envelope_and_finiteness(self, data):
        x, y = np.array(data).T
        g = np.linspace(-4, 4, 33)
        r = reg.evaluate_ratio(reg.recursive_regression(x, y, EPAN, kern.power_bandwidth(0.4), g))
        v = r.values[r.valid]
        assert np.isfinite(v).all()
        assert np.all(v >= y.min() - 1e-9) and np.all(v <= y.max() + 1e-9)

    @settings(max_examples=30)
    @given(pairs, st.floats(-3, 3), st.floats(-5, 5))
    def test_recursive_affine(self, data, a, b):
        x, y = np.array(data).T
        g = np.linspace(-3, 3, 25)
        bw = kern.power_bandwidth(0.4)
        r1 = reg.evaluate_ratio(reg.recursive_regression(x, y, GAUSS, bw, g))
        r2 = reg.evaluate_ratio(reg.recursive_regression(x, a * y + b, GAUSS, bw, g))
        v = r1.valid & r2.valid
        np.testing.assert_allclose(r2.values[v], a * r1.values[v] + b, rtol=1e-9, atol=1e-9)

    def test_denominator_nonnegative(self):
        x = proc.SampleStream(MIXTURE, 0).sample(200)
        s = reg.recursive_regression(x, x, EPAN, kern.power_bandwidth(0.4), np.linspace(-4, 8, 97))
        assert np.all(s.phi >= 0)

    def test_rejects_nonfinite(self):
        s = reg.RegressionState.empty(np.linspace(0, 1, 5), kern.power_bandwidth(0.4))
        with pytest.raises(ValueError):
            reg.recursive_regression_update(s, 0.5, float("inf"), EPAN)

    def test_clipped_sine_vs_batch(self):
        n = 5000
        x = proc.SampleStream(MIXTURE, 0).sample(n)
        y = reg.clipped_sine(x) + proc.SampleStream(proc.Normal(), proc.mix_seed(0, 1)).sample(n)
        g = np.linspace(-1.5, 5.0, 261)
        k = kern.builtin_kernel("cauchy")
        rec = reg.evaluate_ratio(reg.recursive_regression(x, y, k, kern.power_bandwidth(0.35), g))
        bat = reg.batch_regression(x, y, k, n**-0.35, g)
        truth = reg.clipped_sine(g)
        l1 = lambda e: np.trapezoid(np.where(e.valid, np.abs(e.values - truth), 0.0), g)
        assert rec.valid.all() and bat.valid.all()
        assert l1(rec) <= 1.5 * l1(bat)


def test_truth_functions():
    assert reg.clipped_identity(np.array([-3.0, 0.2, 9.0])).tolist() == [-1.0, 0.2, 1.0]
    h = np.pi / 2
    v = reg.clipped_sine(np.array([-h - 1, 0.0, h, h + 1]))
    np.testing.assert_allclose(v, [-1.2, 0.0, 1.0, 1.2])
