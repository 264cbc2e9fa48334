import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given
from hypothesis import strategies as st

from iterlab import processes as proc
from iterlab import sa
from iterlab.recursion import (
    kronecker_check,
    max_bound_check,
    podstawowy_check,
    recur_trace,
    robbins_monro_bound_sequences,
    verify_basic_identity,
)
from iterlab.summability import StepSequence


class TestRecurTrace:
    def test_fixed_point(self):
        tr = recur_trace(np.full(50, 2.0), StepSequence.power(0.7), 5.0, 50)
        np.testing.assert_array_equal(tr.values[1:], 2.0)

    def test_running_mean(self):
        b = np.arange(1, 101, dtype=float)
        tr = recur_trace(b, StepSequence.harmonic(), 0.0, 100)
        n = np.arange(1, 101)
        np.testing.assert_allclose(tr.values[1:], (n + 1) / 2, rtol=1e-13)

    def test_callable_source(self):
        tr = recur_trace(lambda n: n + 1.0, StepSequence.harmonic(), 0.0, 10)
        assert tr.final[0] == pytest.approx(5.5)

    def test_vector_source(self):
        b = np.tile([1.0, -1.0], (20, 1))
        tr = recur_trace(b, StepSequence.harmonic(), 0.0, 20)
        assert tr.dim == 2
        np.testing.assert_allclose(tr.final, [1.0, -1.0])

    def test_nonfinite_freezes(self):
        b = np.ones(10)
        b[4] = np.inf
        tr = recur_trace(b, StepSequence.harmonic(), 0.0, 10)
        assert tr.diverged and len(tr) == 5

    def test_short_source(self):
        with pytest.raises(ValueError):
            recur_trace(np.ones(3), StepSequence.harmonic(), 0.0, 5)

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=200), st.floats(-100, 100),
           st.floats(0.05, 0.95))
    def test_convex_hull(self, b, x0, q):
        tr = recur_trace(b, StepSequence.constant(q), x0, len(b))
        lo, hi = min(x0, min(b)), max(x0, max(b))
        assert np.all(tr.values >= lo - 1e-9) and np.all(tr.values <= hi + 1e-9)


class TestBasicIdentity:
    def test_exact_rational_run(self):
        # the same recursion in exact arithmetic leaves zero residual
        b = [Fraction(k % 7, 3) for k in range(30)]
        mu = [Fraction(1, k + 1) for k in range(30)]
        x = [Fraction(0)]
        for n in range(30):
            x.append((1 - mu[n]) * x[n] + mu[n] * b[n])
        N, M = 3, 25
        r = x[M + 1] - x[N] + sum(mu[n] * x[n] for n in range(N, M + 1)) \
            - sum(mu[n] * b[n] for n in range(N, M + 1))
        assert r == 0
        tr = recur_trace([float(v) for v in b], StepSequence.harmonic(), 0.0, 30)
        assert verify_basic_identity(tr, [float(v) for v in b], StepSequence.harmonic(), N, M) < 1e-13

    def test_random_long_run(self):
        b = np.random.default_rng(5).normal(size=10_000)
        steps = StepSequence.power(0.6)
        tr = recur_trace(b, steps, 1.0, 10_000)
        assert verify_basic_identity(tr, b, steps, 0, 9_999) <= 1e-8

    def test_single_step(self):
        b = np.random.default_rng(2).normal(size=20)
        tr = recur_trace(b, StepSequence.harmonic(), 0.3, 20)
        for n in range(20):
            assert verify_basic_identity(tr, b, StepSequence.harmonic(), n, n) < 1e-15

    def test_bad_indices(self):
        tr = recur_trace(np.ones(5), StepSequence.harmonic(), 0.0, 5)
        with pytest.raises(IndexError):
            verify_basic_identity(tr, np.ones(5), StepSequence.harmonic(), 3, 2)


class TestMaxBound:
    def test_zero(self):
        r = max_bound_check(np.zeros(50), np.zeros(49), np.full(49, 0.9))
        assert r.first_violation is None and r.lim_inf_estimate == 0.0

    def test_spike(self):
        d = 0.5 ** np.arange(20)
        d[7] = 10.0
        r = max_bound_check(d, np.zeros(19), np.full(19, 0.9))
        assert r.first_violation == 7

    def test_negative_input(self):
        with pytest.raises(ValueError):
            max_bound_check([1.0, -1.0], [0.0], [1.0])

    def test_robbins_monro_run_respects_bound(self):
        """Re-run the squared-distance inequality of the convergence argument."""
        theta, delta = 1.0, 1.0
        prob = sa.SAProblem(1, sa.drift_from_config("linear", theta=theta), proc.Normal(), theta=theta)
        H = 2000
        steps = StepSequence.harmonic(0.5)
        tr = sa.robbins_monro(prob, sa.StepPlan(steps), [4.0], H, seed=3)
        xi = tr.meta["noise"][:, 0]
        d2, e2, lam = robbins_monro_bound_sequences(tr.values, xi, steps.prefix(H), theta,
                                                    delta=delta, kappa1=1.0, kappa2=0.0)
        r = max_bound_check(d2, e2, lam)
        assert r.first_violation is None
        assert r.max_ratio <= 1.0


class TestKronecker:
    def test_convergent(self):
        n = np.arange(1, 10_001, dtype=float)
        r = kronecker_check(1 / n**2, n)
        assert r.series_cauchy and r.m_small and r.consistent

    def test_harmonic(self):
        n = np.arange(1, 10_001, dtype=float)
        r = kronecker_check(np.ones_like(n), n)
        assert not r.series_cauchy
        assert r.m[-1] == pytest.approx(1.0)

    def test_zero(self):
        n = np.arange(1, 101, dtype=float)
        r = kronecker_check(np.zeros(100), n)
        assert not r.series.any() and not r.m.any() and not r.transformed.any()

    def test_bad_scaling(self):
        with pytest.raises(ValueError):
            kronecker_check(np.ones(3), np.array([1.0, 1.0, 2.0]))


def test_podstawowy_direction():
    b = np.random.default_rng(8).normal(size=20_000)
    out = podstawowy_check(b, StepSequence.harmonic(), 20_000, tau=0.05)
    assert out["b_series_cauchy"]
    assert abs(out["x_final"]) < 0.05
