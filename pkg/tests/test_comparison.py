import math

import numpy as np
import pytest

import driftflow as df
from driftflow.comparison import BoundCase, BoundCurve
from driftflow.errors import DomainError, HorizonError, OutOfRegimeError, UsageError

LOG2 = math.log(2.0)


class TestEigenvalueBound:
    def test_half_is_fixed(self):
        for s in (0.0, 0.1, 1.0, 5.0, 50.0):
            assert df.eigenvalue_bound(0.5, s) == 0.5

    def test_zero_lag_identity(self):
        for lam0 in (0.01, 0.3, 0.5, 0.9, 4.0):
            assert df.eigenvalue_bound(lam0, 0.0) == pytest.approx(lam0, rel=1e-15)

    def test_below_half_value(self):
        # frozen from RK4 integration of the equality case F' = (2F-1) F
        assert df.eigenvalue_bound(0.25, LOG2) == pytest.approx(1.0 / 6.0, rel=1e-14)
        assert df.integrate_equality_ode(0.25, LOG2, dt=1e-4) == pytest.approx(1.0 / 6.0, rel=1e-10)

    def test_above_half_value(self):
        expected = 1.0 / (2.0 - math.exp(0.5))
        assert df.eigenvalue_bound(1.0, 0.5) == pytest.approx(expected, rel=1e-14)
        assert df.integrate_equality_ode(1.0, 0.5, dt=2e-5) == pytest.approx(expected, rel=1e-10)

    def test_horizon_enforced(self):
        with pytest.raises(HorizonError) as err:
            df.eigenvalue_bound(1.0, LOG2)
        assert err.value.horizon == pytest.approx(LOG2, rel=1e-15)
        with pytest.raises(HorizonError):
            df.eigenvalue_bound(1.0, 10.0)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            df.eigenvalue_bound(0.0, 1.0)
        with pytest.raises(DomainError):
            df.eigenvalue_bound(0.3, -0.1)

    def test_monotone_in_lambda0(self):
        # keep s inside the validity interval of the largest lambda0 (1.2
        # blows up at log(2.4/1.4) ~ 0.539)
        for s in (0.05, 0.3, 0.5):
            values = [df.eigenvalue_bound(l, s) for l in (0.05, 0.15, 0.35, 0.5, 0.7, 1.2)]
            assert all(b > a for a, b in zip(values, values[1:]))

    def test_semigroup_property(self):
        for lam0 in (0.07, 0.3, 0.5, 0.9, 1.6):
            total = 0.5 * min(df.blowup_horizon(lam0), 4.0)
            for frac in (0.2, 0.5, 0.8):
                s1 = frac * total
                chained = df.eigenvalue_bound(df.eigenvalue_bound(lam0, s1), total - s1)
                direct = df.eigenvalue_bound(lam0, total)
                assert abs(chained - direct) <= 1e-12

    def test_strict_decrease_below_half(self):
        values = [df.eigenvalue_bound(0.3, s) for s in (0.0, 0.5, 1.0, 3.0)]
        assert all(b < a for a, b in zip(values, values[1:]))


class TestBlowupHorizon:
    def test_values(self):
        assert df.blowup_horizon(1.0) == pytest.approx(LOG2, abs=1e-15)
        assert df.blowup_horizon(0.5) == math.inf
        assert df.blowup_horizon(0.25) == math.inf

    def test_domain(self):
        with pytest.raises(DomainError):
            df.blowup_horizon(0.0)


class TestBoundCurve:
    def test_case_tags(self):
        assert BoundCurve.from_lambda0(0.2).case is BoundCase.BELOW_HALF
        assert BoundCurve.from_lambda0(0.5).case is BoundCase.AT_HALF
        assert BoundCurve.from_lambda0(0.8).case is BoundCase.ABOVE_HALF

    def test_samples_fill_inf_past_horizon(self):
        curve = BoundCurve.from_lambda0(1.0)
        vals = curve.samples([0.0, 0.5, 1.0])
        assert vals[0] == pytest.approx(1.0)
        assert math.isinf(vals[2])


class TestLinearComparison:
    def test_trivial(self):
        assert df.linear_comparison(0.0, 1.0, 2.0) == 2.0
        assert df.linear_comparison(3.0, 0.0, 5.0) == 3.0

    def test_sine_below_its_envelope(self):
        for s in np.linspace(0.0, 3.0, 40):
            assert math.sin(s) <= df.linear_comparison(0.0, 1.0, s) + 1e-15


class TestLogisticEnvelope:
    def test_trapped_at_one(self):
        for s in (0.0, 0.3, 2.0, 20.0):
            assert df.logistic_envelope(1.0, s) == 1.0

    def test_zero_lag(self):
        for h0 in (0.0, 0.4, 1.0):
            assert df.logistic_envelope(h0, 0.0) == pytest.approx(h0)

    def test_value(self):
        assert df.logistic_envelope(0.5, LOG2) == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_strictly_below_start(self):
        for h0 in (0.2, 0.8, 0.99):
            assert df.logistic_envelope(h0, 1e-6) < h0

    def test_regime_errors(self):
        with pytest.raises(OutOfRegimeError):
            df.logistic_envelope(1.2, 0.1)
        with pytest.raises(DomainError):
            df.logistic_envelope(-0.1, 0.1)


class TestForwardDiffCheck:
    def test_constant_series_passes_with_zero_slack(self):
        verdict = df.forward_diff_check(np.zeros(10), lambda t, v: 0.0, dt=0.1, slack=0.0)
        assert verdict.passed
        assert verdict.max_excess <= 0.0

    def test_growing_series_fails(self):
        series = np.exp(np.linspace(0.0, 1.0, 50))
        verdict = df.forward_diff_check(series, lambda t, v: 0.0, dt=1.0 / 49.0)
        assert not verdict.passed
        assert verdict.max_excess > 0.5

    def test_sharp_series_is_equality_case(self):
        dt = 1e-5
        s = np.arange(0.0, 0.5, dt)
        lam = 0.25 / (2.0 * 0.25 * (1.0 - np.exp(s)) + np.exp(s))
        verdict = df.forward_diff_check(lam, lambda t, v: (2.0 * v - 1.0) * v, dt=dt, slack=1e-6)
        assert verdict.passed
        assert verdict.max_excess < 1e-6

    def test_too_few_samples(self):
        with pytest.raises(UsageError):
            df.forward_diff_check([1.0, 2.0], lambda t, v: 0.0, dt=0.1)

    def test_chain_rule_consistency(self):
        # if the raw quotients satisfy h' <= h(h-1), the transformed series
        # log(h/(1-h)) satisfies quotients <= -1 as well
        dt = 1e-4
        ts = np.arange(0.0, 2.0, dt)
        for h0 in (0.3, 0.7, 0.95):
            h = np.array([df.logistic_envelope(h0, t) for t in ts])
            raw = df.forward_diff_check(h, lambda t, v: v * (v - 1.0), dt, slack=1e-5)
            transformed = df.forward_diff_check(np.log(h / (1.0 - h)), lambda t, v: -1.0, dt, slack=1e-5)
            assert (not raw.passed) or transformed.passed
            assert raw.passed and transformed.passed  # both hold at this slack


class TestEnvelopeDominatesDampedSolutions:
    def test_seeded_rk4_solutions_stay_below(self):
        rng = np.random.default_rng(5)
        dt = 1e-3
        for _ in range(25):
            h0 = rng.random()
            c0, c1 = rng.random(), rng.random()
            omega, phase = 1.0 + 4.0 * rng.random(), 2.0 * math.pi * rng.random()
            r = lambda t: c0 + 0.5 * c1 * (1.0 + math.sin(omega * t + phase))
            h, t = h0, 0.0
            for step in range(2000):
                k1 = h * (h - 1.0) - r(t)
                y2 = h + 0.5 * dt * k1
                k2 = y2 * (y2 - 1.0) - r(t + 0.5 * dt)
                y3 = h + 0.5 * dt * k2
                k3 = y3 * (y3 - 1.0) - r(t + 0.5 * dt)
                y4 = h + dt * k3
                k4 = y4 * (y4 - 1.0) - r(t + dt)
                h += (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                t += dt
                if h < 0.0:
                    break
                if step % 20 == 19:
                    assert h <= df.logistic_envelope(h0, t) + 1e-9
