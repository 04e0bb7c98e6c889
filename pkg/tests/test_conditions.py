"""Boundedness-condition evaluators: frozen oracle values, closed forms,
integer bounds, and the piecewise bound envelope."""

import dataclasses
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from resilex import conditions
from resilex.certificate import ConstantsMode, build_certificate
from resilex.errors import DenominatorNonpositive, TooManyControllers
from resilex.models import third_order_model
from resilex.stochastics import TruncatedGaussian

ATTACK_DIST = TruncatedGaussian(0.0, 1.0, 0.1, 0.1)
DETECT_DIST = TruncatedGaussian(0.0, 1.0, 0.1, 1.0)


@pytest.fixture(scope="module")
def cert():
    return build_certificate(third_order_model(), ConstantsMode.PAPER)


def point_mass(value: float, half_width: float = 1e-8) -> TruncatedGaussian:
    return TruncatedGaussian(value - half_width, value + half_width, value, 1.0)


class TestVerdictValues:
    """Regression values frozen from the quadrature/Monte-Carlo oracle pair."""

    def test_reboot_value(self, cert):
        v = conditions.check_reboot(cert, ATTACK_DIST, T0=1.0, t_r=1.0, t_c=0.01)
        assert v.value == pytest.approx(8.062475175917259, rel=1e-9)
        assert not v.satisfied
        assert v.theorem == "T1_Reboot"

    def test_anomaly_value(self, cert):
        v = conditions.check_anomaly(
            cert, ATTACK_DIST, DETECT_DIST, T0=1.0, t_r=1.0, t_c=0.01
        )
        assert v.value == pytest.approx(5.331389142799449, rel=1e-9)
        assert not v.satisfied

    def test_switching_values_and_ordering(self, cert):
        v4 = conditions.check_switching(cert, ATTACK_DIST, n=4, t_r=1.0, t_c=0.01)
        v11 = conditions.check_switching(cert, ATTACK_DIST, n=11, t_r=1.0, t_c=0.01)
        assert v4.value == pytest.approx(1.2370517158332779, rel=1e-9)
        assert v11.value == pytest.approx(1.0150673981417022, rel=1e-9)
        v1 = conditions.check_reboot(cert, ATTACK_DIST, T0=1.0, t_r=1.0, t_c=0.01)
        assert v11.value < v4.value < v1.value

    def test_monte_carlo_cross_check_attached(self, cert):
        rng = np.random.default_rng(3)
        v = conditions.check_reboot(
            cert, ATTACK_DIST, 1.0, 1.0, 0.01, mc_samples=200_000, rng=rng
        )
        assert v.mc_value is not None
        assert abs(v.value - v.mc_value) <= max(v.mc_err, 5e-3 * v.value)
        d = v.to_dict()
        assert {"theorem", "value", "satisfied", "method", "inputs"} <= set(d)
        assert "mc_discrepancy" in d

    def test_too_many_controllers(self, cert):
        with pytest.raises(TooManyControllers):
            conditions.check_switching(cert, ATTACK_DIST, n=101, t_r=1.0, t_c=0.01)
        with pytest.raises(ValueError):
            conditions.check_switching(cert, ATTACK_DIST, n=1, t_r=1.0, t_c=0.01)


class TestClosedForms:
    def test_undetected_worst_case_reduces_to_reboot(self, cert):
        """A detector whose delay always exceeds the window is no detector."""
        never = TruncatedGaussian(10.0, 11.0, 10.5, 1.0)
        a = conditions.check_anomaly(cert, ATTACK_DIST, never, 1.0, 1.0, 0.01)
        b = conditions.check_reboot(cert, ATTACK_DIST, 1.0, 1.0, 0.01)
        assert a.value == pytest.approx(b.value, rel=1e-9)

    @pytest.mark.parametrize(
        "mu_a,mu_d,t_r,t_c",
        [
            (0.5, 0.01, 1.0, 0.01),
            (0.3, 0.05, 0.5, 0.02),
            (0.8, 0.1, 0.2, 0.01),
            (0.2, 0.02, 1.5, 0.05),
            (0.6, 0.005, 0.35, 0.05),
        ],
    )
    def test_constant_time_closed_form(self, cert, mu_a, mu_d, t_r, t_c):
        lam, lam_a = cert.lambda_decay, cert.lambda_attack
        expected = conditions.constant_time_anomaly_value(lam, lam_a, mu_a, mu_d, t_r, t_c)
        # choose T0 large enough that neither clip binds
        T0 = mu_a + mu_d + t_c + 1.0
        v = conditions.check_anomaly(
            cert, point_mass(mu_a), point_mass(mu_d), T0, t_r, t_c
        )
        assert v.value == pytest.approx(expected, abs=1e-6)
        assert expected == pytest.approx(
            math.exp(-lam * mu_a + lam_a * (mu_d + t_r + t_c))
        )

    def test_no_attack_threshold_flip(self, cert):
        """Without attacks the verdict flips exactly at the closed-form T0."""
        t_c, t_r = 0.01, 1.0
        T0_star = conditions.reboot_no_attack_threshold(cert, t_c, t_r)
        lam, lam_a = cert.lambda_decay, cert.lambda_attack
        assert T0_star == pytest.approx(t_c + (lam_a / lam) * (t_c + t_r))
        never_attacked = TruncatedGaussian(100.0, 101.0, 100.5, 1.0)
        lo = conditions.check_reboot(cert, never_attacked, T0_star - 1e-6, t_r, t_c)
        hi = conditions.check_reboot(cert, never_attacked, T0_star + 1e-6, t_r, t_c)
        assert not lo.satisfied
        assert hi.satisfied

    def test_max_persistent_compromised(self):
        assert conditions.max_persistent_compromised(1.0, 1.0, 10) == 4
        assert conditions.max_persistent_compromised(1.0, 1.0, 11) == 5
        assert conditions.max_persistent_compromised(0.18, 1.125, 11) == 1


class TestMinHealthy:
    def test_equal_rates_simple_bound(self, cert):
        balanced = dataclasses.replace(cert, lambda_attack=cert.lambda_decay)
        r = conditions.min_healthy_controllers(
            balanced, TruncatedGaussian(0.0, 10.0, 5.0, 0.1), n=10, t_r=1.0
        )
        assert r.simple_bound == pytest.approx(5.0)
        assert r.simple_min_n1 == 6

    def test_benchmark_n11_regression_and_brute_force(self, cert):
        r = conditions.min_healthy_controllers(cert, ATTACK_DIST, n=11, t_r=1.0, t_c=0.01)
        assert r.min_n1 == 13
        assert r.raw_bound == pytest.approx(12.686, abs=1e-2)
        # brute force on the per-rotation product: E^n1 * (e^{lam_a*T0})^(n-n1) < 1
        lam_a = cert.lambda_attack
        T0 = 1.0 / 10.0
        brute = next(
            n1
            for n1 in range(1, 200)
            if r.expectation**n1 * math.exp(lam_a * T0) ** (11 - n1) < 1.0
        )
        assert brute == r.min_n1

    def test_brute_force_on_satisfiable_setting(self, cert):
        slow = TruncatedGaussian(0.0, 1.0, 0.9, 0.05)  # attacks arrive late
        r = conditions.min_healthy_controllers(cert, slow, n=4, t_r=1.0, t_c=0.01)
        lam_a = cert.lambda_attack
        T0 = 1.0 / 3.0
        brute = next(
            n1
            for n1 in range(1, 200)
            if r.expectation**n1 * math.exp(lam_a * T0) ** (4 - n1) < 1.0
        )
        assert brute == r.min_n1
        assert r.min_n1 <= 4

    def test_denominator_nonpositive(self, cert):
        # authentication eats the whole working period -> attack time pinned
        # at zero -> the bound's denominator collapses to 0
        with pytest.raises(DenominatorNonpositive):
            conditions.min_healthy_controllers(
                cert, ATTACK_DIST, n=4, t_r=1.0, t_c=0.35
            )


class TestEnvelope:
    def test_pure_decay_segment(self, cert):
        lam = cert.lambda_decay
        seg = conditions.EnvelopeSegment(1.0, -lam, 0.0, conditions.NORMAL)
        env = conditions.propagate_envelope([seg], V0=2.0, dt=0.01)
        assert env.vbar[0] == 2.0
        assert np.allclose(env.vbar, 2.0 * np.exp(-lam * env.t), rtol=1e-12)

    def test_period_multiplier_matches_composed_exponent(self, cert):
        lam, lam_a = cert.lambda_decay, cert.lambda_attack
        T0, t_c, t_r, t_a = 1.0, 0.01, 1.0, 0.2
        segs = [
            dataclasses.replace(s, forcing=0.0)
            for s in conditions.reboot_period_segments(cert, T0, t_c, t_r, t_a)
        ]
        env = conditions.propagate_envelope(segs, V0=1.0, dt=1e-3)
        expected = math.exp(-lam * t_a + lam_a * (T0 - t_a + t_r))
        assert env.end_value == pytest.approx(expected, rel=1e-12)

    def test_segment_schedule_shape(self, cert):
        segs = conditions.reboot_period_segments(cert, 1.0, 0.01, 1.0, 0.2)
        assert [s.label for s in segs] == [
            conditions.AUTH,
            conditions.NORMAL,
            conditions.ATTACKED,
            conditions.REINIT,
        ]
        assert sum(s.duration for s in segs) == pytest.approx(2.0)
        for s in segs:
            assert s.rate in (-cert.lambda_decay, cert.lambda_attack)

    def test_envelope_matches_scalar_ode_oracle(self, cert):
        segs = conditions.reboot_period_segments(cert, 1.0, 0.01, 1.0, 0.2)
        env = conditions.propagate_envelope(segs, V0=134.75, dt=1e-3)
        v = 134.75
        for seg in segs:
            sol = solve_ivp(
                lambda t, y, r=seg.rate, f=seg.forcing: [r * y[0] + f],
                (0.0, seg.duration),
                [v],
                rtol=1e-12,
                atol=1e-12,
            )
            v = float(sol.y[0, -1])
        assert env.end_value == pytest.approx(v, rel=1e-6)

    def test_invalid_inputs(self, cert):
        with pytest.raises(ValueError):
            conditions.propagate_envelope([], V0=-1.0, dt=0.1)
        bad = conditions.EnvelopeSegment(-0.5, 1.0, 0.0, conditions.AUTH)
        with pytest.raises(ValueError):
            conditions.propagate_envelope([bad], V0=1.0, dt=0.1)

    def test_growth_bound_on_undefended_attack(self, cert):
        """Scalar envelope growth never exceeds the attack rate."""
        lam_a = cert.lambda_attack
        seg = conditions.EnvelopeSegment(5.0, lam_a, 1.0, conditions.ATTACKED)
        env = conditions.propagate_envelope([seg], V0=1.0, dt=1e-2)
        logs = np.log(env.vbar + 1.0) - math.log(2.0)
        assert np.all(logs <= lam_a * env.t + 1e-9)
