"""Evaluators for the mean-square-boundedness sufficient conditions.

Covers the single-controller re-init condition, the re-init + detector
condition, the n-controller switching condition, the minimum-healthy-
controller bound, the closed-form special cases, and the piecewise
Bellman-Gronwall bound envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certificate import CertificateConstants
from .errors import DenominatorNonpositive, TooManyControllers
from .stochastics import (
    ExpectationResult,
    TruncatedGaussian,
    expect_clipped_exp,
    expect_clipped_exp_mc,
    expect_joint_detection,
    expect_joint_detection_mc,
)

# Labels for the envelope segments (re-init defense timeline order).
AUTH = "auth"
NORMAL = "normal"
ATTACKED = "attacked"
SILENCED = "silenced"
REINIT = "reinit"


@dataclass(frozen=True)
class ConditionVerdict:
    """Result of one sufficient-condition evaluation (satisfied iff value < 1)."""

    theorem: str
    value: float
    satisfied: bool
    abs_err_est: float
    inputs: dict
    mc_value: float | None = None
    mc_err: float | None = None

    def to_dict(self) -> dict:
        d = {
            "theorem": self.theorem,
            "value": self.value,
            "satisfied": self.satisfied,
            "method": "quadrature",
            "abs_err_est": self.abs_err_est,
            "inputs": self.inputs,
        }
        if self.mc_value is not None:
            d["mc_value"] = self.mc_value
            d["mc_err"] = self.mc_err
            d["mc_discrepancy"] = abs(self.value - self.mc_value)
        return d


def _rates(cert: CertificateConstants) -> tuple[float, float]:
    if cert.lambda_decay is None or cert.lambda_attack is None:
        raise ValueError("certificate has no rates; use build_certificate")
    return cert.lambda_decay, cert.lambda_attack


def check_reboot(
    cert: CertificateConstants,
    dist_a: TruncatedGaussian,
    T0: float,
    t_r: float,
    t_c: float,
    mc_samples: int = 0,
    rng: np.random.Generator | None = None,
) -> ConditionVerdict:
    """Single-controller periodic re-initialization condition."""
    if T0 <= t_c:
        raise ValueError("require T0 > t_c")
    lam, lam_a = _rates(cert)
    res = expect_clipped_exp(dist_a, T0 - t_c, lam + lam_a, lam_a * (T0 + t_r))
    mc = None
    if mc_samples > 0:
        mc = expect_clipped_exp_mc(
            dist_a, T0 - t_c, lam + lam_a, lam_a * (T0 + t_r), mc_samples, rng or np.random.default_rng(0)
        )
    return ConditionVerdict(
        theorem="T1_Reboot",
        value=res.value,
        satisfied=res.value < 1.0,
        abs_err_est=res.abs_err_est,
        inputs={"T0": T0, "t_r": t_r, "t_c": t_c, "lambda": lam, "lambda_a": lam_a},
        mc_value=None if mc is None else mc.value,
        mc_err=None if mc is None else mc.abs_err_est,
    )


def check_anomaly(
    cert: CertificateConstants,
    dist_a: TruncatedGaussian,
    dist_d: TruncatedGaussian,
    T0: float,
    t_r: float,
    t_c: float,
    mc_samples: int = 0,
    rng: np.random.Generator | None = None,
) -> ConditionVerdict:
    """Re-initialization + anomaly-detector condition."""
    lam, lam_a = _rates(cert)
    res = expect_joint_detection(dist_a, dist_d, T0, t_c, t_r, lam, lam_a)
    mc = None
    if mc_samples > 0:
        mc = expect_joint_detection_mc(
            dist_a, dist_d, T0, t_c, t_r, lam, lam_a, mc_samples, rng or np.random.default_rng(0)
        )
    return ConditionVerdict(
        theorem="T2_Anomaly",
        value=res.value,
        satisfied=res.value < 1.0,
        abs_err_est=res.abs_err_est,
        inputs={"T0": T0, "t_r": t_r, "t_c": t_c, "lambda": lam, "lambda_a": lam_a},
        mc_value=None if mc is None else mc.value,
        mc_err=None if mc is None else mc.abs_err_est,
    )


def check_switching(
    cert: CertificateConstants,
    dist_a: TruncatedGaussian,
    n: int,
    t_r: float,
    t_c: float,
    mc_samples: int = 0,
    rng: np.random.Generator | None = None,
) -> ConditionVerdict:
    """n-controller round-robin switching condition (working period t_r/(n-1))."""
    if n < 2:
        raise ValueError("switching requires n >= 2")
    if n >= 1.0 + t_r / t_c:
        raise TooManyControllers(f"n = {n} >= 1 + t_r/t_c = {1.0 + t_r / t_c}")
    lam, lam_a = _rates(cert)
    T0 = t_r / (n - 1)
    res = expect_clipped_exp(dist_a, T0 - t_c, lam + lam_a, lam_a * T0)
    mc = None
    if mc_samples > 0:
        mc = expect_clipped_exp_mc(
            dist_a, T0 - t_c, lam + lam_a, lam_a * T0, mc_samples, rng or np.random.default_rng(0)
        )
    return ConditionVerdict(
        theorem="T3_Switching",
        value=res.value,
        satisfied=res.value < 1.0,
        abs_err_est=res.abs_err_est,
        inputs={"n": n, "T0": T0, "t_r": t_r, "t_c": t_c, "lambda": lam, "lambda_a": lam_a},
        mc_value=None if mc is None else mc.value,
        mc_err=None if mc is None else mc.abs_err_est,
    )


@dataclass(frozen=True)
class MinHealthyResult:
    """Smallest n_1 such that n_1 healthy (finite re-init) controllers suffice."""

    min_n1: int
    raw_bound: float
    expectation: float
    simple_min_n1: int
    simple_bound: float


def min_healthy_controllers(
    cert: CertificateConstants,
    dist_a: TruncatedGaussian,
    n: int,
    t_r: float,
    t_c: float = 0.0,
) -> MinHealthyResult:
    """Minimum number of controllers with finite re-init time out of n.

    Also reports the simplified bound for the never-compromised case
    (attack time pinned to the full working period).
    """
    if n < 2:
        raise ValueError("requires n >= 2")
    lam, lam_a = _rates(cert)
    T0 = t_r / (n - 1)
    res = expect_clipped_exp(dist_a, T0 - t_c, lam + lam_a, lam_a * T0)
    denom = T0 * lam_a - math.log(res.value)
    if denom <= 0.0:
        raise DenominatorNonpositive(
            f"T0*lambda_a - ln E = {denom:.6g} <= 0: all-healthy bank already fails"
        )
    raw = lam_a * n * T0 / denom
    simple = lam_a / (lam + lam_a) * n
    # strict inequality with a small slack against float boundary flips
    min_n1 = int(math.floor(raw + 1e-12)) + 1
    simple_min = int(math.floor(simple + 1e-12)) + 1
    return MinHealthyResult(min_n1, raw, res.value, simple_min, simple)


def reboot_no_attack_threshold(cert: CertificateConstants, t_c: float, t_r: float) -> float:
    """Working period above which a never-attacked single controller is bounded."""
    lam, lam_a = _rates(cert)
    return t_c + (lam_a / lam) * (t_c + t_r)


def constant_time_anomaly_value(
    lam: float, lam_a: float, mu_a: float, mu_d: float, t_r: float, t_c: float
) -> float:
    """Closed-form detector condition value for constant attack/detection times."""
    return math.exp(-lam * mu_a + lam_a * (mu_d + t_r + t_c))


def max_persistent_compromised(lam: float, lam_a: float, n: int) -> int:
    """Largest number of instantaneously, unremovably compromised controllers tolerated."""
    bound = lam / (lam + lam_a) * n
    m = int(math.floor(bound))
    if float(m) == bound:
        m -= 1
    return m


@dataclass(frozen=True)
class EnvelopeSegment:
    """One leg of the piecewise bound: dV/dt <= rate * V + forcing."""

    duration: float
    rate: float
    forcing: float
    label: str


def reboot_period_segments(
    cert: CertificateConstants, T0: float, t_c: float, t_r: float, t_a: float
) -> list[EnvelopeSegment]:
    """Segment schedule for one auth/normal/attacked/re-init period."""
    lam, lam_a = _rates(cert)
    f_w2 = cert.eps_b / 4.0 * cert.w_max**2
    f_w1 = cert.eps / 4.0 * cert.w_max**2
    f_u = cert.eps_a / 4.0 * cert.u_max**2
    return [
        EnvelopeSegment(t_c, lam_a, f_w2, AUTH),
        EnvelopeSegment(t_a, -lam, f_w1, NORMAL),
        EnvelopeSegment(T0 - t_a - t_c, lam_a, f_u + f_w2, ATTACKED),
        EnvelopeSegment(t_r, lam_a, f_w2, REINIT),
    ]


@dataclass(frozen=True)
class EnvelopeResult:
    t: np.ndarray
    vbar: np.ndarray
    end_value: float


def propagate_envelope(
    segments: list[EnvelopeSegment], V0: float, dt: float
) -> EnvelopeResult:
    """Compose per-segment Bellman-Gronwall bounds, sampled on the dt grid.

    Within a segment, V(tau) <= V_s * e^(r*tau) + f * (e^(r*tau) - 1) / r
    (f * tau for r = 0); segment boundaries are snapped to grid multiples.
    """
    if V0 < 0.0:
        raise ValueError("V0 must be nonnegative")
    ts = [0.0]
    vs = [V0]
    t_acc = 0.0
    v = V0
    for seg in segments:
        if seg.duration < 0.0:
            raise ValueError("segment duration must be nonnegative")
        n_steps = int(round(seg.duration / dt))
        for i in range(1, n_steps + 1):
            tau = i * dt
            if seg.rate == 0.0:
                vi = v + seg.forcing * tau
            else:
                g = math.exp(seg.rate * tau)
                vi = v * g + seg.forcing * (g - 1.0) / seg.rate
            ts.append(t_acc + tau)
            vs.append(vi)
        t_acc += n_steps * dt
        v = vs[-1]
    return EnvelopeResult(np.asarray(ts), np.asarray(vs), v)
