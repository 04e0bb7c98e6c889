"""Resilient multi-controller switching defense toolkit.

Simulates attacked closed-loop plants under re-initialization, anomaly
detection, and round-robin controller switching, and evaluates the
mean-square-boundedness sufficient conditions for those defenses.
"""

from .certificate import (
    CertificateConstants,
    ConstantsMode,
    build_certificate,
    compute_rates,
    derive_constants,
    solve_lyapunov,
)
from .engine import Scenario, ensemble, rk4_step, run, single_period_run
from .models import (
    LinearThirdOrder,
    PlantModel,
    SmibParams,
    smib_model,
    third_order_model,
)
from .runtime import (
    AttackConfig,
    AttackMode,
    DefenseKind,
    DefenseMode,
    DetectorConfig,
    Gate,
    SlotStatus,
    Supervisor,
)
from .stochastics import TruncatedGaussian

__version__ = "0.1.0"
