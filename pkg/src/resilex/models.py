"""Plant models: the linear third-order benchmark and the SMIB power system.

State vectors are plain tuples of floats; the simulation inner loop is pure
Python arithmetic, which is considerably faster than numpy for 3-vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateAngle

StateVec = Sequence[float]


@dataclass(frozen=True)
class PlantModel:
    """A continuous-time plant with a scalar control input and scalar disturbance.

    ``nominal_control`` is the raw control law; clamping to ``u_max`` is the
    engine's responsibility.  ``derivative`` must be deterministic and pure.
    """

    name: str
    state_dim: int
    derivative: Callable[[StateVec, float, float, float], tuple]
    disturbance: Callable[[float], float]
    nominal_control: Callable[[StateVec], float]
    u_max: float
    equilibrium: tuple
    initial_state: tuple


@dataclass(frozen=True)
class LinearThirdOrder:
    """Parameters of the third-order benchmark system.

    The open-loop structure is fixed: x1' = x2, x2' = -x2 + sin(0.1 x1) w + x3,
    x3' = -x3 + u.  The default gain places all closed-loop poles at -3.
    """

    K: tuple = (-27.0, -19.0, -7.0)
    x0: tuple = (5.0, 2.0, 2.0)
    u_max: float = 10.0
    w_amplitude: float = 1.0
    w_frequency: float = 0.2

    @property
    def A(self) -> np.ndarray:
        return np.array([[0.0, 1.0, 0.0], [0.0, -1.0, 1.0], [0.0, 0.0, -1.0]])

    @property
    def B(self) -> np.ndarray:
        return np.array([0.0, 0.0, 1.0])

    @property
    def A_closed(self) -> np.ndarray:
        return self.A + np.outer(self.B, np.asarray(self.K))


@dataclass(frozen=True)
class SmibParams:
    """Single-machine infinite-bus parameters (per-unit unless noted)."""

    P_m0: float = 0.9
    omega0: float = 314.159
    T_d0: float = 6.9
    D: float = 5.0
    H: float = 4.0
    V_s: float = 1.0
    x_d: float = 1.863
    x_d1: float = 0.257
    x_ds: float = 2.2327
    x_ds1: float = 0.6267
    K: tuple = (19.3, 6.43, -47.6)
    delta0: float = 1.309
    u_max: float = 2.3
    x0: tuple = (1.0, 1.0, 1.0)
    w_amplitude: float = 0.01
    w_frequency: float = math.pi / 2.0

    def __post_init__(self):
        if not (self.x_ds > self.x_ds1 > 0.0):
            raise ValueError("require x_ds > x_ds1 > 0")
        if self.H <= 0.0 or self.T_d0 <= 0.0:
            raise ValueError("require H > 0 and T_d0 > 0")


def third_order_model(params: LinearThirdOrder = LinearThirdOrder()) -> PlantModel:
    """Build the third-order benchmark plant with its state-feedback law."""
    k1, k2, k3 = params.K
    amp = params.w_amplitude
    freq = params.w_frequency

    def derivative(x: StateVec, u: float, w: float, t: float) -> tuple:
        x1, x2, x3 = x
        return (x2, -x2 + math.sin(0.1 * x1) * w + x3, -x3 + u)

    def disturbance(t: float) -> float:
        return amp * math.sin(freq * t)

    def nominal_control(x: StateVec) -> float:
        return k1 * x[0] + k2 * x[1] + k3 * x[2]

    return PlantModel(
        name="third_order",
        state_dim=3,
        derivative=derivative,
        disturbance=disturbance,
        nominal_control=nominal_control,
        u_max=params.u_max,
        equilibrium=(0.0, 0.0, 0.0),
        initial_state=tuple(float(v) for v in params.x0),
    )


def smib_equilibrium_emf(p: SmibParams) -> float:
    """Transient EMF E_q1* at the operating point (P_e = P_m0 at delta0)."""
    e_q = p.P_m0 * p.x_ds / (p.V_s * math.sin(p.delta0))
    return (p.x_ds1 * e_q + (p.x_d - p.x_d1) * p.V_s * math.cos(p.delta0)) / p.x_ds


def smib_algebraics(p: SmibParams, delta: float, e_q1: float) -> tuple:
    """Return (E_q, P_e) from the two algebraic network equations."""
    e_q = (p.x_ds / p.x_ds1) * e_q1 - ((p.x_d - p.x_d1) / p.x_ds1) * p.V_s * math.cos(delta)
    p_e = p.V_s * e_q * math.sin(delta) / p.x_ds
    return e_q, p_e


def smib_model(params: SmibParams = SmibParams()) -> PlantModel:
    """Build the SMIB plant with the feedback-linearizing excitation law.

    The disturbance argument w of ``derivative`` is the EMF disturbance
    term (the model's ``disturbance`` evaluates 0.01 cos(pi t / 2)).
    """
    p = params
    k1, k2, k3 = p.K
    t_d01 = (p.x_ds1 / p.x_ds) * p.T_d0

    def derivative(x: StateVec, u: float, w: float, t: float) -> tuple:
        delta, omega, e_q1 = x
        e_q = (p.x_ds / p.x_ds1) * e_q1 - ((p.x_d - p.x_d1) / p.x_ds1) * p.V_s * math.cos(delta)
        p_e = p.V_s * e_q * math.sin(delta) / p.x_ds
        return (
            omega,
            (-p.D * omega + p.omega0 * (p.P_m0 - p_e)) / (2.0 * p.H),
            (u - e_q - w) / p.T_d0,
        )

    def disturbance(t: float) -> float:
        return p.w_amplitude * math.cos(p.w_frequency * t)

    def nominal_control(x: StateVec) -> float:
        delta, omega, e_q1 = x
        sin_d = math.sin(delta)
        if abs(sin_d) < 1e-9:
            raise DegenerateAngle(f"sin(delta) = {sin_d:.3e} at delta = {delta!r}")
        cos_d = math.cos(delta)
        e_q = (p.x_ds / p.x_ds1) * e_q1 - ((p.x_d - p.x_d1) / p.x_ds1) * p.V_s * cos_d
        p_e = p.V_s * e_q * sin_d / p.x_ds
        i_q = p.V_s * sin_d / p.x_ds
        v_f = k1 * (delta - p.delta0) + k2 * omega + k3 * (p_e - p.P_m0) + p.P_m0
        return (
            v_f
            - ((p.x_d - p.x_d1) / p.x_ds1) * t_d01 * i_q * p.V_s * omega * sin_d
            - (p.V_s * t_d01 / p.x_ds) * e_q * omega * cos_d
        ) / i_q

    return PlantModel(
        name="smib",
        state_dim=3,
        derivative=derivative,
        disturbance=disturbance,
        nominal_control=nominal_control,
        u_max=p.u_max,
        equilibrium=(p.delta0, 0.0, smib_equilibrium_emf(p)),
        initial_state=tuple(float(v) for v in p.x0),
    )
