"""Hybrid simulation: fixed-step RK4 interleaved with supervisor events,
Lyapunov-value tracking, and seeded ensemble averaging."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .certificate import CertificateConstants
from .errors import AllRunsDiverged, DegenerateAngle, NonFiniteState
from .models import PlantModel
from .runtime import (
    AttackConfig,
    DefenseKind,
    DefenseMode,
    DetectorConfig,
    Gate,
    SlotStatus,
    Supervisor,
)

GATE_CODES = {Gate.PASS_NOMINAL: 0, Gate.FORCE_UMAX: 1, Gate.FORCE_ZERO: 2}
STATUS_CODES = {s: i for i, s in enumerate(SlotStatus)}
GATE_NAMES = {v: k.value for k, v in GATE_CODES.items()}
STATUS_NAMES = {v: k.value for k, v in STATUS_CODES.items()}


@dataclass(frozen=True)
class Scenario:
    """Complete description of one experiment."""

    plant: PlantModel
    mode: DefenseMode
    attack: AttackConfig
    detector: DetectorConfig
    t_r: float
    t_c: float
    dt: float
    horizon: float
    runs: int = 10
    base_seed: int = 0
    certificate: CertificateConstants | None = None
    out_dir: str = "out"
    raw: dict = field(default_factory=dict, compare=False)


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    V: np.ndarray
    active_id: np.ndarray
    gate: np.ndarray
    status: np.ndarray
    events: list[dict]
    seed: int
    diverged: bool = False
    truncated_at: int | None = None
    degenerate_control_steps: int = 0


@dataclass
class EnsembleResult:
    t: np.ndarray
    mean_x: np.ndarray
    mean_u: np.ndarray
    mean_V: np.ndarray
    seeds: list[int]
    diverged_runs: list[int]
    tail_max_V: float
    tail_mean_V: float
    tail_log_slope: float
    unbounded: bool


def rk4_step(model: PlantModel, x: tuple, u: float, w: float, t: float, dt: float) -> tuple:
    """One classical RK4 step with u and w held constant (zero-order hold)."""
    f = model.derivative
    h2 = 0.5 * dt
    k1 = f(x, u, w, t)
    k2 = f(tuple(xi + h2 * ki for xi, ki in zip(x, k1)), u, w, t + h2)
    k3 = f(tuple(xi + h2 * ki for xi, ki in zip(x, k2)), u, w, t + h2)
    k4 = f(tuple(xi + dt * ki for xi, ki in zip(x, k3)), u, w, t + dt)
    h6 = dt / 6.0
    x_next = tuple(
        xi + h6 * (a + 2.0 * b + 2.0 * c + d) for xi, a, b, c, d in zip(x, k1, k2, k3, k4)
    )
    for v in x_next:
        if not math.isfinite(v):
            raise NonFiniteState(f"non-finite state after step at t = {t + dt!r}")
    return x_next


def _lyapunov_fn(scenario: Scenario):
    plant = scenario.plant
    if scenario.certificate is not None and plant.name == "third_order":
        P = scenario.certificate.P
        p00, p01, p02 = P[0]
        p11, p12 = P[1, 1], P[1, 2]
        p22 = P[2, 2]

        def V(x):
            x1, x2, x3 = x
            try:
                return (
                    p00 * x1 * x1
                    + p11 * x2 * x2
                    + p22 * x3 * x3
                    + 2.0 * (p01 * x1 * x2 + p02 * x1 * x3 + p12 * x2 * x3)
                )
            except OverflowError:
                return math.inf

        return V
    xe = plant.equilibrium

    def V(x):
        try:
            return sum((xi - ei) ** 2 for xi, ei in zip(x, xe))
        except OverflowError:
            return math.inf

    return V


def run(scenario: Scenario, seed: int) -> Trajectory:
    """Simulate a single run; deterministic in (scenario, seed)."""
    plant = scenario.plant
    dt = scenario.dt
    steps = int(round(scenario.horizon / dt))
    rng = np.random.default_rng(seed)
    sup = Supervisor(
        scenario.mode,
        scenario.attack,
        scenario.detector,
        scenario.t_r,
        scenario.t_c,
        dt,
        rng,
        horizon_steps=steps,
    )
    n = plant.state_dim
    t_grid = np.arange(steps + 1) * dt
    xs = np.empty((steps + 1, n))
    us = np.empty(steps + 1)
    vs = np.empty(steps + 1)
    slots = np.empty(steps + 1, dtype=np.int32)
    gates = np.empty(steps + 1, dtype=np.int8)
    statuses = np.empty(steps + 1, dtype=np.int8)
    V = _lyapunov_fn(scenario)
    u_max = plant.u_max
    nominal = plant.nominal_control
    disturbance = plant.disturbance
    x = plant.initial_state
    degenerate = 0
    diverged = False
    truncated_at = None
    for k in range(steps + 1):
        slot, gate, status = sup.step(k)
        if gate is Gate.PASS_NOMINAL:
            try:
                u = nominal(x)
            except DegenerateAngle:
                degenerate += 1
                u = 0.0
            if u > u_max:
                u = u_max
            elif u < -u_max:
                u = -u_max
        elif gate is Gate.FORCE_UMAX:
            u = u_max
        else:
            u = 0.0
        xs[k] = x
        us[k] = u
        vs[k] = V(x)
        slots[k] = slot
        gates[k] = GATE_CODES[gate]
        statuses[k] = STATUS_CODES[status]
        if k == steps:
            break
        try:
            x = rk4_step(plant, x, u, disturbance(k * dt), k * dt, dt)
        except (NonFiniteState, OverflowError):
            diverged = True
            truncated_at = k + 1
            xs[k + 1 :] = xs[k]
            us[k + 1 :] = 0.0
            vs[k + 1 :] = vs[k]
            slots[k + 1 :] = slot
            gates[k + 1 :] = GATE_CODES[Gate.FORCE_ZERO]
            statuses[k + 1 :] = STATUS_CODES[status]
            break
    return Trajectory(
        t=t_grid,
        x=xs,
        u=us,
        V=vs,
        active_id=slots,
        gate=gates,
        status=statuses,
        events=sup.sorted_events(),
        seed=seed,
        diverged=diverged,
        truncated_at=truncated_at,
        degenerate_control_steps=degenerate,
    )


def _run_seed(args) -> Trajectory:
    # plant closures are not picklable; workers rebuild from the raw config
    raw, seed = args
    from .scenario import scenario_from_dict

    return run(scenario_from_dict(raw), seed)


def ensemble(scenario: Scenario) -> tuple[EnsembleResult, list[Trajectory]]:
    """Run ``scenario.runs`` independent trajectories and average pointwise.

    Parallelism is opt-in via RESILEX_THREADS; aggregation is a deterministic
    reduction ordered by run index either way.
    """
    if scenario.runs < 1:
        raise ValueError("runs must be >= 1")
    seeds = [scenario.base_seed + i for i in range(scenario.runs)]
    workers = int(os.environ.get("RESILEX_THREADS", "1"))
    if workers > 1 and scenario.runs > 1 and scenario.raw:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajectories = list(pool.map(_run_seed, [(scenario.raw, s) for s in seeds]))
    else:
        trajectories = [run(scenario, s) for s in seeds]
    complete = [tr for tr in trajectories if not tr.diverged]
    diverged_runs = [i for i, tr in enumerate(trajectories) if tr.diverged]
    if not complete:
        raise AllRunsDiverged(f"all {scenario.runs} runs hit a non-finite state")
    t = complete[0].t
    mean_x = np.mean([tr.x for tr in complete], axis=0)
    mean_u = np.mean([tr.u for tr in complete], axis=0)
    mean_v = np.mean([tr.V for tr in complete], axis=0)
    tail = slice(int(0.75 * len(t)), None)
    tail_v = mean_v[tail]
    slope = float(np.polyfit(t[tail], np.log(tail_v + 1e-6), 1)[0])
    result = EnsembleResult(
        t=t,
        mean_x=mean_x,
        mean_u=mean_u,
        mean_V=mean_v,
        seeds=seeds,
        diverged_runs=diverged_runs,
        tail_max_V=float(np.max(tail_v)),
        tail_mean_V=float(np.mean(tail_v)),
        tail_log_slope=slope,
        unbounded=slope > 0.05,
    )
    return result, trajectories


def single_period_run(
    plant: PlantModel,
    cert: CertificateConstants,
    T0: float,
    t_c: float,
    t_r: float,
    t_a: float,
    dt: float,
    x0: tuple,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One auth/normal/attacked/re-init period with a prescribed attack time.

    Returns (t, x, V); used to replay the proof timeline against the bound
    envelope.  V is x^T P x from the certificate.
    """
    s_tc = int(round(t_c / dt))
    s_T0 = int(round(T0 / dt))
    s_tr = int(round(t_r / dt))
    s_ta = min(int(round(t_a / dt)), s_T0 - s_tc)
    steps = s_T0 + s_tr
    P = cert.P

    def V(x):
        xv = np.asarray(x)
        return float(xv @ P @ xv)

    t_grid = np.arange(steps + 1) * dt
    xs = np.empty((steps + 1, plant.state_dim))
    vs = np.empty(steps + 1)
    x = tuple(float(v) for v in x0)
    for k in range(steps + 1):
        xs[k] = x
        vs[k] = V(x)
        if k == steps:
            break
        if k < s_tc:
            u = 0.0
        elif k < s_tc + s_ta:
            u = plant.nominal_control(x)
            u = max(-plant.u_max, min(plant.u_max, u))
        elif k < s_T0:
            u = plant.u_max
        else:
            u = 0.0
        x = rk4_step(plant, x, u, plant.disturbance(k * dt), k * dt, dt)
    return t_grid, xs, vs
