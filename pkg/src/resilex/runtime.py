"""Discrete-event layer: controller bank, round-robin switching supervisor,
attacker process, and the sampled-detection-time anomaly detector model.

The supervisor works internally in integer grid steps so that every event
timestamp lies exactly on the engine's dt grid and runs are bit-reproducible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ScheduleInfeasible
from .stochastics import TruncatedGaussian, sample


class Gate(enum.Enum):
    PASS_NOMINAL = "pass_nominal"
    FORCE_UMAX = "force_umax"
    FORCE_ZERO = "force_zero"


class SlotStatus(enum.Enum):
    AUTHENTICATING = "authenticating"
    ACTIVE = "active"
    COMPROMISED = "compromised"
    SILENCED = "silenced"
    REINITIALIZING = "reinitializing"
    READY = "ready"


class DefenseKind(enum.Enum):
    NO_DEFENSE = "no_defense"
    REBOOT_ONLY = "reboot_only"
    REBOOT_WITH_DETECTOR = "reboot_with_detector"
    SWITCHING = "switching"
    SWITCHING_WITH_DETECTOR = "switching_with_detector"


_SWITCHING = (DefenseKind.SWITCHING, DefenseKind.SWITCHING_WITH_DETECTOR)
_DETECTING = (DefenseKind.REBOOT_WITH_DETECTOR, DefenseKind.SWITCHING_WITH_DETECTOR)


@dataclass(frozen=True)
class DefenseMode:
    """Defense configuration: single controller (with explicit T0) or a bank
    of n controllers whose working period is derived as t_r / (n - 1)."""

    kind: DefenseKind
    n: int = 1
    T0: float | None = None

    def __post_init__(self):
        if self.kind in _SWITCHING and self.n < 2:
            raise ValueError("switching modes require n >= 2")
        if self.kind in (DefenseKind.REBOOT_ONLY, DefenseKind.REBOOT_WITH_DETECTOR):
            if self.T0 is None:
                raise ValueError("reboot modes require an explicit T0")

    @property
    def has_detector(self) -> bool:
        return self.kind in _DETECTING

    @property
    def is_switching(self) -> bool:
        return self.kind in _SWITCHING

    def working_period(self, t_r: float) -> float | None:
        if self.kind is DefenseKind.NO_DEFENSE:
            return None
        if self.is_switching:
            return t_r / (self.n - 1)
        return self.T0


class AttackMode(enum.Enum):
    PER_CYCLE = "per_cycle"
    PERSISTENT = "persistent"


@dataclass(frozen=True)
class AttackConfig:
    dist: TruncatedGaussian | None
    mode: AttackMode = AttackMode.PER_CYCLE
    persistent_slots: frozenset = frozenset()
    enabled: bool = True

    def __post_init__(self):
        if self.enabled and self.mode is AttackMode.PER_CYCLE and self.dist is None:
            raise ValueError("per-cycle attack requires a distribution")


@dataclass(frozen=True)
class DetectorConfig:
    dist: TruncatedGaussian | None = None

    @property
    def enabled(self) -> bool:
        return self.dist is not None


def draw_attack_time(
    attack: AttackConfig, slot: int, T0: float, t_c: float, rng: np.random.Generator
) -> float:
    """Effective attack time for a freshly authenticated slot, clipped at T0 - t_c.

    Disabled attacks and non-targeted slots under persistent mode report the
    full clip (never compromised); persistent-target slots are compromised
    instantly and re-initialization does not clear them.
    """
    clip = T0 - t_c
    if not attack.enabled:
        return clip
    if attack.mode is AttackMode.PERSISTENT:
        return 0.0 if slot in attack.persistent_slots else clip
    return min(sample(attack.dist, rng), clip)


def draw_detection_time(
    detector: DetectorConfig, T0: float, t_a: float, t_c: float, rng: np.random.Generator
) -> float:
    """Effective alarm delay after compromise, clipped at T0 - t_a - t_c.

    An absent detector means the attack persists to the period end."""
    clip = T0 - t_a - t_c
    if not detector.enabled:
        return clip
    return min(sample(detector.dist, rng), clip)


_GATE_FOR_STATUS = {
    SlotStatus.AUTHENTICATING: Gate.FORCE_ZERO,
    SlotStatus.ACTIVE: Gate.PASS_NOMINAL,
    SlotStatus.COMPROMISED: Gate.FORCE_UMAX,
    SlotStatus.SILENCED: Gate.FORCE_ZERO,
    SlotStatus.REINITIALIZING: Gate.FORCE_ZERO,
}

_PHASE_LABEL = {
    SlotStatus.AUTHENTICATING: "auth",
    SlotStatus.ACTIVE: "normal",
    SlotStatus.COMPROMISED: "compromised",
    SlotStatus.SILENCED: "silenced",
    SlotStatus.REINITIALIZING: "reinit",
}


class Supervisor:
    """Deterministic sequential supervisor driven by the engine's step clock.

    ``step(k)`` must be called with nondecreasing step indices; it returns the
    designated slot id, the control gate, and the designated slot's status for
    grid step k.  All sampled event times are snapped to the grid.
    """

    def __init__(
        self,
        mode: DefenseMode,
        attack: AttackConfig,
        detector: DetectorConfig,
        t_r: float,
        t_c: float,
        dt: float,
        rng: np.random.Generator,
        horizon_steps: int | None = None,
    ):
        self.horizon_steps = horizon_steps
        self.mode = mode
        self.attack = attack
        self.detector = detector
        self.dt = dt
        self.rng = rng
        self.events: list[dict] = []
        self.s_tc = int(round(t_c / dt))
        self.s_tr = int(round(t_r / dt))
        self._segments: list[tuple[int, int, int, SlotStatus]] = []
        self._seg_idx = 0
        if mode.kind is DefenseKind.NO_DEFENSE:
            self.s_T0 = None
            self.s_period = None
            self._period = -1
            self._init_no_defense()
            return
        T0 = mode.working_period(t_r)
        self.s_T0 = int(round(T0 / dt))
        if self.s_T0 <= self.s_tc:
            raise ScheduleInfeasible(f"T0 = {self.s_T0} steps <= t_c = {self.s_tc} steps")
        if mode.is_switching:
            # the reinit window available to an off-rotation slot is exactly
            # (n - 1) working periods; grid rounding of T0 is absorbed here
            self.s_tr_eff = (mode.n - 1) * self.s_T0
            self.s_period = self.s_T0
        else:
            self.s_tr_eff = self.s_tr
            self.s_period = self.s_T0 + self.s_tr
        self.ready_at = {i: 0 for i in range(1, mode.n + 1)}
        self._period = -1
        self._build_period(0)

    # -- construction -----------------------------------------------------

    def _emit(self, step: int, slot: int, event: str, detail: dict | None = None):
        self.events.append(
            {"t": step * self.dt, "slot": slot, "event": event, "detail": detail or {}}
        )

    def _emit_phase(self, start: int, end: int, slot: int, status: SlotStatus):
        if end > start:
            self._emit(
                start,
                slot,
                "phase",
                {"phase": _PHASE_LABEL[status], "end": end * self.dt},
            )

    def _init_no_defense(self):
        end = self.horizon_steps + 1 if self.horizon_steps is not None else 2**62
        slot = 1
        if self.attack.enabled:
            if self.attack.mode is AttackMode.PERSISTENT:
                s_attack = 0 if slot in self.attack.persistent_slots else end
            else:
                s_attack = int(round(sample(self.attack.dist, self.rng) / self.dt))
        else:
            s_attack = end
        segs = []
        if s_attack > 0:
            segs.append((0, s_attack, slot, SlotStatus.ACTIVE))
            self._emit_phase(0, min(s_attack, end), slot, SlotStatus.ACTIVE)
        if s_attack < end:
            segs.append((s_attack, end, slot, SlotStatus.COMPROMISED))
            self._emit(s_attack, slot, "attack_effect")
            self._emit_phase(s_attack, end, slot, SlotStatus.COMPROMISED)
        self._segments = segs

    def _designated(self, period: int) -> int:
        if not self.mode.is_switching:
            return 1
        return period % self.mode.n + 1

    def _build_period(self, period: int):
        start = period * self.s_period
        slot = self._designated(period)
        if self.mode.is_switching:
            if self.ready_at[slot] > start:
                raise ScheduleInfeasible(
                    f"slot {slot} not ready at switch step {start} "
                    f"(ready at {self.ready_at[slot]})"
                )
            self._emit(start, slot, "switch", {"period": period})
            if period > 0:
                prev = self._designated(period - 1)
                self.ready_at[prev] = start + self.s_tr_eff
                self._emit(start, prev, "reinit_start")
                self._emit(start + self.s_tr_eff, prev, "reinit_complete")
        else:
            self._emit(start, slot, "switch", {"period": period})

        t_c_s = self.s_tc * self.dt
        s_clip = self.s_T0 - self.s_tc
        t_a = draw_attack_time(self.attack, slot, self.s_T0 * self.dt, t_c_s, self.rng)
        s_ta = min(int(round(t_a / self.dt)), s_clip)

        segs = []
        segs.append((start, start + self.s_tc, slot, SlotStatus.AUTHENTICATING))
        self._emit_phase(start, start + self.s_tc, slot, SlotStatus.AUTHENTICATING)
        self._emit(start + self.s_tc, slot, "auth_complete")
        p = start + self.s_tc
        if s_ta > 0:
            segs.append((p, p + s_ta, slot, SlotStatus.ACTIVE))
            self._emit_phase(p, p + s_ta, slot, SlotStatus.ACTIVE)
        if s_ta < s_clip:
            attack_step = p + s_ta
            self._emit(attack_step, slot, "attack_effect")
            s_clip_d = s_clip - s_ta
            use_detector = self.mode.has_detector and self.detector.enabled
            if use_detector:
                t_d = draw_detection_time(
                    self.detector, self.s_T0 * self.dt, s_ta * self.dt, t_c_s, self.rng
                )
                s_td = min(int(round(t_d / self.dt)), s_clip_d)
            else:
                s_td = s_clip_d
            if s_td > 0:
                segs.append((attack_step, attack_step + s_td, slot, SlotStatus.COMPROMISED))
                self._emit_phase(attack_step, attack_step + s_td, slot, SlotStatus.COMPROMISED)
            if s_td < s_clip_d:
                alarm_step = attack_step + s_td
                self._emit(alarm_step, slot, "alarm")
                segs.append((alarm_step, start + self.s_T0, slot, SlotStatus.SILENCED))
                self._emit_phase(alarm_step, start + self.s_T0, slot, SlotStatus.SILENCED)
        if not self.mode.is_switching:
            r0 = start + self.s_T0
            segs.append((r0, r0 + self.s_tr, slot, SlotStatus.REINITIALIZING))
            self._emit_phase(r0, r0 + self.s_tr, slot, SlotStatus.REINITIALIZING)
            self._emit(r0, slot, "reinit_start")
            self._emit(r0 + self.s_tr, slot, "reinit_complete")
        self._segments = segs
        self._period = period
        self._period_end = start + self.s_period

    # -- stepping ---------------------------------------------------------

    def step(self, k: int) -> tuple[int, Gate, SlotStatus]:
        """Designated slot, control gate, and status at grid step k."""
        if self.mode.kind is DefenseKind.NO_DEFENSE:
            for lo, hi, slot, status in self._segments:
                if lo <= k < hi:
                    return slot, _GATE_FOR_STATUS[status], status
            return 1, Gate.PASS_NOMINAL, SlotStatus.ACTIVE
        while k >= self._period_end:
            self._build_period(self._period + 1)
        for lo, hi, slot, status in self._segments:
            if lo <= k < hi:
                return slot, _GATE_FOR_STATUS[status], status
        raise AssertionError(f"step {k} not covered by period {self._period}")

    def sorted_events(self) -> list[dict]:
        return sorted(self.events, key=lambda e: (e["t"], e["slot"], e["event"]))
