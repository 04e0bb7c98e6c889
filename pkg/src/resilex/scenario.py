"""Scenario file loading, validation, and result persistence.

The scenario file is a JSON document; see SCHEMA.md for the field contract.
Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from importlib import resources
from pathlib import Path

import numpy as np

from .certificate import ConstantsMode, build_certificate
from .engine import (
    GATE_NAMES,
    STATUS_NAMES,
    EnsembleResult,
    Scenario,
    Trajectory,
)
from .errors import InfeasibleTiming, SchemaError
from .models import LinearThirdOrder, SmibParams, smib_model, third_order_model
from .runtime import AttackConfig, AttackMode, DefenseKind, DefenseMode, DetectorConfig
from .stochastics import TruncatedGaussian

_PLANT_TYPES = ("third_order", "smib")
_DEFENSE_MODES = tuple(k.value for k in DefenseKind)

_SECTION_KEYS = {
    "plant": {"type", "params"},
    "defense": {"mode", "n", "T0"},
    "timing": {"t_r", "t_c", "dt", "horizon"},
    "attack": {"enabled", "dist", "mode", "persistent_slots"},
    "detector": {"enabled", "dist"},
    "certificate": {"mode", "eps", "eps_a", "eps_b"},
    "ensemble": {"runs", "base_seed"},
    "output": {"dir"},
}


def _check_keys(d: dict, allowed: set, where: str):
    if not isinstance(d, dict):
        raise SchemaError(f"{where}: expected an object")
    unknown = set(d) - allowed
    if unknown:
        raise SchemaError(f"{where}: unknown key(s) {sorted(unknown)}")


def _number(d: dict, key: str, where: str, positive: bool = False) -> float:
    if key not in d:
        raise SchemaError(f"{where}.{key}: missing")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{where}.{key}: expected a number, got {v!r}")
    if positive and v <= 0:
        raise SchemaError(f"{where}.{key}: must be positive, got {v!r}")
    return float(v)


def _dist(spec, where: str) -> TruncatedGaussian:
    if (
        not isinstance(spec, (list, tuple))
        or len(spec) != 4
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in spec)
    ):
        raise SchemaError(f"{where}: expected [a, b, mu, sigma]")
    a, b, mu, sigma = (float(v) for v in spec)
    try:
        return TruncatedGaussian(a, b, mu, sigma)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def _snap(value: float, dt: float, name: str) -> float:
    snapped = round(value / dt) * dt
    if abs(snapped - value) > 1e-9:
        warnings.warn(
            f"{name} = {value!r} rounded to grid multiple {snapped!r} (dt = {dt!r})",
            stacklevel=3,
        )
    return snapped


def scenario_from_dict(raw: dict) -> Scenario:
    """Validate a scenario document and build the runnable Scenario."""
    _check_keys(raw, set(_SECTION_KEYS), "scenario")
    for section in ("plant", "defense", "timing"):
        if section not in raw:
            raise SchemaError(f"scenario.{section}: missing")
    for section, keys in _SECTION_KEYS.items():
        if section in raw:
            _check_keys(raw[section], keys, section)

    timing = raw["timing"]
    dt = _number(timing, "dt", "timing", positive=True)
    horizon = _number(timing, "horizon", "timing", positive=True)
    t_r = _snap(_number(timing, "t_r", "timing", positive=True), dt, "t_r")
    t_c = _snap(_number(timing, "t_c", "timing", positive=True), dt, "t_c")
    horizon = _snap(horizon, dt, "horizon")

    plant_sec = raw["plant"]
    ptype = plant_sec.get("type")
    if ptype not in _PLANT_TYPES:
        raise SchemaError(f"plant.type: expected one of {_PLANT_TYPES}, got {ptype!r}")
    params = plant_sec.get("params", {})
    if ptype == "third_order":
        allowed = {f.name for f in dataclasses.fields(LinearThirdOrder)}
        _check_keys(params, allowed, "plant.params")
        p = {k: tuple(v) if isinstance(v, list) else v for k, v in params.items()}
        plant = third_order_model(LinearThirdOrder(**p))
        plant_params = LinearThirdOrder(**p)
    else:
        allowed = {f.name for f in dataclasses.fields(SmibParams)}
        _check_keys(params, allowed, "plant.params")
        p = {k: tuple(v) if isinstance(v, list) else v for k, v in params.items()}
        plant = smib_model(SmibParams(**p))
        plant_params = SmibParams(**p)

    defense = raw["defense"]
    mode_name = defense.get("mode")
    if mode_name not in _DEFENSE_MODES:
        raise SchemaError(f"defense.mode: expected one of {_DEFENSE_MODES}, got {mode_name!r}")
    kind = DefenseKind(mode_name)
    n = defense.get("n", 1)
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise SchemaError(f"defense.n: expected a positive integer, got {n!r}")
    T0 = defense.get("T0")
    if kind in (DefenseKind.SWITCHING, DefenseKind.SWITCHING_WITH_DETECTOR):
        if n < 2:
            raise SchemaError("defense.n: switching modes require n >= 2")
        if n >= 1.0 + t_r / t_c:
            raise InfeasibleTiming(
                f"n = {n} >= 1 + t_r/t_c = {1.0 + t_r / t_c:g}: authentication "
                "would consume the whole working period"
            )
        T0_val = t_r / (n - 1)
        mode = DefenseMode(kind, n=n, T0=None)
    elif kind in (DefenseKind.REBOOT_ONLY, DefenseKind.REBOOT_WITH_DETECTOR):
        if T0 is None:
            raise SchemaError("defense.T0: required for reboot modes")
        T0_val = _snap(float(T0), dt, "T0")
        if T0_val <= t_c:
            raise InfeasibleTiming(f"T0 = {T0_val:g} <= t_c = {t_c:g}")
        mode = DefenseMode(kind, n=1, T0=T0_val)
    else:
        mode = DefenseMode(kind)
        T0_val = None

    attack_sec = raw.get("attack", {"enabled": False})
    enabled = attack_sec.get("enabled", True)
    if not isinstance(enabled, bool):
        raise SchemaError(f"attack.enabled: expected a boolean, got {enabled!r}")
    attack_mode = attack_sec.get("mode", "per_cycle")
    if attack_mode not in ("per_cycle", "persistent"):
        raise SchemaError(f"attack.mode: expected per_cycle or persistent, got {attack_mode!r}")
    slots = attack_sec.get("persistent_slots", [])
    if not isinstance(slots, list) or any(
        isinstance(s, bool) or not isinstance(s, int) for s in slots
    ):
        raise SchemaError("attack.persistent_slots: expected a list of slot ids")
    if any(s < 1 or s > n for s in slots):
        raise SchemaError(f"attack.persistent_slots: ids must be within 1..{n}")
    a_dist = None
    if "dist" in attack_sec:
        a_dist = _dist(attack_sec["dist"], "attack.dist")
    if enabled and attack_mode == "per_cycle" and a_dist is None:
        raise SchemaError("attack.dist: required when a per-cycle attack is enabled")
    attack = AttackConfig(
        dist=a_dist,
        mode=AttackMode(attack_mode),
        persistent_slots=frozenset(slots),
        enabled=enabled,
    )

    det_sec = raw.get("detector", {"enabled": False})
    det_enabled = det_sec.get("enabled", "dist" in det_sec)
    if not isinstance(det_enabled, bool):
        raise SchemaError(f"detector.enabled: expected a boolean, got {det_enabled!r}")
    d_dist = None
    if det_enabled:
        if "dist" not in det_sec:
            raise SchemaError("detector.dist: required when the detector is enabled")
        d_dist = _dist(det_sec["dist"], "detector.dist")
    detector = DetectorConfig(dist=d_dist)

    cert_sec = raw.get("certificate", {})
    cert_mode = cert_sec.get("mode", "paper")
    if cert_mode not in ("paper", "derived"):
        raise SchemaError(f"certificate.mode: expected paper or derived, got {cert_mode!r}")
    eps = cert_sec.get("eps")
    eps_a = cert_sec.get("eps_a", 10.0)
    eps_b = cert_sec.get("eps_b", 10.0)
    certificate = None
    if ptype == "third_order":
        certificate = build_certificate(
            plant,
            ConstantsMode.PAPER if cert_mode == "paper" else ConstantsMode.DERIVED,
            eps=None if eps is None else float(eps),
            eps_a=float(eps_a),
            eps_b=float(eps_b),
            params=plant_params,
        )

    ens = raw.get("ensemble", {})
    runs = ens.get("runs", 10)
    if isinstance(runs, bool) or not isinstance(runs, int) or runs < 1:
        raise SchemaError(f"ensemble.runs: expected a positive integer, got {runs!r}")
    base_seed = ens.get("base_seed", 0)
    if isinstance(base_seed, bool) or not isinstance(base_seed, int):
        raise SchemaError(f"ensemble.base_seed: expected an integer, got {base_seed!r}")
    out_dir = raw.get("output", {}).get("dir", "out")

    return Scenario(
        plant=plant,
        mode=mode,
        attack=attack,
        detector=detector,
        t_r=t_r,
        t_c=t_c,
        dt=dt,
        horizon=horizon,
        runs=runs,
        base_seed=base_seed,
        certificate=certificate,
        out_dir=out_dir,
        raw=raw,
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.exists():
        bundled = bundled_scenario_path(path.stem)
        if bundled is not None:
            path = bundled
        else:
            raise SchemaError(f"scenario file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    return scenario_from_dict(raw)


def scenario_to_dict(scenario: Scenario) -> dict:
    """Canonical document for a Scenario (round-trips through scenario_from_dict)."""

    def dist_list(d):
        return None if d is None else [d.a, d.b, d.mu, d.sigma]

    doc: dict = {
        "plant": {
            "type": scenario.plant.name,
            "params": scenario.raw.get("plant", {}).get("params", {}),
        },
        "defense": {"mode": scenario.mode.kind.value, "n": scenario.mode.n},
        "timing": {
            "t_r": scenario.t_r,
            "t_c": scenario.t_c,
            "dt": scenario.dt,
            "horizon": scenario.horizon,
        },
        "attack": {
            "enabled": scenario.attack.enabled,
            "mode": scenario.attack.mode.value,
            "persistent_slots": sorted(scenario.attack.persistent_slots),
        },
        "detector": {"enabled": scenario.detector.enabled},
        "certificate": {
            "mode": "paper"
            if scenario.certificate is None or scenario.certificate.mode.value == "paper"
            else "derived",
        },
        "ensemble": {"runs": scenario.runs, "base_seed": scenario.base_seed},
        "output": {"dir": scenario.out_dir},
    }
    if scenario.mode.T0 is not None:
        doc["defense"]["T0"] = scenario.mode.T0
    if scenario.attack.dist is not None:
        doc["attack"]["dist"] = dist_list(scenario.attack.dist)
    if scenario.detector.dist is not None:
        doc["detector"]["dist"] = dist_list(scenario.detector.dist)
    if scenario.certificate is not None:
        doc["certificate"].update(
            {
                "eps": scenario.certificate.eps,
                "eps_a": scenario.certificate.eps_a,
                "eps_b": scenario.certificate.eps_b,
            }
        )
    return doc


def write_scenario(scenario: Scenario, path: str | Path):
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n")


def bundled_scenario_path(name: str) -> Path | None:
    """Path to a bundled scenario by bare name, or None if no such bundle."""
    if not name.endswith(".json"):
        name = name + ".json"
    ref = resources.files("resilex.scenarios").joinpath(name)
    with resources.as_file(ref) as p:
        return p if p.exists() else None


def list_bundled_scenarios() -> list[str]:
    return sorted(
        p.name[:-5]
        for p in resources.files("resilex.scenarios").iterdir()
        if p.name.endswith(".json")
    )


# -- result persistence ---------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_trajectory_csv(path: str | Path, tr: Trajectory):
    n = tr.x.shape[1]
    header = "t," + ",".join(f"x{i + 1}" for i in range(n)) + ",u,V,active_id,gate,status"
    lines = [header]
    for k in range(len(tr.t)):
        row = [_fmt(tr.t[k])]
        row += [_fmt(v) for v in tr.x[k]]
        row += [_fmt(tr.u[k]), _fmt(tr.V[k])]
        row += [str(int(tr.active_id[k])), GATE_NAMES[int(tr.gate[k])], STATUS_NAMES[int(tr.status[k])]]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_mean_csv(path: str | Path, ens: EnsembleResult):
    n = ens.mean_x.shape[1]
    header = "t," + ",".join(f"x{i + 1}" for i in range(n)) + ",u,V"
    lines = [header]
    for k in range(len(ens.t)):
        row = [_fmt(ens.t[k])]
        row += [_fmt(v) for v in ens.mean_x[k]]
        row += [_fmt(ens.mean_u[k]), _fmt(ens.mean_V[k])]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_events_jsonl(path: str | Path, events: list[dict]):
    with open(path, "w") as fh:
        for ev in events:
            fh.write(json.dumps(ev) + "\n")


def summary_dict(scenario: Scenario, ens: EnsembleResult) -> dict:
    return {
        "runs": scenario.runs,
        "seeds": ens.seeds,
        "diverged_runs": ens.diverged_runs,
        "tail_max_V": ens.tail_max_V,
        "tail_mean_V": ens.tail_mean_V,
        "tail_log_slope": ens.tail_log_slope,
        "unbounded": ens.unbounded,
        "V_start": float(ens.mean_V[0]),
        "V_end": float(ens.mean_V[-1]),
    }
