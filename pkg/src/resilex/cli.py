"""Command-line surface: check, simulate, sweep, envelope.

Exit codes: 0 success, 2 schema error, 3 infeasible timing,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import conditions
from .engine import ensemble, single_period_run
from .errors import (
    AllRunsDiverged,
    DenominatorNonpositive,
    EpsilonTooSmall,
    InfeasibleTiming,
    NonFiniteState,
    NotHurwitz,
    SchemaError,
    ScheduleInfeasible,
    SolveFailed,
    TooManyControllers,
    UnsupportedPlant,
)
from .runtime import DefenseKind
from .scenario import (
    bundled_scenario_path,
    list_bundled_scenarios,
    load_scenario,
    scenario_from_dict,
    summary_dict,
    write_events_jsonl,
    write_mean_csv,
    write_trajectory_csv,
)
from .stochastics import sample

_SCHEMA_ERRORS = (SchemaError,)
_TIMING_ERRORS = (InfeasibleTiming, TooManyControllers, ScheduleInfeasible)
_NUMERIC_ERRORS = (
    NotHurwitz,
    SolveFailed,
    UnsupportedPlant,
    EpsilonTooSmall,
    DenominatorNonpositive,
    NonFiniteState,
    AllRunsDiverged,
)


def _load(args) -> "Scenario":
    path = Path(args.config)
    if not path.exists():
        bundled = bundled_scenario_path(path.stem)
        if bundled is None:
            raise SchemaError(f"scenario file not found: {args.config}")
        path = bundled
    raw = json.loads(path.read_text())
    if args.runs is not None:
        raw.setdefault("ensemble", {})["runs"] = args.runs
    if args.seed is not None:
        raw.setdefault("ensemble", {})["base_seed"] = args.seed
    if args.dt is not None:
        raw.setdefault("timing", {})["dt"] = args.dt
    if args.out is not None:
        raw.setdefault("output", {})["dir"] = args.out
    return scenario_from_dict(raw)


def _out_dir(scenario) -> Path:
    out = Path(scenario.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_check(args) -> int:
    scenario = _load(args)
    cert = scenario.certificate
    if cert is None:
        raise UnsupportedPlant(
            "no Lyapunov certificate is defined for this plant; "
            "`check` supports the third-order system only"
        )
    lam, lam_a = cert.lambda_decay, cert.lambda_attack
    rng = np.random.default_rng(scenario.base_seed)
    mc = args.mc_samples
    dist_a = scenario.attack.dist
    verdicts = []
    kind = scenario.mode.kind
    if dist_a is None:
        print("attack distribution absent; no expectation conditions to evaluate")
    elif kind in (DefenseKind.REBOOT_ONLY, DefenseKind.REBOOT_WITH_DETECTOR):
        verdicts.append(
            conditions.check_reboot(
                cert, dist_a, scenario.mode.T0, scenario.t_r, scenario.t_c, mc, rng
            )
        )
        if kind is DefenseKind.REBOOT_WITH_DETECTOR and scenario.detector.dist is not None:
            verdicts.append(
                conditions.check_anomaly(
                    cert,
                    dist_a,
                    scenario.detector.dist,
                    scenario.mode.T0,
                    scenario.t_r,
                    scenario.t_c,
                    mc,
                    rng,
                )
            )
    elif kind in (DefenseKind.SWITCHING, DefenseKind.SWITCHING_WITH_DETECTOR):
        verdicts.append(
            conditions.check_switching(
                cert, dist_a, scenario.mode.n, scenario.t_r, scenario.t_c, mc, rng
            )
        )
    report = {"verdicts": [v.to_dict() for v in verdicts]}
    for v in verdicts:
        mark = "satisfied" if v.satisfied else "NOT satisfied"
        print(f"{v.theorem}: value = {v.value:.6g} (+/- {v.abs_err_est:.2g}) -> {mark}")
        if v.mc_value is not None:
            print(f"  monte-carlo cross-check: {v.mc_value:.6g} (+/- {v.mc_err:.2g})")
    threshold = conditions.reboot_no_attack_threshold(cert, scenario.t_c, scenario.t_r)
    print(f"no-attack working-period threshold: T0 > {threshold:.6g} s")
    report["no_attack_T0_threshold"] = threshold
    n_cap = 1.0 + scenario.t_r / scenario.t_c
    print(f"controller-count feasibility cap: n < {n_cap:.6g}")
    report["max_n_exclusive"] = n_cap
    if scenario.mode.is_switching and dist_a is not None:
        m = conditions.max_persistent_compromised(lam, lam_a, scenario.mode.n)
        print(f"tolerable persistent compromises (out of n = {scenario.mode.n}): m <= {m}")
        report["max_persistent_compromised"] = m
        try:
            healthy = conditions.min_healthy_controllers(
                cert, dist_a, scenario.mode.n, scenario.t_r, scenario.t_c
            )
            print(
                f"T4_MinHealthy: need n1 >= {healthy.min_n1} finite-re-init controllers "
                f"(bound {healthy.raw_bound:.6g})"
            )
            report["min_healthy"] = {
                "min_n1": healthy.min_n1,
                "raw_bound": healthy.raw_bound,
                "expectation": healthy.expectation,
                "simple_min_n1": healthy.simple_min_n1,
                "simple_bound": healthy.simple_bound,
            }
        except DenominatorNonpositive as exc:
            print(f"T4_MinHealthy: undefined ({exc})")
            report["min_healthy"] = None
    out = _out_dir(scenario)
    (out / "check.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"report written to {out / 'check.json'}")
    return 0


def cmd_simulate(args) -> int:
    scenario = _load(args)
    result, trajectories = ensemble(scenario)
    out = _out_dir(scenario)
    for i, tr in enumerate(trajectories):
        write_trajectory_csv(out / f"run_{i:02d}.csv", tr)
        write_events_jsonl(out / f"events_{i:02d}.jsonl", tr.events)
    write_mean_csv(out / "mean.csv", result)
    summary = summary_dict(scenario, result)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    growth = "UNBOUNDED growth" if result.unbounded else "bounded"
    print(
        f"{scenario.runs} runs complete; tail mean V = {result.tail_mean_V:.6g} "
        f"(log-slope {result.tail_log_slope:.4g}, {growth})"
    )
    print(f"outputs written to {out}/")
    return 0


def cmd_sweep(args) -> int:
    scenario = _load(args)
    if not scenario.mode.is_switching:
        raise SchemaError("sweep requires a switching-mode scenario")
    if scenario.certificate is None:
        raise UnsupportedPlant("sweep requires the third-order plant (certificate needed)")
    n_list = [int(v) for v in args.n_list.split(",")]
    out = _out_dir(scenario)
    rows = []
    for n in n_list:
        try:
            verdict = conditions.check_switching(
                scenario.certificate,
                scenario.attack.dist,
                n,
                scenario.t_r,
                scenario.t_c,
            )
        except TooManyControllers as exc:
            print(f"n = {n}: skipped ({exc})")
            continue
        raw = json.loads(json.dumps(scenario.raw))
        raw["defense"]["n"] = n
        sub = scenario_from_dict(raw)
        result, _ = ensemble(sub)
        rows.append(
            (n, verdict.inputs["T0"], verdict.value, verdict.satisfied, result.tail_mean_V)
        )
        print(
            f"n = {n:3d}: T0 = {verdict.inputs['T0']:.6g}, value = {verdict.value:.6g}, "
            f"satisfied = {verdict.satisfied}, tail mean V = {result.tail_mean_V:.6g}"
        )
    lines = ["n,T0,condition_value,satisfied,tail_mean_V"]
    for n, T0, value, sat, tail in rows:
        lines.append(f"{n},{T0:.17g},{value:.17g},{sat},{tail:.17g}")
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    print(f"sweep written to {out / 'sweep.csv'}")
    return 0


def cmd_envelope(args) -> int:
    scenario = _load(args)
    cert = scenario.certificate
    if cert is None:
        raise UnsupportedPlant("envelope requires the third-order plant")
    T0 = scenario.mode.working_period(scenario.t_r)
    if T0 is None:
        raise SchemaError("envelope requires a defense mode with a working period")
    rng = np.random.default_rng(scenario.base_seed)
    if scenario.attack.enabled and scenario.attack.dist is not None:
        t_a = min(sample(scenario.attack.dist, rng), T0 - scenario.t_c)
    else:
        t_a = T0 - scenario.t_c
    t_a = round(t_a / scenario.dt) * scenario.dt
    t, xs, v_sim = single_period_run(
        scenario.plant,
        cert,
        T0,
        scenario.t_c,
        scenario.t_r,
        t_a,
        scenario.dt,
        scenario.plant.initial_state,
    )
    segs = conditions.reboot_period_segments(cert, T0, scenario.t_c, scenario.t_r, t_a)
    env = conditions.propagate_envelope(segs, v_sim[0], scenario.dt)
    out = _out_dir(scenario)
    lines = ["t,V_sim,V_bound"]
    for k in range(len(t)):
        lines.append(f"{t[k]:.17g},{v_sim[k]:.17g},{env.vbar[k]:.17g}")
    (out / "envelope.csv").write_text("\n".join(lines) + "\n")
    dominated = bool(np.all(v_sim <= env.vbar * (1.0 + 1e-6) + 1e-9))
    print(f"t_a = {t_a:.6g} s; envelope end value {env.end_value:.6g}; dominated = {dominated}")
    print(f"envelope written to {out / 'envelope.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resilex",
        description="Resilient multi-controller switching defense: condition "
        "checks and hybrid closed-loop simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="scenario JSON path or bundled name")
        p.add_argument("--seed", type=int, default=None, help="override ensemble.base_seed")
        p.add_argument("--runs", type=int, default=None, help="override ensemble.runs")
        p.add_argument("--out", default=None, help="override output.dir")
        p.add_argument("--dt", type=float, default=None, help="override timing.dt")

    p = sub.add_parser("check", help="evaluate the boundedness conditions")
    common(p)
    p.add_argument("--mc-samples", type=int, default=200_000, help="MC cross-check samples (0 disables)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="run the ensemble and write CSV/JSONL outputs")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="evaluate condition and tail statistics over n")
    common(p)
    p.add_argument("--n-list", default="2,4,6,8,11", help="comma-separated controller counts")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("envelope", help="single-period bound envelope vs simulation")
    common(p)
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("scenarios", help="list bundled scenario names")
    p.set_defaults(func=lambda args: (print("\n".join(list_bundled_scenarios())), 0)[1])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _SCHEMA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _TIMING_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
