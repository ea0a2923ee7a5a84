"""Command-line driver: simulation runs, convergence studies, estimators.

All commands write their artifacts under ``--out`` as plain CSV /
key-value text, plus a ``run_manifest.txt`` recording the invocation.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from .bucket_engine import Trajectory, run_pull, run_push
from .des_oracle import OracleConfig, run_oracle
from .lleap_engine import RngStream, run_lleap
from .model import ModelError, part_name
from .scenario_io import SCHEMA_VERSION, Scenario, builtin_names, get_scenario
from .uq import (
    LevelEstimate,
    QoISpec,
    ScenarioSampler,
    ScreeningConfig,
    Tolerances,
    estimate_rates,
    evaluate_qoi,
    mc_estimate,
    mlmc_estimate,
    select_max_level,
)

__all__ = ["main"]

_DEFAULT_LADDER = (32.0, 16.0, 8.0, 4.0, 2.0, 1.0)


def _git_revision() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _write_manifest(out: Path, args: argparse.Namespace) -> None:
    lines = [f"schema_version = {SCHEMA_VERSION}", f"git_revision = {_git_revision()}"]
    for key, value in sorted(vars(args).items()):
        if key == "func":
            continue
        lines.append(f"{key} = {value}")
    (out / "run_manifest.txt").write_text("\n".join(lines) + "\n")


def _write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    parts = traj.states.shape[1]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x_{p + 1}" for p in range(parts)])
        for k in range(len(traj.times)):
            w.writerow([f"{traj.times[k]:.10g}"] + [f"{v:.10g}" for v in traj.states[k]])


def _write_delivered_csv(path: Path, traj: Trajectory) -> None:
    parts = traj.delivered.shape[1]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"d_{p + 1}" for p in range(parts)])
        for k in range(len(traj.times)):
            w.writerow([f"{traj.times[k]:.10g}"] + [f"{v:.10g}" for v in traj.delivered[k]])


def _default_qoi(scenario: Scenario) -> QoISpec:
    """Scenario QoI, or deliveries of the first final part at the horizon."""
    if scenario.uq is not None and scenario.uq.variants:
        return scenario.uq.variants[0].qoi
    part = min(scenario.network.final_parts)
    return QoISpec(kind="deliveries_by", part=part, horizon=scenario.config.horizon)


def _run_once(scenario: Scenario, seed: int | None = None) -> Trajectory:
    cfg = scenario.config
    if seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, rng_seed=seed)
    if cfg.stochastic:
        return run_lleap(
            scenario.network, cfg, policy=scenario.policy,
            orders=scenario.orders, x0=scenario.initial,
        )
    if cfg.mode == "push":
        return run_push(scenario.network, cfg, policy=scenario.policy, x0=scenario.initial)
    return run_pull(
        scenario.network, cfg, policy=scenario.policy,
        orders=scenario.orders, x0=scenario.initial,
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = get_scenario(args.scenario)
    from dataclasses import replace

    cfg = scenario.config
    if args.dt is not None:
        cfg = replace(cfg, dt=args.dt)
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    if args.stochastic:
        cfg = replace(cfg, stochastic=True)
    scenario = replace(scenario, config=cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, args)
    qoi = _default_qoi(scenario)

    if cfg.stochastic and args.samples > 1:
        rows = []
        for k in range(args.samples):
            seed = cfg.rng_seed + k
            traj = _run_once(scenario, seed=seed)
            rows.append((k, seed, evaluate_qoi(traj, qoi)))
        with (out / "ensemble.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample", "seed", "qoi"])
            w.writerows(rows)
        values = np.array([r[2] for r in rows])
        summary = {
            "scenario": scenario.name,
            "samples": args.samples,
            "qoi_mean": f"{values.mean():.10g}",
            "qoi_std": f"{values.std(ddof=1):.10g}" if len(values) > 1 else "0",
        }
    else:
        traj = _run_once(scenario)
        _write_trajectory_csv(out / "trajectory.csv", traj)
        if cfg.mode == "pull":
            _write_delivered_csv(out / "deliveries.csv", traj)
        summary = {
            "scenario": scenario.name,
            "mode": cfg.mode,
            "dt": f"{cfg.dt:g}",
            "horizon": f"{cfg.horizon:g}",
            "qoi": f"{evaluate_qoi(traj, qoi):.10g}",
        }
        for p in sorted(scenario.network.final_parts):
            summary[f"final_{part_name(p)}"] = f"{traj.states[-1, p]:.10g}"
    lines = [f"{k} = {v}" for k, v in summary.items()]
    (out / "qoi_summary.txt").write_text("\n".join(lines) + "\n")
    if args.format == "summary":
        print("\n".join(lines))
    else:
        print(f"wrote {out}")
    return 0


def cmd_convergence(args: argparse.Namespace) -> int:
    scenario = get_scenario(args.scenario)
    if scenario.config.stochastic:
        raise ModelError("convergence studies run the deterministic engine")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, args)
    qoi_spec = _default_qoi(scenario)
    qoi = lambda traj: evaluate_qoi(traj, qoi_spec)

    oracle = run_oracle(
        scenario.network,
        scenario.config,
        qoi,
        policy=scenario.policy,
        orders=scenario.orders,
        x0=scenario.initial,
        oracle=OracleConfig(tolerance=args.oracle_tol),
    )
    ladder = [float(x) for x in args.ladder.split(",")]
    from dataclasses import replace

    rows = []
    for dt in ladder:
        cfg = replace(scenario.config, dt=dt)
        best = None
        for _ in range(max(1, args.repeats)):
            t0 = time.perf_counter()
            traj = _run_once(replace(scenario, config=cfg))
            el = time.perf_counter() - t0
            best = el if best is None else min(best, el)
        q = qoi(traj)
        rows.append((dt, q, abs(q - oracle.qoi), best))
    with (out / "ladder.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dt", "qoi", "abs_error", "cpu_seconds"])
        for dt, q, err, sec in rows:
            w.writerow([f"{dt:g}", f"{q:.10g}", f"{err:.10g}", f"{sec:.6g}"])
    oracle_lines = [
        f"oracle_qoi = {oracle.qoi:.10g}",
        f"oracle_dt = {oracle.dt:.10g}",
        f"richardson = {oracle.richardson:.10g}",
    ] + [f"ladder_dt_{dt:g} = {q:.10g}" for dt, q in oracle.ladder]
    (out / "oracle.txt").write_text("\n".join(oracle_lines) + "\n")
    print(f"oracle qoi = {oracle.qoi:.6g} (dt={oracle.dt:g}); wrote {out / 'ladder.csv'}")
    return 0


def _bias_controlled_level(sampler, tol: Tolerances, samples: int) -> int:
    """Screening-only pass to pick the level whose bias meets eps_b."""
    estimates = []
    for level in (0, 1, 2):
        fine, coarse, cost = sampler.sample_pairs(level, 0, samples)
        d = np.asarray(fine) - np.asarray(coarse)
        estimates.append(LevelEstimate(
            level=level,
            dt=sampler.level_dt(level),
            n=samples,
            mean=float(d.mean()),
            variance=float(d.var(ddof=1)),
            cost=cost / samples,
        ))
    rates = estimate_rates(estimates)
    return select_max_level(rates.a, rates.bias_constant, tol.eps_b)


def _write_levels_csv(path: Path, result) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "dt", "n", "mean", "variance", "cost"])
        for le in result.levels:
            w.writerow([
                le.level, f"{le.dt:g}", le.n,
                f"{le.mean:.10g}", f"{le.variance:.10g}", f"{le.cost:.6g}",
            ])


def cmd_estimate(args: argparse.Namespace, method: str) -> int:
    scenario = get_scenario(args.scenario)
    if scenario.uq is None:
        raise ModelError(f"scenario {scenario.name!r} has no uncertainty block")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, args)
    sampler = ScenarioSampler.from_scenario(
        scenario, qoi_name=args.qoi, seed=args.seed if args.seed is not None else scenario.config.rng_seed
    )
    tol = Tolerances(tol=args.tol, confidence=args.confidence)
    if method == "mlmc":
        result = mlmc_estimate(
            sampler, tol,
            screening=ScreeningConfig(samples=args.screening_samples),
            workers=args.workers,
        )
        lines = result.report_lines()
        _write_levels_csv(out / "levels.csv", result)
    else:
        level = args.level
        if level is None:
            level = _bias_controlled_level(sampler, tol, max(100, args.screening_samples // 2))
        result = mc_estimate(
            sampler.mc_sample_fn(level, workers=args.workers),
            tol,
            pilot=args.pilot,
            level=level,
        )
        lines = [
            f"estimate = {result.estimate:.10g}",
            f"tol = {tol.tol:g}",
            f"eps_s = {tol.eps_s:.6g}",
            f"alpha_conf = {tol.confidence:g}",
            f"level = {result.level}",
            f"n_samples = {result.n}",
            f"variance = {result.variance:.6g}",
            f"total_cost_seconds = {result.cost:.6g}",
        ]
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines[:3]))
    print(f"wrote {out / 'report.txt'}")
    return 0


def cmd_list_scenarios(args: argparse.Namespace) -> int:
    for name in builtin_names():
        scenario = get_scenario(name)
        uq = "uq" if scenario.uq is not None else "--"
        print(
            f"{name:14s} {scenario.config.mode:4s} {uq:3s} "
            f"processes={scenario.network.n_processes:2d} parts={scenario.network.part_count:2d} "
            f"horizon={scenario.config.horizon:g}"
        )
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _positive(value: str) -> float:
    x = float(value)
    if x <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lleap",
        description="Time-bucket supply-chain simulation and multilevel Monte Carlo estimators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--scenario", required=True, help="builtin name or scenario file path")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--format", choices=("csv", "summary"), default="csv")

    p = sub.add_parser("simulate", help="run one simulation (or a stochastic ensemble)")
    common(p)
    p.add_argument("--dt", type=_positive, default=None, help="bucket size override")
    p.add_argument("--samples", type=int, default=1, help="stochastic ensemble size")
    p.add_argument("--stochastic", action="store_true", help="force the stochastic engine")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("convergence", help="bucket-refinement ladder against the resolved reference")
    common(p)
    p.add_argument("--ladder", default=",".join(f"{x:g}" for x in _DEFAULT_LADDER))
    p.add_argument("--repeats", type=int, default=3, help="timing repetitions per rung")
    p.add_argument("--oracle-tol", type=_positive, default=0.5)
    p.set_defaults(func=cmd_convergence)

    for name in ("estimate-mc", "estimate-mlmc"):
        p = sub.add_parser(name, help=f"{name.split('-')[1].upper()} estimator on a uq scenario")
        common(p)
        p.add_argument("--tol", type=_positive, required=True, help="total error tolerance")
        p.add_argument("--confidence", type=float, default=0.95)
        p.add_argument("--qoi", default=None, help="QoI variant name (default: first)")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--screening-samples", type=int, default=200)
        if name == "estimate-mc":
            p.add_argument("--pilot", type=int, default=100)
            p.add_argument("--level", type=int, default=None, help="sampling level (default: bias-controlled)")
            p.set_defaults(func=lambda a: cmd_estimate(a, "mc"))
        else:
            p.set_defaults(func=lambda a: cmd_estimate(a, "mlmc"))

    p = sub.add_parser("list-scenarios", help="list the builtin scenarios")
    p.set_defaults(func=cmd_list_scenarios)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ModelError, ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
