"""Scenario-driven command line: analyze | verify | tune | synth | simulate.

Exit codes: 0 success, 1 bad input, 2 assumption failure, 3 certification
failure, 4 synthesis failure, 5 divergence.  OSSCTL_THREADS caps the worker
count used by the tune grid.
"""

import argparse
import concurrent.futures
import csv
import json
import os
import sys

import numpy as np

from .controller import PiGains
from .kkt import build_kkt_geometry
from .lmi import verify_stability
from .oracle import OracleError, solve_steady_state
from .plant import (
    check_detectable,
    check_full_row_rank_AB,
    check_stabilizable,
    eigenvalues,
)
from .scenario import Scenario, ScenarioError, load_scenario
from .sim import DivergenceError, convergence_metrics, simulate
from .synthesis import (
    SynthesisError,
    loop_transform,
    stabilizer_to_dict,
    synthesize_stabilizer,
)

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_ASSUMPTION = 2
EXIT_CERTIFICATION = 3
EXIT_SYNTHESIS = 4
EXIT_DIVERGENCE = 5


def _thread_count() -> int:
    raw = os.environ.get("OSSCTL_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return max(1, os.cpu_count() or 1)


def _write_json(out_dir: str, name: str, payload: dict) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=str)
        fh.write("\n")
    return path


def cmd_analyze(scn: Scenario, out_dir: str, dt: float) -> int:
    plant = scn.plant
    checks = {
        "stabilizable": check_stabilizable(plant),
        "detectable": check_detectable(plant),
        "full_row_rank_AB": check_full_row_rank_AB(plant),
    }
    report = {
        "scenario": scn.name,
        "dimensions": {"n": plant.n, "m": plant.m, "p": plant.p},
        "checks": checks,
        "eigenvalues": [
            {"re": float(ev.real), "im": float(ev.imag)}
            for ev in eigenvalues(plant.A)
        ],
    }
    ok = all(checks.values())
    if ok:
        geometry = build_kkt_geometry(plant)
        report["Q"] = geometry.Q.tolist()
        report["R"] = geometry.R.tolist()
        segments = []
        for i, d in enumerate(scn.schedule.values):
            try:
                ref = solve_steady_state(plant, geometry, scn.objective, d)
                segments.append(
                    {
                        "segment": i,
                        "t_start": float(scn.schedule.times[i]),
                        "y_star": ref.y_star.tolist(),
                        "u_star": ref.u_star.tolist(),
                        "objective_value": ref.objective_value,
                    }
                )
            except OracleError as exc:
                segments.append({"segment": i, "error": str(exc)})
                ok = False
        report["optimizers"] = segments
    else:
        failed = [k for k, v in checks.items() if not v]
        report["failed_checks"] = failed
    _write_json(out_dir, "analyze.json", report)
    print(json.dumps(report["checks"]))
    return EXIT_OK if ok else EXIT_ASSUMPTION


def _require_pi(scn: Scenario) -> PiGains:
    if not isinstance(scn.controller, PiGains):
        raise ScenarioError("this command requires a PI controller in the scenario")
    return scn.controller


def cmd_verify(scn: Scenario, out_dir: str, dt: float) -> int:
    gains = _require_pi(scn)
    geometry = build_kkt_geometry(scn.plant)
    cert = verify_stability(
        scn.plant,
        geometry,
        gains,
        scn.objective.kappa,
        scn.objective.lipschitz,
        max_sweeps=scn.verification.max_sweeps,
    )
    report = {
        "scenario": scn.name,
        "certified": cert.feasible,
        "status": cert.status,
        "alpha": cert.alpha,
        "eig_S_max": cert.eig_S_max,
        "eig_P_min": cert.eig_P_min,
        "sweeps": cert.sweeps,
        "P": cert.P.tolist(),
    }
    _write_json(out_dir, "certificate.json", report)
    print(f"certified={cert.feasible} status={cert.status}")
    return EXIT_OK if cert.feasible else EXIT_CERTIFICATION


def cmd_tune(scn: Scenario, out_dir: str, dt: float) -> int:
    if not scn.verification.kp_grid or not scn.verification.ki_grid:
        raise ScenarioError("tune requires verification.kp_grid and .ki_grid")
    geometry = build_kkt_geometry(scn.plant)
    pairs = [
        (kp, ki)
        for kp in scn.verification.kp_grid
        for ki in scn.verification.ki_grid
    ]

    def one(pair):
        kp, ki = pair
        cert = verify_stability(
            scn.plant,
            geometry,
            PiGains.from_scalars(kp, ki, scn.plant.m),
            scn.objective.kappa,
            scn.objective.lipschitz,
            max_sweeps=scn.verification.max_sweeps,
        )
        return {
            "k_P": kp,
            "k_I": ki,
            "certified": cert.feasible,
            "margin": -cert.eig_S_max,
            "sweeps": cert.sweeps,
        }

    workers = min(_thread_count(), len(pairs))
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, pairs))
    else:
        rows = [one(p) for p in pairs]
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "tune.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["k_P", "k_I", "certified", "margin", "sweeps"]
        )
        writer.writeheader()
        writer.writerows(rows)
    n_cert = sum(r["certified"] for r in rows)
    print(f"certified {n_cert}/{len(rows)} gain pairs -> {path}")
    return EXIT_OK if n_cert > 0 else EXIT_CERTIFICATION


def cmd_synth(scn: Scenario, out_dir: str, dt: float) -> int:
    geometry = build_kkt_geometry(scn.plant)
    aug = loop_transform(
        scn.plant, geometry, scn.objective.kappa, scn.objective.lipschitz
    )
    result = synthesize_stabilizer(aug, geometry, scn.objective.lipschitz)
    payload = stabilizer_to_dict(result.stabilizer, gamma=result.gamma)
    payload["hinf_achieved"] = result.hinf_achieved
    payload["loop_margin"] = result.loop_margin
    path = _write_json(out_dir, "stabilizer.json", payload)
    print(f"gamma={result.gamma:.4g} (H-inf {result.hinf_achieved:.4g}) -> {path}")
    return EXIT_OK


def cmd_simulate(scn: Scenario, out_dir: str, dt: float) -> int:
    geometry = build_kkt_geometry(scn.plant)
    controller = scn.controller
    if controller == "synthesize":
        aug = loop_transform(
            scn.plant, geometry, scn.objective.kappa, scn.objective.lipschitz
        )
        controller = synthesize_stabilizer(
            aug, geometry, scn.objective.lipschitz
        ).stabilizer
    trace = simulate(
        scn.plant,
        geometry,
        scn.objective,
        controller,
        scn.schedule,
        scn.simulation.t_final,
        dt=dt if dt is not None else scn.simulation.dt,
        x0=scn.simulation.x0,
        eta0=scn.simulation.eta0,
        xs0=scn.simulation.xs0,
    )
    metrics = convergence_metrics(trace)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "trace.csv")
    trace.to_csv(csv_path)
    _write_json(out_dir, "metrics.json", {"scenario": scn.name, "segments": metrics})
    worst = max(m["terminal_error"] for m in metrics)
    print(f"simulated {trace.t[-1]:.6g}s, worst terminal error {worst:.3e} -> {csv_path}")
    return EXIT_OK


_COMMANDS = {
    "analyze": cmd_analyze,
    "verify": cmd_verify,
    "tune": cmd_tune,
    "synth": cmd_synth,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ossctl",
        description="Optimal steady-state control: analyze, certify, synthesize, simulate.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--scenario", required=True, help="scenario JSON path")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--dt", type=float, default=None, help="override time step")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed")
    args = parser.parse_args(argv)
    if args.seed is not None:
        np.random.seed(args.seed)
    try:
        scn = load_scenario(args.scenario)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        return _COMMANDS[args.command](scn, args.out, args.dt)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OracleError as exc:
        print(f"assumption failure: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except SynthesisError as exc:
        print(f"synthesis failure: {exc}", file=sys.stderr)
        return EXIT_SYNTHESIS
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
