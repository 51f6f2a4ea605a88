"""Command-line front end emitting machine-readable reports.

Subcommands mirror the library's analyses: ``trajectory``, ``ck``,
``invariant``, ``interval``, ``feasibility``, ``simulate``, and the
meta-command ``reproduce-paper`` which runs the whole verification suite
with canonical parameters and succeeds only if every expected verdict
holds.

Reports are JSON with stable key order (byte-identical across runs for
identical flags, seeds included). Tabular data is emitted as CSV; when a
CSV is written to a file the matching figure is rendered next to it as a
PNG unless ``--no-plot`` is given. Times appearing in reports carry a
companion ``*_pi`` field with the exact rational multiple of pi when one
exists. Exit codes: 0 for pass or n/a verdicts, 1 for a failed verdict,
2 for usage or validation errors.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import chains, hierarchy, montecarlo, plotting
from .core import (
    DEFAULT_TOL,
    ProbabilityVector,
    TimeGrid,
    ToleranceConfig,
    TransitionFamily,
    UNIFORM,
    identity_family,
    matrix_apply,
)
from .errors import DichotomicError, ValidationError
from .quantum import gillespie_family, quantum_trajectory, QuantumTrajectoryConfig

DEFAULT_SEED = 20260810

QUARTER = math.pi / 4


# --------------------------------------------------------------------------
# Flag parsing helpers
# --------------------------------------------------------------------------

_PI_TOKEN = re.compile(r"^(?P<coeff>-?\d*\.?\d*)\s*pi\s*(?:/\s*(?P<den>\d+\.?\d*))?$")


def parse_time(token: str) -> float:
    """Parse '0.5', 'pi/8', '3pi/8', or '2pi' into a float."""
    token = token.strip().lower()
    m = _PI_TOKEN.match(token)
    if m:
        coeff_text = m.group("coeff")
        if coeff_text in ("", "+"):
            coeff = 1.0
        elif coeff_text == "-":
            coeff = -1.0
        else:
            coeff = float(coeff_text)
        den = float(m.group("den")) if m.group("den") else 1.0
        return coeff * math.pi / den
    try:
        return float(token)
    except ValueError as exc:
        raise ValidationError(f"cannot parse time token {token!r}") from exc


def parse_grid(spec: str) -> TimeGrid:
    """Parse 'linspace:a:b:n' or a comma-separated list of time tokens."""
    spec = spec.strip()
    if spec.startswith("linspace:"):
        parts = spec.split(":")
        if len(parts) != 4:
            raise ValidationError(
                f"linspace grid must be linspace:start:stop:num, got {spec!r}"
            )
        start, stop = parse_time(parts[1]), parse_time(parts[2])
        try:
            num = int(parts[3])
        except ValueError as exc:
            raise ValidationError(f"bad linspace count {parts[3]!r}") from exc
        return TimeGrid.linspace(start, stop, num)
    return TimeGrid.from_times(parse_time(tok) for tok in spec.split(","))


def parse_p0(text: str) -> ProbabilityVector:
    parts = text.split(",")
    if len(parts) == 1:
        return ProbabilityVector.from_p1(float(parts[0]))
    if len(parts) == 2:
        return ProbabilityVector(float(parts[0]), float(parts[1]))
    raise ValidationError(f"--p0 expects 'p1' or 'p1,p2', got {text!r}")


def parse_tol(text: str | None) -> ToleranceConfig:
    """Parse '--tol exact=1e-12,solver=1e-9,stat=4' style overrides."""
    if not text:
        return DEFAULT_TOL
    values = {
        "exact": DEFAULT_TOL.tol_exact,
        "solver": DEFAULT_TOL.tol_solver,
        "stat": DEFAULT_TOL.tol_stat,
    }
    for item in text.split(","):
        if "=" not in item:
            raise ValidationError(f"--tol items must be key=value, got {item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        if key not in values:
            raise ValidationError(f"unknown tolerance key {key!r}")
        values[key] = float(value)
    return ToleranceConfig(
        tol_exact=values["exact"],
        tol_solver=values["solver"],
        tol_stat=values["stat"],
    )


def pi_fraction(t: float, max_denominator: int = 1000, tol: float = 1e-12) -> str | None:
    """Exact rational multiple of pi as 'num/den', or None."""
    if abs(t) <= tol:
        return "0"
    fr = Fraction(t / math.pi).limit_denominator(max_denominator)
    if fr == 0:
        return None
    if abs(t - math.pi * fr.numerator / fr.denominator) <= tol * max(1.0, abs(t)):
        if fr.denominator == 1:
            return str(fr.numerator)
        return f"{fr.numerator}/{fr.denominator}"
    return None


def time_block(name: str, t: float | None) -> dict:
    if t is None:
        return {name: None, f"{name}_pi": None}
    return {name: t, f"{name}_pi": pi_fraction(t)}


def times_block(name: str, times) -> dict:
    values = list(times)
    return {
        name: values,
        f"{name}_pi": [pi_fraction(t) for t in values],
    }


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------


@dataclass
class RunReport:
    command: str
    inputs: dict
    results: dict
    tolerances: ToleranceConfig
    verdict: str  # "pass" | "fail" | "n/a"

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "command": self.command,
                "inputs": self.inputs,
                "results": self.results,
                "tolerances": asdict(self.tolerances),
                "verdict": self.verdict,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _jsonable(obj):
    """Recursively convert payloads to JSON-safe values (stable forms)."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _verdict(passed: bool) -> str:
    return "pass" if passed else "fail"


# --------------------------------------------------------------------------
# Families and trajectories by name
# --------------------------------------------------------------------------

FAMILY_NAMES = ("gillespie", "interpolation", "identity")


def build_family(name: str, omega: float, tol: ToleranceConfig) -> TransitionFamily:
    if name == "gillespie":
        return gillespie_family(omega)
    if name == "interpolation":
        traj = quantum_trajectory(QuantumTrajectoryConfig(omega=omega))
        return chains.interpolation_family(traj, tol.tol_exact)
    if name == "identity":
        return identity_family()
    raise ValidationError(f"unknown family {name!r}; choose from {FAMILY_NAMES}")


# --------------------------------------------------------------------------
# Command implementations
# --------------------------------------------------------------------------


def cmd_trajectory(args) -> tuple[RunReport, str | None, object]:
    tol = parse_tol(args.tol)
    if args.steps < 2:
        raise ValidationError(f"--steps must be >= 2, got {args.steps}")
    t_max = parse_time(args.t_max)
    cfg = QuantumTrajectoryConfig(omega=args.omega, phase_c=args.phase)
    traj = quantum_trajectory(cfg)
    grid = TimeGrid.linspace(0.0, t_max, args.steps)
    rows = [(t, traj(t).p1, traj(t).p2) for t in grid]
    report = RunReport(
        command="trajectory",
        inputs={
            "omega": args.omega,
            "phase": args.phase,
            **time_block("t_max", t_max),
            "steps": args.steps,
        },
        results={
            "rows": [[t, p1, p2] for t, p1, p2 in rows],
            **times_block("times", grid.times),
        },
        tolerances=tol,
        verdict="n/a",
    )
    csv_text = "t,p1,p2\n" + "\n".join(
        f"{t!r},{p1!r},{p2!r}" for t, p1, p2 in rows
    ) + "\n"

    def figure():
        return plotting.trajectory_figure(
            [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows],
            title=f"two-level trajectory (omega={args.omega})",
        )

    return report, csv_text, figure


def _ck_rows(family: TransitionFamily, grid: TimeGrid):
    rows = []
    for i, j, k in grid.triples():
        s, t, u = grid[i], grid[j], grid[k]
        try:
            rows.append((s, t, u, chains.ck_residual(family, s, t, u)))
        except DichotomicError:
            continue
    return rows


def cmd_ck(args) -> tuple[RunReport, str | None, object]:
    tol = parse_tol(args.tol)
    grid = parse_grid(args.grid)
    family = build_family(args.family, args.omega, tol)
    cert = chains.ck_certify(family, grid, tol)
    verdict = "n/a" if cert.n_triples == 0 else _verdict(cert.passed)
    results = {
        "passed": cert.passed,
        "worst_residual": cert.worst_residual,
        "n_triples": cert.n_triples,
        "n_failures": cert.n_failures,
        **times_block("grid", grid.times),
    }
    if cert.worst_triple is not None:
        results.update(times_block("worst_triple", cert.worst_triple))
    if cert.first_failure is not None:
        results["first_failure"] = {
            "mode": cert.first_failure.mode,
            **time_block("s", cert.first_failure.s),
            **time_block("t", cert.first_failure.t),
            "message": cert.first_failure.message,
        }
    report = RunReport(
        command="ck",
        inputs={"family": args.family, "omega": args.omega, "grid": args.grid},
        results=results,
        tolerances=tol,
        verdict=verdict,
    )
    rows = _ck_rows(family, grid)
    csv_text = "s,t,u,residual\n" + "\n".join(
        f"{s!r},{t!r},{u!r},{r!r}" for s, t, u, r in rows
    ) + "\n"

    def figure():
        return plotting.ck_residual_figure(
            [u - s for s, _, u, _ in rows],
            [r for *_, r in rows],
            title=f"composition residuals: {args.family}",
        )

    return report, csv_text, figure


def cmd_invariant(args) -> tuple[RunReport, str | None, object]:
    tol = parse_tol(args.tol)
    grid = parse_grid(args.grid)
    family = build_family(args.family, args.omega, tol)
    result = chains.admissible_initial(family, grid, tol)
    verdict = "n/a"
    if args.expect:
        expectation = args.expect.strip()
        if expectation.startswith("unique"):
            ok = result.kind == "unique_point"
            if ":" in expectation and ok:
                target = float(expectation.split(":", 1)[1])
                ok = abs(result.value - target) <= tol.tol_solver
        else:
            ok = result.kind == expectation
        verdict = _verdict(ok)
    report = RunReport(
        command="invariant",
        inputs={
            "family": args.family,
            "omega": args.omega,
            "grid": args.grid,
            "expect": args.expect,
        },
        results={
            "kind": result.kind,
            "value": result.value,
            "residual": result.residual,
            "interval": list(result.interval) if result.interval else None,
            "n_constraints": result.n_constraints,
            **times_block("grid", grid.times),
        },
        tolerances=tol,
        verdict=verdict,
    )
    return report, None, None


def cmd_interval(args) -> tuple[RunReport, str | None, object]:
    tol = parse_tol(args.tol)
    grid = parse_grid(args.grid)
    traj = quantum_trajectory(QuantumTrajectoryConfig(omega=args.omega))
    result = chains.maximal_markov_interval(traj, grid, tol)
    verdict = "n/a"
    if args.expect_tstar:
        target = parse_time(args.expect_tstar)
        verdict = _verdict(
            abs(result.t_star - target) <= 2.0 * max(result.resolution, tol.tol_exact)
        )
    results = {
        **time_block("t_star", result.t_star),
        "failure_mode": result.failure_mode,
        "resolution": result.resolution,
        "n_scanned": result.n_scanned,
    }
    if result.failure_witness is not None:
        s, t = result.failure_witness
        results["failure_witness"] = {**time_block("s", s), **time_block("t", t)}
    else:
        results["failure_witness"] = None
    report = RunReport(
        command="interval",
        inputs={
            "omega": args.omega,
            "grid": args.grid,
            "expect_tstar": args.expect_tstar,
        },
        results=results,
        tolerances=tol,
        verdict=verdict,
    )
    rows = [(t, traj(t).p1, traj(t).p2, traj.gap(t)) for t in grid]
    csv_text = "t,p1,p2,gap\n" + "\n".join(
        f"{t!r},{p1!r},{p2!r},{g!r}" for t, p1, p2, g in rows
    ) + "\n"

    def figure():
        return plotting.interval_figure(
            [r[0] for r in rows], [r[3] for r in rows], result.t_star,
        )

    return report, csv_text, figure


# ---- feasibility specs: JSON schema {times, marginals, transitions} ----


def spec_to_json_dict(spec: hierarchy.PairwiseSpec) -> dict:
    return {
        "times": list(spec.grid.times),
        "marginals": [[m.p1, m.p2] for m in spec.marginals],
        "transitions": [
            {
                "from": j,
                "to": i,
                "matrix": [[t.m11, t.m12], [t.m21, t.m22]],
            }
            for (j, i), t in sorted(spec.transitions.items())
        ],
    }


def spec_from_json_dict(doc: dict) -> hierarchy.PairwiseSpec:
    try:
        times = [
            parse_time(t) if isinstance(t, str) else float(t) for t in doc["times"]
        ]
        grid = TimeGrid.from_times(times)
        marginals = tuple(
            ProbabilityVector(float(m[0]), float(m[1])) for m in doc["marginals"]
        )
        transitions = {}
        for entry in doc["transitions"]:
            j, i = int(entry["from"]), int(entry["to"])
            (m11, m12), (m21, m22) = entry["matrix"]
            transitions[(j, i)] = hierarchy.StochasticMatrix(
                float(m11), float(m12), float(m21), float(m22)
            )
    except (KeyError, IndexError, TypeError) as exc:
        raise ValidationError(f"malformed feasibility spec: {exc!r}") from exc
    return hierarchy.PairwiseSpec(grid, marginals, transitions)


def bundled_spec(name: str, tol: ToleranceConfig) -> hierarchy.PairwiseSpec:
    """Canonical built-in specs used by the verification suite."""
    if name == "gillespie-uniform-3":
        grid = TimeGrid.from_times((0.0, math.pi / 8, QUARTER))
        return hierarchy.spec_from_family(
            gillespie_family(), grid, [UNIFORM] * 3
        )
    if name == "interp-markov-5":
        grid = TimeGrid.from_times(
            (0.0, math.pi / 16, math.pi / 8, 3 * math.pi / 16, QUARTER)
        )
        family = build_family("interpolation", 1.0, tol)
        measure = hierarchy.markov_joint(
            family, ProbabilityVector(1.0, 0.0), grid
        )
        return hierarchy.induced_spec(measure)
    raise ValidationError(
        f"unknown bundled spec {name!r}; "
        "choose gillespie-uniform-3 or interp-markov-5"
    )


def cmd_feasibility(args) -> tuple[RunReport, str | None, object]:
    tol = parse_tol(args.tol)
    if bool(args.spec_file) == bool(args.bundled):
        raise ValidationError("give either a spec file or --bundled, not both")
    if args.bundled:
        spec = bundled_spec(args.bundled, tol)
        source = f"bundled:{args.bundled}"
    else:
        doc = json.loads(Path(args.spec_file).read_text(encoding="utf-8"))
        spec = spec_from_json_dict(doc)
        source = args.spec_file
    if args.dump_spec:
        Path(args.dump_spec).write_text(
            json.dumps(spec_to_json_dict(spec), sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
    result = hierarchy.feasibility_solve(spec, tol)

    results: dict = {
        "status": result.status,
        "method": result.method,
        **times_block("times", spec.grid.times),
    }
    if result.witness is not None:
        results["witness_deviation"] = result.witness_deviation
        results["witness_weights"] = result.witness.weights.tolist()
        n = len(spec.grid)
        if n >= 3:
            worst_closure = max(
                hierarchy.markov_closure_residual(result.witness, c, b, a)
                for a, b, c in spec.grid.triples()
            )
            results["witness_markov_closure_residual"] = worst_closure
    if result.certificate is not None:
        results["certificate"] = {
            "combination": [[label, c] for label, c in result.certificate.combination],
            "margin": result.certificate.margin,
        }
    if result.correlation_check is not None:
        cc = result.correlation_check
        results["correlation_check"] = {
            "e01": cc.e01,
            "e12": cc.e12,
            "e02": cc.e02,
            "lhs_abs_e01_plus_e12": cc.lhs,
            "rhs_one_plus_e02": cc.rhs,
            "violated": cc.violated,
        }
    verdict = "n/a"
    if args.expect:
        verdict = _verdict(result.status == args.expect)
    report = RunReport(
        command="feasibility",
        inputs={"spec": source, "expect": args.expect},
        results=results,
        tolerances=tol,
        verdict=verdict,
    )
    return report, None, None


def _chain_marginals(
    family: TransitionFamily, p0: ProbabilityVector, grid: TimeGrid
) -> list[ProbabilityVector]:
    out = [p0]
    for i in range(len(grid) - 1):
        out.append(matrix_apply(family(grid[i], grid[i + 1]), out[-1]))
    return out


def _transition_z_section(ensemble, family, grid, i, j, tol):
    """Column z-scores of the empirical (j -> i) transition, supported columns."""
    columns, counts = montecarlo.empirical_transition_supported(ensemble, i, j)
    analytic = family(grid[j], grid[i])
    section = {
        **time_block("from", grid[j]),
        **time_block("to", grid[i]),
        "occupancy": list(counts),
        "columns": {},
    }
    worst = 0.0
    for b, col in sorted(columns.items()):
        z = montecarlo.z_scores(col, analytic.column(b), counts[b - 1])
        worst = max(worst, float(np.max(np.abs(z))))
        section["columns"][str(b)] = {
            "empirical": [col.p1, col.p2],
            "analytic": [analytic.column(b).p1, analytic.column(b).p2],
            "z": z.tolist(),
        }
    section["max_abs_z"] = worst
    section["within_tol_stat"] = worst <= tol.tol_stat
    return section, worst


def cmd_simulate(args) -> tuple[RunReport, str | None, object]:
    tol = parse_tol(args.tol)
    grid = parse_grid(args.grid)
    family = build_family(args.family, args.omega, tol)
    p0 = parse_p0(args.p0)
    cfg = montecarlo.EnsembleConfig(n_paths=args.n_paths, seed=args.seed, grid=grid)
    ensemble = montecarlo.sample_paths(family, p0, cfg)

    empirical = montecarlo.empirical_marginals(ensemble)
    analytic = _chain_marginals(family, p0, grid)
    marginal_sections = []
    worst_z = 0.0
    for i, (emp, ana) in enumerate(zip(empirical, analytic)):
        z = montecarlo.z_scores(emp, ana, args.n_paths)
        worst_z = max(worst_z, float(np.max(np.abs(z))))
        marginal_sections.append(
            {
                **time_block("t", grid[i]),
                "empirical": [emp.p1, emp.p2],
                "analytic": [ana.p1, ana.p2],
                "z": z.tolist(),
            }
        )

    consecutive_sections = []
    for i in range(len(grid) - 1):
        section, w = _transition_z_section(ensemble, family, grid, i + 1, i, tol)
        consecutive_sections.append(section)
        worst_z = max(worst_z, w)

    # Non-consecutive transitions test composition physically: they match
    # the family only if it satisfies Chapman-Kolmogorov. Disagreement is
    # reported, not failed.
    nonconsecutive_sections = []
    for j, i in grid.pairs():
        if i == j + 1:
            continue
        section, _ = _transition_z_section(ensemble, family, grid, i, j, tol)
        nonconsecutive_sections.append(section)

    passed = worst_z <= tol.tol_stat
    report = RunReport(
        command="simulate",
        inputs={
            "family": args.family,
            "omega": args.omega,
            "grid": args.grid,
            "p0": [p0.p1, p0.p2],
            "n_paths": args.n_paths,
            "seed": args.seed,
        },
        results={
            "marginals": marginal_sections,
            "consecutive_transitions": consecutive_sections,
            "nonconsecutive_transitions": nonconsecutive_sections,
            "max_abs_z": worst_z,
            **times_block("times", grid.times),
        },
        tolerances=tol,
        verdict=_verdict(passed),
    )
    header = ",".join(repr(t) for t in grid.times)
    body = "\n".join(
        ",".join(str(int(v)) for v in row) for row in ensemble.states
    )
    csv_text = header + "\n" + body + "\n"

    def figure():
        return plotting.ensemble_figure(
            list(grid.times),
            [m.p1 for m in empirical],
            [m.p1 for m in analytic],
            args.n_paths,
            title=f"ensemble marginals: {args.family}",
        )

    return report, csv_text, figure


# --------------------------------------------------------------------------
# Full verification suite
# --------------------------------------------------------------------------


@dataclass
class _Step:
    name: str
    ok: bool
    details: dict


def _step_trajectory_landmarks(tol: ToleranceConfig) -> _Step:
    traj = quantum_trajectory()
    at0 = traj(0.0)
    at_quarter = traj(QUARTER)
    dev = max(
        at0.max_abs_difference(ProbabilityVector(1.0, 0.0)),
        at_quarter.max_abs_difference(UNIFORM),
    )
    return _Step(
        "trajectory-landmarks",
        dev <= tol.tol_exact,
        {"max_deviation": dev, **time_block("uniform_crossing", QUARTER)},
    )


def _step_ck_gillespie(tol: ToleranceConfig) -> _Step:
    grid = TimeGrid.from_times((0.0, math.pi / 8, QUARTER))
    cert = chains.ck_certify(gillespie_family(), grid, tol)
    ok = (not cert.passed) and abs(cert.worst_residual - 0.25) <= tol.tol_exact
    return _Step(
        "ck-gillespie-fails",
        ok,
        {"worst_residual": cert.worst_residual, "expected_worst": 0.25},
    )


def _step_ck_interpolation(tol: ToleranceConfig) -> _Step:
    grid = TimeGrid.linspace(0.0, QUARTER, 50)
    family = build_family("interpolation", 1.0, tol)
    cert = chains.ck_certify(family, grid, tol)
    return _Step(
        "ck-interpolation-passes",
        cert.passed,
        {"worst_residual": cert.worst_residual, "n_triples": cert.n_triples},
    )


def _step_invariant(tol: ToleranceConfig) -> _Step:
    grid = TimeGrid.from_times((0.0, math.pi / 8, QUARTER, 3 * math.pi / 8))
    result = chains.admissible_initial(gillespie_family(), grid, tol)
    ok = result.kind == "unique_point" and abs(result.value - 0.5) <= tol.tol_solver
    return _Step(
        "invariant-unique-uniform",
        ok,
        {"kind": result.kind, "value": result.value, "residual": result.residual},
    )


def _step_interval(tol: ToleranceConfig) -> _Step:
    grid = TimeGrid.linspace(0.0, math.pi / 2, 10000)
    traj = quantum_trajectory()
    result = chains.maximal_markov_interval(traj, grid, tol)
    ok = (
        abs(result.t_star - QUARTER) <= 2.0 * result.resolution
        and result.failure_witness is not None
    )
    details = {
        **time_block("t_star", result.t_star),
        "resolution": result.resolution,
        "failure_mode": result.failure_mode,
    }
    if result.failure_witness:
        s, t = result.failure_witness
        details["failure_witness"] = {**time_block("s", s), **time_block("t", t)}
    return _Step("interval-quarter-period", ok, details)


def _step_freeze(tol: ToleranceConfig, rng: np.random.Generator) -> _Step:
    times = np.unique(rng.random(100) * 4.0 * math.pi)
    grid = TimeGrid.from_times([0.0, *times.tolist()])
    report = chains.symmetric_freeze_check(gillespie_family(), 0.0, grid, tol)
    return _Step(
        "freeze-uniform-invariant",
        report.passed,
        {"max_deviation": report.max_deviation, "n_times": report.n_times},
    )


def _step_propagation(tol: ToleranceConfig, rng: np.random.Generator) -> _Step:
    traj = quantum_trajectory()
    family = build_family("interpolation", 1.0, tol)
    draws = rng.random((1000, 2)) * QUARTER
    worst = 0.0
    n_pairs = 0
    for a, b in draws:
        s, t = (a, b) if a < b else (b, a)
        if s == t:
            continue
        n_pairs += 1
        moved = matrix_apply(family(s, t), traj(s))
        worst = max(worst, moved.max_abs_difference(traj(t)))
    return _Step(
        "interpolation-propagates-trajectory",
        worst <= tol.tol_exact and n_pairs > 0,
        {"worst_residual": worst, "n_pairs": n_pairs},
    )


def _step_identity_limit(tol: ToleranceConfig) -> _Step:
    family = build_family("interpolation", 1.0, tol)
    eps = 1e-6
    worst = 0.0
    for s in (0.0, math.pi / 16, math.pi / 8):
        m = family(s, s + eps)
        worst = max(
            worst,
            m.max_abs_difference(chains.IDENTITY),
        )
    return _Step(
        "identity-limit",
        worst <= 3.0 * eps,
        {"worst_distance": worst, "bound": 3.0 * eps, "epsilon": eps},
    )


def _step_reconciliation(tol: ToleranceConfig, rng: np.random.Generator) -> _Step:
    gil = gillespie_family()
    interp = build_family("interpolation", 1.0, tol)
    worst = 0.0
    for u in rng.random(100):
        t = QUARTER * (1.0 - u)  # in (0, pi/4]
        if t == 0.0:
            continue
        worst = max(worst, gil(0.0, t).max_abs_difference(interp(0.0, t)))
    return _Step(
        "reconciliation-from-zero",
        worst <= tol.tol_exact,
        {"worst_difference": worst},
    )


def _step_infeasible(tol: ToleranceConfig) -> _Step:
    spec = bundled_spec("gillespie-uniform-3", tol)
    result = hierarchy.feasibility_solve(spec, tol)
    cc = result.correlation_check
    sqrt2 = math.sqrt(2.0)
    ok = (
        result.status == "infeasible"
        and result.certificate is not None
        and cc is not None
        and cc.violated
        and abs(cc.lhs - sqrt2) <= tol.tol_solver
        and abs(cc.rhs - 1.0) <= tol.tol_solver
    )
    details = {"status": result.status}
    if cc is not None:
        details["correlation_lhs"] = cc.lhs
        details["correlation_rhs"] = cc.rhs
    if result.certificate is not None:
        details["certificate_margin"] = result.certificate.margin
    return _Step("feasibility-gillespie-uniform-infeasible", ok, details)


def _step_feasible(tol: ToleranceConfig) -> _Step:
    spec = bundled_spec("interp-markov-5", tol)
    result = hierarchy.feasibility_solve(spec, tol)
    ok = result.status == "feasible" and result.witness_deviation <= tol.tol_solver
    details = {
        "status": result.status,
        "witness_deviation": result.witness_deviation,
        "method": result.method,
    }
    if result.witness is not None:
        worst_closure = max(
            hierarchy.markov_closure_residual(result.witness, c, b, a)
            for a, b, c in spec.grid.triples()
        )
        details["witness_markov_closure_residual"] = worst_closure
        ok = ok and worst_closure <= tol.tol_solver
    return _Step("feasibility-interpolation-chain-feasible", ok, details)


def _step_simulation(tol: ToleranceConfig, seed: int) -> _Step:
    grid = TimeGrid.from_times((0.0, math.pi / 8, QUARTER))
    family = build_family("interpolation", 1.0, tol)
    p0 = ProbabilityVector(1.0, 0.0)
    cfg = montecarlo.EnsembleConfig(n_paths=100_000, seed=seed, grid=grid)
    first = montecarlo.sample_paths(family, p0, cfg)
    second = montecarlo.sample_paths(family, p0, cfg)
    identical = bool(np.array_equal(first.states, second.states))

    worst = 0.0
    analytic = _chain_marginals(family, p0, grid)
    for i, emp in enumerate(montecarlo.empirical_marginals(first)):
        z = montecarlo.z_scores(emp, analytic[i], cfg.n_paths)
        worst = max(worst, float(np.max(np.abs(z))))
    for i in range(len(grid) - 1):
        _, w = _transition_z_section(first, family, grid, i + 1, i, tol)
        worst = max(worst, w)
    ok = identical and worst <= tol.tol_stat
    return _Step(
        "simulation-within-sampling-error",
        ok,
        {
            "max_abs_z": worst,
            "n_paths": cfg.n_paths,
            "seed": seed,
            "rerun_identical": identical,
        },
    )


def cmd_reproduce(args) -> tuple[RunReport, str | None, object]:
    tol = parse_tol(args.tol)
    rng = np.random.Generator(np.random.Philox(args.seed))
    steps = [
        _step_trajectory_landmarks(tol),
        _step_ck_gillespie(tol),
        _step_ck_interpolation(tol),
        _step_invariant(tol),
        _step_interval(tol),
        _step_freeze(tol, rng),
        _step_propagation(tol, rng),
        _step_identity_limit(tol),
        _step_reconciliation(tol, rng),
        _step_infeasible(tol),
        _step_feasible(tol),
        _step_simulation(tol, args.seed),
    ]
    for step in steps:
        print(
            f"[{'PASS' if step.ok else 'FAIL'}] {step.name}",
            file=sys.stderr,
        )
    all_ok = all(step.ok for step in steps)
    report = RunReport(
        command="reproduce-paper",
        inputs={"seed": args.seed},
        results={
            "steps": [
                {"name": s.name, "ok": s.ok, "details": s.details} for s in steps
            ],
            "n_steps": len(steps),
            "n_passed": sum(s.ok for s in steps),
        },
        tolerances=tol,
        verdict=_verdict(all_ok),
    )
    if args.out:
        _write_reproduce_artifacts(Path(args.out), tol, args.seed)
    return report, None, None


def _write_reproduce_artifacts(out_dir: Path, tol: ToleranceConfig, seed: int) -> None:
    """Render the suite's tables and figures into a directory."""
    out_dir.mkdir(parents=True, exist_ok=True)
    ns = argparse.Namespace

    report, csv_text, figure = cmd_trajectory(
        ns(omega=1.0, phase=0.0, t_max="pi/2", steps=200, tol=None)
    )
    _write_artifact(out_dir, "trajectory", report, csv_text, figure)

    report, csv_text, figure = cmd_ck(
        ns(family="gillespie", omega=1.0, grid="0,pi/8,pi/4", tol=None)
    )
    _write_artifact(out_dir, "ck_gillespie", report, csv_text, figure)

    report, csv_text, figure = cmd_ck(
        ns(family="interpolation", omega=1.0, grid="linspace:0:pi/4:50", tol=None)
    )
    _write_artifact(out_dir, "ck_interpolation", report, csv_text, figure)

    report, _, _ = cmd_invariant(
        ns(
            family="gillespie",
            omega=1.0,
            grid="0,pi/8,pi/4,3pi/8",
            expect="unique:0.5",
            tol=None,
        )
    )
    _write_artifact(out_dir, "invariant", report, None, None)

    report, csv_text, figure = cmd_interval(
        ns(omega=1.0, grid="linspace:0:pi/2:10000", expect_tstar="pi/4", tol=None)
    )
    _write_artifact(out_dir, "interval", report, csv_text, figure)

    report, _, _ = cmd_feasibility(
        ns(
            spec_file=None,
            bundled="gillespie-uniform-3",
            expect="infeasible",
            dump_spec=str(out_dir / "feasibility_gillespie_uniform_spec.json"),
            tol=None,
        )
    )
    _write_artifact(out_dir, "feasibility_gillespie_uniform", report, None, None)

    report, _, _ = cmd_feasibility(
        ns(
            spec_file=None,
            bundled="interp-markov-5",
            expect="feasible",
            dump_spec=None,
            tol=None,
        )
    )
    _write_artifact(out_dir, "feasibility_interp_markov", report, None, None)

    report, csv_text, figure = cmd_simulate(
        ns(
            family="interpolation",
            omega=1.0,
            grid="0,pi/8,pi/4",
            p0="1,0",
            n_paths=100_000,
            seed=seed,
            tol=None,
        )
    )
    _write_artifact(out_dir, "simulate", report, csv_text, figure)


def _write_artifact(out_dir: Path, stem: str, report, csv_text, figure) -> None:
    (out_dir / f"{stem}.json").write_text(report.to_json(), encoding="utf-8")
    if csv_text is not None:
        (out_dir / f"{stem}.csv").write_text(csv_text, encoding="utf-8")
    if figure is not None:
        plotting.save_figure(figure(), out_dir / f"{stem}.png")


# --------------------------------------------------------------------------
# Output handling, parser, entry point
# --------------------------------------------------------------------------


def _emit(args, report: RunReport, csv_text: str | None, figure) -> None:
    fmt = getattr(args, "format", "json")
    out = getattr(args, "out", None)
    if fmt == "csv":
        if csv_text is None:
            raise ValidationError(
                f"command {report.command!r} has no CSV form; use --format json"
            )
        payload = csv_text
    else:
        payload = report.to_json()
    if out:
        path = Path(out)
        path.write_text(payload, encoding="utf-8")
        if fmt == "csv" and figure is not None and not getattr(args, "no_plot", False):
            plotting.save_figure(figure(), path.with_suffix(".png"))
    else:
        sys.stdout.write(payload)


def _add_common(parser: argparse.ArgumentParser, csv_capable: bool = True) -> None:
    parser.add_argument("--tol", default=None,
                        help="tolerance overrides, e.g. exact=1e-12,solver=1e-9,stat=4")
    parser.add_argument("--out", default=None, help="write output to this path")
    if csv_capable:
        parser.add_argument("--format", choices=("json", "csv"), default="json")
        parser.add_argument("--no-plot", action="store_true",
                            help="do not render a figure next to a CSV --out")
    else:
        parser.set_defaults(format="json", no_plot=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dichotomic",
        description=(
            "Verification and simulation toolkit for two-state "
            "time-inhomogeneous stochastic jump processes."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trajectory", help="tabulate the two-level probability trajectory")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--phase", type=float, default=0.0,
                   help="global phase constant (cancels in all probabilities)")
    p.add_argument("--t-max", default="pi/2")
    p.add_argument("--steps", type=int, default=100)
    _add_common(p)
    p.set_defaults(run=cmd_trajectory)

    p = sub.add_parser("ck", help="certify the Chapman-Kolmogorov equation on a grid")
    p.add_argument("--family", choices=FAMILY_NAMES, default="gillespie")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--grid", default="0,pi/8,pi/4")
    _add_common(p)
    p.set_defaults(run=cmd_ck)

    p = sub.add_parser("invariant",
                       help="solve for initial distributions that propagate consistently")
    p.add_argument("--family", choices=FAMILY_NAMES, default="gillespie")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--grid", default="0,pi/8,pi/4,3pi/8")
    p.add_argument("--expect", default=None,
                   help="unique[:VALUE], all_of_simplex, interval, or empty")
    _add_common(p, csv_capable=False)
    p.set_defaults(run=cmd_invariant)

    p = sub.add_parser("interval",
                       help="locate the maximal horizon of the symmetric interpolation")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--grid", default="linspace:0:pi/2:10000")
    p.add_argument("--expect-tstar", default=None,
                   help="expected t*, e.g. pi/4 (pass iff within 2 grid steps)")
    _add_common(p)
    p.set_defaults(run=cmd_interval)

    p = sub.add_parser("feasibility",
                       help="decide whether a pairwise spec extends to a path measure")
    p.add_argument("spec_file", nargs="?", default=None,
                   help="JSON file with fields {times, marginals, transitions}")
    p.add_argument("--bundled", default=None,
                   help="use a built-in spec: gillespie-uniform-3 or interp-markov-5")
    p.add_argument("--expect", choices=("feasible", "infeasible"), default=None)
    p.add_argument("--dump-spec", default=None,
                   help="also write the spec used as JSON to this path")
    _add_common(p, csv_capable=False)
    p.set_defaults(run=cmd_feasibility)

    p = sub.add_parser("simulate", help="sample an ensemble of paths and compare to analytics")
    p.add_argument("--family", choices=FAMILY_NAMES, default="interpolation")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--grid", default="0,pi/8,pi/4")
    p.add_argument("--p0", default="1,0")
    p.add_argument("--n-paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_common(p)
    p.set_defaults(run=cmd_simulate)

    p = sub.add_parser(
        "reproduce-paper",
        help="run the full verification suite with canonical parameters",
    )
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=None,
                   help="directory for per-step reports, tables, and figures")
    p.add_argument("--tol", default=None)
    p.set_defaults(run=cmd_reproduce, format="json", no_plot=False)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "reproduce-paper":
            report, _, _ = cmd_reproduce(args)
            sys.stdout.write(report.to_json())
        else:
            report, csv_text, figure = args.run(args)
            _emit(args, report, csv_text, figure)
    except DichotomicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if report.verdict == "fail":
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
