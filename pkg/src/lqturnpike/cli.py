"""Command-line front end: scenario runs, verification suites, CSV emission.

Subcommands
-----------
stationary : solve the steady-state problem and write the triple
solve      : solve one finite-horizon tracking problem and write the trajectory
riccati    : solve the algebraic and differential Riccati equations
turnpike   : run the turnpike verification over the configured horizons
yosida     : run the stationary and dynamic smoothing convergence studies
verify     : run the acceptance suite (quick or full)

Every command accepts ``--config`` (JSON, see the README for the schema)
plus targeted overrides, writes its CSV outputs and a JSON run manifest
into the output directory, and follows one exit-code contract:
0 success, 1 check failure, 2 input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import os
import sys as _sys
import tempfile
import time

import numpy as np

from . import __version__, reporting
from .errors import (
    ConfigError,
    DimensionError,
    GridMismatchError,
    LqTurnpikeError,
    NonFiniteError,
    ProblemSizeError,
    ResolventError,
    UniquenessError,
)
from .lq import LqProblem, cost, solve_riccati_sweep, solve_transcription
from .riccati import solve_are, solve_dre
from .scenarios import ExperimentConfig, build_scenario, config_from_dict, load_config
from .stationary import solve_stationary, stationary_convergence_study
from .turnpike import verify_turnpike, yosida_dynamic_study
from .verification import run_suite

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_INTERNAL_ERROR = 3

_INPUT_ERRORS = (
    ConfigError,
    UniquenessError,
    DimensionError,
    NonFiniteError,
    ResolventError,
    GridMismatchError,
    ProblemSizeError,
    OSError,
    json.JSONDecodeError,
)

_SOLVER_FNS = {
    "transcription": solve_transcription,
    "riccati-sweep": solve_riccati_sweep,
}


class _Manifest:
    """Collects timings and output paths; written as manifest.json."""

    def __init__(self, command: str, config: ExperimentConfig, out_dir: str):
        self.command = command
        self.config = config
        self.out_dir = out_dir
        self.timings = {}
        self.outputs = []
        self._t0 = time.perf_counter()

    @contextlib.contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = time.perf_counter() - start

    def write_csv(self, name: str, header, rows) -> str:
        path = os.path.join(self.out_dir, name)
        reporting.write_csv(path, header, rows)
        self.outputs.append(name)
        return path

    def finalize(self) -> None:
        payload = {
            "command": self.command,
            "config": dataclasses.asdict(self.config),
            "version": __version__,
            "timings_s": {k: round(v, 6) for k, v in self.timings.items()},
            "total_s": round(time.perf_counter() - self._t0, 6),
            "outputs": self.outputs,
        }
        path = os.path.join(self.out_dir, "manifest.json")
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True, default=str)
            handle.write("\n")


def _resolve_config(args) -> ExperimentConfig:
    if args.config is not None:
        config = load_config(args.config)
    else:
        config = config_from_dict({"scenario": "scalar"})
    updates = {}
    if getattr(args, "horizon", None):
        updates["horizons"] = tuple(float(t) for t in args.horizon)
    if getattr(args, "dt", None) is not None:
        updates["dt"] = float(args.dt)
    if getattr(args, "seed", None) is not None:
        updates["seed"] = int(args.seed)
    if getattr(args, "out", None) is not None:
        updates["output_dir"] = args.out
    if updates:
        config = dataclasses.replace(config, **updates)
    for t_final in config.horizons:
        ratio = t_final / config.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigError(
                f"dt {config.dt} does not divide horizon {t_final} into whole steps"
            )
    return config


def _prepare(args, command: str):
    config = _resolve_config(args)
    out_dir = config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    return config, _Manifest(command, config, out_dir)


def _solver_fn(config: ExperimentConfig):
    return _SOLVER_FNS[config.solver or "transcription"]


def cmd_stationary(args) -> int:
    config, manifest = _prepare(args, "stationary")
    with manifest.stage("solve"):
        system, target, _ = build_scenario(config)
        triple = solve_stationary(system, target)
    manifest.write_csv("stationary.csv", *reporting.stationary_rows(triple))
    manifest.finalize()
    tol = config.tolerances["solver"]
    scale = max(1.0, float(np.linalg.norm(target)))
    worst = max(
        triple.residual_constraint, triple.residual_adjoint, triple.residual_control
    )
    if worst > tol * scale:
        print(
            f"stationary: KKT residual {worst:.3e} above tolerance {tol:.1e}",
            file=_sys.stderr,
        )
        return EXIT_CHECK_FAILED
    print(f"stationary: residuals <= {worst:.3e}, wrote {manifest.outputs}")
    return EXIT_OK


def cmd_solve(args) -> int:
    config, manifest = _prepare(args, "solve")
    with manifest.stage("build"):
        system, target, x0 = build_scenario(config)
        horizon = config.horizons[0]
        prob = LqProblem(
            sys=system, horizon=horizon, target=target, x0=x0,
            p0=np.zeros((system.n, system.n)), dt=config.dt,
        )
    with manifest.stage("solve"):
        traj = _solver_fn(config)(prob)
    with manifest.stage("emit"):
        manifest.write_csv("trajectory.csv", *reporting.trajectory_rows(traj))
        value = cost(prob, traj)
    manifest.finalize()
    print(f"solve: method={traj.method} T={horizon} cost={value:.12g}")
    return EXIT_OK


def cmd_riccati(args) -> int:
    config, manifest = _prepare(args, "riccati")
    with manifest.stage("are"):
        system, _, _ = build_scenario(config)
        are = solve_are(system)
    manifest.write_csv("are.csv", *reporting.are_rows(are))
    with manifest.stage("dre"):
        horizon = config.horizons[0]
        steps = int(round(horizon / config.dt))
        dre = solve_dre(system, horizon, np.zeros((system.n, system.n)), steps)
    manifest.write_csv("dre.csv", *reporting.dre_rows(dre))
    manifest.finalize()
    print(
        f"riccati: residual={are.residual:.3e} abscissa={are.closed_loop_abscissa:.6g}"
    )
    return EXIT_OK


def cmd_turnpike(args) -> int:
    config, manifest = _prepare(args, "turnpike")
    with manifest.stage("pipeline"):
        system, target, x0 = build_scenario(config)
        stat = solve_stationary(system, target)
        are = solve_are(system)
        reports = verify_turnpike(
            system,
            stat,
            are,
            config.horizons,
            z=target,
            x0=x0,
            dt=config.dt,
            solver=config.solver or "transcription",
            jobs=args.jobs,
        )
    with manifest.stage("emit"):
        for report in reports:
            manifest.write_csv(
                f"turnpike_T{report.horizon:g}.csv",
                *reporting.turnpike_report_rows(report),
            )
        manifest.write_csv(
            "turnpike_summary.csv", *reporting.turnpike_summary_rows(reports)
        )
    manifest.finalize()
    satisfied = all(r.bound_satisfied for r in reports)
    for report in reports:
        print(
            f"turnpike T={report.horizon:g}: lambda={report.fitted_lambda:.6g} "
            f"(reference {report.lambda_reference:.6g}) "
            f"bound_satisfied={str(report.bound_satisfied).lower()}"
        )
    return EXIT_OK if satisfied else EXIT_CHECK_FAILED


def cmd_yosida(args) -> int:
    config, manifest = _prepare(args, "yosida")
    with manifest.stage("stationary-study"):
        system, target, x0 = build_scenario(config)
        stat_rows = stationary_convergence_study(system, target, config.ks)
    manifest.write_csv("yosida_stationary.csv", *reporting.study_rows(stat_rows))
    with manifest.stage("dynamic-study"):
        prob = LqProblem(
            sys=system, horizon=config.horizons[0], target=target, x0=x0,
            p0=np.zeros((system.n, system.n)), dt=config.dt,
        )
        dyn_rows = yosida_dynamic_study(
            prob, config.ks, solver=config.solver or "transcription", jobs=args.jobs
        )
    manifest.write_csv("yosida_dynamic.csv", *reporting.dynamic_study_rows(dyn_rows))
    manifest.finalize()
    print(
        f"yosida: stationary errors {stat_rows[0][1]:.3e} -> {stat_rows[-1][1]:.3e}, "
        f"dynamic control errors {dyn_rows[0][1]:.3e} -> {dyn_rows[-1][1]:.3e}"
    )
    return EXIT_OK


def _rerun_determinism_check(jobs, fault_inject) -> tuple:
    """Criterion 12 core: the quick suite twice, outputs compared byte-wise."""
    with tempfile.TemporaryDirectory() as tmp:
        dir_a = os.path.join(tmp, "a")
        dir_b = os.path.join(tmp, "b")
        run_suite("quick", out_dir=dir_a, jobs=jobs, fault_inject=fault_inject)
        run_suite("quick", out_dir=dir_b, jobs=jobs, fault_inject=fault_inject)
        names_a = sorted(os.listdir(dir_a))
        if names_a != sorted(os.listdir(dir_b)):
            return False, "rerun produced a different file list"
        for name in names_a:
            with open(os.path.join(dir_a, name), "rb") as fa, open(
                os.path.join(dir_b, name), "rb"
            ) as fb:
                if fa.read() != fb.read():
                    return False, f"{name} differs between reruns"
        return True, f"{len(names_a)} files byte-identical across reruns"


def cmd_verify(args) -> int:
    out_dir = args.out or os.environ.get("LQTURNPIKE_OUT", "out")
    os.makedirs(out_dir, exist_ok=True)
    config = config_from_dict({"scenario": "scalar", "output_dir": out_dir})
    manifest = _Manifest(f"verify-{args.suite}", config, out_dir)
    with manifest.stage("suite"):
        results = run_suite(
            args.suite, out_dir=out_dir, jobs=args.jobs, fault_inject=args.fault_inject
        )
    for result in results:
        print(result.line())

    with manifest.stage("determinism"):
        identical, note = _rerun_determinism_check(args.jobs, args.fault_inject)
    cap = 60.0 if args.suite == "quick" else 300.0
    suite_elapsed = manifest.timings["suite"]
    in_time = suite_elapsed <= cap
    det_passed = identical and in_time
    status = "PASS" if det_passed else "FAIL"
    print(
        f"{status}  12 determinism: {note}; {args.suite} suite "
        f"{suite_elapsed:.1f}s (cap {cap:.0f}s) "
        f"[{manifest.timings['determinism']:.2f}s]"
    )

    manifest.outputs.extend(
        name for result in results for name, _, _ in result.artifacts
    )
    manifest.outputs.append("verify_summary.csv")
    manifest.finalize()
    failed = [r.criterion for r in results if not r.passed]
    if not det_passed:
        failed.append("12 determinism")
    if failed:
        print(f"verify: FAILED criteria: {', '.join(failed)}", file=_sys.stderr)
        return EXIT_CHECK_FAILED
    print(f"verify: all {len(results) + 1} criteria passed ({args.suite} suite)")
    return EXIT_OK


def _add_common(parser, with_horizons=True):
    parser.add_argument("--config", help="path to a JSON experiment configuration")
    if with_horizons:
        parser.add_argument(
            "--T",
            dest="horizon",
            action="append",
            type=float,
            help="horizon override; repeat for a list",
        )
    parser.add_argument("--dt", type=float, help="time step override")
    parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("--out", help="output directory override")
    parser.add_argument(
        "--jobs",
        type=int,
        default=int(os.environ.get("LQTURNPIKE_JOBS", "1")),
        help="max concurrent solves for horizon/k sweeps",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lqturnpike",
        description="Linear-quadratic optimal control and turnpike verification",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in (
        ("stationary", cmd_stationary),
        ("solve", cmd_solve),
        ("riccati", cmd_riccati),
        ("turnpike", cmd_turnpike),
        ("yosida", cmd_yosida),
    ):
        sp = sub.add_parser(name, help=f"run the {name} pipeline")
        _add_common(sp)
        sp.set_defaults(func=fn)

    vp = sub.add_parser("verify", help="run the acceptance suite")
    vp.add_argument("suite", choices=("quick", "full"), help="suite flavor")
    vp.add_argument("--out", help="output directory (default: out)")
    vp.add_argument(
        "--jobs", type=int, default=int(os.environ.get("LQTURNPIKE_JOBS", "1"))
    )
    vp.add_argument(
        "--fault-inject",
        choices=("are",),
        help=argparse.SUPPRESS,  # test hook: corrupt a stage to force failure
    )
    vp.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT_ERROR
    except LqTurnpikeError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INTERNAL_ERROR
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=_sys.stderr)
        return EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
