"""
Command-line entry point.

    nematic run --config run.ini [--steps K] [--snapshot-every J] [--restart SNAP] [--out DIR]
    nematic check [--seed S] [--quick]
    nematic potential-table --out table.csv [--points N]
    nematic report --diagnostics diagnostics.csv [--config run.ini] [--out plot.csv]

Exit codes: 0 success, 1 scheme failure (or failed check), 2 config or input error.
"""
import argparse
import csv
import math
import sys
import uuid
from pathlib import Path
from typing import Optional

import numpy as np

from src.config import (
    RunConfig,
    build_grid,
    build_potential_settings,
    build_quadrature,
    build_thermo,
    load_config,
    serialize_config,
)
from src.diagnostics.battery import run_property_battery
from src.diagnostics.records import read_records_csv, write_records_csv
from src.diagnostics.report import summarize
from src.dynamics.models import State, StepReport
from src.dynamics.presets import build_initial_state
from src.dynamics.solver import NematicSolver
from src.errors import ConfigError, NematicError, SchemeFailure
from src.fields.snapshot import FieldKind, read_snapshot, write_snapshot
from src.observability import StructuredLogger, metrics, run_id_ctx
from src.potential.quadrature import SphereQuadrature
from src.potential.singular import eval_f
from src.potential.thermo import check_hypotheses, positivity_rate_bound, truncate_U
from src.tensors.qtensor import q_norm2

log = StructuredLogger("nematic.cli")

EXIT_OK = 0
EXIT_SCHEME_FAILURE = 1
EXIT_CONFIG_ERROR = 2

TABLE_MARGIN = 0.05


def _snapshot_path(directory: Path, step: int) -> Path:
    return directory / f"snapshot_{step:06d}.bin"


def _save_state(path: Path, state: State):
    write_snapshot(path, state.pack(), FieldKind.STATE, state.t, state.step)


def build_solver(config: RunConfig) -> NematicSolver:
    return NematicSolver(
        grid=build_grid(config),
        params=config.scheme.params(),
        thermo=build_thermo(config.thermo),
        quad=build_quadrature(config.thermo),
        settings=build_potential_settings(config.thermo),
        tolerances=config.tolerance.step_tolerances(),
    )


def load_restart(path: str, config: RunConfig) -> State:
    snapshot = read_snapshot(path)
    if snapshot.kind != FieldKind.STATE:
        raise ConfigError(f"{path} holds a {snapshot.kind.name} field, not a state", key_path="restart")
    if (snapshot.dim, snapshot.n) != (config.grid.dim, config.grid.n):
        raise ConfigError(
            f"{path} is a {snapshot.n}^{snapshot.dim} snapshot but the config asks for "
            f"{config.grid.n}^{config.grid.dim}",
            key_path="grid",
        )
    return State.unpack(snapshot.data, snapshot.time, snapshot.step)


def cmd_run(args) -> int:
    config = load_config(args.config)
    steps = config.scheme.steps if args.steps is None else args.steps
    snapshot_every = config.output.snapshot_every if args.snapshot_every is None else args.snapshot_every
    if steps < 0:
        raise ConfigError("--steps must be >= 0", key_path="scheme.steps")
    if snapshot_every < 0:
        raise ConfigError("--snapshot-every must be >= 0", key_path="output.snapshot_every")
    out = Path(args.out or config.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(serialize_config(config))

    solver = build_solver(config)
    check_hypotheses(solver.thermo)

    if args.restart:
        state = load_restart(args.restart, config)
        log.info("Restarting from snapshot", metadata={"path": args.restart, "step": state.step, "t": state.t})
    else:
        init = config.init
        state = build_initial_state(solver.grid, init.presets, init.amplitude, init.theta0, init.seed)
        state = solver.prepare_initial(state)

    def on_step(current: State, report: StepReport):
        if snapshot_every and current.step % snapshot_every == 0:
            _save_state(_snapshot_path(out, current.step), current)

    diagnostics_path = out / config.output.diagnostics
    try:
        final, records = solver.run(state, steps, config.output.diag_every, on_step)
    except SchemeFailure as e:
        if e.partial is not None:
            write_records_csv(diagnostics_path, e.partial.records)
            _save_state(out / "last_good.bin", e.partial.state)
        raise

    write_records_csv(diagnostics_path, records)
    _save_state(out / "final.bin", final)

    last = records[-1]
    print(f"Completed {steps} steps: t={final.t:.6g}, step={final.step}")
    print(f"  total energy {last.total_energy:.12e}, drift {last.energy_drift:.3e}")
    print(f"  theta in [{last.theta_min:.6g}, {last.theta_max:.6g}], Q eigenvalues in [{last.q_eig_min:.6f}, {last.q_eig_max:.6f}]")
    print(f"  diagnostics: {diagnostics_path}")
    log.info("Run metrics", metadata=metrics.get_summary())
    return EXIT_OK


def cmd_check(args) -> int:
    seed = args.seed
    if seed is None:
        seed = load_config(args.config).tolerance.check_seed if args.config else 1234
    results = run_property_battery(seed=seed, quick=args.quick)

    failed = 0
    for result in results:
        tag = "[PASS]" if result.passed else "[FAIL]"
        print(f"{tag} {result.name}: max residual {result.max_residual:.3e}")
        if not result.passed:
            failed += 1
            print(f"  {result.detail}")
    print(f"\n{len(results) - failed}/{len(results)} suites passed (seed {seed})")
    return EXIT_OK if failed == 0 else EXIT_SCHEME_FAILURE


def potential_table(points: int, quad: Optional[SphereQuadrature] = None) -> list[dict[str, float]]:
    """f over ordered eigenvalue pairs lambda1 >= lambda2 >= lambda3 inside the domain."""
    quad = quad or SphereQuadrature.product_rule()
    low, high = -1.0 / 3.0 + TABLE_MARGIN, 2.0 / 3.0 - TABLE_MARGIN
    axis = np.linspace(low, high, points)
    pairs = [
        (l1, l2) for l1 in axis for l2 in axis
        if l1 >= l2 >= -(l1 + l2) >= low
    ]
    if not pairs:
        return []
    lam = np.array(pairs)
    q = np.zeros((len(pairs), 5))
    q[:, 0] = lam[:, 0]
    q[:, 1] = lam[:, 1]
    result = eval_f(q, quad)
    grad_norm = np.sqrt(q_norm2(result.gradient))
    return [
        {
            "lambda1": float(l1),
            "lambda2": float(l2),
            "f": float(value),
            "grad_norm": float(g),
            "iters": int(it),
        }
        for (l1, l2), value, g, it in zip(pairs, result.value, grad_norm, result.newton_iters)
    ]


def _write_rows(path: Path, rows: list[dict]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        if not rows:
            return
        writer = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def cmd_potential_table(args) -> int:
    if args.points < 2:
        raise ConfigError("--points must be at least 2", key_path="points")
    rows = potential_table(args.points)
    _write_rows(Path(args.out), rows)
    print(f"Wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    records = read_records_csv(args.diagnostics)
    lambda_bound = None
    volume = 1.0
    tolerance = 1e-6
    if args.config:
        config = load_config(args.config)
        thermo = build_thermo(config.thermo)
        if config.scheme.delta > 0:
            thermo = truncate_U(thermo, config.scheme.delta)
        lambda_bound = positivity_rate_bound(thermo, config.scheme.xi)
        volume = (2.0 * math.pi) ** config.grid.dim
        tolerance = config.tolerance.positivity

    summary = summarize(records, lambda_bound, volume, tolerance)
    print(summary.text)
    if args.out:
        _write_rows(Path(args.out), summary.rows)
        print(f"Plot data: {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nematic", description="Non-isothermal nematic Q-tensor simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a simulation from a config file")
    run.add_argument("--config", required=True, help="INI config file")
    run.add_argument("--steps", type=int, help="Override scheme.steps")
    run.add_argument("--snapshot-every", type=int, help="Override output.snapshot_every")
    run.add_argument("--restart", help="Resume from a state snapshot")
    run.add_argument("--out", help="Override output.directory")
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("check", help="Run the identity and property battery")
    check.add_argument("--seed", type=int, help="RNG seed (default: tolerance.check_seed or 1234)")
    check.add_argument("--config", help="Config file supplying tolerance.check_seed")
    check.add_argument("--quick", action="store_true", help="Smaller samples and grids")
    check.set_defaults(func=cmd_check)

    table = sub.add_parser("potential-table", help="Tabulate the singular potential over eigenvalue pairs")
    table.add_argument("--out", required=True, help="Output CSV")
    table.add_argument("--points", type=int, default=25, help="Samples per eigenvalue axis")
    table.set_defaults(func=cmd_potential_table)

    report = sub.add_parser("report", help="Summarize a diagnostics CSV")
    report.add_argument("--diagnostics", required=True, help="Diagnostics CSV from a run")
    report.add_argument("--config", help="Config of the run (enables the positivity audit)")
    report.add_argument("--out", help="Plot-ready CSV")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    token = run_id_ctx.set(uuid.uuid4().hex[:12])
    try:
        return args.func(args)
    except SchemeFailure as e:
        metrics.record_error(e.category, args.command)
        log.error(f"{type(e).__name__}: {e}", error_category=e.category)
        print(f"Scheme failure ({type(e).__name__}): {e}", file=sys.stderr)
        return EXIT_SCHEME_FAILURE
    except NematicError as e:
        metrics.record_error(e.category, args.command)
        log.error(f"{type(e).__name__}: {e}", error_category=e.category)
        print(f"Error ({type(e).__name__}): {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    finally:
        run_id_ctx.reset(token)


if __name__ == "__main__":
    sys.exit(main())
