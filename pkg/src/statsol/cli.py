"""Command-line interface: refinement studies and a standalone EMD solver."""

import argparse
import sys

import numpy as np

from .errors import (
    ConfigError,
    EnsembleError,
    InfeasibleMarginalsError,
    SolverBlowupError,
    StateSpaceError,
)
from .study import (
    ExperimentConfig,
    emit_csv,
    load_config,
    run_single,
    run_spatial_study,
    run_stochastic_study,
    StudyResult,
)

_ERROR_CATEGORIES = (
    (ConfigError, "config-error"),
    (InfeasibleMarginalsError, "infeasible-marginals"),
    (StateSpaceError, "state-space"),
    (SolverBlowupError, "solver-blowup"),
    (EnsembleError, "ensemble-failure"),
    (OSError, "io-error"),
    (ValueError, "invalid-argument"),
)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="statsol",
        description="Statistical-solution approximation with a posteriori Wasserstein error control",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("run", "single full-pipeline run"),
        ("spatial-study", "mesh-refinement study at fixed sample count"),
        ("stochastic-study", "sample-refinement study at fixed mesh"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML experiment file")
        p.add_argument("--out", help="output CSV path (overrides config)")
        p.add_argument("--seed", type=int, help="RNG seed (overrides config)")
        p.add_argument("--samples", type=int, help="sample count (overrides config)")

    emd = sub.add_parser("emd", help="solve one discrete transport problem from CSV inputs")
    emd.add_argument("--cost", required=True, help="cost matrix CSV")
    emd.add_argument("--weights-a", required=True, help="first marginal CSV (one column)")
    emd.add_argument("--weights-b", required=True, help="second marginal CSV (one column)")
    emd.add_argument("--out", help="write the optimal plan to this CSV path")
    return parser


def _load_with_overrides(args) -> ExperimentConfig:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.samples is not None:
        config.samples = args.samples
    if args.out:
        config.out = args.out
    return config


def _emit(config, result: StudyResult):
    for sweep_value, message in result.failures:
        print(f"row {sweep_value} failed: {message}", file=sys.stderr)
    if config.out:
        emit_csv(result, config.out)
        print(f"wrote {len(result.rows)} rows to {config.out}")
    else:
        from .estimator import CSV_COLUMNS

        print(",".join(CSV_COLUMNS))
        for row in result.rows:
            print(row.csv_row())
    for column in ("error", "residual", "errorsample", "errorreconst"):
        if len(result.rows) >= 2:
            eoc = ", ".join(f"{v:.2f}" for v in result.eoc(column))
            print(f"eoc[{column}]: {eoc}")
    return 1 if result.failures else 0


def _cmd_run(args):
    config = _load_with_overrides(args)
    report = run_single(config)
    result = StudyResult(rows=[report])
    return _emit(config, result)


def _cmd_spatial(args):
    config = _load_with_overrides(args)
    return _emit(config, run_spatial_study(config))


def _cmd_stochastic(args):
    config = _load_with_overrides(args)
    return _emit(config, run_stochastic_study(config))


def _cmd_emd(args):
    from .transport import solve_emd

    cost = np.atleast_2d(np.loadtxt(args.cost, delimiter=","))
    wa = np.atleast_1d(np.loadtxt(args.weights_a, delimiter=","))
    wb = np.atleast_1d(np.loadtxt(args.weights_b, delimiter=","))
    plan = solve_emd(wa, wb, cost)
    print(f"cost,{plan.cost:.14e}")
    if args.out:
        np.savetxt(args.out, plan.matrix, delimiter=",", fmt="%.14e", newline="\n")
        print(f"wrote plan to {args.out}")
    else:
        for row in plan.matrix:
            print(",".join(f"{v:.14e}" for v in row))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "spatial-study": _cmd_spatial,
        "stochastic-study": _cmd_stochastic,
        "emd": _cmd_emd,
    }
    try:
        return handlers[args.command](args)
    except Exception as exc:  # noqa: BLE001 - single exit point with category
        for exc_type, category in _ERROR_CATEGORIES:
            if isinstance(exc, exc_type):
                print(f"error: {category}: {exc}", file=sys.stderr)
                return 1
        raise


if __name__ == "__main__":
    sys.exit(main())
