"""
CLI commands module.
This module runs the relative-dependency tests on CSV files and drives the
synthetic benchmark experiments.

Results go to standard output, diagnostics to standard error. The exit code is
0 on success, 2 on usage or I/O errors and 3 when a statistical precondition
is not met.
"""
import json
import logging
import os
import sys
from pathlib import Path

import pandas as pd

from app.cli.parser import CliConfig, build_parser, kernel_specs
from app.config.logging_config import configure_logging
from app.config.settings import DEFAULT_SEED, OUTPUT_DIR
from app.data.dataset import CsvOptions, align, load_csv
from app.errors import EXIT_OK, EXIT_UNEXPECTED, ExperimentError, InputError, exit_code_for
from app.hsic.estimators import estimate, variance_hsic
from app.kernels.gram import KernelConfig, KernelSpec, build_gram
from app.reltest.procedures import dependent_test, group_test, generalized_test, independent_test, joint_summary
from app.synthbench.experiments import (
    calibration,
    convergence_diagnostic,
    power_curve,
    scatter_experiment,
    scatter_frame,
    scatter_isocurves,
    variance_comparison,
)
from app.synthbench.export import write_samples, write_summary, write_table
from app.synthbench.generators import SynthConfig

logger = logging.getLogger(__name__)

TEST_LABELS = ("x", "y", "z")


def resolve_seed(seed):
    """The --seed flag wins over RELDEP_SEED, which wins over the configured default."""
    if seed is not None:
        return seed
    raw = os.environ.get("RELDEP_SEED")
    if raw is None or not raw.strip():
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError as e:
        raise InputError(f"RELDEP_SEED must be a non-negative integer, got {raw!r}") from e


def to_config(args) -> CliConfig:
    return CliConfig(
        command=args.command,
        inputs=list(getattr(args, "files", []) or []),
        kernels=kernel_specs(args, [name for name in TEST_LABELS if hasattr(args, f"kernel_{name}")]),
        alpha=args.alpha,
        seed=resolve_seed(args.seed),
        jobs=args.jobs,
        weights=getattr(args, "weights", None),
        pairs=getattr(args, "pairs", None),
        out=args.out,
        format=args.format,
    )


def _csv_options(args) -> CsvOptions:
    return CsvOptions(delimiter=args.delimiter, has_header=args.header, column_range=args.columns)


def _emit(text: str, config: CliConfig):
    if not text.endswith("\n"):
        text += "\n"
    sys.stdout.write(text)
    if config.out:
        path = Path(config.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info("Wrote %s", path)


def _render(payload: dict, config: CliConfig) -> str:
    if config.format == "csv":
        row = {key: value for key, value in payload.items() if not isinstance(value, (dict, list))}
        return pd.DataFrame([row]).to_csv(index=False, lineterminator="\n")
    return json.dumps(payload, indent=2)


def cmd_test(args, config: CliConfig) -> int:
    """
    Relative dependency test on CSV files.

    Three files run the dependent (default) or independent test of X against Y
    and Z. With --weights the files are variables of a generalized test over the
    --pairs statistics; without --pairs the first file is compared with every
    other one.
    """
    options = _csv_options(args)
    if config.weights is not None or config.pairs is not None:
        result = _generalized(args, config, options)
    else:
        if len(config.inputs) != 3:
            raise InputError(f"test needs x.csv y.csv z.csv, got {len(config.inputs)} files")
        x, y, z = (load_csv(path, options, label) for path, label in zip(config.inputs, TEST_LABELS))
        j = align(x, y, z)
        kernels = KernelConfig(**dict(zip(TEST_LABELS, config.kernels)))
        if args.method == "independent":
            result = independent_test(j, kernels, config.alpha, shuffle=args.shuffle, seed=config.seed)
        else:
            result = dependent_test(j, kernels, config.alpha)

    logger.info("%s test: statistic=%.6g p=%.4g", result.method, result.statistic, result.p_value)
    _emit(_render(result.to_payload(), config), config)
    return EXIT_OK


def _generalized(args, config: CliConfig, options: CsvOptions):
    if config.weights is None:
        raise InputError("--pairs needs --weights")
    samples = [load_csv(path, options, f"v{index}") for index, path in enumerate(config.inputs)]
    if len(samples) < 2:
        raise InputError("the generalized test needs at least 2 input files")
    if len(samples) > len(config.kernels):
        logger.warning("Files beyond the third use the default Gaussian kernel with the median heuristic")
    specs = list(config.kernels) + [KernelSpec() for _ in range(len(samples) - len(config.kernels))]
    specs = specs[:len(samples)]
    if config.pairs is None:
        return group_test(samples, 0, range(1, len(samples)), config.weights, specs, config.alpha)
    return generalized_test(joint_summary(samples, config.pairs, specs), config.weights, config.alpha)


def cmd_hsic(args, config: CliConfig) -> int:
    options = _csv_options(args)
    x, y = (load_csv(path, options, label) for path, label in zip(config.inputs, TEST_LABELS))
    j = align(x, y)
    kx = build_gram(j.x, config.kernels[0])
    ly = build_gram(j.y, config.kernels[1])
    e = estimate(kx, ly, "XY")
    payload = {
        "hsic": e.value,
        "variance": variance_hsic(e),
        "m": e.m,
        "bandwidths": {"x": kx.kernel.bandwidth, "y": ly.kernel.bandwidth},
    }
    _emit(_render(payload, config), config)
    return EXIT_OK


def _synth_config(args, config: CliConfig, gamma3=None) -> SynthConfig:
    if args.trials < 1:
        raise ExperimentError(f"--trials must be >= 1, got {args.trials}")
    return SynthConfig(
        m=args.m,
        gamma1=args.gamma1,
        gamma2=args.gamma2,
        gamma3=args.gamma3 if gamma3 is None else gamma3,
        seed=config.seed,
    )


def _outdir(config: CliConfig):
    return config.out or OUTPUT_DIR


def _report(line: str, summary: dict, config: CliConfig, table: pd.DataFrame = None):
    if config.format == "json":
        text = json.dumps(summary, indent=2)
    elif config.format == "csv" and table is not None:
        text = table.to_csv(index=False, float_format="%.10g", lineterminator="\n")
    else:
        text = line
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_power(args, config: CliConfig) -> int:
    grid = list(args.gamma3)
    base = _synth_config(args, config, gamma3=grid[0])
    table = power_curve(grid, base, args.trials, config.alpha, jobs=config.jobs, progress=args.progress)
    frame = table.to_frame()
    path = write_table(frame, "power", base.m, base.seed, _outdir(config))
    summary = {
        "experiment": "power",
        "m": base.m,
        "trials": args.trials,
        "alpha": config.alpha,
        "seed": base.seed,
        "gamma1": base.gamma1,
        "gamma2": base.gamma2,
        "gamma3": grid,
        "power_dependent": [row.power_dependent for row in table.rows],
        "power_independent": [row.power_independent for row in table.rows],
        "table": str(path),
    }
    write_summary(summary, "power", base.m, base.seed, _outdir(config))
    line = f"power: {len(table.rows)} gamma3 values, m={base.m}, trials={args.trials} -> {path}"
    _report(line, summary, config, frame)
    return EXIT_OK


def cmd_calibrate(args, config: CliConfig) -> int:
    base = _synth_config(args, config, gamma3=args.gamma2 if args.gamma3 is None else args.gamma3)
    rate = calibration(base, args.trials, config.alpha, jobs=config.jobs, progress=args.progress)
    summary = {
        "experiment": "calibration",
        "rejection_rate": rate,
        "m": base.m,
        "trials": args.trials,
        "alpha": config.alpha,
        "seed": base.seed,
        "gamma2": base.gamma2,
        "gamma3": base.gamma3,
    }
    write_summary(summary, "calibration", base.m, base.seed, _outdir(config))
    _report(f"rejection_rate={rate:.4f} m={base.m} trials={args.trials} alpha={config.alpha}", summary, config)
    return EXIT_OK


def cmd_scatter(args, config: CliConfig) -> int:
    base = _synth_config(args, config)
    records = scatter_experiment(base, args.trials, config.alpha, jobs=config.jobs, progress=args.progress)
    frame = scatter_frame(records)
    outdir = _outdir(config)
    path = write_table(frame, "scatter", base.m, base.seed, outdir)
    curves = write_table(scatter_isocurves(records), "scatter_isocurves", base.m, base.seed, outdir)
    summary = {
        "experiment": "scatter",
        "m": base.m,
        "trials": args.trials,
        "alpha": config.alpha,
        "seed": base.seed,
        "gamma3": base.gamma3,
        "median_p_dep": float(frame["p_dep"].median()),
        "median_p_indep": float(frame["p_indep"].median()),
        "mean_predicted_power_dep": float(frame["predicted_power_dep"].mean()),
        "mean_predicted_power_indep": float(frame["predicted_power_indep"].mean()),
        "table": str(path),
        "isocurves": str(curves),
    }
    write_summary(summary, "scatter", base.m, base.seed, outdir)
    line = (f"scatter: median p_dep={summary['median_p_dep']:.4g} "
            f"median p_indep={summary['median_p_indep']:.4g} -> {path}")
    _report(line, summary, config, frame)
    return EXIT_OK


def cmd_converge(args, config: CliConfig) -> int:
    base = _synth_config(args, config)
    table = convergence_diagnostic(args.m_grid, base, args.trials, jobs=config.jobs, progress=args.progress)
    frame = table.to_frame()
    m = max(args.m_grid)
    path = write_table(frame, "converge", m, base.seed, _outdir(config))
    summary = {
        "experiment": "converge",
        "m_grid": list(args.m_grid),
        "trials": args.trials,
        "seed": base.seed,
        "gamma3": base.gamma3,
        "reference_m": table.reference_m,
        "reference_delta": table.reference_delta,
        "slope": table.slope,
        "table": str(path),
    }
    write_summary(summary, "converge", m, base.seed, _outdir(config))
    _report(f"converge: slope={table.slope:.3f} over m={list(args.m_grid)} -> {path}", summary, config, frame)
    return EXIT_OK


def cmd_variance(args, config: CliConfig) -> int:
    base = _synth_config(args, config)
    result = variance_comparison(base, args.trials, config.alpha, jobs=config.jobs, progress=args.progress)
    summary = {"experiment": "variance", "m": base.m, "seed": base.seed, "gamma3": base.gamma3, **result}
    write_summary(summary, "variance", base.m, base.seed, _outdir(config))
    line = (f"variance: dependent={result['var_dependent']:.4g} "
            f"independent={result['var_independent']:.4g} ratio={result['ratio']:.3f}")
    _report(line, summary, config)
    return EXIT_OK


def cmd_generate(args, config: CliConfig) -> int:
    base = _synth_config(args, config)
    paths = write_samples(base, _outdir(config))
    summary = {"experiment": "generate", **base.model_dump(), **{name: str(path) for name, path in paths.items()}}
    _report(f"generate: m={base.m} -> {', '.join(str(path) for path in paths.values())}", summary, config)
    return EXIT_OK


COMMANDS = {
    "test": cmd_test,
    "hsic": cmd_hsic,
    "power": cmd_power,
    "calibrate": cmd_calibrate,
    "scatter": cmd_scatter,
    "converge": cmd_converge,
    "variance": cmd_variance,
    "generate": cmd_generate,
}


def _log_level(verbose: int):
    if verbose >= 2:
        return logging.DEBUG
    if verbose == 1:
        return logging.INFO
    return None


def main(argv=None) -> int:
    """
    Run one CLI command.

    Args:
        argv (list, optional): Arguments without the program name; sys.argv by default

    Returns:
        int: Process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_OK

    configure_logging(_log_level(args.verbose))
    try:
        return COMMANDS[args.command](args, to_config(args))
    except Exception as e:
        code = exit_code_for(e)
        if code == EXIT_UNEXPECTED:
            logger.exception("Unexpected error in %s", args.command)
        sys.stderr.write(f"reldep {args.command}: {e}\n")
        return code
