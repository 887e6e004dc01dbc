"""
CLI parser module.
This module defines the argument parser and the validated CLI configuration.
"""
import argparse
import math
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator

from app.config.settings import DEFAULT_ALPHA, DEFAULT_JOBS, DEFAULT_SEED, DEFAULT_TRIALS
from app.kernels.gram import KernelSpec

Command = Literal["test", "hsic", "power", "calibrate", "scatter", "converge", "generate", "variance"]


class CliConfig(BaseModel):
    """Validated options of one CLI invocation."""
    command: Command
    inputs: List[str] = Field(default_factory=list)
    kernels: List[KernelSpec] = Field(default_factory=list)
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0, lt=1)
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2 ** 64)
    jobs: int = Field(default=DEFAULT_JOBS, ge=1)
    weights: Optional[List[float]] = None
    pairs: Optional[List[Tuple[int, int]]] = None
    out: Optional[str] = None
    format: Optional[Literal["json", "csv"]] = None

    @field_validator("weights")
    @classmethod
    def _weights_finite_not_zero(cls, value):
        if value is None:
            return value
        if not all(math.isfinite(w) for w in value):
            raise ValueError("weights must be finite")
        if not any(w != 0 for w in value):
            raise ValueError("weights must not all be zero")
        return value


def float_list(text: str) -> List[float]:
    """Parse '1,1,-2' into floats."""
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def int_list(text: str) -> List[int]:
    try:
        values = [int(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def pair_list(text: str) -> List[Tuple[int, int]]:
    """Parse '0-1,0-2,0-3' into index pairs."""
    pairs = []
    for item in text.split(","):
        source, sep, target = item.strip().partition("-")
        if not sep:
            raise argparse.ArgumentTypeError(f"pair {item!r} must look like SOURCE-TARGET")
        try:
            pairs.append((int(source), int(target)))
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"pair {item!r} must use integer indices") from e
    return pairs


def grid(text: str) -> List[float]:
    """
    Parse a grid 'start:step:stop' (stop included) or a comma-separated list.

    '0.4:0.1:1.7' gives the 14 values 0.4, 0.5, ..., 1.7.
    """
    if ":" not in text:
        return float_list(text)
    try:
        start, step, stop = (float(part) for part in text.split(":"))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"grid must be START:STEP:STOP, got {text!r}") from e
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"grid {text!r} is empty")
    count = math.floor((stop - start) / step + 1e-9) + 1
    return [round(start + index * step, 10) for index in range(count)]


def column_range(text: str) -> Tuple[int, int]:
    start, sep, stop = text.partition(":")
    try:
        return int(start), int(stop)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"columns must be START:STOP, got {text!r}") from e


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from e
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _add_common(parser):
    parser.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="significance level (default %(default)s)")
    parser.add_argument("--seed", type=int, default=None, help="random seed (default: RELDEP_SEED or 0)")
    parser.add_argument("--jobs", type=int, default=DEFAULT_JOBS, help="worker threads for Monte-Carlo trials")
    parser.add_argument("--out", help="output file (test, hsic) or directory (experiments)")
    parser.add_argument("--format", choices=["json", "csv"],
                        help="standard output format (tests: json by default; experiments: a summary line)")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log to stderr (-vv for debug)")
    parser.add_argument("--progress", action="store_true", help="show progress bars on stderr")


def _add_kernels(parser, variables):
    for name in variables:
        parser.add_argument(f"--kernel-{name}", choices=["gaussian", "linear"], default="gaussian",
                            help=f"kernel of {name.upper()} (default gaussian)")
        parser.add_argument(f"--bandwidth-{name}", type=positive_float,
                            help=f"Gaussian bandwidth of {name.upper()} (default: median heuristic)")


def _add_csv(parser):
    parser.add_argument("--delimiter", default=",", help="CSV field separator")
    parser.add_argument("--header", action="store_true", help="skip the first row of every CSV")
    parser.add_argument("--columns", type=column_range, help="0-based column range START:STOP")


def _add_synth(parser, m=500, gamma3=0.7, trials=DEFAULT_TRIALS, gamma3_grid=False):
    parser.add_argument("--m", type=int, default=m, help="sample size (default %(default)s)")
    parser.add_argument("--gamma1", type=float, default=0.3, help="noise scale of X")
    parser.add_argument("--gamma2", type=float, default=0.3, help="noise scale of Y")
    if gamma3_grid:
        parser.add_argument("--gamma3", type=grid, default=grid("0.4:0.1:1.7"),
                            help="noise scales of Z, START:STEP:STOP or a comma list (default 0.4:0.1:1.7)")
    else:
        parser.add_argument("--gamma3", type=float, default=gamma3, help="noise scale of Z (default %(default)s; calibrate uses gamma2)")
    parser.add_argument("--trials", type=int, default=trials, help="Monte-Carlo draws (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reldep",
        description="Relative dependency tests with correlated HSIC statistics.",
        epilog="Environment: RELDEP_SEED sets the default seed. Exit codes: 0 success, "
               "2 usage or I/O error, 3 statistical precondition not met.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    test = commands.add_parser("test", help="test whether X depends more on Y than on Z")
    test.add_argument("files", nargs="+", help="x.csv y.csv z.csv, or any number of CSVs with --pairs/--weights")
    test.add_argument("--method", choices=["dependent", "independent"], default="dependent")
    test.add_argument("--weights", type=float_list, help="weights of the generalized test, e.g. 1,1,-2")
    test.add_argument("--pairs", type=pair_list, help="file index pairs of the generalized test, e.g. 0-1,0-2,0-3; "
                                                         "files beyond the third use the default Gaussian kernel")
    test.add_argument("--shuffle", action="store_true", help="shuffle rows (seeded) before the independent split")
    _add_kernels(test, ["x", "y", "z"])
    _add_csv(test)
    _add_common(test)

    hsic = commands.add_parser("hsic", help="unbiased HSIC estimate and its variance")
    hsic.add_argument("files", nargs=2, help="x.csv y.csv")
    _add_kernels(hsic, ["x", "y"])
    _add_csv(hsic)
    _add_common(hsic)

    power = commands.add_parser("power", help="power of both tests along a gamma3 grid")
    _add_synth(power, gamma3_grid=True)
    _add_common(power)

    calibrate = commands.add_parser("calibrate", help="Type I error at gamma3 == gamma2")
    _add_synth(calibrate, gamma3=None, trials=300)
    _add_common(calibrate)

    scatter = commands.add_parser("scatter", help="paired HSIC estimates of both tests over repeated draws")
    _add_synth(scatter, trials=100)
    _add_common(scatter)

    converge = commands.add_parser("converge", help="convergence rate of the difference statistic")
    _add_synth(converge, trials=50)
    converge.add_argument("--m-grid", type=int_list, default=[100, 200, 400, 800], help="ascending sample sizes")
    _add_common(converge)

    variance = commands.add_parser("variance", help="variance of the dependent vs independent statistic")
    _add_synth(variance, trials=100)
    _add_common(variance)

    generate = commands.add_parser("generate", help="write one synthetic draw as x.csv, y.csv, z.csv")
    _add_synth(generate)
    _add_common(generate)

    return parser


def kernel_specs(args, variables) -> List[KernelSpec]:
    return [
        KernelSpec(family=getattr(args, f"kernel_{name}"), bandwidth=getattr(args, f"bandwidth_{name}"))
        for name in variables
    ]
