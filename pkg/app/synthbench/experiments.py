"""
Experiments module.
This module runs the Monte-Carlo experiments on synthetic data: power curves,
calibration at the null boundary, scatter clouds of paired estimates, variance
comparison of the two tests and the convergence-rate diagnostic.

Every trial draws from its own generator seeded by (seed, stream...), so results
do not depend on the number of workers or on completion order.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field
from tqdm import tqdm

from app.config.settings import DEFAULT_JOBS
from app.errors import ExperimentError
from app.kernels.gram import KernelConfig
from app.reltest.procedures import (
    dependent_test,
    gaussian_isocurve,
    independent_test,
    predicted_power,
)
from app.synthbench.generators import SynthConfig, sample_synthetic, trial_rng

logger = logging.getLogger(__name__)


class PowerRow(BaseModel):
    gamma3: float
    power_dependent: float = Field(ge=0, le=1)
    power_independent: float = Field(ge=0, le=1)
    trials: int = Field(ge=1)
    alpha: float
    m: int


class PowerTable(BaseModel):
    """Rejection rates of both tests along a grid of gamma3 values."""
    rows: List[PowerRow]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.model_dump() for row in self.rows])


class ScatterRecord(BaseModel):
    """Paired HSIC estimates and p-values of both tests on one draw."""
    trial: int
    hsic_xy: float
    hsic_xz: float
    p_dep: float
    p_indep: float
    indep_hsic_xy: float
    indep_hsic_xz: float
    std_dep: float
    std_indep: float
    predicted_power_dep: float
    predicted_power_indep: float


class ConvergenceRow(BaseModel):
    m: int
    median_abs_deviation: float
    trials: int


class ConvergenceTable(BaseModel):
    """Median |Delta_m - Delta_pop| per sample size, with the fitted log-log slope."""
    rows: List[ConvergenceRow]
    reference_m: int
    reference_delta: float
    slope: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.model_dump() for row in self.rows])


def run_trials(task: Callable[[int], object], trials: int, jobs: int = DEFAULT_JOBS,
               desc: str = "trials", progress: bool = False) -> list:
    """
    Run ``task(trial_index)`` for every trial, in parallel when jobs > 1.

    Returns:
        list: Results ordered by trial index
    """
    if trials < 1:
        raise ExperimentError(f"trials must be >= 1, got {trials}")
    jobs = max(1, int(jobs))
    with tqdm(total=trials, desc=desc, unit="trial", disable=not progress, leave=False) as pbar:
        if jobs == 1:
            results = []
            for index in range(trials):
                results.append(task(index))
                pbar.update(1)
            return results
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(task, index) for index in range(trials)]
            results = []
            for future in futures:
                results.append(future.result())
                pbar.update(1)
            return results


def _both_tests(config: SynthConfig, alpha: float, kernel_config: Optional[KernelConfig], *stream):
    j = sample_synthetic(config, trial_rng(config.seed, *stream))
    return dependent_test(j, kernel_config, alpha), independent_test(j, kernel_config, alpha)


def power_curve(
    gamma3_grid: Sequence[float],
    base: SynthConfig,
    trials: int = 200,
    alpha: float = 0.05,
    kernel_config: Optional[KernelConfig] = None,
    jobs: int = DEFAULT_JOBS,
    progress: bool = False,
) -> PowerTable:
    """
    Rejection rate of the dependent and independent tests for each gamma3.

    Trial t uses the same random stream at every grid point, so the curves differ
    only through gamma3.

    Args:
        gamma3_grid (Sequence[float]): Noise scales of Z to evaluate
        base (SynthConfig): m, gamma1, gamma2 and seed
        trials (int): Draws per grid point
        alpha (float): Significance level

    Returns:
        PowerTable: One row per grid point
    """
    grid = list(gamma3_grid)
    if not grid:
        raise ExperimentError("gamma3 grid is empty")
    if trials < 50:
        logger.warning("Power estimated from %d trials is coarse; 50 or more are recommended", trials)

    rows = []
    for gamma3 in grid:
        config = base.model_copy(update={"gamma3": float(gamma3)})
        outcomes = run_trials(
            lambda t: _both_tests(config, alpha, kernel_config, t),
            trials, jobs, desc=f"gamma3={gamma3:.3g}", progress=progress,
        )
        rows.append(PowerRow(
            gamma3=float(gamma3),
            power_dependent=float(np.mean([dep.reject_null for dep, _ in outcomes])),
            power_independent=float(np.mean([indep.reject_null for _, indep in outcomes])),
            trials=trials,
            alpha=alpha,
            m=base.m,
        ))
        logger.info("gamma3=%.3g power_dep=%.3f power_indep=%.3f",
                    gamma3, rows[-1].power_dependent, rows[-1].power_independent)
    return PowerTable(rows=rows)


def calibration(
    base: SynthConfig,
    trials: int = 300,
    alpha: float = 0.05,
    kernel_config: Optional[KernelConfig] = None,
    jobs: int = DEFAULT_JOBS,
    progress: bool = False,
) -> float:
    """
    Type I error rate of the dependent test at the null boundary gamma3 == gamma2.

    Raises:
        ExperimentError: If gamma3 != gamma2 or trials < 1
    """
    if base.gamma3 != base.gamma2:
        raise ExperimentError(
            f"calibration needs gamma3 == gamma2 (Y and Z equally dependent on X), got {base.gamma3} and {base.gamma2}"
        )
    if trials < 1:
        raise ExperimentError(f"trials must be >= 1, got {trials}")

    def task(t):
        j = sample_synthetic(base, trial_rng(base.seed, t))
        return dependent_test(j, kernel_config, alpha).reject_null

    rejections = run_trials(task, trials, jobs, desc="calibration", progress=progress)
    return float(np.mean(rejections))


def scatter_experiment(
    c: SynthConfig,
    trials: int = 100,
    alpha: float = 0.05,
    kernel_config: Optional[KernelConfig] = None,
    jobs: int = DEFAULT_JOBS,
    progress: bool = False,
) -> List[ScatterRecord]:
    """Paired HSIC estimates and p-values of both tests over repeated draws."""
    def task(t):
        dep, indep = _both_tests(c, alpha, kernel_config, t)
        return ScatterRecord(
            trial=t,
            hsic_xy=dep.estimates["hsic_xy"],
            hsic_xz=dep.estimates["hsic_xz"],
            p_dep=dep.p_value,
            p_indep=indep.p_value,
            indep_hsic_xy=indep.estimates["hsic_xy"],
            indep_hsic_xz=indep.estimates["hsic_xz"],
            std_dep=dep.std_dev,
            std_indep=indep.std_dev,
            predicted_power_dep=predicted_power(dep.statistic, dep.std_dev, alpha),
            predicted_power_indep=predicted_power(indep.statistic, indep.std_dev, alpha),
        )

    return run_trials(task, trials, jobs, desc="scatter", progress=progress)


def scatter_frame(records: Sequence[ScatterRecord]) -> pd.DataFrame:
    return pd.DataFrame([record.model_dump() for record in records])


def scatter_isocurves(records: Sequence[ScatterRecord], n_sigma: float = 2.0, points: int = 100) -> pd.DataFrame:
    """
    n-sigma ellipses of Gaussians fitted to the dependent and independent clouds
    of (HSIC_XY, HSIC_XZ) pairs, ready for plotting.
    """
    frame = scatter_frame(records)
    curves = []
    for method, columns in (("dependent", ["hsic_xy", "hsic_xz"]), ("independent", ["indep_hsic_xy", "indep_hsic_xz"])):
        cloud = frame[columns].to_numpy()
        cov = np.cov(cloud, rowvar=False) if len(cloud) > 1 else np.zeros((2, 2))
        curve = gaussian_isocurve(cloud.mean(axis=0), cov, n_sigma=n_sigma, points=points)
        curves.append(pd.DataFrame({"method": method, "hsic_xy": curve[:, 0], "hsic_xz": curve[:, 1]}))
    return pd.concat(curves, ignore_index=True)


def variance_comparison(
    c: SynthConfig,
    trials: int = 100,
    alpha: float = 0.05,
    kernel_config: Optional[KernelConfig] = None,
    jobs: int = DEFAULT_JOBS,
    progress: bool = False,
) -> dict:
    """
    Sample variance over draws of the dependent and of the independent difference
    statistic.

    Returns:
        dict: {var_dependent, var_independent, ratio, trials}
    """
    if trials < 2:
        raise ExperimentError(f"variance comparison needs at least 2 trials, got {trials}")
    outcomes = run_trials(lambda t: _both_tests(c, alpha, kernel_config, t), trials, jobs,
                          desc="variance", progress=progress)
    dependent = np.array([dep.statistic for dep, _ in outcomes])
    independent = np.array([indep.statistic for _, indep in outcomes])
    var_dependent = float(np.var(dependent, ddof=1))
    var_independent = float(np.var(independent, ddof=1))
    return {
        "var_dependent": var_dependent,
        "var_independent": var_independent,
        "ratio": var_dependent / var_independent if var_independent > 0 else float("nan"),
        "trials": trials,
    }


def convergence_diagnostic(
    m_grid: Sequence[int],
    c: SynthConfig,
    trials: int = 50,
    reference_trials: Optional[int] = None,
    kernel_config: Optional[KernelConfig] = None,
    jobs: int = DEFAULT_JOBS,
    progress: bool = False,
) -> ConvergenceTable:
    """
    Empirical convergence of HSIC_XY - HSIC_XZ to its population value.

    The population difference is approximated by the mean estimate at four times
    the largest grid size. The theoretical log-log slope is -1/2.

    Args:
        m_grid (Sequence[int]): Ascending sample sizes, at least 3
        c (SynthConfig): Noise scales and seed (its m is ignored)
        trials (int): Draws per grid point
        reference_trials (int, optional): Draws at the reference size; defaults to ``trials``

    Returns:
        ConvergenceTable: Median absolute deviation per m and the fitted slope
    """
    grid = [int(m) for m in m_grid]
    if len(grid) < 3:
        raise ExperimentError(f"convergence diagnostic needs at least 3 sample sizes, got {len(grid)}")
    if any(later <= earlier for earlier, later in zip(grid, grid[1:])):
        raise ExperimentError(f"sample sizes must be strictly ascending, got {grid}")
    if trials < 1:
        raise ExperimentError(f"trials must be >= 1, got {trials}")
    reference_trials = reference_trials or trials

    def delta(m, stream, t):
        config = c.model_copy(update={"m": m})
        j = sample_synthetic(config, trial_rng(c.seed, stream, t))
        return dependent_test(j, kernel_config).statistic

    reference_m = 4 * grid[-1]
    reference = run_trials(lambda t: delta(reference_m, len(grid), t), reference_trials, jobs,
                           desc=f"m={reference_m}", progress=progress)
    reference_delta = float(np.mean(reference))

    rows = []
    for index, m in enumerate(grid):
        deltas = np.array(run_trials(lambda t: delta(m, index, t), trials, jobs, desc=f"m={m}", progress=progress))
        rows.append(ConvergenceRow(m=m, median_abs_deviation=float(np.median(np.abs(deltas - reference_delta))),
                                   trials=trials))

    slope = float(np.polyfit(np.log([row.m for row in rows]),
                             np.log([row.median_abs_deviation for row in rows]), 1)[0])
    logger.info("Convergence slope %.3f over m=%s", slope, grid)
    return ConvergenceTable(rows=rows, reference_m=reference_m, reference_delta=reference_delta, slope=slope)
