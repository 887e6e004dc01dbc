"""
Relative dependency test module.
This module implements the tests of H0: HSIC(X, Y) <= HSIC(X, Z):
the dependent test on the full sample, the independent split test, and the
generalized test of a weighted sum of several HSIC statistics.

All p-values are taken at the null boundary (equal dependencies), the most
conservative point of the composite null.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from app.config.settings import SMALL_M_THRESHOLD
from app.data.dataset import JointSample, Sample, split_half
from app.errors import AlignmentError, CovarianceError, InputError, SampleSizeError
from app.hsic.estimators import (
    MIN_M,
    VARIANCE_FLOOR,
    covariance_summary,
    estimate,
    raw_covariance,
    variance_hsic,
)
from app.kernels.gram import KernelConfig, KernelSpec, build_gram
from app.reltest.results import TestResult
from app.reltest.rotation import rotation_matrix

logger = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-12

Pair = Tuple[int, int]


@dataclass(frozen=True)
class JointGaussianSummary:
    """Asymptotic joint Gaussian of n HSIC statistics computed on one sample of size m."""
    means: np.ndarray
    covariance: np.ndarray
    m: int
    labels: Tuple[str, ...] = ()
    kernels: Dict[int, dict] = field(default_factory=dict)

    def __post_init__(self):
        means = np.array(self.means, dtype=float, copy=True)
        covariance = np.array(self.covariance, dtype=float, copy=True)
        n = means.size
        if n < 2:
            raise InputError(f"a joint summary needs at least 2 statistics, got {n}")
        if covariance.shape != (n, n):
            raise InputError(f"covariance shape {covariance.shape} does not match {n} means")
        if not np.array_equal(covariance, covariance.T):
            raise CovarianceError("covariance matrix is not symmetric")
        means.setflags(write=False)
        covariance.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariance", covariance)

    @property
    def n(self) -> int:
        return self.means.size


def normal_cdf(x: float) -> float:
    """Standard normal CDF (scipy's ndtr, accurate to double precision)."""
    if not np.isfinite(x):
        raise ValueError(f"normal_cdf needs a finite argument, got {x}")
    return float(special.ndtr(x))


def upper_tail_p_value(statistic: float, std_dev: float) -> float:
    """1 - Phi(statistic / std_dev), evaluated as Phi(-t) to keep small p-values exact."""
    return float(special.ndtr(-statistic / std_dev))


def predicted_power(statistic: float, std_dev: float, alpha: float) -> float:
    """
    Plug-in asymptotic power of a level-alpha test whose statistic has the given
    mean shift and standard deviation: 1 - Phi(z_{1-alpha} - statistic / std_dev).
    """
    _check_alpha(alpha)
    return float(special.ndtr(statistic / std_dev - special.ndtri(1.0 - alpha)))


def gaussian_isocurve(mean, cov, n_sigma: float = 2.0, points: int = 100) -> np.ndarray:
    """
    Points of the n-sigma iso-density ellipse of a bivariate Gaussian.

    Returns:
        np.ndarray: ``points`` x 2 array, closed (first point repeated last)
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    scale = eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
    angles = np.linspace(0.0, 2.0 * np.pi, points)
    circle = np.vstack([np.cos(angles), np.sin(angles)])
    return mean + n_sigma * (scale @ circle).T


def clamp_psd(covariance: np.ndarray) -> Tuple[np.ndarray, bool]:
    """
    Make a covariance estimate positive semidefinite.

    For two statistics the off-diagonal is shrunk to sqrt(var_1 var_2); larger
    matrices have negative eigenvalues floored at zero. PSD input is returned as is.
    """
    covariance = np.array(covariance, dtype=float, copy=True)
    if not np.all(np.isfinite(covariance)):
        raise CovarianceError("covariance matrix has non-finite entries")
    if covariance.shape == (2, 2):
        bound = float(np.sqrt(covariance[0, 0] * covariance[1, 1]))
        if abs(covariance[0, 1]) > bound:
            covariance[0, 1] = covariance[1, 0] = np.copysign(bound, covariance[0, 1])
            return covariance, True
        return covariance, False

    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    scale = max(float(np.trace(covariance)), VARIANCE_FLOOR)
    if eigenvalues.min() >= -PSD_TOLERANCE * scale:
        return covariance, False
    clipped = (eigenvectors * np.clip(eigenvalues, 0.0, None)) @ eigenvectors.T
    clipped = 0.5 * (clipped + clipped.T)
    return clipped, True


def _check_alpha(alpha: float):
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")


def _build_result(method, statistic, variance, alpha, m, kernel, estimates, warnings=None) -> TestResult:
    std_dev = float(np.sqrt(max(variance, VARIANCE_FLOOR)))
    p_value = upper_tail_p_value(statistic, std_dev)
    small_m = m < SMALL_M_THRESHOLD
    warnings = list(warnings or [])
    if small_m:
        warnings.append(
            f"m={m} is below {SMALL_M_THRESHOLD}; the Gaussian approximation of the p-value may be unreliable"
        )
    return TestResult(
        statistic=float(statistic),
        std_dev=std_dev,
        p_value=p_value,
        alpha=alpha,
        reject_null=p_value < alpha,
        method=method,
        small_m_warning=small_m,
        m=m,
        kernel=kernel,
        estimates=estimates,
        warnings=warnings,
    )


def dependent_test(j: JointSample, kernel_config: Optional[KernelConfig] = None, alpha: float = 0.05) -> TestResult:
    """
    Test whether X depends more on Y than on Z, using both statistics on the full sample.

    The two HSIC estimates share the Gram matrix of X, so their covariance enters
    the variance of the difference: var_xy + var_xz - 2 cov.

    Args:
        j (JointSample): Aligned X, Y, Z with m >= 4
        kernel_config (KernelConfig, optional): Kernels per variable
        alpha (float): Significance level in (0, 1)

    Returns:
        TestResult: method "dependent"

    Raises:
        InputError: If alpha is out of range or Z is missing
        StatisticalError: If m < 4 or a sample is degenerate for its kernel
    """
    _check_alpha(alpha)
    if j.z is None:
        raise AlignmentError("the relative test needs a Z sample")
    if j.m < MIN_M:
        raise SampleSizeError(f"dependent test needs m >= {MIN_M}, got m={j.m}")
    kernel_config = kernel_config or KernelConfig()

    kx = build_gram(j.x, kernel_config.x)
    ly = build_gram(j.y, kernel_config.y)
    dz = build_gram(j.z, kernel_config.z)
    e_xy = estimate(kx, ly, "XY")
    e_xz = estimate(kx, dz, "XZ")
    summary = covariance_summary(e_xy, e_xz)
    logger.debug(
        "Dependent test: HSIC_XY=%.6g HSIC_XZ=%.6g var_xy=%.3g var_xz=%.3g cov=%.3g",
        e_xy.value, e_xz.value, summary.var_xy, summary.var_xz, summary.cov_xyxz,
    )

    warnings = ["cross-covariance clamped to keep the covariance PSD"] if summary.clamped else []
    return _build_result(
        "dependent",
        e_xy.value - e_xz.value,
        summary.difference_variance(),
        alpha,
        j.m,
        kernel={"x": kx.kernel.as_dict(), "y": ly.kernel.as_dict(), "z": dz.kernel.as_dict()},
        estimates={"hsic_xy": e_xy.value, "hsic_xz": e_xz.value},
        warnings=warnings,
    )


def independent_test(
    j: JointSample,
    kernel_config: Optional[KernelConfig] = None,
    alpha: float = 0.05,
    shuffle: bool = False,
    seed: Optional[int] = None,
) -> TestResult:
    """
    Baseline test on disjoint halves: HSIC(X', Y') - HSIC(X'', Z'').

    The halves share no observation, so the two statistics are independent and the
    variance of the difference is var_x'y' + var_x''z''. Bandwidths are chosen on
    each half separately.

    Raises:
        SampleSizeError: If m < 8
    """
    _check_alpha(alpha)
    first, second = split_half(j, shuffle=shuffle, seed=seed)
    kernel_config = kernel_config or KernelConfig()

    kx_first = build_gram(first.x, kernel_config.x)
    ly_first = build_gram(first.y, kernel_config.y)
    kx_second = build_gram(second.x, kernel_config.x)
    dz_second = build_gram(second.y, kernel_config.z)
    e_xy = estimate(kx_first, ly_first, "X'Y'")
    e_xz = estimate(kx_second, dz_second, "X''Z''")

    return _build_result(
        "independent",
        e_xy.value - e_xz.value,
        variance_hsic(e_xy) + variance_hsic(e_xz),
        alpha,
        first.m,
        kernel={
            "x": kx_first.kernel.as_dict(),
            "x_second": kx_second.kernel.as_dict(),
            "y": ly_first.kernel.as_dict(),
            "z": dz_second.kernel.as_dict(),
        },
        estimates={"hsic_xy": e_xy.value, "hsic_xz": e_xz.value},
    )


def joint_summary(
    samples: Union[JointSample, Sequence[Sample]],
    pairs: Sequence[Pair],
    kernels: Union[KernelConfig, Sequence[KernelSpec], None] = None,
) -> JointGaussianSummary:
    """
    Joint Gaussian summary of several HSIC statistics on one aligned sample.

    Args:
        samples: A JointSample (variables 0, 1, 2 = X, Y, Z) or a list of aligned samples
        pairs: (source, target) variable indices, one HSIC statistic per pair
        kernels: A KernelConfig for X, Y, Z or one KernelSpec per variable

    Returns:
        JointGaussianSummary: means = HSIC estimates, covariance = (16/m)(R - mu mu'),
            diagonal floored and the whole matrix clamped to PSD

    Raises:
        AlignmentError: If the samples have different sizes or an index is out of range
    """
    variables = _as_variables(samples)
    specs = _as_specs(kernels, len(variables))
    if len(pairs) < 2:
        raise InputError(f"a joint summary needs at least 2 pairs, got {len(pairs)}")
    sizes = {s.m for s in variables}
    if len(sizes) != 1:
        raise AlignmentError(f"sample sizes {','.join(str(s.m) for s in variables)} differ")
    for source, target in pairs:
        if not (0 <= source < len(variables) and 0 <= target < len(variables)):
            raise AlignmentError(f"pair ({source}, {target}) refers to a missing variable")

    grams = {}
    for index in sorted({index for pair in pairs for index in pair}):
        grams[index] = build_gram(variables[index], specs[index])

    estimates = [estimate(grams[s], grams[t], f"{s}-{t}") for s, t in pairs]
    n = len(estimates)
    covariance = np.empty((n, n))
    for a in range(n):
        covariance[a, a] = variance_hsic(estimates[a])
        for b in range(a + 1, n):
            covariance[a, b] = covariance[b, a] = raw_covariance(estimates[a], estimates[b])
    covariance, clamped = clamp_psd(covariance)
    if clamped:
        logger.info("Joint covariance of %d statistics clamped to PSD", n)

    return JointGaussianSummary(
        means=np.array([e.value for e in estimates]),
        covariance=covariance,
        m=variables[0].m,
        labels=tuple(e.pair_label for e in estimates),
        kernels={index: grams[index].kernel.as_dict() for index in sorted(grams)},
    )


def generalized_test(summary: JointGaussianSummary, v, alpha: float = 0.05) -> TestResult:
    """
    Test H0: sum_k v_k HSIC_k <= 0 against the weighted sum being positive.

    The joint Gaussian is rotated so that v points along the first axis; the
    first diagonal entry of Q Sigma Q' is the variance of v'HSIC / ||v||.

    Args:
        summary (JointGaussianSummary): Means and covariance of the statistics
        v (array-like): Non-zero weights, one per statistic
        alpha (float): Significance level

    Returns:
        TestResult: statistic v'means, std_dev sqrt(v' Sigma v), method "generalized"
    """
    _check_alpha(alpha)
    v = np.asarray(v, dtype=float)
    if v.shape != (summary.n,):
        raise InputError(f"{v.size} weights given for {summary.n} statistics")
    if not np.all(np.isfinite(v)):
        raise InputError(f"weights must be finite, got {v.tolist()}")
    if not np.any(v != 0):
        raise InputError("weights must not all be zero")

    q = rotation_matrix(v).q
    norm = float(np.linalg.norm(v))
    projected_variance = float((q @ summary.covariance @ q.T)[0, 0])
    if not np.isfinite(projected_variance) or projected_variance < -PSD_TOLERANCE * max(
        float(np.trace(summary.covariance)), VARIANCE_FLOOR
    ):
        raise CovarianceError(f"projected variance {projected_variance:.3g} is negative; covariance is not PSD")

    return _build_result(
        "generalized",
        float(v @ summary.means),
        norm ** 2 * max(projected_variance, 0.0),
        alpha,
        summary.m,
        kernel={str(index): kernel for index, kernel in summary.kernels.items()},
        estimates={label: float(value) for label, value in zip(summary.labels, summary.means)},
    )


def group_test(
    samples: Sequence[Sample],
    source: int,
    targets: Sequence[int],
    weights,
    kernels: Optional[Sequence[KernelSpec]] = None,
    alpha: float = 0.05,
) -> TestResult:
    """
    Compare the dependence of one source on several targets with a weight vector,
    e.g. weights (1, 1, -2) asks whether the first two targets together depend more
    on the source than twice the third.
    """
    pairs = [(source, target) for target in targets]
    return generalized_test(joint_summary(samples, pairs, kernels), weights, alpha)


def _as_variables(samples) -> List[Sample]:
    if isinstance(samples, JointSample):
        return [s for s in (samples.x, samples.y, samples.z) if s is not None]
    return list(samples)


def _as_specs(kernels, count) -> List[KernelSpec]:
    if kernels is None:
        return [KernelSpec() for _ in range(count)]
    if isinstance(kernels, KernelConfig):
        return [kernels.x, kernels.y, kernels.z][:count]
    specs = list(kernels)
    if len(specs) != count:
        raise InputError(f"{len(specs)} kernel specs given for {count} variables")
    return specs


def summary_as_dict(summary: JointGaussianSummary) -> Dict[str, object]:
    """JSON-friendly view of a joint summary."""
    return {
        "m": summary.m,
        "labels": list(summary.labels),
        "means": summary.means.tolist(),
        "covariance": summary.covariance.tolist(),
    }
