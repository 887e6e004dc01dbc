"""
HSIC estimators module.
This module computes the unbiased HSIC statistic, the per-observation h-vectors
and the variance/covariance estimates built from them, all in O(m^2).

Every variance here is the variance of the unscaled statistic HSIC_m (it already
carries the 1/m factor), so the standard deviation of a difference of statistics
is read off directly.
"""
import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from app.errors import KernelContractError, SampleSizeError
from app.kernels.gram import GramMatrix

logger = logging.getLogger(__name__)

MIN_M = 4
VARIANCE_FLOOR = 1e-12

# The closed-form h-vector equals twice the raw per-observation sums
# sum_{(j,q,r)} h_ijqr over ordered 3-tuples; checked against the brute-force oracle.
H_VECTOR_TO_RAW = 0.5


@dataclass(frozen=True)
class HsicEstimate:
    """Unbiased HSIC value with the h-vector needed for its (co)variances."""
    value: float
    h_vector: np.ndarray
    m: int
    pair_label: str = "XY"

    def __post_init__(self):
        h_vector = np.array(self.h_vector, dtype=float, copy=True)
        if h_vector.shape != (self.m,):
            raise KernelContractError(f"h-vector length {h_vector.shape} does not match m={self.m}")
        h_vector.setflags(write=False)
        object.__setattr__(self, "h_vector", h_vector)

    @property
    def per_observation_sums(self) -> np.ndarray:
        """Raw sums of the U-statistic kernel over the 3-tuples excluding each observation."""
        return H_VECTOR_TO_RAW * self.h_vector


@dataclass(frozen=True)
class CovarianceSummary:
    """Variances and cross-covariance of two HSIC statistics sharing the source X."""
    var_xy: float
    var_xz: float
    cov_xyxz: float
    scale_note: Literal["per_sqrt_m_scaled", "unscaled_statistic"] = "unscaled_statistic"
    clamped: bool = False

    def matrix(self) -> np.ndarray:
        return np.array([[self.var_xy, self.cov_xyxz], [self.cov_xyxz, self.var_xz]])

    def difference_variance(self) -> float:
        """Variance of HSIC_XY - HSIC_XZ."""
        return self.var_xy + self.var_xz - 2.0 * self.cov_xyxz


def falling_factorial(n: int, k: int) -> float:
    """(n)_k = n (n-1) ... (n-k+1), as a float."""
    result = 1.0
    for step in range(k):
        result *= n - step
    return result


def check_pair(kt: GramMatrix, lt: GramMatrix, min_m: int = MIN_M) -> int:
    """
    Validate two zero-diagonal Gram matrices for joint use.

    Returns:
        int: The shared sample size m

    Raises:
        KernelContractError: If a matrix is not zero-diagonal or the sizes differ
        SampleSizeError: If m < min_m
    """
    if not (kt.zero_diagonal and lt.zero_diagonal):
        raise KernelContractError("HSIC estimators need zero-diagonal Gram matrices")
    if kt.m != lt.m:
        raise KernelContractError(f"Gram matrix sizes differ: {kt.m} vs {lt.m}")
    if kt.m < min_m:
        raise SampleSizeError(f"HSIC estimator needs m >= {min_m}, got m={kt.m}")
    return kt.m


def _moments(k: np.ndarray, l: np.ndarray):
    a = k.sum(axis=1)
    b = l.sum(axis=1)
    hadamard_rows = (k * l).sum(axis=1)
    trace = hadamard_rows.sum()
    return a, b, hadamard_rows, trace, a @ b


def _hsic_from_moments(m, a, b, trace, ab):
    total = trace + a.sum() * b.sum() / ((m - 1) * (m - 2)) - 2.0 / (m - 2) * ab
    return float(total / (m * (m - 3)))


def _h_vector_from_moments(k, l, m, a, b, hadamard_rows, trace, ab):
    return (
        (m - 2) ** 2 * hadamard_rows
        - m * a * b
        + (m - 2) * (trace - k @ b - l @ a)
        + b.sum() * a
        + a.sum() * b
        - ab
    )


def hsic_unbiased(kt: GramMatrix, lt: GramMatrix) -> float:
    """
    Unbiased HSIC estimate from two zero-diagonal Gram matrices.

    The value can be negative when the population HSIC is close to zero.

    Args:
        kt (GramMatrix): Zero-diagonal Gram matrix of the source
        lt (GramMatrix): Zero-diagonal Gram matrix of the target

    Returns:
        float: 1/(m(m-3)) [Tr(KL) + 1'K1 1'L1/((m-1)(m-2)) - 2/(m-2) 1'KL1]
    """
    m = check_pair(kt, lt)
    a, b, _, trace, ab = _moments(kt.values, lt.values)
    return _hsic_from_moments(m, a, b, trace, ab)


def h_vector(kt: GramMatrix, lt: GramMatrix) -> np.ndarray:
    """
    Closed-form vector of per-observation U-statistic kernel sums, up to the
    factor H_VECTOR_TO_RAW.

    Products are evaluated matrix-vector first so the cost stays O(m^2).
    """
    m = check_pair(kt, lt)
    k, l = kt.values, lt.values
    a, b, hadamard_rows, trace, ab = _moments(k, l)
    return _h_vector_from_moments(k, l, m, a, b, hadamard_rows, trace, ab)


def estimate(kt: GramMatrix, lt: GramMatrix, pair_label: str = "XY") -> HsicEstimate:
    """Compute the HSIC value and its h-vector in a single pass."""
    m = check_pair(kt, lt)
    k, l = kt.values, lt.values
    a, b, hadamard_rows, trace, ab = _moments(k, l)
    return HsicEstimate(
        value=_hsic_from_moments(m, a, b, trace, ab),
        h_vector=_h_vector_from_moments(k, l, m, a, b, hadamard_rows, trace, ab),
        m=m,
        pair_label=pair_label,
    )


def second_moment(e_first: HsicEstimate, e_second: HsicEstimate) -> float:
    """
    R term of the variance formulas: mean over observations of the product of the
    normalized per-observation sums of both statistics.
    """
    if e_first.m != e_second.m:
        raise KernelContractError(f"estimates use different sample sizes: {e_first.m} vs {e_second.m}")
    m = e_first.m
    return float(e_first.per_observation_sums @ e_second.per_observation_sums) / (
        m * falling_factorial(m - 1, 3) ** 2
    )


def raw_covariance(e_first: HsicEstimate, e_second: HsicEstimate) -> float:
    """(16/m)(R - HSIC_1 HSIC_2) without any flooring."""
    return 16.0 / e_first.m * (second_moment(e_first, e_second) - e_first.value * e_second.value)


def variance_hsic(e: HsicEstimate) -> float:
    """
    Variance of the unscaled statistic, (16/m)(R - HSIC^2), floored at VARIANCE_FLOOR.
    """
    if e.m < MIN_M:
        raise SampleSizeError(f"variance estimate needs m >= {MIN_M}, got m={e.m}")
    variance = raw_covariance(e, e)
    if variance < VARIANCE_FLOOR:
        logger.debug("Variance estimate %.3g for %s floored at %.0e", variance, e.pair_label, VARIANCE_FLOOR)
        return VARIANCE_FLOOR
    return variance


def cross_covariance(e_xy: HsicEstimate, e_xz: HsicEstimate) -> float:
    """
    Covariance of two HSIC statistics computed with the same source Gram matrix.

    R_XYXZ is taken as the mean of products of per-observation sums, which is what
    the O(m^2) formula (4m)^-1 (m-1)_3^-2 h_XY' h_XZ evaluates.
    """
    return raw_covariance(e_xy, e_xz)


def covariance_summary(e_xy: HsicEstimate, e_xz: HsicEstimate) -> CovarianceSummary:
    """
    Assemble the 2x2 covariance of (HSIC_XY, HSIC_XZ), clamped to be PSD.

    |cov| is shrunk to sqrt(var_xy var_xz) when the raw estimate exceeds it.
    """
    var_xy = variance_hsic(e_xy)
    var_xz = variance_hsic(e_xz)
    cov = cross_covariance(e_xy, e_xz)
    bound = float(np.sqrt(var_xy * var_xz))
    clamped = abs(cov) > bound
    if clamped:
        logger.info("Clamping cross-covariance %.3g to +/-%.3g", cov, bound)
        cov = float(np.copysign(bound, cov))
    return CovarianceSummary(var_xy=var_xy, var_xz=var_xz, cov_xyxz=cov, clamped=clamped)
