"""
Gram matrix module.
This module builds kernel matrices for a sample and the zero-diagonal variants
consumed by the HSIC estimators.
"""
import logging
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, PositiveFloat
from scipy.spatial.distance import pdist, squareform
from sklearn.metrics.pairwise import linear_kernel

from app.data.dataset import Sample
from app.errors import DegenerateSampleError, KernelContractError, SampleSizeError

logger = logging.getLogger(__name__)

KernelFamily = Literal["gaussian", "linear"]


class KernelSpec(BaseModel):
    """Kernel requested for one variable. A missing bandwidth means the median heuristic."""
    family: KernelFamily = "gaussian"
    bandwidth: Optional[PositiveFloat] = None


class KernelConfig(BaseModel):
    """Kernels for the source X and the two targets Y and Z."""
    x: KernelSpec = KernelSpec()
    y: KernelSpec = KernelSpec()
    z: KernelSpec = KernelSpec()


@dataclass(frozen=True)
class Bandwidth:
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise DegenerateSampleError(f"bandwidth must be positive, got {self.sigma}")


@dataclass(frozen=True)
class KernelDescriptor:
    family: KernelFamily
    bandwidth: Optional[float] = None

    def as_dict(self):
        return {"family": self.family, "bandwidth": self.bandwidth}


@dataclass(frozen=True)
class GramMatrix:
    """
    Kernel matrix of a sample.

    ``values`` is symmetric and read-only. ``zero_diagonal`` marks the masked
    variant (K tilde) expected by the unbiased estimators.
    """
    values: np.ndarray
    zero_diagonal: bool
    kernel: KernelDescriptor

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise KernelContractError(f"Gram matrix must be square, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.shape[0]


def pairwise_sq_distances(s: Sample) -> np.ndarray:
    """
    Squared Euclidean distances between all rows of a sample.

    Each unordered pair is computed once, so the result is exactly symmetric with
    a zero diagonal.
    """
    if s.m == 1:
        return np.zeros((1, 1))
    return squareform(pdist(s.data, metric="sqeuclidean"))


def median_heuristic(s: Sample) -> Bandwidth:
    """
    Median of the pairwise Euclidean distances (self-distances excluded).

    Args:
        s (Sample): The sample, with at least two rows

    Returns:
        Bandwidth: sigma set to the median distance

    Raises:
        SampleSizeError: If the sample has a single row
        DegenerateSampleError: If every pairwise distance is zero
    """
    if s.m < 2:
        raise SampleSizeError(f"median heuristic needs at least 2 observations, got {s.m}")
    distances = pdist(s.data, metric="euclidean")
    if not np.any(distances > 0):
        raise DegenerateSampleError(f"degenerate sample: zero median distance ('{s.label}')")
    sigma = float(np.median(distances))
    if sigma <= 0:
        raise DegenerateSampleError(f"degenerate sample: zero median distance ('{s.label}')")
    logger.debug("Median heuristic for %s: sigma=%.6g", s.label, sigma)
    return Bandwidth(sigma)


def gram_gaussian(s: Sample, b: Bandwidth) -> GramMatrix:
    """Gaussian kernel exp(-||x - x'||^2 / (2 sigma^2))."""
    values = np.exp(-pairwise_sq_distances(s) / (2.0 * b.sigma ** 2))
    return GramMatrix(values, zero_diagonal=False, kernel=KernelDescriptor("gaussian", b.sigma))


def gram_linear(s: Sample) -> GramMatrix:
    """Raw inner products, without centering or normalization."""
    values = linear_kernel(s.data)
    # gemm output is not bitwise symmetric
    values = 0.5 * (values + values.T)
    return GramMatrix(values, zero_diagonal=False, kernel=KernelDescriptor("linear"))


def zero_diagonal(g: GramMatrix) -> GramMatrix:
    """
    Copy of g with its diagonal set to zero.

    Raises:
        KernelContractError: If g is already zero-diagonal
    """
    if g.zero_diagonal:
        raise KernelContractError("Gram matrix already has a zeroed diagonal")
    values = np.array(g.values, copy=True)
    np.fill_diagonal(values, 0.0)
    return GramMatrix(values, zero_diagonal=True, kernel=g.kernel)


def build_gram(s: Sample, spec: Optional[KernelSpec] = None) -> GramMatrix:
    """
    Resolve a kernel spec into the zero-diagonal Gram matrix of a sample.

    Args:
        s (Sample): The sample
        spec (KernelSpec, optional): Family and optional bandwidth; Gaussian with the
            median heuristic by default

    Returns:
        GramMatrix: Zero-diagonal matrix whose descriptor records the bandwidth used
    """
    spec = spec or KernelSpec()
    if spec.family == "linear":
        return zero_diagonal(gram_linear(s))
    bandwidth = Bandwidth(spec.bandwidth) if spec.bandwidth is not None else median_heuristic(s)
    return zero_diagonal(gram_gaussian(s, bandwidth))
