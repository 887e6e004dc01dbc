"""
HSIC estimator tests.

The closed-form estimators are checked against explicit enumeration of index
tuples on small samples.
"""
import time

import numpy as np
import pytest

from app.data.dataset import Sample, align
from app.errors import KernelContractError, SampleSizeError
from app.hsic.estimators import (
    VARIANCE_FLOOR,
    HsicEstimate,
    covariance_summary,
    cross_covariance,
    estimate,
    falling_factorial,
    h_vector,
    hsic_unbiased,
    raw_covariance,
    variance_hsic,
)
from app.hsic.oracles import h_vector_bruteforce, hsic_bruteforce
from app.kernels.gram import GramMatrix, build_gram, zero_diagonal
from app.reltest.procedures import dependent_test
from app.synthbench.generators import SynthConfig, sample_synthetic, trial_rng
from tests.conftest import dependent_joint, random_gram_pair
from tests.config import (
    H_VECTOR_SIZES,
    N_UNBIASED,
    N_VARIANCE,
    N_VARIANCE_SCALING,
    ORACLE_PAIRS,
    ORACLE_RTOL,
    ORACLE_SIZES,
    SEED,
    SYNTH_M,
    VARIANCE_SCALING_GRID,
)


def constant_gram(m, value=2.0):
    return zero_diagonal(GramMatrix(np.full((m, m), value), zero_diagonal=False, kernel=None))


class TestOracleAgreement:

    @pytest.mark.parametrize("m", ORACLE_SIZES)
    def test_hsic_matches_enumeration(self, m):
        rng = np.random.default_rng([SEED, m])
        for index in range(ORACLE_PAIRS):
            kind = "symmetric" if index % 2 else "gaussian"
            kt, lt = random_gram_pair(m, rng, kind)
            oracle = hsic_bruteforce(kt, lt)
            assert abs(hsic_unbiased(kt, lt) - oracle) < ORACLE_RTOL * max(1.0, abs(oracle))

    @pytest.mark.parametrize("m", H_VECTOR_SIZES)
    def test_h_vector_is_twice_the_raw_sums(self, m):
        rng = np.random.default_rng([SEED, m, 1])
        for kind in ("gaussian", "symmetric"):
            kt, lt = random_gram_pair(m, rng, kind)
            oracle = h_vector_bruteforce(kt, lt)
            scale = max(1.0, float(np.abs(oracle).max()))
            np.testing.assert_allclose(0.5 * h_vector(kt, lt), oracle, rtol=0, atol=ORACLE_RTOL * scale)
            np.testing.assert_allclose(estimate(kt, lt).per_observation_sums, oracle, rtol=0,
                                       atol=ORACLE_RTOL * scale)

    @pytest.mark.parametrize("m", H_VECTOR_SIZES)
    def test_cross_covariance_matches_enumeration(self, m):
        rng = np.random.default_rng([SEED, m, 2])
        x = rng.standard_normal((m, 1))
        y = x ** 2 + 0.3 * rng.standard_normal((m, 1))
        z = np.abs(x) + rng.standard_normal((m, 1))
        kx, ly, dz = (build_gram(Sample(values)) for values in (x, y, z))

        sums_xy = h_vector_bruteforce(kx, ly)
        sums_xz = h_vector_bruteforce(kx, dz)
        r = sums_xy @ sums_xz / (m * falling_factorial(m - 1, 3) ** 2)
        oracle = 16.0 / m * (r - hsic_bruteforce(kx, ly) * hsic_bruteforce(kx, dz))

        value = cross_covariance(estimate(kx, ly), estimate(kx, dz))
        assert abs(value - oracle) < ORACLE_RTOL * max(1.0, abs(oracle))

    def test_raw_sums_add_up_to_the_statistic(self):
        m = 8
        rng = np.random.default_rng([SEED, m, 3])
        for kind in ("gaussian", "symmetric"):
            kt, lt = random_gram_pair(m, rng, kind)
            total = falling_factorial(m, 4) * hsic_unbiased(kt, lt)
            scale = max(1.0, abs(total))
            assert abs(estimate(kt, lt).per_observation_sums.sum() - total) < ORACLE_RTOL * scale
            assert abs(h_vector_bruteforce(kt, lt).sum() - total) < ORACLE_RTOL * scale


class TestHsicProperties:

    def test_symmetric_in_its_arguments(self, rng):
        kt, lt = random_gram_pair(30, rng)
        assert hsic_unbiased(kt, lt) == pytest.approx(hsic_unbiased(lt, kt), rel=1e-12, abs=1e-15)

    def test_invariant_to_joint_permutation(self, rng):
        kt, lt = random_gram_pair(30, rng)
        order = rng.permutation(30)
        permuted = [
            GramMatrix(g.values[np.ix_(order, order)], zero_diagonal=True, kernel=g.kernel) for g in (kt, lt)
        ]
        assert hsic_unbiased(*permuted) == pytest.approx(hsic_unbiased(kt, lt), rel=1e-10, abs=1e-14)

    def test_constant_target_gives_zero(self, rng):
        kt, _ = random_gram_pair(25, rng)
        lt = constant_gram(25)
        assert abs(hsic_unbiased(kt, lt)) < 1e-12
        np.testing.assert_allclose(h_vector(kt, lt), 0.0, atol=1e-8)

    def test_variance_floor(self, rng):
        kt, _ = random_gram_pair(25, rng)
        assert variance_hsic(estimate(kt, constant_gram(25))) == VARIANCE_FLOOR

    def test_dependent_data_positive(self, rng):
        j = dependent_joint(200, rng)
        assert hsic_unbiased(build_gram(j.x), build_gram(j.y)) > 0

    def test_falling_factorial(self):
        assert falling_factorial(5, 3) == 60.0
        assert falling_factorial(7, 0) == 1.0


class TestPreconditions:

    def test_needs_four_observations(self, rng):
        kt, lt = random_gram_pair(3, rng, "symmetric")
        with pytest.raises(SampleSizeError):
            hsic_unbiased(kt, lt)

    def test_sizes_must_match(self, rng):
        kt, _ = random_gram_pair(6, rng, "symmetric")
        _, lt = random_gram_pair(7, rng, "symmetric")
        with pytest.raises(KernelContractError):
            hsic_unbiased(kt, lt)

    def test_needs_zero_diagonal(self, rng):
        kt, lt = random_gram_pair(6, rng, "symmetric")
        full = GramMatrix(kt.values, zero_diagonal=False, kernel=None)
        with pytest.raises(KernelContractError):
            hsic_unbiased(full, lt)

    def test_h_vector_length_checked(self):
        with pytest.raises(KernelContractError):
            HsicEstimate(value=0.0, h_vector=np.zeros(3), m=4)


class TestCovarianceSummary:

    def test_identical_targets(self, rng):
        j = dependent_joint(80, rng)
        kx, ly = build_gram(j.x), build_gram(j.y)
        e_xy, e_xz = estimate(kx, ly, "XY"), estimate(kx, ly, "XZ")
        assert cross_covariance(e_xy, e_xz) == pytest.approx(variance_hsic(e_xy), rel=1e-12)
        summary = covariance_summary(e_xy, e_xz)
        assert abs(summary.difference_variance()) < 1e-12 * max(1.0, summary.var_xy)

    def test_matrix_is_symmetric(self, rng):
        j = dependent_joint(80, rng)
        kx = build_gram(j.x)
        summary = covariance_summary(estimate(kx, build_gram(j.y)), estimate(kx, build_gram(j.z)))
        np.testing.assert_array_equal(summary.matrix(), summary.matrix().T)
        assert summary.scale_note == "unscaled_statistic"

    def test_cross_covariance_shrunk_to_cauchy_schwarz_bound(self):
        m = 10
        h = np.ones(m)
        r = 0.25 / falling_factorial(m - 1, 3) ** 2
        e_xy = HsicEstimate(value=0.0, h_vector=h, m=m)
        e_xz = HsicEstimate(value=float(np.sqrt(0.9 * r)), h_vector=h, m=m)
        summary = covariance_summary(e_xy, e_xz)
        assert summary.clamped
        assert summary.cov_xyxz == pytest.approx(np.sqrt(summary.var_xy * summary.var_xz), rel=1e-12)


def synthetic_estimates(m, *stream):
    j = sample_synthetic(SynthConfig(m=m, gamma3=0.7, seed=SEED), trial_rng(SEED, *stream))
    kx = build_gram(j.x)
    return estimate(kx, build_gram(j.y), "XY"), estimate(kx, build_gram(j.z), "XZ")


class TestVarianceEstimates:

    def test_variance_positive_before_flooring(self):
        for trial in range(N_VARIANCE):
            e_xy, _ = synthetic_estimates(100, 0, trial)
            assert raw_covariance(e_xy, e_xy) > 0

    def test_cross_covariance_within_cauchy_schwarz_bound(self):
        for trial in range(10):
            e_xy, e_xz = synthetic_estimates(SYNTH_M, 1, trial)
            bound = np.sqrt(raw_covariance(e_xy, e_xy) * raw_covariance(e_xz, e_xz))
            assert abs(cross_covariance(e_xy, e_xz)) <= bound + 1e-8


@pytest.mark.slow
def test_unbiased_under_independence():
    """Mean of the estimate over independent draws stays within 4 standard errors of 0."""
    values = []
    for trial in range(N_UNBIASED):
        rng = np.random.default_rng([SEED, trial])
        x, y = rng.standard_normal((20, 1)), rng.standard_normal((20, 1))
        values.append(hsic_unbiased(build_gram(Sample(x)), build_gram(Sample(y))))
    values = np.array(values)
    standard_error = values.std(ddof=1) / np.sqrt(len(values))
    assert abs(values.mean()) < 4 * standard_error


@pytest.mark.slow
def test_dependent_test_scales_quadratically():
    """Doubling m from 1000 to 2000 costs at most 5x."""
    def best_time(m):
        rng = np.random.default_rng([SEED, m])
        x = rng.standard_normal((m, 2))
        j = align(Sample(x), Sample(x + rng.standard_normal((m, 2))), Sample(rng.standard_normal((m, 2))))
        timings = []
        for _ in range(3):
            start = time.perf_counter()
            dependent_test(j)
            timings.append(time.perf_counter() - start)
        return min(timings)

    assert best_time(2000) <= 5 * best_time(1000)


@pytest.mark.slow
def test_variance_halves_when_m_doubles():
    """Mean variance estimate shrinks like 1/m on dependent data."""
    means = []
    for m in VARIANCE_SCALING_GRID:
        variances = [variance_hsic(synthetic_estimates(m, 2, m, trial)[0]) for trial in range(N_VARIANCE_SCALING)]
        means.append(np.mean(variances))
    for smaller, larger in zip(means, means[1:]):
        assert 0.3 <= larger / smaller <= 0.7
