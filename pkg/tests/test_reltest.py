"""
Relative dependency test procedures.
"""
import numpy as np
import pytest
from pydantic import ValidationError

from app.data.dataset import Sample, align
from app.errors import CovarianceError, InputError, SampleSizeError
from app.kernels.gram import KernelConfig, KernelSpec
from app.reltest.procedures import (
    JointGaussianSummary,
    clamp_psd,
    dependent_test,
    gaussian_isocurve,
    generalized_test,
    group_test,
    independent_test,
    joint_summary,
    normal_cdf,
    predicted_power,
    upper_tail_p_value,
)
from app.reltest.results import TestResult
from app.reltest.rotation import rotation_matrix
from tests.conftest import dependent_joint
from tests.config import ROTATION_TOL, ROTATION_VECTORS, SEED


class TestRotation:

    def test_random_vectors(self):
        rng = np.random.default_rng(SEED)
        for _ in range(ROTATION_VECTORS):
            n = int(rng.integers(2, 9))
            v = rng.standard_normal(n) * rng.uniform(0.1, 10.0)
            q = rotation_matrix(v).q
            norm = np.linalg.norm(v)
            assert np.max(np.abs(q.T @ q - np.eye(n))) < ROTATION_TOL
            rotated = q @ v
            assert abs(rotated[0] - norm) < ROTATION_TOL * norm
            assert np.all(np.abs(rotated[1:]) < ROTATION_TOL * norm)

    def test_proper_rotation(self):
        q = rotation_matrix([-1.0, 2.0, -3.0]).q
        assert np.linalg.det(q) == pytest.approx(1.0)

    def test_zero_first_coordinate(self):
        np.testing.assert_allclose(rotation_matrix([0.0, 1.0]).q @ [0.0, 1.0], [1.0, 0.0], atol=1e-15)

    def test_negative_axis_vector(self):
        np.testing.assert_allclose(rotation_matrix([-2.0, 0.0]).q @ [-2.0, 0.0], [2.0, 0.0], atol=1e-15)

    @pytest.mark.parametrize("v", [[0.0, 0.0], [1.0], [1.0, np.inf], [np.nan, 1.0]])
    def test_invalid_vectors(self, v):
        with pytest.raises(InputError):
            rotation_matrix(v)


class TestDependentTest:

    def test_detects_stronger_dependence(self, synthetic):
        result = dependent_test(synthetic)
        assert result.method == "dependent"
        assert result.statistic > 0
        assert result.reject_null

    def test_identical_targets(self, rng):
        j = dependent_joint(60, rng)
        result = dependent_test(align(j.x, j.y, j.y))
        assert result.statistic == 0.0
        assert result.p_value == 0.5

    def test_swapping_targets_mirrors_p_value(self, rng):
        for trial in range(5):
            j = dependent_joint(80, np.random.default_rng([SEED, trial]), noise_z=0.6)
            p = dependent_test(j).p_value
            p_swapped = dependent_test(align(j.x, j.z, j.y)).p_value
            assert p + p_swapped == pytest.approx(1.0, abs=1e-12)

    def test_payload(self, synthetic):
        payload = dependent_test(synthetic).to_payload()
        assert list(payload) == [
            "method", "statistic", "std_dev", "p_value", "alpha", "reject_null", "m", "kernel", "estimates", "warnings",
        ]
        assert set(payload["kernel"]) == {"x", "y", "z"}
        assert payload["kernel"]["x"]["family"] == "gaussian"
        assert set(payload["estimates"]) == {"hsic_xy", "hsic_xz"}

    def test_small_m_warning(self, rng):
        result = dependent_test(dependent_joint(50, rng))
        assert result.small_m_warning
        assert any("m=50" in warning for warning in result.warnings)
        assert not dependent_test(dependent_joint(120, rng)).small_m_warning

    def test_too_small(self, rng):
        with pytest.raises(SampleSizeError):
            dependent_test(dependent_joint(3, rng))

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
    def test_alpha_range(self, rng, alpha):
        with pytest.raises(InputError):
            dependent_test(dependent_joint(20, rng), alpha=alpha)

    def test_linear_kernels(self, rng):
        linear = KernelSpec(family="linear")
        result = dependent_test(dependent_joint(60, rng), KernelConfig(x=linear, y=linear, z=linear))
        assert result.kernel["y"] == {"family": "linear", "bandwidth": None}


class TestIndependentTest:

    def test_reports_half_size(self, synthetic):
        result = independent_test(synthetic)
        assert result.method == "independent"
        assert result.m == synthetic.m // 2
        assert set(result.kernel) == {"x", "x_second", "y", "z"}

    def test_too_small(self, rng):
        with pytest.raises(SampleSizeError):
            independent_test(dependent_joint(7, rng))

    def test_shuffle_is_seeded(self, synthetic):
        first = independent_test(synthetic, shuffle=True, seed=4)
        second = independent_test(synthetic, shuffle=True, seed=4)
        assert first.p_value == second.p_value


class TestGeneralizedTest:

    def test_reduces_to_dependent_test(self):
        for trial in range(20):
            j = dependent_joint(100, np.random.default_rng([SEED, trial]), noise_z=0.5)
            expected = dependent_test(j)
            result = generalized_test(joint_summary(j, [(0, 1), (0, 2)]), [1.0, -1.0])
            assert result.method == "generalized"
            assert result.statistic == pytest.approx(expected.statistic, rel=1e-12, abs=1e-15)
            assert abs(result.p_value - expected.p_value) < 1e-12

    def test_weight_scale_does_not_change_p_value(self, synthetic):
        summary = joint_summary(synthetic, [(0, 1), (0, 2)])
        p = generalized_test(summary, [1.0, -1.0]).p_value
        assert generalized_test(summary, [3.0, -3.0]).p_value == pytest.approx(p, abs=1e-12)

    def test_group_test(self, rng):
        x = rng.standard_normal((120, 1))
        targets = [np.sin(2 * x) + scale * rng.standard_normal((120, 1)) for scale in (0.2, 0.3, 2.0)]
        samples = [Sample(x, "x")] + [Sample(t, f"t{i}") for i, t in enumerate(targets)]
        result = group_test(samples, 0, [1, 2, 3], [1.0, 1.0, -2.0])
        assert list(result.estimates) == ["0-1", "0-2", "0-3"]
        assert result.statistic > 0
        assert set(result.kernel) == {"0", "1", "2", "3"}

    def test_weight_count_must_match(self, synthetic):
        summary = joint_summary(synthetic, [(0, 1), (0, 2)])
        with pytest.raises(InputError):
            generalized_test(summary, [1.0, -1.0, 1.0])

    def test_zero_weights(self, synthetic):
        summary = joint_summary(synthetic, [(0, 1), (0, 2)])
        with pytest.raises(InputError):
            generalized_test(summary, [0.0, 0.0])

    @pytest.mark.parametrize("weights", [[np.nan, 1.0], [1.0, np.inf]])
    def test_non_finite_weights(self, synthetic, weights):
        summary = joint_summary(synthetic, [(0, 1), (0, 2)])
        with pytest.raises(InputError, match="finite"):
            generalized_test(summary, weights)

    def test_joint_summary_is_psd(self, synthetic):
        summary = joint_summary(synthetic, [(0, 1), (0, 2), (1, 2)])
        assert np.linalg.eigvalsh(summary.covariance).min() >= -1e-12 * np.trace(summary.covariance)

    def test_summary_needs_symmetric_covariance(self):
        with pytest.raises(CovarianceError):
            JointGaussianSummary(means=[0.0, 0.0], covariance=[[1.0, 0.5], [0.4, 1.0]], m=10)


class TestHelpers:

    def test_normal_cdf(self):
        assert normal_cdf(0.0) == 0.5
        assert normal_cdf(1.959963984540054) == pytest.approx(0.975)
        with pytest.raises(ValueError):
            normal_cdf(float("nan"))

    def test_normal_cdf_one_sided_quantile(self):
        assert normal_cdf(1.6448536269514722) == pytest.approx(0.95, abs=1e-12)

    def test_normal_cdf_symmetry(self):
        for x in np.random.default_rng(SEED).uniform(-8.0, 8.0, 1000):
            assert abs(normal_cdf(-x) - (1.0 - normal_cdf(x))) <= 1e-14

    def test_p_value_decreases_with_statistic(self):
        p_values = [upper_tail_p_value(statistic, 0.7) for statistic in np.linspace(-5.0, 5.0, 201)]
        assert np.all(np.diff(p_values) <= 0)
        assert p_values[0] > 0.999 and p_values[-1] < 1e-7

    def test_predicted_power_at_zero_effect_is_alpha(self):
        assert predicted_power(0.0, 1.0, 0.05) == pytest.approx(0.05)

    def test_clamp_psd_two_by_two(self):
        clamped, changed = clamp_psd(np.array([[1.0, 2.0], [2.0, 4.0 - 1.0]]))
        assert changed
        assert clamped[0, 1] == pytest.approx(np.sqrt(3.0))

    def test_clamp_psd_larger(self):
        covariance = np.array([[1.0, 0.9, -0.9], [0.9, 1.0, 0.9], [-0.9, 0.9, 1.0]])
        clamped, changed = clamp_psd(covariance)
        assert changed
        assert np.linalg.eigvalsh(clamped).min() > -1e-12
        np.testing.assert_array_equal(clamped, clamped.T)

    def test_clamp_psd_leaves_psd_alone(self):
        covariance = np.array([[2.0, 0.5], [0.5, 1.0]])
        clamped, changed = clamp_psd(covariance)
        assert not changed
        np.testing.assert_array_equal(clamped, covariance)

    def test_isocurve_on_two_sigma_ellipse(self):
        mean = np.array([1.0, -1.0])
        cov = np.array([[2.0, 0.3], [0.3, 0.5]])
        curve = gaussian_isocurve(mean, cov, n_sigma=2.0, points=50)
        assert curve.shape == (50, 2)
        offsets = curve - mean
        mahalanobis = np.einsum("ij,jk,ik->i", offsets, np.linalg.inv(cov), offsets)
        np.testing.assert_allclose(mahalanobis, 4.0, rtol=1e-10)

    def test_result_decision_must_match_p_value(self):
        with pytest.raises(ValidationError):
            TestResult(statistic=1.0, std_dev=1.0, p_value=0.2, alpha=0.05, reject_null=True, method="dependent", m=10)
