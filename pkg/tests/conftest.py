"""
Shared fixtures and helpers.
"""
import numpy as np
import pytest

from app.data.dataset import Sample, align, save_csv
from app.kernels.gram import GramMatrix, build_gram, zero_diagonal
from app.synthbench.generators import SynthConfig, sample_synthetic, trial_rng
from tests.config import SEED


def random_gram_pair(m, rng, kind="gaussian"):
    """
    Two zero-diagonal Gram matrices of size m.

    ``gaussian`` builds kernel matrices of dependent random points, ``symmetric``
    draws arbitrary symmetric matrices (the estimator identities are algebraic).
    """
    if kind == "symmetric":
        a = rng.standard_normal((m, m))
        b = rng.standard_normal((m, m))
        k = GramMatrix(a + a.T, zero_diagonal=False, kernel=None)
        l = GramMatrix(b + b.T, zero_diagonal=False, kernel=None)
        return zero_diagonal(k), zero_diagonal(l)
    x = rng.standard_normal((m, 2))
    y = x[:, :1] ** 2 + 0.5 * rng.standard_normal((m, 1))
    return build_gram(Sample(x, "x")), build_gram(Sample(y, "y"))


def dependent_joint(m, rng, noise_y=0.3, noise_z=1.0):
    """X with Y strongly and Z weakly dependent on it."""
    x = rng.standard_normal((m, 1))
    y = np.sin(2 * x) + noise_y * rng.standard_normal((m, 1))
    z = np.sin(2 * x) + noise_z * rng.standard_normal((m, 1))
    return align(Sample(x, "x"), Sample(y, "y"), Sample(z, "z"))


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def synthetic():
    """One draw at m=200 with gamma3 well above gamma2."""
    config = SynthConfig(m=200, gamma3=1.7, seed=SEED)
    return sample_synthetic(config, trial_rng(SEED))


@pytest.fixture
def csv_triplet(tmp_path, synthetic):
    """x.csv, y.csv, z.csv of the synthetic fixture."""
    return [
        str(save_csv(sample, tmp_path / f"{name}.csv"))
        for name, sample in (("x", synthetic.x), ("y", synthetic.y), ("z", synthetic.z))
    ]
