"""
Synthetic data module.
This module draws the three noisy curves whose relative dependence is controlled
by the noise scales gamma1, gamma2 and gamma3.

Per observation a single t ~ U(0, 2 pi) drives all three variables:
    X = (t + g1 e1, sin t + g1 e2)
    Y = (t cos t + g2 e3, t sin t + g2 e4)
    Z = (t cos t + g3 e5, t sin t + g3 e6)
with independent standard normal e1..e6.
"""
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from app.data.dataset import JointSample, Sample, align

MIN_SYNTH_M = 8


class SynthConfig(BaseModel):
    """Sample size, noise scales and seed of one synthetic draw."""
    m: int = Field(default=500, ge=MIN_SYNTH_M)
    gamma1: float = Field(default=0.3, ge=0)
    gamma2: float = Field(default=0.3, ge=0)
    gamma3: float = Field(default=0.7, ge=0)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)


def trial_rng(seed: int, *stream) -> np.random.Generator:
    """Independent generator for the stream identified by (seed, *stream)."""
    return np.random.default_rng(np.random.SeedSequence([seed, *stream]))


def sample_synthetic(c: SynthConfig, rng: Optional[np.random.Generator] = None) -> JointSample:
    """
    Draw one joint sample (X, Y, Z), each an m x 2 matrix.

    Args:
        c (SynthConfig): Sample size, noise scales and seed
        rng (np.random.Generator, optional): Generator to draw from; defaults to one
            seeded with ``c.seed``

    Returns:
        JointSample: X = curve (a), Y = curve (b), Z = curve (c)
    """
    rng = rng if rng is not None else trial_rng(c.seed)
    t = rng.uniform(0.0, 2.0 * np.pi, size=c.m)
    noise = rng.standard_normal((c.m, 6))

    spiral_x = t * np.cos(t)
    spiral_y = t * np.sin(t)
    x = np.column_stack([t + c.gamma1 * noise[:, 0], np.sin(t) + c.gamma1 * noise[:, 1]])
    y = np.column_stack([spiral_x + c.gamma2 * noise[:, 2], spiral_y + c.gamma2 * noise[:, 3]])
    z = np.column_stack([spiral_x + c.gamma3 * noise[:, 4], spiral_y + c.gamma3 * noise[:, 5]])
    return align(Sample(x, label="x"), Sample(y, label="y"), Sample(z, label="z"))
