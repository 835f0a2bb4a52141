import numpy as np
import pytest

from bennett4r.dataset import GenerationConfig, GridConfig, generate


@pytest.fixture(scope="session")
def small_dataset():
    """A 6x6 generation run shared by tests that need real samples."""
    cfg = GenerationConfig(grid=GridConfig(n_a=6, n_alpha=6))
    samples, report = generate(cfg)
    assert samples, "the 6x6 grid should yield at least one accepted sample"
    return cfg, samples, report


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def gate1_valid_pairs(rng, count):
    """Rejection-sample (a12, alpha12) pairs that pass the feasibility gate."""
    out = []
    while len(out) < count:
        a12 = rng.uniform(0.05, 0.95)
        alpha12 = rng.uniform(0.1, 2.0 * np.pi - 0.1)
        if abs((1.0 - a12) / a12 * np.sin(alpha12)) <= 1.0:
            out.append((float(a12), float(alpha12)))
    return out
