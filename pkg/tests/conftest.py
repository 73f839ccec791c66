"""Shared fixtures: small grids and path batches reused across test modules."""

import numpy as np
import pytest

from chaosbsde import GridSpec, sample_paths


@pytest.fixture(scope="session")
def small_spec():
    # N and kappa*h chosen so jump counts of 0, 1, 2 all occur in practice
    return GridSpec(T=1.0, N=4, kappa=1.0)


@pytest.fixture(scope="session")
def small_paths(small_spec):
    return sample_paths(small_spec, 4_000, seed=42)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
