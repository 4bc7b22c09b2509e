import numpy as np
import pytest

from tdiff.model import ModelParams
from tdiff.simulate import SamplingScheme, simulate_path, substream
from tdiff.model import sample_stationary


@pytest.fixture(scope="session")
def table1():
    """The weak-drift benchmark parameter set used throughout."""
    return ModelParams.ergodic(
        b_plus=-0.01, b_minus=0.02, sigma_plus=0.10, sigma_minus=0.07
    )


@pytest.fixture(scope="session")
def symmetric():
    """Strong symmetric drift, unit volatility."""
    return ModelParams.ergodic(b_plus=-0.5, b_minus=0.5, sigma_plus=1.0, sigma_minus=1.0)


def stationary_path(params, h, n_obs, seed, substeps=8, key=()):
    """One path started from an independent stationary draw."""
    rng = substream(seed, 0, *key)
    x0 = sample_stationary(params, rng)
    scheme = SamplingScheme(h=h, n_obs=n_obs, substeps=substeps)
    return simulate_path(params, x0, scheme, seed, key=(1, *key))


def random_ergodic(rng):
    return ModelParams.ergodic(
        b_plus=-float(rng.uniform(0.05, 1.5)),
        b_minus=float(rng.uniform(0.05, 1.5)),
        sigma_plus=float(rng.uniform(0.3, 2.0)),
        sigma_minus=float(rng.uniform(0.3, 2.0)),
    )
