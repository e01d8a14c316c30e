import json
import pathlib

import numpy as np
import pytest

from smmport import DiscreteMarket, MomentPair

SAMPLE_DIR = pathlib.Path(__file__).resolve().parent.parent / "sample_inputs"


def random_spd(rng, n, scale=1.0):
    """Well-conditioned random symmetric positive definite matrix."""
    g = rng.standard_normal((n, n))
    return scale * (g @ g.T / n + (0.5 + 0.1 * n) * np.eye(n))


def random_moment_pair(rng, n):
    mu = 0.5 * rng.standard_normal(n)
    return MomentPair.from_covariance(mu, random_spd(rng, n))


def random_market(rng, n_assets=None, n_states=None, zero_mean_states=()):
    n = n_assets if n_assets is not None else int(rng.integers(1, 5))
    s = n_states if n_states is not None else int(rng.integers(1, 6))
    probs = rng.uniform(0.2, 1.0, s)
    probs /= probs.sum()
    states = []
    for i in range(s):
        pair = random_moment_pair(rng, n)
        if i in zero_mean_states:
            pair = MomentPair.from_covariance(np.zeros(n), pair.sigma)
        states.append((probs[i], pair))
    return DiscreteMarket(states)


@pytest.fixture
def two_state_market():
    """Two assets, two equally likely states; closed-form values known."""
    with open(SAMPLE_DIR / "two_state_market.json") as fh:
        return DiscreteMarket.from_dict(json.load(fh))


@pytest.fixture
def two_state_market_path():
    return str(SAMPLE_DIR / "two_state_market.json")


@pytest.fixture
def lcem_model_path():
    return str(SAMPLE_DIR / "lcem_model.json")


@pytest.fixture
def hedge_constraints_path():
    return str(SAMPLE_DIR / "hedge_constraints.json")
