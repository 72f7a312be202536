from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from constrained_coreset.metric import MetricSpace, WeightedPointSet

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def line(*xs, weights=None) -> WeightedPointSet:
    space = MetricSpace.euclidean(np.asarray(xs, dtype=float).reshape(-1, 1))
    if weights is None:
        return WeightedPointSet.unit(space)
    return WeightedPointSet(space, np.arange(len(xs)), np.asarray(weights, dtype=float))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
