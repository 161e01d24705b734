import numpy as np
import pytest

from iminimax_fcm.core import MultiViewDataset
from iminimax_fcm.datagen import SyntheticSpec, generate


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def blobs() -> MultiViewDataset:
    """Three well separated clusters seen through two informative views."""
    return generate(SyntheticSpec(k=3, per_cluster_n=100, view_dims=[2, 3], separation=10.0, spread=0.5, seed=3))


@pytest.fixture
def tiny_blobs() -> MultiViewDataset:
    """Two clusters of four points in each of two views."""
    view1 = np.array([[0.0, 0.0], [0.2, 0.1], [0.1, 0.3], [0.3, 0.2],
                      [5.0, 5.0], [5.2, 5.1], [5.1, 5.3], [5.3, 5.2]])
    view2 = np.array([[1.0], [1.1], [0.9], [1.2], [-4.0], [-4.1], [-3.9], [-4.2]])
    return MultiViewDataset((view1, view2), np.array([1, 1, 1, 1, 2, 2, 2, 2]))
