"""Domain types, chunking and normalization."""
import numpy as np
import pytest
from pydantic import ValidationError

from iminimax_fcm.core import (CentroidSet, DataError, InvalidConfigError, MembershipMatrix, MultiViewDataset,
                               NumericalError, RunConfig, ViewWeights, partition_into_chunks, zscore_normalize)


def _dataset(n_objects, dims=(2, 3), seed=0):
    rng = np.random.default_rng(seed)
    return MultiViewDataset(tuple(rng.normal(size=(n_objects, dim)) for dim in dims))


@pytest.mark.parametrize("n_objects, fraction, sizes", [
    (10, 0.25, [2, 2, 2, 2, 2]),
    (10, 0.3, [3, 3, 3, 1]),
    (5, 1.0, [5]),
])
def test_chunk_sizes(n_objects, fraction, sizes):
    chunks = partition_into_chunks(_dataset(n_objects), fraction, seed=7)
    assert [chunk.size for chunk in chunks] == sizes
    assert all(np.all(chunk.object_weights == 1.0) for chunk in chunks)


@pytest.mark.parametrize("seed", range(5))
def test_chunks_cover_every_object_once(seed):
    data = _dataset(37)
    chunks = partition_into_chunks(data, 0.2, seed)
    origin = np.concatenate([chunk.origin_indices for chunk in chunks])
    assert np.array_equal(np.sort(origin), np.arange(37))
    for chunk in chunks:
        for p, view in enumerate(chunk.dataset.views):
            assert np.array_equal(view, data.views[p][chunk.origin_indices])


def test_chunk_order_follows_seed():
    data = _dataset(20)
    first = partition_into_chunks(data, 0.5, seed=1)
    again = partition_into_chunks(data, 0.5, seed=1)
    other = partition_into_chunks(data, 0.5, seed=2)
    assert np.array_equal(first[0].origin_indices, again[0].origin_indices)
    assert not np.array_equal(first[0].origin_indices, other[0].origin_indices)


@pytest.mark.parametrize("fraction", [0.1, 0.0, 1.5])
def test_bad_chunk_fraction(fraction):
    with pytest.raises(InvalidConfigError):
        partition_into_chunks(_dataset(3), fraction, seed=0)


def test_zscore_columns():
    data = MultiViewDataset((np.array([[1.0, 0.0], [1.0, 2.0]]),))
    scaled = zscore_normalize(data).views[0]
    assert np.array_equal(scaled[:, 0], [0.0, 0.0])
    assert scaled[:, 1] == pytest.approx([-1.0, 1.0])


def test_zscore_is_idempotent():
    once = zscore_normalize(_dataset(50))
    twice = zscore_normalize(once)
    for a, b in zip(once.views, twice.views):
        assert np.allclose(a, b, atol=1e-12)
        assert np.allclose(a.mean(axis=0), 0.0, atol=1e-12)
        assert np.allclose(a.std(axis=0), 1.0)


def test_zscore_needs_two_objects():
    with pytest.raises(InvalidConfigError):
        zscore_normalize(_dataset(1))


def test_dataset_validation():
    with pytest.raises(DataError, match="object count"):
        MultiViewDataset((np.zeros((3, 2)), np.zeros((4, 2))))
    with pytest.raises(DataError, match="non-finite"):
        MultiViewDataset((np.array([[0.0], [np.nan]]),))
    with pytest.raises(DataError):
        MultiViewDataset(())
    with pytest.raises(DataError):
        MultiViewDataset((np.zeros((3, 2)),), labels=np.array([1, 2]))


def test_dataset_shapes_and_immutability():
    data = MultiViewDataset((np.arange(4.0), np.zeros((4, 3))), labels=[1, 1, 2, 2])
    assert data.n_objects == 4
    assert data.n_views == 2
    assert data.view_dims == (1, 3)
    assert data.concatenated().shape == (4, 4)
    with pytest.raises(ValueError):
        data.views[0][0, 0] = 5.0


def test_membership_matrix_checks():
    membership = MembershipMatrix(np.array([[0.2, 1.0, 0.5], [0.8, 0.0, 0.5]]))
    assert membership.n_clusters == 2
    assert membership.n_objects == 3
    assert list(membership.crisp()) == [2, 1, 1]
    with pytest.raises(NumericalError):
        MembershipMatrix(np.array([[0.5], [0.6]]))
    with pytest.raises(NumericalError):
        MembershipMatrix(np.array([[-0.1], [1.1]]))


def test_view_weights_checks():
    assert ViewWeights.uniform(4, 0.5).alpha == pytest.approx([0.25] * 4)
    with pytest.raises(NumericalError):
        ViewWeights(np.array([0.3, 0.3]), 0.5)
    with pytest.raises(InvalidConfigError):
        ViewWeights(np.array([0.5, 0.5]), 1.0)


def test_centroid_set_checks():
    centroids = CentroidSet((np.zeros((2, 3)), np.ones(2)), weights=np.array([1.0, 2.0]))
    assert centroids.n_clusters == 2
    assert centroids.per_view[1].shape == (2, 1)
    with pytest.raises(DataError):
        CentroidSet((np.zeros((2, 3)), np.zeros((3, 3))))
    with pytest.raises(DataError):
        CentroidSet((np.zeros((2, 3)),), weights=np.array([1.0, 0.0]))


def test_run_config_constraints():
    config = RunConfig(k=3)
    assert config.m == 2.0 and config.gamma == 0.5 and config.max_iters == 300
    for bad in ({"m": 1.0}, {"gamma": 1.0}, {"gamma": -0.1}, {"epsilon": 0.0}, {"chunk_fraction": 0.0}, {"k": 0}):
        with pytest.raises(ValidationError):
            RunConfig(k=bad.pop("k", 3), **bad)
    with pytest.raises(InvalidConfigError):
        config.check_against(2)
