"""Weighted fuzzy c-means."""
import itertools

import numpy as np
import pytest

from iminimax_fcm.core import InvalidConfigError, MembershipMatrix, RunConfig
from iminimax_fcm.engines.fcm_engine import (WfcmState, farthest_first_indices, fcm_objective,
                                             membership_from_distances, ofcm_cluster_weights, run_fcm, run_wfcm,
                                             spfcm_cluster_weights, squared_distances, wfcm_update_centroids,
                                             wfcm_update_membership)


def _simplex_grid(k, step):
    ticks = np.round(np.arange(0.0, 1.0 + step / 2, step), 10)
    for head in itertools.product(ticks, repeat=k - 1):
        rest = 1.0 - sum(head)
        if rest >= -1e-12:
            yield np.array(head + (max(rest, 0.0),))


def test_membership_rule_example():
    membership = membership_from_distances(np.array([[1.0], [4.0]]), m=2.0)
    assert membership[:, 0] == pytest.approx([0.8, 0.2])


def test_membership_singularity_rule():
    one = membership_from_distances(np.array([[0.0], [3.0]]), m=2.0)
    assert np.array_equal(one[:, 0], [1.0, 0.0])
    two = membership_from_distances(np.array([[0.0], [0.0], [5.0]]), m=2.0)
    assert np.array_equal(two[:, 0], [0.5, 0.5, 0.0])


def test_membership_symmetric_distances():
    membership = membership_from_distances(np.full((4, 3), 2.5), m=1.7)
    assert np.allclose(membership, 0.25)


@pytest.mark.parametrize("seed", range(5))
def test_membership_beats_simplex_grid(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 4))
    data = rng.normal(size=(int(rng.integers(2, 7)), 2))
    centroids = rng.normal(size=(k, 2))
    distances = squared_distances(data, centroids)
    membership = wfcm_update_membership(data, centroids, m=2.0)

    grid = list(_simplex_grid(k, 0.01))
    for i in range(data.shape[0]):
        best = min(np.sum(u ** 2 * distances[:, i]) for u in grid)
        assert np.sum(membership[:, i] ** 2 * distances[:, i]) <= best + 1e-12


def test_objective_examples():
    state = WfcmState(MembershipMatrix(np.array([[1.0, 1.0]])), np.array([[1.0]]), np.ones(2))
    data = np.array([[0.0], [2.0]])
    assert fcm_objective(state, data, m=2.0) == pytest.approx(2.0)

    doubled = WfcmState(state.membership, state.centroids, 2.0 * np.ones(2))
    assert fcm_objective(doubled, data, m=2.0) == pytest.approx(4.0)

    on_centroids = WfcmState(MembershipMatrix(np.eye(2)), np.array([[0.0], [2.0]]), np.ones(2))
    assert fcm_objective(on_centroids, data, m=2.0) == 0.0


def test_centroid_rule():
    data = np.array([[0.0], [1.0], [4.0], [5.0]])
    uniform = wfcm_update_centroids(data, np.full((2, 4), 0.5), np.ones(4), m=2.0)
    assert uniform[:, 0] == pytest.approx([2.5, 2.5])

    crisp = wfcm_update_centroids(data, np.array([[1, 1, 0, 0], [0, 0, 1, 1]], dtype=float), np.ones(4), m=2.0)
    assert crisp[:, 0] == pytest.approx([0.5, 4.5])

    weighted = wfcm_update_centroids(np.array([[0.0], [1.0]]), np.ones((1, 2)), np.array([1.0, 3.0]), m=2.0)
    assert weighted[0, 0] == pytest.approx(0.75)


def test_empty_cluster_is_reseeded():
    data = np.array([[0.0], [1.0], [10.0]])
    diagnostics = []
    centroids = wfcm_update_centroids(data, np.array([[1.0, 1.0, 1.0], [0.0, 0.0, 0.0]]), np.ones(3), 2.0, diagnostics)
    assert centroids[0, 0] == pytest.approx(11.0 / 3.0)
    assert centroids[1, 0] == 10.0
    assert len(diagnostics) == 1 and "re-seeded" in diagnostics[0]


def test_centroid_rule_zeroes_the_gradient(rng):
    data = rng.normal(size=(30, 2))
    weights = rng.uniform(0.5, 2.0, 30)
    membership = membership_from_distances(squared_distances(data, rng.normal(size=(3, 2))), 2.0)
    centroids = wfcm_update_centroids(data, membership, weights, 2.0)

    def objective(v):
        return float(np.sum(weights * membership ** 2 * squared_distances(data, v)))

    value = objective(centroids)
    step = 1e-4
    for index in np.ndindex(centroids.shape):
        shift = np.zeros_like(centroids)
        shift[index] = step
        gradient = (objective(centroids + shift) - objective(centroids - shift)) / (2 * step)
        assert abs(gradient) <= 1e-6 * (1 + abs(value))


def test_cluster_weight_rules():
    assert spfcm_cluster_weights(np.array([[0.5, 0.5], [0.5, 0.5]]), np.array([2.0, 4.0])) == pytest.approx([3.0, 3.0])
    assert spfcm_cluster_weights(np.eye(2), np.ones(2)) == pytest.approx([1.0, 1.0])
    assert ofcm_cluster_weights(np.array([[0.9, 0.2], [0.1, 0.8]])) == pytest.approx([1.1, 0.9])
    crisp = np.array([[1, 1, 0, 1], [0, 0, 1, 0]], dtype=float)
    assert ofcm_cluster_weights(crisp) == pytest.approx([3.0, 1.0])


def test_cluster_weights_conserve_mass(rng):
    membership = rng.uniform(size=(4, 25))
    membership /= membership.sum(axis=0)
    weights = rng.uniform(0.1, 3.0, 25)
    assert spfcm_cluster_weights(membership, weights).sum() == pytest.approx(weights.sum())
    assert ofcm_cluster_weights(membership).sum() == pytest.approx(25.0)


def test_farthest_first_example():
    assert list(farthest_first_indices(np.array([0.0, 1.0, 10.0]), 2)) == [1, 2]


def test_farthest_first_ties_and_saturation():
    data = np.array([[0.0], [0.0], [5.0]])
    assert list(farthest_first_indices(data, 2)) == [0, 2]
    assert sorted(farthest_first_indices(data, 3)) == [0, 1, 2]
    with pytest.raises(InvalidConfigError):
        farthest_first_indices(data, 4)


def test_farthest_first_blocks_agree(rng):
    data = rng.normal(size=(50, 3))
    assert np.array_equal(farthest_first_indices(data, 5, block_size=7), farthest_first_indices(data, 5))


def test_two_blobs_converge():
    data = np.array([[0.0], [0.1], [10.0], [10.1]])
    state = run_fcm(data, RunConfig(k=2))
    assert sorted(state.centroids[:, 0]) == pytest.approx([0.05, 10.05], abs=0.1)
    assert np.allclose(state.membership.values.sum(axis=0), 1.0, atol=1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_objective_never_increases(seed):
    rng = np.random.default_rng(seed)
    data = rng.normal(size=(60, 2))
    state = run_fcm(data, RunConfig(k=3, epsilon=1e-8), object_weights=rng.uniform(0.5, 2.0, 60))
    trace = np.array(state.objective_trace)
    assert np.all(np.diff(trace) <= 1e-9 * (1 + np.abs(trace[:-1])))
    assert len(state.shift_trace) == state.iterations


def test_fixed_point_stops_after_one_sweep():
    data = np.array([[0.0], [0.1], [10.0], [10.1]])
    config = RunConfig(k=2, epsilon=1e-6)
    converged = run_fcm(data, config)
    again = run_wfcm(data, None, converged.centroids, config)
    assert again.iterations == 1
    assert np.allclose(again.centroids, converged.centroids, atol=1e-6)


def test_iteration_cap_is_reported(rng):
    state = run_fcm(rng.normal(size=(40, 2)), RunConfig(k=3, max_iters=1, epsilon=1e-12))
    assert state.iterations == 1
    assert any("max_iters" in message for message in state.diagnostics)


def test_max_norm_convergence(rng):
    state = run_fcm(rng.normal(size=(40, 2)), RunConfig(k=2, convergence_norm="max"))
    assert state.shift_trace[-1] < 1e-5


def test_run_wfcm_needs_a_start():
    with pytest.raises(InvalidConfigError):
        run_wfcm(np.zeros((3, 1)), None, None, RunConfig(k=2))
    with pytest.raises(InvalidConfigError):
        run_wfcm(np.zeros((2, 1)), None, np.zeros((3, 1)), RunConfig(k=3))
