import itertools

import numpy as np
import pytest

from iminimax_fcm.core import DataError, InvalidConfigError
from iminimax_fcm.metrics import (accuracy, aggregate_trials, contingency, f_measure, match_clusters, nmi,
                                  pair_f_measure)

LABELS = [1, 1, 2, 2, 2]
TRUTH = [1, 1, 1, 2, 2]


def test_contingency_table():
    table = contingency(LABELS, TRUTH)
    assert table.counts.tolist() == [[2, 0], [1, 2]]
    assert table.cluster_sizes.tolist() == [2, 3]
    assert table.class_sizes.tolist() == [3, 2]
    assert table.total == 5


def test_length_mismatch():
    for metric in (accuracy, nmi, f_measure):
        with pytest.raises(DataError):
            metric([1, 2, 1], [1, 2])


def test_identical_partitions_score_one():
    labels = [1, 2, 3, 3, 2, 1, 1]
    assert accuracy(labels, labels) == 1.0
    assert nmi(labels, labels) == pytest.approx(1.0)
    assert f_measure(labels, labels) == pytest.approx(1.0)


def test_accuracy_example():
    assert accuracy(LABELS, TRUTH) == pytest.approx(0.8)


def test_scores_ignore_cluster_names(rng):
    truth = rng.integers(1, 5, 60)
    labels = rng.integers(1, 5, 60)
    renamed = np.array([4, 3, 1, 2])[labels - 1]
    for metric in (accuracy, nmi, f_measure):
        assert metric(renamed, truth) == pytest.approx(metric(labels, truth), abs=1e-12)


def _best_matching(counts):
    n_rows, n_cols = counts.shape
    if n_rows <= n_cols:
        return max(sum(counts[i, cols[i]] for i in range(n_rows))
                   for cols in itertools.permutations(range(n_cols), n_rows))
    return max(sum(counts[rows[j], j] for j in range(n_cols))
               for rows in itertools.permutations(range(n_rows), n_cols))


@pytest.mark.parametrize("seed", range(100))
def test_matching_agrees_with_brute_force(seed):
    rng = np.random.default_rng(seed)
    counts = rng.integers(0, 20, (int(rng.integers(1, 7)), int(rng.integers(1, 7))))
    rows, cols = match_clusters(counts)
    assert len(set(rows)) == len(rows) and len(set(cols)) == len(cols)
    assert counts[rows, cols].sum() == _best_matching(counts)


def test_rectangular_matching_leaves_surplus_unmatched():
    counts = np.array([[5, 0], [0, 4], [1, 1]])
    rows, cols = match_clusters(counts)
    assert len(rows) == 2
    assert counts[rows, cols].sum() == 9
    assert accuracy([1, 1, 2, 3], [1, 1, 2, 2]) == pytest.approx(0.75)


def test_nmi_examples():
    assert nmi([1, 1, 2, 2], [1, 2, 1, 2]) == pytest.approx(0.0, abs=1e-12)
    assert nmi(LABELS, TRUTH) == pytest.approx(0.4325, abs=1e-4)


def test_nmi_is_symmetric(rng):
    a = rng.integers(1, 4, 40)
    b = rng.integers(1, 6, 40)
    assert nmi(a, b) == pytest.approx(nmi(b, a), abs=1e-12)
    assert 0.0 <= nmi(a, b) <= 1.0


def test_nmi_single_cluster_is_zero():
    assert nmi([1, 1, 1, 1], [1, 1, 2, 2]) == 0.0
    assert nmi([1, 2, 1, 2], [3, 3, 3, 3]) == 0.0


def test_f_measure_examples():
    assert pair_f_measure(3, 4, 5) == pytest.approx(2.0 / 3.0, abs=1e-9)
    assert pair_f_measure(0, 4, 5) == 0.0
    assert f_measure([1, 1, 2, 2], [1, 2, 1, 2]) == pytest.approx(0.5)


def test_f_measure_matches_pair_scores(rng):
    labels = rng.integers(1, 4, 30)
    truth = rng.integers(1, 4, 30)
    table = contingency(labels, truth)
    expected = sum(
        table.class_sizes[p] / table.total
        * max(pair_f_measure(table.counts[c, p], table.cluster_sizes[c], table.class_sizes[p])
              for c in range(table.counts.shape[0]))
        for p in range(table.counts.shape[1])
    )
    assert f_measure(labels, truth) == pytest.approx(expected, abs=1e-12)


def test_aggregate_trials():
    assert aggregate_trials([0.5]) == (0.5, 0.0)
    assert aggregate_trials([0.0, 1.0]) == pytest.approx((0.5, 0.5))
    assert aggregate_trials([0.3, 0.3, 0.3])[1] == pytest.approx(0.0, abs=1e-15)
    assert aggregate_trials([0.0, 1.0], population=False) == pytest.approx((0.5, 0.7071), abs=1e-4)
    assert aggregate_trials([0.7], population=False) == (0.7, 0.0)
    with pytest.raises(InvalidConfigError):
        aggregate_trials([])
