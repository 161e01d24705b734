# metrics.py

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import linear_sum_assignment
from scipy.special import xlogy
from sklearn.metrics.cluster import contingency_matrix

from iminimax_fcm.core import DataError, InvalidConfigError


@dataclass(frozen=True)
class ContingencyTable:
    """Cluster x class overlap counts n_c^p."""

    counts: np.ndarray
    cluster_ids: np.ndarray
    class_ids: np.ndarray

    @property
    def cluster_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def class_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def contingency(labels: Sequence[int], truth: Sequence[int]) -> ContingencyTable:
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    if labels.shape != truth.shape or labels.ndim != 1:
        raise DataError(f"Label vectors must have equal length, got {labels.shape} and {truth.shape}")
    if labels.size == 0:
        raise DataError("Cannot compare empty label vectors")

    # sklearn puts its first argument on the rows
    counts = contingency_matrix(labels, truth)
    return ContingencyTable(np.asarray(counts, dtype=np.int64), np.unique(labels), np.unique(truth))


def match_clusters(weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Maximum-weight one-to-one matching between the rows and columns of `weights`.
    Rectangular inputs leave the surplus rows or columns unmatched.

    Returns:
        (rows, cols): row rows[i] is matched to column cols[i].
    """
    return linear_sum_assignment(np.asarray(weights, dtype=float), maximize=True)


def accuracy(labels: Sequence[int], truth: Sequence[int]) -> float:
    table = contingency(labels, truth)
    rows, cols = match_clusters(table.counts)
    return float(table.counts[rows, cols].sum() / table.total)


def nmi(labels: Sequence[int], truth: Sequence[int]) -> float:
    """
    Normalized mutual information with the geometric-mean normalization
    sqrt(H(clusters) * H(classes)). A single-cluster partition on either side
    makes the denominator vanish; the result is then 0.
    """
    table = contingency(labels, truth)
    counts = table.counts.astype(float)
    n = float(table.total)
    cluster_sizes = counts.sum(axis=1)
    class_sizes = counts.sum(axis=0)

    if cluster_sizes.size < 2 or class_sizes.size < 2:
        logger.warning("NMI is undefined for a single-cluster partition, reporting 0")
        return 0.0

    expected = np.outer(cluster_sizes, class_sizes)
    mutual = float(np.sum(xlogy(counts, n * counts / expected)))
    cluster_entropy = float(np.sum(xlogy(cluster_sizes, cluster_sizes / n)))
    class_entropy = float(np.sum(xlogy(class_sizes, class_sizes / n)))
    value = mutual / np.sqrt(cluster_entropy * class_entropy)
    return float(np.clip(value, 0.0, 1.0))


def pair_f_measure(overlap: float, cluster_size: float, class_size: float) -> float:
    """F of one cluster/class pair: harmonic mean of precision overlap/cluster_size and recall overlap/class_size."""
    if overlap <= 0 or cluster_size <= 0 or class_size <= 0:
        return 0.0
    precision = overlap / cluster_size
    recall = overlap / class_size
    return 2.0 * precision * recall / (precision + recall)


def f_measure(labels: Sequence[int], truth: Sequence[int]) -> float:
    """Class-size weighted sum over classes of the best pair F over clusters."""
    table = contingency(labels, truth)
    counts = table.counts.astype(float)
    cluster_sizes = counts.sum(axis=1)
    class_sizes = counts.sum(axis=0)

    # 2PR/(P+R) simplifies to 2 n_cp / (n_c + n_p)
    pair_scores = 2.0 * counts / (cluster_sizes[:, None] + class_sizes[None, :])
    best = pair_scores.max(axis=0)
    return float(np.sum(class_sizes / table.total * best))


def aggregate_trials(values: Sequence[float], population: bool = True) -> Tuple[float, float]:
    """Mean and standard deviation; `population=False` switches to the n-1 divisor."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InvalidConfigError("aggregate_trials needs at least one value")
    if not population and values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=0 if population else 1))
