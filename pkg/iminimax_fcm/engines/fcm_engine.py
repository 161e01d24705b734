from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from loguru import logger
from scipy.spatial.distance import cdist

from iminimax_fcm.core import InvalidConfigError, MembershipMatrix, RunConfig, as_matrix
from .base_engine import BaseEngine

# Squared distances below this count as "object sits on the centroid"
COINCIDENCE_TOL = 1e-12
# Cluster mass below this counts as an empty cluster
EMPTY_CLUSTER_TOL = 1e-12


@dataclass(frozen=True)
class WfcmState:
    membership: MembershipMatrix
    centroids: np.ndarray
    object_weights: np.ndarray
    iterations: int = 0
    objective_trace: List[float] = field(default_factory=list)
    shift_trace: List[float] = field(default_factory=list)
    drift_trace: List[float] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)


def squared_distances(data: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """K x N matrix of ||x_i - v_c||^2."""
    return cdist(as_matrix(centroids), as_matrix(data), "sqeuclidean")


def membership_from_distances(distances: np.ndarray, m: float) -> np.ndarray:
    """
    Fuzzy c-means membership rule on a K x N matrix of (aggregated) squared distances:
    u_ci = 1 / sum_j (d_ci / d_ji)^(1/(m-1)).

    A column with one or more coincident centroids (d < 1e-12) splits its
    membership uniformly over those centroids and gives 0 elsewhere.
    """
    distances = np.asarray(distances, dtype=float)
    coincident = distances < COINCIDENCE_TOL
    singular = coincident.any(axis=0)

    membership = np.empty_like(distances)
    regular = ~singular
    if regular.any():
        d = distances[:, regular]
        # Ratios to the column minimum are >= 1, so the negative power stays in (0, 1]
        inverse = (d / d.min(axis=0)) ** (-1.0 / (m - 1.0))
        membership[:, regular] = inverse / inverse.sum(axis=0)
    if singular.any():
        hits = coincident[:, singular].astype(float)
        membership[:, singular] = hits / hits.sum(axis=0)
    return membership


def fcm_objective(state: WfcmState, data: np.ndarray, m: float) -> float:
    """sum_c sum_i w_i u_ci^m ||x_i - v_c||^2"""
    distances = squared_distances(data, state.centroids)
    return float(np.sum(state.object_weights * state.membership.values ** m * distances))


def wfcm_update_membership(data: np.ndarray, centroids: np.ndarray, m: float) -> np.ndarray:
    # Object weights cancel in this update
    return membership_from_distances(squared_distances(data, centroids), m)


def wfcm_update_centroids(data: np.ndarray, membership: np.ndarray, object_weights: np.ndarray,
                          m: float, diagnostics: Optional[List[str]] = None) -> np.ndarray:
    """
    Weighted centroid rule v_c = sum_i w_i u_ci^m x_i / sum_i w_i u_ci^m.

    An empty cluster (mass < 1e-12) is re-seeded at the object farthest from
    its nearest non-empty centroid; the event is logged and appended to `diagnostics`.
    """
    data = as_matrix(data)
    weighted = np.asarray(membership, dtype=float) ** m * np.asarray(object_weights, dtype=float)
    mass = weighted.sum(axis=1)
    empty = mass < EMPTY_CLUSTER_TOL

    centroids = np.zeros((weighted.shape[0], data.shape[1]))
    centroids[~empty] = (weighted[~empty] @ data) / mass[~empty, None]

    if empty.any():
        nearest = cdist(data, centroids[~empty], "sqeuclidean").min(axis=1)
        for cluster in np.flatnonzero(empty):
            farthest = int(np.argmax(nearest))
            centroids[cluster] = data[farthest]
            nearest = np.minimum(nearest, ((data - data[farthest]) ** 2).sum(axis=1))
            message = f"empty cluster {cluster} re-seeded at object {farthest}"
            logger.warning(message)
            if diagnostics is not None:
                diagnostics.append(message)

    return centroids


def spfcm_cluster_weights(membership: np.ndarray, object_weights: np.ndarray) -> np.ndarray:
    """w_c = sum_i u_ci w_i over the chunk objects plus the carried centroids."""
    return np.asarray(membership) @ np.asarray(object_weights, dtype=float)


def ofcm_cluster_weights(membership: np.ndarray) -> np.ndarray:
    """w_c = sum_i u_ci, every chunk object weighing 1."""
    return np.asarray(membership).sum(axis=1)


def farthest_first_indices(data: np.ndarray, k: int, block_size: int = 2048) -> np.ndarray:
    """
    Picks k object indices: first the object with the smallest total Euclidean
    distance to all others, then repeatedly the not-yet-chosen object whose
    distance to its nearest chosen object is largest. Ties go to the lowest index.
    """
    data = as_matrix(data)
    n_objects = data.shape[0]
    if not 1 <= k <= n_objects:
        raise InvalidConfigError(f"Cannot pick {k} centroids from {n_objects} objects")

    totals = np.empty(n_objects)
    for start in range(0, n_objects, block_size):
        totals[start:start + block_size] = cdist(data[start:start + block_size], data).sum(axis=1)

    chosen = [int(np.argmin(totals))]
    nearest = cdist(data[chosen], data)[0]
    nearest[chosen] = -1.0
    while len(chosen) < k:
        pick = int(np.argmax(nearest))
        chosen.append(pick)
        nearest = np.minimum(nearest, cdist(data[pick:pick + 1], data)[0])
        nearest[chosen] = -1.0
    return np.array(chosen)


class FcmEngine(BaseEngine):

    def __init__(self, data: np.ndarray, object_weights: np.ndarray, config: RunConfig):
        self.data = as_matrix(data)
        self.object_weights = np.asarray(object_weights, dtype=float)
        self.config = config
        self.centroids: Optional[np.ndarray] = None

    def post_init(self):
        self.engine_name = "wfcm"

    def update_centroids(self):
        self.centroids = wfcm_update_centroids(self.data, self.membership, self.object_weights,
                                               self.config.m, self.diagnostics)

    def update_membership(self):
        return wfcm_update_membership(self.data, self.centroids, self.config.m)

    def objective(self):
        distances = squared_distances(self.data, self.centroids)
        return float(np.sum(self.object_weights * self.membership ** self.config.m * distances))

    def state(self) -> WfcmState:
        return WfcmState(
            membership=MembershipMatrix(self.membership),
            centroids=self.centroids,
            object_weights=self.object_weights,
            iterations=self.iterations,
            objective_trace=list(self.objective_trace),
            shift_trace=list(self.shift_trace),
            drift_trace=list(self.drift_trace),
            diagnostics=list(self.diagnostics),
        )


def run_wfcm(data: np.ndarray, object_weights: Optional[np.ndarray], init_centroids: Optional[np.ndarray],
             config: RunConfig, init_membership: Optional[np.ndarray] = None) -> WfcmState:
    """
    Weighted fuzzy c-means from either initial centroids or an initial membership.

    With initial centroids the starting membership is the one they imply, so a
    run started on a fixed point stops after one sweep.
    """
    data = as_matrix(data)
    if object_weights is None:
        object_weights = np.ones(data.shape[0])

    if init_membership is None:
        if init_centroids is None:
            raise InvalidConfigError("run_wfcm needs init_centroids or init_membership")
        init_centroids = as_matrix(init_centroids)
        if init_centroids.shape[0] > data.shape[0]:
            raise InvalidConfigError(f"k={init_centroids.shape[0]} exceeds the {data.shape[0]} objects to cluster")
        init_membership = wfcm_update_membership(data, init_centroids, config.m)

    engine = FcmEngine(data, object_weights, config)
    engine.run(init_membership)
    return engine.state()


def run_fcm(data: np.ndarray, config: RunConfig, object_weights: Optional[np.ndarray] = None) -> WfcmState:
    """Fuzzy c-means started from farthest-first centroids."""
    data = as_matrix(data)
    init_centroids = data[farthest_first_indices(data, config.k)]
    return run_wfcm(data, object_weights, init_centroids, config)
