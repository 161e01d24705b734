from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.spatial.distance import cdist

from iminimax_fcm.core import (CentroidSet, DataError, DegenerateGammaError, MembershipMatrix, MultiViewDataset,
                               NumericalError, RunConfig, ViewWeights, as_matrix)
from iminimax_fcm.metrics import match_clusters
from .base_engine import BaseEngine
from .fcm_engine import (EMPTY_CLUSTER_TOL, farthest_first_indices, membership_from_distances, run_fcm,
                         squared_distances, wfcm_update_centroids)

# Per-view costs are floored here before the weight update
COST_FLOOR = 1e-12

Views = Union[MultiViewDataset, CentroidSet, Sequence[np.ndarray]]


def _views(source: Views) -> Tuple[np.ndarray, ...]:
    if isinstance(source, MultiViewDataset):
        return source.views
    if isinstance(source, CentroidSet):
        return source.per_view
    return tuple(as_matrix(view) for view in source)


def _values(membership) -> np.ndarray:
    if isinstance(membership, MembershipMatrix):
        return membership.values
    return np.asarray(membership, dtype=float)


@dataclass(frozen=True)
class MinimaxState:
    consensus_membership: MembershipMatrix
    centroids: CentroidSet
    view_weights: ViewWeights
    per_view_cost: np.ndarray
    iterations: int = 0
    objective_trace: List[float] = field(default_factory=list)
    shift_trace: List[float] = field(default_factory=list)
    drift_trace: List[float] = field(default_factory=list)
    alpha_trace: List[np.ndarray] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)

    def __post_init__(self):
        if np.any(np.asarray(self.per_view_cost) < 0):
            raise NumericalError("per_view_cost entries must be non-negative")


def aggregated_distances(data: Views, centroids: Views, view_weights: ViewWeights) -> np.ndarray:
    """K x N matrix D_ci = sum_p alpha_p^gamma ||x_i^p - v_c^p||^2."""
    scale = view_weights.alpha ** view_weights.gamma
    total = None
    for factor, view, view_centroids in zip(scale, _views(data), _views(centroids)):
        term = factor * squared_distances(view, view_centroids)
        total = term if total is None else total + term
    return total


def view_cost(data_view: np.ndarray, consensus_membership, centroids_view: np.ndarray, m: float,
              object_weights: Optional[np.ndarray] = None) -> float:
    """Q_p = sum_c sum_i w_i (u*_ci)^m ||x_i^p - v_c^p||^2, with w_i = 1 unless weights are given."""
    weighted = _values(consensus_membership) ** m
    if object_weights is not None:
        weighted = weighted * np.asarray(object_weights, dtype=float)
    return float(np.sum(weighted * squared_distances(data_view, centroids_view)))


def minimax_objective(state: MinimaxState, data: Views, m: float,
                      object_weights: Optional[np.ndarray] = None) -> float:
    """sum_p alpha_p^gamma Q_p at the state's membership and centroids."""
    costs = np.array([
        view_cost(view, state.consensus_membership, view_centroids, m, object_weights)
        for view, view_centroids in zip(_views(data), state.centroids.per_view)
    ])
    weights = state.view_weights
    return float(np.sum(weights.alpha ** weights.gamma * costs))


def update_consensus_membership(data: Views, centroids: Views, view_weights: ViewWeights, m: float) -> np.ndarray:
    return membership_from_distances(aggregated_distances(data, centroids, view_weights), m)


def update_view_centroids(data_view: np.ndarray, consensus_membership, m: float,
                          object_weights: Optional[np.ndarray] = None,
                          diagnostics: Optional[List[str]] = None) -> np.ndarray:
    """Per-view centroid rule; alpha cancels, leaving the standard (weighted) FCM update."""
    data_view = as_matrix(data_view)
    if object_weights is None:
        object_weights = np.ones(data_view.shape[0])
    return wfcm_update_centroids(data_view, _values(consensus_membership), object_weights, m, diagnostics)


def update_view_weights(per_view_cost: Sequence[float], gamma: float) -> ViewWeights:
    """
    Maximizes sum_p alpha_p^gamma Q_p over the simplex.

    The optimum is alpha_p proportional to Q_p^(1/(1-gamma)), so costlier views
    get larger weights. Computed in log space to stay finite for extreme costs.
    """
    if gamma == 0:
        raise DegenerateGammaError("gamma=0 makes the objective independent of the view weights")
    costs = np.maximum(np.asarray(per_view_cost, dtype=float), COST_FLOOR)
    log_alpha = np.log(costs) / (1.0 - gamma)
    alpha = np.exp(log_alpha - log_alpha.max())
    return ViewWeights(alpha / alpha.sum(), gamma)


def _update_all_view_centroids(views: Tuple[np.ndarray, ...], membership: np.ndarray, object_weights: np.ndarray,
                               m: float, diagnostics: List[str]) -> Tuple[np.ndarray, ...]:
    mass = (membership ** m * object_weights).sum(axis=1)
    empty = mass < EMPTY_CLUSTER_TOL
    if not empty.any():
        return tuple(update_view_centroids(view, membership, m, object_weights) for view in views)

    # Re-seed every view of an empty cluster at the same object so the views stay paired
    centroids = []
    for view in views:
        view_centroids = np.zeros((membership.shape[0], view.shape[1]))
        view_centroids[~empty] = update_view_centroids(view, membership[~empty], m, object_weights)
        centroids.append(view_centroids)

    nearest = sum(cdist(view, view_centroids[~empty]) for view, view_centroids in zip(views, centroids)).min(axis=1)
    for cluster in np.flatnonzero(empty):
        farthest = int(np.argmax(nearest))
        for view, view_centroids in zip(views, centroids):
            view_centroids[cluster] = view[farthest]
        nearest = np.minimum(nearest, sum(np.linalg.norm(view - view[farthest], axis=1) for view in views))
        message = f"empty cluster {cluster} re-seeded at object {farthest}"
        logger.warning(message)
        diagnostics.append(message)
    return tuple(centroids)


class MinimaxEngine(BaseEngine):

    def __init__(self, views: Sequence[np.ndarray], object_weights: np.ndarray, config: RunConfig):
        self.views = tuple(as_matrix(view) for view in views)
        self.object_weights = np.asarray(object_weights, dtype=float)
        self.config = config
        self.centroids: Tuple[np.ndarray, ...] = ()
        self.view_weights = ViewWeights.uniform(len(self.views), config.gamma)
        self.per_view_cost = np.zeros(len(self.views))

    def post_init(self):
        self.engine_name = "minimax"
        self.alpha_trace: List[np.ndarray] = []

    def update_centroids(self):
        self.centroids = _update_all_view_centroids(self.views, self.membership, self.object_weights,
                                                    self.config.m, self.diagnostics)

    def update_membership(self):
        return update_consensus_membership(self.views, self.centroids, self.view_weights, self.config.m)

    def update_weights(self, membership):
        self.per_view_cost = np.array([
            view_cost(view, membership, view_centroids, self.config.m, self.object_weights)
            for view, view_centroids in zip(self.views, self.centroids)
        ])
        self.view_weights = update_view_weights(self.per_view_cost, self.config.gamma)
        self.alpha_trace.append(self.view_weights.alpha.copy())

    def objective(self):
        weights = self.view_weights
        return float(np.sum(weights.alpha ** weights.gamma * self.per_view_cost))

    def state(self) -> MinimaxState:
        return MinimaxState(
            consensus_membership=MembershipMatrix(self.membership),
            centroids=CentroidSet(self.centroids),
            view_weights=self.view_weights,
            per_view_cost=self.per_view_cost.copy(),
            iterations=self.iterations,
            objective_trace=list(self.objective_trace),
            shift_trace=list(self.shift_trace),
            drift_trace=list(self.drift_trace),
            alpha_trace=list(self.alpha_trace),
            diagnostics=list(self.diagnostics),
        )


def run_minimax(data: Views, init_membership, config: RunConfig,
                object_weights: Optional[np.ndarray] = None) -> MinimaxState:
    """
    Alternates centroid, consensus membership and view weight updates, in that
    order, starting from `init_membership` with uniform view weights.
    """
    if config.gamma == 0:
        raise DegenerateGammaError("gamma=0 makes the objective independent of the view weights")

    views = _views(data)
    init_membership = _values(init_membership)
    n_objects = views[0].shape[0]
    if init_membership.shape != (config.k, n_objects):
        raise DataError(f"init_membership must be {config.k} x {n_objects}, got {init_membership.shape}")
    config.check_against(n_objects)
    if object_weights is None:
        object_weights = np.ones(n_objects)

    engine = MinimaxEngine(views, object_weights, config)
    engine.run(init_membership)
    logger.debug(f"[minimax] finished after {engine.iterations} iterations, alpha={np.round(engine.view_weights.alpha, 4)}")
    return engine.state()


def _nearest_labels(view: np.ndarray, view_centroids: np.ndarray) -> np.ndarray:
    return np.argmin(cdist(view_centroids, view), axis=0)


def _overlap(rows: np.ndarray, cols: np.ndarray, k: int) -> np.ndarray:
    counts = np.zeros((k, k))
    np.add.at(counts, (rows, cols), 1.0)
    return counts


def _finish_consensus(total: np.ndarray) -> MembershipMatrix:
    mass = total.sum(axis=0)
    filled = mass > 0
    consensus = np.full_like(total, 1.0 / total.shape[0])
    consensus[:, filled] = total[:, filled] / mass[filled]
    return MembershipMatrix(consensus)


def init_farthest_first(data: Views, k: int) -> MembershipMatrix:
    """
    Crisp per-view start: in each view the farthest-first objects get membership 1
    in their own cluster. Views are aligned to view 1 through the partitions their
    picks induce, averaged, and every column without mass is set to 1/k.
    """
    views = _views(data)
    n_objects = views[0].shape[0]
    total = np.zeros((k, n_objects))
    reference = None

    for view in views:
        picks = farthest_first_indices(view, k)
        labels = _nearest_labels(view, view[picks])
        order = np.arange(k)
        if reference is None:
            reference = labels
        else:
            _, order = match_clusters(_overlap(reference, labels, k))
        crisp = np.zeros((k, n_objects))
        crisp[np.arange(k), picks[order]] = 1.0
        total += crisp

    return _finish_consensus(total / len(views))


def init_fcm_consensus(data: Views, config: RunConfig) -> MembershipMatrix:
    """Average of per-view FCM memberships after matching every view's clusters to view 1's."""
    views = _views(data)
    reference = None
    total = None

    for view in views:
        membership = run_fcm(view, config).membership.values
        if reference is None:
            reference = membership
            total = membership.copy()
            continue
        _, order = match_clusters(reference @ membership.T)
        total += membership[order]

    return _finish_consensus(total / len(views))
