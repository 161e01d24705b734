# pipelines.py

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from loguru import logger
from scipy.spatial.distance import cdist

from iminimax_fcm.core import (Algorithm, CentroidSet, Chunk, ClusterResult, DataError, InvalidConfigError,
                               MembershipMatrix, MultiViewDataset, RunConfig, ViewWeights, as_matrix,
                               partition_into_chunks, zscore_normalize)
from iminimax_fcm.engines.fcm_engine import (EMPTY_CLUSTER_TOL, ofcm_cluster_weights, run_fcm, run_wfcm,
                                             spfcm_cluster_weights, wfcm_update_membership)
from iminimax_fcm.engines.minimax_engine import (MinimaxState, init_farthest_first, init_fcm_consensus,
                                                 run_minimax, update_consensus_membership)
from iminimax_fcm.metrics import match_clusters

T = TypeVar("T")
R = TypeVar("R")


class Initialization(str, Enum):
    FARTHEST_FIRST = "FarthestFirst"
    FCM_CONSENSUS = "FcmConsensus"


@dataclass(frozen=True)
class CentroidPool:
    """Every chunk's multi-view centroids stacked in chunk order."""

    per_view: Tuple[np.ndarray, ...]
    chunk_of_origin: np.ndarray
    per_centroid_weights: Optional[np.ndarray] = None

    def __post_init__(self):
        per_view = tuple(as_matrix(view) for view in self.per_view)
        rows = {view.shape[0] for view in per_view}
        if len(rows) != 1:
            raise DataError(f"Pooled centroid counts disagree across views: {sorted(rows)}")
        if self.chunk_of_origin.shape != (per_view[0].shape[0],):
            raise DataError("chunk_of_origin must name a chunk for every pooled centroid")
        if self.per_centroid_weights is not None and self.per_centroid_weights.shape != self.chunk_of_origin.shape:
            raise DataError("per_centroid_weights must hold one weight per pooled centroid")
        object.__setattr__(self, "per_view", per_view)

    @classmethod
    def from_chunks(cls, centroid_sets: Sequence[CentroidSet]) -> "CentroidPool":
        n_views = len(centroid_sets[0].per_view)
        per_view = tuple(np.vstack([centroids.per_view[p] for centroids in centroid_sets]) for p in range(n_views))
        origin = np.concatenate([np.full(centroids.n_clusters, index) for index, centroids in enumerate(centroid_sets)])
        weights = None
        if all(centroids.weights is not None for centroids in centroid_sets):
            weights = np.concatenate([centroids.weights for centroids in centroid_sets])
        return cls(per_view, origin, weights)

    @property
    def size(self) -> int:
        return self.per_view[0].shape[0]


def _map_chunks(function: Callable[[T], R], items: Sequence[T], n_workers: int) -> List[R]:
    # executor.map yields results in submission order, so scheduling never reorders chunks
    if n_workers <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(n_workers, len(items))) as executor:
        return list(executor.map(function, items))


def _chunks(data: MultiViewDataset, config: RunConfig, merge_remainder: bool,
            diagnostics: List[str]) -> List[Chunk]:
    config.check_against(data.n_objects)
    chunks = partition_into_chunks(data, config.chunk_fraction, config.seed)
    if chunks[0].size < config.k:
        raise InvalidConfigError(f"Chunk size {chunks[0].size} is smaller than k={config.k}; "
                                 f"raise chunk_fraction above {config.chunk_fraction}")

    if merge_remainder and len(chunks) > 1 and chunks[-1].size < config.k:
        tail = chunks.pop()
        head = chunks.pop()
        origin = np.concatenate([head.origin_indices, tail.origin_indices])
        chunks.append(Chunk(data.subset(origin), np.ones(origin.size), origin))
        message = f"last chunk of {tail.size} objects (< k={config.k}) merged into its predecessor"
        logger.info(message)
        diagnostics.append(message)
    return chunks


def assign_labels(data: MultiViewDataset, centroids: CentroidSet) -> np.ndarray:
    """1-based label of the cluster with the smallest summed (unsquared) distance across views."""
    total = sum(cdist(as_matrix(view), view_centroids) for view, view_centroids in zip(data.views, centroids.per_view))
    # argmin returns the first minimum, so ties go to the lowest cluster index
    return np.argmin(total, axis=1) + 1


def _single_view(data) -> MultiViewDataset:
    if isinstance(data, MultiViewDataset):
        if data.n_views != 1:
            return MultiViewDataset((data.concatenated(),), data.labels)
        return data
    return MultiViewDataset((as_matrix(data),))


def _single_view_result(data: MultiViewDataset, centroids: np.ndarray, weights: Optional[np.ndarray],
                        config: RunConfig, iterations: List[int], objective_trace: List[float],
                        diagnostics: List[str]) -> ClusterResult:
    if weights is not None and np.any(weights < EMPTY_CLUSTER_TOL):
        message = f"{int(np.sum(weights < EMPTY_CLUSTER_TOL))} centroid weights floored at {EMPTY_CLUSTER_TOL:g}"
        logger.warning(message)
        diagnostics.append(message)
        weights = np.maximum(weights, EMPTY_CLUSTER_TOL)
    centroid_set = CentroidSet((centroids,), weights)
    return ClusterResult(
        labels=assign_labels(data, centroid_set),
        membership=MembershipMatrix(wfcm_update_membership(data.views[0], centroids, config.m)),
        centroids=centroid_set,
        iterations_per_stage=iterations,
        objective_trace=objective_trace,
        diagnostics=diagnostics,
    )


def run_spfcm(data, config: RunConfig) -> ClusterResult:
    """
    Single-pass FCM: every chunk after the first is clustered together with the
    k weighted centroids carried over from the previous chunk.
    """
    data = _single_view(data)
    diagnostics: List[str] = []
    iterations: List[int] = []
    carried, carried_weights = None, None
    state = None

    for index, chunk in enumerate(_chunks(data, config, merge_remainder=False, diagnostics=diagnostics)):
        points = chunk.dataset.views[0]
        if carried is None:
            combined_weights = chunk.object_weights
            state = run_fcm(points, config, combined_weights)
        else:
            points = np.vstack([points, carried])
            combined_weights = np.concatenate([chunk.object_weights, carried_weights])
            state = run_wfcm(points, combined_weights, carried, config)
        carried = state.centroids
        carried_weights = spfcm_cluster_weights(state.membership.values, combined_weights)
        iterations.append(state.iterations)
        diagnostics.extend(state.diagnostics)
        logger.debug(f"[spfcm] chunk {index + 1}: {state.iterations} iterations")

    return _single_view_result(data, carried, carried_weights, config, iterations,
                               list(state.objective_trace), diagnostics)


def run_ofcm(data, config: RunConfig) -> ClusterResult:
    """
    Online FCM: chunks are clustered independently, then all weighted chunk
    centroids are clustered into the final k.
    """
    data = _single_view(data)
    diagnostics: List[str] = []
    chunks = _chunks(data, config, merge_remainder=True, diagnostics=diagnostics)

    states = _map_chunks(lambda chunk: run_fcm(chunk.dataset.views[0], config), chunks, config.n_workers)
    pool = np.vstack([state.centroids for state in states])
    pool_weights = np.concatenate([ofcm_cluster_weights(state.membership.values) for state in states])
    for state in states:
        diagnostics.extend(state.diagnostics)

    final = run_fcm(pool, config, pool_weights)
    diagnostics.extend(final.diagnostics)
    iterations = [state.iterations for state in states] + [final.iterations]
    logger.debug(f"[ofcm] {len(chunks)} chunks pooled into {pool.shape[0]} weighted centroids")

    return _single_view_result(data, final.centroids, spfcm_cluster_weights(final.membership.values, pool_weights),
                               config, iterations, list(final.objective_trace), diagnostics)


def _align_to_first_view(data: MultiViewDataset, per_view_centroids: List[np.ndarray], config: RunConfig) -> List[np.ndarray]:
    sample_size = min(config.alignment_sample, data.n_objects)
    sample = np.sort(np.random.default_rng(config.seed).choice(data.n_objects, sample_size, replace=False))

    def nearest(p: int) -> np.ndarray:
        return np.argmin(cdist(data.views[p][sample], per_view_centroids[p]), axis=1)

    reference = nearest(0)
    aligned = [per_view_centroids[0]]
    for p in range(1, data.n_views):
        overlap = np.zeros((config.k, config.k))
        np.add.at(overlap, (reference, nearest(p)), 1.0)
        _, order = match_clusters(overlap)
        aligned.append(per_view_centroids[p][order])
    return aligned


def run_naive_mv(data: MultiViewDataset, config: RunConfig, base: Algorithm) -> ClusterResult:
    """
    Runs the single-view incremental algorithm on each view separately, pairs
    every view's clusters with view 1's, then labels objects by summed distance.
    """
    runners = {Algorithm.OFCM: run_ofcm, Algorithm.SPFCM: run_spfcm}
    if base not in runners:
        raise InvalidConfigError(f"Naive multi-view clustering runs on OFCM or SPFCM, not {base}")

    results = [runners[base](MultiViewDataset((view,)), config) for view in data.views]
    per_view = _align_to_first_view(data, [result.centroids.per_view[0] for result in results], config)
    centroids = CentroidSet(tuple(per_view))

    equal = ViewWeights.uniform(data.n_views, config.gamma)
    membership = update_consensus_membership(data, centroids, equal, config.m)
    return ClusterResult(
        labels=assign_labels(data, centroids),
        membership=MembershipMatrix(membership),
        centroids=centroids,
        iterations_per_stage=[n for result in results for n in result.iterations_per_stage],
        diagnostics=[message for result in results for message in result.diagnostics],
    )


def _initial_membership(data, config: RunConfig, init: Initialization) -> MembershipMatrix:
    if init == Initialization.FARTHEST_FIRST:
        return init_farthest_first(data, config.k)
    return init_fcm_consensus(data, config)


def run_iminimax(data: MultiViewDataset, config: RunConfig,
                 init: Initialization = Initialization.FARTHEST_FIRST) -> ClusterResult:
    """
    Two-phase incremental minimax clustering.

    Phase 1 clusters every chunk with the minimax engine and pools the resulting
    multi-view centroids. Phase 2 clusters the pool into the final k centroids,
    unweighted unless `config.weighted_phase2` is set, in which case every pooled
    centroid carries its cluster's consensus membership mass.
    """
    init = Initialization(init)
    diagnostics: List[str] = []
    chunks = _chunks(data, config, merge_remainder=True, diagnostics=diagnostics)

    def phase_one(chunk: Chunk) -> MinimaxState:
        return run_minimax(chunk.dataset, _initial_membership(chunk.dataset, config, init), config)

    states = _map_chunks(phase_one, chunks, config.n_workers)
    for state in states:
        diagnostics.extend(state.diagnostics)

    pool = CentroidPool.from_chunks([
        CentroidSet(state.centroids.per_view, np.maximum(state.consensus_membership.values.sum(axis=1), EMPTY_CLUSTER_TOL))
        for state in states
    ])
    logger.debug(f"[iminimax] phase 1 done: {len(chunks)} chunks, pool of {pool.size} centroids")

    object_weights = pool.per_centroid_weights if config.weighted_phase2 else None
    final = run_minimax(pool.per_view, _initial_membership(pool.per_view, config, init), config, object_weights)
    diagnostics.extend(final.diagnostics)

    membership = update_consensus_membership(data, final.centroids, final.view_weights, config.m)
    return ClusterResult(
        labels=assign_labels(data, final.centroids),
        membership=MembershipMatrix(membership),
        centroids=final.centroids,
        view_weights=final.view_weights,
        iterations_per_stage=[state.iterations for state in states] + [final.iterations],
        objective_trace=list(final.objective_trace),
        diagnostics=diagnostics,
    )


def _run_batch_fcm(data: MultiViewDataset, config: RunConfig) -> ClusterResult:
    data = _single_view(data)
    config.check_against(data.n_objects)
    state = run_fcm(data.views[0], config)
    return _single_view_result(data, state.centroids, ofcm_cluster_weights(state.membership.values), config,
                               [state.iterations], list(state.objective_trace), list(state.diagnostics))


def cluster(data: MultiViewDataset, config: RunConfig) -> ClusterResult:
    """Runs `config.algorithm`; single-view algorithms see the views concatenated."""
    if config.normalize:
        data = zscore_normalize(data)

    logger.info(f"Running {config.algorithm.value} on {data.n_objects} objects, {data.n_views} views, "
                f"k={config.k}, chunk_fraction={config.chunk_fraction}, seed={config.seed}")
    algorithm = config.algorithm
    if algorithm == Algorithm.FCM:
        return _run_batch_fcm(data, config)
    if algorithm == Algorithm.SPFCM:
        return run_spfcm(data, config)
    if algorithm == Algorithm.OFCM:
        return run_ofcm(data, config)
    if algorithm == Algorithm.NAIVE_MV_OFCM:
        return run_naive_mv(data, config, Algorithm.OFCM)
    if algorithm == Algorithm.NAIVE_MV_SPFCM:
        return run_naive_mv(data, config, Algorithm.SPFCM)
    if algorithm == Algorithm.IMINIMAX_FCM1:
        return run_iminimax(data, config, Initialization.FARTHEST_FIRST)
    return run_iminimax(data, config, Initialization.FCM_CONSENSUS)
