# core.py

from dataclasses import dataclass, field
from enum import Enum
from math import ceil, floor
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

# Tolerance used for every simplex check (membership columns, view weights)
SIMPLEX_TOL = 1e-9


# Errors, mapped to CLI exit codes in __main__
class ClusteringError(Exception):
    pass

class InvalidConfigError(ClusteringError, ValueError):
    pass

class DegenerateGammaError(InvalidConfigError):
    pass

class DataError(ClusteringError, ValueError):
    pass

class NumericalError(ClusteringError, ArithmeticError):
    pass


class Algorithm(str, Enum):
    FCM = "FCM"
    SPFCM = "SPFCM"
    OFCM = "OFCM"
    NAIVE_MV_OFCM = "NaiveMVOFCM"
    NAIVE_MV_SPFCM = "NaiveMVSPFCM"
    IMINIMAX_FCM1 = "IminimaxFCM1"
    IMINIMAX_FCM2 = "IminimaxFCM2"


class RunConfig(BaseModel):
    """Parameters shared by every engine and pipeline."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    k: int = Field(ge=1)
    m: float = Field(default=2.0, gt=1.0)
    gamma: float = Field(default=0.5, ge=0.0, lt=1.0)
    epsilon: float = Field(default=1e-5, gt=0.0)
    max_iters: int = Field(default=300, ge=1)
    chunk_fraction: float = Field(default=0.25, gt=0.0, le=1.0)
    seed: int = 0
    algorithm: Algorithm = Algorithm.IMINIMAX_FCM1
    normalize: bool = False
    convergence_norm: Literal["fro", "max"] = "fro"
    weighted_phase2: bool = False
    n_workers: int = Field(default=1, ge=1)
    alignment_sample: int = Field(default=2000, ge=1)

    def check_against(self, n_objects: int) -> None:
        if self.k > n_objects:
            raise InvalidConfigError(f"k={self.k} exceeds the number of objects ({n_objects})")


def as_matrix(array) -> np.ndarray:
    """Float matrix with objects as rows; a 1-D vector is read as N objects with one feature."""
    array = np.asarray(array, dtype=float)
    return array[:, None] if array.ndim == 1 else array


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class MultiViewDataset:
    """N objects, each described by P views of fixed per-view dimension."""

    views: Tuple[np.ndarray, ...]
    labels: Optional[np.ndarray] = None
    view_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if len(self.views) == 0:
            raise DataError("A dataset needs at least one view")

        views = []
        for p, view in enumerate(self.views):
            view = as_matrix(view)
            if view.ndim != 2 or view.shape[1] < 1:
                raise DataError(f"View {p + 1} must be a 2-D matrix with at least one feature")
            if not np.all(np.isfinite(view)):
                raise DataError(f"View {p + 1} contains non-finite feature values")
            views.append(_frozen(view))

        counts = {view.shape[0] for view in views}
        if len(counts) != 1:
            raise DataError(f"Views disagree on the object count: {[view.shape[0] for view in views]}")
        if views[0].shape[0] < 1:
            raise DataError("A dataset needs at least one object")
        object.__setattr__(self, "views", tuple(views))

        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=int).copy()
            if labels.shape != (views[0].shape[0],):
                raise DataError(f"Expected {views[0].shape[0]} labels, got {labels.shape[0]}")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

        if self.view_names is not None:
            if len(self.view_names) != len(views):
                raise DataError("view_names must name every view")
            object.__setattr__(self, "view_names", tuple(self.view_names))

    @property
    def n_objects(self) -> int:
        return self.views[0].shape[0]

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def view_dims(self) -> Tuple[int, ...]:
        return tuple(view.shape[1] for view in self.views)

    def subset(self, indices: Sequence[int]) -> "MultiViewDataset":
        indices = np.asarray(indices, dtype=int)
        labels = None if self.labels is None else self.labels[indices]
        return MultiViewDataset(tuple(view[indices] for view in self.views), labels, self.view_names)

    def concatenated(self) -> np.ndarray:
        """All views side by side, as used by the single-view algorithms."""
        return np.hstack(self.views)


@dataclass(frozen=True)
class Chunk:
    dataset: MultiViewDataset
    object_weights: np.ndarray
    origin_indices: np.ndarray

    def __post_init__(self):
        if self.object_weights.shape != (self.dataset.n_objects,):
            raise DataError("object_weights length must equal the chunk size")
        if np.any(self.object_weights <= 0):
            raise DataError("Object weights must be positive")

    @property
    def size(self) -> int:
        return self.dataset.n_objects


@dataclass(frozen=True)
class MembershipMatrix:
    """K x N fuzzy assignment, every column on the probability simplex."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DataError("A membership matrix must be K x N")
        if np.any(values < 0):
            raise NumericalError("Membership entries must be non-negative")
        drift = np.abs(values.sum(axis=0) - 1.0)
        if drift.size and drift.max() > SIMPLEX_TOL:
            raise NumericalError(f"Membership columns must sum to 1 (max drift {drift.max():.3e})")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def n_clusters(self) -> int:
        return self.values.shape[0]

    @property
    def n_objects(self) -> int:
        return self.values.shape[1]

    def crisp(self) -> np.ndarray:
        """1-based label of the largest membership per object."""
        return np.argmax(self.values, axis=0) + 1


@dataclass(frozen=True)
class CentroidSet:
    per_view: Tuple[np.ndarray, ...]
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        per_view = tuple(_frozen(as_matrix(view)) for view in self.per_view)
        if len({view.shape[0] for view in per_view}) != 1:
            raise DataError("Cluster count must be identical across views")
        if not all(np.all(np.isfinite(view)) for view in per_view):
            raise NumericalError("Centroids must be finite")
        object.__setattr__(self, "per_view", per_view)
        if self.weights is not None:
            weights = np.asarray(self.weights, dtype=float)
            if weights.shape != (per_view[0].shape[0],) or np.any(weights <= 0):
                raise DataError("Centroid weights must be one positive value per centroid")
            object.__setattr__(self, "weights", _frozen(weights))

    @property
    def n_clusters(self) -> int:
        return self.per_view[0].shape[0]


@dataclass(frozen=True)
class ViewWeights:
    alpha: np.ndarray
    gamma: float

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        if np.any(alpha < 0) or abs(alpha.sum() - 1.0) > SIMPLEX_TOL:
            raise NumericalError(f"View weights must lie on the simplex, got {alpha}")
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidConfigError("gamma must be in [0, 1)")
        object.__setattr__(self, "alpha", _frozen(alpha))

    @classmethod
    def uniform(cls, n_views: int, gamma: float) -> "ViewWeights":
        return cls(np.full(n_views, 1.0 / n_views), gamma)


@dataclass(frozen=True)
class ClusterResult:
    labels: np.ndarray
    membership: MembershipMatrix
    centroids: CentroidSet
    view_weights: Optional[ViewWeights] = None
    iterations_per_stage: List[int] = field(default_factory=list)
    objective_trace: Optional[List[float]] = None
    diagnostics: List[str] = field(default_factory=list)


def partition_into_chunks(data: MultiViewDataset, chunk_fraction: float, seed: int) -> List[Chunk]:
    """Shuffle the objects with `seed` and cut them into consecutive chunks.

    Every chunk holds floor(N * chunk_fraction) objects except the last, which
    holds the remainder. All object weights start at 1.
    """
    if not 0.0 < chunk_fraction <= 1.0:
        raise InvalidConfigError(f"chunk_fraction must be in (0, 1], got {chunk_fraction}")

    n_objects = data.n_objects
    # 1e-9 keeps e.g. 10 * 0.3 from flooring to 2
    chunk_size = floor(n_objects * chunk_fraction + 1e-9)
    if chunk_size == 0:
        raise InvalidConfigError(f"chunk_fraction={chunk_fraction} gives empty chunks for N={n_objects}")

    order = np.random.default_rng(seed).permutation(n_objects)
    n_chunks = ceil(n_objects / chunk_size)

    chunks = []
    for index in range(n_chunks):
        origin = order[index * chunk_size:(index + 1) * chunk_size]
        chunks.append(Chunk(data.subset(origin), np.ones(origin.size), origin))

    logger.debug(f"Partitioned {n_objects} objects into {n_chunks} chunks of size {chunk_size}")
    return chunks


def zscore_normalize(data: MultiViewDataset) -> MultiViewDataset:
    """Scale every feature column to mean 0 and standard deviation 1. Constant columns become 0."""
    if data.n_objects < 2:
        raise InvalidConfigError("z-score normalization needs at least two objects")

    views = []
    for view in data.views:
        mean = view.mean(axis=0)
        std = view.std(axis=0)
        constant = std < 1e-12
        scaled = (view - mean) / np.where(constant, 1.0, std)
        scaled[:, constant] = 0.0
        views.append(scaled)
    return MultiViewDataset(tuple(views), data.labels, data.view_names)
