# datagen.py

from typing import List, Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from iminimax_fcm.core import InvalidConfigError, MultiViewDataset
from iminimax_fcm.dataio import PathLike, read_key_value_file, split_list

# Rejection-sampling attempts per center before falling back to a line layout
MAX_CENTER_ATTEMPTS = 1000


class SyntheticSpec(BaseModel):
    """Gaussian blobs, one set of cluster centers per informative view."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    k: int = Field(ge=1)
    per_cluster_n: int = Field(ge=1)
    view_dims: List[int] = Field(min_length=1)
    separation: float = Field(default=10.0, gt=0.0)
    spread: float = Field(default=0.5, gt=0.0)
    noise_view_prob: float = Field(default=0.0, ge=0.0, le=1.0)
    # 0-based indices of views that are always noise
    noise_views: List[int] = Field(default_factory=list)
    # Standard deviation of the noise views, 3 * spread when unset
    noise_spread: Optional[float] = Field(default=None, gt=0.0)
    seed: int = 0

    @field_validator("view_dims", "noise_views", mode="before")
    @classmethod
    def _split(cls, value):
        return split_list(value)

    @field_validator("view_dims")
    @classmethod
    def _positive_dims(cls, value: List[int]) -> List[int]:
        if any(dim < 1 for dim in value):
            raise ValueError("every view needs at least one feature")
        return value

    @model_validator(mode="after")
    def _noise_views_in_range(self) -> "SyntheticSpec":
        bad = [index for index in self.noise_views if not 0 <= index < len(self.view_dims)]
        if bad:
            raise ValueError(f"noise_views {bad} are outside 0..{len(self.view_dims) - 1}")
        return self

    @property
    def n_objects(self) -> int:
        return self.k * self.per_cluster_n


def _centers(rng: np.random.Generator, k: int, dim: int, separation: float) -> np.ndarray:
    side = separation * k
    centers: List[np.ndarray] = []
    for _ in range(k):
        for _ in range(MAX_CENTER_ATTEMPTS):
            candidate = rng.uniform(0.0, side, dim)
            if all(np.linalg.norm(candidate - center) >= separation for center in centers):
                centers.append(candidate)
                break
        else:
            logger.debug(f"Center sampling gave up in {dim} dimensions, using a line layout")
            line = np.zeros((k, dim))
            line[:, 0] = separation * np.arange(k)
            return line
    return np.array(centers)


def generate(spec: SyntheticSpec) -> MultiViewDataset:
    """Deterministic per seed: the same spec always yields identical arrays."""
    rng = np.random.default_rng(spec.seed)
    labels = np.repeat(np.arange(1, spec.k + 1), spec.per_cluster_n)
    noise_spread = spec.noise_spread if spec.noise_spread is not None else 3.0 * spec.spread

    is_noise = rng.random(len(spec.view_dims)) < spec.noise_view_prob
    is_noise[spec.noise_views] = True

    views = []
    for dim, noise in zip(spec.view_dims, is_noise):
        if noise:
            views.append(rng.normal(0.0, noise_spread, (spec.n_objects, dim)))
        else:
            centers = _centers(rng, spec.k, dim, spec.separation)
            views.append(centers[labels - 1] + rng.normal(0.0, spec.spread, (spec.n_objects, dim)))

    names = tuple(f"noise{p}" if noise else f"view{p}" for p, noise in enumerate(is_noise, start=1))
    logger.debug(f"Generated {spec.n_objects} objects, views {names}")
    return MultiViewDataset(tuple(views), labels, names)


def load_synthetic_spec(path: PathLike, overrides: Optional[dict] = None) -> SyntheticSpec:
    values = read_key_value_file(path)
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})
    try:
        return SyntheticSpec.model_validate(values)
    except ValidationError as e:
        raise InvalidConfigError(f"Invalid synthetic spec {path}: {e}") from e
