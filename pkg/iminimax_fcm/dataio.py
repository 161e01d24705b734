# dataio.py

import csv
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from loguru import logger

from iminimax_fcm.core import DataError, InvalidConfigError, MultiViewDataset

PathLike = Union[str, Path]


def create_directory_if_not_exists(directory: Path):
    if not directory.exists():
        directory.mkdir(parents=True)


def split_list(value) -> List[str]:
    """Comma separated text to a list of stripped items; lists pass through."""
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


def read_key_value_file(path: PathLike) -> Dict[str, str]:
    """Flat `key = value` file. Blank lines and lines starting with '#' are skipped."""
    path = Path(path)
    if not path.is_file():
        raise InvalidConfigError(f"Spec file {path} does not exist")

    values: Dict[str, str] = {}
    with open(path, encoding="utf-8") as file:
        for line_number, line in enumerate(file, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, separator, value = line.partition("=")
            key = key.strip()
            if not separator or not key:
                raise InvalidConfigError(f"{path}:{line_number}: expected 'key = value', got {line!r}")
            if key in values:
                raise InvalidConfigError(f"{path}:{line_number}: duplicate key '{key}'")
            values[key] = value.strip()
    return values


def _read_view(path: Path) -> np.ndarray:
    if not path.is_file():
        raise DataError(f"View file {path} does not exist")

    rows: List[List[float]] = []
    with open(path, newline="", encoding="utf-8") as file:
        reader = csv.reader(file)
        for fields in reader:
            if not fields or fields[0].lstrip().startswith("#"):
                continue
            try:
                row = [float(field) for field in fields]
            except ValueError:
                bad = next(field for field in fields if not _is_number(field))
                raise DataError(f"{path}:{reader.line_num}: non-numeric field {bad!r}") from None
            if rows and len(row) != len(rows[0]):
                raise DataError(f"{path}:{reader.line_num}: expected {len(rows[0])} fields, got {len(row)}")
            rows.append(row)

    if not rows:
        raise DataError(f"View file {path} holds no objects")
    return np.array(rows)


def _is_number(field: str) -> bool:
    try:
        float(field)
        return True
    except ValueError:
        return False


def load_labels(path: PathLike) -> np.ndarray:
    """One integer class per line, 1-based."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"Label file {path} does not exist")

    labels = []
    with open(path, encoding="utf-8") as file:
        for line_number, line in enumerate(file, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                label = int(line)
            except ValueError:
                raise DataError(f"{path}:{line_number}: label {line!r} is not an integer") from None
            if label < 1:
                raise DataError(f"{path}:{line_number}: labels start at 1, got {label}")
            labels.append(label)
    return np.array(labels, dtype=int)


def load_multiview(paths: Sequence[PathLike], label_path: Optional[PathLike] = None) -> MultiViewDataset:
    """Loads one comma-delimited file per view and an optional label file."""
    if not paths:
        raise DataError("At least one view file is required")
    paths = [Path(path) for path in paths]

    views = [_read_view(path) for path in paths]
    for path, view in zip(paths[1:], views[1:]):
        if view.shape[0] != views[0].shape[0]:
            raise DataError(f"View {path} has {view.shape[0]} rows but {paths[0]} has {views[0].shape[0]}")

    labels = None
    if label_path is not None:
        labels = load_labels(label_path)
        if labels.shape[0] != views[0].shape[0]:
            raise DataError(f"Label file {label_path} has {labels.shape[0]} rows, the views have {views[0].shape[0]}")

    logger.info(f"Loaded {views[0].shape[0]} objects with view dimensions {[view.shape[1] for view in views]}")
    return MultiViewDataset(tuple(views), labels, tuple(path.stem for path in paths))


def write_labels(labels: Sequence[int], path: PathLike) -> Path:
    path = Path(path)
    create_directory_if_not_exists(path.parent)
    with open(path, "w", encoding="utf-8") as file:
        file.writelines(f"{int(label)}\n" for label in labels)
    return path


def write_multiview(data: MultiViewDataset, directory: PathLike) -> List[Path]:
    """
    Writes view{p}.csv for every view (and labels.txt when the dataset has labels)
    into `directory`. Returns the written paths, views first.
    """
    directory = Path(directory)
    create_directory_if_not_exists(directory)

    written = []
    for p, view in enumerate(data.views, start=1):
        path = directory / f"view{p}.csv"
        # %.17g keeps every float exact on reload
        np.savetxt(path, view, delimiter=",", fmt="%.17g")
        written.append(path)
    if data.labels is not None:
        written.append(write_labels(data.labels, directory / "labels.txt"))

    logger.info(f"Wrote {data.n_views} view files to {directory}")
    return written
