# experiment.py

import csv
import io
import time
from pathlib import Path
from typing import List, Literal, Optional

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from tqdm import tqdm

from iminimax_fcm.core import (Algorithm, ClusteringError, DataError, InvalidConfigError, MultiViewDataset,
                               RunConfig)
from iminimax_fcm.dataio import PathLike, load_multiview, read_key_value_file, split_list
from iminimax_fcm.metrics import accuracy, aggregate_trials, f_measure, nmi
from iminimax_fcm.pipelines import cluster

# Chunk sizes swept by default: 1%, 2.5%, 5%, 10% and 25% of the data
DEFAULT_CHUNK_FRACTIONS = [0.01, 0.025, 0.05, 0.1, 0.25]

METRICS = ("accuracy", "nmi", "f_measure")


class ExperimentSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    view_paths: List[str] = Field(default_factory=list)
    label_path: Optional[str] = None
    algorithms: List[Algorithm] = Field(default_factory=lambda: list(Algorithm), min_length=1)
    chunk_fractions: List[float] = Field(default_factory=lambda: list(DEFAULT_CHUNK_FRACTIONS))
    trials: int = Field(default=20, ge=1)
    base_seed: int = 0
    k: int = Field(ge=1)
    m: float = Field(default=2.0, gt=1.0)
    gamma: float = Field(default=0.5, ge=0.0, lt=1.0)
    epsilon: float = Field(default=1e-5, gt=0.0)
    max_iters: int = Field(default=300, ge=1)
    normalize: bool = False
    weighted_phase2: bool = False
    n_workers: int = Field(default=1, ge=1)
    # False switches the reported spread to the n-1 sample standard deviation
    population_std: bool = True

    @field_validator("view_paths", "algorithms", "chunk_fractions", mode="before")
    @classmethod
    def _split(cls, value):
        return split_list(value)

    @field_validator("chunk_fractions")
    @classmethod
    def _fractions_in_range(cls, value: List[float]) -> List[float]:
        bad = [fraction for fraction in value if not 0.0 < fraction <= 1.0]
        if bad:
            raise ValueError(f"chunk fractions must be in (0, 1], got {bad}")
        return value

    def run_config(self, algorithm: Algorithm, chunk_fraction: float, trial: int) -> RunConfig:
        return RunConfig(
            k=self.k, m=self.m, gamma=self.gamma, epsilon=self.epsilon, max_iters=self.max_iters,
            chunk_fraction=chunk_fraction, seed=self.base_seed + trial, algorithm=algorithm,
            normalize=self.normalize, weighted_phase2=self.weighted_phase2, n_workers=self.n_workers,
        )


class ResultRow(BaseModel):
    algorithm: Algorithm
    chunk_fraction: float
    trials: int = 0
    accuracy_mean: Optional[float] = None
    accuracy_std: Optional[float] = None
    nmi_mean: Optional[float] = None
    nmi_std: Optional[float] = None
    f_measure_mean: Optional[float] = None
    f_measure_std: Optional[float] = None
    runtime_mean: Optional[float] = None
    error: Optional[str] = None


class ResultTable(BaseModel):
    rows: List[ResultRow] = Field(default_factory=list)


def load_experiment_spec(path: PathLike, overrides: Optional[dict] = None) -> ExperimentSpec:
    """
    Reads a key = value spec file. Fields in `overrides` that are not None win
    over the file; relative data paths are resolved against the file's folder.
    """
    path = Path(path)
    values = read_key_value_file(path)

    # Command-line overrides stay relative to the working directory
    base = path.parent
    if "view_paths" in values:
        values["view_paths"] = [str(base / item) for item in split_list(values["view_paths"])]
    if values.get("label_path"):
        values["label_path"] = str(base / values["label_path"])
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})

    try:
        return ExperimentSpec.model_validate(values)
    except ValidationError as e:
        raise InvalidConfigError(f"Invalid experiment spec {path}: {e}") from e


class TrialScores(BaseModel):
    accuracy: float
    nmi: float
    f_measure: float
    runtime: float


def run_trial(spec: ExperimentSpec, data: MultiViewDataset, algorithm: Algorithm, fraction: float,
              trial: int) -> TrialScores:
    """Clusters once with seed base_seed + trial; depends on nothing but that seed and the data."""
    config = spec.run_config(algorithm, fraction, trial)
    start = time.perf_counter()
    result = cluster(data, config)
    runtime = time.perf_counter() - start
    return TrialScores(
        accuracy=accuracy(result.labels, data.labels),
        nmi=nmi(result.labels, data.labels),
        f_measure=f_measure(result.labels, data.labels),
        runtime=runtime,
    )


def _run_cell(spec: ExperimentSpec, data: MultiViewDataset, algorithm: Algorithm, fraction: float) -> ResultRow:
    trials: List[TrialScores] = []

    for trial in tqdm(range(spec.trials), desc=f"{algorithm.value} @ {fraction:g}", leave=False):
        try:
            trials.append(run_trial(spec, data, algorithm, fraction, trial))
        except ClusteringError as e:
            logger.error(f"{algorithm.value} @ {fraction:g}, trial {trial}: {e}")
            return ResultRow(algorithm=algorithm, chunk_fraction=fraction, trials=trial,
                             error=f"trial {trial}: {e}")

    fields = {}
    for name in METRICS:
        values = [getattr(scores, name) for scores in trials]
        fields[f"{name}_mean"], fields[f"{name}_std"] = aggregate_trials(values, spec.population_std)
    runtimes = [scores.runtime for scores in trials]
    return ResultRow(algorithm=algorithm, chunk_fraction=fraction, trials=spec.trials,
                     runtime_mean=sum(runtimes) / len(runtimes), **fields)


def run_experiment(spec: ExperimentSpec, data: Optional[MultiViewDataset] = None) -> ResultTable:
    """
    Runs every (algorithm, chunk fraction) cell for `spec.trials` trials; trial t
    uses seed base_seed + t. A failing cell is recorded and the rest still run.
    """
    if data is None:
        if not spec.view_paths:
            raise InvalidConfigError("The experiment names no view files")
        data = load_multiview(spec.view_paths, spec.label_path)
    if data.labels is None:
        raise DataError("Evaluating an experiment needs ground-truth labels")

    rows = []
    for algorithm in spec.algorithms:
        for fraction in spec.chunk_fractions:
            rows.append(_run_cell(spec, data, algorithm, fraction))
            logger.info(f"{algorithm.value} @ {fraction:g} done")
    return ResultTable(rows=rows)


def _mean_std(mean: Optional[float], std: Optional[float]) -> str:
    if mean is None:
        return "error"
    return f"{mean:.4f}({std:.4f})"


def emit_table(table: ResultTable, format: Literal["plain", "csv", "json"] = "plain",
               include_runtime: bool = False) -> str:
    """
    Serializes a result table. Runtimes vary between runs, so they are left out
    unless `include_runtime` is set; without them the output is reproducible.
    """
    if format == "json":
        exclude = None if include_runtime else {"rows": {"__all__": {"runtime_mean"}}}
        return table.model_dump_json(indent=2, exclude=exclude) + "\n"

    if format == "csv":
        columns = ["algorithm", "chunk_fraction", "trials"]
        columns += [f"{name}_{stat}" for name in METRICS for stat in ("mean", "std")]
        if include_runtime:
            columns.append("runtime_mean")
        columns.append("error")

        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in table.rows:
            record = row.model_dump(mode="json")
            writer.writerow(["" if record[column] is None else record[column] for column in columns])
        return buffer.getvalue()

    if format != "plain":
        raise InvalidConfigError(f"Unknown table format '{format}'")

    header = ["algorithm", "chunk", "accuracy", "nmi", "f_measure"] + (["runtime_s"] if include_runtime else [])
    lines = [header]
    for row in table.rows:
        line = [row.algorithm.value, f"{row.chunk_fraction:g}"]
        line += [_mean_std(getattr(row, f"{name}_mean"), getattr(row, f"{name}_std")) for name in METRICS]
        if include_runtime:
            line.append("" if row.runtime_mean is None else f"{row.runtime_mean:.3f}")
        lines.append(line)

    widths = [max(len(line[column]) for line in lines) for column in range(len(header))]
    return "".join("  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip() + "\n"
                   for line in lines)
