"""Dataset loading, normalization, and partitioning across agents."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Raised for malformed input files or invalid dataset operations."""


@dataclass(frozen=True)
class Dataset:
    """Labeled feature vectors; labels are -1/+1, features are float64.

    features has shape (n, d), labels has shape (n,).
    """

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] == 0:
            raise DataError("features must be a nonempty (n, d) array")
        if self.labels.shape != (self.features.shape[0],):
            raise DataError("labels must have one entry per sample")
        if not np.all(np.isin(self.labels, (-1, 1))):
            raise DataError("labels must be -1 or +1")
        if not np.all(np.isfinite(self.features)):
            raise DataError("features must be finite")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices)
        return Dataset(self.features[indices], self.labels[indices])


@dataclass(frozen=True)
class PartitionPlan:
    """Disjoint assignment of sample indices to agents.

    assignment[k] is the agent id owning sample k.  Disjointness across
    agents is what makes parallel composition of per-agent privacy costs
    valid.
    """

    num_agents: int
    assignment: np.ndarray
    seed: int

    def indices_for(self, agent: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == agent)


def load_csv(path, label_column: str, positive_value: str) -> Dataset:
    """Load a numeric-feature CSV with a two-valued label column.

    Labels equal to `positive_value` map to +1, the other value to -1.
    No normalization is applied; see preprocess().
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if label_column not in header:
            raise DataError(f"{path}: no column named {label_column!r}")
        label_idx = header.index(label_column)
        feature_cols = [(j, name) for j, name in enumerate(header) if j != label_idx]

        rows = []
        raw_labels = []
        for row_num, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}: row {row_num} has {len(row)} cells, expected {len(header)}")
            values = []
            for j, name in feature_cols:
                try:
                    values.append(float(row[j]))
                except ValueError:
                    raise DataError(
                        f"{path}: row {row_num}, column {name!r}: "
                        f"cannot parse {row[j]!r} as a number"
                    ) from None
            rows.append(values)
            raw_labels.append(row[label_idx])

    if not rows:
        raise DataError(f"{path}: no data rows")
    distinct = set(raw_labels)
    if len(distinct) > 2:
        raise DataError(f"{path}: label column has {len(distinct)} distinct values, expected 2")
    labels = np.where(np.asarray(raw_labels) == positive_value, 1, -1)
    return Dataset(np.asarray(rows, dtype=float), labels)


def column_scales(data: Dataset) -> np.ndarray:
    """Per-column max-abs values used by preprocess; all-zero columns give 1."""
    scales = np.abs(data.features).max(axis=0)
    return np.where(scales > 0, scales, 1.0)


def preprocess(raw: Dataset, scales: np.ndarray | None = None) -> Dataset:
    """Scale each attribute to max-abs 1, then cap each sample's L2 norm at 1.

    Pass `scales` (from column_scales on training data) to normalize held-out
    data with the training maxima.
    """
    if scales is None:
        scales = column_scales(raw)
    x = raw.features / scales
    norms = np.linalg.norm(x, axis=1)
    over = norms > 1.0
    x[over] /= norms[over, np.newaxis]
    return Dataset(x, raw.labels.copy())


def partition(data: Dataset, n_agents: int, seed: int) -> PartitionPlan:
    """Randomly split samples into n_agents near-equal disjoint blocks."""
    n = data.n_samples
    if n_agents < 1 or n_agents > n:
        raise DataError(f"cannot split {n} samples across {n_agents} agents")
    perm = np.random.default_rng(seed).permutation(n)
    sizes = np.full(n_agents, n // n_agents)
    sizes[: n % n_agents] += 1
    assignment = np.empty(n, dtype=int)
    start = 0
    for agent, size in enumerate(sizes):
        assignment[perm[start : start + size]] = agent
        start += size
    return PartitionPlan(n_agents, assignment, seed)


def split_by_plan(data: Dataset, plan: PartitionPlan) -> list[Dataset]:
    """Materialize one Dataset per agent from a PartitionPlan."""
    return [data.subset(plan.indices_for(i)) for i in range(plan.num_agents)]


def synthetic_blobs(n: int, d: int, separation: float, seed: int) -> Dataset:
    """Two Gaussian clusters labeled +1/-1, normalized via preprocess.

    Cluster centers are `separation` apart; unit-variance isotropic noise.
    """
    if n < 2 or d < 1:
        raise DataError("need n >= 2 and d >= 1")
    rng = np.random.default_rng(seed)
    n_pos = n // 2
    offset = np.full(d, separation / (2.0 * np.sqrt(d)))
    x_pos = rng.normal(size=(n_pos, d)) + offset
    x_neg = rng.normal(size=(n - n_pos, d)) - offset
    features = np.vstack([x_pos, x_neg])
    labels = np.concatenate([np.ones(n_pos, dtype=int), -np.ones(n - n_pos, dtype=int)])
    return preprocess(Dataset(features, labels))
