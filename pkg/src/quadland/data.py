"""Seeded dataset generation and teacher labeling.

Datasets are N x d matrices of i.i.d. draws with i.i.d. centered
coordinates. Generation is fully determined by (distribution, n, d, seed);
see _rng for the stream discipline that makes this hold across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _rng
from .errors import InvalidArgument
from .model import Distribution, TeacherModel, forward_batch

# Substream IDs so data and teacher draws at the same seed stay independent.
DATA_SUBSTREAM = 0
TEACHER_SUBSTREAM = 1


@dataclass(frozen=True)
class Dataset:
    """Immutable sample: inputs (N x d), optional labels, sampling origin."""

    inputs: np.ndarray
    labels: np.ndarray | None
    distribution_tag: str
    seed: int

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        if x.ndim != 2 or x.shape[0] < 1:
            raise InvalidArgument("inputs must be a nonempty N x d matrix")
        if not np.all(np.isfinite(x)):
            raise InvalidArgument("inputs must be finite")
        x = x.copy()
        x.setflags(write=False)
        object.__setattr__(self, "inputs", x)
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=float).reshape(-1).copy()
            if y.shape[0] != x.shape[0]:
                raise InvalidArgument("labels must have one entry per sample")
            if not np.all(np.isfinite(y)):
                raise InvalidArgument("labels must be finite")
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]

    @property
    def labeled(self) -> bool:
        return self.labels is not None


def sample_dataset(distribution: Distribution, n: int, d: int, seed: int) -> Dataset:
    """Draw an unlabeled N x d dataset, deterministic per seed."""
    if n < 1 or d < 1:
        raise InvalidArgument("need n >= 1 and d >= 1")
    gen = _rng.stream(seed, DATA_SUBSTREAM)
    inputs = distribution.sample(gen, (n, d))
    return Dataset(inputs=inputs, labels=None, distribution_tag=distribution.tag, seed=seed)


def label_dataset(dataset: Dataset, teacher: TeacherModel) -> Dataset:
    """Attach labels Y_i = f(teacher; X_i)."""
    if dataset.d != teacher.d:
        raise InvalidArgument(
            f"dimension mismatch: data d={dataset.d}, teacher d={teacher.d}"
        )
    labels = forward_batch(teacher, dataset.inputs)
    return Dataset(
        inputs=dataset.inputs,
        labels=labels,
        distribution_tag=dataset.distribution_tag,
        seed=dataset.seed,
    )
