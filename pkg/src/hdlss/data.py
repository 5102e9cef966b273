"""Labelled datasets, delimited-text ingestion and the random subsampling protocol."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

LABEL_X = "X"
LABEL_Y = "Y"


class ParseError(ValueError):
    """Malformed feature or label file."""


@dataclass(frozen=True)
class LabeledSample:
    features: np.ndarray
    label: str

    def __post_init__(self):
        if self.label not in (LABEL_X, LABEL_Y):
            raise ValueError(f"label must be {LABEL_X!r} or {LABEL_Y!r}, got {self.label!r}")
        if self.features.ndim != 1 or self.features.size < 1:
            raise ValueError("features must be a non-empty vector")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("feature values must be finite")


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (one row per sample) with a boolean mask marking population X."""

    features: np.ndarray
    is_x: np.ndarray

    def __post_init__(self):
        features = np.array(self.features, dtype=float)
        is_x = np.array(self.is_x, dtype=bool)
        if features.ndim != 2 or features.shape[1] < 1:
            raise ValueError("features must be a 2-d array with at least one column")
        if is_x.shape != (features.shape[0],):
            raise ValueError(
                f"label vector has {is_x.shape[0] if is_x.ndim else 0} entries, "
                f"expected {features.shape[0]}"
            )
        if not np.all(np.isfinite(features)):
            raise ValueError("feature values must be finite")
        features.setflags(write=False)
        is_x.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "is_x", is_x)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def counts(self) -> tuple[int, int]:
        n_x = int(self.is_x.sum())
        return n_x, self.features.shape[0] - n_x

    @property
    def X(self) -> np.ndarray:
        return self.features[self.is_x]

    @property
    def Y(self) -> np.ndarray:
        return self.features[~self.is_x]

    def samples(self) -> Iterator[LabeledSample]:
        for row, flag in zip(self.features, self.is_x):
            yield LabeledSample(row, LABEL_X if flag else LABEL_Y)

    @classmethod
    def from_classes(cls, X, Y) -> "Dataset":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape[1] != Y.shape[1]:
            raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
        flags = np.r_[np.ones(len(X), bool), np.zeros(len(Y), bool)]
        return cls(np.vstack([X, Y]), flags)


@dataclass(frozen=True)
class SplitPlan:
    """Training sizes per class, test size per class and the seed of one split.

    ``test_per_class=None`` means "as many as the X class has left", capped so
    the Y class can supply the same number.
    """

    m: int
    n: int
    test_per_class: Optional[int] = None
    seed: int = 0

    def resolve(self, dataset: Dataset) -> "SplitPlan":
        count_x, count_y = dataset.counts
        problems = []
        if self.m < 1 or self.n < 1:
            problems.append(f"training sizes must be >= 1 (m={self.m}, n={self.n})")
        if self.m > count_x:
            problems.append(f"m={self.m} exceeds the {count_x} available X samples")
        if self.n > count_y:
            problems.append(f"n={self.n} exceeds the {count_y} available Y samples")
        if problems:
            raise ValueError("; ".join(problems))
        room = min(count_x - self.m, count_y - self.n)
        test = room if self.test_per_class is None else self.test_per_class
        if test < 0 or test > room:
            raise ValueError(
                f"test_per_class={test} needs {self.m + test} X and {self.n + test} Y samples, "
                f"dataset has {count_x} and {count_y} (short by "
                f"{max(0, self.m + test - count_x)} X, {max(0, self.n + test - count_y)} Y)"
            )
        return SplitPlan(self.m, self.n, test, self.seed)


def _parse_float(token: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"line {line_no}: non-numeric field {token!r}") from None
    if not math.isfinite(value):
        raise ParseError(f"line {line_no}: non-finite field {token!r}")
    return value


def _rows(path, delimiter, skip_header):
    """Yield ``(line_no, fields)`` for non-blank lines.

    ``delimiter=None`` splits on runs of whitespace.
    """
    with open(path, newline="") as fh:
        if delimiter is None:
            lines = ((i, line.split()) for i, line in enumerate(fh, start=1))
        else:
            reader = csv.reader(fh, delimiter=delimiter, skipinitialspace=True)
            lines = enumerate(reader, start=1)
        for line_no, fields in lines:
            if skip_header and line_no == 1:
                continue
            if not fields or all(not f.strip() for f in fields):
                continue
            yield line_no, fields


def load_features_csv(path, delimiter: Optional[str] = ",", skip_header: bool = False) -> np.ndarray:
    """Read a delimiter-separated numeric file into an ``(N, p)`` array.

    The dimension is taken from the first data row; any later row of a
    different width is reported with its 1-based line number.
    """
    rows = []
    width = None
    for line_no, fields in _rows(path, delimiter, skip_header):
        # trailing delimiter produces an empty last field
        if len(fields) > 1 and fields[-1].strip() == "":
            fields = fields[:-1]
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ParseError(
                f"line {line_no}: ragged row with {len(fields)} fields, expected {width}"
            )
        rows.append([_parse_float(f, line_no) for f in fields])
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def attach_labels(
    features: np.ndarray,
    labels_path,
    label_column: int = 0,
    positive_token: str = "1",
    delimiter: Optional[str] = ",",
    skip_header: bool = False,
) -> Dataset:
    """Label each feature row from column ``label_column`` of a second file.

    Rows whose field equals ``positive_token`` (after stripping whitespace)
    become population X; every other row becomes Y.
    """
    flags = []
    for line_no, fields in _rows(labels_path, delimiter, skip_header):
        if not 0 <= label_column < len(fields):
            raise ParseError(
                f"line {line_no}: label column {label_column} missing "
                f"(row has {len(fields)} fields)"
            )
        flags.append(fields[label_column].strip() == positive_token)
    features = np.asarray(features, dtype=float)
    if len(flags) != features.shape[0]:
        raise ValueError(
            f"label file has {len(flags)} rows but feature matrix has {features.shape[0]}"
        )
    return Dataset(features, np.array(flags, dtype=bool))


def write_features_csv(path, features: np.ndarray, delimiter: str = ",") -> None:
    # repr() gives the shortest decimal that re-parses to the same double
    with open(path, "w") as fh:
        for row in np.asarray(features, dtype=float):
            fh.write(delimiter.join(repr(float(v)) for v in row))
            fh.write("\n")


def write_labels_csv(path, dataset: Dataset, positive_token: str = "1",
                     negative_token: str = "-1") -> None:
    with open(path, "w") as fh:
        for flag in dataset.is_x:
            fh.write((positive_token if flag else negative_token) + "\n")


def _partial_shuffle(indices: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """First ``k`` positions of a Fisher-Yates shuffle of ``indices``."""
    idx = indices.copy()
    n = len(idx)
    picks = rng.integers(np.arange(k), n) if k else np.empty(0, dtype=np.int64)
    for i, j in enumerate(picks):
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:k]


def subsample_split(dataset: Dataset, plan: SplitPlan):
    """Draw disjoint training and test sets from each class without replacement.

    Returns ``(train_X, train_Y, test_X, test_Y)`` as arrays of feature rows.
    Deterministic in ``(dataset, plan)``.
    """
    tx, ty, sx, sy = split_indices(dataset, plan)
    f = dataset.features
    return f[tx], f[ty], f[sx], f[sy]


def split_indices(dataset: Dataset, plan: SplitPlan):
    """Row indices behind :func:`subsample_split`, same order and same RNG use."""
    plan = plan.resolve(dataset)
    rng = np.random.default_rng(plan.seed)
    t = plan.test_per_class
    x_pick = _partial_shuffle(np.flatnonzero(dataset.is_x), plan.m + t, rng)
    y_pick = _partial_shuffle(np.flatnonzero(~dataset.is_x), plan.n + t, rng)
    return x_pick[: plan.m], y_pick[: plan.n], x_pick[plan.m:], y_pick[plan.n:]
