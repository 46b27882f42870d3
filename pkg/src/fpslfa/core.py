"""Sparse rating matrices, dataset splits, latent factor models and parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

INIT_SCALE = 0.1
TRAIN_FRACTION = 0.7
VALIDATION_FRACTION = 0.1
TEST_FRACTION = 0.2


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Known entries of a high-dimensional incomplete matrix, in COO form.

    Only the known set is stored. Absent cells are unknown, not zero.
    """

    num_rows: int
    num_cols: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        rows = np.ascontiguousarray(self.rows, dtype=np.int64)
        cols = np.ascontiguousarray(self.cols, dtype=np.int64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if not (rows.ndim == cols.ndim == values.ndim == 1):
            raise InvalidArgumentError("rows, cols and values must be 1-D")
        if not (len(rows) == len(cols) == len(values)):
            raise InvalidArgumentError("rows, cols and values differ in length")
        if self.num_rows < 0 or self.num_cols < 0:
            raise InvalidArgumentError("matrix dimensions must be non-negative")
        if len(rows):
            if rows.min() < 0 or rows.max() >= self.num_rows:
                raise InvalidArgumentError("row index out of range")
            if cols.min() < 0 or cols.max() >= self.num_cols:
                raise InvalidArgumentError("column index out of range")
            linear = rows * self.num_cols + cols
            if len(np.unique(linear)) != len(linear):
                raise InvalidArgumentError("duplicate (row, col) entries")
            if not np.all(np.isfinite(values)):
                raise InvalidArgumentError("entry values must be finite")
        for name, arr in (("rows", rows), ("cols", cols), ("values", values)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_entries(cls, num_rows, num_cols, entries):
        """Build from an iterable of ``(row, col, value)`` triples."""
        entries = list(entries)
        if entries:
            r, c, v = zip(*entries)
        else:
            r, c, v = (), (), ()
        return cls(num_rows, num_cols, np.array(r, dtype=np.int64),
                   np.array(c, dtype=np.int64), np.array(v, dtype=np.float64))

    def __len__(self):
        return len(self.values)

    def entries(self):
        return [(int(r), int(c), float(v)) for r, c, v in zip(self.rows, self.cols, self.values)]

    def subset(self, index):
        """Entries selected by an integer index array, same dimensions."""
        index = np.asarray(index, dtype=np.int64)
        return SparseMatrix(self.num_rows, self.num_cols, self.rows[index],
                            self.cols[index], self.values[index])

    @property
    def density(self):
        return len(self) / float(self.num_rows * self.num_cols)


@dataclass(frozen=True, eq=False)
class DatasetSplit:
    train: SparseMatrix
    validation: SparseMatrix
    test: SparseMatrix
    split_seed: int = 0

    def __len__(self):
        return len(self.train) + len(self.validation) + len(self.test)


def split_dataset(matrix: SparseMatrix, split_seed: int = 0) -> DatasetSplit:
    """Shuffle the known entries once and cut them 70/10/20.

    Validation and test sizes are rounded down; the remainder goes to train.
    The train subset keeps the shuffled order, which becomes the visit order.
    """
    n = len(matrix)
    perm = np.random.default_rng(split_seed).permutation(n)
    n_val = int(np.floor(n * VALIDATION_FRACTION))
    n_test = int(np.floor(n * TEST_FRACTION))
    n_train = n - n_val - n_test
    split = DatasetSplit(
        train=matrix.subset(perm[:n_train]),
        validation=matrix.subset(perm[n_train:n_train + n_val]),
        test=matrix.subset(perm[n_train + n_val:]),
        split_seed=split_seed,
    )
    assert len(split) == n
    return split


@dataclass(eq=False)
class FactorModel:
    """Latent factors ``x`` (rows by f) and ``y`` (cols by f).

    Single writer: only one training routine may mutate the arrays at a time.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.y = np.ascontiguousarray(self.y, dtype=np.float64)
        if self.x.ndim != 2 or self.y.ndim != 2:
            raise InvalidArgumentError("factor matrices must be 2-D")
        if self.x.shape[1] != self.y.shape[1]:
            raise InvalidArgumentError(
                f"latent dimensions differ: {self.x.shape[1]} vs {self.y.shape[1]}")
        if self.x.shape[1] < 1:
            raise InvalidArgumentError("latent dimension must be at least 1")

    @property
    def f(self):
        return self.x.shape[1]

    @property
    def num_rows(self):
        return self.x.shape[0]

    @property
    def num_cols(self):
        return self.y.shape[0]

    def copy(self):
        return FactorModel(self.x.copy(), self.y.copy())

    def is_finite(self):
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y)))


@dataclass(frozen=True)
class Hyperparams:
    """Learning rate, regularization and their product ``phi = eta * lambda``."""

    eta: float
    lam: float
    phi: float = field(default=None)

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidArgumentError(f"eta must be positive, got {self.eta}")
        if not self.lam >= 0:
            raise InvalidArgumentError(f"lambda must be non-negative, got {self.lam}")
        object.__setattr__(self, "phi", self.eta * self.lam)


@dataclass(frozen=True)
class PidGains:
    """Proportional, integral and derivative gains.

    Used both for raw gains and for the eta-folded gains of the fuzzy scheme;
    the owning optimizer decides which.
    """

    kp: float
    ki: float
    kd: float

    def __post_init__(self):
        if not all(np.isfinite([self.kp, self.ki, self.kd])):
            raise InvalidArgumentError("PID gains must be finite")

    def folded(self, eta):
        return PidGains(eta * self.kp, eta * self.ki, eta * self.kd)


def init_factors(num_rows: int, num_cols: int, f: int, seed: int) -> FactorModel:
    """Draw every factor uniformly from [0, 0.1) with a PCG64 generator."""
    if num_rows < 1 or num_cols < 1 or f < 1:
        raise InvalidArgumentError(
            f"dimensions must be >= 1, got ({num_rows}, {num_cols}, f={f})")
    rng = np.random.default_rng(seed)
    x = rng.random((num_rows, f)) * INIT_SCALE
    y = rng.random((num_cols, f)) * INIT_SCALE
    return FactorModel(x, y)


def predict(model: FactorModel, row: int, col: int) -> float:
    if not (0 <= row < model.num_rows) or not (0 <= col < model.num_cols):
        raise InvalidArgumentError(
            f"index ({row}, {col}) out of range for {model.num_rows}x{model.num_cols} model")
    return float(np.dot(model.x[row], model.y[col]))


def predict_entries(model: FactorModel, rows, cols) -> np.ndarray:
    """Vectorised predictions for many (row, col) pairs."""
    return np.einsum("ij,ij->i", model.x[rows], model.y[cols])
