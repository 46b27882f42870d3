"""Dataset parsing, synthetic low-rank matrices and binary model snapshots."""

from __future__ import annotations

import json
import math
import os
import struct
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .core import FactorModel, SparseMatrix
from .errors import FormatError, InvalidArgumentError, ParseError

MAGIC = b"FPSLFA"
VERSION = b"01"
_HEADER = struct.Struct("<6s2sQQQ")

# (rows, cols, known entries) as published for the public rating datasets
KNOWN_DATASETS = {
    "ml10m": (71_567, 10_681, 10_000_054),
    "ml20m": (138_493, 26_744, 20_000_263),
    "douban": (129_490, 58_541, 16_830_839),
    "jester": (124_113, 150, 5_865_235),
}


class FormatKind(str, Enum):
    MOVIELENS_DAT = "movielens_dat"
    CSV = "csv"
    TSV = "tsv"


_SEPARATORS = {FormatKind.MOVIELENS_DAT: "::", FormatKind.CSV: ",", FormatKind.TSV: "\t"}


@dataclass(frozen=True)
class DatasetFormat:
    kind: FormatKind = FormatKind.MOVIELENS_DAT
    has_header: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", FormatKind(self.kind))


@dataclass(frozen=True, eq=False)
class ParsedDataset:
    """A parsed matrix with the raw identifiers behind each dense index."""

    matrix: SparseMatrix
    row_ids: list
    col_ids: list

    @property
    def num_rows(self):
        return self.matrix.num_rows

    @property
    def num_cols(self):
        return self.matrix.num_cols


def parse_dataset(path, fmt: DatasetFormat = DatasetFormat()) -> ParsedDataset:
    """Read ``user, item, rating[, ...]`` lines into a dense-indexed matrix.

    Identifiers are remapped to 0-based indices in order of first appearance.
    A repeated (user, item) pair keeps its last rating. Trailing columns such
    as timestamps are ignored.
    """
    if isinstance(fmt, str):
        fmt = DatasetFormat(fmt)
    sep = _SEPARATORS[fmt.kind]
    path = Path(path)
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot open dataset: {exc.strerror}", path=path) from exc

    row_index, col_index = {}, {}
    ratings = {}
    with handle:
        for lineno, line in enumerate(handle, start=1):
            if lineno == 1 and fmt.has_header:
                continue
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split(sep)
            if len(fields) < 3:
                raise ParseError(f"expected at least 3 fields, got {len(fields)}",
                                 path=path, line_number=lineno)
            user, item, raw = fields[0].strip(), fields[1].strip(), fields[2].strip()
            if not user or not item:
                raise ParseError("empty user or item identifier", path=path, line_number=lineno)
            try:
                value = float(raw)
            except ValueError:
                raise ParseError(f"non-numeric rating {raw!r}", path=path,
                                 line_number=lineno) from None
            if not math.isfinite(value):
                raise ParseError(f"non-finite rating {raw!r}", path=path, line_number=lineno)
            r = row_index.setdefault(user, len(row_index))
            c = col_index.setdefault(item, len(col_index))
            ratings[(r, c)] = value

    if not ratings:
        raise InvalidArgumentError(f"{path}: dataset contains no entries")
    n = len(ratings)
    rows = np.fromiter((k[0] for k in ratings), dtype=np.int64, count=n)
    cols = np.fromiter((k[1] for k in ratings), dtype=np.int64, count=n)
    values = np.fromiter(ratings.values(), dtype=np.float64, count=n)
    matrix = SparseMatrix(len(row_index), len(col_index), rows, cols, values)
    return ParsedDataset(matrix, list(row_index), list(col_index))


def check_known_counts(matrix: SparseMatrix, name: str) -> bool:
    """Warn if ``matrix`` does not match the published size of dataset ``name``."""
    expected = KNOWN_DATASETS[name.lower()]
    found = (matrix.num_rows, matrix.num_cols, len(matrix))
    if found != expected:
        warnings.warn(f"{name}: expected rows/cols/entries {expected}, found {found}",
                      stacklevel=2)
        return False
    return True


def write_dataset(matrix: SparseMatrix, path, fmt: DatasetFormat = DatasetFormat(FormatKind.CSV),
                  row_ids=None, col_ids=None) -> None:
    """Write ``matrix`` in one of the parseable formats (no timestamps)."""
    if isinstance(fmt, str):
        fmt = DatasetFormat(fmt)
    sep = _SEPARATORS[fmt.kind]
    row_ids = row_ids if row_ids is not None else range(matrix.num_rows)
    col_ids = col_ids if col_ids is not None else range(matrix.num_cols)
    row_ids, col_ids = list(row_ids), list(col_ids)
    with open(path, "w", encoding="utf-8") as fh:
        if fmt.has_header:
            fh.write(sep.join(("user", "item", "rating")) + "\n")
        for r, c, v in zip(matrix.rows, matrix.cols, matrix.values):
            fh.write(f"{row_ids[r]}{sep}{col_ids[c]}{sep}{float(v)!r}\n")


def generate_synthetic(num_rows, num_cols, rank, density, noise_std=0.0, seed=0):
    """Sample a noisy rank-``rank`` matrix observed on a ``density`` fraction of cells.

    Both ground-truth factors are uniform on [0, 1). Exactly
    ``round(density * num_rows * num_cols)`` distinct cells are observed.
    Returns ``(matrix, rank)``.
    """
    if not 0 < density <= 1:
        raise InvalidArgumentError(f"density must be in (0, 1], got {density}")
    if not 1 <= rank <= min(num_rows, num_cols):
        raise InvalidArgumentError(f"rank {rank} must be in [1, min(rows, cols)]")
    if noise_std < 0:
        raise InvalidArgumentError("noise_std must be non-negative")
    total = num_rows * num_cols
    count = int(round(density * total))
    if count == 0:
        raise InvalidArgumentError(f"density {density} yields no entries for {num_rows}x{num_cols}")
    rng = np.random.default_rng(seed)
    u = rng.random((num_rows, rank))
    v = rng.random((num_cols, rank))
    cells = np.sort(rng.choice(total, size=count, replace=False))
    rows, cols = np.divmod(cells, num_cols)
    values = np.einsum("ij,ij->i", u[rows], v[cols])
    if noise_std > 0:
        values = values + rng.normal(0.0, noise_std, size=count)
    return SparseMatrix(num_rows, num_cols, rows, cols, values), rank


def save_model(model: FactorModel, path) -> None:
    """Write a little-endian snapshot: magic, version, u64 dims, then X and Y."""
    path = Path(path)
    header = _HEADER.pack(MAGIC, VERSION, model.num_rows, model.num_cols, model.f)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(model.x.astype("<f8").tobytes(order="C"))
        fh.write(model.y.astype("<f8").tobytes(order="C"))
    os.replace(tmp, path)


def load_model(path) -> FactorModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8 or blob[:6] != MAGIC:
        raise FormatError(f"{path}: not a model snapshot (bad magic)")
    version = blob[6:8]
    if version != VERSION:
        raise FormatError(f"{path}: unsupported snapshot version: expected "
                          f"{VERSION.decode()}, found {version.decode(errors='replace')}")
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    _, _, num_rows, num_cols, f = _HEADER.unpack_from(blob)
    expected = _HEADER.size + 8 * f * (num_rows + num_cols)
    if len(blob) != expected:
        raise FormatError(f"{path}: payload is {len(blob)} bytes, expected {expected}")
    payload = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    x = payload[:num_rows * f].reshape(num_rows, f).astype(np.float64)
    y = payload[num_rows * f:].reshape(num_cols, f).astype(np.float64)
    return FactorModel(x, y)


def save_index_maps(path, row_ids, col_ids) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"row_ids": list(row_ids), "col_ids": list(col_ids)}, fh)


def load_index_maps(path):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return data["row_ids"], data["col_ids"]
