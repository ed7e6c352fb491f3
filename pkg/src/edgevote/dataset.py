"""Tabular dataset pipeline: CSV loading, missing-value filtering,
train/val/test splitting, standardization, and recursive feature elimination.

All functions are pure over immutable inputs and safe to call from any thread.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
from dataclasses import dataclass, field

import numpy as np

FEATURE_NAMES = (
    "pregnancies",
    "glucose",
    "diastolic_bp",
    "skinfold",
    "insulin",
    "bmi",
    "pedigree",
    "age",
)

CSV_HEADER = (
    "Pregnancies",
    "Glucose",
    "BloodPressure",
    "SkinThickness",
    "Insulin",
    "BMI",
    "DiabetesPedigreeFunction",
    "Age",
    "Outcome",
)

# CSV-style column names accepted as aliases on the CLI and in drop_missing.
_COLUMN_ALIASES = dict(zip(CSV_HEADER[:8], FEATURE_NAMES))

DEFAULT_MISSING_COLUMNS = frozenset({"skinfold", "diastolic_bp", "bmi"})

# Integer-valued fields; bmi and pedigree are the two true reals.
_INT_FEATURES = frozenset(
    {"pregnancies", "glucose", "diastolic_bp", "skinfold", "insulin", "age"}
)


class DatasetError(Exception):
    """Base class for dataset pipeline failures."""


class MissingFile(DatasetError):
    pass


class MalformedRow(DatasetError):
    def __init__(self, line_number: int, detail: str):
        super().__init__(f"line {line_number}: {detail}")
        self.line_number = line_number


class EmptyDataset(DatasetError):
    pass


class UnknownColumn(DatasetError):
    pass


class BadRatios(DatasetError):
    pass


class TooFewRecords(DatasetError):
    pass


class EmptyIndexSet(DatasetError):
    pass


class ArityMismatch(DatasetError):
    pass


class BadK(DatasetError):
    pass


@dataclass(frozen=True)
class PatientRecord:
    """One observation: eight risk-factor features plus the binary outcome."""

    pregnancies: int
    glucose: int
    diastolic_bp: int
    skinfold: int
    insulin: int
    bmi: float
    pedigree: float
    age: int
    outcome: int

    def features(self) -> tuple[float, ...]:
        return (
            float(self.pregnancies),
            float(self.glucose),
            float(self.diastolic_bp),
            float(self.skinfold),
            float(self.insulin),
            float(self.bmi),
            float(self.pedigree),
            float(self.age),
        )


@dataclass(frozen=True)
class Dataset:
    records: tuple[PatientRecord, ...]
    feature_names: tuple[str, ...] = FEATURE_NAMES
    source_digest: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def feature_matrix(self) -> np.ndarray:
        return np.array([r.features() for r in self.records], dtype=np.float64)

    def labels(self) -> np.ndarray:
        return np.array([r.outcome for r in self.records], dtype=np.int64)

    def class_counts(self) -> tuple[int, int]:
        y = self.labels()
        return int(np.sum(y == 0)), int(np.sum(y == 1))


@dataclass(frozen=True)
class SplitDataset:
    """Disjoint, exhaustive train/validation/test index sets plus the seed
    that produced them."""

    train_idx: tuple[int, ...]
    val_idx: tuple[int, ...]
    test_idx: tuple[int, ...]
    seed: int


@dataclass(frozen=True)
class Scaler:
    """Per-feature standardizer fit on training rows only.

    Degenerate (constant) features store std 1 so they transform to 0.
    """

    mean: tuple[float, ...]
    std: tuple[float, ...]

    def transform(self, X: np.ndarray) -> np.ndarray:
        return apply_scaler(self, X)

    def to_dict(self) -> dict:
        return {"mean": list(self.mean), "std": list(self.std)}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(mean=tuple(d["mean"]), std=tuple(d["std"]))


@dataclass(frozen=True)
class FeatureMask:
    """Surviving feature indices after elimination, plus drop order."""

    selected: tuple[int, ...]
    elimination_order: tuple[int, ...] = field(default_factory=tuple)

    def apply(self, X: np.ndarray) -> np.ndarray:
        # force C order: column fancy-indexing yields F-order, and BLAS
        # rounds differently per layout, which breaks bit-reproducibility
        return np.ascontiguousarray(X[:, list(self.selected)])

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "elimination_order": list(self.elimination_order),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureMask":
        return cls(
            selected=tuple(d["selected"]),
            elimination_order=tuple(d["elimination_order"]),
        )


def _parse_field(raw: str, name: str, line_number: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise MalformedRow(line_number, f"non-numeric value {raw!r} for {name}")
    if not math.isfinite(value):
        raise MalformedRow(line_number, f"non-finite value {raw!r} for {name}")
    return value


def _parse_int_field(raw: str, name: str, line_number: int) -> int:
    value = _parse_field(raw, name, line_number)
    if value != int(value):
        raise MalformedRow(line_number, f"non-integer value {raw!r} for {name}")
    return int(value)


def parse_record(fields: list[str], line_number: int) -> PatientRecord:
    """Parse one 9-field CSV row (positional, canonical column order)."""
    if len(fields) != 9:
        raise MalformedRow(line_number, f"expected 9 fields, got {len(fields)}")
    values = {}
    for name, raw in zip(FEATURE_NAMES, fields[:8]):
        if name in _INT_FEATURES:
            values[name] = _parse_int_field(raw, name, line_number)
        else:
            values[name] = _parse_field(raw, name, line_number)
    outcome = _parse_int_field(fields[8], "outcome", line_number)
    if outcome not in (0, 1):
        raise MalformedRow(line_number, f"outcome must be 0 or 1, got {fields[8]!r}")
    return PatientRecord(outcome=outcome, **values)


def load_csv(path: str | os.PathLike) -> Dataset:
    """Load a 9-column patient CSV. The first line is always treated as the
    header; each data row yields one PatientRecord in file order."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except FileNotFoundError:
        raise MissingFile(f"no such file: {path}")
    digest = hashlib.sha256(raw).hexdigest()

    lines = raw.decode("utf-8").splitlines()
    reader = csv.reader(lines)
    records = []
    for line_number, fields in enumerate(reader, start=1):
        if line_number == 1:
            if len(fields) != 9:
                raise MalformedRow(1, f"header must have 9 columns, got {len(fields)}")
            continue
        if not fields:
            continue
        records.append(parse_record(fields, line_number))
    if not records:
        raise EmptyDataset(f"{path} contains a header but no data rows")
    return Dataset(records=tuple(records), source_digest=digest)


def resolve_columns(columns) -> set[str]:
    """Normalize a collection of column names, accepting CSV-header aliases."""
    resolved = set()
    for col in columns:
        name = _COLUMN_ALIASES.get(col, col)
        if name not in FEATURE_NAMES:
            raise UnknownColumn(f"unknown column {col!r}")
        resolved.add(name)
    return resolved


def drop_missing(ds: Dataset, columns=None) -> Dataset:
    """Remove records with a 0 value in any of the listed columns.

    A 0 in those columns encodes a missing measurement, so the filtered
    dataset contains only complete observations. Order is preserved.
    """
    names = resolve_columns(DEFAULT_MISSING_COLUMNS if columns is None else columns)
    positions = [FEATURE_NAMES.index(n) for n in sorted(names)]
    kept = tuple(
        r for r in ds.records if all(r.features()[p] != 0.0 for p in positions)
    )
    return Dataset(
        records=kept, feature_names=ds.feature_names, source_digest=ds.source_digest
    )


def split(
    ds: Dataset, ratios: tuple[float, float, float] = (0.7, 0.1, 0.2), seed: int = 0
) -> SplitDataset:
    """Shuffle record indices with a seeded RNG and cut train/val/test.

    Train takes the first floor(r_train * n) indices, validation the next
    floor(r_val * n), and test the remainder.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise BadRatios(f"ratios {ratios} do not sum to 1")
    if any(r < 0 for r in ratios):
        raise BadRatios(f"ratios {ratios} contain a negative value")
    n = len(ds)
    if n < 10:
        raise TooFewRecords(f"need at least 10 records to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(ratios[0] * n))
    n_val = int(math.floor(ratios[1] * n))
    return SplitDataset(
        train_idx=tuple(int(i) for i in perm[:n_train]),
        val_idx=tuple(int(i) for i in perm[n_train : n_train + n_val]),
        test_idx=tuple(int(i) for i in perm[n_train + n_val :]),
        seed=seed,
    )


def fit_scaler(ds: Dataset, idx) -> Scaler:
    """Per-feature mean and population std over the given rows.

    Features with std below 1e-12 store std 1 so constant columns map to 0.
    """
    idx = list(idx)
    if not idx:
        raise EmptyIndexSet("cannot fit a scaler on an empty index set")
    X = ds.feature_matrix()[idx]
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return Scaler(mean=tuple(float(m) for m in mean), std=tuple(float(s) for s in std))


def apply_scaler(scaler: Scaler, rows) -> np.ndarray:
    """Standardize a feature matrix: x' = (x - mean) / std per column."""
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != len(scaler.mean):
        raise ArityMismatch(
            f"matrix has {X.shape[1]} columns, scaler expects {len(scaler.mean)}"
        )
    return (X - np.asarray(scaler.mean)) / np.asarray(scaler.std)


def rfe(ds: Dataset, train_idx, target_k: int, seed: int = 0) -> FeatureMask:
    """Recursively eliminate features by logistic-regression coefficient size.

    Each round standardizes the surviving features over the training rows,
    fits the logistic-regression base learner, and drops the feature with
    the smallest absolute weight until target_k remain. Ties drop the
    lowest-indexed feature.
    """
    from .models import Hyperparams, train_logreg

    n_features = len(ds.feature_names)
    if not 1 <= target_k <= n_features:
        raise BadK(f"target_k must be in [1, {n_features}], got {target_k}")

    train_idx = list(train_idx)
    X_all = ds.feature_matrix()[train_idx]
    y = ds.labels()[train_idx]
    hp = Hyperparams(seed=seed)

    surviving = list(range(n_features))
    eliminated: list[int] = []
    while len(surviving) > target_k:
        X = X_all[:, surviving]
        mean = X.mean(axis=0)
        std = np.where(X.std(axis=0) < 1e-12, 1.0, X.std(axis=0))
        model = train_logreg((X - mean) / std, y, hp)
        weakest = int(np.argmin(np.abs(model.weights)))
        eliminated.append(surviving.pop(weakest))
    return FeatureMask(
        selected=tuple(surviving), elimination_order=tuple(eliminated)
    )


def write_csv(ds: Dataset, path: str | os.PathLike) -> None:
    """Write records back out in the canonical 9-column schema."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in ds.records:
            writer.writerow(
                [
                    r.pregnancies,
                    r.glucose,
                    r.diastolic_bp,
                    r.skinfold,
                    r.insulin,
                    repr(r.bmi),
                    repr(r.pedigree),
                    r.age,
                    r.outcome,
                ]
            )


def records_to_csv_block(rows) -> str:
    """Render feature rows (8 or 9 columns) as a CSV text block for dispatch."""
    rows = list(rows)
    arity = len(rows[0]) if rows else 9
    header = CSV_HEADER if arity == 9 else CSV_HEADER[:8]
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(_render_number(v) for v in row))
    return "\n".join(out) + "\n"


def _render_number(v) -> str:
    f = float(v)
    if f == int(f) and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


def parse_feature_block(text: str) -> tuple[np.ndarray, np.ndarray | None]:
    """Parse a canonical patient CSV block back into arrays.

    Accepts the 9-column header (labels returned) or the 8-column header
    (labels None). Zero data rows are fine: shape (0, 8). Values parse as
    floats, so rendered blocks round-trip bit-exactly.
    """
    lines = text.splitlines()
    if not lines:
        raise MalformedRow(1, "empty block, expected a header")
    header = tuple(next(csv.reader([lines[0]])))
    if header == CSV_HEADER:
        labeled = True
    elif header == CSV_HEADER[:8]:
        labeled = False
    else:
        raise MalformedRow(1, f"unrecognized header: {lines[0]!r}")

    width = 9 if labeled else 8
    features, labels = [], []
    for line_number, fields in enumerate(csv.reader(lines[1:]), start=2):
        if not fields:
            continue
        if len(fields) != width:
            raise MalformedRow(
                line_number, f"expected {width} fields, got {len(fields)}"
            )
        features.append(
            [_parse_field(raw, name, line_number) for raw, name in zip(fields, FEATURE_NAMES)]
        )
        if labeled:
            outcome = _parse_int_field(fields[8], "outcome", line_number)
            if outcome not in (0, 1):
                raise MalformedRow(line_number, f"outcome must be 0 or 1: {fields[8]!r}")
            labels.append(outcome)
    X = np.asarray(features, dtype=np.float64).reshape(len(features), 8)
    y = np.asarray(labels, dtype=np.int64) if labeled else None
    return X, y


def matrix_to_csv_block(X, y=None) -> str:
    """Render a numeric matrix (plus optional labels) as CSV text.

    Floats are written by repr, so the parsed block is bit-identical to
    the input. Used for training shards in transit.
    """
    X = np.asarray(X, dtype=np.float64)
    cols = [f"f{i}" for i in range(X.shape[1])]
    if y is not None:
        cols.append("label")
    out = [",".join(cols)]
    for i in range(X.shape[0]):
        row = [repr(float(v)) for v in X[i]]
        if y is not None:
            row.append(str(int(y[i])))
        out.append(",".join(row))
    return "\n".join(out) + "\n"


def matrix_from_csv_block(text: str) -> tuple[np.ndarray, np.ndarray | None]:
    """Inverse of matrix_to_csv_block."""
    lines = [ln for ln in text.splitlines() if ln]
    if not lines:
        raise MalformedRow(1, "empty block, expected a header")
    header = lines[0].split(",")
    labeled = header and header[-1] == "label"
    width = len(header)
    d = width - 1 if labeled else width
    features, labels = [], []
    for line_number, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != width:
            raise MalformedRow(line_number, f"expected {width} fields, got {len(fields)}")
        features.append([_parse_field(raw, f"f{i}", line_number) for i, raw in enumerate(fields[:d])])
        if labeled:
            labels.append(_parse_int_field(fields[-1], "label", line_number))
    X = np.asarray(features, dtype=np.float64).reshape(len(features), d)
    y = np.asarray(labels, dtype=np.int64) if labeled else None
    return X, y
