"""CSV-backed dataset loading, column typing, and response derivation.

The only input format is CSV with a header row, UTF-8, comma delimiter and
'.' decimal point.  A column is inferred Numeric when every entry parses as
a finite real; otherwise it is Categorical, coded by distinct strings in
first-appearance order.  Empty cells are missing values and a load error.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    EmptyDataset,
    MissingColumn,
    MissingValue,
    NonNumericResponse,
    NonNumericValue,
)


class ColumnKind(enum.Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


# ---------------------------------------------------------------------------
# Per-column similarity rules

@dataclass(frozen=True)
class Equality:
    """Similar iff the stored values are identical (exact float equality)."""


@dataclass(frozen=True)
class RelativeRange:
    """Similar iff |x_ij - x_tj| <= delta * (column range)."""

    delta: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise ConfigError(f"relative similarity delta must be in (0, 1], got {self.delta}")


@dataclass(frozen=True)
class AbsoluteRange:
    """Similar iff |x_ij - x_tj| <= width, in the column's own units."""

    width: float

    def __post_init__(self):
        if not self.width >= 0.0:
            raise ConfigError(f"absolute similarity width must be >= 0, got {self.width}")


SimilarityRule = Union[Equality, RelativeRange, AbsoluteRange]


@dataclass(frozen=True)
class SimilaritySpec:
    """One similarity rule per dataset column, in column order."""

    rules: tuple[SimilarityRule, ...]

    def __post_init__(self):
        for rule in self.rules:
            if not isinstance(rule, (Equality, RelativeRange, AbsoluteRange)):
                raise ConfigError(f"unknown similarity rule {rule!r}")


# ---------------------------------------------------------------------------
# Response modes

@dataclass(frozen=True)
class Raw:
    """Use the response column as-is."""


@dataclass(frozen=True)
class Residual:
    prediction_column: str


@dataclass(frozen=True)
class AbsResidual:
    prediction_column: str


@dataclass(frozen=True)
class SquaredResidual:
    prediction_column: str


ResponseMode = Union[Raw, Residual, AbsResidual, SquaredResidual]


# ---------------------------------------------------------------------------
# Dataset

@dataclass(frozen=True)
class Dataset:
    """Immutable n x d feature matrix plus an n-vector of responses.

    Numeric columns hold the parsed reals; categorical columns hold integer
    codes assigned in first-appearance order, with the original labels kept
    in ``categories``.  Arrays are read-only so the dataset can be shared
    across parallel workers.
    """

    features: np.ndarray
    responses: np.ndarray
    column_names: tuple[str, ...]
    kinds: tuple[ColumnKind, ...]
    categories: tuple[Optional[tuple[str, ...]], ...]
    response_name: str = "y"

    def __post_init__(self):
        feats = np.array(self.features, dtype=float)
        resp = np.array(self.responses, dtype=float)
        if feats.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        n, d = feats.shape
        if n < 1 or d < 1:
            raise EmptyDataset(f"need n >= 1 and d >= 1, got n={n}, d={d}")
        if resp.shape != (n,):
            raise DataError(f"responses must have length {n}, got shape {resp.shape}")
        names = tuple(self.column_names)
        kinds = tuple(self.kinds)
        cats = tuple(tuple(c) if c is not None else None for c in self.categories)
        if not len(names) == len(kinds) == len(cats) == d:
            raise DataError("column metadata length must equal d")
        if not np.all(np.isfinite(feats)):
            raise DataError("features contain non-finite values")
        if not np.all(np.isfinite(resp)):
            raise DataError("responses contain non-finite values")
        feats.setflags(write=False)
        resp.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "responses", resp)
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "categories", cats)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise MissingColumn(name) from None


def _parse_real(cell: str) -> Optional[float]:
    """Parse a finite real, or None if the cell is not numeric."""
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if np.isfinite(value) else None


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyDataset(f"{path}: file is empty")
    header, data = rows[0], rows[1:]
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names in header")
    if not data:
        raise EmptyDataset(f"{path}: no data rows")
    for r, row in enumerate(data):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r} has {len(row)} fields, expected {len(header)}")
        for c, cell in enumerate(row):
            if cell == "":
                raise MissingValue(r, header[c])
    return header, data


def _numeric_column(name: str, cells: list[str], error) -> np.ndarray:
    out = np.empty(len(cells))
    for r, cell in enumerate(cells):
        value = _parse_real(cell)
        if value is None:
            raise error(name, r, cell)
        out[r] = value
    return out


def load_dataset(
    path,
    response_column: str,
    response_mode: ResponseMode = Raw(),
    schema_overrides: Optional[dict[str, ColumnKind]] = None,
) -> Dataset:
    """Load and validate a CSV file into a Dataset.

    The response vector is the raw response column, or its residual against
    the named prediction column (plain, absolute, or squared) depending on
    ``response_mode``.  The response and prediction columns are excluded
    from the feature matrix; feature column order is preserved.
    ``schema_overrides`` maps column names to a ColumnKind and wins over
    type inference.
    """
    header, data = _read_rows(path)
    overrides = dict(schema_overrides or {})
    for name in overrides:
        if name not in header:
            raise MissingColumn(name)

    if response_column not in header:
        raise MissingColumn(response_column)
    pred_column = getattr(response_mode, "prediction_column", None)
    if pred_column is not None and pred_column not in header:
        raise MissingColumn(pred_column)

    columns = {name: [row[i] for row in data] for i, name in enumerate(header)}
    y = _numeric_column(response_column, columns[response_column], NonNumericResponse)
    if pred_column is None:
        responses = y
    else:
        pred = _numeric_column(pred_column, columns[pred_column], NonNumericResponse)
        if isinstance(response_mode, Residual):
            responses = y - pred
        elif isinstance(response_mode, AbsResidual):
            responses = np.abs(y - pred)
        elif isinstance(response_mode, SquaredResidual):
            responses = (y - pred) ** 2
        else:
            raise ConfigError(f"unknown response mode {response_mode!r}")

    feature_names = [c for c in header if c != response_column and c != pred_column]
    if not feature_names:
        raise EmptyDataset(f"{path}: no feature columns besides the response")

    matrix = np.empty((len(data), len(feature_names)))
    kinds: list[ColumnKind] = []
    categories: list[Optional[tuple[str, ...]]] = []
    for j, name in enumerate(feature_names):
        cells = columns[name]
        kind = overrides.get(name)
        if kind is None:
            parsed = [_parse_real(cell) for cell in cells]
            kind = ColumnKind.NUMERIC if all(v is not None for v in parsed) else ColumnKind.CATEGORICAL
        if kind is ColumnKind.NUMERIC:
            matrix[:, j] = _numeric_column(name, cells, NonNumericValue)
            categories.append(None)
        else:
            codes: dict[str, int] = {}
            for r, cell in enumerate(cells):
                matrix[r, j] = codes.setdefault(cell, len(codes))
            categories.append(tuple(codes))
        kinds.append(kind)

    return Dataset(
        features=matrix,
        responses=responses,
        column_names=tuple(feature_names),
        kinds=tuple(kinds),
        categories=tuple(categories),
        response_name=response_column,
    )


def save_dataset(ds: Dataset, path) -> None:
    """Write the dataset back to CSV so that a Raw reload round-trips exactly.

    Numeric cells use the shortest round-trip float representation;
    categorical cells are written as their original labels.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(ds.column_names) + [ds.response_name])
        for i in range(ds.n):
            row = []
            for j, kind in enumerate(ds.kinds):
                if kind is ColumnKind.NUMERIC:
                    row.append(repr(float(ds.features[i, j])))
                else:
                    row.append(ds.categories[j][int(ds.features[i, j])])
            row.append(repr(float(ds.responses[i])))
            writer.writerow(row)


def feature_ranges(ds: Dataset) -> np.ndarray:
    """Per-column range max - min; defined as 0 for categorical columns."""
    ranges = ds.features.max(axis=0) - ds.features.min(axis=0)
    for j, kind in enumerate(ds.kinds):
        if kind is ColumnKind.CATEGORICAL:
            ranges[j] = 0.0
    return ranges


def dataset_summary(ds: Dataset) -> str:
    """Structured text report: n, d, column types and ranges."""
    ranges = feature_ranges(ds)
    width = max(len(name) for name in ds.column_names)
    lines = [f"dataset: n={ds.n} rows, d={ds.d} features, response={ds.response_name}"]
    for j, name in enumerate(ds.column_names):
        if ds.kinds[j] is ColumnKind.NUMERIC:
            detail = f"range={float(ranges[j])!r}"
        else:
            detail = f"levels={len(ds.categories[j])}"
        lines.append(f"  {name.ljust(width)}  {ds.kinds[j].value:<12} {detail}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Similarity specification helpers

def make_similarity_spec(
    ds: Dataset,
    default: SimilarityRule = RelativeRange(0.1),
    overrides: Optional[dict[str, SimilarityRule]] = None,
) -> SimilaritySpec:
    """Build a per-column spec: the default for numeric columns, Equality for
    categorical ones, with explicit per-column overrides winning."""
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(ds.column_names)
    if unknown:
        raise ConfigError(f"similarity override for unknown column(s): {sorted(unknown)}")
    rules = []
    for name, kind in zip(ds.column_names, ds.kinds):
        if name in overrides:
            rule = overrides[name]
        elif kind is ColumnKind.CATEGORICAL:
            rule = Equality()
        else:
            rule = default
        if kind is ColumnKind.CATEGORICAL and not isinstance(rule, Equality):
            raise ConfigError(f"categorical column {name!r} must use the equality rule")
        rules.append(rule)
    return SimilaritySpec(tuple(rules))


def parse_rule(token: str) -> SimilarityRule:
    """Parse a rule token: ``equality``, ``relative:<delta>`` or ``absolute:<width>``."""
    token = token.strip()
    if token == "equality":
        return Equality()
    kind, sep, arg = token.partition(":")
    if sep and kind in ("relative", "absolute"):
        try:
            value = float(arg)
        except ValueError:
            raise ConfigError(f"bad numeric argument in similarity rule {token!r}") from None
        return RelativeRange(value) if kind == "relative" else AbsoluteRange(value)
    raise ConfigError(f"unknown similarity rule {token!r}")


def parse_similarity_config(text: str) -> tuple[Optional[SimilarityRule], dict[str, SimilarityRule]]:
    """Parse the key-value config format (see FORMATS.md).

    Recognized keys: ``similarity.default`` and ``similarity.<column>``.
    Blank lines and lines starting with '#' are ignored.  Returns the
    default rule (None if absent) and the per-column overrides.
    """
    default: Optional[SimilarityRule] = None
    overrides: dict[str, SimilarityRule] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key = key.strip()
        rule = parse_rule(value)
        if key == "similarity.default":
            default = rule
        elif key.startswith("similarity."):
            overrides[key[len("similarity."):]] = rule
        else:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
    return default, overrides
