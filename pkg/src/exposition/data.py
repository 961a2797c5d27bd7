"""Tabular data model: typed columns, immutable datasets, CSV loading.

Numeric columns are stored as 64-bit floats, categorical columns as integer
indices into a sorted level table. Predictors never see the indices: every
slice handed to a predictor carries numeric values as ``float64`` arrays and
categorical values as arrays of level strings.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    LevelError,
    MissingValueError,
    ParameterError,
    ParseError,
    SchemaError,
)

NUMERIC = "numeric"
CATEGORICAL = "categorical"

#: A table slice as seen by predictors: column name -> one value per row.
Table = dict[str, np.ndarray]

#: One observation: column name -> float (numeric) or level string (categorical).
Instance = dict[str, Any]


@dataclass(frozen=True)
class ColumnSchema:
    """Name, kind, and (for categorical columns) the ordered level table."""

    name: str
    kind: str
    levels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"unknown column kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if not self.levels:
                raise SchemaError(f"categorical column {self.name!r} has no levels")
            if list(self.levels) != sorted(set(self.levels)):
                raise SchemaError(
                    f"levels of {self.name!r} must be unique and sorted"
                )
        elif self.levels:
            raise SchemaError(f"numeric column {self.name!r} cannot carry levels")


class Dataset:
    """Immutable rectangular data with an optional target column."""

    def __init__(
        self,
        schema: Sequence[ColumnSchema],
        columns: Mapping[str, np.ndarray],
        target: str | None = None,
    ):
        names = [c.name for c in schema]
        if len(set(names)) != len(names):
            raise SchemaError("column names must be unique")
        if set(columns) != set(names):
            raise SchemaError("columns do not match the schema")
        if target is not None and target not in names:
            raise SchemaError(f"target column {target!r} does not exist")

        lengths = {len(columns[n]) for n in names} or {0}
        if len(lengths) > 1:
            raise SchemaError("all columns must have the same number of rows")
        self.n_rows = lengths.pop()

        stored: dict[str, np.ndarray] = {}
        for col in schema:
            arr = np.asarray(columns[col.name])
            if col.kind == NUMERIC:
                arr = arr.astype(np.float64)
                if arr.size and not np.all(np.isfinite(arr)):
                    raise SchemaError(
                        f"numeric column {col.name!r} contains non-finite values"
                    )
            else:
                arr = arr.astype(np.int64)
                if arr.size and (arr.min() < 0 or arr.max() >= len(col.levels)):
                    raise SchemaError(
                        f"categorical column {col.name!r} has out-of-range level indices"
                    )
            arr.flags.writeable = False
            stored[col.name] = arr

        self.schema = tuple(schema)
        self.target = target
        self._columns = stored
        self._by_name = {c.name: c for c in self.schema}

    @property
    def feature_names(self) -> list[str]:
        """Non-target column names, in schema order."""
        return [c.name for c in self.schema if c.name != self.target]

    def column(self, name: str) -> ColumnSchema:
        try:
            return self._by_name[name]
        except KeyError:
            raise SchemaError(f"unknown column {name!r}") from None

    def encoded(self, name: str) -> np.ndarray:
        """Stored representation: float64, or int64 level indices. Read-only."""
        self.column(name)
        return self._columns[name]

    def decoded(self, name: str) -> np.ndarray:
        """A fresh array of raw values: floats, or level strings (object dtype)."""
        col = self.column(name)
        arr = self._columns[name]
        if col.kind == NUMERIC:
            return arr.copy()
        levels = np.array(col.levels, dtype=object)
        return levels[arr]

    def table(self, rows: Sequence[int] | np.ndarray | None = None) -> Table:
        """A decoded slice of the feature columns; always fresh arrays."""
        out: Table = {}
        for name in self.feature_names:
            arr = self.decoded(name)
            out[name] = arr if rows is None else arr[np.asarray(rows)]
        return out

    def row_instance(self, row: int) -> Instance:
        """Raw values of one row's feature columns."""
        if not 0 <= row < self.n_rows:
            raise ParameterError(f"row {row} out of range", field="instance")
        inst: Instance = {}
        for name in self.feature_names:
            col = self.column(name)
            if col.kind == NUMERIC:
                inst[name] = float(self._columns[name][row])
            else:
                inst[name] = col.levels[self._columns[name][row]]
        return inst

    def target_values(self) -> np.ndarray:
        if self.target is None:
            raise SchemaError("dataset has no target column")
        col = self.column(self.target)
        if col.kind != NUMERIC:
            raise SchemaError("target column must be numeric")
        return self._columns[self.target]


def _is_numeric_cell(cell: str) -> bool:
    # Decimal literals only: float() also accepts "nan", "inf" and "1_0".
    if "_" in cell:
        return False
    try:
        return math.isfinite(float(cell))
    except ValueError:
        return False


def load_dataset(csv_text: str | io.TextIOBase, target: str | None = None) -> Dataset:
    """Parse RFC-4180-style CSV with a mandatory header row.

    Column kinds are inferred: a column is numeric iff every cell parses as a
    finite decimal number, otherwise categorical with levels sorted
    lexicographically. Empty cells are rejected rather than imputed.
    """
    stream = io.StringIO(csv_text) if isinstance(csv_text, str) else csv_text
    try:
        rows = list(csv.reader(stream))
    except csv.Error as exc:
        raise ParseError(f"malformed CSV: {exc}") from exc
    while rows and rows[-1] == []:
        rows.pop()
    if not rows:
        raise ParseError("empty input: a header row is required")

    header = rows[0]
    if any(name == "" for name in header):
        raise SchemaError("empty column name in header")
    if len(set(header)) != len(header):
        raise SchemaError("duplicate column name in header")
    if target is not None and target not in header:
        raise SchemaError(f"target column {target!r} does not exist")

    body = rows[1:]
    width = len(header)
    for i, row in enumerate(body):
        if len(row) != width:
            raise ParseError(f"row {i + 1} has {len(row)} cells, expected {width}")
        for name, cell in zip(header, row):
            if cell == "":
                raise MissingValueError(f"empty cell in column {name!r}, row {i + 1}")

    schema: list[ColumnSchema] = []
    columns: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        cells = [row[j] for row in body]
        if all(_is_numeric_cell(c) for c in cells):
            schema.append(ColumnSchema(name, NUMERIC))
            columns[name] = np.array([float(c) for c in cells], dtype=np.float64)
        else:
            levels = tuple(sorted(set(cells)))
            index = {lvl: i for i, lvl in enumerate(levels)}
            schema.append(ColumnSchema(name, CATEGORICAL, levels))
            columns[name] = np.array([index[c] for c in cells], dtype=np.int64)
    return Dataset(schema, columns, target=target)


def from_columns(
    columns: Mapping[str, Sequence[Any]], target: str | None = None
) -> Dataset:
    """Build a dataset from in-memory columns, inferring kinds from value types."""
    schema: list[ColumnSchema] = []
    stored: dict[str, np.ndarray] = {}
    for name, values in columns.items():
        values = list(values)
        if all(isinstance(v, str) for v in values) and values:
            levels = tuple(sorted(set(values)))
            index = {lvl: i for i, lvl in enumerate(levels)}
            schema.append(ColumnSchema(name, CATEGORICAL, levels))
            stored[name] = np.array([index[v] for v in values], dtype=np.int64)
        else:
            schema.append(ColumnSchema(name, NUMERIC))
            stored[name] = np.asarray(values, dtype=np.float64)
    return Dataset(schema, stored, target=target)


def validate_instance(data: Dataset, instance: Mapping[str, Any]) -> Instance:
    """Check one observation against the schema and normalize its values."""
    extra = set(instance) - set(data.feature_names)
    if extra:
        raise SchemaError(f"instance has unknown columns: {sorted(extra)}")
    out: Instance = {}
    for name in data.feature_names:
        if name not in instance:
            raise SchemaError(f"instance is missing column {name!r}")
        col = data.column(name)
        value = instance[name]
        if col.kind == NUMERIC:
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise SchemaError(f"column {name!r} expects a number") from None
            if not math.isfinite(value):
                raise ParameterError(f"column {name!r} must be finite", field=name)
        else:
            if not isinstance(value, str):
                raise SchemaError(f"column {name!r} expects a level string")
            if value not in col.levels:
                raise LevelError(f"unknown level {value!r} for column {name!r}")
        out[name] = value
    return out


def instances_to_table(data: Dataset, rows: Sequence[Mapping[str, Any]]) -> Table:
    """Convert a sequence of observations into a predictor-facing slice."""
    normalized = [validate_instance(data, r) for r in rows]
    table: Table = {}
    for name in data.feature_names:
        col = data.column(name)
        if col.kind == NUMERIC:
            table[name] = np.array([r[name] for r in normalized], dtype=np.float64)
        else:
            table[name] = np.array([r[name] for r in normalized], dtype=object)
    return table


def instance_to_table(data: Dataset, instance: Mapping[str, Any]) -> Table:
    return instances_to_table(data, [instance])


def table_length(table: Table) -> int:
    for arr in table.values():
        return len(arr)
    return 0


def fill_column(template: np.ndarray, value: Any) -> np.ndarray:
    """A column of ``len(template)`` copies of ``value`` with matching dtype."""
    if template.dtype == object:
        return np.full(len(template), value, dtype=object)
    return np.full(len(template), float(value), dtype=np.float64)
