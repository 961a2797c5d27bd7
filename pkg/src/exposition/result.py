"""Uniform explanation results and their canonical JSON encoding.

Every method returns an :class:`Explanation` carrying a long-format result
table, a chart payload, and the parameters that reproduce it. The canonical
encoding is byte-stable: the same explanation always serializes to the same
bytes, which the CLI writes to disk and the dashboard service returns
verbatim.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np


def to_plain(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays into plain Python values."""
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {k: to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    return obj


def canonical_json_bytes(obj: Any) -> bytes:
    """Compact UTF-8 JSON with shortest-round-trip floats; rejects NaN/inf."""
    return json.dumps(
        to_plain(obj), ensure_ascii=False, separators=(",", ":"), allow_nan=False
    ).encode("utf-8")


@dataclass
class ResultTable:
    """Column-oriented long-format table; all columns have equal length."""

    columns: list[str]
    values: list[list]

    def __post_init__(self):
        if len(self.columns) != len(self.values):
            raise ValueError("one value array per column is required")
        lengths = {len(v) for v in self.values}
        if len(lengths) > 1:
            raise ValueError("result table columns must have equal length")

    def column(self, name: str) -> list:
        return self.values[self.columns.index(name)]

    @property
    def n_rows(self) -> int:
        return len(self.values[0]) if self.values else 0


@dataclass
class Explanation:
    """One computed explanation: result table, chart payload, parameters.

    ``meta`` records every parameter that controls the computation (seed,
    sample sizes, grids, the explained instance) so the result can be
    reproduced exactly. ``detail`` holds the method-specific result object
    for in-process use; it is not serialized.
    """

    kind: str
    model_label: str
    result: ResultTable
    chart: dict
    meta: dict
    detail: Any = field(default=None, repr=False, compare=False)

    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "model_label": self.model_label,
            "result": {"columns": self.result.columns, "values": self.result.values},
            "chart": self.chart,
            "meta": self.meta,
        }

    def to_json_bytes(self) -> bytes:
        return canonical_json_bytes(self.to_record())


def explanations_json_bytes(explanations: Sequence[Explanation]) -> bytes:
    """One explanation serializes as an object, several as an array."""
    parts = [e.to_json_bytes() for e in explanations]
    if len(parts) == 1:
        return parts[0]
    return b"[" + b",".join(parts) + b"]"
