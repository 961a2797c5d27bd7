"""The Explainer abstraction: a validated predictor/dataset binding.

A predictor is anything that maps a table slice to one finite score per row:
either a bare callable or an object with a ``score(table)`` method. The
binding is validated once at construction (shape, determinism, score range)
so every downstream method can rely on the contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .data import Dataset, Instance, Table, instances_to_table, table_length
from .errors import (
    DegenerateTargetError,
    NonDeterministicPredictorError,
    ParameterError,
    PredictorContractError,
    RangeError,
    SchemaError,
)
from .result import Explanation, ResultTable
from .sampling import check_seed


class TaskType(str, Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


def _score_function(predictor: Any) -> Callable[[Table], Any]:
    score = getattr(predictor, "score", None)
    if callable(score):
        return score
    if callable(predictor):
        return predictor
    raise ParameterError("predictor must be callable or expose score()", field="predictor")


@dataclass(frozen=True)
class Explainer:
    """Immutable binding of predictor, dataset, label, task type, and seed."""

    predictor: Any
    data: Dataset
    label: str
    task: TaskType
    seed: int

    def score_table(self, table: Table) -> np.ndarray:
        """Score a slice, enforcing the one-finite-score-per-row contract."""
        n = table_length(table)
        if n == 0:
            return np.empty(0, dtype=np.float64)
        raw = _score_function(self.predictor)(table)
        try:
            out = np.asarray(raw, dtype=np.float64)
        except (TypeError, ValueError):
            raise PredictorContractError("predictor output is not numeric") from None
        if out.shape != (n,):
            raise PredictorContractError(
                f"predictor returned shape {out.shape}, expected ({n},)"
            )
        if not np.all(np.isfinite(out)):
            raise PredictorContractError("predictor returned non-finite scores")
        return out

    def score_instances(self, rows: Sequence[Mapping[str, Any]]) -> np.ndarray:
        return self.score_table(instances_to_table(self.data, rows))

    def resolve_seed(self, seed: int | None) -> int:
        return self.seed if seed is None else check_seed(seed)


def _infer_task(y: np.ndarray) -> TaskType:
    if np.isin(y, (0.0, 1.0)).all():
        return TaskType.CLASSIFICATION
    return TaskType.REGRESSION


def new_explainer(
    predictor: Any,
    data: Dataset,
    label: str,
    task: TaskType | str | None = None,
    seed: int = 42,
) -> Explainer:
    """Validate and bind a predictor to a dataset.

    The task type is inferred when absent: classification iff the target
    values are all in {0, 1}. A probe scores the first ``min(10, n)`` rows
    twice and compares the outputs bitwise, so non-deterministic predictors
    are rejected up front rather than corrupting downstream estimates.
    """
    if data.n_rows < 1:
        raise ParameterError("dataset must have at least one row", field="data")
    if not data.feature_names:
        raise ParameterError("dataset needs at least one non-target column", field="data")
    if data.target is None:
        raise ParameterError("dataset must declare a target column", field="data")
    if not label:
        raise ParameterError("label must be non-empty", field="label")
    seed = check_seed(seed)

    y = data.target_values()
    if task is None:
        task = _infer_task(y)
    else:
        task = TaskType(task)
    if task is TaskType.CLASSIFICATION and not np.isin(y, (0.0, 1.0)).all():
        raise ParameterError(
            "classification requires a binary target coded {0, 1}", field="task"
        )

    explainer = Explainer(predictor=predictor, data=data, label=label, task=task, seed=seed)

    probe_rows = min(10, data.n_rows)
    probe = data.table(np.arange(probe_rows))
    first = explainer.score_table(probe)
    second = explainer.score_table(data.table(np.arange(probe_rows)))
    if first.tobytes() != second.tobytes():
        raise NonDeterministicPredictorError(
            "predictor returned different scores for identical rows"
        )
    if task is TaskType.CLASSIFICATION and ((first < 0.0) | (first > 1.0)).any():
        raise RangeError("classification scores must lie in [0, 1]")
    return explainer


def predict_batch(explainer: Explainer, rows: Sequence[Mapping[str, Any]]) -> np.ndarray:
    """Score schema-conformant rows; an empty slice yields an empty array."""
    if len(rows) == 0:
        return np.empty(0, dtype=np.float64)
    return explainer.score_instances(rows)


# ---------------------------------------------------------------------------
# Scoring metrics shared with the model-level methods.


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties replaced by the mean rank of the tie group."""
    sorter = np.argsort(x, kind="stable")
    inv = np.empty(len(x), dtype=np.int64)
    inv[sorter] = np.arange(len(x))
    sx = x[sorter]
    uniq, first = np.unique(sx, return_index=True)
    counts = np.diff(np.append(first, len(sx)))
    avg = first + (counts + 1) / 2.0
    ranks_sorted = avg[np.searchsorted(uniq, sx)]
    return ranks_sorted[inv]


def auc_score(y: np.ndarray, scores: np.ndarray) -> float:
    """Area under the ROC curve via the rank statistic (average-rank ties)."""
    pos = int(np.sum(y == 1.0))
    neg = int(np.sum(y == 0.0))
    if pos == 0 or neg == 0:
        raise DegenerateTargetError("AUC needs both classes in the target")
    ranks = average_ranks(scores)
    rank_sum = float(np.sum(ranks[y == 1.0]))
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg)


def rmse_score(y: np.ndarray, scores: np.ndarray) -> float:
    return float(np.sqrt(np.mean((y - scores) ** 2)))


def _r_squared(y: np.ndarray, scores: np.ndarray) -> float:
    sse = float(np.sum((y - scores) ** 2))
    sst = float(np.sum((y - np.mean(y)) ** 2))
    if sst == 0.0:
        return 1.0 if sse == 0.0 else 0.0
    return 1.0 - sse / sst


def model_performance(explainer: Explainer) -> Explanation:
    """Task-appropriate goodness-of-fit metrics over the full dataset.

    Regression reports MSE, RMSE, MAE, and R^2. Classification thresholds
    scores at 0.5 and reports accuracy, precision, recall, F1, and AUC;
    precision/recall/F1 fall back to 0 when their denominator is empty.
    """
    y = explainer.data.target_values()
    scores = explainer.score_table(explainer.data.table())

    if explainer.task is TaskType.REGRESSION:
        mse = float(np.mean((y - scores) ** 2))
        metrics = {
            "mse": mse,
            "rmse": math.sqrt(mse),
            "mae": float(np.mean(np.abs(y - scores))),
            "r2": _r_squared(y, scores),
        }
    else:
        if len(np.unique(y)) < 2:
            raise DegenerateTargetError("classification target has a single class")
        predicted = scores >= 0.5
        actual = y == 1.0
        tp = int(np.sum(predicted & actual))
        fp = int(np.sum(predicted & ~actual))
        fn = int(np.sum(~predicted & actual))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        metrics = {
            "accuracy": float(np.mean(predicted == actual)),
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "auc": auc_score(y, scores),
        }

    names = list(metrics)
    return Explanation(
        kind="performance",
        model_label=explainer.label,
        result=ResultTable(["metric", "value"], [names, [metrics[m] for m in names]]),
        chart={
            "type": "performance",
            "task": explainer.task.value,
            "metrics": [{"name": m, "value": metrics[m]} for m in names],
        },
        meta={"cutoff": 0.5} if explainer.task is TaskType.CLASSIFICATION else {},
        detail=metrics,
    )
