"""Built-in predictors for tests and demos, plus model spec loading.

Scores are accumulated term by term in schema order (never via a matrix
product), so a row's score is bit-identical no matter which batch it arrives
in; that property underpins the package-wide determinism guarantees.

Linear and logistic models one-hot encode categorical columns against the
schema levels with the first level dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .data import CATEGORICAL, NUMERIC, Dataset, Table
from .errors import ParameterError, SingularError
from .tree import (
    TreeNode,
    fit_dataset_tree,
    node_from_record,
    node_record,
    predict_cart,
)

RIDGE_JITTER = 1e-10


@dataclass(frozen=True)
class LinearTerm:
    column: str
    kind: str  # "numeric" | "level"
    level: str | None
    coef: float


def _term_feature(term: LinearTerm, rows: Table) -> np.ndarray:
    column = rows[term.column]
    if term.kind == "numeric":
        return np.asarray(column, dtype=np.float64)
    return (np.asarray(column) == term.level).astype(np.float64)


class LinearModel:
    """intercept + sum of per-term coefficient * feature, accumulated in order."""

    def __init__(self, intercept: float, terms: list[LinearTerm]):
        self.intercept = float(intercept)
        self.terms = list(terms)

    def score(self, rows: Table) -> np.ndarray:
        n = len(next(iter(rows.values())))
        out = np.full(n, self.intercept, dtype=np.float64)
        for term in self.terms:
            out = out + term.coef * _term_feature(term, rows)
        return out

    def column_kinds(self) -> dict[str, str]:
        return {
            t.column: NUMERIC if t.kind == "numeric" else CATEGORICAL
            for t in self.terms
        }

    def to_doc(self) -> dict:
        return {
            "type": "fitted_linear",
            "intercept": self.intercept,
            "terms": [
                {"column": t.column, "kind": t.kind, "level": t.level, "coef": t.coef}
                for t in self.terms
            ],
        }

    @classmethod
    def from_doc(cls, doc: Mapping) -> "LinearModel":
        terms = [
            LinearTerm(t["column"], t["kind"], t.get("level"), float(t["coef"]))
            for t in doc["terms"]
        ]
        return cls(float(doc["intercept"]), terms)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LogisticModel:
    """Sigmoid over a linear core; probabilities strictly inside (0, 1)."""

    def __init__(self, linear: LinearModel):
        self.linear = linear

    def score(self, rows: Table) -> np.ndarray:
        return _sigmoid(self.linear.score(rows))

    def column_kinds(self) -> dict[str, str]:
        return self.linear.column_kinds()

    def to_doc(self) -> dict:
        doc = self.linear.to_doc()
        doc["type"] = "fitted_logistic"
        return doc

    @classmethod
    def from_doc(cls, doc: Mapping) -> "LogisticModel":
        return cls(LinearModel.from_doc(doc))


class TreeModel:
    """Regression tree over decoded feature columns."""

    def __init__(self, root: TreeNode, kinds: dict[str, str]):
        self.root = root
        self.kinds = kinds

    def score(self, rows: Table) -> np.ndarray:
        n = len(next(iter(rows.values())))
        return predict_cart(self.root, rows, n)

    def column_kinds(self) -> dict[str, str]:
        return dict(self.kinds)

    def to_doc(self) -> dict:
        return {
            "type": "fitted_tree",
            "kinds": self.kinds,
            "root": node_record(self.root),
        }

    @classmethod
    def from_doc(cls, doc: Mapping) -> "TreeModel":
        return cls(node_from_record(doc["root"]), dict(doc["kinds"]))


def _design_terms(data: Dataset) -> list[LinearTerm]:
    terms: list[LinearTerm] = []
    for name in data.feature_names:
        col = data.column(name)
        if col.kind == NUMERIC:
            terms.append(LinearTerm(name, "numeric", None, 0.0))
        else:
            for level in col.levels[1:]:  # drop-first encoding
                terms.append(LinearTerm(name, "level", level, 0.0))
    return terms


def _design_matrix(data: Dataset, terms: list[LinearTerm]) -> np.ndarray:
    rows = data.table()
    columns = [np.ones(data.n_rows, dtype=np.float64)]
    columns.extend(_term_feature(t, rows) for t in terms)
    return np.column_stack(columns)


def fit_linear(data: Dataset) -> LinearModel:
    """Ordinary least squares via normal equations with a ridge jitter.

    Exact collinearity (duplicated columns, redundant dummies) is rejected
    rather than silently shrunk into an arbitrary solution.
    """
    y = data.target_values()
    terms = _design_terms(data)
    X = _design_matrix(data, terms)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise SingularError("design matrix is rank deficient")
    gram = X.T @ X + RIDGE_JITTER * np.eye(X.shape[1])
    beta = np.linalg.solve(gram, X.T @ y)
    fitted = [
        LinearTerm(t.column, t.kind, t.level, float(b))
        for t, b in zip(terms, beta[1:])
    ]
    return LinearModel(float(beta[0]), fitted)


def fit_logistic(
    data: Dataset, iterations: int = 500, learning_rate: float = 0.1
) -> LogisticModel:
    """Full-batch gradient descent on the log loss.

    Features are standardized for the descent (raw scales like incomes make
    the fixed step size diverge); the scaling is folded back into the
    returned coefficients, so scoring stays a plain linear form.
    """
    y = data.target_values()
    if not np.isin(y, (0.0, 1.0)).all():
        raise ParameterError("logistic model needs a binary target", field="data")
    if iterations < 1:
        raise ParameterError("iterations must be positive", field="iterations")
    terms = _design_terms(data)
    X = _design_matrix(data, terms)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    mean[0], scale[0] = 0.0, 1.0  # keep the intercept column as-is
    scale[scale == 0.0] = 1.0
    Z = (X - mean) / scale
    beta = np.zeros(Z.shape[1])
    for _ in range(iterations):
        gradient = Z.T @ (_sigmoid(Z @ beta) - y) / len(y)
        beta -= learning_rate * gradient
    raw = beta / scale
    raw[0] = beta[0] - float(np.sum(beta[1:] * mean[1:] / scale[1:]))
    fitted = [
        LinearTerm(t.column, t.kind, t.level, float(b))
        for t, b in zip(terms, raw[1:])
    ]
    return LogisticModel(LinearModel(float(raw[0]), fitted))


def fit_tree(data: Dataset, max_depth: int = 3, min_leaf: int = 5) -> TreeModel:
    """CART regression tree targeting the ground truth."""
    y = data.target_values()
    root = fit_dataset_tree(data, np.asarray(y, dtype=np.float64), max_depth, min_leaf)
    kinds = {name: data.column(name).kind for name in data.feature_names}
    return TreeModel(root, kinds)


def model_from_doc(doc: Mapping, data: Dataset) -> Any:
    """Build a predictor from a model specification document.

    ``linear``/``logistic``/``tree`` are fitted on the dataset with the
    document's hyperparameters; ``fitted_*`` documents restore an already
    fitted model; ``external`` wraps a subprocess speaking the line protocol.
    """
    kind = doc.get("type")
    if kind == "linear":
        return fit_linear(data)
    if kind == "logistic":
        return fit_logistic(
            data,
            iterations=int(doc.get("iterations", 500)),
            learning_rate=float(doc.get("learning_rate", 0.1)),
        )
    if kind == "tree":
        return fit_tree(
            data,
            max_depth=int(doc.get("max_depth", 3)),
            min_leaf=int(doc.get("min_leaf", 5)),
        )
    if kind == "fitted_linear":
        return LinearModel.from_doc(doc)
    if kind == "fitted_logistic":
        return LogisticModel.from_doc(doc)
    if kind == "fitted_tree":
        return TreeModel.from_doc(doc)
    if kind == "external":
        from .wire import ExternalPredictor

        command = doc.get("command")
        if not isinstance(command, list) or not command:
            raise ParameterError("external model needs a command list", field="command")
        return ExternalPredictor(
            [str(c) for c in command], timeout=float(doc.get("timeout", 10.0))
        )
    raise ParameterError(f"unknown model type {kind!r}", field="type")


def load_model_file(path: str | Path, data: Dataset) -> Any:
    with open(path, "r", encoding="utf-8") as handle:
        return model_from_doc(json.load(handle), data)
