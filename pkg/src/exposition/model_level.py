"""Dataset-level explanations: importance, profiles, residuals, surrogate.

Permutation importance and the profile methods operate on seeded row
samples; every permutation comes from a substream keyed by (column index,
repetition), so per-variable work can be scheduled in any order without
changing results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import CATEGORICAL, NUMERIC, Dataset, Table, fill_column
from .errors import ParameterError
from .explainer import Explainer, TaskType, auc_score, rmse_score
from .result import Explanation, ResultTable
from .sampling import (
    STREAM_COLUMN_PERMUTATION,
    STREAM_IMPORTANCE_ROWS,
    STREAM_JOINT_PERMUTATION,
    STREAM_PROFILE_ROWS,
    permutation,
    sample_rows,
)
from .local import grid_for_variable
from .tree import (
    TreeNode,
    fit_dataset_tree,
    flatten_nodes,
    node_record,
    predict_cart,
    tree_depth,
)

FULL_MODEL_ROW = "_full_model_"
BASELINE_ROW = "_baseline_"

LOSS_BY_TASK = {
    TaskType.REGRESSION: "rmse",
    TaskType.CLASSIFICATION: "one_minus_auc",
}


def _loss_function(name: str):
    if name == "rmse":
        return rmse_score
    if name == "one_minus_auc":
        return lambda y, s: 1.0 - auc_score(y, s)
    raise ParameterError(f"unknown loss {name!r}", field="loss")


@dataclass
class ImportanceRow:
    variable: str
    mean_loss: float
    dropout: list[float]
    importance: float


@dataclass
class ImportanceResult:
    rows: list[ImportanceRow]
    loss: str
    mode: str
    baseline_loss: float


def permutation_importance(
    explainer: Explainer,
    loss: str | None = None,
    mode: str = "difference",
    B: int = 10,
    sample_size: int = 1000,
    seed: int | None = None,
) -> Explanation:
    """Loss increase when one column is permuted, averaged over repetitions.

    ``difference`` importance is the mean of per-repetition loss deltas, so a
    column the predictor ignores scores exactly zero. The ``_full_model_``
    row carries the unpermuted loss; ``_baseline_`` jointly permutes all
    explanatory columns with a shared permutation per repetition.
    """
    if B < 1:
        raise ParameterError("B must be at least 1", field="b")
    if mode not in ("raw", "difference", "ratio"):
        raise ParameterError(f"unknown mode {mode!r}", field="mode")
    if loss is None:
        loss = LOSS_BY_TASK[explainer.task]
    elif loss != LOSS_BY_TASK[explainer.task]:
        raise ParameterError(
            f"loss {loss!r} does not match task {explainer.task.value!r}", field="loss"
        )
    loss_fn = _loss_function(loss)
    seed = explainer.resolve_seed(seed)

    data = explainer.data
    idx = sample_rows(seed, STREAM_IMPORTANCE_ROWS, data.n_rows, sample_size)
    sample = data.table(idx)
    y = data.target_values()[idx]
    m = len(idx)
    baseline_loss = loss_fn(y, explainer.score_table(sample))

    def importance(dropout: list[float]) -> tuple[float, float]:
        mean_loss = math.fsum(dropout) / len(dropout)
        if mode == "raw":
            return mean_loss, mean_loss
        if mode == "difference":
            return mean_loss, math.fsum(d - baseline_loss for d in dropout) / len(dropout)
        return mean_loss, mean_loss / baseline_loss

    names = data.feature_names
    variable_rows: list[ImportanceRow] = []
    for j, name in enumerate(names):
        dropout = []
        for b in range(B):
            perm = permutation(seed, STREAM_COLUMN_PERMUTATION, m, j, b)
            shuffled = dict(sample)
            shuffled[name] = sample[name][perm]
            dropout.append(loss_fn(y, explainer.score_table(shuffled)))
        mean_loss, value = importance(dropout)
        variable_rows.append(ImportanceRow(name, mean_loss, dropout, value))

    joint_dropout = []
    for b in range(B):
        perm = permutation(seed, STREAM_JOINT_PERMUTATION, m, b)
        shuffled = {name: sample[name][perm] for name in names}
        joint_dropout.append(loss_fn(y, explainer.score_table(shuffled)))
    joint_mean, joint_value = importance(joint_dropout)

    order = sorted(
        range(len(names)), key=lambda j: (-variable_rows[j].mean_loss, j)
    )
    full_model = ImportanceRow(
        FULL_MODEL_ROW,
        baseline_loss,
        [baseline_loss] * B,
        {"raw": baseline_loss, "difference": 0.0, "ratio": 1.0}[mode],
    )
    rows = [full_model] + [variable_rows[j] for j in order]
    rows.append(ImportanceRow(BASELINE_ROW, joint_mean, joint_dropout, joint_value))

    detail = ImportanceResult(rows=rows, loss=loss, mode=mode, baseline_loss=baseline_loss)
    result = ResultTable(
        ["variable", "mean_loss_after_permutation", "dropout_values", "importance"],
        [
            [r.variable for r in rows],
            [r.mean_loss for r in rows],
            [list(r.dropout) for r in rows],
            [r.importance for r in rows],
        ],
    )
    chart = {
        "type": "importance",
        "loss": loss,
        "mode": mode,
        "full_model_loss": baseline_loss,
        "bars": [
            {
                "variable": r.variable,
                "mean_loss": r.mean_loss,
                "importance": r.importance,
                "dropout": list(r.dropout),
            }
            for r in rows
            if r.variable not in (FULL_MODEL_ROW, BASELINE_ROW)
        ],
        "baseline": {
            "mean_loss": joint_mean,
            "importance": joint_value,
            "dropout": list(joint_dropout),
        },
    }
    meta = {
        "seed": seed,
        "loss": loss,
        "mode": mode,
        "b": B,
        "sample_size": sample_size,
        "sample_rows": m,
    }
    return Explanation("importance", explainer.label, result, chart, meta, detail=detail)


@dataclass
class PdpPanel:
    variable: str
    grid: list
    values: list[float]


@dataclass
class IcePanel:
    variable: str
    grid: list
    row_ids: list[int]
    curves: list[list[float]]
    centered: bool


@dataclass
class AlePanel:
    variable: str
    grid: list[float]
    values: list[float]
    weights: list[int]


def _profile_matrix(
    explainer: Explainer, sample: Table, variable: str, grid: Sequence
) -> np.ndarray:
    """Row x grid-point prediction matrix for one swept variable."""
    m = len(next(iter(sample.values())))
    matrix = np.empty((m, len(grid)), dtype=np.float64)
    for g, value in enumerate(grid):
        swept = dict(sample)
        swept[variable] = fill_column(sample[variable], value)
        matrix[:, g] = explainer.score_table(swept)
    return matrix


def _ale_panel(
    explainer: Explainer, sample: Table, variable: str, grid_size: int
) -> AlePanel:
    values = np.asarray(sample[variable], dtype=np.float64)
    edges = np.unique(np.quantile(values, np.linspace(0.0, 1.0, grid_size)))
    if len(edges) < 2:
        return AlePanel(variable, [float(edges[0])], [0.0], [int(len(values))])

    def assign(e: np.ndarray) -> np.ndarray:
        # Right-closed bins; the first bin also takes its left edge.
        return np.clip(np.searchsorted(e, values, side="left") - 1, 0, len(e) - 2)

    bins = assign(edges)
    # Merge empty bins into their left neighbour by dropping the shared edge.
    while True:
        counts = np.bincount(bins, minlength=len(edges) - 1)
        empty = np.nonzero(counts == 0)[0]
        if len(empty) == 0:
            break
        edges = np.delete(edges, empty[0])  # empty bin k loses its left edge k
        bins = assign(edges)

    counts = np.bincount(bins, minlength=len(edges) - 1)
    deltas = []
    for k in range(len(edges) - 1):
        members = np.nonzero(bins == k)[0]
        lo = dict(sample)
        hi = dict(sample)
        for name, arr in sample.items():
            lo[name] = arr[members]
            hi[name] = arr[members]
        lo[variable] = np.full(len(members), float(edges[k]), dtype=np.float64)
        hi[variable] = np.full(len(members), float(edges[k + 1]), dtype=np.float64)
        deltas.append(float(np.mean(explainer.score_table(hi) - explainer.score_table(lo))))

    accumulated = [0.0]
    for d in deltas:
        accumulated.append(accumulated[-1] + d)
    accumulated = np.asarray(accumulated)
    # Center so the curve has sample-weighted mean zero (weights = bin counts
    # attached to each bin's right edge).
    center = float(np.dot(counts, accumulated[1:]) / len(values))
    centered = accumulated - center
    return AlePanel(
        variable,
        [float(e) for e in edges],
        [float(v) for v in centered],
        [0] + [int(c) for c in counts],
    )


def model_profile(
    explainer: Explainer,
    kind: str = "pdp",
    variables: Sequence[str] | None = None,
    grid_size: int = 51,
    sample_size: int = 100,
    center_ice: bool = True,
    seed: int | None = None,
    spacing: str = "quantile",
) -> Explanation:
    """Aggregated profiles over a seeded row sample.

    ``pdp`` is the mean of the sample's what-if curves per grid point; ``ice``
    returns the individual curves (shifted to zero at the first grid point
    when centered); ``ale`` accumulates mean local prediction differences
    across quantile bins of the sampled values and centers the curve to
    sample-weighted mean zero. Empty ALE bins merge into their left
    neighbour.
    """
    if kind not in ("pdp", "ale", "ice"):
        raise ParameterError(f"unknown profile kind {kind!r}", field="profile_kind")
    seed = explainer.resolve_seed(seed)
    data = explainer.data
    names = data.feature_names

    if variables is None:
        if kind == "ale":
            variables = [n for n in names if data.column(n).kind == NUMERIC]
            if not variables:
                raise ParameterError("no numeric variables for ale", field="variables")
        else:
            variables = list(names)
    else:
        unknown = [v for v in variables if v not in names]
        if unknown:
            raise ParameterError(f"unknown variables: {unknown}", field="variables")
        if kind == "ale":
            non_numeric = [
                v for v in variables if data.column(v).kind == CATEGORICAL
            ]
            if non_numeric:
                raise ParameterError(
                    f"ale requires numeric variables, got {non_numeric}",
                    field="variables",
                )
        variables = list(variables)

    idx = sample_rows(seed, STREAM_PROFILE_ROWS, data.n_rows, sample_size)
    sample = data.table(idx)
    row_ids = [int(i) for i in idx]

    panels: list = []
    if kind == "ale":
        for name in variables:
            panels.append(_ale_panel(explainer, sample, name, grid_size))
    else:
        for name in variables:
            grid = grid_for_variable(data, name, grid_size, spacing)
            grid = list(grid)
            matrix = _profile_matrix(explainer, sample, name, grid)
            if kind == "pdp":
                values = np.mean(matrix, axis=0)
                panels.append(PdpPanel(name, grid, [float(v) for v in values]))
            else:
                curves = matrix - matrix[:, [0]] if center_ice else matrix
                panels.append(
                    IcePanel(
                        name,
                        grid,
                        row_ids,
                        [[float(v) for v in row] for row in curves],
                        centered=center_ice,
                    )
                )

    if kind == "ice":
        var_col, id_col, grid_col, value_col = [], [], [], []
        for panel in panels:
            for rid, curve in zip(panel.row_ids, panel.curves):
                var_col.extend([panel.variable] * len(panel.grid))
                id_col.extend([rid] * len(panel.grid))
                grid_col.extend(panel.grid)
                value_col.extend(curve)
        result = ResultTable(
            ["variable", "row_id", "grid", "value"],
            [var_col, id_col, grid_col, value_col],
        )
    elif kind == "ale":
        var_col, grid_col, value_col, weight_col = [], [], [], []
        for panel in panels:
            var_col.extend([panel.variable] * len(panel.grid))
            grid_col.extend(panel.grid)
            value_col.extend(panel.values)
            weight_col.extend(panel.weights)
        result = ResultTable(
            ["variable", "grid", "value", "weight"],
            [var_col, grid_col, value_col, weight_col],
        )
    else:
        var_col, grid_col, value_col = [], [], []
        for panel in panels:
            var_col.extend([panel.variable] * len(panel.grid))
            grid_col.extend(panel.grid)
            value_col.extend(panel.values)
        result = ResultTable(
            ["variable", "grid", "value"], [var_col, grid_col, value_col]
        )

    chart_panels = []
    for panel in panels:
        entry: dict = {"variable": panel.variable, "x": panel.grid}
        if kind == "ice":
            entry["curves"] = [
                {"row_id": rid, "y": curve}
                for rid, curve in zip(panel.row_ids, panel.curves)
            ]
            entry["centered"] = panel.centered
        elif kind == "ale":
            entry["y"] = panel.values
            entry["weights"] = panel.weights
        else:
            entry["y"] = panel.values
        chart_panels.append(entry)

    meta = {
        "seed": seed,
        "profile_kind": kind,
        "variables": list(variables),
        "grid_size": grid_size,
        "spacing": spacing,
        "sample_size": sample_size,
        "sample_rows": len(row_ids),
        "center_ice": center_ice if kind == "ice" else None,
    }
    chart = {"type": "profile", "profile_kind": kind, "panels": chart_panels}
    return Explanation("profile", explainer.label, result, chart, meta, detail=panels)


@dataclass
class ResidualRow:
    row_id: int
    y: float
    y_hat: float
    residual: float
    abs_residual: float


def residual_diagnostics(explainer: Explainer) -> Explanation:
    """Per-row residuals over the full dataset, largest misses first."""
    y = explainer.data.target_values()
    scores = explainer.score_table(explainer.data.table())
    residual = y - scores
    abs_residual = np.abs(residual)
    ids = np.arange(explainer.data.n_rows)
    order = np.lexsort((ids, -abs_residual))

    rows = [
        ResidualRow(
            int(ids[i]),
            float(y[i]),
            float(scores[i]),
            float(residual[i]),
            float(abs_residual[i]),
        )
        for i in order
    ]
    result = ResultTable(
        ["row_id", "y", "y_hat", "residual", "abs_residual"],
        [
            [r.row_id for r in rows],
            [r.y for r in rows],
            [r.y_hat for r in rows],
            [r.residual for r in rows],
            [r.abs_residual for r in rows],
        ],
    )
    counts, edges = np.histogram(residual, bins=20)
    chart = {
        "type": "residuals",
        "points": {
            "row_id": [r.row_id for r in rows],
            "y_hat": [r.y_hat for r in rows],
            "residual": [r.residual for r in rows],
        },
        "histogram": {
            "edges": [float(e) for e in edges],
            "counts": [int(c) for c in counts],
        },
    }
    return Explanation("residuals", explainer.label, result, chart, {}, detail=rows)


@dataclass
class SurrogateTree:
    root: TreeNode
    fidelity: float
    max_depth: int
    min_leaf: int


def _fidelity(target: np.ndarray, predicted: np.ndarray) -> float:
    sse = float(np.sum((target - predicted) ** 2))
    sst = float(np.sum((target - np.mean(target)) ** 2))
    if sst == 0.0:
        return 1.0 if sse == 0.0 else 0.0
    return 1.0 - sse / sst


def fit_surrogate_tree(
    explainer: Explainer, max_depth: int = 3, min_leaf: int = 5
) -> Explanation:
    """Shallow regression tree that mimics the black box's own predictions.

    The tree is fitted to (X, f(X)), not to the ground truth: fidelity
    measures how well the surrogate reproduces the model, reported as R^2
    over the training rows (1.0 by convention when f(X) is constant and the
    tree matches it).
    """
    data = explainer.data
    if data.n_rows < 2 * min_leaf:
        raise ParameterError(
            f"need at least {2 * min_leaf} rows for min_leaf={min_leaf}",
            field="min_leaf",
        )
    black_box = explainer.score_table(data.table())
    root = fit_dataset_tree(data, black_box, max_depth, min_leaf)
    mimic = predict_cart(root, data.table(), data.n_rows)
    fidelity = _fidelity(black_box, mimic)

    detail = SurrogateTree(root, fidelity, max_depth, min_leaf)
    flat = flatten_nodes(root)
    result = ResultTable(
        ["node_id", "depth", "type", "variable", "threshold", "levels", "value", "n"],
        [
            [r["node_id"] for r in flat],
            [r["depth"] for r in flat],
            [r["type"] for r in flat],
            [r["variable"] for r in flat],
            [r["threshold"] for r in flat],
            [r["levels"] for r in flat],
            [r["value"] for r in flat],
            [r["n"] for r in flat],
        ],
    )
    chart = {
        "type": "tree",
        "max_depth": max_depth,
        "depth": tree_depth(root),
        "fidelity": fidelity,
        "root": node_record(root),
    }
    meta = {"max_depth": max_depth, "min_leaf": min_leaf}
    return Explanation("surrogate", explainer.label, result, chart, meta, detail=detail)
