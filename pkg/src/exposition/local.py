"""Local explanations for a single observation.

Break-down attributions fix instance values one variable at a time over a
background sample and report the change in mean prediction at each step, so
the contributions telescope: intercept + sum of contributions equals the
instance prediction. Shapley values average those step contributions over
random variable orderings (or all of them in full-enumeration mode).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .data import (
    CATEGORICAL,
    NUMERIC,
    Dataset,
    Instance,
    Table,
    fill_column,
    instance_to_table,
    validate_instance,
)
from .errors import ParameterError, SchemaError
from .explainer import Explainer
from .result import Explanation, ResultTable
from .sampling import STREAM_BACKGROUND, STREAM_ORDERING, permutation, sample_rows

FULL_ENUMERATION_MAX_VARIABLES = 8


@dataclass
class AttributionResult:
    """Per-variable additive contributions in display order."""

    variables: list[str]
    rendered_values: list[str]
    contributions: list[float]
    cumulative: list[float]
    signs: list[str]
    intercept: float
    prediction: float
    samples: dict[str, list[float]] | None = None


@dataclass
class ProfilePanel:
    """One variable's what-if curve around the explained instance."""

    variable: str
    kind: str
    grid: list
    predictions: list[float]
    anchor_value: Any
    anchor_prediction: float


def grid_for_variable(
    data: Dataset, variable: str, grid_size: int = 51, spacing: str = "quantile"
) -> np.ndarray | list[str]:
    """Evaluation grid for one variable.

    Numeric grids place ``grid_size`` points at equally spaced probabilities
    using the linear-interpolation empirical quantile (or uniformly between
    min and max with ``spacing="uniform"``), then deduplicate; categorical
    grids are the schema's level table.
    """
    col = data.column(variable)
    if col.kind == CATEGORICAL:
        return list(col.levels)
    if grid_size < 2:
        raise ParameterError("grid_size must be at least 2", field="grid_size")
    if spacing not in ("quantile", "uniform"):
        raise ParameterError(f"unknown spacing {spacing!r}", field="spacing")
    values = data.encoded(variable)
    if spacing == "quantile":
        points = np.quantile(values, np.linspace(0.0, 1.0, grid_size))
    else:
        points = np.linspace(float(values.min()), float(values.max()), grid_size)
    return np.unique(points)


def _sign(x: float) -> str:
    if x > 0:
        return "+"
    if x < 0:
        return "-"
    return "0"


def _render(value: Any) -> str:
    return value if isinstance(value, str) else str(float(value))


def _mean_score(explainer: Explainer, table: Table) -> float:
    return float(np.mean(explainer.score_table(table)))


def _background(explainer: Explainer, background_size: int, seed: int) -> tuple[Table, int]:
    if background_size < 1:
        raise ParameterError("background_size must be at least 1", field="background_size")
    idx = sample_rows(seed, STREAM_BACKGROUND, explainer.data.n_rows, background_size)
    return explainer.data.table(idx), len(idx)


def _step_contributions(
    explainer: Explainer,
    background: Table,
    intercept: float,
    order: Sequence[str],
    instance: Instance,
) -> list[float]:
    """Mean-prediction deltas from fixing instance values in ``order``."""
    current = {name: arr.copy() for name, arr in background.items()}
    contributions = []
    previous = intercept
    for name in order:
        current[name] = fill_column(background[name], instance[name])
        mean_now = _mean_score(explainer, current)
        contributions.append(mean_now - previous)
        previous = mean_now
    return contributions


def _instance_prediction(explainer: Explainer, instance: Instance) -> float:
    return float(explainer.score_table(instance_to_table(explainer.data, instance))[0])


def _default_order(
    explainer: Explainer, background: Table, intercept: float, instance: Instance
) -> list[str]:
    """Variables by descending absolute single-variable effect, ties by schema order."""
    names = explainer.data.feature_names
    effects = []
    for name in names:
        table = dict(background)
        table[name] = fill_column(background[name], instance[name])
        effects.append(abs(_mean_score(explainer, table) - intercept))
    ranked = sorted(range(len(names)), key=lambda j: (-effects[j], j))
    return [names[j] for j in ranked]


def _check_order(data: Dataset, order: Sequence[str]) -> list[str]:
    names = data.feature_names
    unknown = [v for v in order if v not in names]
    if unknown:
        raise SchemaError(f"order references unknown variables: {unknown}")
    if len(set(order)) != len(order) or len(order) != len(names):
        raise SchemaError("order must list every explanatory variable exactly once")
    return list(order)


def _attribution_explanation(
    kind: str,
    explainer: Explainer,
    detail: AttributionResult,
    meta: dict,
    bars_extra: Mapping[str, list] | None = None,
) -> Explanation:
    bars = []
    for i, name in enumerate(detail.variables):
        bar = {
            "variable": name,
            "label": f"{name} = {detail.rendered_values[i]}",
            "contribution": detail.contributions[i],
            "cumulative": detail.cumulative[i],
            "sign": detail.signs[i],
        }
        if bars_extra:
            for key, column in bars_extra.items():
                bar[key] = column[i]
        bars.append(bar)
    chart = {
        "type": kind,
        "intercept": detail.intercept,
        "prediction": detail.prediction,
        "bars": bars,
    }
    result = ResultTable(
        ["variable", "variable_value", "contribution", "cumulative", "sign"],
        [
            detail.variables,
            detail.rendered_values,
            detail.contributions,
            detail.cumulative,
            detail.signs,
        ],
    )
    return Explanation(
        kind=kind,
        model_label=explainer.label,
        result=result,
        chart=chart,
        meta=meta,
        detail=detail,
    )


def break_down(
    explainer: Explainer,
    instance: Mapping[str, Any],
    order: Sequence[str] | None = None,
    background_size: int = 100,
    seed: int | None = None,
) -> Explanation:
    """Sequential additive attributions for one observation.

    Without an explicit ``order``, variables are fixed by descending absolute
    single-variable effect on the background mean, ties broken by column
    order. Contributions telescope, so additivity holds by construction.
    """
    instance = validate_instance(explainer.data, instance)
    seed = explainer.resolve_seed(seed)
    background, rows_used = _background(explainer, background_size, seed)
    intercept = _mean_score(explainer, background)

    given_order = order is not None
    if given_order:
        order = _check_order(explainer.data, order)
    else:
        order = _default_order(explainer, background, intercept, instance)

    contributions = _step_contributions(explainer, background, intercept, order, instance)
    cumulative, running = [], intercept
    for c in contributions:
        running += c
        cumulative.append(running)

    detail = AttributionResult(
        variables=list(order),
        rendered_values=[_render(instance[v]) for v in order],
        contributions=contributions,
        cumulative=cumulative,
        signs=[_sign(c) for c in contributions],
        intercept=intercept,
        prediction=_instance_prediction(explainer, instance),
    )
    meta = {
        "seed": seed,
        "background_size": background_size,
        "background_rows": rows_used,
        "order": list(order) if given_order else None,
        "instance": dict(instance),
    }
    return _attribution_explanation("breakdown", explainer, detail, meta)


def shapley_values(
    explainer: Explainer,
    instance: Mapping[str, Any],
    B: int = 25,
    background_size: int = 100,
    seed: int | None = None,
    full_enumeration: bool = False,
) -> Explanation:
    """Shapley attributions as the mean of break-down over variable orderings.

    Sampled mode draws ``B`` orderings from per-index substreams; full
    enumeration walks all p! orderings in lexicographic order (p <= 8). The
    per-ordering samples are kept for dispersion display, and means are
    computed with exact summation so they do not depend on ordering order.
    """
    instance = validate_instance(explainer.data, instance)
    if B < 1:
        raise ParameterError("B must be at least 1", field="b")
    seed = explainer.resolve_seed(seed)
    names = explainer.data.feature_names
    p = len(names)

    if full_enumeration:
        if p > FULL_ENUMERATION_MAX_VARIABLES:
            raise ParameterError(
                f"full enumeration supports at most {FULL_ENUMERATION_MAX_VARIABLES} variables",
                field="full_enumeration",
            )
        orderings = [list(perm) for perm in itertools.permutations(range(p))]
    else:
        orderings = [list(permutation(seed, STREAM_ORDERING, p, b)) for b in range(B)]

    background, rows_used = _background(explainer, background_size, seed)
    intercept = _mean_score(explainer, background)

    samples = {name: [] for name in names}
    for ordering in orderings:
        order_names = [names[j] for j in ordering]
        step = _step_contributions(explainer, background, intercept, order_names, instance)
        for name, contribution in zip(order_names, step):
            samples[name].append(contribution)

    means = {name: math.fsum(samples[name]) / len(orderings) for name in names}
    display = sorted(range(p), key=lambda j: (-abs(means[names[j]]), j))
    ordered_names = [names[j] for j in display]

    cumulative, running = [], intercept
    for name in ordered_names:
        running += means[name]
        cumulative.append(running)

    detail = AttributionResult(
        variables=ordered_names,
        rendered_values=[_render(instance[v]) for v in ordered_names],
        contributions=[means[v] for v in ordered_names],
        cumulative=cumulative,
        signs=[_sign(means[v]) for v in ordered_names],
        intercept=intercept,
        prediction=_instance_prediction(explainer, instance),
        samples={v: list(samples[v]) for v in ordered_names},
    )
    meta = {
        "seed": seed,
        "b": len(orderings),
        "background_size": background_size,
        "background_rows": rows_used,
        "full_enumeration": full_enumeration,
        "instance": dict(instance),
    }
    return _attribution_explanation(
        "shapley",
        explainer,
        detail,
        meta,
        bars_extra={"samples": [detail.samples[v] for v in ordered_names]},
    )


def ceteris_paribus(
    explainer: Explainer,
    instance: Mapping[str, Any],
    variables: Sequence[str] | None = None,
    grid_size: int = 51,
    spacing: str = "quantile",
) -> Explanation:
    """What-if curves: sweep one variable at a time, all others held fixed.

    The observed value is added to numeric grids (kept sorted) so the curve
    always passes through the instance's own prediction; that point is the
    anchor.
    """
    instance = validate_instance(explainer.data, instance)
    names = explainer.data.feature_names
    if variables is None:
        variables = names
    else:
        unknown = [v for v in variables if v not in names]
        if unknown:
            raise SchemaError(f"unknown variables: {unknown}")
        variables = list(variables)

    panels: list[ProfilePanel] = []
    for name in variables:
        col = explainer.data.column(name)
        grid = grid_for_variable(explainer.data, name, grid_size, spacing)
        if col.kind == NUMERIC:
            observed = float(instance[name])
            grid = list(grid)
            if observed not in grid:
                grid.insert(int(np.searchsorted(grid, observed)), observed)
            anchor_index = grid.index(observed)
        else:
            observed = instance[name]
            anchor_index = grid.index(observed)

        table: Table = {}
        m = len(grid)
        for other in names:
            if other == name:
                continue
            template = np.empty(m, dtype=object if explainer.data.column(other).kind == CATEGORICAL else np.float64)
            table[other] = fill_column(template, instance[other])
        if col.kind == NUMERIC:
            table[name] = np.asarray(grid, dtype=np.float64)
        else:
            table[name] = np.asarray(grid, dtype=object)

        predictions = explainer.score_table(table)
        panels.append(
            ProfilePanel(
                variable=name,
                kind=col.kind,
                grid=list(grid),
                predictions=[float(v) for v in predictions],
                anchor_value=observed,
                anchor_prediction=float(predictions[anchor_index]),
            )
        )

    var_col, grid_col, pred_col = [], [], []
    for panel in panels:
        var_col.extend([panel.variable] * len(panel.grid))
        grid_col.extend(panel.grid)
        pred_col.extend(panel.predictions)

    chart = {
        "type": "cp_profile",
        "panels": [
            {
                "variable": p.variable,
                "kind": p.kind,
                "x": p.grid,
                "y": p.predictions,
                "anchor": {"x": p.anchor_value, "y": p.anchor_prediction},
            }
            for p in panels
        ],
    }
    meta = {
        "grid_size": grid_size,
        "spacing": spacing,
        "variables": list(variables),
        "instance": dict(instance),
    }
    return Explanation(
        kind="cp",
        model_label=explainer.label,
        result=ResultTable(["variable", "grid", "prediction"], [var_col, grid_col, pred_col]),
        chart=chart,
        meta=meta,
        detail=panels,
    )
