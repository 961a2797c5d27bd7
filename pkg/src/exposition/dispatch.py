"""Shared chart-kind registry and parameter normalization.

The CLI and the dashboard service both funnel requests through
:func:`compute_explanation`, so the same (data, model, kind, parameters,
seed) tuple always produces the same explanation object and therefore the
same serialized bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

from .data import validate_instance
from .errors import ParameterError
from .explainer import Explainer, model_performance, predict_batch
from .fairness import fairness_check
from .local import break_down, ceteris_paribus, shapley_values
from .model_level import (
    fit_surrogate_tree,
    model_profile,
    permutation_importance,
    residual_diagnostics,
)
from .result import Explanation


@dataclass(frozen=True)
class Param:
    name: str
    type: str  # int | float | bool | str | str_list | mapping | any
    default: Any = None
    required: bool = False
    description: str = ""


CHART_KINDS: dict[str, dict] = {
    "performance": {
        "description": "goodness-of-fit metrics for the model's task",
        "needs_instance": False,
        "params": [],
    },
    "breakdown": {
        "description": "sequential additive attributions for one observation",
        "needs_instance": True,
        "params": [
            Param("instance", "int", required=True, description="row index to explain"),
            Param("overrides", "mapping", default=None, description="what-if value overrides"),
            Param("order", "str_list", default=None, description="explicit fixing order"),
            Param("background_size", "int", default=100),
            Param("seed", "int", default=None),
        ],
    },
    "shapley": {
        "description": "Shapley attributions averaged over variable orderings",
        "needs_instance": True,
        "params": [
            Param("instance", "int", required=True),
            Param("overrides", "mapping", default=None),
            Param("b", "int", default=25, description="number of sampled orderings"),
            Param("background_size", "int", default=100),
            Param("full_enumeration", "bool", default=False),
            Param("seed", "int", default=None),
        ],
    },
    "cp": {
        "description": "what-if curves holding all other variables fixed",
        "needs_instance": True,
        "params": [
            Param("instance", "int", required=True),
            Param("overrides", "mapping", default=None),
            Param("variables", "str_list", default=None),
            Param("grid_size", "int", default=51),
            Param("spacing", "str", default="quantile"),
        ],
    },
    "importance": {
        "description": "loss increase when a column is permuted",
        "needs_instance": False,
        "params": [
            Param("loss", "str", default=None, description="rmse or one_minus_auc"),
            Param("mode", "str", default="difference"),
            Param("b", "int", default=10),
            Param("sample_size", "int", default=1000),
            Param("seed", "int", default=None),
        ],
    },
    "profile": {
        "description": "aggregated profiles: pdp, ale, or ice",
        "needs_instance": False,
        "params": [
            Param("profile_kind", "str", default="pdp"),
            Param("variables", "str_list", default=None),
            Param("grid_size", "int", default=51),
            Param("sample_size", "int", default=100),
            Param("center_ice", "bool", default=True),
            Param("spacing", "str", default="quantile"),
            Param("seed", "int", default=None),
        ],
    },
    "residuals": {
        "description": "per-row residual diagnostics",
        "needs_instance": False,
        "params": [],
    },
    "surrogate": {
        "description": "shallow tree mimicking the model's predictions",
        "needs_instance": False,
        "params": [
            Param("max_depth", "int", default=3),
            Param("min_leaf", "int", default=5),
        ],
    },
    "fairness": {
        "description": "group fairness check against a privileged subgroup",
        "needs_instance": False,
        "params": [
            Param("protected", "str", required=True),
            Param("privileged", "str", required=True),
            Param("epsilon", "float", default=0.8),
            Param("cutoff", "any", default=0.5, description="float or per-subgroup mapping"),
        ],
    },
}


def _coerce(param: Param, value: Any) -> Any:
    if value is None:
        return None
    try:
        if param.type == "int":
            if isinstance(value, bool):
                raise ValueError("boolean is not an integer")
            return int(value)
        if param.type == "float":
            return float(value)
        if param.type == "bool":
            if isinstance(value, bool):
                return value
            raise ValueError("expected a boolean")
        if param.type == "str":
            if not isinstance(value, str):
                raise ValueError("expected a string")
            return value
        if param.type == "str_list":
            if isinstance(value, str):
                value = [v for v in value.split(",") if v]
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise ValueError("expected a list of strings")
            return list(value)
        if param.type == "mapping":
            if not isinstance(value, Mapping):
                raise ValueError("expected an object")
            return dict(value)
        return value  # "any"
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"invalid value for {param.name!r}: {exc}", field=param.name)


def normalize_params(kind: str, params: Mapping[str, Any]) -> dict:
    """Validate names/types and fill defaults, in registry parameter order."""
    spec = CHART_KINDS.get(kind)
    if spec is None:
        raise ParameterError(f"unknown chart kind {kind!r}", field="kind")
    known = {p.name: p for p in spec["params"]}
    unknown = set(params) - set(known)
    if unknown:
        raise ParameterError(
            f"unknown parameter(s) for {kind}: {sorted(unknown)}",
            field=sorted(unknown)[0],
        )
    normalized: dict[str, Any] = {}
    for param in spec["params"]:
        if param.name in params and params[param.name] is not None:
            normalized[param.name] = _coerce(param, params[param.name])
        elif param.required:
            raise ParameterError(
                f"{kind} requires parameter {param.name!r}", field=param.name
            )
        else:
            normalized[param.name] = param.default
    return normalized


def _resolve_instance(explainer: Explainer, normalized: Mapping[str, Any]) -> dict:
    row = normalized["instance"]
    if not 0 <= row < explainer.data.n_rows:
        raise ParameterError(
            f"instance row {row} out of range [0, {explainer.data.n_rows})",
            field="instance",
        )
    instance = explainer.data.row_instance(row)
    overrides = normalized.get("overrides")
    if overrides:
        unknown = set(overrides) - set(explainer.data.feature_names)
        if unknown:
            raise ParameterError(
                f"overrides name unknown columns: {sorted(unknown)}", field="overrides"
            )
        instance.update(overrides)
    return validate_instance(explainer.data, instance)


def compute_explanation(
    explainer: Explainer, kind: str, params: Mapping[str, Any] | None = None
) -> Explanation:
    """Run the method behind ``kind`` with normalized parameters."""
    p = normalize_params(kind, params or {})
    if kind == "performance":
        return model_performance(explainer)
    if kind == "breakdown":
        return break_down(
            explainer,
            _resolve_instance(explainer, p),
            order=p["order"],
            background_size=p["background_size"],
            seed=p["seed"],
        )
    if kind == "shapley":
        return shapley_values(
            explainer,
            _resolve_instance(explainer, p),
            B=p["b"],
            background_size=p["background_size"],
            seed=p["seed"],
            full_enumeration=p["full_enumeration"],
        )
    if kind == "cp":
        return ceteris_paribus(
            explainer,
            _resolve_instance(explainer, p),
            variables=p["variables"],
            grid_size=p["grid_size"],
            spacing=p["spacing"],
        )
    if kind == "importance":
        return permutation_importance(
            explainer,
            loss=p["loss"],
            mode=p["mode"],
            B=p["b"],
            sample_size=p["sample_size"],
            seed=p["seed"],
        )
    if kind == "profile":
        return model_profile(
            explainer,
            kind=p["profile_kind"],
            variables=p["variables"],
            grid_size=p["grid_size"],
            sample_size=p["sample_size"],
            center_ice=p["center_ice"],
            seed=p["seed"],
            spacing=p["spacing"],
        )
    if kind == "residuals":
        return residual_diagnostics(explainer)
    if kind == "surrogate":
        return fit_surrogate_tree(
            explainer, max_depth=p["max_depth"], min_leaf=p["min_leaf"]
        )
    if kind == "fairness":
        return fairness_check(
            explainer,
            protected=p["protected"],
            privileged=p["privileged"],
            epsilon=p["epsilon"],
            cutoff=p["cutoff"],
        )
    raise ParameterError(f"unknown chart kind {kind!r}", field="kind")


def chart_descriptors() -> list[dict]:
    """Serializable registry listing for the service and UI."""
    out = []
    for kind, spec in CHART_KINDS.items():
        out.append(
            {
                "kind": kind,
                "description": spec["description"],
                "needs_instance": spec["needs_instance"],
                "params": [
                    {
                        "name": p.name,
                        "type": p.type,
                        "required": p.required,
                        "default": p.default,
                        "description": p.description,
                    }
                    for p in spec["params"]
                ],
            }
        )
    return out
