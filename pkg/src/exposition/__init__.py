"""Model-agnostic explanations, fairness audits, and a comparison dashboard.

Any black-box predictor over tabular data is wrapped in an
:class:`~exposition.explainer.Explainer`; every method then works through
that one abstraction and returns a uniform
:class:`~exposition.result.Explanation`.
"""

__version__ = "0.1.0"

from .data import ColumnSchema, Dataset, from_columns, load_dataset
from .errors import ExpositionError
from .explainer import (
    Explainer,
    TaskType,
    model_performance,
    new_explainer,
    predict_batch,
)
from .fairness import (
    fairness_check,
    fairness_metrics,
    parity_loss,
    subgroup_confusion,
)
from .local import break_down, ceteris_paribus, grid_for_variable, shapley_values
from .model_level import (
    fit_surrogate_tree,
    model_profile,
    permutation_importance,
    residual_diagnostics,
)
from .models import fit_linear, fit_logistic, fit_tree
from .result import Explanation, ResultTable
from .wire import ExternalPredictor

__all__ = [
    "__version__",
    "ColumnSchema",
    "Dataset",
    "Explainer",
    "Explanation",
    "ExpositionError",
    "ExternalPredictor",
    "ResultTable",
    "TaskType",
    "break_down",
    "ceteris_paribus",
    "fairness_check",
    "fairness_metrics",
    "fit_linear",
    "fit_logistic",
    "fit_surrogate_tree",
    "fit_tree",
    "from_columns",
    "grid_for_variable",
    "load_dataset",
    "model_performance",
    "model_profile",
    "new_explainer",
    "parity_loss",
    "permutation_importance",
    "predict_batch",
    "residual_diagnostics",
    "shapley_values",
    "subgroup_confusion",
]
