"""Group-fairness auditing of binary classifiers.

Per-subgroup confusion matrices feed five confusion-based metrics (TPR, ACC,
PPV, FPR, STP). Each unprivileged subgroup's metric is divided by the
privileged subgroup's value; a defined ratio outside [epsilon, 1/epsilon]
counts as a violation. Metrics whose denominator is zero stay undefined and
are skipped, never imputed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .data import CATEGORICAL
from .errors import ParameterError
from .explainer import Explainer, TaskType
from .result import Explanation, ResultTable

METRICS = ("TPR", "ACC", "PPV", "FPR", "STP")

VERDICT_FAIR = "fair"
VERDICT_BORDERLINE = "borderline"
VERDICT_NOT_FAIR = "not_fair"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class SubgroupConfusion:
    protected: str
    cutoffs: dict[str, float]
    groups: dict[str, ConfusionCounts]
    warnings: list[str] = field(default_factory=list)


@dataclass
class MetricScores:
    """Five metrics per subgroup; ``None`` marks an undefined value."""

    scores: dict[str, dict[str, float | None]]


@dataclass
class FairnessReport:
    protected: str
    privileged: str
    epsilon: float
    scores: MetricScores
    ratios: dict[str, dict[str, float | None]]
    violations: list[tuple[str, str, float]]
    skipped_metrics: list[str]
    undefined_count: int
    verdict: str
    narrative: list[str]


def _normalize_cutoffs(
    subgroups: tuple[str, ...], cutoff: float | Mapping[str, float]
) -> dict[str, float]:
    if isinstance(cutoff, Mapping):
        unknown = set(cutoff) - set(subgroups)
        if unknown:
            raise ParameterError(
                f"cutoff names unknown subgroups: {sorted(unknown)}", field="cutoff"
            )
        table = {g: float(cutoff.get(g, 0.5)) for g in subgroups}
    else:
        table = {g: float(cutoff) for g in subgroups}
    for g, c in table.items():
        if not 0.0 < c <= 1.0:
            raise ParameterError(f"cutoff for {g!r} must be in (0, 1]", field="cutoff")
    return table


def subgroup_confusion(
    explainer: Explainer,
    protected: str,
    cutoff: float | Mapping[str, float] = 0.5,
) -> SubgroupConfusion:
    """Confusion counts per level of the protected column.

    Scores are thresholded at each subgroup's cutoff (predicted positive iff
    score >= cutoff) and tallied against the binary target.
    """
    if explainer.task is not TaskType.CLASSIFICATION:
        raise ParameterError("fairness analysis requires a classifier", field="task")
    column = explainer.data.column(protected)
    if column.kind != CATEGORICAL:
        raise ParameterError(
            f"protected column {protected!r} must be categorical", field="protected"
        )
    cutoffs = _normalize_cutoffs(column.levels, cutoff)

    y = explainer.data.target_values()
    scores = explainer.score_table(explainer.data.table())
    membership = explainer.data.decoded(protected)

    groups: dict[str, ConfusionCounts] = {}
    warnings: list[str] = []
    for level in column.levels:
        mask = membership == level
        if not mask.any():
            warnings.append(f"subgroup {level!r} has no rows and was excluded")
            continue
        predicted = scores[mask] >= cutoffs[level]
        actual = y[mask] == 1.0
        groups[level] = ConfusionCounts(
            tp=int(np.sum(predicted & actual)),
            fp=int(np.sum(predicted & ~actual)),
            tn=int(np.sum(~predicted & ~actual)),
            fn=int(np.sum(~predicted & actual)),
        )
    return SubgroupConfusion(protected, cutoffs, groups, warnings)


def _ratio_or_none(num: int, den: int) -> float | None:
    return num / den if den else None


def fairness_metrics(confusion: SubgroupConfusion) -> MetricScores:
    """TPR/ACC/PPV/FPR/STP per subgroup; zero denominators yield ``None``."""
    scores: dict[str, dict[str, float | None]] = {}
    for level, c in confusion.groups.items():
        scores[level] = {
            "TPR": _ratio_or_none(c.tp, c.tp + c.fn),
            "ACC": _ratio_or_none(c.tp + c.tn, c.n),
            "PPV": _ratio_or_none(c.tp, c.tp + c.fp),
            "FPR": _ratio_or_none(c.fp, c.fp + c.tn),
            "STP": _ratio_or_none(c.tp + c.fp, c.n),
        }
    return MetricScores(scores)


def _build_narrative(report: FairnessReport, label: str) -> list[str]:
    lo, hi = report.epsilon, 1.0 / report.epsilon
    lines = [
        f"Fairness check for model '{label}' on protected column '{report.protected}'.",
        f"Privileged subgroup: '{report.privileged}'. "
        f"Metric ratios must lie within [{lo:.6f}, {hi:.6f}] (epsilon = {report.epsilon:.6f}).",
    ]
    for metric in METRICS:
        if metric in report.skipped_metrics:
            lines.append(
                f"{metric}: skipped, the privileged value is undefined or zero."
            )
            continue
        for subgroup in report.ratios:
            ratio = report.ratios[subgroup].get(metric)
            if ratio is None:
                lines.append(f"{metric}: subgroup '{subgroup}' is undefined, skipped.")
            elif ratio < lo:
                lines.append(
                    f"{metric}: subgroup '{subgroup}' ratio {ratio:.6f} is below {lo:.6f} -> violation."
                )
            elif ratio > hi:
                lines.append(
                    f"{metric}: subgroup '{subgroup}' ratio {ratio:.6f} is above {hi:.6f} -> violation."
                )
            else:
                lines.append(
                    f"{metric}: subgroup '{subgroup}' ratio {ratio:.6f} is within bounds."
                )
    lines.append(
        f"Note: an FPR ratio above {hi:.6f} means the subgroup receives more false "
        "positives than the privileged one."
    )
    lines.append(f"Undefined metric values skipped: {report.undefined_count}.")
    lines.append(
        f"Verdict: {report.verdict} ({len(report.violations)} violation(s))."
    )
    return lines


def fairness_check(
    explainer: Explainer,
    protected: str,
    privileged: str,
    epsilon: float = 0.8,
    cutoff: float | Mapping[str, float] = 0.5,
) -> Explanation:
    """Compare each subgroup's metrics against the privileged subgroup.

    Verdict: fair with zero violations, borderline with exactly one,
    not_fair with two or more. The narrative lists every metric, the ratio
    bounds, each violation, and how many undefined values were skipped.
    """
    if not 0.0 < epsilon < 1.0:
        raise ParameterError("epsilon must lie in (0, 1)", field="epsilon")
    confusion = subgroup_confusion(explainer, protected, cutoff)
    if privileged not in confusion.groups:
        raise ParameterError(
            f"privileged subgroup {privileged!r} not found", field="privileged"
        )
    scores = fairness_metrics(confusion)

    lo, hi = epsilon, 1.0 / epsilon
    privileged_scores = scores.scores[privileged]
    skipped_metrics = [
        m for m in METRICS if privileged_scores[m] is None or privileged_scores[m] == 0.0
    ]

    ratios: dict[str, dict[str, float | None]] = {}
    violations: list[tuple[str, str, float]] = []
    undefined_count = 0
    for subgroup in confusion.groups:
        if subgroup == privileged:
            continue
        ratios[subgroup] = {}
        for metric in METRICS:
            if metric in skipped_metrics:
                ratios[subgroup][metric] = None
                continue
            value = scores.scores[subgroup][metric]
            if value is None:
                ratios[subgroup][metric] = None
                undefined_count += 1
                continue
            ratio = value / privileged_scores[metric]
            ratios[subgroup][metric] = ratio
            if ratio < lo or ratio > hi:
                violations.append((subgroup, metric, ratio))

    if len(violations) == 0:
        verdict = VERDICT_FAIR
    elif len(violations) == 1:
        verdict = VERDICT_BORDERLINE
    else:
        verdict = VERDICT_NOT_FAIR

    report = FairnessReport(
        protected=protected,
        privileged=privileged,
        epsilon=epsilon,
        scores=scores,
        ratios=ratios,
        violations=violations,
        skipped_metrics=skipped_metrics,
        undefined_count=undefined_count,
        verdict=verdict,
        narrative=[],
    )
    report.narrative = _build_narrative(report, explainer.label)

    subgroups = list(confusion.groups)
    sub_col, metric_col, value_col, ratio_col = [], [], [], []
    for subgroup in subgroups:
        for metric in METRICS:
            sub_col.append(subgroup)
            metric_col.append(metric)
            value_col.append(scores.scores[subgroup][metric])
            if subgroup == privileged:
                ratio_col.append(None if metric in skipped_metrics else 1.0)
            else:
                ratio_col.append(ratios[subgroup][metric])

    chart = {
        "type": "fairness_check",
        "privileged": privileged,
        "epsilon": epsilon,
        "bounds": [lo, hi],
        "verdict": verdict,
        "metrics": [
            {
                "metric": metric,
                "points": [
                    {
                        "subgroup": subgroup,
                        "value": scores.scores[subgroup][metric],
                        "ratio": (
                            (None if metric in skipped_metrics else 1.0)
                            if subgroup == privileged
                            else ratios[subgroup][metric]
                        ),
                    }
                    for subgroup in subgroups
                ],
            }
            for metric in METRICS
        ],
        "narrative": report.narrative,
    }
    meta = {
        "protected": protected,
        "privileged": privileged,
        "epsilon": epsilon,
        "cutoff": confusion.cutoffs,
    }
    result = ResultTable(
        ["subgroup", "metric", "value", "ratio"],
        [sub_col, metric_col, value_col, ratio_col],
    )
    return Explanation("fairness", explainer.label, result, chart, meta, detail=report)


@dataclass
class ParityLoss:
    """Sum of |log metric ratios| across unprivileged subgroups, per metric."""

    values: dict[str, float | None]
    skipped: list[tuple[str, str]]
    omitted_metrics: list[str]


def parity_loss(scores: MetricScores, privileged: str) -> ParityLoss:
    """Aggregate per-metric disparity as the sum of absolute log ratios.

    Subgroup values that are undefined or zero are skipped (and recorded);
    a metric whose privileged value is undefined or zero is omitted.
    """
    if privileged not in scores.scores:
        raise ParameterError(
            f"privileged subgroup {privileged!r} not found", field="privileged"
        )
    values: dict[str, float | None] = {}
    skipped: list[tuple[str, str]] = []
    omitted: list[str] = []
    for metric in METRICS:
        reference = scores.scores[privileged][metric]
        if reference is None or reference == 0.0:
            values[metric] = None
            omitted.append(metric)
            continue
        total = 0.0
        for subgroup, table in scores.scores.items():
            if subgroup == privileged:
                continue
            value = table[metric]
            if value is None or value == 0.0:
                skipped.append((metric, subgroup))
                continue
            total += abs(math.log(value / reference))
        values[metric] = total
    return ParityLoss(values=values, skipped=skipped, omitted_metrics=omitted)
