"""CART-style regression tree used for surrogates and the reference tree model.

Splits minimize the summed squared error of the two children. Numeric
candidates are midpoints between consecutive distinct values; categorical
candidates are prefixes of the levels ordered by mean response. Ties are
broken deterministically: lowest variable index first, then smallest
threshold (shortest level prefix). A node with any response variance is
split as long as a valid split exists, so structure like XOR that only pays
off two levels down is still found.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .data import CATEGORICAL, Dataset, Table
from .errors import ParameterError


@dataclass
class Leaf:
    value: float
    n: int


@dataclass
class Split:
    variable: str
    threshold: float | None
    left_levels: tuple[str, ...] | None
    left: "TreeNode"
    right: "TreeNode"
    n: int


TreeNode = Union[Leaf, Split]


def _leaf(y: np.ndarray) -> Leaf:
    # Exact value for pure leaves; the mean of identical floats can round.
    if y.min() == y.max():
        return Leaf(value=float(y[0]), n=len(y))
    return Leaf(value=float(np.mean(y)), n=len(y))


def _numeric_candidates(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best (sse, threshold) over midpoint splits of a numeric column."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(ys)
    boundaries = np.nonzero(xs[:-1] != xs[1:])[0] + 1  # left block sizes
    if len(boundaries) == 0:
        return None
    valid = boundaries[(boundaries >= min_leaf) & (n - boundaries >= min_leaf)]
    if len(valid) == 0:
        return None
    cum1 = np.cumsum(ys)
    cum2 = np.cumsum(ys**2)
    k = valid
    left_sse = cum2[k - 1] - cum1[k - 1] ** 2 / k
    right_sum = cum1[-1] - cum1[k - 1]
    right_sse = (cum2[-1] - cum2[k - 1]) - right_sum**2 / (n - k)
    total = left_sse + right_sse
    best = int(np.argmin(total))  # first minimum: smallest threshold wins
    split_at = int(valid[best])
    threshold = (float(xs[split_at - 1]) + float(xs[split_at])) / 2.0
    return float(total[best]), threshold


def _categorical_candidates(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best (sse, left level set) over mean-ordered level prefixes."""
    levels, inverse = np.unique(x.astype(str), return_inverse=True)
    if len(levels) < 2:
        return None
    counts = np.bincount(inverse, minlength=len(levels))
    sums = np.bincount(inverse, weights=y, minlength=len(levels))
    means = sums / counts
    # Order by mean response; ties keep lexicographic level order.
    order = sorted(range(len(levels)), key=lambda i: (means[i], i))
    sums2 = np.bincount(inverse, weights=y**2, minlength=len(levels))
    n, total1, total2 = len(y), float(np.sum(sums)), float(np.sum(sums2))

    best = None
    left_n, left1, left2 = 0, 0.0, 0.0
    for k in range(len(order) - 1):
        i = order[k]
        left_n += int(counts[i])
        left1 += float(sums[i])
        left2 += float(sums2[i])
        right_n = n - left_n
        if left_n < min_leaf or right_n < min_leaf:
            continue
        sse = (left2 - left1**2 / left_n) + (
            (total2 - left2) - (total1 - left1) ** 2 / right_n
        )
        if best is None or sse < best[0]:
            left_set = tuple(sorted(levels[j] for j in order[: k + 1]))
            best = (float(sse), left_set)
    return best


def _route_left(node: Split, column: np.ndarray) -> np.ndarray:
    if node.threshold is not None:
        return column <= node.threshold
    members = set(node.left_levels or ())
    return np.fromiter((v in members for v in column), dtype=bool, count=len(column))


def fit_cart(
    table: Table,
    kinds: dict[str, str],
    feature_order: list[str],
    y: np.ndarray,
    max_depth: int,
    min_leaf: int,
) -> TreeNode:
    """Grow a regression tree on decoded feature columns."""
    if max_depth < 1:
        raise ParameterError("max_depth must be at least 1", field="max_depth")
    if min_leaf < 1:
        raise ParameterError("min_leaf must be at least 1", field="min_leaf")
    if len(y) < 2 * min_leaf:
        raise ParameterError(
            f"need at least {2 * min_leaf} rows to split with min_leaf={min_leaf}"
        )

    def grow(idx: np.ndarray, depth: int) -> TreeNode:
        ys = y[idx]
        if depth >= max_depth or len(idx) < 2 * min_leaf or ys.min() == ys.max():
            return _leaf(ys)

        best = None  # (sse, variable index, threshold, left_levels)
        for var_index, name in enumerate(feature_order):
            column = table[name][idx]
            if kinds[name] == CATEGORICAL:
                found = _categorical_candidates(column, ys, min_leaf)
                if found is not None and (best is None or found[0] < best[0]):
                    best = (found[0], var_index, None, found[1])
            else:
                found = _numeric_candidates(column, ys, min_leaf)
                if found is not None and (best is None or found[0] < best[0]):
                    best = (found[0], var_index, found[1], None)
        if best is None:
            return _leaf(ys)

        _, var_index, threshold, left_levels = best
        name = feature_order[var_index]
        node = Split(
            variable=name,
            threshold=threshold,
            left_levels=left_levels,
            left=None,  # type: ignore[arg-type]
            right=None,  # type: ignore[arg-type]
            n=len(idx),
        )
        mask = _route_left(node, table[name][idx])
        node.left = grow(idx[mask], depth + 1)
        node.right = grow(idx[~mask], depth + 1)
        return node

    return grow(np.arange(len(y)), 0)


def predict_cart(root: TreeNode, table: Table, n: int) -> np.ndarray:
    out = np.empty(n, dtype=np.float64)

    def walk(node: TreeNode, idx: np.ndarray) -> None:
        if isinstance(node, Leaf):
            out[idx] = node.value
            return
        mask = _route_left(node, table[node.variable][idx])
        walk(node.left, idx[mask])
        walk(node.right, idx[~mask])

    walk(root, np.arange(n))
    return out


def tree_depth(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


def count_leaves(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 1
    return count_leaves(node.left) + count_leaves(node.right)


def node_record(node: TreeNode) -> dict:
    """Nested rendering-friendly record of the tree."""
    if isinstance(node, Leaf):
        return {"leaf_value": node.value, "n": node.n}
    record: dict = {"variable": node.variable}
    if node.threshold is not None:
        record["threshold"] = node.threshold
    else:
        record["levels"] = list(node.left_levels or ())
    record["left"] = node_record(node.left)
    record["right"] = node_record(node.right)
    return record


def node_from_record(record: dict) -> TreeNode:
    if "leaf_value" in record:
        return Leaf(value=float(record["leaf_value"]), n=int(record["n"]))
    return Split(
        variable=record["variable"],
        threshold=record.get("threshold"),
        left_levels=tuple(record["levels"]) if "levels" in record else None,
        left=node_from_record(record["left"]),
        right=node_from_record(record["right"]),
        n=0,
    )


def flatten_nodes(root: TreeNode) -> list[dict]:
    """Preorder node list for the long-format result table."""
    rows: list[dict] = []

    def walk(node: TreeNode, depth: int) -> None:
        node_id = len(rows)
        if isinstance(node, Leaf):
            rows.append(
                {
                    "node_id": node_id,
                    "depth": depth,
                    "type": "leaf",
                    "variable": None,
                    "threshold": None,
                    "levels": None,
                    "value": node.value,
                    "n": node.n,
                }
            )
            return
        rows.append(
            {
                "node_id": node_id,
                "depth": depth,
                "type": "split",
                "variable": node.variable,
                "threshold": node.threshold,
                "levels": "|".join(node.left_levels) if node.left_levels else None,
                "value": None,
                "n": node.n,
            }
        )
        walk(node.left, depth + 1)
        walk(node.right, depth + 1)

    walk(root, 0)
    return rows


def fit_dataset_tree(
    data: Dataset, y: np.ndarray, max_depth: int, min_leaf: int
) -> TreeNode:
    """Fit on a dataset's decoded feature columns against an arbitrary response."""
    table = data.table()
    kinds = {name: data.column(name).kind for name in data.feature_names}
    return fit_cart(table, kinds, data.feature_names, y, max_depth, min_leaf)
