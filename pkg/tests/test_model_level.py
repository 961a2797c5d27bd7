import math

import numpy as np
import pytest

import exposition as xp
from exposition.errors import ParameterError
from exposition.explainer import rmse_score
from exposition.sampling import (
    STREAM_COLUMN_PERMUTATION,
    STREAM_IMPORTANCE_ROWS,
    STREAM_JOINT_PERMUTATION,
    permutation,
    sample_rows,
)


def importance_rows_by_name(explanation):
    return {row.variable: row for row in explanation.detail.rows}


class TestPermutationImportance:
    def test_ignored_column_difference_exactly_zero(self, reg_data):
        explainer = xp.new_explainer(lambda t: 2.0 * t["x1"], reg_data, "m", seed=1)
        e = xp.permutation_importance(explainer, mode="difference", B=10, seed=1)
        rows = importance_rows_by_name(e)
        assert rows["x2"].importance == 0.0
        assert rows["c"].importance == 0.0
        assert rows["x1"].importance > 0.0

    def test_full_model_row_conventions(self, linear_explainer):
        diff = importance_rows_by_name(
            xp.permutation_importance(linear_explainer, mode="difference", B=3, seed=2)
        )
        assert diff["_full_model_"].importance == 0.0
        ratio = importance_rows_by_name(
            xp.permutation_importance(linear_explainer, mode="ratio", B=3, seed=2)
        )
        assert ratio["_full_model_"].importance == 1.0

    def test_raw_mode_nonnegative_for_rmse(self, linear_explainer):
        e = xp.permutation_importance(linear_explainer, mode="raw", B=4, seed=6)
        assert all(row.importance >= 0.0 for row in e.detail.rows)

    def test_matches_independent_permute_and_score_oracle(self):
        # f = x1 on data where y = x1; oracle replays the documented streams.
        rng = np.random.default_rng(3)
        x1 = rng.normal(0, 2, 50)
        x2 = rng.normal(0, 1, 50)
        data = xp.from_columns({"x1": x1, "x2": x2, "y": x1}, target="y")
        explainer = xp.new_explainer(lambda t: t["x1"], data, "m", seed=0)
        seed, B = 12, 10
        e = xp.permutation_importance(explainer, mode="difference", B=B, seed=seed)

        idx = sample_rows(seed, STREAM_IMPORTANCE_ROWS, data.n_rows, 1000)
        xs1, xs2, ys = x1[idx], x2[idx], x1[idx]
        m = len(idx)
        baseline = rmse_score(ys, xs1)
        assert e.detail.baseline_loss == baseline

        expected = {}
        for j, (name, column) in enumerate((("x1", xs1), ("x2", xs2))):
            dropout = []
            for b in range(B):
                perm = permutation(seed, STREAM_COLUMN_PERMUTATION, m, j, b)
                scores = column[perm] if name == "x1" else xs1
                dropout.append(rmse_score(ys, scores))
            expected[name] = (
                [float(d) for d in dropout],
                math.fsum(d - baseline for d in dropout) / B,
            )
        joint = []
        for b in range(B):
            perm = permutation(seed, STREAM_JOINT_PERMUTATION, m, b)
            joint.append(rmse_score(ys, xs1[perm]))
        expected["_baseline_"] = (
            [float(d) for d in joint],
            math.fsum(d - baseline for d in joint) / B,
        )

        rows = importance_rows_by_name(e)
        for name, (dropout, importance) in expected.items():
            assert rows[name].dropout == dropout
            assert rows[name].importance == importance
        assert rows["x1"].importance > 0.0

    def test_loss_task_mismatch_rejected(self, linear_explainer):
        with pytest.raises(ParameterError):
            xp.permutation_importance(linear_explainer, loss="one_minus_auc")

    def test_classification_uses_one_minus_auc(self, logistic_explainer):
        e = xp.permutation_importance(logistic_explainer, B=2, seed=3)
        assert e.detail.loss == "one_minus_auc"

    def test_row_order_full_model_first_baseline_last(self, linear_explainer):
        e = xp.permutation_importance(linear_explainer, B=2, seed=4)
        variables = [row.variable for row in e.detail.rows]
        assert variables[0] == "_full_model_"
        assert variables[-1] == "_baseline_"
        middle = e.detail.rows[1:-1]
        losses = [row.mean_loss for row in middle]
        assert losses == sorted(losses, reverse=True)


class TestProfiles:
    def test_pdp_equals_mean_of_uncentered_ice_bitwise(self, linear_explainer):
        pdp = xp.model_profile(linear_explainer, kind="pdp", grid_size=9, sample_size=20, seed=5)
        ice = xp.model_profile(
            linear_explainer, kind="ice", grid_size=9, sample_size=20, seed=5, center_ice=False
        )
        for p_panel, i_panel in zip(pdp.detail, ice.detail):
            matrix = np.array(i_panel.curves)
            assert p_panel.values == list(np.mean(matrix, axis=0))

    def test_centered_ice_is_zero_at_first_grid_point(self, linear_explainer):
        ice = xp.model_profile(linear_explainer, kind="ice", grid_size=7, sample_size=10, seed=5)
        for panel in ice.detail:
            assert panel.centered
            for curve in panel.curves:
                assert curve[0] == 0.0

    def test_pdp_hand_computed_additive_model(self):
        data = xp.from_columns(
            {"x1": [0.0, 1.0, 2.0], "x2": [0.0, 1.0, 2.0], "y": [9.0, 9.0, 9.0]},
            target="y",
        )
        e = xp.new_explainer(lambda t: t["x1"] + t["x2"], data, "add")
        pdp = xp.model_profile(e, kind="pdp", variables=["x1"], grid_size=3, sample_size=3, seed=1)
        panel = pdp.detail[0]
        assert panel.grid == [0.0, 1.0, 2.0]
        # mean over rows of (g + x2) with x2 in {0,1,2} is g + 1
        assert panel.values == [g + 1.0 for g in panel.grid]

    def test_ale_linear_model_recovers_slope(self):
        rng = np.random.default_rng(8)
        x1 = rng.uniform(0, 1, 400)
        x2 = rng.uniform(0, 1, 400)
        data = xp.from_columns({"x1": x1, "x2": x2, "y": 3.0 * x1 - 2.0 * x2}, target="y")
        e = xp.new_explainer(lambda t: 3.0 * t["x1"] - 2.0 * t["x2"], data, "lin")
        ale = xp.model_profile(e, kind="ale", variables=["x1"], grid_size=21, sample_size=400, seed=2)
        panel = ale.detail[0]
        grid = np.array(panel.grid)
        values = np.array(panel.values)
        offset = np.mean(values - 3.0 * grid)
        assert np.max(np.abs(values - (3.0 * grid + offset))) <= 1e-9

    def test_ale_weighted_mean_is_zero(self, linear_explainer):
        ale = xp.model_profile(linear_explainer, kind="ale", grid_size=11, sample_size=40, seed=9)
        for panel in ale.detail:
            scale = max(1.0, float(np.max(np.abs(panel.values))))
            weighted = np.dot(panel.weights, panel.values) / sum(panel.weights)
            assert abs(weighted) <= 1e-12 * scale

    def test_ale_on_categorical_rejected(self, linear_explainer):
        with pytest.raises(ParameterError):
            xp.model_profile(linear_explainer, kind="ale", variables=["c"])

    def test_ale_merges_empty_bins(self):
        # Values cluster at 0 and 100: interior quantile bins are empty and
        # must merge leftward instead of producing NaNs.
        values = [0.0] * 10 + [100.0] * 10
        data = xp.from_columns({"x": values, "y": [float(v) for v in values]}, target="y")
        e = xp.new_explainer(lambda t: t["x"], data, "m")
        ale = xp.model_profile(e, kind="ale", variables=["x"], grid_size=11, sample_size=20, seed=1)
        panel = ale.detail[0]
        assert all(np.isfinite(panel.values))
        assert sum(panel.weights) == 20

    def test_ale_constant_column_single_point(self):
        data = xp.from_columns({"x": [5.0] * 12, "z": list(range(12)), "y": [0.0] * 12}, target="y")
        e = xp.new_explainer(lambda t: t["z"] * 1.0, data, "m", task="regression")
        ale = xp.model_profile(e, kind="ale", variables=["x"], grid_size=5, seed=1)
        assert ale.detail[0].grid == [5.0]
        assert ale.detail[0].values == [0.0]

    def test_profile_unknown_kind_rejected(self, linear_explainer):
        with pytest.raises(ParameterError):
            xp.model_profile(linear_explainer, kind="mplot")


class TestResiduals:
    def test_hand_example(self):
        data = xp.from_columns({"x": [1.0, 2.0], "y": [1.0, 2.0]}, target="y")
        e = xp.new_explainer(lambda t: np.array([0.5, 2.5]), data, "m", task="regression")
        rows = xp.residual_diagnostics(e).detail
        assert [r.residual for r in rows] == [0.5, -0.5]
        assert [r.abs_residual for r in rows] == [0.5, 0.5]
        assert [r.row_id for r in rows] == [0, 1]  # tie broken by row id

    def test_perfect_model_zero_residuals(self):
        data = xp.from_columns({"x": [1.0, 2.0, 3.0], "y": [2.0, 4.0, 6.0]}, target="y")
        e = xp.new_explainer(lambda t: 2.0 * t["x"], data, "m")
        rows = xp.residual_diagnostics(e).detail
        assert all(r.residual == 0.0 for r in rows)

    def test_sorted_by_abs_residual_descending(self, linear_explainer):
        rows = xp.residual_diagnostics(linear_explainer).detail
        magnitudes = [r.abs_residual for r in rows]
        assert magnitudes == sorted(magnitudes, reverse=True)

    def test_residual_identity_bitwise(self, logistic_explainer):
        rows = xp.residual_diagnostics(logistic_explainer).detail
        for r in rows:
            assert r.y_hat + r.residual == r.y


class TestSurrogate:
    def test_step_function_single_split(self):
        xs = [-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0]
        fx = [1.0 if v > 0 else 0.0 for v in xs]
        data = xp.from_columns({"x": xs, "y": [0.0] * 8}, target="y")
        e = xp.new_explainer(
            lambda t: (t["x"] > 0).astype(float), data, "step", task="regression"
        )
        s = xp.fit_surrogate_tree(e, max_depth=1, min_leaf=1)
        root = s.detail.root
        assert root.variable == "x"
        assert -0.5 < root.threshold <= 0.5
        assert s.detail.fidelity == 1.0

        # Oracle: exhaustive depth-1 split search over all midpoints.
        def split_sse(threshold):
            left = [f for v, f in zip(xs, fx) if v <= threshold]
            right = [f for v, f in zip(xs, fx) if v > threshold]
            sse = 0.0
            for side in (left, right):
                mean = sum(side) / len(side)
                sse += sum((f - mean) ** 2 for f in side)
            return sse

        midpoints = [(a + b) / 2 for a, b in zip(sorted(xs), sorted(xs)[1:])]
        by_sse = {t: split_sse(t) for t in midpoints}
        zero_error = [t for t, sse in by_sse.items() if sse == 0.0]
        assert min(by_sse.values()) == 0.0
        assert all(-0.5 < t <= 0.5 for t in zero_error)
        assert root.threshold in zero_error

    def test_constant_black_box_single_leaf(self, reg_data):
        e = xp.new_explainer(
            lambda t: np.full(len(t["x1"]), 7.0), reg_data, "const", task="regression"
        )
        s = xp.fit_surrogate_tree(e, max_depth=3, min_leaf=2)
        from exposition.tree import Leaf

        assert isinstance(s.detail.root, Leaf)
        assert s.detail.fidelity == 1.0

    def test_recovers_known_depth_two_tree(self):
        rng = np.random.default_rng(4)
        x1 = rng.uniform(-2, 2, 80)
        x2 = rng.uniform(-2, 2, 80)
        data = xp.from_columns({"x1": x1, "x2": x2, "y": np.zeros(80)}, target="y")

        def boxy(t):
            # A depth-2 tree with a dominant first split.
            left = np.where(t["x2"] <= 0.0, 0.0, 10.0)
            right = np.where(t["x2"] <= 0.0, 100.0, 110.0)
            return np.where(t["x1"] <= 0.0, left, right)

        e = xp.new_explainer(boxy, data, "boxy", task="regression")
        s = xp.fit_surrogate_tree(e, max_depth=2, min_leaf=1)
        assert s.detail.fidelity == 1.0

    def test_fidelity_monotone_in_depth(self, logistic_explainer):
        fidelities = [
            xp.fit_surrogate_tree(logistic_explainer, max_depth=d, min_leaf=2).detail.fidelity
            for d in (1, 2, 3, 4)
        ]
        assert all(a <= b + 1e-15 for a, b in zip(fidelities, fidelities[1:]))
        assert all(f <= 1.0 for f in fidelities)

    def test_too_few_rows_rejected(self):
        data = xp.from_columns({"x": [1.0, 2.0, 3.0], "y": [1.0, 2.0, 3.0]}, target="y")
        e = xp.new_explainer(lambda t: t["x"], data, "m")
        with pytest.raises(ParameterError):
            xp.fit_surrogate_tree(e, max_depth=2, min_leaf=2)

    def test_tree_chart_is_nested_record(self, linear_explainer):
        s = xp.fit_surrogate_tree(linear_explainer, max_depth=2, min_leaf=5)
        root = s.chart["root"]
        if "leaf_value" not in root:
            assert "variable" in root and ("threshold" in root or "levels" in root)
            assert "left" in root and "right" in root
