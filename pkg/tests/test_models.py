import numpy as np
import pytest

import exposition as xp
from exposition.errors import ParameterError, SingularError
from exposition.models import LinearModel, fit_linear, fit_logistic, model_from_doc


def test_fit_linear_recovers_exact_line():
    data = xp.from_columns(
        {"x": [0.0, 1.0, 2.0, 3.0, 4.0], "y": [1.0, 3.0, 5.0, 7.0, 9.0]}, target="y"
    )
    model = fit_linear(data)
    assert model.intercept == pytest.approx(1.0, abs=1e-8)
    assert model.terms[0].coef == pytest.approx(2.0, abs=1e-8)

    # Normal-equations oracle without the jitter.
    X = np.column_stack([np.ones(5), np.arange(5.0)])
    beta = np.linalg.solve(X.T @ X, X.T @ np.array([1.0, 3.0, 5.0, 7.0, 9.0]))
    assert model.intercept == pytest.approx(beta[0], abs=1e-7)
    assert model.terms[0].coef == pytest.approx(beta[1], abs=1e-7)


def test_fit_linear_noiseless_relative_error():
    rng = np.random.default_rng(1)
    x1 = rng.uniform(-5, 5, 60)
    x2 = rng.uniform(0, 3, 60)
    y = 4.0 + 1.5 * x1 - 2.25 * x2
    data = xp.from_columns({"x1": x1, "x2": x2, "y": y}, target="y")
    model = fit_linear(data)
    coefs = {t.column: t.coef for t in model.terms}
    assert abs(coefs["x1"] - 1.5) <= 1e-8 * 1.5
    assert abs(coefs["x2"] + 2.25) <= 1e-8 * 2.25
    assert abs(model.intercept - 4.0) <= 1e-8 * 4.0


def test_constant_target_gives_mean_intercept():
    data = xp.from_columns({"x": [1.0, 2.0, 3.0], "y": [5.0, 5.0, 5.0]}, target="y")
    model = fit_linear(data)
    assert model.intercept == pytest.approx(5.0, abs=1e-7)
    assert model.terms[0].coef == pytest.approx(0.0, abs=1e-7)


def test_duplicated_column_singular():
    data = xp.from_columns(
        {"x1": [1.0, 2.0, 3.0], "x2": [1.0, 2.0, 3.0], "y": [1.0, 2.0, 3.0]},
        target="y",
    )
    with pytest.raises(SingularError):
        fit_linear(data)


def test_categorical_one_hot_drop_first():
    data = xp.from_columns(
        {"c": ["a", "b", "a", "b"], "y": [1.0, 3.0, 1.0, 3.0]}, target="y"
    )
    model = fit_linear(data)
    assert [(t.kind, t.level) for t in model.terms] == [("level", "b")]
    scores = model.score({"c": np.array(["a", "b"], dtype=object)})
    assert scores == pytest.approx([1.0, 3.0], abs=1e-6)


def test_logistic_separable_toy_perfect_accuracy():
    x = np.array([-2.0, -1.5, -1.0, -0.5, -0.25, -0.1, 0.1, 0.25, 0.5, 1.0] * 2)
    y = (x > 0).astype(float)
    data = xp.from_columns({"x": x, "y": y}, target="y")
    model = fit_logistic(data)
    scores = model.score({"x": x})
    assert np.mean((scores >= 0.5) == (y == 1.0)) == 1.0


def test_logistic_all_zero_target_predicts_low():
    data = xp.from_columns({"x": [0.0, 1.0, 2.0, 3.0], "y": [0.0] * 4}, target="y")
    model = fit_logistic(data)
    scores = model.score({"x": np.array([0.0, 1.0, 2.0, 3.0])})
    assert np.all(scores < 0.5)


def test_logistic_outputs_strictly_inside_unit_interval(cls_data):
    model = fit_logistic(cls_data)
    scores = model.score(cls_data.table())
    assert np.all(scores > 0.0)
    assert np.all(scores < 1.0)


def test_logistic_requires_binary_target(reg_data):
    with pytest.raises(ParameterError):
        fit_logistic(reg_data)


def test_linear_doc_round_trip(reg_data):
    model = fit_linear(reg_data)
    clone = LinearModel.from_doc(model.to_doc())
    t = reg_data.table()
    assert np.array_equal(model.score(t), clone.score(t))


def test_scores_independent_of_batch_composition(reg_data):
    model = fit_linear(reg_data)
    whole = model.score(reg_data.table())
    for i in range(0, reg_data.n_rows, 7):
        single = model.score(reg_data.table([i]))
        assert single[0] == whole[i]


def test_model_from_doc_types(reg_data, cls_data):
    assert isinstance(model_from_doc({"type": "linear"}, reg_data), LinearModel)
    tree = model_from_doc({"type": "tree", "max_depth": 2, "min_leaf": 2}, reg_data)
    assert tree.score(reg_data.table()).shape == (reg_data.n_rows,)
    logistic = model_from_doc({"type": "logistic", "iterations": 50}, cls_data)
    assert np.all(logistic.score(cls_data.table()) < 1.0)
    with pytest.raises(ParameterError):
        model_from_doc({"type": "mystery"}, reg_data)
