"""Acceptance suite: one test per release criterion.

Each test pins its tolerance inline; the terminal summary hook in conftest
prints one PASS/FAIL line per criterion.
"""

import itertools
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

import exposition as xp
from exposition.arena import ArenaSession, create_app
from exposition.dispatch import compute_explanation
from exposition.explainer import rmse_score
from exposition.sampling import (
    STREAM_COLUMN_PERMUTATION,
    STREAM_IMPORTANCE_ROWS,
    STREAM_JOINT_PERMUTATION,
    permutation,
    sample_rows,
)

from conftest import make_csv

REL_TOL = 1e-9


def assert_additive(detail):
    total = detail.intercept + sum(detail.contributions)
    assert abs(total - detail.prediction) <= REL_TOL * max(1.0, abs(detail.prediction))


def test_additivity_suite_200_pairs():
    """Break-down and Shapley additivity over 200 random (model, instance) pairs."""
    rng = np.random.default_rng(100)
    n = 60
    reg = xp.from_columns(
        {
            "x1": rng.uniform(-4, 4, n),
            "x2": rng.uniform(0, 6, n),
            "c": list(rng.choice(["u", "v", "w"], n)),
            "y": rng.normal(0, 2, n) + 10,
        },
        target="y",
    )
    logits = rng.normal(0, 1, n)
    cls = xp.from_columns(
        {
            "x1": rng.uniform(-4, 4, n),
            "x2": rng.uniform(0, 6, n),
            "c": list(rng.choice(["u", "v", "w"], n)),
            "y": (logits > 0).astype(float),
        },
        target="y",
    )
    explainers = [
        xp.new_explainer(xp.fit_linear(reg), reg, "linear", seed=1),
        xp.new_explainer(xp.fit_tree(reg, max_depth=3, min_leaf=2), reg, "tree", seed=1),
        xp.new_explainer(xp.fit_logistic(cls), cls, "logistic", seed=1),
    ]
    checked = 0
    for i in range(200):
        explainer = explainers[i % len(explainers)]
        row = int(rng.integers(0, explainer.data.n_rows))
        instance = explainer.data.row_instance(row)
        seed = int(rng.integers(0, 2**31))
        bd = xp.break_down(explainer, instance, background_size=40, seed=seed)
        assert_additive(bd.detail)
        sh = xp.shapley_values(explainer, instance, B=4, background_size=40, seed=seed)
        assert_additive(sh.detail)
        checked += 1
    assert checked == 200


def _interaction_models():
    rng = np.random.default_rng(5)

    def dataset(p):
        cols = {f"x{j}": rng.uniform(-2, 2, 10) for j in range(1, p + 1)}
        cols["y"] = rng.normal(0, 1, 10)
        return xp.from_columns(cols, target="y")

    cases = []
    d2 = dataset(2)
    cases.append(("p2_interaction", xp.new_explainer(lambda t: t["x1"] * t["x2"], d2, "p2", seed=3), d2))
    d3 = dataset(3)
    cases.append(
        ("p3_interaction", xp.new_explainer(lambda t: t["x1"] * t["x2"] + t["x3"], d3, "p3", seed=3), d3)
    )
    d4 = dataset(4)
    cases.append(
        (
            "p4_linear",
            xp.new_explainer(
                lambda t: 2.0 * t["x1"] - t["x2"] + 0.5 * t["x3"] + 3.0 * t["x4"], d4, "p4", seed=3
            ),
            d4,
        )
    )
    return cases


def test_shapley_full_enumeration_matches_oracle_exactly():
    """Full enumeration equals independent break-down averaging over all p! orders."""
    for name, explainer, data in _interaction_models():
        instance = data.row_instance(0)
        exact = xp.shapley_values(
            explainer, instance, background_size=10, seed=3, full_enumeration=True
        )
        got = dict(zip(exact.detail.variables, exact.detail.contributions))

        names = data.feature_names
        per_variable = {v: [] for v in names}
        for perm in itertools.permutations(names):
            bd = xp.break_down(explainer, instance, order=list(perm), background_size=10, seed=3)
            for v, c in zip(bd.detail.variables, bd.detail.contributions):
                per_variable[v].append(c)
        oracle = {v: math.fsum(samples) / len(samples) for v, samples in per_variable.items()}
        assert got == oracle, name


def test_shapley_sampled_within_three_standard_errors():
    """B=2000 sampled Shapley lies within 3 SE of the exact value per variable."""
    for name, explainer, data in _interaction_models():
        instance = data.row_instance(1)
        exact = xp.shapley_values(
            explainer, instance, background_size=10, seed=3, full_enumeration=True
        )
        oracle = dict(zip(exact.detail.variables, exact.detail.contributions))
        sampled = xp.shapley_values(explainer, instance, B=2000, background_size=10, seed=3)
        for variable, mean in zip(sampled.detail.variables, sampled.detail.contributions):
            draws = np.array(sampled.detail.samples[variable])
            se = float(np.std(draws, ddof=1)) / math.sqrt(len(draws))
            tolerance = 3.0 * se + 1e-12 * max(1.0, abs(oracle[variable]))
            assert abs(mean - oracle[variable]) <= tolerance, (name, variable)


def test_pdp_identity_50_random_configurations():
    """pdp(g) equals the mean of uncentered ICE curves bitwise, 50 configs."""
    rng = np.random.default_rng(77)
    for trial in range(50):
        n = int(rng.integers(8, 40))
        cols = {
            "x1": rng.uniform(-5, 5, n),
            "x2": rng.uniform(0, 3, n),
            "c": list(rng.choice(["a", "b"], n)),
            "y": rng.normal(0, 1, n),
        }
        data = xp.from_columns(cols, target="y")
        model = [
            lambda t: 2.0 * t["x1"] + t["x2"],
            lambda t: t["x1"] * t["x2"] + np.where(t["c"] == "a", 1.0, -1.0),
            lambda t: np.abs(t["x1"]) ** 1.5,
        ][trial % 3]
        explainer = xp.new_explainer(model, data, f"m{trial}", seed=trial, task="regression")
        grid_size = int(rng.integers(2, 12))
        sample_size = int(rng.integers(2, n + 1))
        seed = int(rng.integers(0, 2**31))
        variables = ["x1", "x2", "c"][: int(rng.integers(1, 4))]
        pdp = xp.model_profile(
            explainer, kind="pdp", variables=variables, grid_size=grid_size,
            sample_size=sample_size, seed=seed,
        )
        ice = xp.model_profile(
            explainer, kind="ice", variables=variables, grid_size=grid_size,
            sample_size=sample_size, seed=seed, center_ice=False,
        )
        for p_panel, i_panel in zip(pdp.detail, ice.detail):
            assert p_panel.grid == i_panel.grid
            matrix = np.array(i_panel.curves, dtype=np.float64)
            assert p_panel.values == list(np.mean(matrix, axis=0)), trial


def test_ale_recovers_linear_slope():
    """ALE of x1 for f = 3*x1 - 2*x2 matches slope 3 within 0.05 in < 10 s."""
    started = time.monotonic()
    rng = np.random.default_rng(2024)
    n = 2000
    x1 = rng.uniform(0, 1, n)
    x2 = rng.uniform(0, 1, n)
    data = xp.from_columns({"x1": x1, "x2": x2, "y": 3.0 * x1 - 2.0 * x2}, target="y")
    explainer = xp.new_explainer(
        lambda t: 3.0 * t["x1"] - 2.0 * t["x2"], data, "lin", seed=0
    )
    ale = xp.model_profile(
        explainer, kind="ale", variables=["x1"], grid_size=51, sample_size=n, seed=0
    )
    panel = ale.detail[0]
    grid = np.asarray(panel.grid)
    values = np.asarray(panel.values)
    offset = float(np.mean(values - 3.0 * grid))
    deviation = float(np.max(np.abs(values - (3.0 * grid + offset))))
    elapsed = time.monotonic() - started
    assert deviation <= 0.05
    assert elapsed < 10.0


def test_permutation_importance_matches_seeded_oracle_bitwise():
    """Ignored column scores exactly 0; all values match the replayed streams."""
    rng = np.random.default_rng(31)
    n = 120
    x1 = rng.normal(0, 2, n)
    z = rng.normal(5, 3, n)
    data = xp.from_columns({"x1": x1, "z": z, "y": x1}, target="y")
    explainer = xp.new_explainer(lambda t: t["x1"], data, "m", seed=0)
    seed, B = 9, 10
    e = xp.permutation_importance(explainer, mode="difference", B=B, seed=seed)
    rows = {r.variable: r for r in e.detail.rows}

    assert rows["z"].importance == 0.0
    assert all(d == e.detail.baseline_loss for d in rows["z"].dropout)

    # Independent oracle with the same seed streams.
    idx = sample_rows(seed, STREAM_IMPORTANCE_ROWS, n, 1000)
    xs = {"x1": x1[idx], "z": z[idx]}
    ys = x1[idx]
    m = len(idx)
    baseline = rmse_score(ys, xs["x1"])
    assert e.detail.baseline_loss == baseline
    for j, name in enumerate(("x1", "z")):
        dropout = []
        for b in range(B):
            perm = permutation(seed, STREAM_COLUMN_PERMUTATION, m, j, b)
            shuffled = dict(xs)
            shuffled[name] = xs[name][perm]
            dropout.append(rmse_score(ys, shuffled["x1"]))
        assert rows[name].dropout == dropout
        assert rows[name].importance == math.fsum(d - baseline for d in dropout) / B
    joint = []
    for b in range(B):
        perm = permutation(seed, STREAM_JOINT_PERMUTATION, m, b)
        joint.append(rmse_score(ys, xs["x1"][perm]))
    assert rows["_baseline_"].dropout == joint


def test_surrogate_reaches_perfect_fidelity_on_tree_black_boxes():
    """Depth-d surrogate reproduces a depth-d tree black box exactly, d in 1..3."""
    rng = np.random.default_rng(55)
    n = 64
    cols = {
        "x1": rng.uniform(-1, 1, n),
        "x2": rng.uniform(-1, 1, n),
        "x3": rng.uniform(-1, 1, n),
        "y": np.zeros(n),
    }
    data = xp.from_columns(cols, target="y")

    black_boxes = {
        1: lambda t: np.where(t["x1"] > 0, 8.0, 0.0),
        2: lambda t: 8.0 * (t["x1"] > 0) + 2.0 * (t["x2"] > 0),
        3: lambda t: 16.0 * (t["x1"] > 0) + 4.0 * (t["x2"] > 0) + 1.0 * (t["x3"] > 0),
    }
    for depth, black_box in black_boxes.items():
        explainer = xp.new_explainer(black_box, data, f"d{depth}", seed=0, task="regression")
        surrogate = xp.fit_surrogate_tree(explainer, max_depth=depth, min_leaf=1)
        assert surrogate.detail.fidelity == 1.0, depth


def _fixed_score_explainer(groups, ys, scores):
    data = xp.from_columns(
        {"g": list(groups), "s": [float(v) for v in scores], "y": [float(v) for v in ys]},
        target="y",
    )
    return xp.new_explainer(lambda t: t["s"], data, "fixed", seed=0)


def test_fairness_fixtures_hand_tallied():
    """Five hand-tallied fixtures: metrics, ratios, and verdicts match exactly."""
    assert 1.0 / 0.8 == 1.25  # the epsilon-0.8 band really is [0.8, 1.25]

    # 1. identical groups -> every ratio 1, fair
    e = _fixed_score_explainer(
        ["p"] * 4 + ["u"] * 4, [1, 1, 0, 0] * 2, [0.9, 0.2, 0.8, 0.1] * 2
    )
    from exposition.fairness import fairness_metrics, subgroup_confusion

    confusion = subgroup_confusion(e, "g")
    for g in ("p", "u"):
        c = confusion.groups[g]
        assert (c.tp, c.fn, c.fp, c.tn) == (1, 1, 1, 1)
    scores = fairness_metrics(confusion)
    for g in ("p", "u"):
        assert scores.scores[g] == {"TPR": 0.5, "ACC": 0.5, "PPV": 0.5, "FPR": 0.5, "STP": 0.5}
    report = xp.fairness_check(e, "g", privileged="p", epsilon=0.8).detail
    assert report.verdict == "fair" and report.violations == []

    # 2. unprivileged group with no positives: TPR and PPV undefined, STP 0
    e = _fixed_score_explainer(
        ["p"] * 4 + ["u"] * 4,
        [1, 1, 0, 0, 0, 0, 0, 0],
        [0.9, 0.9, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1],
    )
    confusion = subgroup_confusion(e, "g")
    assert (confusion.groups["u"].tp, confusion.groups["u"].fn) == (0, 0)
    scores = fairness_metrics(confusion)
    assert scores.scores["u"]["TPR"] is None
    assert scores.scores["u"]["PPV"] is None
    assert scores.scores["u"]["STP"] == 0.0
    report = xp.fairness_check(e, "g", privileged="p", epsilon=0.8).detail
    # privileged FPR is 0 -> FPR skipped; STP ratio 0/0.5 = 0 -> violation
    assert "FPR" in report.skipped_metrics
    assert report.ratios["u"]["STP"] == 0.0
    assert report.verdict == "borderline" and len(report.violations) == 1
    assert report.undefined_count == 2

    # 3. per-group cutoffs: u's 0.4 score counts as positive at cutoff 0.3
    e = _fixed_score_explainer(["p", "p", "u", "u"], [1, 0, 1, 0], [0.6, 0.4, 0.4, 0.2])
    confusion = subgroup_confusion(e, "g", cutoff={"p": 0.5, "u": 0.3})
    assert (confusion.groups["p"].tp, confusion.groups["p"].tn) == (1, 1)
    assert (confusion.groups["u"].tp, confusion.groups["u"].tn) == (1, 1)
    report = xp.fairness_check(
        e, "g", privileged="p", epsilon=0.8, cutoff={"p": 0.5, "u": 0.3}
    ).detail
    assert report.verdict == "fair"

    # 4. TPR ratio (7/11)/(8/10) = 0.7954... -> exactly one violation, borderline
    p_scores = [0.9] * 4 + [0.1] + [0.9] + [0.1] * 4
    p_ys = [1] * 5 + [0] * 5
    u_scores = [0.9] * 7 + [0.1] * 4 + [0.9] * 2 + [0.1] * 7
    u_ys = [1] * 11 + [0] * 9
    e = _fixed_score_explainer(
        ["p"] * 10 + ["u"] * 20, p_ys + u_ys, p_scores + u_scores
    )
    confusion = subgroup_confusion(e, "g")
    assert (confusion.groups["p"].tp, confusion.groups["p"].fn) == (4, 1)
    assert (confusion.groups["p"].fp, confusion.groups["p"].tn) == (1, 4)
    assert (confusion.groups["u"].tp, confusion.groups["u"].fn) == (7, 4)
    assert (confusion.groups["u"].fp, confusion.groups["u"].tn) == (2, 7)
    report = xp.fairness_check(e, "g", privileged="p", epsilon=0.8).detail
    assert report.ratios["u"]["TPR"] == (7 / 11) / (8 / 10)
    assert (7 / 11) / (8 / 10) < 0.8
    assert [m for _, m, _ in report.violations] == ["TPR"]
    assert report.verdict == "borderline"

    # 5. ratios above 1.25 on TPR, FPR, STP -> not_fair
    p_scores = [0.9, 0.9, 0.1, 0.1] + [0.9, 0.9, 0.1, 0.1, 0.1, 0.1]
    p_ys = [1] * 4 + [0] * 6
    u_scores = [0.9] * 4 + [0.9, 0.9, 0.9, 0.1, 0.1, 0.1]
    u_ys = [1] * 4 + [0] * 6
    e = _fixed_score_explainer(["p"] * 10 + ["u"] * 10, p_ys + u_ys, p_scores + u_scores)
    scores = fairness_metrics(subgroup_confusion(e, "g"))
    assert scores.scores["p"] == {
        "TPR": 0.5, "ACC": 0.6, "PPV": 0.5, "FPR": 2 / 6, "STP": 0.4,
    }
    assert scores.scores["u"] == {
        "TPR": 1.0, "ACC": 0.7, "PPV": 4 / 7, "FPR": 0.5, "STP": 0.7,
    }
    report = xp.fairness_check(e, "g", privileged="p", epsilon=0.8).detail
    violated = sorted(m for _, m, _ in report.violations)
    assert violated == ["FPR", "STP", "TPR"]
    assert all(r > 1.25 for _, _, r in report.violations)
    assert report.verdict == "not_fair"


# ---------------------------------------------------------------------------
# End-to-end pipeline criteria.

CLI_KIND_FLAGS = {
    "performance": [],
    "breakdown": ["--instance", "7"],
    "shapley": ["--instance", "7", "--b", "8"],
    "cp": ["--instance", "7", "--grid-size", "21"],
    "importance": ["--b", "5"],
    "profile": ["--grid-size", "11"],
    "residuals": [],
    "surrogate": [],
    "fairness": ["--protected", "group", "--privileged", "a", "--epsilon", "0.8"],
}

SERVICE_PARAMS = {
    "performance": {},
    "breakdown": {"instance": 7},
    "shapley": {"instance": 7, "b": 8},
    "cp": {"instance": 7, "grid_size": 21},
    "importance": {"b": 5},
    "profile": {"grid_size": 11},
    "residuals": {},
    "surrogate": {},
    "fairness": {"protected": "group", "privileged": "a", "epsilon": 0.8},
}


@pytest.fixture(scope="module")
def e2e_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("e2e")
    rng = np.random.default_rng(4242)
    n = 48
    age = np.round(rng.uniform(20, 60, n), 3)
    income = np.round(rng.uniform(20, 90, n), 3)
    group = rng.choice(["a", "b"], n)
    logits = 0.1 * (age - 40) + 0.04 * (income - 55) + np.where(group == "a", 0.7, -0.7)
    y = (logits + rng.normal(0, 0.5, n) > 0).astype(int)
    csv = make_csv(
        {"age": list(age), "income": list(income), "group": list(group), "y": list(y)}
    )
    (path / "d.csv").write_text(csv, encoding="utf-8")
    (path / "m.json").write_text('{"type": "logistic"}', encoding="utf-8")
    return path


def _cli_args(e2e_dir, kind, out):
    return [
        sys.executable, "-m", "exposition", "explain",
        "--data", str(e2e_dir / "d.csv"),
        "--target", "y",
        "--model", f"{e2e_dir / 'm.json'}:L",
        "--kind", kind,
        "--seed", "42",
        "--out", str(out),
    ] + CLI_KIND_FLAGS[kind]


def _service_client(e2e_dir):
    from exposition.models import load_model_file

    with open(e2e_dir / "d.csv", "r", encoding="utf-8") as handle:
        data = xp.load_dataset(handle, target="y")
    predictor = load_model_file(e2e_dir / "m.json", data)
    explainer = xp.new_explainer(predictor, data, "L", seed=42)
    return TestClient(create_app(ArenaSession([explainer])))


def test_end_to_end_determinism_cli_and_service(e2e_dir):
    """CLI reruns are byte-identical and the service emits the same bytes."""
    client = _service_client(e2e_dir)
    for kind in CLI_KIND_FLAGS:
        out1 = e2e_dir / f"{kind}_1.json"
        out2 = e2e_dir / f"{kind}_2.json"
        for out in (out1, out2):
            proc = subprocess.run(_cli_args(e2e_dir, kind, out), capture_output=True)
            assert proc.returncode == 0, (kind, proc.stderr.decode())
        cli_bytes = out1.read_bytes()
        assert cli_bytes == out2.read_bytes(), kind

        response = client.post(
            "/api/compute", json={"kind": kind, "model": "L", "params": SERVICE_PARAMS[kind]}
        )
        assert response.status_code == 200, (kind, response.text)
        assert response.content == cli_bytes, kind


def test_external_predictor_round_trip_bitwise(e2e_dir, tmp_path):
    """A subprocess wrapping the built-in linear model explains identically."""
    rng = np.random.default_rng(17)
    n = 30
    csv = make_csv(
        {
            "x1": list(np.round(rng.uniform(-3, 3, n), 4)),
            "x2": list(np.round(rng.uniform(0, 5, n), 4)),
            "y": list(np.round(rng.uniform(-10, 10, n), 4)),
        }
    )
    data_path = tmp_path / "reg.csv"
    data_path.write_text(csv, encoding="utf-8")
    data = xp.load_dataset(csv, target="y")
    fitted = xp.fit_linear(data)
    fitted_path = tmp_path / "fitted.json"
    fitted_path.write_text(json.dumps(fitted.to_doc()), encoding="utf-8")

    (tmp_path / "in.json").write_text('{"type": "linear"}', encoding="utf-8")
    (tmp_path / "ext.json").write_text(
        json.dumps(
            {
                "type": "external",
                "command": [sys.executable, "-m", "exposition.wire", str(fitted_path)],
                "timeout": 30,
            }
        ),
        encoding="utf-8",
    )
    for kind, extra in (("breakdown", ["--instance", "3"]), ("performance", [])):
        outputs = []
        for spec in ("in.json", "ext.json"):
            out = tmp_path / f"{kind}_{spec}.out"
            proc = subprocess.run(
                [
                    sys.executable, "-m", "exposition", "explain",
                    "--data", str(data_path),
                    "--target", "y",
                    "--model", f"{tmp_path / spec}:L",
                    "--kind", kind,
                    "--seed", "42",
                    "--out", str(out),
                ] + extra,
                capture_output=True,
            )
            assert proc.returncode == 0, proc.stderr.decode()
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1], kind


def test_state_reproducibility_across_services(e2e_dir):
    """save_state -> fresh service -> load_state -> recompute, bitwise equal."""
    descriptors = [
        {"kind": "breakdown", "models": ["L"], "params": {"instance": 7, "seed": 42}},
        {"kind": "importance", "models": ["L"], "params": {"b": 5, "seed": 42}},
        {"kind": "profile", "models": ["L"], "params": {"grid_size": 11, "seed": 42}},
        {"kind": "fairness", "models": ["L"], "params": {"protected": "group", "privileged": "a"}},
    ]
    state = {
        "version": "1",
        "charts": descriptors,
        "observations": [{"row": 7, "overrides": {}}],
        "layout": list(range(len(descriptors))),
    }

    first = _service_client(e2e_dir)
    assert first.put("/api/state", json=state).status_code == 200
    saved = first.get("/api/state").json()
    originals = [
        first.post(
            "/api/compute",
            json={"kind": d["kind"], "model": d["models"][0], "params": d["params"]},
        ).content
        for d in saved["charts"]
    ]

    fresh = _service_client(e2e_dir)
    assert fresh.put("/api/state", json=saved).status_code == 200
    restored = fresh.get("/api/state").json()
    assert restored == saved
    recomputed = [
        fresh.post(
            "/api/compute",
            json={"kind": d["kind"], "model": d["models"][0], "params": d["params"]},
        ).content
        for d in restored["charts"]
    ]
    assert recomputed == originals
