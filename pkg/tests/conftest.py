import numpy as np
import pytest

import exposition as xp


def make_csv(columns: dict[str, list]) -> str:
    names = list(columns)
    lines = [",".join(names)]
    n = len(columns[names[0]])
    for i in range(n):
        lines.append(",".join(str(columns[name][i]) for name in names))
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="session")
def reg_data() -> xp.Dataset:
    rng = np.random.default_rng(7)
    n = 40
    x1 = rng.uniform(-3, 3, n)
    x2 = rng.uniform(0, 10, n)
    c = rng.choice(["low", "mid", "high"], n)
    y = 2.0 * x1 - 0.5 * x2 + np.where(c == "high", 3.0, 0.0) + rng.normal(0, 0.3, n)
    return xp.from_columns(
        {"x1": x1, "x2": x2, "c": list(c), "y": y}, target="y"
    )


@pytest.fixture(scope="session")
def cls_data() -> xp.Dataset:
    rng = np.random.default_rng(11)
    n = 60
    age = rng.uniform(20, 60, n)
    income = rng.uniform(20000, 90000, n)
    group = rng.choice(["a", "b"], n)
    logits = 0.08 * (age - 40) + 0.00008 * (income - 50000) + np.where(group == "a", 0.4, -0.4)
    y = (logits + rng.normal(0, 0.5, n) > 0).astype(float)
    if y.min() == y.max():  # pragma: no cover - seed chosen to avoid this
        y[0] = 1.0 - y[0]
    return xp.from_columns(
        {"age": age, "income": income, "group": list(group), "y": y}, target="y"
    )


@pytest.fixture(scope="session")
def linear_explainer(reg_data) -> xp.Explainer:
    return xp.new_explainer(xp.fit_linear(reg_data), reg_data, "linear", seed=42)


@pytest.fixture(scope="session")
def logistic_explainer(cls_data) -> xp.Explainer:
    return xp.new_explainer(xp.fit_logistic(cls_data), cls_data, "logistic", seed=42)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" in getattr(report, "nodeid", ""):
                name = report.nodeid.split("::")[-1]
                rows.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, verdict in rows:
            terminalreporter.write_line(f"{verdict}  {name}")
