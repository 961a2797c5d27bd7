"""HTTP service for the interactive model-comparison dashboard.

Endpoints:

    GET  /api/info     service descriptor: models, schema, chart kinds
    GET  /api/charts   chart-kind registry with parameter specs
    POST /api/compute  body {"kind", "model", "params"} -> explanation JSON
    GET  /api/state    current dashboard state document
    PUT  /api/state    replace the dashboard state document

Responses reuse the canonical explanation bytes, cached per
(model, kind, normalized parameters), so a warm cache, a cold cache, and the
CLI all emit identical bytes for the same request.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Any, Mapping

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from . import __version__
from .dispatch import CHART_KINDS, chart_descriptors, compute_explanation, normalize_params
from .errors import ExpositionError, ParameterError
from .explainer import Explainer
from .result import canonical_json_bytes

STATE_VERSION = "1"


def empty_state() -> dict:
    return {"version": STATE_VERSION, "charts": [], "observations": [], "layout": []}


class StateError(ExpositionError):
    def __init__(self, message: str, unresolved: list[str]):
        super().__init__(message)
        self.unresolved = unresolved


class ArenaSession:
    """Registered explainers, the explanation cache, and the dashboard state."""

    def __init__(self, explainers: list[Explainer]):
        if not explainers:
            raise ParameterError("at least one model is required", field="models")
        labels = [e.label for e in explainers]
        if len(set(labels)) != len(labels):
            raise ParameterError("model labels must be unique", field="models")
        first = explainers[0].data
        for e in explainers[1:]:
            if e.data is not first:
                raise ParameterError(
                    "all models must share one dataset", field="models"
                )
        self.explainers = {e.label: e for e in explainers}
        self.data = first
        self._cache: dict[tuple, bytes] = {}
        self._state = empty_state()
        self._lock = threading.RLock()

    def compute(self, kind: str, label: str, params: Mapping[str, Any]) -> bytes:
        explainer = self.explainers.get(label)
        if explainer is None:
            raise KeyError(label)
        normalized = normalize_params(kind, params)
        key = (label, kind, canonical_json_bytes(normalized))
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        payload = compute_explanation(explainer, kind, normalized).to_json_bytes()
        with self._lock:
            # Concurrent duplicates compute equal bytes; last write wins.
            self._cache[key] = payload
        return payload

    def info(self) -> dict:
        columns = []
        for col in self.data.schema:
            entry: dict = {"name": col.name, "kind": col.kind}
            if col.levels:
                entry["levels"] = list(col.levels)
            columns.append(entry)
        return {
            "version": __version__,
            "models": list(self.explainers),
            "task": next(iter(self.explainers.values())).task.value,
            "target": self.data.target,
            "n_rows": self.data.n_rows,
            "columns": columns,
            "charts": chart_descriptors(),
        }

    def get_state(self) -> dict:
        with self._lock:
            return self._state

    def load_state(self, state: Any) -> dict:
        if not isinstance(state, Mapping):
            raise ParameterError("state must be an object", field="state")
        version = state.get("version")
        if version != STATE_VERSION:
            raise StateError(
                f"unsupported state version {version!r}", [f"version:{version!r}"]
            )
        unresolved: list[str] = []
        charts = state.get("charts", [])
        if not isinstance(charts, list):
            raise ParameterError("state.charts must be a list", field="state")
        for chart in charts:
            kind = chart.get("kind")
            if kind not in CHART_KINDS:
                unresolved.append(f"kind:{kind}")
            for label in chart.get("models", []):
                if label not in self.explainers:
                    unresolved.append(f"model:{label}")
        observations = state.get("observations", [])
        if not isinstance(observations, list):
            raise ParameterError("state.observations must be a list", field="state")
        for obs in observations:
            row = obs.get("row")
            if not isinstance(row, int) or not 0 <= row < self.data.n_rows:
                unresolved.append(f"row:{row}")
        if unresolved:
            raise StateError("state references unknown objects", unresolved)
        with self._lock:
            self._state = dict(state)
        return {
            "status": "ok",
            "charts": len(charts),
            "observations": len(observations),
        }


def _json_response(payload: Any, status_code: int = 200) -> Response:
    return Response(
        content=canonical_json_bytes(payload),
        status_code=status_code,
        media_type="application/json",
    )


def create_app(session: ArenaSession, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="exposition arena", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/api/info")
    def get_info() -> Response:
        return _json_response(session.info())

    @app.get("/api/charts")
    def get_charts() -> Response:
        return _json_response(chart_descriptors())

    @app.post("/api/compute")
    async def post_compute(request: Request) -> Response:
        try:
            body = await request.json()
        except Exception:
            return _json_response(
                {"detail": [{"field": "body", "message": "invalid JSON body"}]}, 422
            )
        if not isinstance(body, dict):
            return _json_response(
                {"detail": [{"field": "body", "message": "expected an object"}]}, 422
            )
        kind = body.get("kind")
        label = body.get("model")
        params = body.get("params") or {}
        if not isinstance(params, dict):
            return _json_response(
                {"detail": [{"field": "params", "message": "expected an object"}]}, 422
            )
        if not isinstance(label, str):
            return _json_response(
                {"detail": [{"field": "model", "message": "model label is required"}]},
                422,
            )
        try:
            payload = session.compute(kind, label, params)
        except KeyError:
            return _json_response(
                {"detail": [{"field": "model", "message": f"unknown model {label!r}"}]},
                404,
            )
        except ParameterError as exc:
            return _json_response(
                {"detail": [{"field": exc.field or "params", "message": str(exc)}]}, 422
            )
        except ExpositionError as exc:
            return _json_response(
                {"detail": [{"field": "params", "message": str(exc)}]}, 422
            )
        return Response(content=payload, media_type="application/json")

    @app.get("/api/state")
    def get_state() -> Response:
        return _json_response(session.get_state())

    @app.put("/api/state")
    async def put_state(request: Request) -> Response:
        try:
            body = await request.json()
        except Exception:
            return _json_response(
                {"detail": [{"field": "state", "message": "invalid JSON body"}]}, 422
            )
        try:
            ack = session.load_state(body)
        except StateError as exc:
            return _json_response(
                {"message": str(exc), "unresolved": exc.unresolved}, 409
            )
        except ParameterError as exc:
            return _json_response(
                {"detail": [{"field": exc.field or "state", "message": str(exc)}]}, 422
            )
        return _json_response(ack)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return (
                "<html><body><h1>exposition arena</h1>"
                "<p>The dashboard UI is not built. API endpoints: "
                "<a href='/api/info'>/api/info</a>, <a href='/api/charts'>/api/charts</a>, "
                "POST /api/compute, GET/PUT /api/state.</p></body></html>"
            )

    return app


def default_ui_dir() -> Path | None:
    """Locate built dashboard assets next to the working tree, if any."""
    import os

    override = os.environ.get("EXPOSITION_UI_DIR")
    candidates = [Path(override)] if override else []
    candidates.append(Path.cwd() / "frontend" / "dist")
    for candidate in candidates:
        if candidate.is_dir() and (candidate / "index.html").exists():
            return candidate
    return None
