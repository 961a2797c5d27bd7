"""Command-line entry point.

``exposition explain`` computes one method for one or more models over a CSV
dataset and writes the serialized explanations to a file (a JSON object for
one model, an array for several). ``exposition serve`` starts the dashboard
service. Reruns with the same flags and files produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

from .arena import ArenaSession, create_app, default_ui_dir
from .data import load_dataset
from .dispatch import CHART_KINDS, compute_explanation
from .errors import ExpositionError
from .explainer import new_explainer
from .models import load_model_file
from .result import explanations_json_bytes

PREDICT_LEVEL_KINDS = tuple(k for k, s in CHART_KINDS.items() if s["needs_instance"])


def worker_count(n_tasks: int) -> int:
    cap = os.environ.get("EXPOSITION_THREADS")
    if cap:
        try:
            return max(1, min(n_tasks, int(cap)))
        except ValueError:
            pass
    return max(1, min(n_tasks, os.cpu_count() or 1))


def _parse_model_flag(value: str) -> tuple[str, str]:
    if ":" in value:
        path, label = value.rsplit(":", 1)
        if path and label:
            return path, label
    return value, Path(value).stem


def _add_shared_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="CSV file with a header row")
    parser.add_argument("--target", required=True, help="target column name")
    parser.add_argument(
        "--model",
        action="append",
        required=True,
        metavar="PATH[:LABEL]",
        help="model spec file; label defaults to the file stem (repeatable)",
    )
    parser.add_argument("--seed", type=int, default=42)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exposition")
    sub = parser.add_subparsers(dest="command", required=True)

    explain = sub.add_parser("explain", help="compute explanations and write JSON")
    _add_shared_flags(explain)
    explain.add_argument("--kind", required=True, choices=sorted(CHART_KINDS))
    explain.add_argument("--instance", type=int, help="row index for predict-level kinds")
    explain.add_argument("--variables", help="comma-separated variable names")
    explain.add_argument("--protected", help="protected column (fairness)")
    explain.add_argument("--privileged", help="privileged subgroup (fairness)")
    explain.add_argument("--epsilon", type=float, help="fairness ratio bound")
    explain.add_argument("--grid-size", type=int, dest="grid_size")
    explain.add_argument("--b", type=int, help="repetitions / sampled orderings")
    explain.add_argument("--out", required=True, help="output file")

    serve = sub.add_parser("serve", help="start the dashboard service")
    _add_shared_flags(serve)
    serve.add_argument("--port", type=int, default=8042)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--state", help="state file to restore at startup")
    return parser


def _build_explainers(args: argparse.Namespace, parser: argparse.ArgumentParser):
    pairs = [_parse_model_flag(flag) for flag in args.model]
    labels = [label for _, label in pairs]
    if len(set(labels)) != len(labels):
        parser.error("model labels must be unique")
    with open(args.data, "r", encoding="utf-8") as handle:
        data = load_dataset(handle, target=args.target)
    explainers = []
    for path, label in pairs:
        predictor = load_model_file(path, data)
        explainers.append(new_explainer(predictor, data, label, seed=args.seed))
    return explainers


def _explain_params(args: argparse.Namespace) -> dict:
    params: dict = {}
    if args.instance is not None:
        params["instance"] = args.instance
    if args.variables is not None:
        params["variables"] = args.variables
    if args.protected is not None:
        params["protected"] = args.protected
    if args.privileged is not None:
        params["privileged"] = args.privileged
    if args.epsilon is not None:
        params["epsilon"] = args.epsilon
    if args.grid_size is not None:
        params["grid_size"] = args.grid_size
    if args.b is not None:
        params["b"] = args.b
    return params


def run_explain(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.kind in PREDICT_LEVEL_KINDS and args.instance is None:
        parser.error(f"--kind {args.kind} requires --instance")
    if args.kind == "fairness" and (args.protected is None or args.privileged is None):
        parser.error("--kind fairness requires --protected and --privileged")
    try:
        explainers = _build_explainers(args, parser)
        params = _explain_params(args)
        with ThreadPoolExecutor(max_workers=worker_count(len(explainers))) as pool:
            futures = [
                pool.submit(compute_explanation, e, args.kind, params)
                for e in explainers
            ]
            explanations = [f.result() for f in futures]
        payload = explanations_json_bytes(explanations)
        with open(args.out, "wb") as out:
            out.write(payload)
    except (ExpositionError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _port_free(host: str, port: int) -> bool:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as probe:
        try:
            probe.bind((host, port))
        except OSError:
            return False
    return True


def run_serve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        explainers = _build_explainers(args, parser)
        session = ArenaSession(explainers)
        if args.state:
            with open(args.state, "r", encoding="utf-8") as handle:
                session.load_state(json.load(handle))
    except (ExpositionError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not _port_free(args.host, args.port):
        print(f"error: port {args.port} is already in use", file=sys.stderr)
        return 1

    import uvicorn

    app = create_app(session, ui_dir=default_ui_dir())
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "explain":
        return run_explain(args, parser)
    return run_serve(args, parser)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
