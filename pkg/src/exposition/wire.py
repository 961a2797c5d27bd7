"""Line protocol so any external process can act as the black box.

One JSON request line per call on the child's stdin:

    {"columns": ["age", "group"], "rows": [[31, "a"], [54, "b"]]}

and one response line on its stdout:

    {"predictions": [0.12, 0.98]}

Floats are written with 17 significant digits so 64-bit values round-trip
bit-exactly. The process stays alive across calls; calls are serialized (one
in-flight request). Run ``python -m exposition.wire model.json`` to serve a
fitted model document over this protocol.
"""

from __future__ import annotations

import json
import math
import queue
import subprocess
import sys
import threading
from typing import Any, Sequence

import numpy as np

from .data import CATEGORICAL, Table
from .errors import ExternalTimeoutError, ProtocolError

_EOF = object()


def wire_dumps(obj: Any) -> str:
    """JSON with floats as 17-significant-digit decimal literals."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return repr(int(obj))
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            raise ProtocolError("non-finite number on the wire")
        text = format(value, ".17g")
        if not any(c in text for c in ".eE"):
            text += ".0"  # keep float typing (and the sign of -0.0) on parse
        return text
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(wire_dumps(v) for v in obj) + "]"
    if isinstance(obj, dict):
        return "{" + ",".join(
            json.dumps(str(k), ensure_ascii=False) + ":" + wire_dumps(v)
            for k, v in obj.items()
        ) + "}"
    raise ProtocolError(f"cannot serialize {type(obj).__name__} on the wire")


class ExternalPredictor:
    """Predictor backed by a subprocess speaking the line protocol."""

    def __init__(self, command: Sequence[str], timeout: float = 10.0):
        self.command = list(command)
        self.timeout = float(timeout)
        self._lock = threading.Lock()
        self._process: subprocess.Popen | None = None
        self._lines: queue.Queue = queue.Queue()
        self._stderr: list[str] = []

    def _start(self) -> None:
        try:
            self._process = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ProtocolError(f"cannot spawn {self.command[0]!r}: {exc}") from exc
        threading.Thread(target=self._drain_stdout, daemon=True).start()
        threading.Thread(target=self._drain_stderr, daemon=True).start()

    def _drain_stdout(self) -> None:
        assert self._process and self._process.stdout
        for line in self._process.stdout:
            self._lines.put(line)
        self._lines.put(_EOF)

    def _drain_stderr(self) -> None:
        assert self._process and self._process.stderr
        for line in self._process.stderr:
            self._stderr.append(line)

    def _captured_stderr(self) -> str:
        return "".join(self._stderr)

    def score(self, rows: Table) -> np.ndarray:
        with self._lock:
            if self._process is None:
                self._start()
            assert self._process and self._process.stdin
            columns = list(rows)
            n = len(rows[columns[0]]) if columns else 0
            request = {
                "columns": columns,
                "rows": [[rows[c][i] for c in columns] for i in range(n)],
            }
            try:
                self._process.stdin.write(wire_dumps(request) + "\n")
                self._process.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise ProtocolError(
                    f"external predictor closed its input: {exc}",
                    stderr=self._captured_stderr(),
                ) from exc

            try:
                line = self._lines.get(timeout=self.timeout)
            except queue.Empty:
                self.close()
                raise ExternalTimeoutError(
                    f"no response within {self.timeout} s"
                ) from None
            if line is _EOF:
                raise ProtocolError(
                    "external predictor exited mid-call",
                    stderr=self._captured_stderr(),
                )
            try:
                message = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ProtocolError(
                    f"malformed response line: {exc}",
                    stderr=self._captured_stderr(),
                ) from exc
            predictions = message.get("predictions")
            if not isinstance(predictions, list) or len(predictions) != n:
                raise ProtocolError(
                    f"expected {n} predictions, got "
                    f"{len(predictions) if isinstance(predictions, list) else 'none'}",
                    stderr=self._captured_stderr(),
                )
            return np.asarray(predictions, dtype=np.float64)

    def close(self) -> None:
        if self._process is not None and self._process.poll() is None:
            self._process.terminate()
            try:
                self._process.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._process.kill()

    def __del__(self):  # pragma: no cover - best effort cleanup
        try:
            self.close()
        except Exception:
            pass


def _build_table(model: Any, columns: list[str], rows: list[list]) -> Table:
    kinds = model.column_kinds()
    table: Table = {}
    for j, name in enumerate(columns):
        cells = [row[j] for row in rows]
        if kinds.get(name) == CATEGORICAL:
            table[name] = np.array([str(c) for c in cells], dtype=object)
        else:
            table[name] = np.array([float(c) for c in cells], dtype=np.float64)
    return table


def serve_model(model: Any, stdin=None, stdout=None) -> None:
    """Answer protocol requests until stdin closes."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        request = json.loads(line)
        table = _build_table(model, request["columns"], request["rows"])
        if request["rows"]:
            predictions = [float(v) for v in model.score(table)]
        else:
            predictions = []
        stdout.write(wire_dumps({"predictions": predictions}) + "\n")
        stdout.flush()


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if len(argv) != 1:
        print("usage: python -m exposition.wire MODEL_DOC.json", file=sys.stderr)
        return 2
    from .models import model_from_doc

    with open(argv[0], "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    if not str(doc.get("type", "")).startswith("fitted_"):
        print("wire worker requires a fitted_* model document", file=sys.stderr)
        return 2
    serve_model(model_from_doc(doc, data=None))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
