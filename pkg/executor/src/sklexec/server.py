"""Serial JSON-lines serve loop: one response per request line, no crashes."""

import json
import sys

from .registry import primitive_names
from .scoring import STATUS_ERROR, score_pipeline

PROTOCOL = 1


def _hello_reply():
    return {
        "op": "hello",
        "protocol": PROTOCOL,
        "primitives": primitive_names(),
        "metric": "f1",
    }


def _evaluate_reply(request):
    req_id = request.get("id", -1)
    pipeline = request.get("pipeline")
    dataset = request.get("dataset")
    task = request.get("task", "classification")
    metric = request.get("metric") or ("r2" if task == "regression" else "f1")
    if not isinstance(dataset, str) or not dataset:
        return {"id": req_id, "status": STATUS_ERROR, "score": 0.0,
                "message": "request carries no dataset path"}
    if not isinstance(pipeline, list):
        pipeline = []
    status, score, message = score_pipeline(
        pipeline, dataset, task, metric,
        seed=request.get("seed"), target_column=request.get("target_column"),
    )
    return {"id": req_id, "status": status, "score": score, "message": message}


def handle_line(line: str):
    """Response object for one raw request line; never raises."""
    try:
        request = json.loads(line)
        if not isinstance(request, dict):
            raise ValueError("request is not an object")
    except ValueError as exc:
        return {"id": -1, "status": STATUS_ERROR, "score": 0.0,
                "message": f"bad request line: {exc}"}
    try:
        op = request.get("op")
        if op == "hello":
            return _hello_reply()
        if op == "evaluate":
            return _evaluate_reply(request)
        return {"id": request.get("id", -1), "status": STATUS_ERROR, "score": 0.0,
                "message": f"unknown op {op!r}"}
    except Exception as exc:
        return {"id": request.get("id", -1), "status": STATUS_ERROR, "score": 0.0,
                "message": f"internal failure: {exc}"}


def serve(stdin=None, stdout=None) -> int:
    """Answer requests until EOF on stdin."""
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    for line in stdin:
        if not line.strip():
            continue
        stdout.write(json.dumps(handle_line(line), sort_keys=True) + "\n")
        stdout.flush()
    return 0


def main() -> int:
    return serve()


if __name__ == "__main__":
    sys.exit(main())
