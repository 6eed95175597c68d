import io
import json

from sklexec import bundled_dataset
from sklexec.server import PROTOCOL, handle_line, serve

HELLO = json.dumps({"op": "hello", "protocol": PROTOCOL})


def run_serve(raw_lines):
    stdout = io.StringIO()
    assert serve(io.StringIO("".join(raw_lines)), stdout) == 0
    return [json.loads(line) for line in stdout.getvalue().splitlines()]


def evaluate_request(req_id, pipeline, **extra):
    request = {"id": req_id, "op": "evaluate", "pipeline": pipeline,
               "dataset": bundled_dataset(), "task": "classification",
               "metric": "f1", "seed": 0, "target_column": "species"}
    request.update(extra)
    return json.dumps(request) + "\n"


def test_handshake_declares_registry():
    replies = run_serve([HELLO + "\n"])
    assert len(replies) == 1
    hello = replies[0]
    assert hello["op"] == "hello"
    assert hello["protocol"] == PROTOCOL
    assert hello["metric"] == "f1"
    assert len(hello["primitives"]) == 51
    assert "SkImputer" in hello["primitives"]


def test_evaluate_round_trip_echoes_id():
    replies = run_serve([HELLO + "\n", evaluate_request(7, ["SkImputer", "GaussianNB"])])
    result = replies[1]
    assert result["id"] == 7
    assert result["status"] == "ok"
    assert 0.0 <= result["score"] <= 1.0


def test_estimator_not_last_is_invalid():
    replies = run_serve([evaluate_request(1, ["GaussianNB", "PCA"])])
    assert replies[0]["status"] == "invalid_pipeline"
    assert replies[0]["score"] == 0.0


def test_malformed_json_line_gets_id_minus_one_and_loop_survives():
    replies = run_serve(["this is not json\n",
                         evaluate_request(2, ["SkImputer", "GaussianNB"])])
    assert replies[0]["id"] == -1
    assert replies[0]["status"] == "error"
    assert replies[1]["id"] == 2
    assert replies[1]["status"] == "ok"


def test_non_object_json_is_an_error_line():
    replies = run_serve(["42\n", "[1, 2]\n"])
    assert [r["id"] for r in replies] == [-1, -1]
    assert all(r["status"] == "error" for r in replies)


def test_unknown_op_and_missing_dataset_are_errors():
    lines = [
        json.dumps({"id": 3, "op": "shutdown"}) + "\n",
        json.dumps({"id": 4, "op": "evaluate", "pipeline": ["GaussianNB"]}) + "\n",
    ]
    replies = run_serve(lines)
    assert replies[0] == {"id": 3, "status": "error", "score": 0.0,
                          "message": "unknown op 'shutdown'"}
    assert replies[1]["id"] == 4
    assert replies[1]["status"] == "error"
    assert "dataset" in replies[1]["message"]


def test_fuzzed_lines_each_get_exactly_one_response():
    fuzz = [
        '{"op": "evaluate"\n',
        '{"op": []}\n',
        '\x00\x01garbage\n',
        json.dumps({"op": "evaluate", "pipeline": "GaussianNB",
                    "dataset": bundled_dataset()}) + "\n",
        HELLO + "\n",
    ]
    replies = run_serve(fuzz)
    assert len(replies) == len(fuzz)
    assert replies[-1]["op"] == "hello"


def test_blank_lines_are_ignored():
    replies = run_serve(["\n", "   \n", HELLO + "\n"])
    assert len(replies) == 1


def test_handle_line_never_raises_on_unstringable_payloads():
    reply = handle_line(json.dumps({"op": "evaluate", "id": 9, "pipeline": [{}],
                                    "dataset": bundled_dataset()}))
    assert reply["id"] == 9
    assert reply["status"] == "invalid_pipeline"
