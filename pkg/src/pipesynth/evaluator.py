"""Pipeline scoring: deterministic surrogate, brute-force oracle, memoizing
cache, and a JSON-lines client for external executor processes.

The surrogate assigns each primitive a weight derived from integer hashing
(splitmix64 over FNV-1a of the name), so scores are bit-identical across
platforms and the global optimum is computable by enumeration.
"""

from __future__ import annotations

import json
import os
import select
import subprocess
import threading
import time
from dataclasses import dataclass, field

from . import primitives
from .grammar import Grammar, enumerate_pipelines

MASK64 = (1 << 64) - 1

STATUS_OK = "ok"
STATUS_INVALID = "invalid_pipeline"
STATUS_ERROR = "error"

# Frozen constants of the surrogate benchmark, not tunables.
ESTIMATOR_WEIGHT = 0.5
TRANSFORM_WEIGHT = 0.3
CLEANER_WEIGHT = 0.2
LENGTH_PENALTY = 0.02

ENUMERATION_GUARD = 100_000


class ExecutorError(RuntimeError):
    """Executor process unusable (spawn or handshake failure)."""


def fnv1a64(name: str) -> int:
    """FNV-1a 64-bit hash of a UTF-8 string."""
    h = 0xCBF29CE484222325
    for byte in name.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & MASK64
    return h


def splitmix64(x: int) -> int:
    """One splitmix64 output step for state x (finalizer form)."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def primitive_weight(seed: int, name: str) -> float:
    """Surrogate weight w(name) in [0,1) for the given dataset seed.

    Integer arithmetic throughout, then a single division, so the value is
    reproducible bit-for-bit everywhere.
    """
    mixed = splitmix64((seed & MASK64) ^ fnv1a64(name))
    return (mixed % 1_000_000) / 1_000_000


@dataclass(frozen=True)
class EvaluationResult:
    score: float
    status: str
    wall_time: float = 0.0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK


@dataclass(frozen=True)
class SurrogateSpec:
    """Synthetic dataset identity for the surrogate evaluator.

    seed: 64-bit integer naming the synthetic dataset.
    roles: terminal name -> cleaner|transform|estimator. Names absent from
        the table are treated as estimators, so single-symbol toy languages
        score as bare-estimator pipelines.
    """

    seed: int
    roles: dict[str, str] = field(default_factory=primitives.default_roles)

    def weight(self, name: str) -> float:
        return primitive_weight(self.seed, name)

    def role(self, name: str) -> str:
        return self.roles.get(name, primitives.ESTIMATOR)


def _segments(spec: SurrogateSpec, pipeline):
    """Split a pipeline into (cleaners, transforms, estimators) or return
    None when the segment order cleaner -> transform -> estimator is broken."""
    order = {primitives.CLEANER: 0, primitives.TRANSFORM: 1, primitives.ESTIMATOR: 2}
    segs = ([], [], [])
    prev = 0
    for name in pipeline:
        rank = order[spec.role(name)]
        if rank < prev:
            return None
        segs[rank].append(name)
        prev = rank
    return segs


def surrogate_evaluate(spec: SurrogateSpec, pipeline) -> EvaluationResult:
    """Score a complete pipeline against the synthetic dataset.

    Structurally invalid pipelines (no single trailing estimator, or a
    cleaner after a transform) get status invalid_pipeline and score 0.
    Valid ones score
        0.5*w(estimator) + 0.3*mean_w(transforms) + 0.2*mean_w(cleaners)
        - 0.02*(len-1)
    clamped to [0,1], with mean over an empty segment taken as 0.
    """
    start = time.perf_counter()
    pipeline = tuple(pipeline)
    segs = _segments(spec, pipeline)
    invalid = (
        segs is None
        or len(segs[2]) != 1
        or (len(pipeline) > 0 and spec.role(pipeline[-1]) != primitives.ESTIMATOR)
    )
    if invalid:
        return EvaluationResult(
            score=0.0,
            status=STATUS_INVALID,
            wall_time=time.perf_counter() - start,
            message="pipeline violates cleaner/transform/estimator structure",
        )
    cleaners, transforms, estimators = segs
    score = ESTIMATOR_WEIGHT * spec.weight(estimators[0])
    if transforms:
        score += TRANSFORM_WEIGHT * sum(spec.weight(t) for t in transforms) / len(transforms)
    if cleaners:
        score += CLEANER_WEIGHT * sum(spec.weight(c) for c in cleaners) / len(cleaners)
    score -= LENGTH_PENALTY * (len(pipeline) - 1)
    score = min(1.0, max(0.0, score))
    return EvaluationResult(score=score, status=STATUS_OK, wall_time=time.perf_counter() - start)


class SurrogateEvaluator:
    """Evaluator interface over a SurrogateSpec."""

    def __init__(self, spec: SurrogateSpec):
        self.spec = spec

    def evaluate(self, pipeline) -> EvaluationResult:
        return surrogate_evaluate(self.spec, pipeline)


def brute_force_best(
    spec: SurrogateSpec, grammar: Grammar, max_terminals: int
) -> tuple[tuple[str, ...], float]:
    """Exact surrogate optimum over the grammar's language (capped length).

    Ties resolve to the lexicographically first pipeline. Guarded against
    languages above 10^5 pipelines.
    """
    best_pipe = None
    best_score = -1.0
    for pipe in enumerate_pipelines(grammar, max_terminals, limit=ENUMERATION_GUARD):
        score = surrogate_evaluate(spec, pipe).score
        if score > best_score or (score == best_score and pipe < best_pipe):
            best_pipe = pipe
            best_score = score
    if best_pipe is None:
        raise ValueError("grammar has no complete pipelines within the cap")
    return best_pipe, best_score


# ---------------------------------------------------------------------------
# Memoizing cache
# ---------------------------------------------------------------------------


class CachedEvaluator:
    """Memoizes an inner evaluator by pipeline; atomic get-or-insert.

    The lock is held across the underlying call, so a given pipeline is never
    evaluated twice even under concurrent use (underlying evaluations are
    serialized; episode-level parallelism stays coarse-grained).

    Cache misses are journaled in call order, which is what budget accounting
    and best-so-far tracking consume: misses are the expensive unit.
    """

    def __init__(self, inner):
        self.inner = inner
        self._lock = threading.Lock()
        self._cache: dict[tuple[str, ...], EvaluationResult] = {}
        self.hits = 0
        self.misses = 0
        self.journal: list[tuple[tuple[str, ...], EvaluationResult]] = []

    def evaluate(self, pipeline) -> EvaluationResult:
        key = tuple(pipeline)
        with self._lock:
            if key in self._cache:
                self.hits += 1
                return self._cache[key]
            result = self.inner.evaluate(key)
            self._cache[key] = result
            self.misses += 1
            self.journal.append((key, result))
            return result

    @property
    def evaluations(self) -> int:
        return self.misses

    def best(self):
        """(pipeline, result) of the highest-scoring ok evaluation so far."""
        best = None
        for pipe, res in self.journal:
            if res.status == STATUS_OK and (best is None or res.score > best[1].score):
                best = (pipe, res)
        return best


# ---------------------------------------------------------------------------
# External executor client
# ---------------------------------------------------------------------------


class _LineChannel:
    """Timeout-aware line reader over a subprocess stdout file descriptor."""

    def __init__(self, stream):
        self._stream = stream
        self._buf = bytearray()

    def readline(self, timeout: float):
        """Next newline-terminated line (bytes, stripped) or None on EOF;
        raises TimeoutError when nothing arrives in time."""
        deadline = time.monotonic() + timeout
        fd = self._stream.fileno()
        while True:
            newline = self._buf.find(b"\n")
            if newline >= 0:
                line = bytes(self._buf[:newline])
                del self._buf[: newline + 1]
                return line
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError("no response line before deadline")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                raise TimeoutError("no response line before deadline")
            chunk = os.read(fd, 65536)
            if not chunk:
                if self._buf:
                    line = bytes(self._buf)
                    self._buf.clear()
                    return line
                return None
            self._buf.extend(chunk)


class ExternalEvaluator:
    """Client for one executor subprocess speaking the JSON-lines protocol.

    Requests carry the dataset path, task, and metric this client was
    configured with. A crashed or unresponsive executor is restarted and the
    request retried once; a second failure is reported as an error result
    (score 0) and the search goes on.
    """

    PROTOCOL = 1

    def __init__(
        self,
        argv,
        dataset: str,
        task: str,
        metric: str,
        target_column: str | None = None,
        seed: int | None = None,
        timeout: float = 300.0,
    ):
        self.argv = list(argv)
        self.dataset = dataset
        self.task = task
        self.metric = metric
        self.target_column = target_column
        self.seed = seed
        self.timeout = timeout
        self._proc = None
        self._channel = None
        self._next_id = 0
        self.primitives: list[str] = []
        self.declared_metric = None
        self.failures = 0
        self._start()

    # -- process management

    def _start(self):
        try:
            self._proc = subprocess.Popen(
                self.argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        except OSError as exc:
            raise ExecutorError(f"cannot launch executor {self.argv!r}: {exc}") from exc
        self._channel = _LineChannel(self._proc.stdout)
        try:
            reply = self._roundtrip({"op": "hello", "protocol": self.PROTOCOL})
        except (TimeoutError, OSError, ValueError) as exc:
            self.close()
            raise ExecutorError(f"executor handshake failed: {exc}") from exc
        if reply.get("op") != "hello" or reply.get("protocol") != self.PROTOCOL:
            self.close()
            raise ExecutorError(f"bad handshake reply: {reply!r}")
        self.primitives = list(reply.get("primitives", []))
        self.declared_metric = reply.get("metric")

    def close(self):
        if self._proc is None:
            return
        try:
            if self._proc.stdin:
                self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()
        self._proc = None
        self._channel = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def _restart(self):
        self.close()
        self._start()

    # -- wire helpers

    def _send(self, obj):
        line = json.dumps(obj, sort_keys=True) + "\n"
        self._proc.stdin.write(line.encode("utf-8"))
        self._proc.stdin.flush()

    def _roundtrip(self, obj):
        self._send(obj)
        line = self._channel.readline(self.timeout)
        if line is None:
            raise OSError("executor closed its output stream")
        return json.loads(line.decode("utf-8"))

    def check_primitives(self, grammar: Grammar) -> list[str]:
        """Grammar terminals the executor did not declare in its handshake."""
        declared = set(self.primitives)
        return [t for t in grammar.terminal_names if t not in declared]

    # -- evaluation

    def _request_once(self, pipeline) -> EvaluationResult:
        self._next_id += 1
        req_id = self._next_id
        request = {
            "id": req_id,
            "op": "evaluate",
            "pipeline": list(pipeline),
            "dataset": self.dataset,
            "task": self.task,
            "metric": self.metric,
        }
        if self.target_column is not None:
            request["target_column"] = self.target_column
        if self.seed is not None:
            request["seed"] = self.seed
        self._send(request)
        deadline = time.monotonic() + self.timeout
        for _ in range(100):
            line = self._channel.readline(max(0.001, deadline - time.monotonic()))
            if line is None:
                raise OSError("executor closed its output stream")
            reply = json.loads(line.decode("utf-8"))
            if reply.get("id") == req_id:
                break
        else:
            raise ValueError("executor never echoed the request id")
        status = reply.get("status")
        if status not in (STATUS_OK, STATUS_INVALID, STATUS_ERROR):
            raise ValueError(f"executor sent unknown status {status!r}")
        if status == STATUS_OK:
            score = float(reply.get("score", 0.0))
            score = min(1.0, max(0.0, score))
        else:
            score = 0.0
        return EvaluationResult(score=score, status=status, message=str(reply.get("message", "")))

    def evaluate(self, pipeline) -> EvaluationResult:
        start = time.perf_counter()
        attempts = 0
        while True:
            attempts += 1
            try:
                result = self._request_once(pipeline)
                return EvaluationResult(
                    score=result.score,
                    status=result.status,
                    wall_time=time.perf_counter() - start,
                    message=result.message,
                )
            except (TimeoutError, OSError, ValueError) as exc:
                self.failures += 1
                if attempts > 1:
                    return EvaluationResult(
                        score=0.0,
                        status=STATUS_ERROR,
                        wall_time=time.perf_counter() - start,
                        message=f"executor failed twice: {exc}",
                    )
                try:
                    self._restart()
                except ExecutorError as restart_exc:
                    return EvaluationResult(
                        score=0.0,
                        status=STATUS_ERROR,
                        wall_time=time.perf_counter() - start,
                        message=str(restart_exc),
                    )


# ---------------------------------------------------------------------------
# Dataset manifests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    path: str
    task: str
    target_column: str


def load_manifest(path: str) -> list[DatasetEntry]:
    """Read a JSON-array manifest of datasets.

    Each entry needs name/path/task/target_column; relative paths are
    resolved against the manifest's own directory.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ValueError(f"manifest {path} is not a JSON array")
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    for i, item in enumerate(raw):
        missing = [k for k in ("name", "path", "task", "target_column") if k not in item]
        if missing:
            raise ValueError(f"manifest {path} entry {i} missing fields: {', '.join(missing)}")
        if item["task"] not in ("classification", "regression"):
            raise ValueError(f"manifest {path} entry {i} has unknown task {item['task']!r}")
        data_path = item["path"]
        if not os.path.isabs(data_path):
            data_path = os.path.join(base, data_path)
        entries.append(
            DatasetEntry(
                name=item["name"],
                path=data_path,
                task=item["task"],
                target_column=item["target_column"],
            )
        )
    return entries
