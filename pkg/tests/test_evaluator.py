import json

import pytest

from pipesynth import primitives
from pipesynth.evaluator import (
    CachedEvaluator,
    EvaluationResult,
    ExecutorError,
    ExternalEvaluator,
    STATUS_ERROR,
    STATUS_INVALID,
    STATUS_OK,
    SurrogateEvaluator,
    SurrogateSpec,
    brute_force_best,
    fnv1a64,
    load_manifest,
    primitive_weight,
    splitmix64,
    surrogate_evaluate,
)
from pipesynth.grammar import EnumerationLimitError, parse_grammar

from conftest import LOOPBACK

TOY_ROLES = primitives.roles_from_sections(
    cleaners=["c1", "c2"], transforms=["t1", "t2"], estimators=["e1", "e2", "e3"]
)
TOY7 = SurrogateSpec(seed=7, roles=TOY_ROLES)

# frozen from an independent pure-integer reimplementation run before the build
TOY7_WEIGHTS = {
    "c1": 0.524243,
    "c2": 0.921361,
    "t1": 0.427612,
    "t2": 0.833330,
    "e1": 0.330124,
    "e2": 0.506110,
    "e3": 0.207973,
}


def test_hash_published_vectors():
    assert fnv1a64("") == 0xCBF29CE484222325
    assert fnv1a64("a") == 0xAF63DC4C8601EC8C
    assert fnv1a64("foobar") == 0x85944171F73967E8
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_primitive_weights_match_independent_oracle():
    # exact equality: both sides are the correctly rounded double of N/10^6
    for name, expected in TOY7_WEIGHTS.items():
        assert primitive_weight(7, name) == expected
    assert primitive_weight(7, "a") == 0.130002


def test_single_estimator_score_is_half_its_weight():
    res = surrogate_evaluate(TOY7, ("e1",))
    assert res.status == STATUS_OK
    assert res.score == pytest.approx(0.165062, abs=1e-12)
    # e2 has the max weight among estimators: the length-1 optimum
    best_single = max(("e1", "e2", "e3"), key=lambda n: TOY7.weight(n))
    assert best_single == "e2"
    assert surrogate_evaluate(TOY7, ("e2",)).score == pytest.approx(0.253055, abs=1e-12)


def test_full_pipeline_score():
    res = surrogate_evaluate(TOY7, ("c1", "t1", "e1"))
    assert res.ok
    assert res.score == pytest.approx(0.3581942, abs=1e-12)


def test_structural_contract_rejections():
    for bad in [
        (),  # empty
        ("e1", "e2"),  # two estimators
        ("e1", "t1"),  # estimator not last
        ("t1", "c1", "e1"),  # cleaner after transform
        ("c1", "t1"),  # no estimator
        ("e1", "c1", "e2"),
    ]:
        res = surrogate_evaluate(TOY7, bad)
        assert res.status == STATUS_INVALID
        assert res.score == 0.0


def test_unknown_terminal_defaults_to_estimator_role():
    assert TOY7.role("mystery") == primitives.ESTIMATOR
    res = surrogate_evaluate(TOY7, ("c1", "mystery"))
    assert res.ok
    expected = 0.5 * TOY7.weight("mystery") + 0.2 * TOY7.weight("c1") - 0.02
    assert res.score == pytest.approx(expected, abs=1e-12)


def test_appending_transform_formula_delta():
    base = surrogate_evaluate(TOY7, ("c1", "t1", "e1")).score
    extended = surrogate_evaluate(TOY7, ("c1", "t1", "t2", "e1")).score
    old_mean = TOY7.weight("t1")
    new_mean = (TOY7.weight("t1") + TOY7.weight("t2")) / 2
    assert extended - base == pytest.approx(0.3 * (new_mean - old_mean) - 0.02, abs=1e-12)


def test_score_clamped_to_unit_interval(toy_grammar):
    from pipesynth.grammar import enumerate_pipelines

    for p in enumerate_pipelines(toy_grammar, 3):
        for seed in (1, 7, 123456789):
            s = surrogate_evaluate(SurrogateSpec(seed=seed, roles=TOY_ROLES), p).score
            assert 0.0 <= s <= 1.0


def test_brute_force_singleton_language():
    g = parse_grammar("<S> ::= a\n")
    pipeline, best = brute_force_best(SurrogateSpec(seed=7), g, max_terminals=3)
    assert pipeline == ("a",)
    assert best == pytest.approx(0.5 * 0.130002, abs=1e-12)


def test_brute_force_toy_frozen_oracle(toy_grammar):
    pipeline, best = brute_force_best(TOY7, toy_grammar, max_terminals=3)
    assert pipeline == ("c2", "t2", "e2")
    assert best == pytest.approx(0.6473262, abs=1e-12)


def test_brute_force_dominates_every_pipeline(toy_grammar):
    from pipesynth.grammar import enumerate_pipelines

    _, best = brute_force_best(TOY7, toy_grammar, max_terminals=3)
    for p in enumerate_pipelines(toy_grammar, 3):
        assert surrogate_evaluate(TOY7, p).score <= best


def test_brute_force_tie_breaks_lexicographically():
    # every sentence is two estimators, so all score 0: pure tie
    g = parse_grammar("<S> ::= x y | a b\n")
    pipeline, best = brute_force_best(SurrogateSpec(seed=1), g, max_terminals=2)
    assert best == 0.0
    assert pipeline == ("a", "b")


def test_brute_force_enumeration_guard():
    lines = ["<S> ::= " + " ".join(f"<X{i}>" for i in range(6))]
    lines += [f"<X{i}> ::= " + " | ".join(f"t{i}_{j}" for j in range(10)) for i in range(6)]
    g = parse_grammar("\n".join(lines) + "\n")
    with pytest.raises(EnumerationLimitError):
        brute_force_best(SurrogateSpec(seed=1), g, max_terminals=6)


def test_result_invariants():
    ok = EvaluationResult(score=0.5, status=STATUS_OK)
    assert ok.ok
    assert not EvaluationResult(score=0.0, status=STATUS_ERROR, message="boom").ok


# ---------------------------------------------------------------------------
# cache
# ---------------------------------------------------------------------------


def test_cache_identical_calls_hit():
    cache = CachedEvaluator(SurrogateEvaluator(TOY7))
    a = cache.evaluate(("c1", "t1", "e1"))
    b = cache.evaluate(("c1", "t1", "e1"))
    assert a == b
    assert (cache.hits, cache.misses) == (1, 1)
    assert cache.evaluations == 1


def test_cache_distinct_pipelines_miss():
    cache = CachedEvaluator(SurrogateEvaluator(TOY7))
    cache.evaluate(("e1",))
    cache.evaluate(("e2",))
    assert (cache.hits, cache.misses) == (0, 2)
    assert [p for p, _ in cache.journal] == [("e1",), ("e2",)]


def test_cache_hit_ratio_over_random_queries(toy_grammar):
    import numpy as np
    from pipesynth.grammar import enumerate_pipelines

    rng = np.random.default_rng(0)
    universe = enumerate_pipelines(toy_grammar, 3)
    cache = CachedEvaluator(SurrogateEvaluator(TOY7))
    queries = [universe[int(i)] for i in rng.integers(0, len(universe), size=1000)]
    for q in queries:
        cache.evaluate(q)
    distinct = len(set(queries))
    assert cache.misses == distinct
    assert cache.hits / 1000 == 1 - distinct / 1000


def test_cache_best_tracks_highest_ok():
    cache = CachedEvaluator(SurrogateEvaluator(TOY7))
    assert cache.best() is None
    cache.evaluate(("e1", "e2"))  # invalid, never best
    cache.evaluate(("e1",))
    cache.evaluate(("c2", "t2", "e2"))
    pipe, res = cache.best()
    assert pipe == ("c2", "t2", "e2")
    assert res.score == pytest.approx(0.6473262, abs=1e-12)


# ---------------------------------------------------------------------------
# external executor client (loopback fixture process)
# ---------------------------------------------------------------------------


def loopback(*extra, timeout=10.0, **kwargs):
    return ExternalEvaluator(
        LOOPBACK + list(extra),
        dataset="/data/iris.csv",
        task="classification",
        metric="f1",
        timeout=timeout,
        **kwargs,
    )


def test_loopback_round_trip_planted_score():
    with loopback() as ev:
        assert ev.primitives == ["SkImputer", "PCA", "GaussianNB", "LinearSVC"]
        assert ev.declared_metric == "f1"
        res = ev.evaluate(("SkImputer", "GaussianNB"))
    assert res.status == STATUS_OK
    assert res.score == 0.42
    assert res.wall_time > 0


def test_loopback_unknown_primitive_invalid():
    with loopback() as ev:
        res = ev.evaluate(("SkImputer", "NotARealEstimator"))
    assert res.status == STATUS_INVALID
    assert res.score == 0.0


def test_loopback_score_clamped():
    with loopback("--score", "1.7") as ev:
        assert ev.evaluate(("PCA", "LinearSVC")).score == 1.0
    with loopback("--score", "-3") as ev:
        assert ev.evaluate(("PCA", "LinearSVC")).score == 0.0


def test_loopback_seed_and_target_column_forwarded(tmp_path):
    # echo executor ignores them; just assert the request path works when set
    with loopback(seed=11, target_column="label") as ev:
        assert ev.evaluate(("GaussianNB",)).ok


def test_malformed_response_becomes_error_result():
    with loopback("--mode", "garble") as ev:
        res = ev.evaluate(("GaussianNB",))
        assert res.status == STATUS_ERROR
        assert res.score == 0.0
        assert ev.failures == 2  # first attempt and the post-restart retry
        # the client survives: a fresh process answers the next handshake
        res2 = ev.evaluate(("GaussianNB",))
        assert res2.status == STATUS_ERROR


def test_crash_once_recovers_via_restart(tmp_path):
    marker = tmp_path / "crashed"
    with loopback("--mode", "crash-once", "--state-file", str(marker)) as ev:
        res = ev.evaluate(("GaussianNB",))
    assert res.status == STATUS_OK
    assert res.score == 0.42
    assert marker.exists()


def test_stray_response_ids_are_skipped():
    with loopback("--mode", "noise") as ev:
        res = ev.evaluate(("GaussianNB",))
    assert res.status == STATUS_OK
    assert res.score == 0.42


def test_unresponsive_executor_times_out():
    with loopback("--mode", "slow", "--delay", "5", timeout=0.4) as ev:
        res = ev.evaluate(("GaussianNB",))
    assert res.status == STATUS_ERROR
    assert "executor failed twice" in res.message


def test_bad_handshake_raises():
    with pytest.raises(ExecutorError, match="bad handshake"):
        loopback("--mode", "bad-handshake")
    with pytest.raises(ExecutorError, match="handshake failed"):
        loopback("--mode", "mute", timeout=0.5)


def test_check_primitives_reports_undeclared(benchmark_grammar):
    with loopback() as ev:
        missing = ev.check_primitives(benchmark_grammar)
    declared = {"SkImputer", "PCA", "GaussianNB", "LinearSVC"}
    assert set(missing) == set(benchmark_grammar.terminal_names) - declared


# ---------------------------------------------------------------------------
# dataset manifests
# ---------------------------------------------------------------------------


def test_load_manifest_resolves_relative_paths(tmp_path):
    manifest = tmp_path / "sets.json"
    manifest.write_text(
        json.dumps(
            [
                {"name": "iris", "path": "data/iris.csv", "task": "classification",
                 "target_column": "species"},
                {"name": "abs", "path": "/elsewhere/a.csv", "task": "regression",
                 "target_column": "y"},
            ]
        )
    )
    entries = load_manifest(str(manifest))
    assert entries[0].path == str(tmp_path / "data" / "iris.csv")
    assert entries[1].path == "/elsewhere/a.csv"
    assert entries[0].task == "classification"


def test_load_manifest_rejects_bad_entries(tmp_path):
    bad1 = tmp_path / "m1.json"
    bad1.write_text(json.dumps([{"name": "x", "path": "p"}]))
    with pytest.raises(ValueError, match="missing fields"):
        load_manifest(str(bad1))
    bad2 = tmp_path / "m2.json"
    bad2.write_text(json.dumps([{"name": "x", "path": "p", "task": "clustering",
                                 "target_column": "y"}]))
    with pytest.raises(ValueError, match="unknown task"):
        load_manifest(str(bad2))
    bad3 = tmp_path / "m3.json"
    bad3.write_text(json.dumps({"not": "a list"}))
    with pytest.raises(ValueError, match="not a JSON array"):
        load_manifest(str(bad3))
