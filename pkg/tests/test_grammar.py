import pytest

from pipesynth import primitives
from pipesynth.grammar import (
    EnumerationLimitError,
    GrammarError,
    apply_rule,
    applicable_rules,
    enumerate_pipelines,
    initial_derivation,
    is_complete,
    load_grammar,
    nonterminal,
    parse_grammar,
    replay,
    terminal,
    Derivation,
)

from conftest import GRAMMARS


def test_single_production_grammar():
    g = parse_grammar("<S> ::= t\n")
    assert g.start == nonterminal("S")
    assert g.terminal_names == ("t",)
    assert enumerate_pipelines(g, max_terminals=3) == [("t",)]


def test_undefined_nonterminal_is_an_error():
    with pytest.raises(GrammarError, match="no rules"):
        parse_grammar("<S> ::= <X>\n")


def test_parse_errors_carry_line_numbers():
    with pytest.raises(GrammarError, match="line 3"):
        parse_grammar("# header\n<S> ::= a\nnot a rule line\n")
    with pytest.raises(GrammarError, match="line 2"):
        parse_grammar("<S> ::= a | <T>\n<T> ::= b | \n")


def test_duplicate_rule_rejected():
    with pytest.raises(GrammarError, match="duplicate"):
        parse_grammar("<S> ::= a | a\n")


def test_name_used_both_bare_and_bracketed_rejected():
    with pytest.raises(GrammarError, match="both bare"):
        parse_grammar("<S> ::= S\n")


def test_empty_grammar_rejected():
    with pytest.raises(GrammarError, match="no rules"):
        parse_grammar("# only a comment\n\n")


def test_comments_and_blanks_ignored():
    g = parse_grammar("# c\n\n<S> ::= a  # trailing\n")
    assert [str(r) for r in g.rules] == ["<S> ::= a"]


def test_rule_ids_are_positional_and_accumulate_across_lines():
    g = parse_grammar("<S> ::= a | <T>\n<T> ::= b\n<S> ::= c\n")
    assert [r.id for r in g.rules] == [0, 1, 2, 3]
    assert g.rules_for("S") == (0, 1, 3)
    assert g.rules_for("T") == (2,)
    assert g.rules_for("missing") == ()


def test_serialize_round_trip_preserves_structure_and_fingerprint():
    g = load_grammar(GRAMMARS / "benchmark.grammar")
    g2 = parse_grammar(g.serialize())
    assert g2.rules == g.rules
    assert g2.start == g.start
    assert g2.fingerprint() == g.fingerprint()


def test_fingerprint_tracks_rule_order():
    a = parse_grammar("<S> ::= a | b\n")
    b = parse_grammar("<S> ::= b | a\n")
    assert a.fingerprint() != b.fingerprint()


def test_applicable_rules_complete_derivation(toy_grammar):
    d = Derivation(symbols=(terminal("c1"), terminal("e1")))
    assert applicable_rules(toy_grammar, d) == []
    # vacuously complete: empty sentential form has no nonterminal
    assert is_complete(Derivation(symbols=()))


def test_applicable_rules_filters_by_leftmost(toy_grammar):
    d = Derivation(symbols=(terminal("c1"), nonterminal("E")))
    # exactly the <E> rules, by hand: the last three in file order
    assert applicable_rules(toy_grammar, d) == list(toy_grammar.rules_for("E"))
    assert [str(toy_grammar.rules[r]) for r in applicable_rules(toy_grammar, d)] == [
        "<E> ::= e1",
        "<E> ::= e2",
        "<E> ::= e3",
    ]


def test_apply_rule_expands_leftmost_only(toy_grammar):
    d = initial_derivation(toy_grammar)
    d = apply_rule(toy_grammar, d, 3)  # <S> ::= <C> <T> <E>
    assert [str(s) for s in d.symbols] == ["<C>", "<T>", "<E>"]
    d = apply_rule(toy_grammar, d, toy_grammar.rules_for("C")[1])
    assert [str(s) for s in d.symbols] == ["c2", "<T>", "<E>"]


def test_apply_rule_rejects_wrong_lhs_and_bad_ids(toy_grammar):
    d = apply_rule(toy_grammar, initial_derivation(toy_grammar), 3)
    e_rule = toy_grammar.rules_for("E")[0]
    with pytest.raises(GrammarError, match="leftmost"):
        apply_rule(toy_grammar, d, e_rule)
    with pytest.raises(GrammarError, match="out of range"):
        apply_rule(toy_grammar, d, 99)
    complete = Derivation(symbols=(terminal("e1"),))
    with pytest.raises(GrammarError, match="complete"):
        apply_rule(toy_grammar, complete, 0)


def test_replay_rebuilds_derivation(toy_grammar):
    d = initial_derivation(toy_grammar)
    for rid in (3, 5, 6, 10):
        d = apply_rule(toy_grammar, d, rid)
    assert is_complete(d)
    assert replay(toy_grammar, d.applied) == d


def test_enumerate_unary_language():
    g = parse_grammar("<S> ::= a | a <S>\n")
    assert enumerate_pipelines(g, max_terminals=3) == [("a",), ("a", "a"), ("a", "a", "a")]


def test_enumerate_toy_language_is_27(toy_grammar):
    sentences = enumerate_pipelines(toy_grammar, max_terminals=3)
    assert len(sentences) == 27
    assert len(set(sentences)) == 27
    assert all(s[-1] in ("e1", "e2", "e3") for s in sentences)


def test_enumerate_deduplicates_ambiguous_sentences():
    g = parse_grammar("<S> ::= a <X> | a <Y>\n<X> ::= b\n<Y> ::= b\n")
    assert enumerate_pipelines(g, max_terminals=2) == [("a", "b")]


def test_enumerate_limit_guard():
    g = parse_grammar("<S> ::= a | a <S>\n")
    with pytest.raises(EnumerationLimitError):
        enumerate_pipelines(g, max_terminals=50, limit=10)
    with pytest.raises(ValueError):
        enumerate_pipelines(g, max_terminals=0)


def test_benchmark_language_shape(benchmark_grammar):
    sentences = enumerate_pipelines(benchmark_grammar, max_terminals=8)
    assert len(sentences) == 512
    estimators = set(primitives.CLASSIFIERS) | set(primitives.REGRESSORS)
    for s in sentences:
        assert s[-1] in estimators
        assert sum(1 for name in s if name in estimators) == 1
