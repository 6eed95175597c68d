"""Context-free grammar over pipeline primitives.

Grammar file format (UTF-8 text):

    # comment lines start with '#'
    <S>  ::= <E> | <DC> <E>
    <DC> ::= SkImputer | MissingIndicator
    <E>  ::= GaussianNB | LinearSVC

One rule set per line, ``<LHS> ::= alt | alt | ...``.  Nonterminals are
wrapped in angle brackets, terminals are bare identifiers matching
``[A-Za-z0-9_.-]+``.  The first line's left-hand side is the start symbol.
The same nonterminal may appear on several lines; alternatives accumulate
in file order.  Rule ids are positional (0-based, file order) and form the
action vocabulary of downstream consumers, so grammar files are versioned
artifacts: reordering rules changes the action space.

Derivations are leftmost and canonical: every partial pipeline is a
sentential form reachable from the start symbol by expanding the leftmost
nonterminal, one rule at a time.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

TERMINAL = "terminal"
NONTERMINAL = "nonterminal"

_NAME_RE = re.compile(r"[A-Za-z0-9_.\-]+\Z")
_NONTERMINAL_RE = re.compile(r"<([A-Za-z0-9_.\-]+)>\Z")


class GrammarError(ValueError):
    """Raised for malformed grammar files and illegal derivation steps."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EnumerationLimitError(RuntimeError):
    """Raised when language enumeration exceeds the caller's guard."""


@dataclass(frozen=True)
class Symbol:
    kind: str  # TERMINAL or NONTERMINAL
    name: str

    def __post_init__(self):
        if not self.name:
            raise GrammarError("symbol name must be nonempty")
        if self.kind not in (TERMINAL, NONTERMINAL):
            raise GrammarError(f"unknown symbol kind {self.kind!r}")

    @property
    def is_terminal(self) -> bool:
        return self.kind == TERMINAL

    def __str__(self) -> str:
        return self.name if self.is_terminal else f"<{self.name}>"


def terminal(name: str) -> Symbol:
    return Symbol(TERMINAL, name)


def nonterminal(name: str) -> Symbol:
    return Symbol(NONTERMINAL, name)


@dataclass(frozen=True)
class ProductionRule:
    id: int
    lhs: Symbol
    rhs: tuple[Symbol, ...]

    def __str__(self) -> str:
        return f"{self.lhs} ::= {' '.join(str(s) for s in self.rhs)}"


@dataclass(frozen=True)
class Grammar:
    """Immutable CFG: terminals, nonterminals, ordered rules, start symbol.

    ``terminals`` and ``nonterminals`` are tuples in first-appearance order
    (set semantics, deterministic iteration); rule ids are contiguous and
    equal to each rule's position in ``rules``.
    """

    terminals: tuple[Symbol, ...]
    nonterminals: tuple[Symbol, ...]
    rules: tuple[ProductionRule, ...]
    start: Symbol
    _by_lhs: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        by_lhs: dict[str, tuple[int, ...]] = {}
        for rule in self.rules:
            by_lhs.setdefault(rule.lhs.name, ())
            by_lhs[rule.lhs.name] += (rule.id,)
        object.__setattr__(self, "_by_lhs", by_lhs)

    def rules_for(self, name: str) -> tuple[int, ...]:
        """Rule ids whose lhs is the named nonterminal, in grammar order."""
        return self._by_lhs.get(name, ())

    @property
    def terminal_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.terminals)

    def serialize(self) -> str:
        """Canonical text form; parses back to a structurally equal grammar."""
        lines = []
        for rule in self.rules:
            alt = " ".join(str(s) for s in rule.rhs)
            if lines and lines[-1][0] == rule.lhs.name:
                lines[-1][1].append(alt)
            else:
                lines.append((rule.lhs.name, [alt]))
        return "\n".join(f"<{lhs}> ::= {' | '.join(alts)}" for lhs, alts in lines) + "\n"

    def fingerprint(self) -> str:
        """Content hash of the canonical form; identifies the action space."""
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Derivation:
    """A sentential form plus the leftmost rule sequence that produced it."""

    symbols: tuple[Symbol, ...]
    applied: tuple[int, ...] = ()

    def leftmost_nonterminal(self) -> int:
        """Index of the leftmost nonterminal, or -1 if complete."""
        for i, sym in enumerate(self.symbols):
            if not sym.is_terminal:
                return i
        return -1

    def terminal_count(self) -> int:
        return sum(1 for s in self.symbols if s.is_terminal)


def initial_derivation(grammar: Grammar) -> Derivation:
    return Derivation(symbols=(grammar.start,))


def is_complete(derivation: Derivation) -> bool:
    """True iff the sentential form contains no nonterminal."""
    return derivation.leftmost_nonterminal() == -1


def applicable_rules(grammar: Grammar, derivation: Derivation) -> list[int]:
    """Rule ids expanding the leftmost nonterminal; empty iff complete."""
    i = derivation.leftmost_nonterminal()
    if i == -1:
        return []
    return list(grammar.rules_for(derivation.symbols[i].name))


def apply_rule(grammar: Grammar, derivation: Derivation, rule_id: int) -> Derivation:
    """Expand the leftmost nonterminal with the given rule (pure)."""
    i = derivation.leftmost_nonterminal()
    if i == -1:
        raise GrammarError(f"cannot apply rule {rule_id}: derivation is complete")
    if rule_id < 0 or rule_id >= len(grammar.rules):
        raise GrammarError(f"rule id {rule_id} out of range")
    rule = grammar.rules[rule_id]
    leftmost = derivation.symbols[i]
    if rule.lhs != leftmost:
        raise GrammarError(
            f"rule {rule_id} expands {rule.lhs} but the leftmost nonterminal is {leftmost}"
        )
    symbols = derivation.symbols[:i] + rule.rhs + derivation.symbols[i + 1 :]
    return Derivation(symbols=symbols, applied=derivation.applied + (rule_id,))


def replay(grammar: Grammar, applied: tuple[int, ...]) -> Derivation:
    """Rebuild a derivation from its rule-id sequence."""
    d = initial_derivation(grammar)
    for rid in applied:
        d = apply_rule(grammar, d, rid)
    return d


def _parse_symbol(token: str, line_no: int) -> Symbol:
    m = _NONTERMINAL_RE.match(token)
    if m:
        return nonterminal(m.group(1))
    if _NAME_RE.match(token):
        return terminal(token)
    raise GrammarError(f"cannot parse symbol {token!r}", line_no)


def parse_grammar(text: str) -> Grammar:
    """Parse grammar text; see the module docstring for the file format."""
    raw_rules: list[tuple[int, Symbol, tuple[Symbol, ...]]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "::=" not in line:
            raise GrammarError("expected '<LHS> ::= alternatives'", line_no)
        lhs_text, rhs_text = line.split("::=", 1)
        lhs_m = _NONTERMINAL_RE.match(lhs_text.strip())
        if not lhs_m:
            raise GrammarError(f"left-hand side {lhs_text.strip()!r} is not a nonterminal", line_no)
        lhs = nonterminal(lhs_m.group(1))
        for alt in rhs_text.split("|"):
            tokens = alt.split()
            if not tokens:
                raise GrammarError(f"empty alternative for <{lhs.name}>", line_no)
            rhs = tuple(_parse_symbol(tok, line_no) for tok in tokens)
            raw_rules.append((line_no, lhs, rhs))
    if not raw_rules:
        raise GrammarError("grammar has no rules")

    defined = {lhs.name for _, lhs, _ in raw_rules}
    terminals: list[Symbol] = []
    nonterminals: list[Symbol] = []
    seen_t: set[str] = set()
    seen_nt: set[str] = set()
    seen_rules: set[tuple[str, tuple[Symbol, ...]]] = set()
    rules: list[ProductionRule] = []
    for line_no, lhs, rhs in raw_rules:
        if lhs.name not in seen_nt:
            seen_nt.add(lhs.name)
            nonterminals.append(lhs)
        key = (lhs.name, rhs)
        if key in seen_rules:
            raise GrammarError(f"duplicate rule {lhs} ::= {' '.join(map(str, rhs))}", line_no)
        seen_rules.add(key)
        for sym in rhs:
            if sym.is_terminal:
                if sym.name in defined:
                    raise GrammarError(
                        f"symbol {sym.name!r} is used both bare and as <{sym.name}>", line_no
                    )
                if sym.name not in seen_t:
                    seen_t.add(sym.name)
                    terminals.append(sym)
            elif sym.name not in defined:
                raise GrammarError(f"nonterminal {sym} has no rules", line_no)
        rules.append(ProductionRule(id=len(rules), lhs=lhs, rhs=rhs))

    return Grammar(
        terminals=tuple(terminals),
        nonterminals=tuple(nonterminals),
        rules=tuple(rules),
        start=raw_rules[0][1],
    )


def load_grammar(path) -> Grammar:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_grammar(fh.read())


def enumerate_pipelines(
    grammar: Grammar, max_terminals: int, limit: int | None = None
) -> list[tuple[str, ...]]:
    """All distinct complete sentences with at most ``max_terminals`` terminals.

    Order is deterministic: depth-first over rule ids, i.e. lexicographic by
    the leftmost rule-id sequence, first occurrence kept on duplicates.
    Raises EnumerationLimitError once more than ``limit`` distinct sentences
    are found.
    """
    if max_terminals < 1:
        raise ValueError("max_terminals must be >= 1")
    out: list[tuple[str, ...]] = []
    seen: set[tuple[str, ...]] = set()
    # path guards against unit-production cycles that re-enter a sentential form
    path: set[tuple[Symbol, ...]] = set()

    def walk(symbols: tuple[Symbol, ...]) -> None:
        if len(symbols) > max_terminals:
            return  # every symbol expands to >= 1 terminal (no empty alternatives)
        idx = next((i for i, s in enumerate(symbols) if not s.is_terminal), -1)
        if idx == -1:
            sentence = tuple(s.name for s in symbols)
            if sentence not in seen:
                seen.add(sentence)
                out.append(sentence)
                if limit is not None and len(out) > limit:
                    raise EnumerationLimitError(
                        f"language exceeds {limit} sentences at cap {max_terminals}"
                    )
            return
        if symbols in path:
            return
        path.add(symbols)
        for rid in grammar.rules_for(symbols[idx].name):
            rule = grammar.rules[rid]
            walk(symbols[:idx] + rule.rhs + symbols[idx + 1 :])
        path.discard(symbols)

    walk((grammar.start,))
    return out
