"""The single-player pipeline-synthesis game.

Two action-space modes over the same grammar vocabulary:

  grammar mode: actions are production-rule ids applied to the leftmost
      nonterminal of a derivation. The action vocabulary is the rule list.
  edit mode: actions are insert/delete/substitute of terminals in a flat
      sequence plus an explicit ``finish`` move. The action vocabulary is a
      fixed (kind, position, terminal) layout sized by the position cap P and
      terminal count V: P*V insert slots, P delete slots, P*V substitute
      slots, then finish. A = 2*P*V + P + 1.

Both modes expose actions to the search as integer indices into a fixed-size
vocabulary so one network head covers every state.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grammar import (
    Derivation,
    Grammar,
    apply_rule,
    applicable_rules,
    initial_derivation,
    is_complete,
)

GRAMMAR_MODE = "grammar"
EDIT_MODE = "edit"

DEFAULT_MAX_STEPS = 20
DEFAULT_MAX_TERMINALS = 8
DEFAULT_ENCODE_LEN = 16

PAD_TOKEN = "<pad>"
SOP_TOKEN = "<sop>"
TASK_TOKENS = {"classification": "task:classification", "regression": "task:regression"}


@dataclass(frozen=True)
class TaskSpec:
    kind: str
    metric: str

    def __post_init__(self):
        pairs = {"classification": "f1", "regression": "r2"}
        if self.kind not in pairs:
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.metric != pairs[self.kind]:
            raise ValueError(f"metric {self.metric!r} inconsistent with kind {self.kind!r}")

    @classmethod
    def for_kind(cls, kind: str) -> "TaskSpec":
        return cls(kind, {"classification": "f1", "regression": "r2"}[kind])


@dataclass(frozen=True)
class EditAction:
    """One edit-mode move. kind is insert|delete|substitute|finish; position
    and terminal are meaningful only where the kind uses them."""

    kind: str
    position: int = -1
    terminal: str = ""

    def __str__(self):
        if self.kind == "finish":
            return "finish"
        if self.kind == "delete":
            return f"delete@{self.position}"
        return f"{self.kind}@{self.position}:{self.terminal}"


@dataclass(frozen=True, eq=False)
class GameState:
    """Immutable search state: a partial pipeline plus dataset context.

    Grammar mode populates ``derivation``; edit mode populates ``sequence``
    and ``finished``.
    """

    task: TaskSpec
    meta: np.ndarray
    steps_taken: int
    derivation: Derivation | None = None
    sequence: tuple[str, ...] | None = None
    finished: bool = False

    def symbols(self) -> tuple[str, ...]:
        if self.derivation is not None:
            return tuple(str(s) for s in self.derivation.symbols)
        return self.sequence


@dataclass(frozen=True)
class EncodedState:
    tokens: tuple[int, ...]
    meta_vector: tuple[float, ...]


class Vocabulary:
    """Token table: pad, start-of-pipeline, task tokens, then the grammar's
    terminals and nonterminals in grammar order."""

    def __init__(self, tokens):
        self.tokens = tuple(tokens)
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    @classmethod
    def for_grammar(cls, grammar: Grammar) -> "Vocabulary":
        tokens = [PAD_TOKEN, SOP_TOKEN, TASK_TOKENS["classification"], TASK_TOKENS["regression"]]
        tokens.extend(grammar.terminal_names)
        tokens.extend(f"<{s.name}>" for s in grammar.nonterminals)
        return cls(tokens)

    def __len__(self):
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise KeyError(f"token {token!r} not in vocabulary") from None


class Game:
    """Rules of the game for one grammar, one mode, and fixed caps."""

    def __init__(
        self,
        grammar: Grammar,
        mode: str = GRAMMAR_MODE,
        max_steps: int = DEFAULT_MAX_STEPS,
        max_terminals: int = DEFAULT_MAX_TERMINALS,
        encode_len: int = DEFAULT_ENCODE_LEN,
    ):
        if mode not in (GRAMMAR_MODE, EDIT_MODE):
            raise ValueError(f"unknown mode {mode!r}")
        if max_terminals < 1:
            raise ValueError("max_terminals must be >= 1")
        self.grammar = grammar
        self.mode = mode
        self.max_steps = max_steps
        self.max_terminals = max_terminals
        self.encode_len = encode_len
        self.vocab = Vocabulary.for_grammar(grammar)
        self.terminals = grammar.terminal_names
        self._terminal_index = {t: i for i, t in enumerate(self.terminals)}

    # -- action vocabulary ---------------------------------------------------

    @property
    def num_actions(self) -> int:
        if self.mode == GRAMMAR_MODE:
            return len(self.grammar.rules)
        p, v = self.max_terminals, len(self.terminals)
        return 2 * p * v + p + 1

    def action_index(self, action) -> int:
        if self.mode == GRAMMAR_MODE:
            return int(action)
        p, v = self.max_terminals, len(self.terminals)
        if action.kind == "insert":
            return action.position * v + self._terminal_index[action.terminal]
        if action.kind == "delete":
            return p * v + action.position
        if action.kind == "substitute":
            return p * v + p + action.position * v + self._terminal_index[action.terminal]
        if action.kind == "finish":
            return 2 * p * v + p
        raise ValueError(f"unknown edit action kind {action.kind!r}")

    def action_at(self, index: int):
        if self.mode == GRAMMAR_MODE:
            if not 0 <= index < len(self.grammar.rules):
                raise IndexError(f"rule id {index} out of range")
            return index
        p, v = self.max_terminals, len(self.terminals)
        if not 0 <= index < self.num_actions:
            raise IndexError(f"action index {index} out of range")
        if index < p * v:
            return EditAction("insert", index // v, self.terminals[index % v])
        index -= p * v
        if index < p:
            return EditAction("delete", index)
        index -= p
        if index < p * v:
            return EditAction("substitute", index // v, self.terminals[index % v])
        return EditAction("finish")

    def describe_action(self, index: int) -> str:
        if self.mode == GRAMMAR_MODE:
            rule = self.grammar.rules[index]
            rhs = " ".join(str(s) for s in rule.rhs)
            return f"rule {index}: <{rule.lhs.name}> ::= {rhs}"
        return str(self.action_at(index))

    # -- states ----------------------------------------------------------------

    def initial_state(self, task: TaskSpec, meta: np.ndarray) -> GameState:
        meta = np.asarray(meta, dtype=np.float64)
        if self.mode == GRAMMAR_MODE:
            return GameState(task=task, meta=meta, steps_taken=0,
                             derivation=initial_derivation(self.grammar))
        return GameState(task=task, meta=meta, steps_taken=0, sequence=())

    def is_terminal(self, state: GameState) -> bool:
        if state.steps_taken >= self.max_steps:
            return True
        if self.mode == GRAMMAR_MODE:
            return is_complete(state.derivation) or not self.legal_action_indices(state)
        return state.finished

    def legal_action_indices(self, state: GameState) -> list[int]:
        """Indices of the legal actions, ascending (the deterministic order).

        Terminal states get an empty list.
        """
        if state.steps_taken >= self.max_steps:
            return []
        if self.mode == GRAMMAR_MODE:
            return self._legal_rules(state)
        return self._legal_edits(state)

    def _legal_rules(self, state: GameState) -> list[int]:
        d = state.derivation
        rules = applicable_rules(self.grammar, d)
        # Every symbol expands to at least one terminal, so sentential-form
        # length lower-bounds final pipeline length; prune growth past the cap.
        length = len(d.symbols)
        keep = []
        for rid in rules:
            growth = len(self.grammar.rules[rid].rhs) - 1
            if length + growth <= self.max_terminals:
                keep.append(rid)
        return keep

    def _legal_edits(self, state: GameState) -> list[int]:
        if state.finished:
            return []
        seq = state.sequence
        k = len(seq)
        p, v = self.max_terminals, len(self.terminals)
        indices: list[int] = []
        if k < p:
            indices.extend(range(0, (k + 1) * v))
        indices.extend(range(p * v, p * v + k))
        indices.extend(range(p * v + p, p * v + p + k * v))
        if k >= 1:
            indices.append(2 * p * v + p)
        return indices

    def legal_actions(self, state: GameState) -> list:
        return [self.action_at(i) for i in self.legal_action_indices(state)]

    def step(self, state: GameState, action) -> GameState:
        """Apply one action, returning the successor state (inputs untouched)."""
        if self.mode == GRAMMAR_MODE:
            rid = int(action)
            if rid not in self._legal_rules(state):
                raise ValueError(
                    f"rule {rid} not applicable to sentential form "
                    f"{' '.join(state.symbols())!r}"
                )
            return replace(
                state,
                derivation=apply_rule(self.grammar, state.derivation, rid),
                steps_taken=state.steps_taken + 1,
            )
        idx = self.action_index(action)
        if idx not in self._legal_edits(state):
            raise ValueError(f"edit {action} illegal on sequence {state.sequence!r}")
        seq = state.sequence
        if action.kind == "insert":
            seq = seq[: action.position] + (action.terminal,) + seq[action.position:]
        elif action.kind == "delete":
            seq = seq[: action.position] + seq[action.position + 1:]
        elif action.kind == "substitute":
            seq = seq[: action.position] + (action.terminal,) + seq[action.position + 1:]
        finished = action.kind == "finish"
        return replace(state, sequence=seq, finished=finished,
                       steps_taken=state.steps_taken + 1)

    def step_index(self, state: GameState, index: int) -> GameState:
        return self.step(state, self.action_at(index))

    def realized_pipeline(self, state: GameState):
        """Terminal-name tuple of a finished episode, or None when the state
        never became a complete pipeline (evaluates to 0)."""
        if self.mode == GRAMMAR_MODE:
            if is_complete(state.derivation) and state.derivation.symbols:
                return tuple(s.name for s in state.derivation.symbols)
            return None
        if state.sequence:
            return state.sequence
        return None

    # -- encoding ----------------------------------------------------------------

    def encode_state(self, state: GameState) -> EncodedState:
        """Token sequence [SOP, task, symbols...] padded/truncated to the
        configured length, plus the meta-feature vector."""
        tokens = [self.vocab.id_of(SOP_TOKEN), self.vocab.id_of(TASK_TOKENS[state.task.kind])]
        for sym in state.symbols():
            tokens.append(self.vocab.id_of(sym))
        tokens = tokens[: self.encode_len]
        pad = self.vocab.id_of(PAD_TOKEN)
        while len(tokens) < self.encode_len:
            tokens.append(pad)
        return EncodedState(tokens=tuple(tokens), meta_vector=tuple(float(x) for x in state.meta))
