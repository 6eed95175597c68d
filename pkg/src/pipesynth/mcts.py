"""PUCT tree search over the pipeline game, guided by the policy/value net.

Selection maximizes U = Q + c * P * sqrt(N(s)) / (1 + N(s,a)), ties broken
toward the lowest action index so seeded runs are reproducible. Non-terminal
leaves expand with network priors and back up the network value; terminal
leaves back up the pipeline's true evaluation. Unvisited edges carry Q = 0.

The tree is rebuilt for every move unless subtree reuse is switched on.
Uniform-prior ("search only") ablations run the same code with an all-zero
network, which yields uniform priors and value 0.5 everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evaluator import STATUS_ERROR, STATUS_INVALID, STATUS_OK, EvaluationResult
from .game import Game, GameState
from .network import ModelParams, TrainingExample, forward


@dataclass
class Edge:
    """Per-action statistics of one tree node."""

    P: float
    N: int = 0
    W: float = 0.0

    @property
    def Q(self) -> float:
        return self.W / self.N if self.N > 0 else 0.0


def ucb(edge: Edge, total_n: int, c: float) -> float:
    """The selection score U(s,a)."""
    return edge.Q + c * edge.P * math.sqrt(total_n) / (1 + edge.N)


class SearchNode:
    """One game state inside the search tree."""

    __slots__ = ("state", "legal", "edges", "children", "expanded", "total_N",
                 "terminal_value")

    def __init__(self, state: GameState):
        self.state = state
        self.legal: list[int] = []
        self.edges: dict[int, Edge] = {}
        self.children: dict[int, "SearchNode"] = {}
        self.expanded = False
        self.total_N = 0
        self.terminal_value: float | None = None


@dataclass
class SearchConfig:
    c: float = 1.41
    simulations: int = 64
    temp_moves: int = 2
    temp_initial: float = 1.0
    temp_final: float = 0.25
    root_dirichlet_alpha: float = 0.3
    root_noise_eps: float = 0.0
    subtree_reuse: bool = False


@dataclass
class SearchStats:
    simulations: int = 0
    nodes_expanded: int = 0
    total_actions: int = 0
    leaf_count: int = 0
    depth_total: int = 0
    max_depth: int = 0

    @property
    def mean_branching(self) -> float:
        return self.total_actions / self.nodes_expanded if self.nodes_expanded else 0.0

    @property
    def mean_depth(self) -> float:
        return self.depth_total / self.leaf_count if self.leaf_count else 0.0


@dataclass
class EpisodeResult:
    pipeline: tuple | None
    e: float
    result: EvaluationResult
    examples: list
    moves: list
    provenance: list
    stats: SearchStats


def search_policy(root: SearchNode, tau: float, num_actions: int) -> np.ndarray:
    """Visit-count policy over the full action vocabulary.

    tau > 0: pi_a proportional to N(root,a)^(1/tau); tau = 0: one-hot at the
    most-visited action (ties toward the lowest index). Illegal entries 0.
    """
    pi = np.zeros(num_actions, dtype=np.float64)
    if not root.legal:
        raise ValueError("search_policy on an unexpanded or terminal root")
    counts = np.array([root.edges[a].N for a in root.legal], dtype=np.float64)
    if tau == 0:
        pi[root.legal[int(np.argmax(counts))]] = 1.0
        return pi
    weights = counts ** (1.0 / tau)
    total = weights.sum()
    if total <= 0:
        raise ValueError("search_policy needs at least one visit")
    for a, w in zip(root.legal, weights):
        pi[a] = w / total
    return pi


class MCTS:
    """Owns one search per worker: game rules, network snapshot, evaluator."""

    def __init__(self, game: Game, net: ModelParams, evaluator, config: SearchConfig,
                 rng: np.random.Generator | None = None):
        self.game = game
        self.net = net
        self.evaluator = evaluator
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.failures = 0

    # -- leaf handling

    def _terminal_value(self, node: SearchNode) -> float:
        if node.terminal_value is None:
            pipeline = self.game.realized_pipeline(node.state)
            if pipeline is None:
                node.terminal_value = 0.0
            else:
                result = self.evaluator.evaluate(pipeline)
                if result.status == STATUS_ERROR:
                    self.failures += 1
                node.terminal_value = result.score
        return node.terminal_value

    def _expand(self, node: SearchNode, stats: SearchStats, add_noise: bool) -> float:
        legal = self.game.legal_action_indices(node.state)
        mask = np.zeros(self.game.num_actions, dtype=bool)
        mask[legal] = True
        pv = forward(self.net, self.game.encode_state(node.state), mask)
        priors = pv.p
        if add_noise and self.config.root_noise_eps > 0:
            noise = self.rng.dirichlet([self.config.root_dirichlet_alpha] * len(legal))
            eps = self.config.root_noise_eps
            priors = priors.copy()
            priors[legal] = (1 - eps) * priors[legal] + eps * noise
        node.legal = legal
        node.edges = {a: Edge(P=float(priors[a])) for a in legal}
        node.expanded = True
        stats.nodes_expanded += 1
        stats.total_actions += len(legal)
        return pv.v

    def _select(self, node: SearchNode) -> int:
        best_action = node.legal[0]
        best_u = -math.inf
        for a in node.legal:
            u = ucb(node.edges[a], node.total_N, self.config.c)
            if u > best_u:
                best_u = u
                best_action = a
        return best_action

    def simulate(self, root: SearchNode, stats: SearchStats) -> float:
        """One selection/expansion/backup pass from an expanded root."""
        path: list[tuple[SearchNode, int]] = []
        node = root
        depth = 0
        while True:
            if self.game.is_terminal(node.state):
                value = self._terminal_value(node)
                break
            if not node.expanded:
                value = self._expand(node, stats, add_noise=False)
                break
            action = self._select(node)
            path.append((node, action))
            child = node.children.get(action)
            if child is None:
                child = SearchNode(self.game.step_index(node.state, action))
                node.children[action] = child
            node = child
            depth += 1
        for parent, action in path:
            edge = parent.edges[action]
            edge.N += 1
            edge.W += value
            parent.total_N += 1
        stats.simulations += 1
        stats.leaf_count += 1
        stats.depth_total += depth
        stats.max_depth = max(stats.max_depth, depth)
        return value

    # -- episode loop

    def run_episode(self, start: GameState) -> EpisodeResult:
        """Self-play one episode from ``start``; every recorded example gets
        the final pipeline evaluation as its value target."""
        state = start
        stats = SearchStats()
        recorded: list[tuple] = []
        moves: list[int] = []
        provenance: list[dict] = []
        root: SearchNode | None = None
        move_index = 0
        while not self.game.is_terminal(state):
            if root is None or not self.config.subtree_reuse:
                root = SearchNode(state)
            if not root.expanded:
                self._expand(root, stats, add_noise=True)
            for _ in range(self.config.simulations):
                self.simulate(root, stats)
            tau = (self.config.temp_initial if move_index < self.config.temp_moves
                   else self.config.temp_final)
            pi = search_policy(root, tau, self.game.num_actions)
            encoded = self.game.encode_state(state)
            mask = np.zeros(self.game.num_actions, dtype=bool)
            mask[root.legal] = True
            recorded.append((encoded, tuple(bool(b) for b in mask), tuple(float(x) for x in pi)))
            action = int(self.rng.choice(self.game.num_actions, p=pi / pi.sum()))
            moves.append(action)
            provenance.append({
                "move": move_index,
                "symbols": list(state.symbols()),
                "action": action,
                "action_desc": self.game.describe_action(action),
                "pi": [float(x) for x in pi],
            })
            state = self.game.step_index(state, action)
            root = root.children.get(action) if self.config.subtree_reuse else None
            move_index += 1

        pipeline = self.game.realized_pipeline(state)
        if pipeline is None:
            result = EvaluationResult(score=0.0, status=STATUS_INVALID,
                                      message="episode ended without a complete pipeline")
        else:
            result = self.evaluator.evaluate(pipeline)
            if result.status == STATUS_ERROR:
                self.failures += 1
        e = result.score if result.status == STATUS_OK else 0.0
        examples = [
            TrainingExample(tokens=enc.tokens, meta=enc.meta_vector, pi=pi_t,
                            legal_mask=mask_t, e=e)
            for enc, mask_t, pi_t in recorded
        ]
        return EpisodeResult(pipeline=pipeline, e=e, result=result, examples=examples,
                             moves=moves, provenance=provenance, stats=stats)
