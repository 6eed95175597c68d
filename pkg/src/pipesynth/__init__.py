"""Grammar-constrained, network-guided tree search for ML pipeline synthesis.

The engine plays a single-player game whose moves are either grammar
productions or free pipeline edits, searches with PUCT guided by a small
recurrent policy/value network trained from self-play, and scores finished
pipelines through a deterministic surrogate or an external executor process.
"""

__version__ = "0.1.0"

from .evaluator import (
    CachedEvaluator,
    EvaluationResult,
    ExternalEvaluator,
    SurrogateEvaluator,
    SurrogateSpec,
    brute_force_best,
    surrogate_evaluate,
)
from .game import Game, GameState, TaskSpec
from .grammar import Grammar, load_grammar, parse_grammar
from .mcts import MCTS, SearchConfig
from .network import ModelParams, forward, gradient, loss, sgd_step
from .trainer import Budget, ReplayBuffer, TrainerConfig, pretrain, synthesize

__all__ = [
    "Budget",
    "CachedEvaluator",
    "EvaluationResult",
    "ExternalEvaluator",
    "Game",
    "GameState",
    "Grammar",
    "MCTS",
    "ModelParams",
    "ReplayBuffer",
    "SearchConfig",
    "SurrogateEvaluator",
    "SurrogateSpec",
    "TaskSpec",
    "TrainerConfig",
    "brute_force_best",
    "forward",
    "gradient",
    "load_grammar",
    "loss",
    "parse_grammar",
    "pretrain",
    "sgd_step",
    "surrogate_evaluate",
    "synthesize",
]
