"""Self-play training, multi-dataset pre-training, and budgeted synthesis.

Budget accounting counts actual evaluator calls (cache misses): distinct
pipelines really scored. Best-so-far tracking runs over the same journal,
so a strong pipeline discovered at a tree leaf counts even when no episode
happened to end on it. Budgets are checked at episode boundaries; the final
episode may overshoot, and evaluations-to-target readings index into the
journal so overshoot never distorts them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .evaluator import STATUS_OK, CachedEvaluator, SurrogateEvaluator, SurrogateSpec
from .game import Game, TaskSpec
from .mcts import MCTS, SearchConfig
from .metafeatures import NUM_SLOTS, SLOT_NAMES, surrogate_metafeatures
from .network import (
    CheckpointError,
    ModelParams,
    gradient,
    load_checkpoint,
    loss,
    save_checkpoint,
    sgd_step,
)


class ReplayBuffer:
    """Fixed-capacity FIFO store of training examples (circular overwrite)."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("buffer capacity must be >= 1")
        self.capacity = capacity
        self._items: list = []
        self._pos = 0

    def __len__(self):
        return len(self._items)

    def add(self, example) -> None:
        if len(self._items) < self.capacity:
            self._items.append(example)
        else:
            self._items[self._pos] = example
            self._pos = (self._pos + 1) % self.capacity

    def add_many(self, examples) -> None:
        for ex in examples:
            self.add(ex)

    def sample(self, rng: np.random.Generator, size: int) -> list:
        """Uniform random mini-batch (with replacement)."""
        if not self._items:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, len(self._items), size=size)
        return [self._items[i] for i in idx]

    def snapshot(self) -> list:
        """Current contents, oldest first."""
        if len(self._items) < self.capacity:
            return list(self._items)
        return self._items[self._pos:] + self._items[: self._pos]


@dataclass
class TrainerConfig:
    episodes_per_iteration: int = 16
    gradient_steps: int = 64
    batch_size: int = 32
    buffer_capacity: int = 50_000
    lr: float = 0.01
    alpha: float = 1e-4
    embed_dim: int = 32
    hidden_dim: int = 64
    search: SearchConfig = field(default_factory=SearchConfig)


@dataclass
class DatasetContext:
    """Everything an episode needs about one dataset: identity, task, meta
    vector, and a caching evaluator whose journal is the budget meter."""

    name: str
    task: TaskSpec
    meta: np.ndarray
    evaluator: CachedEvaluator


def surrogate_context(seed: int, task_kind: str = "classification", roles=None) -> DatasetContext:
    spec = SurrogateSpec(seed=seed) if roles is None else SurrogateSpec(seed=seed, roles=roles)
    return DatasetContext(
        name=f"surrogate:{seed}",
        task=TaskSpec.for_kind(task_kind),
        meta=surrogate_metafeatures(seed),
        evaluator=CachedEvaluator(SurrogateEvaluator(spec)),
    )


def new_network(game: Game, config: TrainerConfig, seed: int = 0) -> ModelParams:
    return ModelParams.init(
        len(game.vocab), config.embed_dim, config.hidden_dim, NUM_SLOTS,
        game.num_actions, seed=seed,
    )


def zero_network(game: Game, config: TrainerConfig) -> ModelParams:
    """All-zero parameters: uniform priors over legal actions, value 0.5.
    This is the "search only" baseline of the guided-vs-unguided ablation."""
    return ModelParams.zeros(
        len(game.vocab), config.embed_dim, config.hidden_dim, NUM_SLOTS,
        game.num_actions,
    )


def train_iteration(game, net, buffer, contexts, config, rng):
    """One iteration: E episodes round-robin over datasets, then G gradient
    steps on uniform mini-batches. Returns (updated net, report dict)."""
    if not contexts:
        raise ValueError("train_iteration needs at least one dataset")
    evals_before = sum(ctx.evaluator.misses for ctx in contexts)
    episode_scores = []
    for i in range(config.episodes_per_iteration):
        ctx = contexts[i % len(contexts)]
        search = MCTS(game, net, ctx.evaluator, config.search, rng)
        episode = search.run_episode(game.initial_state(ctx.task, ctx.meta))
        buffer.add_many(episode.examples)
        episode_scores.append(episode.e)
    probe = buffer.sample(rng, min(len(buffer), config.batch_size))
    loss_before = loss(net, probe, config.alpha)
    for _ in range(config.gradient_steps):
        batch = buffer.sample(rng, min(len(buffer), config.batch_size))
        net = sgd_step(net, gradient(net, batch, config.alpha), config.lr)
    loss_after = loss(net, probe, config.alpha)
    report = {
        "episodes": config.episodes_per_iteration,
        "mean_e": float(np.mean(episode_scores)),
        "best_e": float(np.max(episode_scores)),
        "loss_before": loss_before,
        "loss_after": loss_after,
        "evaluations": sum(ctx.evaluator.misses for ctx in contexts) - evals_before,
        "buffer_size": len(buffer),
    }
    return net, report


def write_checkpoint(path: str, game: Game, net: ModelParams, iteration: int) -> None:
    save_checkpoint(
        path,
        net,
        vocabulary=game.vocab.tokens,
        grammar_fingerprint=game.grammar.fingerprint(),
        meta_slots=SLOT_NAMES,
        iteration=iteration,
        extra={
            "mode": game.mode,
            "max_terminals": game.max_terminals,
            "encode_len": game.encode_len,
            "max_steps": game.max_steps,
        },
    )


def load_network(path: str, game: Game):
    """Load a checkpoint and verify it matches this game's action space."""
    net, header = load_checkpoint(path, expected_fingerprint=game.grammar.fingerprint())
    if header.get("mode", game.mode) != game.mode:
        raise CheckpointError(
            f"checkpoint was trained in {header['mode']} mode, game is {game.mode}"
        )
    if net.actions != game.num_actions:
        raise CheckpointError(
            f"checkpoint policy head covers {net.actions} actions, "
            f"game has {game.num_actions}"
        )
    return net, header


def train_network(game, contexts, iterations, config, seed=0,
                  checkpoint_path=None, checkpoint_every=0):
    """Train a fresh network by self-play over the given datasets.

    Returns (net, reports). Writes a checkpoint at the end, and every
    checkpoint_every iterations when that is positive.
    """
    net = new_network(game, config, seed=seed)
    rng = np.random.default_rng(seed)
    buffer = ReplayBuffer(config.buffer_capacity)
    reports = []
    for it in range(iterations):
        net, report = train_iteration(game, net, buffer, contexts, config, rng)
        report["iteration"] = it
        reports.append(report)
        if checkpoint_path and checkpoint_every > 0 and (it + 1) % checkpoint_every == 0:
            write_checkpoint(checkpoint_path, game, net, it + 1)
    if checkpoint_path:
        write_checkpoint(checkpoint_path, game, net, iterations)
    return net, reports


def pretrain(game, contexts, iterations, config, seed=0,
             checkpoint_path=None, checkpoint_every=0):
    """Interleaved training across a dataset family (two or more)."""
    if len(contexts) < 2:
        raise ValueError("pretraining needs at least 2 datasets")
    return train_network(game, contexts, iterations, config, seed=seed,
                         checkpoint_path=checkpoint_path,
                         checkpoint_every=checkpoint_every)


@dataclass
class Budget:
    """Episode/evaluation/CPU-second caps; at least one must be set."""

    max_episodes: int | None = None
    max_evaluations: int | None = None
    max_seconds: float | None = None

    def __post_init__(self):
        limits = (self.max_episodes, self.max_evaluations, self.max_seconds)
        if all(v is None for v in limits):
            raise ValueError("budget sets no limit")
        if any(v is not None and v <= 0 for v in limits):
            raise ValueError("budget limits must be positive")


@dataclass
class SynthesisResult:
    best_pipeline: tuple | None
    best_e: float
    episodes: list
    evaluations: int
    curve: list
    executor_failures: int


def _episode_record(index: int, episode) -> dict:
    return {
        "episode": index,
        "pipeline": list(episode.pipeline) if episode.pipeline else None,
        "e": episode.e,
        "status": episode.result.status,
        "moves": list(episode.moves),
        "provenance": episode.provenance,
        "stats": {
            "simulations": episode.stats.simulations,
            "nodes_expanded": episode.stats.nodes_expanded,
            "total_actions": episode.stats.total_actions,
            "mean_branching": episode.stats.mean_branching,
            "mean_depth": episode.stats.mean_depth,
            "max_depth": episode.stats.max_depth,
        },
    }


def synthesize(game, context, net, budget: Budget, search_config: SearchConfig,
               rng: np.random.Generator, workers: int = 1) -> SynthesisResult:
    """Run search episodes until the budget runs out; report the best
    pipeline over every actual evaluation plus a full provenance log.

    workers > 1 runs episodes in threads sharing the network snapshot and
    the evaluation cache; that mode trades bit-reproducibility for speed.
    """
    start_journal = len(context.evaluator.journal)
    start_cpu = time.process_time()
    episode_records = []
    episode_index = 0
    failures = 0

    def exhausted() -> bool:
        if budget.max_episodes is not None and episode_index >= budget.max_episodes:
            return True
        used = context.evaluator.misses - start_journal
        if budget.max_evaluations is not None and used >= budget.max_evaluations:
            return True
        if budget.max_seconds is not None and time.process_time() - start_cpu >= budget.max_seconds:
            return True
        return False

    if workers <= 1:
        search = MCTS(game, net, context.evaluator, search_config, rng)
        while not exhausted():
            episode = search.run_episode(game.initial_state(context.task, context.meta))
            episode_records.append(_episode_record(episode_index, episode))
            episode_index += 1
        failures = search.failures
    else:
        from concurrent.futures import ThreadPoolExecutor

        def one_episode(child_rng):
            search = MCTS(game, net, context.evaluator, search_config, child_rng)
            ep = search.run_episode(game.initial_state(context.task, context.meta))
            return ep, search.failures

        with ThreadPoolExecutor(max_workers=workers) as pool:
            while not exhausted():
                batch = workers
                if budget.max_episodes is not None:
                    batch = min(batch, budget.max_episodes - episode_index)
                child_rngs = [np.random.default_rng(rng.integers(2 ** 63)) for _ in range(batch)]
                for ep, ep_failures in pool.map(one_episode, child_rngs):
                    episode_records.append(_episode_record(episode_index, ep))
                    episode_index += 1
                    failures += ep_failures

    journal = context.evaluator.journal[start_journal:]
    best_pipeline = None
    best_e = 0.0
    curve = []
    for i, (pipe, res) in enumerate(journal):
        if res.status == STATUS_OK and (best_pipeline is None or res.score > best_e):
            best_pipeline = pipe
            best_e = res.score
            curve.append({"evaluations": i + 1, "e": res.score, "best_e": best_e})
    return SynthesisResult(
        best_pipeline=best_pipeline,
        best_e=best_e,
        episodes=episode_records,
        evaluations=len(journal),
        curve=curve,
        executor_failures=failures,
    )


def evaluations_to_target(journal, target: float):
    """1-based index of the first journal entry scoring >= target, or None."""
    for i, (_, res) in enumerate(journal):
        if res.status == STATUS_OK and res.score >= target - 1e-12:
            return i + 1
    return None
