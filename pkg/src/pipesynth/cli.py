"""Command-line experiment harness.

Commands: synth (budgeted pipeline search), compare-grammar (grammar vs.
edit action space under equal budgets), ablate (network-guided vs. uniform
priors), pretrain / warmstart-eval (checkpoint transfer to a held-out
dataset), grammar-stats (language shape of a grammar file).

Every command that takes --out writes one JSON report validating against the
schema shipped under schemas/. Reports are deterministic for a fixed --seed
in single-worker mode, except for wall-time and timestamp fields; use
strip_volatile to compare runs. Exit codes: 0 success, 2 configuration
errors, 3 executor failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import shlex
import sys
import time
from datetime import datetime, timezone
from importlib import resources

import jsonschema
import numpy as np

from .evaluator import (
    STATUS_ERROR,
    CachedEvaluator,
    ExecutorError,
    ExternalEvaluator,
    SurrogateSpec,
    brute_force_best,
    load_manifest,
)
from .game import EDIT_MODE, GRAMMAR_MODE, Game, TaskSpec
from .grammar import EnumerationLimitError, GrammarError, enumerate_pipelines, load_grammar
from .mcts import SearchConfig
from .metafeatures import load_csv_metafeatures
from .network import CheckpointError
from .trainer import (
    Budget,
    DatasetContext,
    TrainerConfig,
    evaluations_to_target,
    load_network,
    new_network,
    pretrain,
    surrogate_context,
    synthesize,
    train_network,
    zero_network,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EXECUTOR = 3

EXECUTOR_ENV = "PIPESYNTH_EXECUTOR"
VOLATILE_KEYS = frozenset({"timestamp", "wall_time_s"})


class ConfigError(Exception):
    """User-facing configuration problem; maps to exit code 2."""


# ---------------------------------------------------------------------------
# Report plumbing
# ---------------------------------------------------------------------------


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def load_report_schema() -> dict:
    text = resources.files("pipesynth").joinpath("schemas/report.schema.json").read_text("utf-8")
    return json.loads(text)


def build_report(command: str, config: dict, records: list, aggregates: dict) -> dict:
    report = {
        "command": command,
        "config": config,
        "records": records,
        "aggregates": aggregates,
        "timestamp": _now(),
    }
    jsonschema.validate(report, load_report_schema())
    return report


def write_report(path: str, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def write_jsonl(path: str, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, allow_nan=False))
            fh.write("\n")


def strip_volatile(obj):
    """Copy of a report with timestamp/wall-time fields removed, for
    comparing seeded runs byte-for-byte."""
    if isinstance(obj, dict):
        return {k: strip_volatile(v) for k, v in obj.items() if k not in VOLATILE_KEYS}
    if isinstance(obj, list):
        return [strip_volatile(v) for v in obj]
    return obj


def _config_echo(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func" and not k.startswith("_")}


# ---------------------------------------------------------------------------
# Shared argument handling
# ---------------------------------------------------------------------------


def _resolve_grammar_path(path: str) -> str:
    if os.path.exists(path):
        return path
    shipped = resources.files("pipesynth").joinpath("grammars").joinpath(path)
    if shipped.is_file():
        return str(shipped)
    raise ConfigError(f"grammar file not found: {path}")


def _load_grammar(path: str):
    resolved = _resolve_grammar_path(path)
    try:
        return load_grammar(resolved)
    except GrammarError as exc:
        raise ConfigError(f"bad grammar {path}: {exc}") from exc


def _search_config(args) -> SearchConfig:
    return SearchConfig(
        c=args.c,
        simulations=args.simulations,
        temp_moves=args.temp_moves,
        temp_initial=args.temp_initial,
        temp_final=args.temp_final,
        root_dirichlet_alpha=args.root_dirichlet_alpha,
        root_noise_eps=args.root_noise_eps,
        subtree_reuse=args.subtree_reuse,
    )


def _trainer_config(args) -> TrainerConfig:
    return TrainerConfig(
        episodes_per_iteration=args.episodes_per_iteration,
        gradient_steps=args.gradient_steps,
        batch_size=args.batch_size,
        buffer_capacity=args.buffer_capacity,
        lr=args.lr,
        alpha=args.alpha,
        embed_dim=args.embed_dim,
        hidden_dim=args.hidden_dim,
        search=_search_config(args),
    )


def _make_game(grammar, args, mode=None) -> Game:
    return Game(
        grammar,
        mode=mode or args.mode,
        max_steps=args.max_steps,
        max_terminals=args.max_terminals,
        encode_len=args.encode_len,
    )


def _parse_surrogate(text: str) -> int:
    try:
        return int(text.split(":", 1)[1])
    except (IndexError, ValueError):
        raise ConfigError(f"bad surrogate dataset {text!r}; expected surrogate:SEED") from None


def _executor_argv(args) -> list:
    cmd = getattr(args, "executor_cmd", None) or os.environ.get(EXECUTOR_ENV)
    if not cmd:
        raise ConfigError(
            "external evaluation needs --executor-cmd or the "
            f"{EXECUTOR_ENV} environment variable"
        )
    return shlex.split(cmd)


def _build_context(args, grammar) -> DatasetContext:
    """Dataset context from --dataset: surrogate:SEED, or MANIFEST#NAME for
    the external executor."""
    text = args.dataset
    if text.startswith("surrogate:"):
        if args.evaluator != "surrogate":
            raise ConfigError("surrogate:SEED datasets require --evaluator surrogate")
        return surrogate_context(_parse_surrogate(text))
    if args.evaluator != "external":
        raise ConfigError("manifest datasets require --evaluator external")
    if "#" not in text:
        raise ConfigError(f"bad dataset {text!r}; expected surrogate:SEED or MANIFEST#NAME")
    manifest_path, name = text.split("#", 1)
    try:
        entries = {e.name: e for e in load_manifest(manifest_path)}
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest {manifest_path}: {exc}") from exc
    if name not in entries:
        raise ConfigError(f"dataset {name!r} not in manifest {manifest_path}")
    entry = entries[name]
    task = TaskSpec.for_kind(entry.task)
    try:
        meta = load_csv_metafeatures(entry.path, entry.target_column, entry.task)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot compute meta-features for {entry.name}: {exc}") from exc
    client = ExternalEvaluator(
        _executor_argv(args),
        dataset=entry.path,
        task=entry.task,
        metric=task.metric,
        target_column=entry.target_column,
        seed=args.seed,
        timeout=args.executor_timeout,
    )
    missing = client.check_primitives(grammar)
    if missing:
        client.close()
        raise ConfigError(
            "executor does not implement grammar terminals: " + ", ".join(sorted(missing))
        )
    return DatasetContext(name=entry.name, task=task, meta=meta,
                          evaluator=CachedEvaluator(client))


def _close_context(context: DatasetContext) -> None:
    inner = context.evaluator.inner
    if isinstance(inner, ExternalEvaluator):
        inner.close()


def _episode_summary(episodes: list) -> dict:
    nodes = sum(ep["stats"]["nodes_expanded"] for ep in episodes)
    actions = sum(ep["stats"]["total_actions"] for ep in episodes)
    return {
        "episodes": len(episodes),
        "total_actions": actions,
        "mean_branching": actions / nodes if nodes else 0.0,
        "mean_depth": (
            float(np.mean([ep["stats"]["mean_depth"] for ep in episodes])) if episodes else 0.0
        ),
        "max_depth": max((ep["stats"]["max_depth"] for ep in episodes), default=0),
    }


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    grammar = _load_grammar(args.grammar)
    game = _make_game(grammar, args)
    try:
        budget = Budget(
            max_episodes=args.budget_episodes,
            max_evaluations=args.budget_evaluations,
            max_seconds=args.budget_seconds,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    context = _build_context(args, grammar)
    try:
        if args.checkpoint:
            try:
                net, _ = load_network(args.checkpoint, game)
            except (OSError, CheckpointError) as exc:
                raise ConfigError(f"cannot load checkpoint {args.checkpoint}: {exc}") from exc
        else:
            net = new_network(game, _trainer_config(args), seed=args.seed)
        rng = np.random.default_rng(args.seed)
        start = time.perf_counter()
        result = synthesize(game, context, net, budget, _search_config(args), rng,
                            workers=args.workers)
        wall = time.perf_counter() - start
    finally:
        _close_context(context)

    if result.best_pipeline is None:
        print("no valid pipeline found")
        print("e = 0.0")
    else:
        print(" ".join(result.best_pipeline))
        print(f"e = {result.best_e:.6f}")

    journal = context.evaluator.journal
    if (args.evaluator == "external" and journal
            and all(res.status == STATUS_ERROR for _, res in journal)):
        print("executor failed on every request", file=sys.stderr)
        return EXIT_EXECUTOR

    record = {
        "dataset": context.name,
        "mode": game.mode,
        "best_e": result.best_e,
        "best_pipeline": list(result.best_pipeline) if result.best_pipeline else None,
        "evaluations": result.evaluations,
        "evaluations_to_best": result.curve[-1]["evaluations"] if result.curve else None,
        "best_so_far": result.curve,
        "executor_failures": result.executor_failures,
        "wall_time_s": wall,
    }
    record.update(_episode_summary(result.episodes))
    if args.out:
        report = build_report("synth", _config_echo(args), [record],
                              {"best_e": result.best_e})
        write_report(args.out, report)
        log_path = args.provenance_out or args.out + ".provenance.jsonl"
        write_jsonl(log_path, result.episodes)
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare-grammar
# ---------------------------------------------------------------------------


def cmd_compare_grammar(args) -> int:
    grammar = _load_grammar(args.grammar)
    dataset_args = [d.strip() for d in args.datasets.split(",") if d.strip()]
    if not dataset_args:
        raise ConfigError("no datasets given")
    try:
        budget_template = dict(
            max_episodes=args.budget_episodes,
            max_evaluations=args.budget_evaluations,
            max_seconds=args.budget_seconds,
        )
        Budget(**budget_template)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    records = []
    for i, text in enumerate(dataset_args):
        seed = _parse_surrogate(text)
        per_mode = {}
        for mode in (GRAMMAR_MODE, EDIT_MODE):
            game = _make_game(grammar, args, mode=mode)
            context = surrogate_context(seed)
            net = new_network(game, _trainer_config(args), seed=args.seed)
            rng = np.random.default_rng([args.seed, i])
            start = time.perf_counter()
            result = synthesize(game, context, net, Budget(**budget_template),
                                _search_config(args), rng, workers=args.workers)
            per_mode[mode] = {
                "best_e": result.best_e,
                "evaluations": result.evaluations,
                "wall_time_s": time.perf_counter() - start,
                **_episode_summary(result.episodes),
            }
        g, e = per_mode[GRAMMAR_MODE], per_mode[EDIT_MODE]
        records.append({
            "dataset": f"surrogate:{seed}",
            "best_e_grammar": g["best_e"],
            "best_e_edit": e["best_e"],
            "best_e_diff": g["best_e"] - e["best_e"],
            "total_actions_grammar": g["total_actions"],
            "total_actions_edit": e["total_actions"],
            "mean_branching_grammar": g["mean_branching"],
            "mean_branching_edit": e["mean_branching"],
            "mean_depth_grammar": g["mean_depth"],
            "mean_depth_edit": e["mean_depth"],
            "max_depth_grammar": g["max_depth"],
            "max_depth_edit": e["max_depth"],
            "evaluations_grammar": g["evaluations"],
            "evaluations_edit": e["evaluations"],
            "wall_time_s": g["wall_time_s"] + e["wall_time_s"],
        })

    aggregates = {
        "median_total_actions_grammar": float(np.median([r["total_actions_grammar"] for r in records])),
        "median_total_actions_edit": float(np.median([r["total_actions_edit"] for r in records])),
        "median_abs_best_e_diff": float(np.median([abs(r["best_e_diff"]) for r in records])),
        "median_best_e_grammar": float(np.median([r["best_e_grammar"] for r in records])),
        "median_best_e_edit": float(np.median([r["best_e_edit"] for r in records])),
    }
    for r in records:
        line = (f"{r['dataset']}: grammar e={r['best_e_grammar']:.4f} "
                f"actions={r['total_actions_grammar']} | edit e={r['best_e_edit']:.4f} "
                f"actions={r['total_actions_edit']}")
        print(line)
    print(f"median total actions: grammar={aggregates['median_total_actions_grammar']:.0f} "
          f"edit={aggregates['median_total_actions_edit']:.0f}")
    if args.out:
        report = build_report("compare-grammar", _config_echo(args), records, aggregates)
        write_report(args.out, report)
        csv_path = os.path.splitext(args.out)[0] + ".csv"
        fields = [k for k in records[0] if k != "wall_time_s"]
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
            writer.writeheader()
            writer.writerows(records)
    return EXIT_OK


# ---------------------------------------------------------------------------
# ablate
# ---------------------------------------------------------------------------


def _seed_list(text: str) -> list:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"bad seed list {text!r}") from None


def _measure_to_target(game, net, seed, target, budget_evals, search_config, rng, workers=1):
    """Fresh-cache run: evaluations until the journal first reaches target,
    or budget+1 when it never does within the budget."""
    context = surrogate_context(seed)
    synthesize(game, context, net, Budget(max_evaluations=budget_evals),
               search_config, rng, workers=workers)
    hit = evaluations_to_target(context.evaluator.journal, target)
    if hit is None or hit > budget_evals:
        return budget_evals + 1, False
    return hit, True


def cmd_ablate(args) -> int:
    grammar = _load_grammar(args.grammar)
    seeds = _seed_list(args.seeds)
    if not seeds:
        raise ConfigError("no surrogate seeds given")
    if args.reps < 1:
        raise ConfigError("--reps must be >= 1")
    game = _make_game(grammar, args, mode=GRAMMAR_MODE)
    config = _trainer_config(args)
    records = []
    wins = 0
    for seed in seeds:
        spec = SurrogateSpec(seed=seed)
        opt_pipe, e_star = brute_force_best(spec, grammar, args.max_terminals)
        target = args.target_fraction * e_star
        net, _ = train_network(game, [surrogate_context(seed)], args.iterations,
                               config, seed=seed)
        uniform = zero_network(game, config)
        evals_net, evals_uni = [], []
        hits_net = hits_uni = 0
        for rep in range(args.reps):
            n, ok = _measure_to_target(game, net, seed, target, args.budget_evaluations,
                                       _search_config(args),
                                       np.random.default_rng([args.seed, seed, rep, 0]))
            evals_net.append(n)
            hits_net += int(ok)
            n, ok = _measure_to_target(game, uniform, seed, target, args.budget_evaluations,
                                       _search_config(args),
                                       np.random.default_rng([args.seed, seed, rep, 1]))
            evals_uni.append(n)
            hits_uni += int(ok)
        med_net = float(np.median(evals_net))
        med_uni = float(np.median(evals_uni))
        wins += int(med_net <= med_uni)
        records.append({
            "dataset": f"surrogate:{seed}",
            "e_star": e_star,
            "optimum": list(opt_pipe),
            "target": target,
            "median_evals_net": med_net,
            "median_evals_uniform": med_uni,
            "evals_net": evals_net,
            "evals_uniform": evals_uni,
            "target_hits_net": hits_net,
            "target_hits_uniform": hits_uni,
        })
        print(f"surrogate:{seed}: median evals to {args.target_fraction:.2f}*e_star "
              f"net={med_net:.1f} uniform={med_uni:.1f}")
    aggregates = {"seeds": len(seeds), "net_leq_uniform": wins}
    print(f"net median <= uniform median on {wins}/{len(seeds)} seeds")
    if args.out:
        write_report(args.out, build_report("ablate", _config_echo(args), records, aggregates))
    return EXIT_OK


# ---------------------------------------------------------------------------
# pretrain / warmstart-eval
# ---------------------------------------------------------------------------


def cmd_pretrain(args) -> int:
    grammar = _load_grammar(args.grammar)
    game = _make_game(grammar, args)
    seeds = _seed_list(args.datasets)
    if len(seeds) < 2:
        raise ConfigError("pretraining needs at least 2 datasets")
    if args.iterations < 0:
        raise ConfigError("--iterations must be >= 0")
    contexts = [surrogate_context(s) for s in seeds]
    try:
        net, reports = pretrain(game, contexts, args.iterations, _trainer_config(args),
                                seed=args.seed, checkpoint_path=args.checkpoint_out,
                                checkpoint_every=args.checkpoint_every)
    except OSError as exc:
        raise ConfigError(f"cannot write checkpoint {args.checkpoint_out}: {exc}") from exc
    for rep in reports:
        print(f"iteration {rep['iteration']}: mean_e={rep['mean_e']:.4f} "
              f"best_e={rep['best_e']:.4f} loss {rep['loss_before']:.4f}"
              f"->{rep['loss_after']:.4f}")
    print(f"checkpoint written: {args.checkpoint_out}")
    if args.out:
        records = reports if reports else [{"iterations": 0}]
        aggregates = {
            "iterations": args.iterations,
            "final_best_e": reports[-1]["best_e"] if reports else None,
        }
        write_report(args.out, build_report("pretrain", _config_echo(args), records, aggregates))
    if args.log:
        write_jsonl(args.log, reports)
    return EXIT_OK


def cmd_warmstart_eval(args) -> int:
    grammar = _load_grammar(args.grammar)
    game = _make_game(grammar, args)
    seed = _parse_surrogate(args.dataset)
    try:
        warm_net, header = load_network(args.checkpoint, game)
    except (OSError, CheckpointError) as exc:
        raise ConfigError(f"cannot load checkpoint {args.checkpoint}: {exc}") from exc
    if args.reps < 1:
        raise ConfigError("--reps must be >= 1")
    spec = SurrogateSpec(seed=seed)
    opt_pipe, e_star = brute_force_best(spec, grammar, args.max_terminals)
    threshold = args.threshold_fraction * e_star
    config = _trainer_config(args)
    records = []
    warm_evals, cold_evals = [], []
    for rep in range(args.reps):
        w, w_ok = _measure_to_target(game, warm_net, seed, threshold,
                                     args.budget_evaluations, _search_config(args),
                                     np.random.default_rng([args.seed, rep, 0]))
        cold_net = new_network(game, config, seed=(args.seed + 1) * 10_000 + rep)
        c, c_ok = _measure_to_target(game, cold_net, seed, threshold,
                                     args.budget_evaluations, _search_config(args),
                                     np.random.default_rng([args.seed, rep, 1]))
        warm_evals.append(w)
        cold_evals.append(c)
        records.append({"rep": rep, "warm_evals": w, "warm_hit": w_ok,
                        "cold_evals": c, "cold_hit": c_ok})
    med_warm = float(np.median(warm_evals))
    med_cold = float(np.median(cold_evals))
    aggregates = {
        "dataset": f"surrogate:{seed}",
        "e_star": e_star,
        "optimum": list(opt_pipe),
        "threshold": threshold,
        "median_warm": med_warm,
        "median_cold": med_cold,
        "warm_to_cold_ratio": med_warm / med_cold if med_cold else None,
        "checkpoint_iteration": header.get("iteration"),
    }
    print(f"median evaluations to {args.threshold_fraction:.2f}*e_star: "
          f"warm={med_warm:.1f} cold={med_cold:.1f}")
    if args.out:
        write_report(args.out, build_report("warmstart-eval", _config_echo(args),
                                            records, aggregates))
    return EXIT_OK


# ---------------------------------------------------------------------------
# grammar-stats
# ---------------------------------------------------------------------------


def cmd_grammar_stats(args) -> int:
    grammar = _load_grammar(args.grammar)
    if args.max_terminals < 1:
        raise ConfigError("--max-terminals must be >= 1")
    try:
        pipelines = enumerate_pipelines(grammar, args.max_terminals, limit=args.enumeration_limit)
    except EnumerationLimitError as exc:
        raise ConfigError(str(exc)) from exc
    lengths = [len(p) for p in pipelines]
    alternatives = {
        f"<{nt.name}>": len(grammar.rules_for(nt.name)) for nt in grammar.nonterminals
    }
    record = {
        "grammar": args.grammar,
        "max_terminals": args.max_terminals,
        "language_size": len(pipelines),
        "max_length": max(lengths) if lengths else 0,
        "mean_length": float(np.mean(lengths)) if lengths else 0.0,
        "rules": len(grammar.rules),
        "terminals": len(grammar.terminals),
        "nonterminal_alternatives": alternatives,
    }
    print(f"language size (cap {args.max_terminals}): {record['language_size']}")
    print(f"max pipeline length: {record['max_length']}")
    print(f"mean pipeline length: {record['mean_length']:.3f}")
    for name, count in alternatives.items():
        print(f"{name}: {count} alternatives")
    if args.out:
        write_report(args.out, build_report("grammar-stats", _config_echo(args),
                                            [record], {}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_game_flags(p):
    p.add_argument("--mode", choices=[GRAMMAR_MODE, EDIT_MODE], default=GRAMMAR_MODE)
    p.add_argument("--max-steps", type=int, default=20)
    p.add_argument("--max-terminals", type=int, default=8)
    p.add_argument("--encode-len", type=int, default=16)


def _add_search_flags(p):
    p.add_argument("--simulations", type=int, default=64)
    p.add_argument("--c", type=float, default=1.41, help="exploration constant")
    p.add_argument("--temp-moves", type=int, default=2)
    p.add_argument("--temp-initial", type=float, default=1.0)
    p.add_argument("--temp-final", type=float, default=0.25)
    p.add_argument("--root-noise-eps", type=float, default=0.0)
    p.add_argument("--root-dirichlet-alpha", type=float, default=0.3)
    p.add_argument("--subtree-reuse", action="store_true")


def _add_train_flags(p):
    p.add_argument("--episodes-per-iteration", type=int, default=16)
    p.add_argument("--gradient-steps", type=int, default=64)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--buffer-capacity", type=int, default=50_000)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--alpha", type=float, default=1e-4)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--hidden-dim", type=int, default=64)


def _add_common_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="write a JSON report here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pipesynth",
                                     description="Pipeline synthesis by guided tree search")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="search for the best pipeline under a budget")
    p.add_argument("--grammar", required=True)
    p.add_argument("--dataset", required=True,
                   help="surrogate:SEED or MANIFEST.json#NAME")
    p.add_argument("--evaluator", choices=["surrogate", "external"], default="surrogate")
    p.add_argument("--executor-cmd", help="argv line launching the executor process")
    p.add_argument("--executor-timeout", type=float, default=300.0)
    p.add_argument("--checkpoint")
    p.add_argument("--budget-episodes", type=int)
    p.add_argument("--budget-evaluations", type=int)
    p.add_argument("--budget-seconds", type=float)
    p.add_argument("--provenance-out")
    _add_game_flags(p)
    _add_search_flags(p)
    _add_train_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("compare-grammar",
                       help="grammar vs. edit action space, equal budgets")
    p.add_argument("--grammar", required=True)
    p.add_argument("--datasets", required=True, help="comma list of surrogate:SEED")
    p.add_argument("--budget-episodes", type=int)
    p.add_argument("--budget-evaluations", type=int)
    p.add_argument("--budget-seconds", type=float)
    _add_game_flags(p)
    _add_search_flags(p)
    _add_train_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=cmd_compare_grammar)

    p = sub.add_parser("ablate", help="network-guided vs. uniform-prior search")
    p.add_argument("--grammar", required=True)
    p.add_argument("--seeds", required=True, help="comma list of surrogate seeds")
    p.add_argument("--target-fraction", type=float, default=0.99)
    p.add_argument("--budget-evaluations", type=int, required=True)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--iterations", type=int, default=6,
                   help="self-play training iterations for the guided mode")
    _add_game_flags(p)
    _add_search_flags(p)
    _add_train_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("pretrain", help="train a checkpoint across datasets")
    p.add_argument("--grammar", required=True)
    p.add_argument("--datasets", required=True, help="comma list of surrogate seeds")
    p.add_argument("--iterations", type=int, required=True)
    p.add_argument("--checkpoint-out", required=True)
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--log", help="append iteration reports as JSON lines")
    _add_game_flags(p)
    _add_search_flags(p)
    _add_train_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("warmstart-eval",
                       help="checkpoint vs. fresh network on a held-out dataset")
    p.add_argument("--grammar", required=True)
    p.add_argument("--dataset", required=True, help="surrogate:SEED")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--threshold-fraction", type=float, default=0.95)
    p.add_argument("--budget-evaluations", type=int, required=True)
    p.add_argument("--reps", type=int, default=20)
    _add_game_flags(p)
    _add_search_flags(p)
    _add_train_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=cmd_warmstart_eval)

    p = sub.add_parser("grammar-stats", help="language shape of a grammar file")
    p.add_argument("--grammar", required=True)
    p.add_argument("--max-terminals", type=int, default=8)
    p.add_argument("--enumeration-limit", type=int, default=100_000)
    _add_common_flags(p)
    p.set_defaults(func=cmd_grammar_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExecutorError as exc:
        print(f"executor error: {exc}", file=sys.stderr)
        return EXIT_EXECUTOR


if __name__ == "__main__":
    sys.exit(main())
