"""Cross-validated scoring of a primitive-name pipeline on a CSV dataset."""

import traceback

import numpy as np
import pandas as pd
from sklearn.model_selection import KFold, StratifiedKFold, cross_val_score
from sklearn.pipeline import Pipeline

from .registry import build, validate_pipeline

STATUS_OK = "ok"
STATUS_INVALID = "invalid_pipeline"
STATUS_ERROR = "error"

N_SPLITS = 5
METRIC_SCORERS = {"f1": "f1_macro", "r2": "r2"}


def load_table(path: str, target_column=None):
    """Feature matrix and target vector from a CSV file.

    The target is `target_column` or else the last column.  Feature columns
    are coerced to numbers; anything unparseable becomes a missing value for
    the pipeline's own steps to deal with.
    """
    frame = pd.read_csv(path)
    if frame.empty:
        raise ValueError(f"{path} has no rows")
    if target_column is None:
        target_column = frame.columns[-1]
    if target_column not in frame.columns:
        raise ValueError(f"target column {target_column!r} not in {path}")
    y = frame[target_column]
    features = frame.drop(columns=[target_column])
    if features.shape[1] == 0:
        raise ValueError(f"{path} has no feature columns")
    X = features.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    return X, y.to_numpy()


def score_pipeline(names, dataset: str, task: str, metric: str, seed=0,
                   target_column=None):
    """(status, score, message) for one evaluate request.

    Structural problems give invalid_pipeline; anything that breaks during
    loading or fitting gives an error result instead of an exception.
    """
    if task not in ("classification", "regression"):
        return STATUS_ERROR, 0.0, f"unknown task {task!r}"
    scorer = METRIC_SCORERS.get(metric)
    if scorer is None:
        return STATUS_ERROR, 0.0, f"unsupported metric {metric!r}"
    problem = validate_pipeline(names, task)
    if problem is not None:
        return STATUS_INVALID, 0.0, problem
    seed = 0 if seed is None else int(seed)
    try:
        X, y = load_table(dataset, target_column)
        steps = [(f"step{i}_{name}", build(name, seed)) for i, name in enumerate(names)]
        if task == "classification":
            cv = StratifiedKFold(n_splits=N_SPLITS, shuffle=True, random_state=seed)
        else:
            cv = KFold(n_splits=N_SPLITS, shuffle=True, random_state=seed)
            y = y.astype(float)
        folds = cross_val_score(Pipeline(steps), X, y, cv=cv, scoring=scorer,
                                error_score="raise")
        score = float(np.clip(np.mean(folds), 0.0, 1.0))
        return STATUS_OK, score, ""
    except Exception as exc:
        summary = traceback.format_exception_only(type(exc), exc)[-1].strip()
        return STATUS_ERROR, 0.0, summary
