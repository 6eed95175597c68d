"""Dataset meta-feature vector fed to the network alongside the pipeline.

Fixed 8-slot layout (order is part of the checkpoint header, so models and
features cannot drift apart):

    0  log(1 + rows)
    1  log(1 + feature columns)          (target excluded)
    2  fraction of missing feature cells
    3  fraction of categorical feature columns
    4  number of target classes          (0 for regression)
    5  class entropy in nats             (0 for regression)
    6  rows / feature columns, capped at 1e3
    7  constant 1
"""

from __future__ import annotations

import math

import numpy as np
import pandas as pd

from .evaluator import fnv1a64, splitmix64

SLOT_NAMES = (
    "log1p_rows",
    "log1p_cols",
    "frac_missing",
    "frac_categorical",
    "n_classes",
    "class_entropy",
    "row_col_ratio",
    "bias",
)

NUM_SLOTS = len(SLOT_NAMES)
RATIO_CAP = 1e3


def class_entropy(counts) -> float:
    """Entropy in nats of an empirical class distribution given counts."""
    total = float(sum(counts))
    if total <= 0:
        return 0.0
    entropy = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            entropy -= p * math.log(p)
    return entropy


def compute_metafeatures(frame: pd.DataFrame, target_column: str, task_kind: str) -> np.ndarray:
    """Meta-features of a columnar dataset with a declared target.

    Args:
        frame: the dataset, one row per example.
        target_column: name of the target column inside frame.
        task_kind: "classification" or "regression".

    Returns:
        float64 vector of length 8 in SLOT_NAMES order.

    Raises:
        ValueError: empty table or missing target column.
    """
    if len(frame) == 0:
        raise ValueError("dataset has zero rows")
    if target_column not in frame.columns:
        raise ValueError(f"target column {target_column!r} not in dataset")
    features = frame.drop(columns=[target_column])
    rows = len(frame)
    cols = features.shape[1]
    if cols > 0:
        frac_missing = float(features.isna().to_numpy().mean())
        categorical = sum(
            1 for dtype in features.dtypes if not np.issubdtype(dtype, np.number)
        )
        frac_categorical = categorical / cols
        ratio = min(rows / cols, RATIO_CAP)
    else:
        frac_missing = 0.0
        frac_categorical = 0.0
        ratio = RATIO_CAP
    if task_kind == "classification":
        counts = frame[target_column].value_counts(dropna=True).to_numpy()
        n_classes = float(len(counts))
        entropy = class_entropy(counts)
    else:
        n_classes = 0.0
        entropy = 0.0
    return np.array(
        [
            math.log(1 + rows),
            math.log(1 + cols),
            frac_missing,
            frac_categorical,
            n_classes,
            entropy,
            ratio,
            1.0,
        ],
        dtype=np.float64,
    )


def load_csv_metafeatures(path: str, target_column: str, task_kind: str) -> np.ndarray:
    return compute_metafeatures(pd.read_csv(path), target_column, task_kind)


def surrogate_metafeatures(seed: int) -> np.ndarray:
    """Synthetic stand-in vector for surrogate datasets.

    Slots 0..6 are hash-to-[0,1) values keyed by "meta:<slot name>" under the
    surrogate seed (same splitmix64-over-FNV-1a scheme as primitive weights);
    slot 7 stays the constant 1.
    """
    vec = np.empty(NUM_SLOTS, dtype=np.float64)
    for i, name in enumerate(SLOT_NAMES[:-1]):
        mixed = splitmix64((seed & ((1 << 64) - 1)) ^ fnv1a64("meta:" + name))
        vec[i] = (mixed % 1_000_000) / 1_000_000
    vec[NUM_SLOTS - 1] = 1.0
    return vec
