"""Recurrent policy/value model over encoded pipeline states, pure numpy.

Architecture: token embedding -> single-layer GRU whose initial hidden state
is a tanh projection of the meta-feature vector -> linear policy head over
the full action vocabulary (masked softmax) and linear value head (logistic).
Double precision throughout so finite-difference gradient checks are
meaningful. Pad tokens (id 0) terminate the processed prefix; encodings pad
only on the right.

Loss over a batch of search-derived examples:

    mean_i[ -sum_a pi_a log p_a + (v - e)^2 ] + alpha * ||theta||^2

with natural log, p clamped below at 1e-12 inside the log, and the
regularizer outside the batch mean. ``gradient`` is the exact analytic
gradient of this expression via backpropagation through time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

PAD_ID = 0
P_CLAMP = 1e-12
INIT_SCALE = 0.08

CHECKPOINT_MAGIC = "pipesynth-net"
CHECKPOINT_VERSION = 1

PARAM_FIELDS = (
    "embedding",
    "Wz", "Uz", "bz",
    "Wr", "Ur", "br",
    "Wh", "Uh", "bh",
    "Mw", "Mb",
    "Pw", "Pb",
    "Vw", "Vb",
)


class CheckpointError(ValueError):
    pass


def field_shapes(vocab_size: int, d: int, hidden: int, m: int, actions: int):
    """Array shape of every parameter field, in serialization order."""
    return {
        "embedding": (vocab_size, d),
        "Wz": (d, hidden), "Uz": (hidden, hidden), "bz": (hidden,),
        "Wr": (d, hidden), "Ur": (hidden, hidden), "br": (hidden,),
        "Wh": (d, hidden), "Uh": (hidden, hidden), "bh": (hidden,),
        "Mw": (m, hidden), "Mb": (hidden,),
        "Pw": (hidden, actions), "Pb": (actions,),
        "Vw": (hidden,), "Vb": (1,),
    }


class ModelParams:
    """Immutable-by-convention parameter bundle; arrays keyed by field name."""

    def __init__(self, vocab_size, d, hidden, m, actions, arrays):
        self.vocab_size = vocab_size
        self.d = d
        self.hidden = hidden
        self.m = m
        self.actions = actions
        shapes = field_shapes(vocab_size, d, hidden, m, actions)
        if set(arrays) != set(PARAM_FIELDS):
            raise ValueError("parameter fields do not match the declared layout")
        for name in PARAM_FIELDS:
            arr = arrays[name]
            if arr.shape != shapes[name]:
                raise ValueError(
                    f"field {name}: shape {arr.shape} != expected {shapes[name]}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"field {name} contains non-finite values")
        self.arrays = {name: np.asarray(arrays[name], dtype=np.float64) for name in PARAM_FIELDS}

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    @classmethod
    def init(cls, vocab_size, d, hidden, m, actions, seed=0) -> "ModelParams":
        """Seeded uniform [-0.08, 0.08] initialization, field order fixed."""
        rng = np.random.default_rng(seed)
        shapes = field_shapes(vocab_size, d, hidden, m, actions)
        arrays = {
            name: rng.uniform(-INIT_SCALE, INIT_SCALE, shapes[name])
            for name in PARAM_FIELDS
        }
        return cls(vocab_size, d, hidden, m, actions, arrays)

    @classmethod
    def zeros(cls, vocab_size, d, hidden, m, actions) -> "ModelParams":
        shapes = field_shapes(vocab_size, d, hidden, m, actions)
        return cls(vocab_size, d, hidden, m, actions,
                   {name: np.zeros(shapes[name]) for name in PARAM_FIELDS})

    def dims(self):
        return (self.vocab_size, self.d, self.hidden, self.m, self.actions)

    def norm_sq(self) -> float:
        return float(sum(np.sum(a * a) for a in self.arrays.values()))

    def copy(self) -> "ModelParams":
        return ModelParams(*self.dims(), {k: v.copy() for k, v in self.arrays.items()})


@dataclass(frozen=True, eq=False)
class PolicyValue:
    p: np.ndarray
    v: float


@dataclass(frozen=True, eq=False)
class TrainingExample:
    """One search step: encoded state, visit-derived policy target pi over
    the action vocabulary, legality mask, and the episode's final score e."""

    tokens: tuple
    meta: tuple
    pi: tuple
    legal_mask: tuple
    e: float


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def masked_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Softmax restricted to mask-true entries; others exactly 0."""
    if not mask.any():
        raise ValueError("legal mask has no true entries")
    out = np.zeros_like(logits)
    sub = logits[mask]
    sub = np.exp(sub - sub.max())
    out[mask] = sub / sub.sum()
    return out


def _forward_batch(params: ModelParams, tokens: np.ndarray, metas: np.ndarray):
    """Run the recurrence over a (B, L) token batch.

    Returns (logits, v, u, h_last, h0, caches); caches hold per-step values
    for backpropagation. Pad steps carry the hidden state through unchanged.
    """
    a = params.arrays
    h = np.tanh(metas @ a["Mw"] + a["Mb"])
    h0 = h
    caches = []
    batch, length = tokens.shape
    for t in range(length):
        ids = tokens[:, t]
        active = ids != PAD_ID
        x = a["embedding"][ids]
        z = _sigmoid(x @ a["Wz"] + h @ a["Uz"] + a["bz"])
        r = _sigmoid(x @ a["Wr"] + h @ a["Ur"] + a["br"])
        hc = np.tanh(x @ a["Wh"] + (r * h) @ a["Uh"] + a["bh"])
        h_new = (1.0 - z) * h + z * hc
        caches.append((ids, active, x, z, r, hc, h))
        h = np.where(active[:, None], h_new, h)
    logits = h @ a["Pw"] + a["Pb"]
    u = h @ a["Vw"] + a["Vb"][0]
    v = _sigmoid(u)
    return logits, v, u, h, h0, caches


def forward(params: ModelParams, encoded, legal_mask) -> PolicyValue:
    """Policy/value for one encoded state under the given legality mask."""
    tokens = np.asarray([encoded.tokens], dtype=np.int64)
    metas = np.asarray([encoded.meta_vector], dtype=np.float64)
    mask = np.asarray(legal_mask, dtype=bool)
    logits, v, _, _, _, _ = _forward_batch(params, tokens, metas)
    return PolicyValue(p=masked_softmax(logits[0], mask), v=float(v[0]))


def _batch_arrays(batch):
    tokens = np.asarray([ex.tokens for ex in batch], dtype=np.int64)
    metas = np.asarray([ex.meta for ex in batch], dtype=np.float64)
    pis = np.asarray([ex.pi for ex in batch], dtype=np.float64)
    masks = np.asarray([ex.legal_mask for ex in batch], dtype=bool)
    es = np.asarray([ex.e for ex in batch], dtype=np.float64)
    if not np.all(pis.sum(axis=1) > 0):
        raise ValueError("training example with all-zero pi")
    return tokens, metas, pis, masks, es


def _batch_policies(logits, masks):
    probs = np.zeros_like(logits)
    for i in range(logits.shape[0]):
        probs[i] = masked_softmax(logits[i], masks[i])
    return probs


def loss(params: ModelParams, batch, alpha: float) -> float:
    if not batch:
        raise ValueError("empty batch")
    tokens, metas, pis, masks, es = _batch_arrays(batch)
    logits, v, _, _, _, _ = _forward_batch(params, tokens, metas)
    probs = _batch_policies(logits, masks)
    ce = -np.sum(pis * np.log(np.maximum(probs, P_CLAMP)), axis=1)
    value_err = (v - es) ** 2
    return float(np.mean(ce + value_err) + alpha * params.norm_sq())


def gradient(params: ModelParams, batch, alpha: float) -> dict:
    """Exact gradient of ``loss`` w.r.t. every parameter field."""
    if not batch:
        raise ValueError("empty batch")
    tokens, metas, pis, masks, es = _batch_arrays(batch)
    a = params.arrays
    logits, v, _, h_last, h0, caches = _forward_batch(params, tokens, metas)
    probs = _batch_policies(logits, masks)
    batch_size = len(batch)

    grads = {name: np.zeros_like(arr) for name, arr in a.items()}

    # Policy head: d(-sum pi log clamp(p))/dlogits through the masked softmax.
    # Entries with p at or below the clamp contribute a zero upstream term.
    g_up = np.where(probs > P_CLAMP, -pis / np.maximum(probs, P_CLAMP), 0.0)
    inner = np.sum(g_up * probs, axis=1, keepdims=True)
    dlogits = probs * (g_up - inner)

    # Value head through the logistic squash.
    du = 2.0 * (v - es) * v * (1.0 - v)

    grads["Pw"] += h_last.T @ dlogits
    grads["Pb"] += dlogits.sum(axis=0)
    grads["Vw"] += h_last.T @ du
    grads["Vb"] += np.array([du.sum()])
    dh = dlogits @ a["Pw"].T + du[:, None] * a["Vw"][None, :]

    for ids, active, x, z, r, hc, h_prev in reversed(caches):
        mask_col = active[:, None]
        dz = dh * (hc - h_prev)
        dhc = dh * z
        da_h = np.where(mask_col, dhc * (1.0 - hc * hc), 0.0)
        drh = da_h @ a["Uh"].T
        dr = drh * h_prev
        da_r = dr * r * (1.0 - r)
        da_z = np.where(mask_col, dz * z * (1.0 - z), 0.0)
        dh_prev = dh * (1.0 - z) + drh * r + da_z @ a["Uz"].T + da_r @ a["Ur"].T
        dh = np.where(mask_col, dh_prev, dh)

        grads["Wz"] += x.T @ da_z
        grads["Uz"] += h_prev.T @ da_z
        grads["bz"] += da_z.sum(axis=0)
        grads["Wr"] += x.T @ da_r
        grads["Ur"] += h_prev.T @ da_r
        grads["br"] += da_r.sum(axis=0)
        grads["Wh"] += x.T @ da_h
        grads["Uh"] += (r * h_prev).T @ da_h
        grads["bh"] += da_h.sum(axis=0)
        dx = da_z @ a["Wz"].T + da_r @ a["Wr"].T + da_h @ a["Wh"].T
        np.add.at(grads["embedding"], ids, dx)

    da0 = dh * (1.0 - h0 * h0)
    grads["Mw"] += metas.T @ da0
    grads["Mb"] += da0.sum(axis=0)

    for name in grads:
        grads[name] /= batch_size
        grads[name] += 2.0 * alpha * a[name]
    return grads


def sgd_step(params: ModelParams, grads: dict, lr: float) -> ModelParams:
    """theta <- theta - lr * grad, functional; rejects non-finite gradients."""
    if lr < 0:
        raise ValueError("learning rate must be >= 0")
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient in field {name}; step rejected")
    arrays = {name: params.arrays[name] - lr * grads[name] for name in PARAM_FIELDS}
    return ModelParams(*params.dims(), arrays)


# ---------------------------------------------------------------------------
# Checkpoints: one JSON header line, then flat little-endian float64 blocks
# in PARAM_FIELDS order.
# ---------------------------------------------------------------------------


def save_checkpoint(
    path: str,
    params: ModelParams,
    vocabulary,
    grammar_fingerprint: str,
    meta_slots,
    iteration: int = 0,
    extra: dict | None = None,
) -> None:
    header = {
        "magic": CHECKPOINT_MAGIC,
        "version": CHECKPOINT_VERSION,
        "vocab_size": params.vocab_size,
        "d": params.d,
        "H": params.hidden,
        "m": params.m,
        "A": params.actions,
        "vocabulary": list(vocabulary),
        "grammar_fingerprint": grammar_fingerprint,
        "meta_slots": list(meta_slots),
        "iteration": iteration,
    }
    if extra:
        header.update(extra)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for name in PARAM_FIELDS:
            fh.write(np.ascontiguousarray(params.arrays[name], dtype="<f8").tobytes())


def load_checkpoint(path: str, expected_fingerprint: str | None = None):
    """Read a checkpoint; returns (params, header).

    Refuses to load when the stored grammar fingerprint differs from
    expected_fingerprint (when given): a mismatched action space would make
    the policy head meaningless.
    """
    with open(path, "rb") as fh:
        header_line = fh.readline()
        blob = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint header in {path}: {exc}") from exc
    if header.get("magic") != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path} is not a model checkpoint")
    if header.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {header.get('version')!r}")
    if expected_fingerprint is not None and header["grammar_fingerprint"] != expected_fingerprint:
        raise CheckpointError(
            f"grammar fingerprint mismatch: checkpoint has "
            f"{header['grammar_fingerprint'][:12]}..., current grammar is "
            f"{expected_fingerprint[:12]}..."
        )
    dims = (header["vocab_size"], header["d"], header["H"], header["m"], header["A"])
    shapes = field_shapes(*dims)
    total = sum(int(np.prod(s)) for s in shapes.values())
    flat = np.frombuffer(blob, dtype="<f8")
    if flat.size != total:
        raise CheckpointError(
            f"checkpoint payload has {flat.size} values, header declares {total}"
        )
    arrays = {}
    offset = 0
    for name in PARAM_FIELDS:
        size = int(np.prod(shapes[name]))
        arrays[name] = flat[offset : offset + size].reshape(shapes[name]).copy()
        offset += size
    return ModelParams(*dims, arrays), header
