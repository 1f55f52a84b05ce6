"""Deterministic numeric core: parameters, losses, dropout, RMSProp, checks.

Everything runs on 64-bit numpy arrays. Desk scale makes the memory cost
irrelevant and keeps finite-difference gradient checks tight.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointError, EmbeddingError

__all__ = [
    "ParamSet",
    "softmax",
    "softmax_xent",
    "dropout",
    "RmsProp",
    "grad_check",
    "uniform_init",
    "EmbeddingTable",
    "load_embeddings",
    "write_embeddings",
    "random_embeddings",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_FORMAT_VERSION = 1


class ParamSet:
    """Named float64 parameter arrays with mirrored gradient buffers."""

    def __init__(self):
        self.values: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def add(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self.values:
            raise ValueError(f"duplicate parameter name {name!r}")
        arr = np.asarray(value, dtype=np.float64)
        self.values[name] = arr
        self.grads[name] = np.zeros_like(arr)
        return arr

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def grad(self, name: str) -> np.ndarray:
        return self.grads[name]

    def names(self) -> list[str]:
        return list(self.values)

    def zero_grads(self):
        for g in self.grads.values():
            g[...] = 0.0

    def scale_grads(self, factor: float):
        for g in self.grads.values():
            g *= factor

    def copy(self) -> "ParamSet":
        out = ParamSet()
        for name, v in self.values.items():
            out.add(name, v.copy())
        return out

    def n_elements(self) -> int:
        return sum(v.size for v in self.values.values())


def uniform_init(rng: np.random.Generator, shape, scale: float = 0.05) -> np.ndarray:
    return rng.uniform(-scale, scale, size=shape)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / e.sum()


def softmax_xent(logits: np.ndarray, gold: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Cross-entropy over a softmax, stabilized by max-subtraction.

    Returns (loss, prob, dlogits) with dlogits = prob - onehot(gold).
    """
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise ValueError("softmax_xent: non-finite logits")
    if not 0 <= gold < logits.shape[0]:
        raise ValueError(f"softmax_xent: gold index {gold} out of range")
    z = logits - np.max(logits)
    logsumexp = math.log(np.exp(z).sum())
    prob = np.exp(z - logsumexp)
    loss = logsumexp - z[gold]
    dlogits = prob.copy()
    dlogits[gold] -= 1.0
    return float(loss), prob, dlogits


def dropout(
    x: np.ndarray,
    ratio: float,
    mode: str,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Inverted dropout. Returns (y, mask); backward is grad * mask.

    Eval mode is the identity (mask of ones). In train mode kept entries are
    scaled by 1/(1-ratio) so expectations match between modes.
    """
    if not 0.0 <= ratio < 1.0:
        raise ValueError(f"dropout ratio must be in [0, 1), got {ratio}")
    if mode not in ("train", "eval"):
        raise ValueError(f"dropout mode must be 'train' or 'eval', got {mode!r}")
    x = np.asarray(x, dtype=np.float64)
    if mode == "eval" or ratio == 0.0:
        mask = np.ones_like(x)
        return x.copy(), mask
    if rng is None:
        raise ValueError("train-mode dropout needs an rng")
    keep = rng.random(x.shape) >= ratio
    mask = keep.astype(np.float64) / (1.0 - ratio)
    return x * mask, mask


class RmsProp:
    """RMSProp: acc <- rho*acc + (1-rho)*g^2; theta <- theta - lr*g/(sqrt(acc)+eps).

    Gradients are zeroed after each step. rho and eps default to the standard
    0.9 / 1e-8 and are recorded by checkpoints, so runs are reproducible.
    """

    def __init__(
        self,
        params: ParamSet,
        learning_rate: float = 0.001,
        decay: float = 0.9,
        epsilon: float = 1e-8,
    ):
        if not 0.0 < decay < 1.0:
            raise ValueError(f"decay must be in (0, 1), got {decay}")
        self.params = params
        self.learning_rate = learning_rate
        self.decay = decay
        self.epsilon = epsilon
        self.acc = {name: np.zeros_like(v) for name, v in params.values.items()}

    def step(self):
        for name, theta in self.params.values.items():
            g = self.params.grads[name]
            if g.shape != theta.shape:
                raise ValueError(f"gradient shape mismatch for {name!r}")
            acc = self.acc[name]
            acc *= self.decay
            acc += (1.0 - self.decay) * g * g
            theta -= self.learning_rate * g / (np.sqrt(acc) + self.epsilon)
        self.params.zero_grads()


def grad_check(
    loss_fn,
    params: ParamSet,
    eps: float = 1e-5,
    max_coords_per_param: int = 16,
) -> float:
    """Compare analytic gradients against central differences.

    ``loss_fn()`` must recompute the forward pass from the current parameter
    values, accumulate analytic gradients into ``params`` and return the
    scalar loss. It must be deterministic (dropout off). Small parameters are
    probed in full; for larger ones the ``max_coords_per_param`` coordinates
    with the largest analytic magnitudes are probed. The magnitude cut
    matters: at eps = 1e-5 the central difference of a float64 loss carries
    about ulp(loss)/2eps ~ 5e-12 of roundoff, so coordinates whose true
    gradient sits below ~1e-7 measure noise, not backward-pass correctness.
    Returns the max of |a-n| / max(|a|, |n|, 1e-8).
    """
    params.zero_grads()
    base = loss_fn()
    if not math.isfinite(base):
        raise ValueError("grad_check: non-finite loss")
    analytic = {name: g.copy() for name, g in params.grads.items()}

    worst = 0.0
    for name, value in params.values.items():
        flat = value.reshape(-1)
        a_flat = analytic[name].reshape(-1)
        n = flat.shape[0]
        if n <= max_coords_per_param:
            coords = np.arange(n)
        else:
            coords = np.argsort(-np.abs(a_flat))[:max_coords_per_param]
        for idx in coords:
            orig = flat[idx]
            flat[idx] = orig + eps
            lp = loss_fn()
            flat[idx] = orig - eps
            lm = loss_fn()
            flat[idx] = orig
            if not (math.isfinite(lp) and math.isfinite(lm)):
                raise ValueError("grad_check: non-finite loss under perturbation")
            numeric = (lp - lm) / (2.0 * eps)
            a = a_flat[idx]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, rel)
    params.zero_grads()
    return worst


# ---------------------------------------------------------------------------
# Word embeddings

UNK_SEED = 1013904223  # fixed stream for the unknown-word vector


class EmbeddingTable:
    """Word -> float64 vector map with a persistent unknown-word vector.

    Lookup tries the exact form, then the lowercased form, then falls back to
    the unk vector.
    """

    def __init__(self, words: list[str], matrix: np.ndarray, unk: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        unk = np.asarray(unk, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(words):
            raise EmbeddingError("embedding matrix shape does not match vocabulary")
        if unk.shape != (matrix.shape[1],):
            raise EmbeddingError("unk vector dimension mismatch")
        self.words = list(words)
        self.matrix = matrix
        self.unk = unk
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise EmbeddingError("duplicate word in embedding vocabulary")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def row_of(self, word: str) -> int:
        """Row index for a form, -1 for unknown (after lowercase fallback)."""
        i = self.index.get(word)
        if i is None:
            i = self.index.get(word.lower())
        return -1 if i is None else i

    def lookup(self, word: str) -> np.ndarray:
        i = self.row_of(word)
        return self.unk.copy() if i < 0 else self.matrix[i].copy()

    def embed(self, forms: list[str]) -> np.ndarray:
        """(T, dim) matrix of looked-up vectors."""
        if not forms:
            return np.zeros((0, self.dim))
        return np.stack([self.lookup(f) for f in forms])

    def rows(self, forms: list[str]) -> np.ndarray:
        """Row indices per form, -1 where the unk vector applies."""
        return np.array([self.row_of(f) for f in forms], dtype=np.int64)


def load_embeddings(text: str) -> EmbeddingTable:
    """Parse the text embedding format: header "vocab_size dim", then one
    "word v1 ... vD" line per word."""
    lines = text.splitlines()
    if not lines:
        raise EmbeddingError("empty embedding file")
    header = lines[0].split()
    if len(header) != 2:
        raise EmbeddingError(f"line 1: malformed header {lines[0]!r} (expected 'vocab_size dim')")
    try:
        vocab_size, dim = int(header[0]), int(header[1])
    except ValueError:
        raise EmbeddingError(f"line 1: malformed header {lines[0]!r}") from None
    if vocab_size < 0 or dim < 1:
        raise EmbeddingError(f"line 1: bad header values {lines[0]!r}")
    words: list[str] = []
    vectors: list[np.ndarray] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != dim + 1:
            raise EmbeddingError(
                f"line {lineno}: expected {dim} values for word {parts[0] if parts else '?'!r}, "
                f"got {len(parts) - 1}"
            )
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError:
            raise EmbeddingError(f"line {lineno}: non-numeric vector component") from None
        words.append(parts[0])
        vectors.append(vec)
    if len(words) != vocab_size:
        raise EmbeddingError(f"header declares {vocab_size} words, file has {len(words)}")
    matrix = np.stack(vectors) if vectors else np.zeros((0, dim))
    unk = np.random.default_rng(UNK_SEED).uniform(-0.1, 0.1, size=dim)
    return EmbeddingTable(words, matrix, unk)


def write_embeddings(table: EmbeddingTable) -> str:
    """Inverse of load_embeddings; float64 values round-trip exactly via %.17g."""
    out = [f"{len(table)} {table.dim}"]
    for i, w in enumerate(table.words):
        out.append(w + " " + " ".join("%.17g" % v for v in table.matrix[i]))
    return "\n".join(out) + "\n"


def random_embeddings(vocab: list[str], dim: int, seed: int) -> EmbeddingTable:
    """Deterministic uniform(-0.1, 0.1) table over a vocabulary."""
    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-0.1, 0.1, size=(len(vocab), dim))
    unk = np.random.default_rng(UNK_SEED).uniform(-0.1, 0.1, size=dim)
    return EmbeddingTable(list(vocab), matrix, unk)


# ---------------------------------------------------------------------------
# Checkpoints
#
# Layout: one JSON header line (sorted keys, no timestamps), then raw
# little-endian float64 payloads in header order: each parameter flattened,
# the embedding matrix, the unk vector. Byte-identical for identical inputs.


def save_checkpoint(
    path: str,
    model_type: str,
    params: ParamSet,
    table: EmbeddingTable,
    config: dict,
) -> None:
    header = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "model_type": model_type,
        "config": config,
        "params": [{"name": n, "shape": list(v.shape)} for n, v in params.values.items()],
        "vocab": table.words,
        "dim": table.dim,
    }
    blobs = [np.ascontiguousarray(v, dtype="<f8").tobytes() for v in params.values.values()]
    blobs.append(np.ascontiguousarray(table.matrix, dtype="<f8").tobytes())
    blobs.append(np.ascontiguousarray(table.unk, dtype="<f8").tobytes())
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8"))
        f.write(b"\n")
        for b in blobs:
            f.write(b)


def load_checkpoint(path: str) -> tuple[str, ParamSet, EmbeddingTable, dict]:
    if not os.path.exists(path):
        raise CheckpointError(f"checkpoint not found: {path}")
    with open(path, "rb") as f:
        header_line = f.readline()
        payload = f.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise CheckpointError(f"unreadable checkpoint header in {path}") from None
    if header.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format_version {header.get('format_version')!r}")
    params = ParamSet()
    offset = 0

    def take(shape) -> np.ndarray:
        nonlocal offset
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(payload):
            raise CheckpointError("checkpoint payload truncated")
        arr = np.frombuffer(payload[offset : offset + nbytes], dtype="<f8").reshape(shape)
        offset += nbytes
        return arr.astype(np.float64)

    for entry in header["params"]:
        params.add(entry["name"], take(tuple(entry["shape"])))
    vocab = header["vocab"]
    dim = header["dim"]
    matrix = take((len(vocab), dim))
    unk = take((dim,))
    if offset != len(payload):
        raise CheckpointError("checkpoint payload has trailing bytes")
    table = EmbeddingTable(vocab, matrix, unk)
    return header["model_type"], params, table, header["config"]
